"""Batch command line interface.

Subcommands: ``extract`` (fast or brute extraction over a batch), ``grid``
(dense objective matrix export for one cycle), ``compare`` (fast vs brute
agreement report), and ``generate`` (synthetic batch writer). Exit codes:
0 success, 1 fatal I/O or configuration error, 2 no valid input records.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .model import InvalidParameterError, InvalidSpecError
from .objective import Domain
from .pipeline import (
    NoValidRecordsError,
    generate,
    ingest,
    export_grid,
    run_batch,
    write_results,
)
from .search import GridConfig, SearchConfig


def _parse_domain(text: str) -> Domain:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("domain needs u1min,u1max,u2min,u2max")
    return Domain(*parts)


def _parse_guess(text: str) -> tuple[float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("guess needs u1,u2")
    return parts[0], parts[1]


def _add_search_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tol", type=float, default=0.001, help="step tolerance (dimensionless)")
    parser.add_argument("--step0", type=float, default=0.1, help="initial step (dimensionless)")
    parser.add_argument(
        "--guess",
        type=_parse_guess,
        action="append",
        default=None,
        metavar="U1,U2",
        help="initial guess, repeatable (default: 1,2 and 1,0.9)",
    )
    parser.add_argument("--random-guesses", type=int, default=0, metavar="M")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument(
        "--domain",
        type=_parse_domain,
        default=Domain(),
        metavar="U1MIN,U1MAX,U2MIN,U2MAX",
    )


def _search_config(args: argparse.Namespace) -> SearchConfig:
    guesses = tuple(args.guess) if args.guess else ((1.0, 2.0), (1.0, 0.9))
    return SearchConfig(
        domain=args.domain,
        delta0=args.step0,
        delta_tol=args.tol,
        guesses=guesses,
        random_guesses=args.random_guesses,
        seed=args.seed,
    )


def _grid_config(args: argparse.Namespace) -> GridConfig:
    return GridConfig(domain=args.domain, mesh=args.mesh, mesh_unit=args.mesh_unit)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ifreq", description="Intrinsic frequency extraction from pressure cycles"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    extract = sub.add_parser("extract", help="extract frequencies from a batch")
    extract.add_argument("--input", required=True)
    extract.add_argument("--format", choices=["auto", "csv", "jsonl"], default="auto")
    extract.add_argument("--mode", choices=["fast", "brute"], default="fast")
    extract.add_argument("--mesh", type=float, default=0.02 * math.pi)
    extract.add_argument("--mesh-unit", choices=["rad/s", "dimensionless"], default="rad/s")
    extract.add_argument("--out", default="-", help="output path, - for stdout")
    _add_search_flags(extract)

    grid = sub.add_parser("grid", help="export the dense objective grid for one cycle")
    grid.add_argument("--input", required=True)
    grid.add_argument("--format", choices=["auto", "csv", "jsonl"], default="auto")
    grid.add_argument("--mesh", type=float, default=0.02 * math.pi)
    grid.add_argument("--mesh-unit", choices=["rad/s", "dimensionless"], default="rad/s")
    grid.add_argument("--domain", type=_parse_domain, default=Domain())
    grid.add_argument("--out", required=True)

    compare = sub.add_parser("compare", help="fast vs brute agreement report")
    compare.add_argument("--input", required=True)
    compare.add_argument("--format", choices=["auto", "csv", "jsonl"], default="auto")
    compare.add_argument("--mesh", type=float, default=0.02 * math.pi)
    compare.add_argument("--mesh-unit", choices=["rad/s", "dimensionless"], default="rad/s")
    compare.add_argument("--threshold", type=float, default=0.0475)
    compare.add_argument("--out", default="-")
    _add_search_flags(compare)

    gen = sub.add_parser("generate", help="write a synthetic batch with ground truth")
    gen.add_argument("--spec", required=True, help="generator description (JSON file)")
    gen.add_argument("--count", type=int, default=10)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    return parser


def _ingest_or_exit(args: argparse.Namespace) -> tuple:
    fmt = None if args.format == "auto" else args.format
    ingested = ingest(args.input, fmt)
    for rejection in ingested.rejected:
        print(f"rejected {rejection.source}: {rejection.reason}", file=sys.stderr)
    return ingested


def _emit(batch, out: str) -> None:
    if out == "-":
        for record in batch.results:
            print(json.dumps({"record": "result", **record.to_json()}))
        print(json.dumps({"record": "summary", **batch.summary}))
    else:
        write_results(batch, out)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "extract":
            ingested = _ingest_or_exit(args)
            if not ingested.records:
                print("no valid records", file=sys.stderr)
                return 2
            batch = run_batch(
                list(ingested.records),
                mode=args.mode,
                search_config=_search_config(args),
                grid_config=_grid_config(args),
                input_checksum=ingested.checksum,
            )
            _emit(batch, args.out)
            print(
                f"{batch.summary['results']} results, {batch.summary['failures']} failures",
                file=sys.stderr,
            )
            return 0

        if args.command == "grid":
            ingested = _ingest_or_exit(args)
            if not ingested.records:
                print("no valid records", file=sys.stderr)
                return 2
            record = ingested.records[0]
            if len(ingested.records) > 1:
                print(f"multiple cycles in input; using {record.id}", file=sys.stderr)
            outcome = export_grid(
                record.cycle,
                GridConfig(domain=args.domain, mesh=args.mesh, mesh_unit=args.mesh_unit),
                args.out,
            )
            u1, u2 = outcome.dimensionless(record.cycle)
            print(f"minimizer u1={u1:.6g} u2={u2:.6g} -> {args.out}", file=sys.stderr)
            return 0

        if args.command == "compare":
            ingested = _ingest_or_exit(args)
            if not ingested.records:
                print("no valid records", file=sys.stderr)
                return 2
            batch = run_batch(
                list(ingested.records),
                mode="compare",
                search_config=_search_config(args),
                grid_config=GridConfig(
                    domain=args.domain, mesh=args.mesh, mesh_unit=args.mesh_unit
                ),
                threshold=args.threshold,
                input_checksum=ingested.checksum,
            )
            _emit(batch, args.out)
            verdict = "PASS" if batch.summary["passed"] else "FAIL"
            print(
                f"{verdict}: max mean |d omega| = {batch.summary['max_mean_abs_domega']:.4g} "
                f"rad/s (threshold {args.threshold}), "
                f"median wall ratio {batch.summary['median_wall_ratio']:.1f}x",
                file=sys.stderr,
            )
            return 0

        if args.command == "generate":
            batch_path, truth_path = generate(
                Path(args.spec), args.count, args.seed, args.out
            )
            print(f"wrote {batch_path} and {truth_path}", file=sys.stderr)
            return 0
    except NoValidRecordsError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except (OSError, ValueError, InvalidParameterError, InvalidSpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
