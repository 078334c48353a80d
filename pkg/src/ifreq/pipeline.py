"""Batch I/O: cycle ingestion, batch extraction, grid export, synthetic data generation.

Input formats
-------------
* Single-cycle CSV: two numeric columns ``time_s, pressure`` (optional header
  row), uniformly sampled, with a JSON sidecar next to it (same stem, ``.json``
  extension) carrying at least ``{"t0": ..., "t": ...}`` and optionally
  ``id``, ``subject``, ``interval``.
* Batch JSONL: one JSON object per line with keys ``id``, ``dt``, ``t0``,
  ``samples`` and optionally ``t``, ``subject``, ``interval``.

Output is line-delimited JSON: one ``{"record": "result", ...}`` object per
cycle followed by a ``{"record": "summary", ...}`` object (or a single
``{"record": "comparison", ...}`` object in compare mode). Grids are written
as a plain text matrix with a commented header carrying the axes, minimizer,
and lattice node locations.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import statistics
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import (
    FreqPair,
    HarmonicSeriesSpec,
    InvalidParameterError,
    InvalidSpecError,
    ModelParams,
    SampledCycle,
    synthesize_appendix_cycle,
    synthesize_cycle,
)
from .objective import (
    DEFAULT_DOMAIN,
    DegenerateFrequencyError,
    Domain,
    enumerate_nodes,
    node_distance,
    reduce_constraints,
    valley_skew,
)
from .search import (
    ComparisonReport,
    GridConfig,
    SearchConfig,
    SearchOutcome,
    UnconvergedSearchError,
    brute_force_if,
    compare_algorithms,
    fast_if,
)

_TIMESTAMP_JITTER_LIMIT = 1e-6


class NoValidRecordsError(ValueError):
    """A batch operation was asked to run with zero valid records."""


@dataclass(frozen=True)
class CycleRecord:
    """One ingested cycle plus its source metadata."""

    id: str
    cycle: SampledCycle
    sampling_rate: float
    subject: str | None = None
    interval: str | None = None
    t0_rounding: float = 0.0  # seconds the supplied notch time moved when snapping


@dataclass(frozen=True)
class Rejection:
    """Why one input record was dropped; the batch continues without it."""

    source: str
    reason: str


@dataclass(frozen=True)
class IngestResult:
    records: tuple[CycleRecord, ...]
    rejected: tuple[Rejection, ...]
    checksum: str


@dataclass(frozen=True)
class ResultRecord:
    """Flat, serialization-friendly view of one extraction outcome."""

    id: str
    algorithm: str
    omega1: float
    omega2: float
    omega1_bpm: float
    omega2_bpm: float
    u1: float
    u2: float
    a1: float
    b1: float
    a2: float
    b2: float
    pbar: float
    objective_value: float
    normalized_objective_value: float
    converged: bool
    evals: int
    wall_ms: float
    lobe: str

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "ResultRecord":
        fields = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in fields})


@dataclass(frozen=True)
class BatchResult:
    results: tuple[ResultRecord, ...]
    failures: tuple[Rejection, ...]
    summary: dict
    report: ComparisonReport | None = None


def result_record(record_id: str, outcome: SearchOutcome, cycle: SampledCycle) -> ResultRecord:
    u1, u2 = outcome.dimensionless(cycle)
    bpm1, bpm2 = outcome.best.bpm()
    params = outcome.params
    return ResultRecord(
        id=record_id,
        algorithm=outcome.algorithm,
        omega1=outcome.best.omega1,
        omega2=outcome.best.omega2,
        omega1_bpm=bpm1,
        omega2_bpm=bpm2,
        u1=u1,
        u2=u2,
        a1=params.a1,
        b1=params.b1,
        a2=params.a2,
        b2=params.b2,
        pbar=params.pbar,
        objective_value=outcome.objective_value,
        normalized_objective_value=outcome.normalized_objective_value,
        converged=outcome.converged,
        evals=outcome.evals,
        wall_ms=outcome.wall_ms,
        lobe=outcome.lobe,
    )


def _snap_record(
    source: str,
    samples: np.ndarray,
    dt: float,
    t0: float,
    record_id: str,
    subject: str | None,
    interval: str | None,
) -> CycleRecord:
    """Build a CycleRecord, snapping t0 to the nearest sample. Raises ValueError."""
    total = samples.size
    n = int(round(t0 / dt)) + 1
    m = total - n
    if n < 3 or m < 3:
        raise ValueError(f"segments too short after snapping: n={n}, m={m} (need >= 3)")
    snapped_t0 = (n - 1) * dt
    cycle = SampledCycle(samples=samples, dt=dt, n=n, m=m)
    return CycleRecord(
        id=record_id,
        cycle=cycle,
        sampling_rate=1.0 / dt,
        subject=subject,
        interval=interval,
        t0_rounding=snapped_t0 - t0,
    )


def _ingest_csv(path: Path) -> tuple[list[CycleRecord], list[Rejection]]:
    sidecar = path.with_suffix(".json")
    if not sidecar.exists():
        return [], [Rejection(str(path), f"missing sidecar {sidecar.name}")]
    try:
        meta = json.loads(sidecar.read_text())
    except json.JSONDecodeError as exc:
        return [], [Rejection(str(path), f"unreadable sidecar: {exc}")]
    if "t0" not in meta:
        return [], [Rejection(str(path), "sidecar lacks t0")]

    times: list[float] = []
    pressures: list[float] = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            return [], [Rejection(str(path), f"line {lineno}: expected 2 columns")]
        try:
            t_val, p_val = float(parts[0]), float(parts[1])
        except ValueError:
            if lineno == 1:
                continue  # header row
            return [], [Rejection(str(path), f"line {lineno}: non-numeric value")]
        if not (math.isfinite(t_val) and math.isfinite(p_val)):
            return [], [Rejection(str(path), f"line {lineno}: non-finite value")]
        times.append(t_val)
        pressures.append(p_val)
    if len(times) < 6:
        return [], [Rejection(str(path), f"only {len(times)} samples")]

    t = np.asarray(times)
    diffs = np.diff(t)
    dt = float(np.median(diffs))
    if dt <= 0.0:
        return [], [Rejection(str(path), "timestamps are not increasing")]
    if float(np.max(np.abs(diffs - dt))) / dt > _TIMESTAMP_JITTER_LIMIT:
        return [], [Rejection(str(path), "non-uniform timestamps")]

    t0 = float(meta["t0"]) - float(t[0])
    duration = float(t[-1] - t[0])
    if "t" in meta:
        declared = float(meta["t"]) - float(t[0])
        if abs(declared - duration) > 0.5 * dt:
            return [], [
                Rejection(str(path), f"declared period {declared:.6g} != sampled span {duration:.6g}")
            ]
    record_id = str(meta.get("id", path.stem))
    try:
        record = _snap_record(
            str(path),
            np.asarray(pressures),
            dt,
            t0,
            record_id,
            meta.get("subject"),
            meta.get("interval"),
        )
    except (ValueError, InvalidParameterError) as exc:
        return [], [Rejection(str(path), str(exc))]
    return [record], []


def _ingest_jsonl(path: Path) -> tuple[list[CycleRecord], list[Rejection]]:
    records: list[CycleRecord] = []
    rejected: list[Rejection] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        source = f"{path}:{lineno}"
        line = raw.strip()
        if not line:
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            rejected.append(Rejection(source, f"bad JSON: {exc}"))
            continue
        missing = [key for key in ("dt", "t0", "samples") if key not in data]
        if missing:
            rejected.append(Rejection(source, f"missing keys: {', '.join(missing)}"))
            continue
        record_id = str(data.get("id", f"{path.stem}:{lineno}"))
        if record_id in seen:
            rejected.append(Rejection(source, f"duplicate id {record_id!r}"))
            continue
        try:
            samples = np.asarray(data["samples"], dtype=float)
            if samples.ndim != 1 or not np.all(np.isfinite(samples)):
                raise ValueError("samples must be a flat list of finite numbers")
            record = _snap_record(
                source,
                samples,
                float(data["dt"]),
                float(data["t0"]),
                record_id,
                data.get("subject"),
                data.get("interval"),
            )
        except (ValueError, TypeError, InvalidParameterError) as exc:
            rejected.append(Rejection(source, str(exc)))
            continue
        seen.add(record_id)
        records.append(record)
    return records, rejected


def ingest(path: str | Path, fmt: str | None = None) -> IngestResult:
    """Read cycles from a CSV (plus sidecar) or JSONL batch file.

    Bad rows or lines reject only the record they belong to; everything else
    is kept. The returned checksum is the SHA-256 of the input bytes.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if fmt == "csv":
        records, rejected = _ingest_csv(path)
    elif fmt == "jsonl":
        records, rejected = _ingest_jsonl(path)
    else:
        raise ValueError(f"unknown format {fmt!r} (expected 'csv' or 'jsonl')")
    return IngestResult(
        records=tuple(records),
        rejected=tuple(rejected),
        checksum=hashlib.sha256(path.read_bytes()).hexdigest(),
    )


def run_batch(
    records: list[CycleRecord] | tuple[CycleRecord, ...],
    mode: str = "fast",
    search_config: SearchConfig | None = None,
    grid_config: GridConfig | None = None,
    threshold: float = 0.0475,
    input_checksum: str | None = None,
) -> BatchResult:
    """Run one extraction mode over a batch; per-record failures never abort the batch."""
    if mode not in ("fast", "brute", "compare"):
        raise ValueError(f"mode must be fast, brute, or compare, got {mode!r}")
    if not records:
        raise NoValidRecordsError("no valid records to process")

    if mode == "compare":
        report = compare_algorithms(
            [record.cycle for record in records],
            grid=grid_config,
            config=search_config,
            threshold=threshold,
            input_checksum=input_checksum,
        )
        results = []
        for record, comparison in zip(records, report.per_cycle):
            results.append(result_record(record.id, comparison.fast, record.cycle))
            results.append(result_record(record.id, comparison.brute, record.cycle))
        summary = {
            "mode": "compare",
            "cycles": len(records),
            "mean_abs_domega1": report.mean_abs_domega[0],
            "mean_abs_domega2": report.mean_abs_domega[1],
            "max_mean_abs_domega": report.max_mean_abs_domega,
            "median_wall_ratio": report.median_wall_ratio,
            "threshold": report.threshold,
            "passed": report.passed,
        }
        return BatchResult(tuple(results), (), summary, report=report)

    results: list[ResultRecord] = []
    failures: list[Rejection] = []
    for record in records:
        try:
            if mode == "fast":
                outcome = fast_if(record.cycle, search_config)
            else:
                outcome, _ = brute_force_if(record.cycle, grid_config)
        except UnconvergedSearchError as exc:
            results.append(result_record(record.id, exc.outcome, record.cycle))
            failures.append(Rejection(record.id, "no start converged"))
            continue
        except Exception as exc:  # isolate per-record failures
            failures.append(Rejection(record.id, f"{type(exc).__name__}: {exc}"))
            continue
        results.append(result_record(record.id, outcome, record.cycle))
    converged = sum(1 for r in results if r.converged)
    summary = {
        "mode": mode,
        "cycles": len(records),
        "results": len(results),
        "converged": converged,
        "failures": len(failures),
        "mean_wall_ms": statistics.fmean([r.wall_ms for r in results]) if results else 0.0,
    }
    return BatchResult(tuple(results), tuple(failures), summary)


def write_results(batch: BatchResult, path: str | Path) -> None:
    """Write results as line-delimited JSON with a trailing summary object."""
    path = Path(path)
    with path.open("w") as handle:
        for record in batch.results:
            handle.write(json.dumps({"record": "result", **record.to_json()}) + "\n")
        if batch.report is not None:
            handle.write(
                json.dumps(
                    {
                        "record": "comparison",
                        **{k: v for k, v in batch.summary.items() if k != "mode"},
                        "input_checksum": batch.report.input_checksum,
                    }
                )
                + "\n"
            )
        handle.write(
            json.dumps(
                {
                    "record": "summary",
                    **batch.summary,
                    "rejected": [dataclasses.asdict(f) for f in batch.failures],
                }
            )
            + "\n"
        )


def read_results(path: str | Path) -> list[ResultRecord]:
    """Read back the result records from a line-delimited output file."""
    out = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        data = json.loads(line)
        if data.get("record") == "result":
            out.append(ResultRecord.from_json(data))
    return out


def export_grid(
    cycle: SampledCycle, grid_config: GridConfig | None = None, path: str | Path = "grid.txt"
) -> SearchOutcome:
    """Scan the objective over a grid and write the dense matrix for plotting.

    The text file has commented header lines with both axes (dimensionless and
    rad/s), the minimizer, and the lattice nodes inside the scan window,
    followed by the matrix itself, one u1 row per line, u2 across the columns.
    Returns the grid-argmin outcome.
    """
    grid_config = grid_config or GridConfig()
    outcome, objective_grid = brute_force_if(cycle, grid_config)
    u1, u2 = objective_grid.u1, objective_grid.u2
    if u1.size > 1 and u2.size > 1:
        window = Domain(float(u1[0]), float(u1[-1]), float(u2[0]), float(u2[-1]))
        nodes = enumerate_nodes(cycle.T0, cycle.T, window)
    else:
        nodes = []
    best_u1, best_u2 = outcome.dimensionless(cycle)
    lines = [
        "# objective grid: rows are u1 values, columns are u2 values",
        "# u1: " + " ".join(f"{v:.17g}" for v in u1),
        "# u2: " + " ".join(f"{v:.17g}" for v in u2),
        "# omega1_rad_s: " + " ".join(f"{v:.17g}" for v in objective_grid.omega1),
        "# omega2_rad_s: " + " ".join(f"{v:.17g}" for v in objective_grid.omega2),
        f"# minimizer: u1={best_u1:.17g} u2={best_u2:.17g} "
        f"objective={outcome.objective_value:.17g}",
        "# nodes: " + " ".join(f"({node.u1},{node.u2})" for node in nodes),
        f"# node_tube_cells: {int(objective_grid.node_tube.sum())}",
    ]
    for i in range(u1.size):
        lines.append(" ".join(f"{v:.17g}" for v in objective_grid.values[i]))
    Path(path).write_text("\n".join(lines) + "\n")
    return outcome


def _unit_envelopes(
    rng: np.random.Generator,
    freqs: FreqPair,
    T0: float,
    T: float,
    min_segment_amplitude: float,
) -> tuple[float, float, float, float] | None:
    """One random envelope direction, rescaled to max coefficient 1, or None if too lopsided."""
    phase = rng.uniform(0.0, 2.0 * math.pi)
    b1, b2 = math.cos(phase), math.sin(phase)
    try:
        a1, a2 = reduce_constraints(freqs, b1, b2, T0, T)
    except DegenerateFrequencyError:
        return None
    scale = max(abs(a1), abs(b1), abs(a2), abs(b2))
    if scale == 0.0:
        return None
    a1, b1, a2, b2 = a1 / scale, b1 / scale, a2 / scale, b2 / scale
    if min(math.hypot(a1, b1), math.hypot(a2, b2)) < min_segment_amplitude:
        return None
    return a1, b1, a2, b2


def sample_params(
    rng: np.random.Generator,
    T0: float,
    T: float,
    domain: Domain = DEFAULT_DOMAIN,
    min_node_distance: float = 0.05,
    pbar_range: tuple[float, float] = (80.0, 120.0),
    amplitude_range: tuple[float, float] = (15.0, 30.0),
    min_segment_amplitude: float = 0.3,
    phase_candidates: int = 16,
    dt: float = 0.002,
) -> ModelParams:
    """Draw a constraint-satisfying parameter set with frequencies inside ``domain``.

    Frequencies are uniform over the domain (redrawn within
    ``min_node_distance`` of a lattice node). The envelope direction is chosen
    among ``phase_candidates`` random draws as the one whose objective
    landscape is least skewed against the coordinate axes at the true
    frequencies (see :func:`ifreq.objective.valley_skew`); directions that
    leave either segment's oscillation below ``min_segment_amplitude`` of the
    peak coefficient are discarded. Set ``phase_candidates=1`` for a plain
    random direction. ``dt`` only controls the sampling grid of the skew
    probe.

    The skew selection matters for ground-truth validation: coordinate search
    stalls above its step tolerance in strongly diagonal valleys, so
    validation suites built from the least-skewed member of each envelope
    family exercise recovery rather than the search's known geometric limit.
    """
    if phase_candidates < 1:
        raise ValueError("phase_candidates must be >= 1")
    while True:
        u1 = rng.uniform(domain.u1_min, domain.u1_max)
        u2 = rng.uniform(domain.u2_min, domain.u2_max)
        if node_distance(u1, u2) < min_node_distance:
            continue
        freqs = FreqPair.from_dimensionless(u1, u2, T0, T)
        best: tuple[float, tuple[float, float, float, float]] | None = None
        for _ in range(phase_candidates):
            envelopes = _unit_envelopes(rng, freqs, T0, T, min_segment_amplitude)
            if envelopes is None:
                continue
            if phase_candidates == 1:
                best = (0.0, envelopes)
                break
            probe = ModelParams(
                a1=envelopes[0],
                b1=envelopes[1],
                a2=envelopes[2],
                b2=envelopes[3],
                pbar=0.0,
                omega1=freqs.omega1,
                omega2=freqs.omega2,
            )
            cycle = synthesize_cycle(probe, T0, T, dt)
            skew = valley_skew(freqs, cycle)
            if best is None or skew < best[0]:
                best = (skew, envelopes)
        if best is None:
            continue
        a1, b1, a2, b2 = best[1]
        amplitude = rng.uniform(*amplitude_range)
        pbar = rng.uniform(*pbar_range)
        return ModelParams(
            a1=a1 * amplitude,
            b1=b1 * amplitude,
            a2=a2 * amplitude,
            b2=b2 * amplitude,
            pbar=pbar,
            omega1=freqs.omega1,
            omega2=freqs.omega2,
        )


_GENERATOR_DEFAULTS = {
    "kind": "model",
    "t0": 0.36,
    "t": 1.0,
    "dt": 0.002,
    "pbar": [80.0, 120.0],
    "amplitude": [15.0, 30.0],
    "u1_range": [0.55, 1.45],
    "u2_range": [0.55, 2.95],
    "min_node_distance": 0.05,
    "min_segment_amplitude": 0.3,
    "phase_candidates": 16,
    "noise_sigma": 0.0,
    "relative_noise": 0.0,
    "harmonics": [1.0, 0.2, 0.05],
    "damping_ratio": 0.0,
}


def _as_range(value) -> tuple[float, float]:
    if isinstance(value, (int, float)):
        return float(value), float(value)
    lo, hi = float(value[0]), float(value[1])
    if hi < lo:
        raise InvalidSpecError(f"range [{lo}, {hi}] is reversed")
    return lo, hi


def generate(
    spec: dict | str | Path,
    count: int,
    seed: int | None,
    path: str | Path,
) -> tuple[Path, Path]:
    """Write a deterministic synthetic batch (JSONL) plus a ground-truth sidecar.

    ``spec`` is a generator description (dict, or path to a JSON file); unknown
    keys are rejected. Returns (batch_path, truth_path).
    """
    if isinstance(spec, (str, Path)):
        spec = json.loads(Path(spec).read_text())
    if count < 1:
        raise InvalidSpecError(f"count must be >= 1, got {count}")
    unknown = set(spec) - set(_GENERATOR_DEFAULTS)
    if unknown:
        raise InvalidSpecError(f"unknown generator keys: {sorted(unknown)}")
    merged = {**_GENERATOR_DEFAULTS, **spec}
    kind = merged["kind"]
    if kind not in ("model", "appendix"):
        raise InvalidSpecError(f"kind must be 'model' or 'appendix', got {kind!r}")
    t0, t_period, dt = float(merged["t0"]), float(merged["t"]), float(merged["dt"])
    u1_range = _as_range(merged["u1_range"])
    u2_range = _as_range(merged["u2_range"])
    domain = Domain(u1_range[0], u1_range[1], u2_range[0], u2_range[1])
    noise_sigma = float(merged["noise_sigma"])
    relative_noise = float(merged["relative_noise"])
    if noise_sigma < 0.0 or relative_noise < 0.0:
        raise InvalidSpecError("noise settings must be >= 0")

    rng = np.random.default_rng(seed)
    path = Path(path)
    truth_path = path.with_name(path.name + ".truth.json")
    lines = []
    truths = []
    for index in range(count):
        record_id = f"cyc{index:05d}"
        if kind == "model":
            params = sample_params(
                rng,
                t0,
                t_period,
                domain=domain,
                min_node_distance=float(merged["min_node_distance"]),
                pbar_range=_as_range(merged["pbar"]),
                amplitude_range=_as_range(merged["amplitude"]),
                min_segment_amplitude=float(merged["min_segment_amplitude"]),
                phase_candidates=int(merged["phase_candidates"]),
                dt=dt,
            )
            clean = synthesize_cycle(params, t0, t_period, dt, noise_sigma=0.0)
            truth = {
                "id": record_id,
                "omega1": params.omega1,
                "omega2": params.omega2,
                "u1": params.freqs.dimensionless(clean.T0, clean.T)[0],
                "u2": params.freqs.dimensionless(clean.T0, clean.T)[1],
                "params": dataclasses.asdict(params),
            }
        else:
            series, freqs = _sample_appendix_spec(rng, merged, domain, t0, t_period)
            clean = synthesize_appendix_cycle(series, t0, t_period, dt)
            truth = {
                "id": record_id,
                "omega1": freqs.omega1,
                "omega2": freqs.omega2,
                "u1": freqs.dimensionless(clean.T0, clean.T)[0],
                "u2": freqs.dimensionless(clean.T0, clean.T)[1],
                "damping_ratio": series.damping_ratio,
            }
        sigma = noise_sigma
        if relative_noise > 0.0:
            sigma += relative_noise * float(np.ptp(clean.samples))
        samples = clean.samples
        if sigma > 0.0:
            samples = samples + rng.normal(0.0, sigma, size=samples.size)
        truth["noise_sigma"] = sigma
        lines.append(
            json.dumps(
                {
                    "id": record_id,
                    "dt": clean.dt,
                    "t0": clean.T0,
                    "t": clean.T,
                    "samples": samples.tolist(),
                }
            )
        )
        truths.append(truth)
    path.write_text("\n".join(lines) + "\n")
    truth_path.write_text(
        json.dumps({"seed": seed, "kind": kind, "count": count, "cycles": truths}, indent=1)
        + "\n"
    )
    return path, truth_path


def _sample_appendix_spec(
    rng: np.random.Generator,
    merged: dict,
    domain: Domain,
    t0: float,
    t_period: float,
) -> tuple[HarmonicSeriesSpec, FreqPair]:
    """Multi-harmonic series with dominant frequencies drawn from the domain."""
    harmonics = [float(h) for h in merged["harmonics"]]
    if not harmonics or harmonics[0] <= 0.0:
        raise InvalidSpecError("harmonics must start with a positive fundamental weight")
    while True:
        u1 = rng.uniform(domain.u1_min, domain.u1_max)
        u2 = rng.uniform(domain.u2_min, domain.u2_max)
        if node_distance(u1, u2) >= float(merged["min_node_distance"]):
            break
    freqs = FreqPair.from_dimensionless(u1, u2, t0, t_period)
    amplitude = rng.uniform(*_as_range(merged["amplitude"]))
    pbar = rng.uniform(*_as_range(merged["pbar"]))

    def terms(base: float) -> tuple[tuple[float, float, float], ...]:
        out = []
        for k, weight in enumerate(harmonics, start=1):
            phase = rng.uniform(0.0, 2.0 * math.pi)
            mag = amplitude * weight
            out.append((mag * math.sin(phase), mag * math.cos(phase), k * base))
        return tuple(out)

    series = HarmonicSeriesSpec(
        pbar=pbar,
        damping_ratio=float(merged["damping_ratio"]),
        systolic_terms=terms(freqs.omega1),
        diastolic_terms=terms(freqs.omega2),
    )
    return series, freqs
