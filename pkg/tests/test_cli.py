"""Command line interface: subcommands, flags, outputs, exit codes."""

from __future__ import annotations

import json

import pytest

from ifreq.cli import main


@pytest.fixture
def batch_file(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"kind": "model", "t0": 0.36, "t": 1.0, "dt": 0.002}))
    out = tmp_path / "batch.jsonl"
    code = main(["generate", "--spec", str(spec), "--count", "3", "--seed", "9", "--out", str(out)])
    assert code == 0
    return out


def read_records(path):
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


class TestGenerateCommand:
    def test_writes_batch_and_truth(self, tmp_path, batch_file):
        assert batch_file.exists()
        truth = batch_file.with_name(batch_file.name + ".truth.json")
        assert truth.exists()
        assert len(batch_file.read_text().splitlines()) == 3

    def test_bad_spec_exits_1(self, tmp_path, capsys):
        spec = tmp_path / "bad.json"
        spec.write_text(json.dumps({"kind": "model", "nonsense": True}))
        code = main(["generate", "--spec", str(spec), "--out", str(tmp_path / "x.jsonl")])
        assert code == 1
        assert "unknown generator keys" in capsys.readouterr().err


class TestExtractCommand:
    def test_fast_mode_to_file(self, tmp_path, batch_file):
        out = tmp_path / "results.jsonl"
        code = main(["extract", "--input", str(batch_file), "--mode", "fast", "--out", str(out)])
        assert code == 0
        rows = read_records(out)
        results = [r for r in rows if r["record"] == "result"]
        summary = rows[-1]
        assert len(results) == 3
        assert summary["record"] == "summary"
        assert summary["converged"] == 3
        truth = json.loads(
            batch_file.with_name(batch_file.name + ".truth.json").read_text()
        )["cycles"]
        by_id = {t["id"]: t for t in truth}
        for row in results:
            assert abs(row["u1"] - by_id[row["id"]]["u1"]) <= 0.002
            assert abs(row["u2"] - by_id[row["id"]]["u2"]) <= 0.002

    def test_stdout_output(self, batch_file, capsys):
        code = main(["extract", "--input", str(batch_file), "--mode", "fast"])
        assert code == 0
        out = capsys.readouterr().out
        rows = [json.loads(line) for line in out.splitlines() if line.strip()]
        assert sum(1 for r in rows if r["record"] == "result") == 3

    def test_search_flags(self, tmp_path, batch_file):
        out = tmp_path / "r.jsonl"
        code = main(
            [
                "extract",
                "--input", str(batch_file),
                "--mode", "fast",
                "--tol", "0.002",
                "--step0", "0.2",
                "--guess", "1.2,2.5",
                "--guess", "0.8,0.7",
                "--random-guesses", "2",
                "--seed", "5",
                "--domain", "0.5,1.5,0.5,3",
                "--out", str(out),
            ]
        )
        assert code == 0
        assert len([r for r in read_records(out) if r["record"] == "result"]) == 3

    def test_no_valid_records_exits_2(self, tmp_path, capsys):
        empty = tmp_path / "empty.jsonl"
        empty.write_text('{"id": "a", "dt": 0.002}\n')
        code = main(["extract", "--input", str(empty), "--out", str(tmp_path / "o.jsonl")])
        assert code == 2
        assert "missing keys" in capsys.readouterr().err

    def test_missing_input_exits_1(self, tmp_path):
        code = main(["extract", "--input", str(tmp_path / "nope.jsonl")])
        assert code == 1


class TestGridCommand:
    def test_writes_matrix(self, tmp_path, batch_file):
        out = tmp_path / "grid.txt"
        code = main(
            [
                "grid",
                "--input", str(batch_file),
                "--mesh", "0.1",
                "--mesh-unit", "dimensionless",
                "--out", str(out),
            ]
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# objective grid")
        assert any(line.startswith("# minimizer:") for line in lines)


class TestCompareCommand:
    def test_report_written(self, tmp_path, batch_file, capsys):
        out = tmp_path / "cmp.jsonl"
        code = main(
            [
                "compare",
                "--input", str(batch_file),
                "--mesh", "0.3",
                "--threshold", "0.35",
                "--out", str(out),
            ]
        )
        assert code == 0
        rows = read_records(out)
        comparison = next(r for r in rows if r["record"] == "comparison")
        assert comparison["input_checksum"]
        assert "median_wall_ratio" in comparison
        err = capsys.readouterr().err
        assert "max mean |d omega|" in err
