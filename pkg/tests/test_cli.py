import csv
import json
import math
import os

import pytest

from ggp.cli import (
    RECORDS_HEADER,
    SUMMARY_HEADER,
    RunConfig,
    emit_summary,
    main,
    parse_config,
    run,
)
from ggp.errors import EmptyInput, IoError, ParseError, ValidationError
from ggp.experiments import CheckOutcome, ExperimentRecord, RunResult

MINIMAL_GUMBEL = {
    "experiment": "gumbel",
    "alpha": 0.0,
    "beta": 1.0,
    "n": 1000,
    "reps": 150,
    "seed": 42,
}


class TestParseConfig:
    def test_minimal_gumbel_defaults(self, monkeypatch):
        monkeypatch.delenv("GGP_WORKERS", raising=False)
        cfg = parse_config(json.dumps(MINIMAL_GUMBEL))
        assert cfg.experiment == "gumbel"
        assert cfg.output_format == "csv"
        assert cfg.workers == (os.cpu_count() or 1)

    def test_env_workers_default(self, monkeypatch):
        monkeypatch.setenv("GGP_WORKERS", "3")
        cfg = parse_config(json.dumps(MINIMAL_GUMBEL))
        assert cfg.workers == 3

    def test_alpha_out_of_range_names_field(self):
        bad = dict(MINIMAL_GUMBEL, alpha=-2.0)
        with pytest.raises(ValidationError) as exc:
            parse_config(json.dumps(bad))
        assert exc.value.field == "alpha"

    def test_unknown_key_rejected(self):
        bad = dict(MINIMAL_GUMBEL, gamma=1.0)
        with pytest.raises(ValidationError) as exc:
            parse_config(json.dumps(bad))
        assert exc.value.field == "gamma"

    def test_parse_error_carries_position(self):
        with pytest.raises(ParseError) as exc:
            parse_config('{"experiment": "gumbel",\n  broken')
        assert exc.value.line == 2

    def test_missing_required_key(self):
        bad = dict(MINIMAL_GUMBEL)
        del bad["n"]
        with pytest.raises(ValidationError) as exc:
            parse_config(json.dumps(bad))
        assert exc.value.field == "n"

    def test_model_params_validated_for_clt(self):
        cfg = {
            "experiment": "clt", "d": 1, "alpha": 0.0, "beta": 2.0, "lambda": 100.0,
            "reps": 1000, "seed": 1,
        }
        with pytest.raises(ValidationError) as exc:
            parse_config(json.dumps(cfg))
        assert exc.value.field == "d"


class TestRunAndDeterminism:
    def config_path(self, tmp_path, payload):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(payload))
        return str(path)

    def test_gumbel_run_writes_outputs(self, tmp_path, capsys):
        code = main(["run", "--config", self.config_path(tmp_path, MINIMAL_GUMBEL),
                     "--out", str(tmp_path / "out"), "--workers", "1"])
        assert code == 0
        out = capsys.readouterr().out
        assert "gumbel_ks" in out
        records = (tmp_path / "out" / "gumbel_records.csv").read_bytes()
        summary = (tmp_path / "out" / "gumbel_summary.csv").read_bytes()
        assert records.startswith(",".join(RECORDS_HEADER).encode())
        assert summary.startswith(",".join(SUMMARY_HEADER).encode())

    def test_byte_identical_rerun_and_worker_invariance(self, tmp_path):
        cfg = self.config_path(tmp_path, MINIMAL_GUMBEL)
        paths = []
        for name, workers in (("a", "1"), ("b", "1"), ("c", "2")):
            out = tmp_path / name
            assert main(["run", "--config", cfg, "--out", str(out),
                         "--workers", workers]) == 0
            paths.append((out / "gumbel_records.csv").read_bytes())
        assert paths[0] == paths[1] == paths[2]

    def test_seed_override_changes_records(self, tmp_path):
        cfg = self.config_path(tmp_path, MINIMAL_GUMBEL)
        main(["run", "--config", cfg, "--out", str(tmp_path / "x"), "--workers", "1"])
        main(["run", "--config", cfg, "--seed", "43", "--out", str(tmp_path / "y"),
              "--workers", "1"])
        a = (tmp_path / "x" / "gumbel_records.csv").read_bytes()
        b = (tmp_path / "y" / "gumbel_records.csv").read_bytes()
        assert a != b

    def test_unwritable_output_path(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("file, not a directory")
        cfg = self.config_path(tmp_path, MINIMAL_GUMBEL)
        code = main(["run", "--config", cfg, "--out", str(blocker / "sub"),
                     "--workers", "1"])
        assert code != 0

    def test_validate_command(self, tmp_path, capsys):
        cfg = self.config_path(tmp_path, MINIMAL_GUMBEL)
        assert main(["validate", "--config", cfg]) == 0
        assert "ok" in capsys.readouterr().out
        bad = self.config_path(tmp_path, dict(MINIMAL_GUMBEL, alpha=-3.0))
        assert main(["validate", "--config", bad]) == 2

    def test_failing_check_gives_nonzero_exit(self, tmp_path, monkeypatch):
        import ggp.cli as cli_module

        fake = RunResult(
            experiment="gumbel",
            records=[ExperimentRecord("gumbel", 1.0, 1, 0.0, 1.0, 1, 0, {"x": 1.0})],
            checks=[CheckOutcome("forced", "FAIL", "forced failure")],
        )
        monkeypatch.setattr(cli_module, "_dispatch", lambda config: fake)
        cfg = self.config_path(tmp_path, MINIMAL_GUMBEL)
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


class TestSummaries:
    def make_records(self):
        return [
            ExperimentRecord("moments", 100.0, 2, 0.0, 2.0, 1, rep, {"f0": float(10 + rep)})
            for rep in range(4)
        ] + [
            ExperimentRecord("moments", 10.0, 2, 0.0, 2.0, 1, 0, {"f0": 5.0}),
        ]

    def test_group_stats_and_ordering(self):
        rows = emit_summary(self.make_records())
        assert [r[1] for r in rows] == ["10.0", "100.0"]  # ascending lambda
        lam100 = rows[1]
        assert lam100[3] == "4"
        assert float(lam100[4]) == pytest.approx(11.5, rel=1e-15)
        var = ((10 - 11.5) ** 2 + (11 - 11.5) ** 2 + (12 - 11.5) ** 2 + (13 - 11.5) ** 2) / 3
        assert float(lam100[5]) == pytest.approx(var, rel=1e-15)
        assert float(lam100[6]) == pytest.approx(1.96 * math.sqrt(var / 4), rel=1e-12)

    def test_single_record_group_has_empty_variance(self):
        rows = emit_summary(self.make_records())
        assert rows[0][5] == "" and rows[0][6] == ""

    def test_summary_means_match_recompute(self):
        records = self.make_records()
        rows = emit_summary(records)
        for row in rows:
            lam, metric = float(row[1]), row[2]
            vals = [r.metrics[metric] for r in records if r.lam == lam and metric in r.metrics]
            assert float(row[4]) == pytest.approx(sum(vals) / len(vals), abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            emit_summary([])

    def test_summarize_command_roundtrip(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(MINIMAL_GUMBEL))
        main(["run", "--config", str(cfg), "--out", str(tmp_path), "--workers", "1"])
        capsys.readouterr()
        assert main(["summarize", str(tmp_path / "gumbel_records.csv")]) == 0
        out = capsys.readouterr().out
        reader = csv.reader(out.splitlines())
        header = next(reader)
        assert header == SUMMARY_HEADER
        direct = (tmp_path / "gumbel_summary.csv").read_text()
        assert out.replace("\r\n", "\n") == direct.replace("\r\n", "\n")


class TestGoldenHeader:
    def test_records_header_pinned(self):
        # schema version 1: any change here is a breaking format change
        assert RECORDS_HEADER == [
            "experiment", "lambda", "d", "alpha", "beta", "seed", "replication",
            "metric", "value",
        ]
        assert SUMMARY_HEADER == [
            "experiment", "lambda", "metric", "n", "mean", "var", "ci95",
        ]
