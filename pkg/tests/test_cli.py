import json

import numpy as np
import pytest

from pcwk import SpectralDensity, write_density_csv
from pcwk.cli import SpecValidationError, main, parse_spec

GRID = 256


def write_spec(tmp_path, payload, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def write_white(tmp_path, name, scale=1.0, dim=1):
    path = tmp_path / name
    write_density_csv(SpectralDensity.white(dim, scale=scale, grid_size=GRID), path)
    return name


def filter_spec(tmp_path, **overrides):
    payload = {
        "task": "filter",
        "densities": {
            "f": write_white(tmp_path, "f.csv"),
            "g": write_white(tmp_path, "g.csv"),
        },
        "weights": {"inline": [[1.0]]},
        "numerics": {"grid": GRID, "seed": 11},
    }
    payload.update(overrides)
    return write_spec(tmp_path, payload)


class TestParseSpec:
    def test_minimal_valid_fills_defaults(self, tmp_path):
        path = write_spec(
            tmp_path,
            {
                "task": "interpolate",
                "densities": {"f": "f.csv"},
                "weights": {"inline": [[1.0]]},
            },
        )
        spec = parse_spec(path)
        assert spec.numerics.grid == 2048
        assert spec.numerics.seed == 0

    def test_zero_harmonics_rejected(self, tmp_path):
        path = write_spec(
            tmp_path,
            {
                "task": "interpolate",
                "lift": {"period": 1.0, "harmonics": 0},
                "densities": {"f": "f.csv"},
                "weights": {"inline": [[1.0]]},
            },
        )
        with pytest.raises(SpecValidationError, match=">= 1"):
            parse_spec(path)

    def test_doubly_specified_weights(self, tmp_path):
        path = write_spec(
            tmp_path,
            {
                "task": "interpolate",
                "lift": {"period": 1.0, "harmonics": 1},
                "densities": {"f": "f.csv"},
                "weights": {"inline": [[1.0]], "csv": "a.csv", "blocks": 2},
            },
        )
        with pytest.raises(SpecValidationError, match="doubly specified"):
            parse_spec(path)

    def test_unknown_keys_rejected(self, tmp_path):
        path = write_spec(
            tmp_path,
            {
                "task": "interpolate",
                "densities": {"f": "f.csv"},
                "weights": {"inline": [[1.0]]},
                "mystery": 1,
            },
        )
        with pytest.raises(SpecValidationError, match="unknown key"):
            parse_spec(path)

    def test_all_errors_collected(self, tmp_path):
        path = write_spec(
            tmp_path,
            {
                "task": "no-such-task",
                "densities": {"f": 3},
                "weights": {},
                "numerics": {"grid": 100},
            },
        )
        with pytest.raises(SpecValidationError) as excinfo:
            parse_spec(path)
        assert len(excinfo.value.errors) >= 3


class TestMainEstimation:
    def test_filter_white(self, tmp_path, capsys):
        spec = filter_spec(tmp_path)
        out = tmp_path / "out"
        assert main(["--spec", str(spec), "--out", str(out)]) == 0
        summary = dict(
            line.split(",", 1)
            for line in (out / "summary.csv").read_text().splitlines()[1:]
        )
        assert float(summary["mse"]) == pytest.approx(0.5, abs=1e-8)
        body = (out / "filter_h.csv").read_text().splitlines()
        assert body[0] == "lambda,component,re_h,im_h"
        assert len(body) == GRID + 1

    def test_dry_run(self, tmp_path, capsys):
        spec = filter_spec(tmp_path)
        assert main(["--spec", str(spec), "--dry-run"]) == 0
        captured = capsys.readouterr()
        assert "grid = 256" in captured.out
        assert "seed = 11" in captured.out

    def test_usage_error_exit_code(self, tmp_path, capsys):
        spec = write_spec(tmp_path, {"task": "filter"})
        assert main(["--spec", str(spec), "--out", str(tmp_path / "out")]) == 1

    def test_invalid_density_exits_2(self, tmp_path, capsys):
        spec = filter_spec(tmp_path)
        bad = SpectralDensity.from_coeffs(
            {0: 1.0, 1: 0.6, -1: 0.6}, grid_size=GRID
        )
        write_density_csv(bad, tmp_path / "f.csv")
        assert main(["--spec", str(spec), "--out", str(tmp_path / "out")]) == 2
        err = capsys.readouterr().err
        assert "lambda" in err  # names the offending grid node

    def test_seed_and_grid_overrides(self, tmp_path, capsys):
        spec = filter_spec(tmp_path)
        assert main(["--spec", str(spec), "--dry-run", "--seed", "99",
                     "--grid", "512"]) == 0
        captured = capsys.readouterr()
        assert "seed = 99" in captured.out
        assert "grid = 512" in captured.out


class TestMainFactorize:
    def test_factor_csv(self, tmp_path):
        f = SpectralDensity.from_moving_average(
            [np.eye(1), 0.5 * np.eye(1)], grid_size=GRID
        )
        write_density_csv(f, tmp_path / "f.csv")
        spec = write_spec(
            tmp_path,
            {
                "task": "factorize",
                "densities": {"f": "f.csv"},
                "numerics": {"grid": GRID},
            },
        )
        out = tmp_path / "out"
        assert main(["--spec", str(spec), "--out", str(out)]) == 0
        lines = (out / "factor.csv").read_text().splitlines()
        assert lines[0] == "u,row,col,re,im"
        taps = {int(row.split(",")[0]): float(row.split(",")[3]) for row in lines[1:]}
        assert taps[0] == pytest.approx(1.0, abs=1e-9)
        assert taps[1] == pytest.approx(0.5, abs=1e-9)


class TestMainMinimax:
    def minimax_spec(self, tmp_path):
        return write_spec(
            tmp_path,
            {
                "task": "minimax-y",
                "weights": {"inline": [[1.0], [1.0]]},
                "numerics": {"grid": GRID, "seed": 5},
                "class_params": {"total_power": 1.0, "samples": 20},
            },
        )

    def test_minimax_y_outputs(self, tmp_path):
        out = tmp_path / "out"
        assert main(["--spec", str(self.minimax_spec(tmp_path)),
                     "--out", str(out)]) == 0
        summary = dict(
            line.split(",", 1)
            for line in (out / "summary.csv").read_text().splitlines()[1:]
        )
        golden = (3.0 + np.sqrt(5.0)) / 2.0
        assert float(summary["minimax_mse"]) == pytest.approx(golden, abs=1e-10)
        assert float(summary["min_saddle_margin"]) >= -1e-8
        assert (out / "least_favorable_f.csv").exists()

    def test_deterministic_outputs(self, tmp_path):
        spec = self.minimax_spec(tmp_path)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["--spec", str(spec), "--out", str(out1)]) == 0
        assert main(["--spec", str(spec), "--out", str(out2)]) == 0
        for name in ("summary.csv", "least_favorable_f.csv", "minimax-y_h.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestMainOracleAndSimulate:
    def test_oracle_check(self, tmp_path):
        spec = filter_spec(
            tmp_path,
            task="oracle-check",
            class_params={"task": "filter", "tolerance": 1e-5},
        )
        out = tmp_path / "out"
        assert main(["--spec", str(spec), "--out", str(out)]) == 0
        lines = (out / "oracle.csv").read_text().splitlines()
        assert lines[0] == "task,spectral_mse,oracle_mse,rel_diff,window"
        fields = lines[1].split(",")
        assert float(fields[3]) < 1e-5

    def test_simulate_deterministic(self, tmp_path):
        spec = filter_spec(
            tmp_path, task="simulate", class_params={"n_blocks": 64}
        )
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        assert main(["--spec", str(spec), "--out", str(out1)]) == 0
        assert main(["--spec", str(spec), "--out", str(out2)]) == 0
        assert (out1 / "path.csv").read_bytes() == (out2 / "path.csv").read_bytes()

    def test_weight_csv_with_lift(self, tmp_path):
        (tmp_path / "a.csv").write_text(
            "t,a\n0.0,1.0\n0.5,1.0\n1.0,1.0\n2.0,1.0\n", encoding="utf-8"
        )
        payload = {
            "task": "extrapolate",
            "lift": {"period": 1.0, "harmonics": 1},
            "densities": {"f": write_white(tmp_path, "f.csv")},
            "weights": {"csv": "a.csv", "blocks": 2},
            "numerics": {"grid": GRID},
        }
        spec = write_spec(tmp_path, payload)
        out = tmp_path / "out"
        assert main(["--spec", str(spec), "--out", str(out)]) == 0
        summary = dict(
            line.split(",", 1)
            for line in (out / "summary.csv").read_text().splitlines()[1:]
        )
        # constant weight on [0, 2): two unit blocks of white noise
        assert float(summary["mse"]) == pytest.approx(2.0, abs=1e-8)
