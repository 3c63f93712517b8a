import json

import numpy as np
import pytest

from factored_evolution import (
    DuplicateLabelError,
    SchemaError,
    SolutionTrace,
    UnknownProfileError,
)
from factored_evolution.cli import (
    compile_expression,
    main,
    parse_config,
    run_command,
    write_csv,
)

MINIMAL = {
    "backend": {"family": "spectral"},
    "operators": {"a": {"eigenvalues": [0.0]}},
    "factors": ["a"],
    "initial_data": [[1.0]],
    "forcing": "none",
    "time": {"t_end": 1.0, "samples": 3},
}


def config_text(**overrides):
    cfg = json.loads(json.dumps(MINIMAL))
    cfg.update(overrides)
    return json.dumps(cfg)


RANDOM_DIAGONAL = {
    "backend": {"family": "spectral", "dimension": 6},
    "operators": {
        "A": {"eigenvalues": {"random-uniform": {"low": -2.0, "high": -1.2}}},
        "B": {"eigenvalues": {"random-uniform": {"low": -0.8, "high": -0.2}}},
        "C": {"eigenvalues": {"random-uniform": {"low": 0.1, "high": 0.5}}},
    },
    "factors": ["A", "A", "B", "C"],
    "initial_data": [{"profile": "random-normal"}] * 4,
    "forcing": "cos(t)",
    "time": {"t_end": 1.5, "samples": 7},
}


class TestParseConfig:
    def test_minimal_config(self):
        cfg = parse_config(config_text())
        assert cfg.family == "spectral"
        assert cfg.dimension == 1
        assert cfg.factor_labels == ["a"]
        eq = cfg.materialize(seed=0)
        assert eq.n == 1 and eq.forcing is None

    def test_five_factor_grouping(self):
        ops = {
            label: {"eigenvalues": [float(v), float(v + 1)]}
            for label, v in (("A", 1), ("B", 3), ("C", 5))
        }
        cfg = parse_config(
            config_text(
                operators=ops,
                factors=["A", "A", "B", "B", "C"],
                initial_data=[[1.0, 0.0]] * 5,
            )
        )
        eq = cfg.materialize(0)
        assert [(op.label, m) for op, m in eq.grouped] == [("A", 2), ("B", 2), ("C", 1)]

    def test_undefined_label_names_index(self):
        with pytest.raises(SchemaError, match=r"factors\[1\].*'D'"):
            parse_config(config_text(factors=["a", "D"], initial_data=[[1.0], [1.0]]))

    def test_duplicate_operator_label(self):
        text = config_text().replace(
            '"operators": {"a": {"eigenvalues": [0.0]}}',
            '"operators": {"a": {"eigenvalues": [0.0]}, "a": {"eigenvalues": [1.0]}}',
        )
        with pytest.raises(DuplicateLabelError):
            parse_config(text)

    def test_unknown_profile(self):
        with pytest.raises(UnknownProfileError):
            parse_config(config_text(initial_data=[{"profile": "sawtooth"}]))

    def test_missing_key_has_path(self):
        bad = json.loads(config_text())
        del bad["time"]
        with pytest.raises(SchemaError, match="time"):
            parse_config(json.dumps(bad))

    def test_dimension_conflict(self):
        ops = {"a": {"eigenvalues": [0.0]}, "b": {"eigenvalues": [0.0, 1.0]}}
        with pytest.raises(SchemaError, match="dimension"):
            parse_config(config_text(operators=ops))

    def test_bad_forcing_expression(self):
        with pytest.raises(SchemaError, match="forcing"):
            parse_config(config_text(forcing="__import__('os')"))

    def test_translation_profiles(self):
        cfg = parse_config(
            json.dumps(
                {
                    "backend": {
                        "family": "translation",
                        "grid": {"x0": 0.0, "dx": 0.1, "n": 32},
                        "boundary": "periodic",
                    },
                    "operators": {"T": {"speed": 1.0}},
                    "factors": ["T"],
                    "initial_data": [{"profile": "sin", "frequency": 2.0}],
                    "forcing": "cos(t) * sin(x)",
                    "time": {"t_end": 1.0, "samples": 3},
                }
            )
        )
        eq = cfg.materialize(0)
        x = cfg.grid.points()
        assert np.allclose(eq.initial_data[0], np.sin(2.0 * x))
        assert np.allclose(eq.forcing(0.5), np.cos(0.5) * np.sin(x))

    def test_grid_profile_rejected_for_spectral(self):
        with pytest.raises(SchemaError, match="grid"):
            parse_config(config_text(initial_data=[{"profile": "sin"}])).materialize(0)


class TestExpressionEvaluator:
    def test_arithmetic_and_functions(self):
        fn = compile_expression("2 * cos(t) + i", {"t", "i"}, "forcing")
        out = fn(t=0.0, i=np.arange(3.0))
        assert np.allclose(out, [2.0, 3.0, 4.0])

    def test_rejects_attribute_access(self):
        with pytest.raises(SchemaError):
            compile_expression("().__class__", set(), "forcing")

    def test_rejects_unknown_names(self):
        with pytest.raises(SchemaError):
            compile_expression("q + 1", {"t"}, "forcing")


class TestWriteCsv:
    def test_single_sample(self, tmp_path):
        trace = SolutionTrace(np.array([0.0]), np.array([[1.0]]))
        path = tmp_path / "one.csv"
        write_csv(trace, str(path))
        assert path.read_text() == "t,u_0\n0,1\n"

    def test_deviation_column(self, tmp_path):
        trace = SolutionTrace(
            np.array([0.0, 1.0]),
            np.array([[1.0], [2.0]]),
            {"oracle_dev": np.array([0.0, 3e-9])},
        )
        path = tmp_path / "dev.csv"
        write_csv(trace, str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == "t,u_0,oracle_dev"
        assert float(lines[2].split(",")[2]) == 3e-9

    def test_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(33)
        times = np.sort(rng.uniform(0.0, 2.0, 7))
        values = rng.standard_normal((7, 3))
        path = tmp_path / "rt.csv"
        write_csv(SolutionTrace(times, values), str(path))
        lines = path.read_text().splitlines()[1:]
        parsed = np.array([[float(cell) for cell in line.split(",")] for line in lines])
        assert np.array_equal(parsed[:, 0], times)
        assert np.array_equal(parsed[:, 1:], values)


class TestCommands:
    def test_solve_minimal(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(config_text())
        out_path = tmp_path / "trace.csv"
        assert main(["solve", str(cfg_path), "--out", str(out_path)]) == 0
        lines = out_path.read_text().splitlines()
        assert lines[0] == "t,u_0"
        assert lines[1] == "0,1"
        assert len(lines) == 4

    def test_solve_is_deterministic(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(RANDOM_DIAGONAL))
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["solve", str(cfg_path), "--seed", "3", "--out", str(out1)]) == 0
        assert main(["solve", str(cfg_path), "--seed", "3", "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_compare_oracle_passes(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(RANDOM_DIAGONAL))
        out_path = tmp_path / "trace.csv"
        code = main(["compare-oracle", str(cfg_path), "--seed", "5", "--out", str(out_path)])
        captured = capsys.readouterr().out
        assert code == 0
        assert "PASS oracle-equivalence" in captured
        lines = out_path.read_text().splitlines()
        assert lines[0].endswith(",oracle_dev")
        devs = [float(line.split(",")[-1]) for line in lines[1:]]
        assert max(devs) <= 1e-6

    def test_verify_passes(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(RANDOM_DIAGONAL))
        assert main(["verify", str(cfg_path), "--seed", "5"]) == 0
        out = capsys.readouterr().out
        for name in (
            "coefficient-residual",
            "initial-derivative-fidelity",
            "oracle-equivalence",
            "convolution-identity",
            "quadrature-convergence",
        ):
            assert name in out

    def test_verify_surfaces_singular_system(self, tmp_path, capsys):
        cfg = json.loads(json.dumps(RANDOM_DIAGONAL))
        cfg["operators"] = {
            "A": {"eigenvalues": [-1.0, -2.0, 0.5]},
            "B": {"eigenvalues": [-1.0, -2.0, 0.5]},
        }
        cfg["backend"] = {"family": "spectral"}
        cfg["factors"] = ["A", "B"]
        cfg["initial_data"] = [{"profile": "random-normal"}] * 2
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        assert main(["verify", str(cfg_path)]) == 1
        out = capsys.readouterr().out
        assert "SingularSystemError" in out
        assert "'A'" in out and "'B'" in out

    def test_lemma2_check(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(RANDOM_DIAGONAL))
        assert main(["lemma2-check", str(cfg_path)]) == 0
        assert "k=3" in capsys.readouterr().out

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text("{not json")
        assert main(["solve", str(cfg_path)]) == 2
        assert "error" in capsys.readouterr().err

    def test_missing_file_exit_code(self, tmp_path, capsys):
        assert main(["solve", str(tmp_path / "absent.json")]) == 2

    def test_unknown_command_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            run_command(parse_config(config_text()), "plot")
