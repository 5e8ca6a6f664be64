import math

import numpy as np
import pytest

from sgefem.cli import (CSV_HEADER, ConfigError, StudyConfig,
                        _merge_config, format_table, load_config_file,
                        main)
from sgefem.linalg import SolverBreakdown


def run(args):
    return main(args)


def test_study_config_validation():
    good = StudyConfig("example1", [1.0], [1e-8], [4])
    assert good.ns == [4] and good.mu == 1.0
    with pytest.raises(ConfigError, match="example"):
        StudyConfig("example3", [1.0], [1.0], [4])
    with pytest.raises(ConfigError, match="nonempty"):
        StudyConfig("example1", [], [1.0], [4])
    with pytest.raises(ConfigError, match="at least 2"):
        StudyConfig("example1", [1.0], [1.0], [1])
    with pytest.raises(ConfigError, match="iota"):
        StudyConfig("example1", [1.0], [0.0], [4])
    with pytest.raises(ConfigError, match="tol"):
        StudyConfig("example1", [1.0], [1.0], [4], tol=1e-4)


def test_config_file_parsing(tmp_path):
    cfg = tmp_path / "study.cfg"
    cfg.write_text("# study\nexample = example2\nlambda = 1e0,1e4\n"
                   "n = 4,8  # coarse\n")
    values = load_config_file(str(cfg))
    assert values == {"example": "example2", "lambda": "1e0,1e4",
                      "n": "4,8"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("lambda 1e0\n")
    with pytest.raises(ConfigError, match="key=value"):
        load_config_file(str(bad))


def test_command_line_overrides_config_file(tmp_path):
    cfg = tmp_path / "study.cfg"
    cfg.write_text("example = example2\nlambda = 1e0\nn = 4\nmu = 2.0\n")

    class Args:
        example = None
        lam = [1e4]
        iota = None
        n = None
        mu = None
        tol = None
        out = None
        threads = None
        large = False
        config = str(cfg)

    config = _merge_config(Args())
    assert config.example == "example2"
    assert config.lams == [1e4]          # flag wins
    assert config.ns == [4]              # file wins over default
    assert config.mu == 2.0
    assert config.iotas == [1e-4, 1e-6, 1e-8]   # example2 default


def test_unknown_config_key_rejected(tmp_path):
    cfg = tmp_path / "study.cfg"
    cfg.write_text("tolerance = 1e-9\n")

    class Args:
        example = None
        lam = iota = n = mu = tol = out = threads = None
        large = False
        config = str(cfg)

    with pytest.raises(ConfigError, match="unknown config keys"):
        _merge_config(Args())


def test_default_grid_with_and_without_large():
    class Args:
        example = "example1"
        lam = iota = n = mu = tol = out = threads = None
        large = False
        config = None

    config = _merge_config(Args())
    assert config.ns == [16, 32, 64]
    assert config.lams == [1.0, 1e4, 1e8]
    assert config.iotas == [1.0, 1e-1, 1e-8]
    Args.large = True
    assert _merge_config(Args()).ns == [16, 32, 64, 128, 256]


def test_bad_flag_exits_3(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["convergence", "--example", "example9"])
    assert exc.value.code == 3


def test_bad_config_value_returns_3(tmp_path, capsys):
    out = str(tmp_path / "t.csv")
    assert run(["convergence", "--n", "1", "--out", out]) == 3
    assert "at least 2" in capsys.readouterr().err


def test_convergence_table_shape_and_determinism(tmp_path):
    out = tmp_path / "table.csv"
    args = ["convergence", "--example", "example2", "--lambda", "1e0,1e8",
            "--iota", "1e-6", "--n", "2,4", "--out", str(out)]
    assert run(args) == 0
    first = out.read_bytes()
    lines = first.decode().strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + 2 * 1 * 2
    # first row of each (lambda, iota) block carries no rate
    for row in (lines[1], lines[3]):
        assert row.split(",")[9] == ""
    assert all(row.endswith("ok") for row in lines[1:])
    assert run(args) == 0
    assert out.read_bytes() == first


def test_rates_recomputed_from_emitted_values(tmp_path):
    out = tmp_path / "table.csv"
    assert run(["convergence", "--example", "example1", "--lambda", "1e0",
                "--iota", "1e-1", "--n", "4,8,16", "--out",
                str(out)]) == 0
    rows = [r.split(",") for r in
            out.read_text().strip().split("\n")[1:]]
    for prev, cur in zip(rows, rows[1:]):
        want = math.log2(float(prev[7]) / float(cur[7])) \
            / math.log2(int(cur[3]) / int(prev[3]))
        assert float(cur[9]) == pytest.approx(want, abs=0.005)


def test_breakdown_flagged_and_exit_2(tmp_path, monkeypatch):
    import sgefem.linalg

    def boom(system, tol=1e-10):
        raise SolverBreakdown("forced", math.inf)

    monkeypatch.setattr(sgefem.linalg, "solve_saddle", boom)
    out = tmp_path / "table.csv"
    assert run(["convergence", "--example", "example2", "--lambda", "1e0",
                "--iota", "1e-6", "--n", "2", "--out", str(out)]) == 2
    row = out.read_text().strip().split("\n")[1].split(",")
    assert row[-1] == "breakdown"
    assert row[7] == "nan" and row[9] == ""


def test_verify_subcommand_passes_and_writes_csv(tmp_path, capsys):
    out = tmp_path / "report.csv"
    assert run(["verify", "--n", "2,4", "--iota", "1,1e-4", "--out",
                str(out)]) == 0
    text = capsys.readouterr().out
    assert "overall: pass" in text
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "check,value,threshold,pass"
    # one beta entry per (n, iota) pair with 3 <= n <= 8
    betas = [l for l in lines if l.startswith("infsup_beta")]
    assert len(betas) == 1 * 2


def test_verify_flip_edge_fails_with_exit_1(capsys):
    # edge 7 is interior on the n=2 mesh, where the flip is injected
    assert run(["verify", "--n", "2", "--debug-flip-edge", "7"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_solve_export(tmp_path):
    out = tmp_path / "sol.csv"
    args = ["solve", "--example", "example2", "--lambda", "1e0", "--iota",
            "1e-6", "--n", "8", "--out", str(out)]
    assert run(args) == 0
    first = out.read_bytes()
    lines = first.decode().strip().split("\n")
    assert lines[0] == "x,y,u1,u2,p"
    assert len(lines) == 1 + 9 * 9
    data = np.array([[float(v) for v in r.split(",")] for r in lines[1:]])
    on_bnd = ((data[:, 0] == 0) | (data[:, 0] == 1)
              | (data[:, 1] == 0) | (data[:, 1] == 1))
    assert np.all(data[on_bnd, 2] == 0.0)
    assert np.all(data[on_bnd, 3] == 0.0)
    assert np.any(data[~on_bnd, 2:4] != 0.0)
    assert abs(data[:, 4].mean()) < 1e-10 * np.max(np.abs(data[:, 4]))
    assert run(args) == 0
    assert out.read_bytes() == first


def test_solve_rejects_value_lists(tmp_path, capsys):
    assert run(["solve", "--lambda", "1e0,1e4", "--n", "4", "--iota",
                "1e-6", "--out", str(tmp_path / "s.csv")]) == 3
    assert "single" in capsys.readouterr().err


def test_format_table_groups_by_lambda_iota():
    config = StudyConfig("example1", [1.0, 2.0], [0.5], [2, 4])
    results = {}
    for lam in (1.0, 2.0):
        for n, e in ((2, 1e-2), (4, 2.5e-3)):
            results[lam, 0.5, n] = (1.0 / n, 10, 3, e, e / 10, "ok")
    text = format_table(config, results)
    lines = text.strip().split("\n")
    assert len(lines) == 5
    assert lines[2].split(",")[9] == "2.00"
    assert lines[4].split(",")[9] == "2.00"
