import numpy as np
import pytest

from stairprec import bench
from stairprec.bench import (
    CSV_HEADER,
    PRESETS,
    ExperimentConfig,
    ExperimentRow,
    read_csv,
    run_experiment,
    write_csv,
)


def small(**kw):
    base = dict(N=4, n=3, num_matrices=2, num_rhs=5, threads=1, with_spectra=True)
    base.update(kw)
    return ExperimentConfig(**base)


def test_header_only_csv(tmp_path):
    path = tmp_path / "r.csv"
    write_csv([], path)
    assert path.read_text() == ",".join(CSV_HEADER) + "\n"


def test_sixteen_rows():
    rows = run_experiment(small())
    assert len(rows) == 16
    base = [r for r in rows if (r.preset, r.m) == ("DiagonalOnly", 1)][0]
    assert base.mean_cond_normalized == 1.0
    assert all(r.num_failures == 0 for r in rows)


def test_csv_roundtrip_and_line_count(tmp_path):
    rows = run_experiment(small())
    path = tmp_path / "r.csv"
    write_csv(rows, path)
    raw = path.read_bytes()
    assert raw.count(b"\n") == 17 and b"\r" not in raw
    back = read_csv(path)
    assert [(r.preset, r.m) for r in back] == [(r.preset, r.m) for r in rows]
    for a, b in zip(back, rows):
        assert a.mean_iterations == pytest.approx(b.mean_iterations, rel=1e-5)


def test_deterministic_bytes(tmp_path):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(run_experiment(small()), p1)
    write_csv(run_experiment(small(threads=2)), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_block_diagonal_instances_converge_in_one_step():
    cfg = small(m_list=(1,), presets=[PRESETS["optimal"]],
                generator={"dyn_scale": 0.0})
    (row,) = run_experiment(cfg)
    assert row.mean_iterations == pytest.approx(1.0)


def test_no_spectra_leaves_cond_empty(tmp_path):
    rows = run_experiment(small(with_spectra=False, m_list=(1,)))
    assert all(r.mean_cond is None and r.mean_cond_normalized is None for r in rows)
    path = tmp_path / "r.csv"
    write_csv(rows, path)
    assert read_csv(path)[0].mean_cond is None


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(m_list=(0,))
    with pytest.raises(ValueError):
        ExperimentConfig(num_rhs=0)
    with pytest.raises(TypeError):
        ExperimentConfig(presets=[("x", (1.0, -1.0))])


def test_cli_runs(tmp_path, capsys):
    out = tmp_path / "cli.csv"
    dump = tmp_path / "inst"
    code = bench.main(["--N", "4", "--n", "2", "--matrices", "1", "--rhs", "3", "--m", "1,2",
                       "--presets", "diag,optimal", "--custom-a", "0.25", "--spectra",
                       "--out", str(out), "--dump-instances", str(dump)])
    assert code == 0
    rows = read_csv(out)
    assert [r.preset for r in rows] == ["DiagonalOnly"] * 2 + ["Optimal"] * 2 + ["Custom(a=0.25)"] * 2
    assert (dump / "instance_0000.txt").exists() and (dump / "instance_0000.json").exists()
    assert "Optimal" in capsys.readouterr().out


def test_cli_rejects_unknown_preset(tmp_path):
    assert bench.main(["--presets", "nope", "--out", str(tmp_path / "x.csv")]) == 1


def test_cli_reports_spd_failures(tmp_path, monkeypatch):
    monkeypatch.setattr(bench, "run_experiment", lambda cfg, return_spd_failures: ([], 1))
    assert bench.main(["--out", str(tmp_path / "x.csv")]) == 2


def test_unwritable_output(tmp_path):
    with pytest.raises(OSError):
        write_csv([ExperimentRow("a", 1, 1.0, None, None, 0)], tmp_path / "missing" / "x.csv")
