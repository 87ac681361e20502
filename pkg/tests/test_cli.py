import io

import numpy as np

from quadswe.benchmarks import benchmark
from quadswe.cli import execute, main
from quadswe.grid import Rect
from quadswe.io import read_grid, read_solution
from quadswe.norms import LatticeField, QuadtreeField, error_norms


def test_bench_writes_outputs_and_diagnostics(tmp_path, capsys):
    code = main(["bench", "ex2", "--m", "4", "--t-end", "0.02", "--out", str(tmp_path), "--sample", "8", "8"])
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("# ex2") and out[1].startswith("# step t dt min_h")
    assert out[-1].startswith("# done")
    sol = read_solution(tmp_path / "solution_final.csv")
    assert read_grid(tmp_path / "grid_final.txt") == sol.grid
    assert (tmp_path / "w_final.dat").read_text().splitlines()[0].split()[0] == "8"


def test_runs_are_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["bench", "ex5", "--m", "4", "--t-end", "0.01", "--out", str(tmp_path / d)]) == 0
    a = (tmp_path / "a" / "solution_final.csv").read_bytes()
    assert a == (tmp_path / "b" / "solution_final.csv").read_bytes()


def test_output_every(tmp_path):
    p = benchmark("ex2", m=4).with_(t_end=0.02)
    sim = execute(p, tmp_path, None, 2, io.StringIO())
    names = sorted(f.name for f in tmp_path.glob("solution_*.csv"))
    assert names[0] == "solution_000000.csv" and "solution_final.csv" in names
    assert len(names) == sim.steps // 2 + 2


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("benchmark = ex2\nbogus = 1\n")
    assert main(["run", "--config", str(bad)]) == 2
    nan = tmp_path / "nan.cfg"
    nan.write_text("domain = 0 0 1 1\nm = 3\nc_seed = 0.1\nt_end = 0.01\nw0 = where(x > 0.5, np.nan, 1.0)\n")
    assert main(["run", "--config", str(nan)]) == 3
    assert main(["bench", "ex2", "--m", "0"]) == 2
    ok = tmp_path / "ok.cfg"
    ok.write_text(f"benchmark = ex1\nm = 3\nt_end = 0.001\nout = {tmp_path / 'o'}\n")
    assert main(["run", "--config", str(ok)]) == 0
    err = capsys.readouterr().err
    assert "configuration error" in err and "numerical failure" in err


def test_dump_feeds_error_norms(tmp_path):
    assert main(["bench", "ex1", "--m", "4", "--t-end", "0.005", "--out", str(tmp_path)]) == 0
    sol = read_solution(tmp_path / "solution_final.csv", max_level=4)
    assert tuple(sol.grid.root) == (0.0, 0.0, 2.0, 1.0)
    ref = LatticeField(Rect(0, 0, 2, 1), np.ones((32, 16)))
    r = error_norms(QuadtreeField(sol.grid, sol.U[:, 0]), ref)
    assert np.isfinite(r.l1) and r.l1 > 0
