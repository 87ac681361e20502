"""Command line entry point: ``quadswe run`` and ``quadswe bench``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .benchmarks import BENCHMARKS, benchmark
from .config import load_config
from .errors import ConfigError, InvalidArgument, NumericalError, OutputError, QuadsweError
from .flux import SOURCE_MODES
from .io import dump_grid, dump_solution, sample_matrix, write_matrix
from .simulation import Problem, Simulation

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

DIAG_HEADER = "# step t dt min_h volume max_w active_cells"


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quadswe", description="Adaptive quadtree shallow-water solver")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a configuration file")
    r.add_argument("--config", required=True, type=Path)
    b = sub.add_parser("bench", help="run a built-in benchmark")
    b.add_argument("name", choices=BENCHMARKS)
    b.add_argument("--m", type=int)
    b.add_argument("--cseed", type=float)
    b.add_argument("--source-mode", choices=SOURCE_MODES)
    b.add_argument("--out", type=Path)
    b.add_argument("--sample", nargs=2, type=int, metavar=("NX", "NY"))
    b.add_argument("--regrid-every", type=int)
    b.add_argument("--t-end", type=float)
    b.add_argument("--output-every", type=int, default=0, help="dump the solution every N steps")
    return p


def write_outputs(sim: Simulation, out: Path, sample=None, tag: str = "final") -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc.strerror or exc}") from exc
    grid = sim.disc.grid
    dump_solution(grid, sim.U, sim.disc.bathy, out / f"solution_{tag}.csv", sim.t)
    dump_grid(grid, out / f"grid_{tag}.txt")
    if sample is not None:
        nx, ny = sample
        write_matrix(out / f"w_{tag}.dat", sample_matrix(grid, sim.U[:, 0], nx, ny), grid.root)


def execute(problem: Problem, out: Path | None = None, sample=None, output_every: int = 0, stream=None) -> Simulation:
    """Run ``problem`` printing diagnostics lines to ``stream``; writes files under ``out``."""
    stream = sys.stdout if stream is None else stream
    sim = Simulation(problem)
    print(f"# {problem.name} m={problem.m} c_seed={problem.c_seed:g} g={problem.g:g} t_end={problem.t_end:g} "
          f"source={problem.source_mode} cells={sim.disc.grid.n_cells}", file=stream)
    print(DIAG_HEADER, file=stream)
    printed = 0

    def report(s: Simulation) -> None:
        nonlocal printed
        for line in s.diagnostics[printed:]:
            print(line, file=stream)
        printed = len(s.diagnostics)
        if out is not None and output_every and s.steps % output_every == 0:
            write_outputs(s, out, sample, f"{s.steps:06d}")

    if out is not None and output_every:
        write_outputs(sim, out, sample, f"{0:06d}")
    res = sim.run(callback=report)
    print(f"# done t={res.t:.10g} steps={res.steps} cells={res.grid.n_cells} min_h={res.min_h:.6e} "
          f"wall={res.wall_time:.3f}s", file=stream)
    if out is not None:
        write_outputs(sim, out, sample)
    return sim


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            problem = cfg.problem()
            execute(problem, cfg.out, cfg.sample, cfg.output_every)
        else:
            if args.sample is not None and min(args.sample) < 1:
                raise ConfigError("--sample sizes must be positive")
            if args.output_every < 0:
                raise ConfigError("--output-every must be nonnegative")
            try:
                problem = benchmark(args.name, m=args.m, c_seed=args.cseed)
                kw = {"source_mode": args.source_mode, "regrid_every": args.regrid_every, "t_end": args.t_end}
                kw = {k: v for k, v in kw.items() if v is not None}
                if kw:
                    problem = problem.with_(**kw)
            except InvalidArgument as exc:
                raise ConfigError(str(exc)) from exc
            execute(problem, args.out, args.sample, args.output_every)
    except ConfigError as exc:
        print(f"quadswe: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"quadswe: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except QuadsweError as exc:
        print(f"quadswe: {exc}", file=sys.stderr)
        return EXIT_OTHER
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
