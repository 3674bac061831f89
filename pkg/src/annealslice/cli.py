"""Command-line entry point.

Every command writes its outputs plus a ``<command>.manifest.json`` next to
them.  The manifest records the fully resolved argument list, so
``annealslice replay <manifest>`` reruns the command and reproduces the same
CSV/SVG/QUBO bytes.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or validation error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from pathlib import Path

from . import __version__
from .analysis import (
    SliceSweepConfig,
    detect_freezeout,
    flip_rate_heatmap_data,
    flip_rates_to_csv,
    read_flip_rates,
    representatives_to_csv,
    run_slice_sweep,
    sweep_to_csv,
)
from .annealer import SamplerConfig
from .errors import AnnealSliceError, ConfigurationError, ParseError, SizeError
from .genetic import GaConfig, history_to_csv, run_ga
from .heatmap import render_heatmap_svg
from .qubo import (
    bits_to_str,
    exact_minimum,
    load_qubo,
    parse_topology_spec,
    qubo_to_dict,
    random_qubo,
)
from .schedule import (
    DEFAULT_ENERGY_SCALES,
    EnergyScaleTable,
    fmt17,
    pause_then_quench_schedule,
    sliced_schedule,
)
from .seeding import entropy_seed

DEFAULT_SEED = 2019


class UsageError(AnnealSliceError):
    pass


def atomic_write(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _seed(text: str) -> int | str:
    if text == "random":
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer or 'random', got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return value


def _topology(text: str):
    try:
        return parse_topology_spec(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"input file not found: {p}")
    return p


def _energy_scales(args) -> EnergyScaleTable:
    if args.schedule_table is None:
        return DEFAULT_ENERGY_SCALES
    return EnergyScaleTable.load(_require_file(args.schedule_table))


def _sampler_config(args, num_reads: int) -> SamplerConfig:
    return SamplerConfig(
        num_reads=num_reads,
        seed=args.seed,
        sweeps_per_microsecond=args.sweeps_per_us,
        inverse_temperature=args.beta,
        proposal_width=args.proposal_width,
        energy_scales=_energy_scales(args),
    )


# --- commands -------------------------------------------------------------------


def cmd_gen(args) -> dict:
    q = random_qubo(args.topology, args.seed, tuple(args.linear_range), tuple(args.quad_range))
    path = Path(args.out) / args.name
    atomic_write(path, json.dumps(qubo_to_dict(q), indent=1) + "\n")
    print(f"wrote {path} ({q.num_vars} variables, {q.topology.num_edges} couplers)")
    return {"outputs": [str(path)]}


def cmd_evolve(args) -> dict:
    cfg = GaConfig(
        population_size=args.pop,
        crossover_proportion=args.pcross,
        mutation_rate=args.pmut,
        iterations=args.iters,
        short_time=args.short_us,
        long_time=args.long_us,
        reads_per_eval=args.reads,
        seed=args.seed,
        backend=args.backend,
        sampler=_sampler_config(args, args.reads),
        quench_duration=args.quench_us,
    )
    cfg.check_breedable()

    def progress(row):
        print(f"iter {row.iteration:4d}  best {row.best_fitness:12.6g}  "
              f"mean {row.mean_fitness:12.6g}  best-so-far {row.best_so_far:12.6g}",
              file=sys.stderr)

    result = run_ga(cfg, args.topology, workers=args.workers, progress=progress)
    out = Path(args.out)
    best_path = atomic_write(out / "best_qubo.json", json.dumps(qubo_to_dict(result.best), indent=1) + "\n")
    hist_path = atomic_write(out / "ga_history.csv", history_to_csv(result.history))
    outputs = [str(best_path), str(hist_path)]
    if not args.no_plots:
        from .plotting import plot_ga_history

        outputs.append(str(plot_ga_history(result.history, out / "ga_history.png")))
    print(f"best final fitness {fmt17(result.best_fitness)}; wrote {best_path}")
    return {
        "outputs": outputs,
        "ga_config": cfg.to_dict(),
        "history": [r._asdict() for r in result.history],
        "best_fitness": result.best_fitness,
        "best_qubo": qubo_to_dict(result.best),
    }


def cmd_slice(args) -> dict:
    qpath = _require_file(args.qubo)
    q = load_qubo(qpath)
    cfg = SliceSweepConfig(
        total_time=args.total_us,
        num_slices=args.slices,
        reads_per_slice=args.reads,
        repeats=args.repeats,
        top_k=args.top_k,
        seed=args.seed,
        quench_duration=args.quench_us,
    )
    sweep = run_slice_sweep(q, cfg, args.backend, _sampler_config(args, args.reads), args.workers)
    out = Path(args.out)
    outputs = [
        atomic_write(out / "slice_sweep.csv", sweep_to_csv(sweep)),
        atomic_write(out / "flip_rates.csv", flip_rates_to_csv(sweep)),
        atomic_write(out / "representatives.csv", representatives_to_csv(sweep)),
    ]
    if not args.no_plots:
        from .plotting import plot_energy_evolution, plot_hamming_evolution

        outputs.append(plot_energy_evolution(sweep, out / "energy_evolution.png"))
        outputs.append(plot_hamming_evolution(sweep, out / "hamming_evolution.png"))
    m1 = sweep.series("min1pct_mean")
    series = m1 if all(v == v for v in m1) else sweep.series("energy_mean")
    fz = detect_freezeout(series, window=min(3, len(series)))
    print(f"{cfg.num_slices} slices written to {out}; energy freeze-out slice: "
          f"{'none' if fz is None else fz}")
    return {"inputs": [str(qpath.resolve())], "outputs": [str(p) for p in outputs],
            "energy_freezeout_slice": fz}


def cmd_heatmap(args) -> dict:
    path = _require_file(args.flip_rates)
    rates = read_flip_rates(path.read_text(), str(path))
    if len(rates) != args.topology.num_vars:
        raise UsageError(
            f"{path} has {len(rates)} rows but {args.topology.name} has {args.topology.num_vars} variables"
        )
    cells = flip_rate_heatmap_data(rates, args.topology)
    svg_path = Path(args.svg) if args.svg else Path(args.out) / "heatmap.svg"
    atomic_write(svg_path, render_heatmap_svg(cells, args.topology, f"bit flip rates, {args.topology.name}"))
    print(f"wrote {svg_path}")
    return {"inputs": [str(path.resolve())], "outputs": [str(svg_path)]}


def cmd_solve_exact(args) -> dict:
    path = _require_file(args.qubo)
    q = load_qubo(path)
    bits, energy = exact_minimum(q)
    print(f"energy {fmt17(energy)}")
    print(f"bits {bits_to_str(bits)}")
    return {"inputs": [str(path.resolve())], "outputs": []}


def cmd_schedule(args) -> dict:
    build = pause_then_quench_schedule if args.pause else sliced_schedule
    sch = build(args.total_us, args.slice_us if args.slice_us else args.total_us, args.quench_us)
    text = sch.to_csv()
    sys.stdout.write(text)
    outputs = []
    if args.emit_schedule:
        outputs.append(str(atomic_write(Path(args.emit_schedule), text)))
    return {"outputs": outputs}


def cmd_replay(args) -> dict:
    mpath = _require_file(args.manifest)
    try:
        manifest = json.loads(mpath.read_text())
        argv = list(manifest["argv"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"{mpath}: not a run manifest ({exc})") from None
    if args.out is not None:
        argv = _override(argv, "--out", args.out)
    if manifest.get("version") != __version__:
        print(f"warning: manifest written by version {manifest.get('version')}, "
              f"running {__version__}", file=sys.stderr)
    code = main(argv)
    if code:
        raise AnnealSliceError(f"replayed command exited with status {code}")
    return {"inputs": [str(mpath.resolve())], "outputs": [], "replayed": argv}


def _override(argv: list[str], flag: str, value: str) -> list[str]:
    argv = list(argv)
    if flag in argv:
        argv[argv.index(flag) + 1] = value
    else:
        argv += [flag, value]
    return argv


# --- parser ---------------------------------------------------------------------


def _common(sampler: bool = True, out_default: str | None = ".") -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED,
                   help="integer seed or 'random' (default %(default)s)")
    p.add_argument("--out", default=out_default,
                   help="output directory for files and the run manifest")
    if sampler:
        p.add_argument("--backend", choices=["svmc", "exact"], default="svmc")
        p.add_argument("--schedule-table", default=None, metavar="CSV",
                       help="energy-scale table with header s,A_GHz,B_GHz")
        p.add_argument("--sweeps-per-us", type=int, default=1)
        p.add_argument("--beta", type=float, default=10.0, help="SVMC inverse temperature")
        p.add_argument("--proposal-width", type=float, default=0.3, help="SVMC angle step (rad)")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--no-plots", action="store_true", help="skip matplotlib figures")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="annealslice", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[_common(sampler=False)], help="generate a random QUBO")
    p.add_argument("--topology", type=_topology, default="chimera-4-4-4")
    p.add_argument("--linear-range", type=float, nargs=2, default=[-2.0, 2.0], metavar=("LO", "HI"))
    p.add_argument("--quad-range", type=float, nargs=2, default=[-1.0, 1.0], metavar=("LO", "HI"))
    p.add_argument("--name", default="qubo.json", help="output file name inside --out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("evolve", parents=[_common()], help="evolve a QUBO with the genetic algorithm")
    p.add_argument("--topology", type=_topology, default="chimera-4-4-4")
    p.add_argument("--pop", type=int, default=50)
    p.add_argument("--pcross", type=float, default=0.25)
    p.add_argument("--pmut", type=float, default=0.01)
    p.add_argument("--iters", type=int, default=50)
    p.add_argument("--short-us", type=float, default=1.0)
    p.add_argument("--long-us", type=float, default=1000.0)
    p.add_argument("--reads", type=int, default=1000)
    p.add_argument("--quench-us", type=float, default=1.0)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("slice", parents=[_common()], help="slice the anneal of a QUBO")
    p.add_argument("qubo", help="QUBO file")
    p.add_argument("--slices", type=int, default=100)
    p.add_argument("--total-us", type=float, default=1000.0)
    p.add_argument("--reads", type=int, default=200)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--quench-us", type=float, default=1.0)
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("heatmap", parents=[_common(sampler=False)], help="render flip rates as SVG")
    p.add_argument("flip_rates", help="flip-rate CSV written by 'slice'")
    p.add_argument("--topology", type=_topology, required=True)
    p.add_argument("--svg", default=None, help="output path (default: <out>/heatmap.svg)")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("solve-exact", parents=[_common(sampler=False, out_default=None)],
                       help="exhaustive minimum of a small QUBO")
    p.add_argument("qubo")
    p.set_defaults(func=cmd_solve_exact)

    p = sub.add_parser("schedule", parents=[_common(sampler=False, out_default=None)],
                       help="print a sliced or pause-then-quench schedule as CSV")
    p.add_argument("--total-us", type=float, default=1000.0)
    p.add_argument("--slice-us", type=float, default=None)
    p.add_argument("--quench-us", type=float, default=1.0)
    p.add_argument("--pause", action="store_true")
    p.add_argument("--emit-schedule", default=None, metavar="CSV",
                   help="also write the schedule to this file")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("replay", help="rerun a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="redirect outputs to another directory")
    p.set_defaults(func=cmd_replay)
    return parser


def _resolved_argv(parser: argparse.ArgumentParser, args) -> list[str]:
    """Argument list with every default materialized, suitable for replay."""
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    cmd_parser = sub.choices[args.command]
    argv = [args.command]
    positionals = []
    for action in cmd_parser._actions:
        if action.dest in ("help", "func") or isinstance(action, argparse._HelpAction):
            continue
        value = getattr(args, action.dest)
        if not action.option_strings:
            positionals.append(str(Path(value).resolve()) if action.dest in ("qubo", "flip_rates") else str(value))
            continue
        flag = action.option_strings[-1]
        if isinstance(action, argparse._StoreTrueAction):
            if value:
                argv.append(flag)
        elif value is None:
            continue
        elif action.dest == "topology":
            argv += [flag, value.name]
        elif action.dest in ("out", "svg", "schedule_table", "emit_schedule"):
            argv += [flag, str(Path(value).resolve())]
        elif isinstance(value, (list, tuple)):
            argv += [flag, *(repr(float(v)) for v in value)]
        else:
            argv += [flag, repr(value) if isinstance(value, float) else str(value)]
    return argv + positionals


def _write_manifest(parser, args, extra: dict, started: float) -> None:
    config = {}
    for k, v in vars(args).items():
        if k == "func":
            continue
        config[k] = v.name if k == "topology" else v
    if args.out is None:
        return
    manifest = {
        "command": args.command,
        "argv": _resolved_argv(parser, args),
        "config": config,
        "seed": args.seed,
        "version": __version__,
        "wall_clock_seconds": round(time.monotonic() - started, 3),
        **extra,
    }
    out = Path(args.out)
    atomic_write(out / f"{args.command}.manifest.json", json.dumps(manifest, indent=1, default=str) + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "seed", None) == "random":
        args.seed = entropy_seed()
    started = time.monotonic()
    try:
        extra = args.func(args)
        if args.command != "replay":
            _write_manifest(parser, args, extra, started)
        return 0
    except (UsageError, ParseError, ConfigurationError, SizeError, ValueError) as exc:
        print(f"annealslice {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, AnnealSliceError) as exc:
        print(f"annealslice {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
