"""
Command line entry point.

Subcommands: ``generate-graph``, ``simulate``, ``enumerate``, ``fit`` and
``sweep-pump``. Every option can also come from a ``--config`` file of
``key=value`` lines (keys are long option names, ``-`` or ``_``); options given
on the command line win. Exit codes: 0 success, 1 usage, 2 infeasible physics,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

from dotenv import dotenv_values

from src.conf.config import settings
from src.exceptions import IsingSamplerError, ParameterError
from src.models import CouplingGraph
from src.repository import graphs as repository_graphs
from src.repository import histograms as repository_histograms
from src.repository import manifests as repository_manifests
from src.repository import spectra as repository_spectra
from src.repository.trajectories import TrajectoryWriter
from src.schemas import (
    FitProbability,
    GraphKind,
    MomentForm,
    PumpMode,
    RateIndex,
    RunConfig,
    TieBreak,
    TrajectoryFormat,
)
from src.services import experiments, oracle, sampling
from src.services import graph as graph_service
from src.services.seeds import derive_seed
from src.utils.logging import setup_logging

logger = logging.getLogger(__name__)

TRUE_VALUES = {"1", "true", "yes", "on"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    """``0.5,0.75,1.0`` or ``start:stop:step`` (stop included)."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(part) for part in text.split(":"))
            if step <= 0:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + k * step, 12) for k in range(count)]
        return [float(part) for part in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list like '0.5,1.0' or a range like '0.5:1.5:0.25', got {text!r}")


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"seed must be non-negative, got {value}")
    return value


def _graph_kind(text: str) -> GraphKind:
    try:
        return GraphKind(text.upper())
    except ValueError:
        raise argparse.ArgumentTypeError(f"graph kind must be sk or k, got {text!r}")


def _add_common(sub: argparse.ArgumentParser, command: str) -> None:
    sub.add_argument("--seed", dest="base_seed", type=_seed, default=settings.base_seed,
                     help="base seed every random stream is derived from")
    sub.add_argument("--output-dir", default=str(Path(settings.output_dir) / command))
    sub.add_argument("--gamma", type=float, default=settings.gamma, help="one-photon base rate")


def _add_graph_source(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--graph", help="graph file written by generate-graph")
    sub.add_argument("--kind", type=_graph_kind, help="generate an sk or k graph instead of reading one")
    sub.add_argument("--n", type=int, help="mode count of a generated graph")
    sub.add_argument("--std-dev", type=float, help="SK coupling standard deviation")
    sub.add_argument("--j0", type=float, help="K coupling magnitude")
    sub.add_argument("--rescale-to-feasible", action="store_true",
                     help="shrink couplings until every one-photon rate is non-negative")


def _add_simulation(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--eta", type=float, help="two-photon loss rate (default eta_ratio * gamma)")
    sub.add_argument("--dt", type=float, default=settings.dt)
    sub.add_argument("--t-max", type=float, default=settings.t_max)
    sub.add_argument("--sample-interval", type=float, default=settings.sample_interval)
    sub.add_argument("--burn-in", type=float, default=settings.burn_in)
    sub.add_argument("--blowup-amplitude", type=float, default=settings.blowup_amplitude)
    sub.add_argument("--moment-form", choices=[m.value for m in MomentForm], default=settings.moment_form)
    sub.add_argument("--rate-index", choices=[r.value for r in RateIndex], default=settings.rate_index)
    sub.add_argument("--no-noise", action="store_true", help="unconditional deterministic moments")
    sub.add_argument("--tie-break", choices=[t.value for t in TieBreak], default=TieBreak.PLUS.value)
    sub.add_argument("--min-count", type=int, default=settings.min_count)
    sub.add_argument("--fit-probability", choices=[p.value for p in FitProbability],
                     default=settings.fit_probability)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ising-sampler", description="Gaussian trajectory sampler of dissipatively coupled parametric oscillators")
    parser.add_argument("--config", help="key=value file mirroring the options")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("generate-graph", help="draw an SK or K instance")
    _add_common(sub, "generate-graph")
    sub.add_argument("--kind", type=_graph_kind, required=True)
    sub.add_argument("--n", type=int, required=True)
    sub.add_argument("--std-dev", type=float)
    sub.add_argument("--j0", type=float)
    sub.add_argument("--rescale-to-feasible", action="store_true")
    sub.add_argument("--margin", type=float, default=settings.feasibility_margin)
    sub.add_argument("--out", help="graph file (default <output-dir>/graph.txt)")
    sub.set_defaults(handler=cmd_generate_graph)

    sub = commands.add_parser("simulate", help="run one trajectory and fit a temperature")
    _add_common(sub, "simulate")
    _add_graph_source(sub)
    _add_simulation(sub)
    pump = sub.add_mutually_exclusive_group()
    pump.add_argument("--pump-ratio", type=float, help="pump as G/G_th (default 1.25)")
    pump.add_argument("--pump", type=float, help="absolute pump G")
    sub.add_argument("--mean-field", action="store_true", help="noiseless mean-field equations")
    sub.add_argument("--save-trajectory", action="store_true")
    sub.add_argument("--trajectory-format", choices=[f.value for f in TrajectoryFormat],
                     default=TrajectoryFormat.CSV.value)
    sub.set_defaults(handler=cmd_simulate)

    sub = commands.add_parser("enumerate", help="exact spectrum by brute force")
    _add_common(sub, "enumerate")
    _add_graph_source(sub)
    sub.add_argument("--tol", type=float, help="level grouping tolerance (default 1e-9 max|J|)")
    sub.add_argument("--method", choices=["direct", "gray"], default="direct")
    sub.add_argument("--max-spins", type=int, default=settings.max_enumeration_spins)
    sub.set_defaults(handler=cmd_enumerate)

    sub = commands.add_parser("fit", help="re-fit one or more saved count files")
    _add_common(sub, "fit")
    sub.add_argument("--graph", required=True)
    sub.add_argument("--histogram", nargs="+", required=True, help="counts files, merged before fitting")
    sub.add_argument("--min-count", type=int, default=settings.min_count)
    sub.add_argument("--fit-probability", choices=[p.value for p in FitProbability],
                     default=settings.fit_probability)
    sub.set_defaults(handler=cmd_fit)

    sub = commands.add_parser("sweep-pump", help="effective temperature against G/G_th")
    _add_common(sub, "sweep-pump")
    _add_graph_source(sub)
    _add_simulation(sub)
    sub.add_argument("--ratios", type=_float_list, default="0.5,0.75,1.0,1.25,1.5")
    sub.add_argument("--workers", type=int, default=settings.workers)
    sub.set_defaults(handler=cmd_sweep_pump)
    return parser


def _subparsers(parser: argparse.ArgumentParser) -> dict[str, argparse.ArgumentParser]:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return dict(action.choices)
    return {}


def apply_config_file(parser: argparse.ArgumentParser, path: str) -> None:
    """
    Turn the ``key=value`` lines of ``path`` into parser defaults, so explicit
    options still override them.

    :param parser: Top-level parser.
    :type parser: argparse.ArgumentParser
    :param path: Config file.
    :type path: str
    :raises ParameterError: Unreadable file, unknown key or a value outside the option's choices.
    """
    if not Path(path).is_file():
        raise ParameterError(f"config file {path} not found")
    values = {key.strip().replace("-", "_"): value for key, value in dotenv_values(path).items()}
    if "seed" in values:
        values["base_seed"] = values.pop("seed")
    known = set()
    for sub in _subparsers(parser).values():
        defaults = {}
        for action in sub._actions:
            if action.dest not in values or values[action.dest] is None:
                continue
            known.add(action.dest)
            raw = values[action.dest]
            if isinstance(action, argparse._StoreTrueAction):
                defaults[action.dest] = raw.strip().lower() in TRUE_VALUES
            elif action.nargs in ("+", "*"):
                defaults[action.dest] = raw.split()
            elif action.type is not None:
                try:
                    defaults[action.dest] = action.type(raw)
                except (ValueError, argparse.ArgumentTypeError) as err:
                    raise ParameterError(f"config {action.dest}={raw!r}: {err}")
            else:
                defaults[action.dest] = raw
            if action.choices is not None and defaults[action.dest] not in action.choices:
                choices = ", ".join(map(str, action.choices))
                raise ParameterError(f"config {action.dest}={raw!r}: expected one of {choices}")
            # a required option satisfied by the file
            action.required = False
        sub.set_defaults(**defaults)
    unknown = sorted(set(values) - known)
    if unknown:
        raise ParameterError(f"unknown config keys: {', '.join(unknown)}")


def _load_graph(args) -> CouplingGraph:
    if args.graph:
        g = repository_graphs.load_graph(args.graph)
        if args.rescale_to_feasible:
            g, _ = graph_service.rescale_to_feasible(g, args.gamma, settings.feasibility_margin)
        return g
    if args.kind is None or args.n is None:
        raise ParameterError("give --graph FILE or --kind and --n to generate one")
    scale = args.std_dev if args.kind == GraphKind.SK else args.j0
    g, _, _ = experiments.generate_graph(
        args.kind,
        args.n,
        derive_seed(args.base_seed, "graph"),
        scale,
        args.gamma,
        rescale=args.rescale_to_feasible,
    )
    return g


def _run_config(args, g: CouplingGraph, seed: int) -> RunConfig:
    if args.command == "simulate" and args.pump is not None:
        pump_mode, pump_value = PumpMode.ABSOLUTE, args.pump
    else:
        ratio = getattr(args, "pump_ratio", None)
        pump_mode, pump_value = PumpMode.RATIO, 1.25 if ratio is None else ratio
    params = experiments.build_params(
        gamma=args.gamma,
        eta=settings.eta_ratio * args.gamma if args.eta is None else args.eta,
        dt=args.dt,
        t_max=args.t_max,
        sample_interval=args.sample_interval,
        burn_in=args.burn_in,
        seed=seed,
        noise=not args.no_noise,
        moment_form=MomentForm(args.moment_form),
        rate_index=RateIndex(args.rate_index),
        blowup_amplitude=args.blowup_amplitude,
    )
    try:
        return RunConfig(
            graph_path=args.graph,
            kind=g.kind if not args.graph else None,
            n=g.n,
            graph_seed=g.seed,
            params=params,
            pump_mode=pump_mode,
            pump_value=pump_value,
            output_dir=args.output_dir,
            save_trajectory=getattr(args, "save_trajectory", False),
            trajectory_format=TrajectoryFormat(getattr(args, "trajectory_format", "csv")),
            workers=getattr(args, "workers", 1),
        )
    except ValueError as err:
        raise ParameterError(f"invalid run configuration: {err}")


def _print(report: dict) -> None:
    print(json.dumps(repository_manifests.jsonable(report), indent=2))


def cmd_generate_graph(args) -> int:
    scale = args.std_dev if args.kind == GraphKind.SK else args.j0
    seed = derive_seed(args.base_seed, "graph")
    out = Path(args.out) if args.out else Path(args.output_dir) / "graph.txt"
    params = {"kind": args.kind.value, "n": args.n, "scale": scale, "gamma": args.gamma,
              "rescale_to_feasible": args.rescale_to_feasible}
    seeds = {"base_seed": args.base_seed, "graph": seed}
    try:
        g, factor, report = experiments.generate_graph(
            args.kind, args.n, seed, scale, args.gamma, args.rescale_to_feasible, args.margin
        )
    except IsingSamplerError:
        repository_manifests.write_manifest(
            args.output_dir, args.command, params, None, seeds, status="failed", outputs=[]
        )
        raise
    repository_graphs.save_graph(g, out)
    params["rescale_factor"] = factor
    repository_manifests.write_manifest(
        args.output_dir, args.command, params, g.digest, seeds, status="ok", outputs=[str(out)]
    )
    _print({"graph": str(out), "n": g.n, "kind": g.kind.value, "seed": seed,
            "threshold_pump_over_gamma": report["threshold_pump"] / args.gamma, **report})
    return 0


def _write_energies(path: Path, recorder: sampling.SpinRecorder) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["t", "energy", "canonical_index"])
        for row in zip(recorder.times, recorder.energies, recorder.indices):
            writer.writerow([repr(row[0]), repr(row[1]), row[2]])


def cmd_simulate(args) -> int:
    g = _load_graph(args)
    seed = derive_seed(args.base_seed, "trajectory", 0)
    config = _run_config(args, g, seed)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    sinks = []
    writer = None
    if config.save_trajectory:
        suffix = "csv" if config.trajectory_format == TrajectoryFormat.CSV else "bin"
        writer = TrajectoryWriter(out / f"trajectory.{suffix}", g.n, config.trajectory_format)
        sinks.append(writer)
        outputs.append(writer.path.name)
    try:
        outcome = experiments.simulate(
            g,
            config.params,
            pump_mode=config.pump_mode,
            pump_value=config.pump_value,
            min_count=args.min_count,
            fit_probability=FitProbability(args.fit_probability),
            tie_break=TieBreak(args.tie_break),
            mean_field=args.mean_field,
            sinks=sinks,
        )
    finally:
        if writer is not None:
            writer.close()

    if not args.graph:
        repository_graphs.save_graph(g, out / "graph.txt")
        outputs.append("graph.txt")
    hist = outcome.recorder.histogram
    repository_histograms.save_counts(hist, out / "counts.csv")
    _write_energies(out / "energies.csv", outcome.recorder)
    outputs += ["counts.csv", "energies.csv"]
    if outcome.levels:
        repository_histograms.save_levels(outcome.levels, out / "histogram.csv")
        outputs.append("histogram.csv")
    report = {
        "pump": outcome.params.pump,
        "pump_ratio": outcome.pump_ratio,
        "total_samples": hist.total,
        "success_probability": outcome.success_probability,
        "autocorrelation_time": outcome.autocorrelation_time,
        "fit": repository_manifests.fit_report(outcome.fit) if outcome.fit else None,
        "fit_error": outcome.fit_error,
        "blowup": outcome.blowup.to_dict() if outcome.blowup else None,
    }
    if outcome.spectrum is not None and hist.total:
        index, _ = sampling.most_visited(hist)
        report["ground_energy"] = outcome.spectrum.ground_energy
        report["most_visited_energy"] = outcome.spectrum.levels[outcome.spectrum.level_index[index]].energy
    repository_manifests.write_json(report, out / "fit.json")
    outputs.append("fit.json")
    repository_manifests.write_manifest(
        out, args.command,
        params={**json.loads(outcome.params.json()), "pump_ratio": outcome.pump_ratio,
                "pump_mode": config.pump_mode.value, "graph_path": config.graph_path,
                "mean_field": args.mean_field, "tie_break": args.tie_break,
                "min_count": args.min_count, "fit_probability": args.fit_probability},
        graph_digest=g.digest,
        seeds={"base_seed": args.base_seed, "graph": g.seed, "trajectory": seed},
        status=outcome.status,
        outputs=outputs,
    )
    _print(report)
    error = outcome.error
    if error is not None:
        logger.error("%s (partial outputs in %s)", error.message, out)
        return error.exit_code
    return 0


def cmd_enumerate(args) -> int:
    g = _load_graph(args)
    spectrum = oracle.enumerate_spectrum(g, tol=args.tol, method=args.method, max_spins=args.max_spins)
    out = Path(args.output_dir)
    repository_spectra.save_spectrum(spectrum, out / "spectrum.csv")
    report = repository_spectra.ground_state_report(spectrum)
    repository_manifests.write_json(report, out / "ground_states.json")
    repository_manifests.write_manifest(
        out, args.command,
        params={"graph_path": args.graph, "tol": spectrum.tol, "method": args.method},
        graph_digest=g.digest,
        seeds={"base_seed": args.base_seed, "graph": g.seed},
        status="ok",
        outputs=["spectrum.csv", "ground_states.json"],
    )
    _print(report)
    return 0


def cmd_fit(args) -> int:
    g = repository_graphs.load_graph(args.graph)
    hist = sampling.merge_histograms(*(repository_histograms.load_counts(p) for p in args.histogram))
    spectrum = oracle.enumerate_spectrum(g)
    levels = sampling.per_energy_probabilities(hist, spectrum)
    fit = sampling.fit_temperature(
        sampling.fit_points(levels, FitProbability(args.fit_probability)),
        args.min_count,
        total_samples=hist.total,
    )
    out = Path(args.output_dir)
    repository_histograms.save_levels(levels, out / "histogram.csv")
    report = {
        "histograms": list(args.histogram),
        "total_samples": hist.total,
        "success_probability": sampling.success_probability(hist, spectrum),
        "fit": repository_manifests.fit_report(fit),
    }
    repository_manifests.write_json(report, out / "fit.json")
    repository_manifests.write_manifest(
        out, args.command,
        params={"graph_path": args.graph, "histograms": list(args.histogram),
                "min_count": args.min_count, "fit_probability": args.fit_probability},
        graph_digest=g.digest,
        seeds={"base_seed": args.base_seed},
        status="ok",
        outputs=["histogram.csv", "fit.json"],
    )
    _print(report)
    return 0


SWEEP_FIELDS = ["g_ratio", "t_eff", "std_err", "r_squared", "samples", "pump", "seed", "error"]
LINE_FIELDS = ["g_ratio", "energy", "count", "log_p_observed", "log_p_fitted"]


def _write_rows(path: Path, fields: Sequence[str], rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def cmd_sweep_pump(args) -> int:
    g = _load_graph(args)
    config = _run_config(args, g, derive_seed(args.base_seed, "trajectory", 0))
    result = experiments.sweep(
        g,
        config.params,
        args.ratios,
        base_seed=args.base_seed,
        workers=config.workers,
        min_count=args.min_count,
        fit_probability=FitProbability(args.fit_probability),
    )
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [
        {
            "g_ratio": p.g_ratio,
            "t_eff": p.fit.t_eff if p.fit else "",
            "std_err": p.fit.std_err if p.fit else "",
            "r_squared": p.fit.r_squared if p.fit else "",
            "samples": p.samples,
            "pump": p.pump,
            "seed": p.seed,
            "error": p.error or "",
        }
        for p in result.points
    ]
    _write_rows(out / "sweep.csv", SWEEP_FIELDS, rows)
    _write_rows(out / "fitted_lines.csv", LINE_FIELDS, experiments.fitted_lines(result))
    outputs = ["sweep.csv", "fitted_lines.csv"]
    if not args.graph:
        repository_graphs.save_graph(g, out / "graph.txt")
        outputs.append("graph.txt")
    status = "ok" if not result.failures else ("failed" if len(result.failures) == len(result.points) else "partial")
    repository_manifests.write_manifest(
        out, args.command,
        params={**json.loads(config.params.json(exclude={"seed", "pump"})), "ratios": list(args.ratios),
                "workers": config.workers, "graph_path": config.graph_path, "min_count": args.min_count,
                "fit_probability": args.fit_probability},
        graph_digest=g.digest,
        seeds={"base_seed": args.base_seed, "graph": g.seed,
               "trajectory": [p.seed for p in result.points]},
        status=status,
        outputs=outputs,
        extra={"crossing": list(result.crossing) if result.crossing else None},
    )
    _print({"points": rows, "crossing": list(result.crossing) if result.crossing else None})
    if result.failures:
        logger.error("%d of %d sweep points failed", len(result.failures), len(result.points))
        return 3
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    config_parser = argparse.ArgumentParser(add_help=False)
    config_parser.add_argument("--config")
    known, _ = config_parser.parse_known_args(argv)
    try:
        if known.config:
            apply_config_file(parser, known.config)
    except IsingSamplerError as err:
        print(f"ising-sampler: error: {err.message}", file=sys.stderr)
        return err.exit_code
    args = parser.parse_args(argv)

    level = settings.log_level
    if args.verbose:
        level = "DEBUG"
    elif args.quiet:
        level = "WARNING"
    setup_logging(settings.log_config, level)

    try:
        return args.handler(args)
    except IsingSamplerError as err:
        logger.error(err.message)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
