"""Command-line interface.

Subcommands: speed, steady, classify, simulate, diagnose, sweep,
preset-list. Exit codes: 0 success, 1 validation error (bad usage, bad
config, inadmissible input values), 2 runtime failure. All numeric output
carries 17 significant digits. The KPPW_OUT_DIR environment variable
overrides configured output directories; an explicit --out flag wins over
both.
"""

import argparse
import os
import sys

import numpy as np

from . import diagnostics as diag
from . import io as kio
from . import pde, scenarios
from .config import DEFAULTS_HELP, config_from_scenario, parse_config, serialize_config
from .dispersion import DispersionInput, decay_roots, edge_eigenvector, minimal_speed
from .errors import ConfigValidationError, KppwError
from .kinetics import (
    LotkaVolterra,
    SystemSpec,
    classify_two_species,
    constant_solutions_two_species,
    two_species_spec,
)

_PRESET_SUMMARY = {
    "fig1_bistable": "two-species bistable terrace; the strong slow competitor retakes the domain",
    "fig2_monostable": "two-species coexistence invasion with a transient single-species bump (takes --eta)",
    "h6_collinearity": "separated competition; the front collapses onto the dominant eigendirection",
    "saddle_connection_5_1": "three positive constant states; diagonal front connecting 0 to the saddle",
    "diagonal_5_4": "species-symmetric system; equal components follow the scalar logistic front",
}


class _UsageError(ConfigValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt(x):
    return kio.fmt(x)


def _vec_arg(text):
    return np.array([float(tok) for tok in text.split(",")], dtype=float)


def _build_parser():
    parser = _Parser(
        prog="kppw",
        description="Spectral quantities and desk-scale front simulation of "
        "non-cooperative KPP reaction-diffusion systems.",
        epilog=DEFAULTS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_source(p, with_eta=True):
        p.add_argument("--preset", help="preset scenario name (see preset-list)")
        p.add_argument("--config", help="path to a config file")
        if with_eta:
            p.add_argument("--eta", type=float, help="mutation rate for fig2_monostable")

    p_speed = sub.add_parser("speed", help="minimal wave speed and decay rates")
    add_source(p_speed)
    p_speed.add_argument("--d", type=_vec_arg, help="diffusion rates, comma list")
    p_speed.add_argument("--L", type=_vec_arg, help="interaction matrix, row-major comma list")
    p_speed.add_argument("--c", type=float, help="also print the decay roots at this speed")

    p_steady = sub.add_parser("steady", help="constant steady states with stability tags")
    add_source(p_steady)

    p_classify = sub.add_parser("classify", help="two-species competition regime")
    p_classify.add_argument("--r", type=_vec_arg, required=True, help="growth rates r1,r2")
    p_classify.add_argument("--C", type=_vec_arg, required=True, help="competition matrix, row-major")

    p_sim = sub.add_parser("simulate", help="run a scenario and write snapshots + report")
    add_source(p_sim)
    p_sim.add_argument("--out", help="output directory")

    p_diag = sub.add_parser("diagnose", help="recompute diagnostics from a run directory")
    p_diag.add_argument("--run", required=True, help="directory holding snap_<i>.csv files")
    p_diag.add_argument("--front-component", default="total")
    p_diag.add_argument("--front-level", type=float, default=0.5)
    p_diag.add_argument("--out", help="write the report to this file as well")

    p_sweep = sub.add_parser("sweep", help="vanishing-mutation sweep")
    p_sweep.add_argument("--preset", default="fig2_monostable")
    p_sweep.add_argument("--etas", required=True, help="descending comma list of mutation rates")
    p_sweep.add_argument("--out", help="output directory for sweep.csv")

    sub.add_parser("preset-list", help="list preset scenario names")
    return parser


def _scenario_from_args(args):
    if getattr(args, "config", None):
        with open(args.config) as fh:
            config = parse_config(fh.read())
        return config.to_scenario(), config
    if getattr(args, "preset", None):
        s = scenarios.preset(args.preset, eta=getattr(args, "eta", None))
        return s, config_from_scenario(s)
    raise _UsageError("give --preset or --config")


def _spec_from_args(args) -> SystemSpec:
    scenario, _ = _scenario_from_args(args)
    return scenario.spec


def _cmd_speed(args):
    if args.d is not None or args.L is not None:
        if args.d is None or args.L is None:
            raise _UsageError("--d and --L go together")
        n = args.d.size
        inp = DispersionInput(args.d, args.L.reshape(n, n))
    else:
        spec = _spec_from_args(args)
        inp = DispersionInput(spec.d, spec.L)
    c_star, mu_star = minimal_speed(inp)
    print(f"c_star = {_fmt(c_star)}")
    print(f"mu_star = {_fmt(mu_star)}")
    if args.c is not None:
        roots = decay_roots(inp, args.c)
        direction = edge_eigenvector(inp, roots.mu1)
        print(f"c = {_fmt(args.c)}")
        print(f"mu_1 = {_fmt(roots.mu1)}")
        print(f"mu_2 = {_fmt(roots.mu2)}")
        print(f"k_c = {roots.k_c}")
        print(f"n_mu_c = {kio.fmt_vec(direction)}")
    return 0


def _cmd_steady(args):
    spec = _spec_from_args(args)
    for state in constant_solutions_two_species(spec):
        print(f"u = ({kio.fmt_vec(state.value)})  stability = {state.stability.value}")
    return 0


def _cmd_classify(args):
    if args.r.size != 2 or args.C.size != 4:
        raise _UsageError("classify needs --r with 2 entries and --C with 4 (row-major)")
    print(classify_two_species(args.r, args.C.reshape(2, 2)).value)
    return 0


def _outdir(args, scenario_name, configured=None):
    # precedence: --out flag, then KPPW_OUT_DIR, then the config's dir
    if getattr(args, "out", None):
        return args.out
    env = os.environ.get("KPPW_OUT_DIR")
    if env:
        return os.path.join(env, scenario_name)
    if configured:
        return configured
    return os.path.join("runs", scenario_name)


def _cmd_simulate(args):
    scenario, config = _scenario_from_args(args)
    outdir = _outdir(args, scenario.name, config.outdir)
    snaps, report = scenarios.run_scenario(scenario)
    kio.write_run(outdir, snaps, report, serialize_config(config))
    print(f"wrote {len(snaps)} snapshots to {outdir}")
    if report.measured_speed is not None:
        print(f"measured_speed = {_fmt(report.measured_speed)}")
    if report.back is not None:
        print(f"back_state = {kio.fmt_vec(report.back)}")
    return 0


def _cmd_diagnose(args):
    fields = kio.read_run(args.run)
    comp = args.front_component
    comp = comp if comp == "total" else int(comp)
    report = diag.DiagnosticsReport()
    report.front = diag.track_front(fields, comp, args.front_level)
    try:
        report.measured_speed = diag.spreading_speed(report.front)
    except KppwError:
        report.measured_speed = None
    final = fields[-1]
    try:
        report.edge = diag.edge_decay_fit(final)
    except KppwError:
        report.edge = None
    report.back = diag.back_state(final)
    report.plateaus = diag.plateau_detect(final)
    text = kio.format_report(report)
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    return 0


def _cmd_sweep(args):
    etas = [float(tok) for tok in args.etas.split(",")]
    base = scenarios.preset(args.preset)
    records = scenarios.sweep_eta(base, etas)
    outdir = _outdir(args, f"{base.name}_sweep")
    kio.write_sweep_csv(os.path.join(outdir, "sweep.csv"), records, base.spec.n)
    sys.stdout.write(kio.format_sweep_csv(records, base.spec.n))
    print(f"wrote {outdir}/sweep.csv")
    return 0


def _cmd_preset_list(_args):
    for name in scenarios.PRESET_NAMES:
        print(f"{name}: {_PRESET_SUMMARY[name]}")
    return 0


_COMMANDS = {
    "speed": _cmd_speed,
    "steady": _cmd_steady,
    "classify": _cmd_classify,
    "simulate": _cmd_simulate,
    "diagnose": _cmd_diagnose,
    "sweep": _cmd_sweep,
    "preset-list": _cmd_preset_list,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except KppwError as exc:
        kind = "validation error" if isinstance(exc, ValueError) else "runtime failure"
        print(f"kppw: {kind}: {exc}", file=sys.stderr)
        return 1 if isinstance(exc, ValueError) else 2
    except OSError as exc:
        print(f"kppw: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
