"""Command-line surface: model inspection, single runs, sweeps, campaigns.

Subcommands
-----------
spectrum   eigenvalues, gaps and the degeneracy report for one coupling draw
evolve     propagate the boundary-state transfer under one pulse
sweep      2D fidelity landscape over a pulse family's parameter box
optimize   run one scheme (grid/random/grape/dcrab) on one draw
campaign   full (trial x t_f x scheme) campaign from an INI config file
compare    per-trial fidelity differences between campaign schemes

Every command is deterministic given its flags, config and seed; outputs
land in one directory per invocation (timestamp + argument hash, or
``--out``), always including a manifest that echoes the resolved
configuration. Numbers are printed with 12 significant digits.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .csvio import fmt, write_csv
from .dynamics import ControlProblem, PropagationSettings
from .harness import (
    ExperimentConfig,
    SchemeSpec,
    build_problem,
    compare_schemes,
    draw_couplings,
    landscape_sweep,
    read_campaign_csv,
    run_campaign,
    run_scheme_cell,
    write_comparison_csv,
    write_landscape_csv,
)
from .optimizers import SearchBox
from .pulses import (
    GaussianFamily,
    GaussianPulse,
    PiecewiseConstantPulse,
    PolynomialFamily,
    solve_polynomial,
    write_pulse_csv,
)
from .seeding import derive_seed
from .spin_model import Breaker, SpinChainSpec, degeneracy_report, diagonalize, gap_profile, static_hamiltonian

_BREAKERS = {"single": Breaker.SINGLE_SITE_Z, "sum": Breaker.FULL_SUM_Z}

_CAMPAIGN_KEYS = {
    "master_seed": int, "n_trials": int, "n_spins": int, "beta": float,
    "breaker": str, "index_base": str, "tf_values": str, "export_pulses": bool,
}
_PROPAGATION_KEYS = {
    "substeps": int, "adaptive": bool, "convergence_tol": float,
    "max_substeps": int, "method": str,
}


class ConfigError(Exception):
    pass


def _coerce(text: str):
    for caster in (int, float):
        try:
            return caster(text)
        except ValueError:
            pass
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    return text.strip()


def _parse_bool(text: str) -> bool:
    value = _coerce(text)
    if not isinstance(value, bool):
        raise ConfigError(f"expected true/false, got {text!r}")
    return value


def load_config(path: str) -> ExperimentConfig:
    """Parse the INI experiment config; unknown sections or keys are errors."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    data: dict = {}
    schemes: list[SchemeSpec] = []
    for section in parser.sections():
        if section == "campaign":
            for key, raw in parser.items(section):
                if key not in _CAMPAIGN_KEYS:
                    raise ConfigError(f"[campaign] unknown key {key!r}")
                caster = _CAMPAIGN_KEYS[key]
                if key == "tf_values":
                    data[key] = tuple(float(v) for v in raw.split(","))
                elif caster is bool:
                    data[key] = _parse_bool(raw)
                else:
                    data[key] = caster(raw)
        elif section == "propagation":
            for key, raw in parser.items(section):
                if key not in _PROPAGATION_KEYS:
                    raise ConfigError(f"[propagation] unknown key {key!r}")
                caster = _PROPAGATION_KEYS[key]
                data[key] = _parse_bool(raw) if caster is bool else caster(raw)
        elif section.startswith("scheme:"):
            scheme_id = section.split(":", 1)[1].strip()
            items = dict(parser.items(section))
            if "kind" not in items:
                raise ConfigError(f"[{section}] needs a 'kind' key")
            kind = items.pop("kind")
            options = {key: _coerce(value) for key, value in items.items()}
            schemes.append(SchemeSpec.make(scheme_id, kind, **options))
        else:
            raise ConfigError(f"unknown config section [{section}]")
    for required in ("master_seed", "n_trials", "n_spins"):
        if required not in data:
            raise ConfigError(f"[campaign] missing required key {required!r}")
    if not schemes:
        raise ConfigError("config defines no [scheme:<id>] sections")
    try:
        return ExperimentConfig(schemes=tuple(schemes), **data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _out_dir(args, payload) -> str:
    if getattr(args, "out", None):
        path = args.out
    else:
        digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:8]
        stamp = time.strftime("%Y%m%d-%H%M%S")
        path = os.path.join("runs", f"{stamp}-{digest}")
    os.makedirs(path, exist_ok=True)
    return path


def _write_manifest(out_dir: str, command: str, payload: dict) -> None:
    manifest = {
        "schema": "spinctrl.manifest.v1",
        "version": __version__,
        "command": command,
        "resolved": payload,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def _settings_from_args(args) -> PropagationSettings:
    return PropagationSettings(
        substeps=args.substeps,
        convergence_tol=args.tol,
        max_substeps=args.max_substeps,
        method=args.method,
        adaptive=not args.fixed_substeps,
    )


def _add_propagation_flags(parser, substeps=128, tol=1e-10, max_substeps=65536):
    parser.add_argument("--substeps", type=int, default=substeps)
    parser.add_argument("--tol", type=float, default=tol, help="fidelity convergence tolerance")
    parser.add_argument("--max-substeps", dest="max_substeps", type=int, default=max_substeps)
    parser.add_argument("--method", choices=("midpoint", "splitstep"), default="midpoint")
    parser.add_argument(
        "--fixed-substeps", action="store_true",
        help="disable adaptive refinement and use --substeps as-is",
    )


def _chain_spec(args) -> SpinChainSpec:
    couplings = draw_couplings(args.seed, 1, args.spins).trial_couplings(0)
    return SpinChainSpec(
        n_spins=args.spins, couplings=couplings, beta=args.beta, breaker=_BREAKERS[args.breaker],
    )


def _parse_params(text: str) -> dict[str, float]:
    out = {}
    if text:
        for pair in text.split(","):
            key, _, value = pair.partition("=")
            if not _:
                raise ConfigError(f"bad parameter {pair!r}, expected name=value")
            out[key.strip()] = float(value)
    return out


def _build_pulse(args, t_f: float):
    params = _parse_params(args.params or "")
    if args.pulse == "zero":
        return PiecewiseConstantPulse((0.0,), t_f)
    if args.pulse == "gaussian":
        try:
            return GaussianPulse(params.pop("a"), params.pop("omega"), t_f)
        except KeyError as exc:
            raise ConfigError(f"gaussian pulse needs a=..,omega=.. (missing {exc})") from exc
    if args.pulse == "poly":
        keys = sorted((k for k in params if k.startswith("lambda")), key=lambda k: (len(k), k))
        lambdas = [params.pop(k) for k in keys]
        if not lambdas:
            raise ConfigError("poly pulse needs lambda1=..[,lambda2=..,...]")
        return solve_polynomial(lambdas, t_f)
    if args.pulse == "piecewise":
        if not args.bins:
            raise ConfigError("piecewise pulse needs --bins v1,v2,...")
        values = tuple(float(v) for v in args.bins.split(","))
        return PiecewiseConstantPulse(values, t_f)
    raise ConfigError(f"unknown pulse family {args.pulse!r}")


# ---------------------------------------------------------------------------
# subcommands

def cmd_spectrum(args) -> int:
    payload = {
        "spins": args.spins, "seed": args.seed, "breaker": args.breaker,
        "beta": args.beta, "tol": args.tol,
    }
    out_dir = _out_dir(args, payload)
    _write_manifest(out_dir, "spectrum", payload)
    spec = _chain_spec(args)
    spectrum = diagonalize(static_hamiltonian(spec))
    gaps = gap_profile(spectrum)
    report = degeneracy_report(spec, tol=args.tol)
    rows = []
    for k, energy in enumerate(spectrum.eigenvalues, start=1):
        gap = gaps[k - 1] if k - 1 < gaps.size else ""
        rows.append((k, energy, gap))
    path = os.path.join(out_dir, "spectrum.csv")
    write_csv(
        path, "spinctrl.spectrum.v1", ["k", "E_k", "gap_k"], rows,
        meta={"n_spins": args.spins, "seed": args.seed, "breaker": args.breaker, "beta": args.beta},
    )
    print(f"pair_count={report.pair_count}")
    print(f"min_gap={fmt(report.min_gap)}")
    print(f"wrote {path}")
    return 0


def cmd_evolve(args) -> int:
    payload = {
        "spins": args.spins, "seed": args.seed, "tf": args.tf, "pulse": args.pulse,
        "params": args.params, "bins": args.bins, "breaker": args.breaker, "beta": args.beta,
    }
    out_dir = _out_dir(args, payload)
    _write_manifest(out_dir, "evolve", payload)
    spec = _chain_spec(args)
    problem = build_problem_from_spec(spec, args.tf)
    pulse = _build_pulse(args, args.tf)
    settings = _settings_from_args(args)
    result = problem.evolve(pulse, settings=settings, record_trajectory=args.trajectory)
    f_s = problem.subspace_fidelity(pulse, settings=settings)
    print(f"F={fmt(result.fidelity)}")
    print(f"F_S={fmt(f_s)}")
    print(f"substeps={result.substeps}")
    print(f"converged={'yes' if result.converged else 'NO (substep cap reached)'}")
    pulse_path = os.path.join(out_dir, "pulse.csv")
    write_pulse_csv(pulse, pulse_path, label=args.pulse)
    if args.trajectory and result.states is not None:
        rows = [
            (t, float(np.abs(np.vdot(problem.psi_f, state)) ** 2))
            for t, state in zip(result.times, result.states)
        ]
        write_csv(
            os.path.join(out_dir, "trajectory.csv"), "spinctrl.trajectory.v1",
            ["t", "F"], rows, meta={"tf": args.tf},
        )
    print(f"wrote {pulse_path}")
    return 0


def build_problem_from_spec(spec: SpinChainSpec, t_f: float) -> ControlProblem:
    return ControlProblem.for_chain(spec, t_f=t_f)


def cmd_sweep(args) -> int:
    payload = {
        "spins": args.spins, "seed": args.seed, "tf": args.tf, "family": args.family,
        "res": args.res, "bounds": args.bounds,
    }
    out_dir = _out_dir(args, payload)
    _write_manifest(out_dir, "sweep", payload)
    spec = _chain_spec(args)
    problem = build_problem_from_spec(spec, args.tf)
    if args.family == "gaussian":
        family = GaussianFamily(t_f=args.tf)
        bounds = ((-50.0, 50.0), (0.02, 4.0))
    elif args.family == "poly2":
        family = PolynomialFamily(t_f=args.tf, n_lambda=2)
        bounds = ((-30.0, 30.0), (-30.0, 30.0))
    else:
        print(f"error: unknown family {args.family!r}", file=sys.stderr)
        return 1
    if args.bounds:
        values = [float(v) for v in args.bounds.split(",")]
        if len(values) != 4:
            print("error: --bounds needs x_lo,x_hi,y_lo,y_hi", file=sys.stderr)
            return 1
        bounds = ((values[0], values[1]), (values[2], values[3]))
    box = SearchBox(bounds=bounds, resolution=(args.res, args.res))
    grid = landscape_sweep(
        problem, family, box, settings=_settings_from_args(args), trial=args.seed,
    )
    path = os.path.join(out_dir, "landscape.csv")
    write_landscape_csv(grid, path)
    print(f"best_F={fmt(float(grid.values.max()))}")
    print(f"wrote {path}")
    return 0


def cmd_optimize(args) -> int:
    payload = {
        "spins": args.spins, "seed": args.seed, "tf": args.tf, "scheme": args.scheme,
        "options": args.opt or [],
    }
    out_dir = _out_dir(args, payload)
    _write_manifest(out_dir, "optimize", payload)
    options = {}
    for item in args.opt or []:
        key, _, value = item.partition("=")
        if not _:
            print(f"error: bad --opt {item!r}, expected key=value", file=sys.stderr)
            return 1
        options[key] = _coerce(value)
    scheme = SchemeSpec.make(args.scheme, args.scheme, **options)
    config = ExperimentConfig(
        master_seed=args.seed, n_trials=1, n_spins=args.spins,
        schemes=(scheme,), tf_values=(args.tf,), beta=args.beta, breaker=args.breaker,
    )
    spec = _chain_spec(args)
    problem = build_problem_from_spec(spec, args.tf)
    cell_seed = derive_seed(args.seed, 0, 0, scheme.scheme_id)
    try:
        best_f, params, n_evals, pulse = run_scheme_cell(problem, scheme, cell_seed, config)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"best_F={fmt(best_f)}")
    print(f"n_evals={n_evals}")
    for key, value in sorted(params.items()):
        print(f"{key}={fmt(value)}")
    if pulse is not None:
        pulse_path = os.path.join(out_dir, "pulse.csv")
        write_pulse_csv(pulse, pulse_path, label=scheme.scheme_id)
        print(f"wrote {pulse_path}")
    with open(os.path.join(out_dir, "result.json"), "w") as fh:
        json.dump(
            {"best_F": best_f, "n_evals": n_evals, "params": params, "scheme": args.scheme},
            fh, indent=2, sort_keys=True,
        )
    return 0


def cmd_campaign(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    out_dir = _out_dir(args, config.to_dict())
    result = run_campaign(config, out_dir, resume=not args.no_resume, workers=args.workers)
    print(f"records={len(result.records)}")
    print(f"failures={len(result.failures)}")
    print(f"wrote {result.csv_path}")
    if result.failures:
        for name, message in result.failures:
            print(f"failed cell {name}: {message}", file=sys.stderr)
        return 2
    return 0


def cmd_compare(args) -> int:
    payload = {"campaign": args.campaign, "reference": args.reference}
    out_dir = _out_dir(args, payload)
    _write_manifest(out_dir, "compare", payload)
    try:
        records = read_campaign_csv(args.campaign)
        record = compare_schemes(records, args.reference)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    path = os.path.join(out_dir, "compare.csv")
    write_comparison_csv(record, path)
    for (t_f, scheme_id), median in record.medians:
        print(f"median_delta tf={fmt(t_f)} scheme={scheme_id}: {fmt(median)}")
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinctrl",
        description="Subspace-transfer control of a random-coupling transverse Ising ring.",
    )
    parser.add_argument("--version", action="version", version=f"spinctrl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common_model_flags(p):
        p.add_argument("--spins", type=int, required=True)
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--breaker", choices=("single", "sum"), default="single")
        p.add_argument("--beta", type=float, default=0.001)
        p.add_argument("--out", help="output directory (default: runs/<stamp>-<hash>)")

    p = sub.add_parser("spectrum", help="eigenvalues, gaps, degeneracy report")
    common_model_flags(p)
    p.add_argument("--tol", type=float, default=1e-9, help="degeneracy tolerance")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("evolve", help="propagate the transfer problem under one pulse")
    common_model_flags(p)
    p.add_argument("--tf", type=float, required=True)
    p.add_argument("--pulse", choices=("zero", "gaussian", "poly", "piecewise"), required=True)
    p.add_argument("--params", help="comma list, e.g. a=10,omega=1 or lambda1=-0.4,lambda2=1")
    p.add_argument("--bins", help="comma list of bin values for --pulse piecewise")
    p.add_argument("--trajectory", action="store_true", help="write fidelity-vs-time samples")
    _add_propagation_flags(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("sweep", help="2D fidelity landscape")
    common_model_flags(p)
    p.add_argument("--tf", type=float, required=True)
    p.add_argument("--family", choices=("gaussian", "poly2"), required=True)
    p.add_argument("--res", type=int, default=101, help="grid resolution per axis")
    p.add_argument("--bounds", help="override box: x_lo,x_hi,y_lo,y_hi")
    _add_propagation_flags(p, substeps=256, tol=1e-6, max_substeps=8192)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize", help="run one scheme on one coupling draw")
    common_model_flags(p)
    p.add_argument("--tf", type=float, required=True)
    p.add_argument(
        "--scheme",
        choices=("gaussian_grid", "gaussian_random", "poly_grid", "poly_random", "grape", "dcrab"),
        required=True,
    )
    p.add_argument("--opt", action="append", help="scheme option key=value (repeatable)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("campaign", help="run a campaign from an INI config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-resume", action="store_true")
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("compare", help="fidelity differences vs a reference scheme")
    p.add_argument("--campaign", required=True, help="path to campaign.csv")
    p.add_argument("--reference", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
