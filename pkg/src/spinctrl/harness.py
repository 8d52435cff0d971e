"""Reproducible experiment campaigns over coupling draws, times and schemes.

A campaign is a grid of cells (trial, t_f, scheme). Couplings are drawn
once per trial from the master seed and shared by every scheme, so scheme
comparisons are fair by construction; each record carries a short hash of
its trial's couplings so this can be audited from the output files alone.
Cells are computed independently with per-cell derived seeds, written as
individual JSON files, and merged into one ordered CSV, which makes
campaigns resumable and their outputs independent of execution order.

Wall-clock columns are the one exception to byte-reproducibility; the
campaign fingerprint and the determinism checks therefore cover every
column except ``wall_s``.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import __version__
from .csvio import fmt, read_csv, write_csv
from .dynamics import ControlProblem, PropagationSettings
from .optimizers import (
    DcrabConfig,
    GrapeConfig,
    SearchBox,
    dcrab_optimize,
    grape_optimize,
    grid_search,
    random_search,
)
from .pulses import GaussianFamily, PolynomialFamily, write_pulse_csv
from .seeding import derive_seed, rng_for
from .spin_model import Breaker, IndexBase, SpinChainSpec

CAMPAIGN_SCHEMA = "spinctrl.campaign.v1"
LANDSCAPE_SCHEMA = "spinctrl.landscape.v1"
COMPARE_SCHEMA = "spinctrl.compare.v1"

_BREAKERS = {"single": Breaker.SINGLE_SITE_Z, "sum": Breaker.FULL_SUM_Z}
_INDEX_BASES = {"one": IndexBase.ONE_BASED, "zero": IndexBase.ZERO_BASED}


@dataclass(frozen=True)
class TrialSet:
    """The shared coupling draws: one row of J values per trial."""

    master_seed: int
    n_spins: int
    couplings: np.ndarray

    @property
    def n_trials(self) -> int:
        return self.couplings.shape[0]

    def trial_couplings(self, trial: int) -> tuple[float, ...]:
        return tuple(self.couplings[trial])

    def trial_checksum(self, trial: int) -> str:
        return _couplings_sha(self.couplings[trial])

    def checksum(self) -> str:
        joined = ";".join(
            ",".join(fmt(v) for v in row) for row in self.couplings
        )
        return hashlib.sha256(joined.encode()).hexdigest()[:16]


def _couplings_sha(values) -> str:
    text = ",".join(fmt(v) for v in values)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def draw_couplings(master_seed: int, n_trials: int, n_spins: int) -> TrialSet:
    """Uniform J in [-1, 1], one independent stream per trial index."""
    if n_trials < 1:
        raise ValueError("need at least one trial")
    rows = [
        rng_for(master_seed, "couplings", trial).uniform(-1.0, 1.0, n_spins)
        for trial in range(n_trials)
    ]
    return TrialSet(master_seed=master_seed, n_spins=n_spins, couplings=np.asarray(rows))


@dataclass(frozen=True)
class SchemeSpec:
    """One scheme column of the campaign: a registered kind plus options."""

    scheme_id: str
    kind: str
    options: tuple[tuple[str, object], ...] = ()

    def opts(self) -> dict:
        return dict(self.options)

    @classmethod
    def make(cls, scheme_id: str, kind: str, **options) -> "SchemeSpec":
        return cls(scheme_id=scheme_id, kind=kind, options=tuple(sorted(options.items())))


@dataclass(frozen=True)
class ExperimentConfig:
    master_seed: int
    n_trials: int
    n_spins: int
    schemes: tuple[SchemeSpec, ...]
    tf_values: tuple[float, ...] = (0.1, 1.0, 5.0)
    beta: float = 0.001
    breaker: str = "single"
    index_base: str = "one"
    substeps: int = 256
    adaptive: bool = True
    convergence_tol: float = 1e-6
    max_substeps: int = 8192
    method: str = "midpoint"
    export_pulses: bool = False

    def __post_init__(self):
        if not self.schemes:
            raise ValueError("need at least one scheme")
        if any(tf <= 0 for tf in self.tf_values):
            raise ValueError("t_f values must be positive")
        if self.breaker not in _BREAKERS:
            raise ValueError(f"unknown breaker {self.breaker!r} (use single|sum)")
        if self.index_base not in _INDEX_BASES:
            raise ValueError(f"unknown index base {self.index_base!r} (use one|zero)")
        ids = [s.scheme_id for s in self.schemes]
        if len(set(ids)) != len(ids):
            raise ValueError("scheme ids must be unique")

    def settings(self, overrides: dict | None = None) -> PropagationSettings:
        merged = {
            "substeps": self.substeps,
            "adaptive": self.adaptive,
            "convergence_tol": self.convergence_tol,
            "max_substeps": self.max_substeps,
            "method": self.method,
        }
        for key in list(merged):
            if overrides and key in overrides:
                merged[key] = overrides[key]
        return PropagationSettings(**merged)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["schemes"] = [
            {"scheme_id": s.scheme_id, "kind": s.kind, "options": dict(s.options)}
            for s in self.schemes
        ]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        schemes = tuple(
            SchemeSpec.make(s["scheme_id"], s["kind"], **s.get("options", {}))
            for s in data.pop("schemes")
        )
        known = {f for f in cls.__dataclass_fields__ if f != "schemes"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("tf_values",):
            if key in data:
                data[key] = tuple(data[key])
        return cls(schemes=schemes, **data)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    t_f: float
    scheme_id: str
    best_f: float
    n_evals: int
    wall_s: float
    couplings_sha: str
    params: tuple[tuple[str, float], ...] = ()

    def params_dict(self) -> dict:
        return dict(self.params)


@dataclass(frozen=True)
class LandscapeGrid:
    axis_names: tuple[str, str]
    axes: tuple[np.ndarray, np.ndarray]
    values: np.ndarray
    trial: int
    scheme_id: str

    def __post_init__(self):
        if self.values.shape != (self.axes[0].size, self.axes[1].size):
            raise ValueError("landscape dimensions are inconsistent")
        if np.any(self.values < -1e-12) or np.any(self.values > 1 + 1e-12):
            raise ValueError("fidelities must lie in [0, 1]")


@dataclass(frozen=True)
class ComparisonRecord:
    reference: str
    rows: tuple[tuple[int, float, str, float, float, float], ...]
    medians: tuple[tuple[tuple[float, str], float], ...]

    def median_for(self, t_f: float, scheme_id: str) -> float:
        return dict(self.medians)[(t_f, scheme_id)]


# ---------------------------------------------------------------------------
# scheme runners

_GAUSS_DEFAULTS = {
    "a_min": -50.0, "a_max": 50.0, "omega_min": 0.02, "omega_max": 4.0,
    "res_a": 101, "res_omega": 101, "n_guesses": 1000,
}
_POLY_DEFAULTS = {
    "n_lambda": 2, "lam_min": -30.0, "lam_max": 30.0, "res": 41, "n_guesses": 1000,
}
_SETTINGS_KEYS = {"substeps", "adaptive", "convergence_tol", "max_substeps", "method"}


def _split_options(scheme: SchemeSpec, defaults: dict) -> tuple[dict, dict]:
    opts = scheme.opts()
    merged = dict(defaults)
    overrides = {}
    for key, value in opts.items():
        if key in _SETTINGS_KEYS:
            overrides[key] = value
        elif key in merged:
            merged[key] = value
        else:
            raise ValueError(f"scheme {scheme.scheme_id!r}: unknown option {key!r}")
    return merged, overrides


def run_scheme_cell(
    problem: ControlProblem,
    scheme: SchemeSpec,
    cell_seed: int,
    config: ExperimentConfig,
) -> tuple[float, dict, int, object]:
    """Run one scheme on one prepared problem; returns (best_F, params, evals, pulse)."""
    kind = scheme.kind
    if kind in ("gaussian_grid", "gaussian_random"):
        opts, overrides = _split_options(scheme, _GAUSS_DEFAULTS)
        family = GaussianFamily(t_f=problem.t_f)
        bounds = ((opts["a_min"], opts["a_max"]), (opts["omega_min"], opts["omega_max"]))
        settings = config.settings(overrides)
        if kind == "gaussian_grid":
            box = SearchBox(bounds=bounds, resolution=(int(opts["res_a"]), int(opts["res_omega"])))
            out = grid_search(problem, family, box, settings)
            result = out.best
        else:
            box = SearchBox(bounds=bounds)
            result = random_search(
                problem, family, box, n_guesses=int(opts["n_guesses"]),
                seed=cell_seed, settings=settings,
            )
        params = dict(zip(family.param_names, result.params))
        pulse = family.make(result.params)
        return result.fidelity, params, result.n_evaluations, pulse
    if kind in ("poly_grid", "poly_random"):
        opts, overrides = _split_options(scheme, _POLY_DEFAULTS)
        n_lambda = int(opts["n_lambda"])
        family = PolynomialFamily(t_f=problem.t_f, n_lambda=n_lambda)
        bounds = ((opts["lam_min"], opts["lam_max"]),) * n_lambda
        settings = config.settings(overrides)
        if kind == "poly_grid":
            if n_lambda != 2:
                raise ValueError("poly_grid landscapes are 2-dimensional (n_lambda=2)")
            box = SearchBox(bounds=bounds, resolution=(int(opts["res"]),) * 2)
            out = grid_search(problem, family, box, settings)
            result = out.best
        else:
            box = SearchBox(bounds=bounds)
            result = random_search(
                problem, family, box, n_guesses=int(opts["n_guesses"]),
                seed=cell_seed, settings=settings,
            )
        params = dict(zip(family.param_names, result.params))
        pulse = family.make(result.params)
        return result.fidelity, params, result.n_evaluations, pulse
    if kind == "grape":
        known = {f: getattr(GrapeConfig, f) for f in GrapeConfig.__dataclass_fields__}
        opts, _ = _split_options(scheme, known)
        grape_config = GrapeConfig(**opts)
        result, pulse = grape_optimize(problem, grape_config, seed=cell_seed)
        params = {"n_bins": grape_config.n_bins, "starts": grape_config.multi_start}
        return result.fidelity, params, result.n_evaluations, pulse
    if kind == "dcrab":
        known = {f: getattr(DcrabConfig, f) for f in DcrabConfig.__dataclass_fields__}
        opts, _ = _split_options(scheme, known)
        dcrab_config = DcrabConfig(**opts)
        result, pulse = dcrab_optimize(problem, dcrab_config, seed=cell_seed)
        params = {"n_bins": dcrab_config.n_bins, "n_terms": len(pulse.terms)}
        return result.fidelity, params, result.n_evaluations, pulse
    raise ValueError(f"unknown scheme kind {scheme.kind!r}")


def build_problem(config: ExperimentConfig, couplings, t_f: float) -> ControlProblem:
    spec = SpinChainSpec(
        n_spins=config.n_spins,
        couplings=tuple(couplings),
        beta=config.beta,
        breaker=_BREAKERS[config.breaker],
    )
    return ControlProblem.for_chain(spec, t_f=t_f, index_base=_INDEX_BASES[config.index_base])


# ---------------------------------------------------------------------------
# campaign execution

@dataclass(frozen=True)
class CampaignResult:
    records: tuple[TrialRecord, ...]
    failures: tuple[tuple[str, str], ...]
    csv_path: str
    manifest_path: str


def _cell_name(trial: int, tf_index: int, scheme_id: str) -> str:
    return f"cell_{trial:04d}_tf{tf_index}_{scheme_id}.json"


def _compute_cell(config: ExperimentConfig, trialset: TrialSet, trial: int, tf_index: int, scheme: SchemeSpec) -> dict:
    t_f = config.tf_values[tf_index]
    couplings = trialset.trial_couplings(trial)
    problem = build_problem(config, couplings, t_f)
    cell_seed = derive_seed(config.master_seed, trial, tf_index, scheme.scheme_id)
    started = time.perf_counter()
    best_f, params, n_evals, pulse = run_scheme_cell(problem, scheme, cell_seed, config)
    wall = time.perf_counter() - started
    return {
        "trial": trial,
        "t_f": t_f,
        "tf_index": tf_index,
        "scheme_id": scheme.scheme_id,
        "best_f": best_f,
        "n_evals": n_evals,
        "wall_s": wall,
        "couplings_sha": trialset.trial_checksum(trial),
        "params": {k: float(v) for k, v in params.items()},
        "_pulse": pulse,
    }


def run_campaign(
    config: ExperimentConfig,
    out_dir: str,
    resume: bool = True,
    workers: int = 1,
) -> CampaignResult:
    """Run (or resume) every (trial, t_f, scheme) cell and merge the outputs.

    Per-cell failures are recorded in the manifest and skipped in the CSV;
    the campaign itself keeps going.
    """
    os.makedirs(out_dir, exist_ok=True)
    cells_dir = os.path.join(out_dir, "cells")
    os.makedirs(cells_dir, exist_ok=True)
    trialset = draw_couplings(config.master_seed, config.n_trials, config.n_spins)

    cells = [
        (trial, tf_index, scheme)
        for trial in range(config.n_trials)
        for tf_index in range(len(config.tf_values))
        for scheme in config.schemes
    ]

    manifest_path = os.path.join(out_dir, "manifest.json")
    manifest = {
        "schema": "spinctrl.manifest.v1",
        "version": __version__,
        "config": config.to_dict(),
        "trialset_sha": trialset.checksum(),
        "n_cells": len(cells),
        "seed_rule": (
            "couplings: sha256('master_seed|couplings|trial')[:8B]; "
            "cells: sha256('master_seed|trial|tf_index|scheme_id')[:8B]"
        ),
    }
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)

    def cell_path(cell):
        trial, tf_index, scheme = cell
        return os.path.join(cells_dir, _cell_name(trial, tf_index, scheme.scheme_id))

    def load_cell(path):
        # a truncated/corrupt file (interrupted run) counts as not done
        if not os.path.exists(path):
            return None
        try:
            with open(path) as fh:
                return json.load(fh)
        except (OSError, json.JSONDecodeError):
            return None

    pending = [c for c in cells if not (resume and load_cell(cell_path(c)) is not None)]
    failures: list[tuple[str, str]] = []

    def finish_cell(cell, payload):
        pulse = payload.pop("_pulse", None)
        if config.export_pulses and pulse is not None:
            trial, tf_index, scheme = cell
            pulse_path = os.path.join(
                out_dir, "pulses", f"pulse_{trial:04d}_tf{tf_index}_{scheme.scheme_id}.csv"
            )
            write_pulse_csv(pulse, pulse_path, label=scheme.scheme_id)
        with open(cell_path(cell), "w") as fh:
            json.dump(payload, fh, sort_keys=True)

    if workers > 1 and pending:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_compute_cell, config, trialset, c[0], c[1], c[2]): c
                for c in pending
            }
            for future, cell in futures.items():
                try:
                    finish_cell(cell, future.result())
                except Exception as exc:  # cell failure: record, keep going
                    failures.append((_cell_name(cell[0], cell[1], cell[2].scheme_id), str(exc)))
    else:
        for cell in pending:
            try:
                finish_cell(cell, _compute_cell(config, trialset, cell[0], cell[1], cell[2]))
            except Exception as exc:
                failures.append((_cell_name(cell[0], cell[1], cell[2].scheme_id), str(exc)))

    records = []
    for cell in cells:
        data = load_cell(cell_path(cell))
        if data is None:
            continue
        records.append(
            TrialRecord(
                trial=data["trial"],
                t_f=data["t_f"],
                scheme_id=data["scheme_id"],
                best_f=data["best_f"],
                n_evals=data["n_evals"],
                wall_s=data["wall_s"],
                couplings_sha=data["couplings_sha"],
                params=tuple(sorted(data["params"].items())),
            )
        )

    csv_path = os.path.join(out_dir, "campaign.csv")
    write_campaign_csv(records, csv_path, trialset_sha=trialset.checksum())

    manifest["failures"] = sorted(failures)
    manifest["fingerprint"] = campaign_fingerprint(csv_path)
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)

    return CampaignResult(
        records=tuple(records),
        failures=tuple(failures),
        csv_path=csv_path,
        manifest_path=manifest_path,
    )


def write_campaign_csv(records: Sequence[TrialRecord], path: str, trialset_sha: str = "") -> None:
    rows = [
        (
            r.trial, r.t_f, r.scheme_id, r.best_f, r.n_evals, r.wall_s, r.couplings_sha,
            ";".join(f"{k}={fmt(v)}" for k, v in r.params),
        )
        for r in records
    ]
    meta = {"trialset_sha": trialset_sha} if trialset_sha else None
    write_csv(
        path, CAMPAIGN_SCHEMA,
        ["trial", "tf", "scheme", "best_F", "n_evals", "wall_s", "couplings_sha", "params"],
        rows, meta=meta,
    )


def read_campaign_csv(path: str) -> list[TrialRecord]:
    schema, _, header, rows = read_csv(path)
    if schema != CAMPAIGN_SCHEMA:
        raise ValueError(f"{path}: expected schema {CAMPAIGN_SCHEMA}, found {schema}")
    records = []
    for row in rows:
        data = dict(zip(header, row))
        params = tuple(
            (k, float(v))
            for k, v in (pair.split("=", 1) for pair in data["params"].split(";") if pair)
        )
        records.append(
            TrialRecord(
                trial=int(data["trial"]),
                t_f=float(data["tf"]),
                scheme_id=data["scheme"],
                best_f=float(data["best_F"]),
                n_evals=int(data["n_evals"]),
                wall_s=float(data["wall_s"]),
                couplings_sha=data["couplings_sha"],
                params=params,
            )
        )
    return records


def campaign_fingerprint(csv_path: str) -> str:
    """SHA-256 over the campaign CSV with the wall-clock column masked out."""
    schema, meta, header, rows = read_csv(csv_path)
    skip = header.index("wall_s") if "wall_s" in header else -1
    parts = [schema] + [f"{k}={v}" for k, v in sorted(meta.items())]
    for row in rows:
        parts.append(",".join(v for i, v in enumerate(row) if i != skip))
    return hashlib.sha256("\n".join(parts).encode()).hexdigest()


# ---------------------------------------------------------------------------
# landscapes and comparisons

def landscape_sweep(
    problem: ControlProblem,
    family,
    box: SearchBox,
    settings: PropagationSettings | None = None,
    trial: int = 0,
    scheme_id: str = "",
) -> LandscapeGrid:
    """Full fidelity surface over a 2D box, annotated for reproducible figures."""
    out = grid_search(problem, family, box, settings)
    return LandscapeGrid(
        axis_names=tuple(family.param_names[:2]),
        axes=(out.axes[0], out.axes[1]),
        values=out.grid,
        trial=trial,
        scheme_id=scheme_id or family.name,
    )


def write_landscape_csv(grid: LandscapeGrid, path: str) -> None:
    rows = []
    for i, x in enumerate(grid.axes[0]):
        for j, y in enumerate(grid.axes[1]):
            rows.append((x, y, grid.values[i, j]))
    write_csv(
        path, LANDSCAPE_SCHEMA, ["x", "y", "F"], rows,
        meta={
            "trial": grid.trial,
            "scheme": grid.scheme_id,
            "x_axis": grid.axis_names[0],
            "y_axis": grid.axis_names[1],
            "x_size": grid.axes[0].size,
            "y_size": grid.axes[1].size,
        },
    )


def compare_schemes(records: Sequence[TrialRecord], reference: str) -> ComparisonRecord:
    """Per-trial fidelity differences against the reference scheme.

    All schemes must share the coupling draw trial by trial (checked via
    the per-record coupling hashes).
    """
    by_key: dict[tuple[int, float, str], TrialRecord] = {}
    for r in records:
        by_key[(r.trial, r.t_f, r.scheme_id)] = r
    scheme_ids = sorted({r.scheme_id for r in records})
    if reference not in scheme_ids:
        raise ValueError(f"reference scheme {reference!r} not present")
    for r in records:
        ref = by_key.get((r.trial, r.t_f, reference))
        if ref is None:
            raise ValueError(f"reference missing for trial {r.trial}, t_f {r.t_f}")
        if ref.couplings_sha != r.couplings_sha:
            raise ValueError(f"trial {r.trial}: schemes ran on different couplings")
    rows = []
    deltas: dict[tuple[float, str], list[float]] = {}
    for r in sorted(records, key=lambda r: (r.trial, r.t_f, r.scheme_id)):
        # reference rows stay in (with delta 0), so a self-comparison is an
        # explicit flat-zero series rather than an empty file
        ref = by_key[(r.trial, r.t_f, reference)]
        delta = ref.best_f - r.best_f
        rows.append((r.trial, r.t_f, r.scheme_id, ref.best_f, r.best_f, delta))
        deltas.setdefault((r.t_f, r.scheme_id), []).append(delta)
    medians = tuple(
        (key, float(np.median(values))) for key, values in sorted(deltas.items())
    )
    return ComparisonRecord(reference=reference, rows=tuple(rows), medians=medians)


def write_comparison_csv(record: ComparisonRecord, path: str) -> None:
    meta = {"reference": record.reference}
    for (t_f, scheme_id), value in record.medians:
        meta[f"median_delta__tf_{fmt(t_f)}__{scheme_id}"] = value
    write_csv(
        path, COMPARE_SCHEMA,
        ["trial", "tf", "scheme", "F_ref", "F_scheme", "delta_F"],
        record.rows, meta=meta,
    )
