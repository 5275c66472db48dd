"""Named experiments driven by an ExperimentConfig.

Each runner returns an ExperimentResult: CSV-ready rows, a summary for the
JSON sidecar and free-text notes for the manifest.  Writing to disk lives in
``cli``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import correlation_algebra as ca
from .config import ExperimentConfig
from .dynamics import (
    cauchy_increments,
    dynamic_exponent_recover,
    flatness_sweep,
    rescaled_limit,
    rescaled_sweep,
)
from .errors import ConfigError, FitError, RGScaleLabError
from .kernels import AveragingKernel, wedge_kernel
from .scaling_engine import (
    BlockObservableSpec,
    CriticalTruncated,
    GaussianProfile,
    GaussianTruncated,
    ScaleSweep,
    block_l_point_normal,
    block_two_point_spectral,
    commutator_bound,
    critical_block_two_point_position,
    critical_limit_two_point,
    fit_exponent,
    gaussian_remainder,
    geometric_grid,
    normal_two_point_limit,
    scale_sweep,
)
from .spectral_models import (
    DispersionLaw,
    GaussianBackground,
    QuasifreeModel,
    commutator_spectrum,
    constant_weight,
    detailed_balance_residual,
)


@dataclass
class ExperimentResult:
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    summary: dict | None = None
    notes: list[str] = field(default_factory=list)
    row_failures: dict[int, str] = field(default_factory=dict)

    @property
    def diverged(self) -> bool:
        return bool(self.row_failures)


# ------------------------------------------------------------ builders


def build_kernel(cfg: ExperimentConfig, kind: str | None = None):
    kind = kind or cfg["kernel"]["type"]
    if kind == "wedge":
        return wedge_kernel()
    return AveragingKernel(kind, cfg.dimension, cfg["kernel"]["shape"])


def build_model(cfg: ExperimentConfig) -> QuasifreeModel:
    m = cfg["model"]
    if m["kind"] != "quasifree":
        raise ConfigError([f"model.kind: experiment {cfg.experiment} needs a quasifree model"])
    background = None
    if m["ac_amplitude"]:
        background = GaussianBackground(m["ac_amplitude"], m["ac_omega_width"], m["ac_k_width"])
    return QuasifreeModel(
        m["n"], m["beta"], m["mu"], DispersionLaw(m["alpha"], m["prefactor"]), constant_weight(m["weight"]), background,
    )


def build_gaussian(cfg: ExperimentConfig, order: int | None = None) -> GaussianTruncated:
    m = cfg["model"]
    if m["kind"] != "gaussian-truncated":
        raise ConfigError([f"model.kind: experiment {cfg.experiment} needs a gaussian-truncated model"])
    l = order or m["order"]
    d = (l - 1) * m["n"]
    return GaussianTruncated(l, m["n"], m["amplitude"], m["width"] ** 2 * np.eye(d))


def build_critical(cfg: ExperimentConfig) -> CriticalTruncated:
    m = cfg["model"]
    rem = None
    if m["remainder_amplitude"]:
        rem = gaussian_remainder(m["remainder_amplitude"], m["remainder_width"])
    return CriticalTruncated(m["n"], m["alpha"], m["constant"], rem)


def build_grid(cfg: ExperimentConfig) -> np.ndarray:
    g = cfg["grid"]
    return geometric_grid(g["r_min"], g["r_max"], g["points"])


def default_points(l: int, n: int) -> np.ndarray:
    X = np.zeros((l, n))
    X[:, 0] = 0.5 * np.arange(l)
    return X


def _points(cfg: ExperimentConfig, l: int) -> np.ndarray:
    x = cfg["geometry"]["x"]
    if x is not None and len(x) == l:
        return np.asarray(x, dtype=float)
    return default_points(l, cfg.dimension)


def _fit_summary(fit) -> dict:
    return {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "max_residual": fit.max_residual,
        "window": list(fit.window),
        "points": fit.points,
        "excluded": list(fit.excluded),
    }


def _try_fit(sweep, summary: dict, key: str = "fit"):
    try:
        summary[key] = _fit_summary(fit_exponent(sweep))
    except FitError as exc:
        summary[key] = {"error": str(exc)}


def _sweep_rows(sweep, result: ExperimentResult, offset: int = 0, prefix: tuple = ()):
    for i, (R, v) in enumerate(zip(sweep.r_grid, sweep.values)):
        status = sweep.failures.get(i, "ok")
        if i in sweep.failures:
            result.row_failures[offset + i] = sweep.failures[i]
        result.rows.append([*prefix, R, v.real, v.imag, abs(v), status])


SWEEP_COLUMNS = ["R", "re_value", "im_value", "abs_value", "status"]


# ------------------------------------------------------------ runners


def run_scale_sweep(cfg: ExperimentConfig, workers: int | None) -> ExperimentResult:
    model = build_model(cfg)
    spec = BlockObservableSpec(cfg.gamma, build_kernel(cfg), time_derivatives=cfg["observable"]["time_derivatives"])
    Y = np.asarray(cfg.Y)
    sweep = scale_sweep(lambda R: block_two_point_spectral(model, spec, R, Y), build_grid(cfg), workers=workers)
    res = ExperimentResult(list(SWEEP_COLUMNS))
    _sweep_rows(sweep, res)
    return res


def run_exponent_fit(cfg: ExperimentConfig, workers: int | None) -> ExperimentResult:
    res = run_scale_sweep(cfg, workers)
    model = build_model(cfg)
    n, a = model.dimension, model.dispersion.alpha
    critical = (n + a) / 2.0 if model.is_critical else n / 2.0
    m = cfg["observable"]["time_derivatives"]
    # each time derivative lowers the critical exponent by alpha
    critical -= m * a if model.is_critical else 0.0
    sweep_values = np.array([complex(r[1], r[2]) for r in res.rows])
    sweep = ScaleSweep(build_grid(cfg), sweep_values, failures=dict(res.row_failures))
    summary = {"gamma": cfg.gamma, "expected_slope": 2.0 * (critical - cfg.gamma)}
    _try_fit(sweep, summary)
    res.summary = summary
    return res


def run_limit_2pt(cfg: ExperimentConfig, workers: int | None) -> ExperimentResult:
    kind = cfg["model"]["kind"]
    kernel = build_kernel(cfg)
    Y = np.asarray(cfg.Y)
    grid = build_grid(cfg)
    res = ExperimentResult(["R", "value", "limit", "rel_error", "status"])
    if kind == "gaussian-truncated":
        w = build_gaussian(cfg, 2)
        limit = normal_two_point_limit(w, kernel, Y)
        sweep = scale_sweep(lambda R: block_l_point_normal(w, kernel, R, np.stack([Y, np.zeros_like(Y)])), grid, workers=workers)
        summary = {"regime": "normal", "limit": limit, "gamma": cfg.dimension / 2.0}
    elif kind == "critical-truncated":
        w = build_critical(cfg)
        n, a = w.dimension, w.alpha
        lim_pos = critical_limit_two_point(kernel, n, a, Y)
        lim_f = critical_limit_two_point(kernel, n, a, Y, method="fourier") if isinstance(kernel, AveragingKernel) else None
        limit = w.constant * lim_pos
        sweep = scale_sweep(lambda R: critical_block_two_point_position(w, kernel, cfg.gamma, R, Y), grid, workers=workers)
        Yn = float(np.linalg.norm(Y))
        summary = {
            "regime": "critical",
            "gamma": cfg.gamma,
            "limit": limit,
            "limit_position": lim_pos,
            "limit_fourier": lim_f,
            "scale_invariant_product": lim_pos * Yn ** (n - a) if Yn > 0 else None,
            "fourier_at_zero_squared": kernel.fourier_at_zero**2,
        }
        if not math.isclose(cfg.gamma, (n + a) / 2.0):
            res.notes.append("gamma differs from (n + alpha)/2: the sequence diverges or vanishes")
    else:
        raise ConfigError(["model.kind: limit-2pt needs gaussian-truncated or critical-truncated"])
    for i, (R, v) in enumerate(zip(sweep.r_grid, sweep.values)):
        status = sweep.failures.get(i, "ok")
        if i in sweep.failures:
            res.row_failures[i] = status
        res.rows.append([R, v.real, limit, abs(v.real - limit) / abs(limit), status])
    res.summary = summary
    return res


def run_cluster_check(cfg: ExperimentConfig, workers: int | None) -> ExperimentResult:
    w = build_gaussian(cfg)
    kernel = build_kernel(cfg)
    X = _points(cfg, w.order)
    sweep = scale_sweep(lambda R: block_l_point_normal(w, kernel, R, X), build_grid(cfg), workers=workers)
    res = ExperimentResult(list(SWEEP_COLUMNS))
    _sweep_rows(sweep, res)
    n, l = w.dimension, w.order
    summary = {"order": l, "expected_slope": (2 - l) * n / 2.0}
    _try_fit(sweep, summary)
    if l == 2:
        summary["limit"] = normal_two_point_limit(w, kernel, X[0] - X[1])
    res.summary = summary
    return res


def run_sharp_vs_smooth(cfg: ExperimentConfig, workers: int | None) -> ExperimentResult:
    n = cfg.dimension
    kinds = ["smooth", "sharp"] + (["wedge"] if n == 1 else [])
    grid = build_grid(cfg)
    Y = np.asarray(cfg.Y)
    l_hi = max(3, cfg["model"]["order"])
    w2 = build_gaussian(cfg, 2)
    wl = build_gaussian(cfg, l_hi)
    X = _points(cfg, l_hi)
    res = ExperimentResult(["kernel", "order"] + SWEEP_COLUMNS)
    summary: dict = {"kernels": {}}
    offset = 0
    slopes = []
    for kind in kinds:
        kernel = build_kernel(cfg, kind)
        closed = w2.integral() * float(kernel.self_convolution(np.array(np.linalg.norm(Y))))
        s2 = scale_sweep(lambda R: block_l_point_normal(w2, kernel, R, np.stack([Y, np.zeros_like(Y)])), grid, workers=workers)
        _sweep_rows(s2, res, offset, (kernel.label(), 2))
        offset += len(s2)
        sl = scale_sweep(lambda R: block_l_point_normal(wl, kernel, R, X), grid, workers=workers)
        _sweep_rows(sl, res, offset, (kernel.label(), l_hi))
        offset += len(sl)
        entry = {"closed_form_limit": closed, "value_at_r_max": s2.values[-1].real}
        entry["rel_error"] = abs(s2.values[-1].real - closed) / abs(closed)
        _try_fit(sl, entry)
        if "slope" in entry["fit"]:
            slopes.append(entry["fit"]["slope"])
        summary["kernels"][kernel.label()] = entry
    if slopes:
        mean = float(np.mean(slopes))
        summary["slope_spread_relative"] = float((max(slopes) - min(slopes)) / abs(mean))
    summary["expected_slope"] = (2 - l_hi) * n / 2.0
    res.summary = summary
    return res


def run_commutator_bound(cfg: ExperimentConfig, workers: int | None) -> ExperimentResult:
    kernel = build_kernel(cfg)
    n = cfg.dimension
    c = cfg["commutator"]
    prof = GaussianProfile(c["amplitude"], c["width"], n)
    ga, gb = cfg.gamma, cfg.gamma_b
    grid = build_grid(cfg)
    real = scale_sweep(lambda R: commutator_bound(kernel, ga, gb, R, prof), grid, workers=workers)
    four = scale_sweep(lambda R: commutator_bound(kernel, ga, gb, R, prof, method="fourier"), grid, workers=workers)
    res = ExperimentResult(["R", "real_space", "fourier_space", "rel_difference", "status"])
    diffs = []
    for i, R in enumerate(grid):
        a, b = real.values[i].real, four.values[i].real
        status = real.failures.get(i) or four.failures.get(i) or "ok"
        if status != "ok":
            res.row_failures[i] = status
        d = abs(a - b) / max(abs(a), 1e-300)
        diffs.append(d)
        res.rows.append([R, a, b, d, status])
    summary = {"gamma_a": ga, "gamma_b": gb, "expected_slope": n - (ga + gb), "max_rel_difference": float(np.nanmax(diffs))}
    _try_fit(real, summary)
    res.summary = summary
    return res


def run_kms_check(cfg: ExperimentConfig, workers: int | None) -> ExperimentResult:
    model = build_model(cfg)
    k = cfg["kms"]
    p = k["points"]
    # symmetric grid without omega = 0, momenta away from the branch point
    omegas = k["omega_max"] * (np.arange(p) - (p - 1) / 2.0) / ((p - 1) / 2.0)
    omegas = omegas[omegas != 0.0] if p % 2 else omegas
    ks = k["k_max"] * np.arange(1, p + 1) / p
    betas = k["betas"]
    res = ExperimentResult(["omega", "k", "detailed_balance_residual", "commutator_beta_spread", "status"])
    worst_db = worst_beta = 0.0
    for om in omegas:
        for kk in ks:
            db = detailed_balance_residual(model, float(om), float(kk))
            specs = [commutator_spectrum(model.with_beta(b), float(om), float(kk)) for b in betas]
            ref = specs[0]
            spread = 0.0
            for s in specs[1:]:
                spread = max(spread, abs(s.density - ref.density))
                for b1, b2 in zip(s.branches, ref.branches):
                    scale = max(1.0, abs(b2.weight))
                    spread = max(spread, abs(b1.weight - b2.weight) / scale, abs(b1.omega - b2.omega))
            worst_db, worst_beta = max(worst_db, db), max(worst_beta, spread)
            res.rows.append([float(om), float(kk), db, spread, "ok"])
    res.summary = {"max_residual": worst_db, "max_beta_spread": worst_beta, "grid": [len(omegas), len(ks)]}
    return res


def run_slowdown(cfg: ExperimentConfig, workers: int | None) -> ExperimentResult:
    model = build_model(cfg)
    spec = BlockObservableSpec(cfg.gamma, build_kernel(cfg))
    tw = cfg["geometry"]["t_window"]
    sweep = flatness_sweep(model, spec, build_grid(cfg), tw, workers=workers)
    res = ExperimentResult(["R", "flatness", "status"])
    for i, (R, v) in enumerate(zip(sweep.r_grid, sweep.values)):
        status = sweep.failures.get(i, "ok")
        if i in sweep.failures:
            res.row_failures[i] = status
        res.rows.append([R, v.real, status])
    summary = {"t_window": list(tw), "gamma": cfg.gamma}
    _try_fit(sweep, summary)
    if not model.is_critical:
        res.notes.append("non-critical: flatness non-decaying")
    elif "slope" in summary["fit"]:
        summary["dynamic_exponent"] = -0.5 * summary["fit"]["slope"]
    res.summary = summary
    return res


def run_dynamic_exponent(cfg: ExperimentConfig, workers: int | None) -> ExperimentResult:
    model = build_model(cfg)
    spec = BlockObservableSpec(cfg.gamma, build_kernel(cfg))
    grid = build_grid(cfg)
    tw = cfg["geometry"]["t_window"]
    taus = np.asarray(cfg["geometry"]["taus"], dtype=float)
    a = model.dispersion.alpha
    fit = dynamic_exponent_recover(model, spec, grid, tw, workers=workers)
    res = ExperimentResult(["R", "tau", "re_value", "im_value", "status"])
    table = []
    for i, R in enumerate(grid):
        try:
            vals = rescaled_sweep(model, spec, float(R), np.sort(taus), a).values
            status = "ok"
        except RGScaleLabError as exc:
            vals = np.full(taus.size, np.nan + 0j)
            status = f"{type(exc).__name__}: {exc}"
        table.append(vals)
        for j, (tau, v) in enumerate(zip(np.sort(taus), vals)):
            if status != "ok":
                res.row_failures[i * taus.size + j] = status
            res.rows.append([float(R), float(tau), v.real, v.imag, status])
    table = np.array(table)
    summary = {
        "alpha": a,
        "gamma": cfg.gamma,
        "flatness_fit": _fit_summary(fit.flatness),
        "flatness_exponent": fit.flatness_exponent,
        "dynamic_exponent": fit.delta,
        "rescaled": {},
    }
    for j, tau in enumerate(np.sort(taus)):
        entry = {"last_increment": float(cauchy_increments(table[:, j])[-1])}
        try:
            entry["limit"] = rescaled_limit(model, spec, float(tau))
        except ValueError as exc:
            entry["limit"] = None
            res.notes.append(f"no limit oracle: {exc}")
        summary["rescaled"][repr(float(tau))] = entry
    res.summary = summary
    return res


def run_quasifree_check(cfg: ExperimentConfig, workers: int | None) -> ExperimentResult:
    rng = np.random.default_rng(cfg["experiment"]["seed"])
    n = cfg.dimension
    l_max = cfg["experiment"]["l_max"]
    pts = [ca.LabeledPoint(tuple(rng.normal(size=n)), float(rng.normal())) for _ in range(l_max)]
    res = ExperimentResult(["l", "partitions", "round_trip_residual", "quasifree_residual", "status"])

    def two_point(p, q):
        d = np.subtract(p.position, q.position)
        return complex(np.exp(-0.5 * float(d @ d)) / (1.0 + 1j * (p.time - q.time)))

    for l in range(2, l_max + 1):
        sub = pts[:l]
        h = ca.random_hierarchy(rng, sub)
        full = ca.CorrelationHierarchy(n, l)
        full.populate_full(sub, lambda t: ca.compose_from_truncated(h, t))
        rt = max(abs(ca.truncate(full, t) - h.truncated(t)) for t in ca._subtuples(tuple(sub)))
        qf = ca.CorrelationHierarchy.quasifree(two_point, [sub], l)
        qres = abs(ca.truncate(qf, sub)) if l >= 3 else 0.0
        res.rows.append([l, len(ca.enumerate_partitions(l)), rt, qres, "ok"])
    res.summary = {
        "max_round_trip_residual": max(r[2] for r in res.rows),
        "max_quasifree_residual": max(r[3] for r in res.rows),
        "seed": cfg["experiment"]["seed"],
    }
    return res


RUNNERS: dict[str, Callable[[ExperimentConfig, int | None], ExperimentResult]] = {
    "scale-sweep": run_scale_sweep,
    "exponent-fit": run_exponent_fit,
    "limit-2pt": run_limit_2pt,
    "cluster-check": run_cluster_check,
    "sharp-vs-smooth": run_sharp_vs_smooth,
    "commutator-bound": run_commutator_bound,
    "kms-check": run_kms_check,
    "slowdown": run_slowdown,
    "dynamic-exponent": run_dynamic_exponent,
    "quasifree-check": run_quasifree_check,
}

HAS_SIDECAR = {e for e in RUNNERS if e != "scale-sweep"}
