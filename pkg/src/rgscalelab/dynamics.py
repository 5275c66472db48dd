"""Time dependence of block correlations: critical slowing down and time rescaling.

At the critical exponent the equal-time block correlation has a finite
limit, but its time dependence flattens as R grows because the branch
energies e(k/R) shrink.  Rescaling t = R^delta * tau with delta = alpha
restores a non-trivial evolution in tau.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._backend import core
from .quadrature import SPHERE_AREA, composite_gauss, quad
from .scaling_engine import (
    BlockObservableSpec,
    ExponentFit,
    _far_nodes,
    _spectral_cutoff,
    block_two_point_series,
    branch_terms,
    fit_exponent,
    scale_sweep,
)
from .spectral_models import DispersionForm, QuasifreeModel, _bose, ac_time_profile, near_origin_rule


class TimeMode(str, enum.Enum):
    MICROSCOPIC = "microscopic"
    RESCALED = "rescaled"


@dataclass
class TimeSweepResult:
    """Correlation values on a time grid at one scale.

    In rescaled mode ``time_grid`` holds tau and the microscopic time is
    R^delta * tau.
    """

    R: float
    time_grid: np.ndarray
    values: np.ndarray
    mode: TimeMode = TimeMode.MICROSCOPIC
    delta: float | None = None

    def __post_init__(self):
        self.time_grid = np.asarray(self.time_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        self.mode = TimeMode(self.mode)
        if self.time_grid.shape != self.values.shape:
            raise ValueError("time grid and values differ in length")
        if np.any(np.diff(self.time_grid) <= 0):
            raise ValueError("time grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("correlation values must be finite")
        if (self.mode is TimeMode.RESCALED) != (self.delta is not None):
            raise ValueError("delta is given exactly in rescaled mode")

    @property
    def microscopic_times(self) -> np.ndarray:
        if self.mode is TimeMode.RESCALED:
            return self.R**self.delta * self.time_grid
        return self.time_grid


def time_correlation_at_scale(model: QuasifreeModel, spec: BlockObservableSpec, R: float, t: float) -> complex:
    """Block autocorrelation <A_R A_R(t)> at separation Y = 0."""
    return complex(block_two_point_series(model, spec, R, np.zeros(model.dimension), [t])[0])


def time_sweep(model, spec, R: float, times: Sequence[float]) -> TimeSweepResult:
    times = np.asarray(times, dtype=float)
    vals = block_two_point_series(model, spec, R, np.zeros(model.dimension), times)
    return TimeSweepResult(R, times, vals)


def rescaled_time_correlation(
    model: QuasifreeModel, spec: BlockObservableSpec, R: float, tau: float, delta: float
) -> complex:
    """time_correlation_at_scale at the microscopic time R^delta * tau."""
    if not delta >= 0:
        raise ValueError("delta must be non-negative")
    return time_correlation_at_scale(model, spec, R, R**delta * tau)


def rescaled_sweep(model, spec, R: float, taus: Sequence[float], delta: float) -> TimeSweepResult:
    if not delta >= 0:
        raise ValueError("delta must be non-negative")
    taus = np.asarray(taus, dtype=float)
    vals = block_two_point_series(model, spec, R, np.zeros(model.dimension), R**delta * taus)
    return TimeSweepResult(R, taus, vals, TimeMode.RESCALED, float(delta))


# ------------------------------------------------------------ flatness


def difference_quotient(
    model: QuasifreeModel, spec: BlockObservableSpec, R: float, t, h: float
) -> np.ndarray:
    """Central difference [C(t+h) - C(t-h)] / 2h of the block autocorrelation.

    Each spectral mode e^{-iEt} is differenced exactly, which gives the same
    number as differencing the quadrature values but without the
    cancellation error of subtracting two nearly equal sums.
    """
    if not h > 0:
        raise ValueError("step must be positive")
    t = np.atleast_1d(np.asarray(t, dtype=float)) + spec.time_shift
    terms = branch_terms(model, spec, R, np.zeros(model.dimension), float(np.max(np.abs(t))) + h)
    if terms.vanishing:
        return np.zeros(t.shape, dtype=complex)
    s = np.sin(terms.E * h) / h
    out = core.branch_sum(terms.base, terms.E, -1j * s * terms.jp, 1j * s * terms.jm, t)
    if model.ac_background is not None:
        out = out + terms.base @ ac_time_profile(model, terms.q, t, step=h)
    return out * terms.prefactor


def slowdown_flatness(
    model: QuasifreeModel,
    spec: BlockObservableSpec,
    R: float,
    t_window: tuple[float, float],
    dt: float | None = None,
    samples: int = 33,
) -> float:
    """max over the window of |d/dt C_R(t)|, Richardson-extrapolated central differences."""
    t0, t1 = map(float, t_window)
    if not t1 > t0:
        raise ValueError("time window must have positive length")
    h = 1e-3 * (t1 - t0) if dt is None else float(dt)
    if not 0 < h < t1 - t0:
        raise ValueError("dt must be positive and smaller than the window")
    t = np.linspace(t0, t1, samples)
    d_h = difference_quotient(model, spec, R, t, h)
    d_half = difference_quotient(model, spec, R, t, h / 2.0)
    return float(np.max(np.abs((4.0 * d_half - d_h) / 3.0)))


def rescaled_flatness(model, spec, R: float, tau_window: tuple[float, float], delta: float, dtau: float | None = None) -> float:
    """max |d/dtau C_R(R^delta tau)| over a tau window."""
    scale = R**delta
    a, b = tau_window
    dt = None if dtau is None else scale * dtau
    return scale * slowdown_flatness(model, spec, R, (scale * a, scale * b), dt)


def flatness_sweep(model, spec, r_grid, t_window, *, workers=None):
    return scale_sweep(
        lambda R: slowdown_flatness(model, spec, R, t_window), r_grid, workers=workers,
        tag=f"flatness window={tuple(t_window)}",
    )


@dataclass(frozen=True)
class DynamicExponentFit:
    """Flatness decay fit and the dynamic exponent read off from it.

    The limiting evolution L(tau) is even in tau, so at fixed microscopic
    time d/dt C_R(t) ~ R^-delta L'(R^-delta t) ~ R^-2 delta; hence
    delta = -slope / 2.
    """

    flatness: ExponentFit

    @property
    def delta(self) -> float:
        return -0.5 * self.flatness.slope

    @property
    def flatness_exponent(self) -> float:
        return -self.flatness.slope


def dynamic_exponent_recover(
    model: QuasifreeModel,
    spec: BlockObservableSpec,
    r_grid,
    t_window: tuple[float, float],
    *,
    workers: int | None = None,
    window: tuple[int, int] | None = None,
) -> DynamicExponentFit:
    if model.dispersion.form is not DispersionForm.PURE_POWER or not model.is_critical:
        raise ValueError("the dynamic exponent is defined for a pure-power branch at mu = 0")
    sweep = flatness_sweep(model, spec, r_grid, t_window, workers=workers)
    return DynamicExponentFit(fit_exponent(sweep, window))


# -------------------------------------------------------- limit oracle


def rescaled_limit(model: QuasifreeModel, spec: BlockObservableSpec, tau: float) -> float:
    """R -> infinity limit of C_R(R^alpha tau) at the critical exponent.

    For e(k) = c|k|^alpha and mu = 0 the branch phase c|k|^alpha tau is
    exactly R-free and the thermal weights reduce to 2 j(0) / (beta c k^alpha):
        (2 pi)^-n S_n integral k^(n-1) |f_hat|^2 2 j(0) cos(c k^alpha tau) / (beta c k^alpha) dk.
    The imaginary part and any a.c. background vanish in the limit.
    """
    n = model.dimension
    law = model.dispersion
    if law.form is not DispersionForm.PURE_POWER or not model.is_critical:
        raise ValueError("the rescaled limit needs a pure-power branch at mu = 0")
    a, c = law.alpha, law.prefactor
    if not math.isclose(spec.gamma, (n + a) / 2.0, rel_tol=0.0, abs_tol=1e-12):
        raise ValueError("the rescaled limit is finite and nonzero only at gamma = (n + alpha)/2")
    if spec.time_derivatives:
        raise ValueError("derivative observables are not covered")
    j0 = model.weight_at_zero().real
    if j0 == 0.0:
        return 0.0
    kernel = spec.kernel
    K = _spectral_cutoff(kernel)
    k_cut = 1.0
    kn, wn = near_origin_rule(model, k_cut, singular=True)
    m = int(math.ceil((K - k_cut) / 0.5)) + int(math.ceil(c * K**a * abs(tau) / 3.0))
    kf, wf, pf = _far_nodes(kernel, k_cut, K, m, 16)
    k = np.concatenate([kn, kf])
    w = np.concatenate([wn, wf * kf ** (n - 1)])
    p = np.concatenate([kernel.power_spectrum(kn), pf])
    g = 2.0 * j0 / (model.beta * c * k**a) * np.cos(c * k**a * tau)
    total = SPHERE_AREA[n] * float(np.sum(w * p * g))
    C = getattr(kernel, "tail_mean_coefficient", 0.0)
    if C:
        # mean tail C/k^2 beyond K, in the variable u = k^alpha
        pw = -(1.0 + 2.0 * a) / a
        amp = 2.0 * j0 / (model.beta * c) * C / a
        if tau == 0.0:
            total += amp * (K**a) ** (pw + 1.0) / -(pw + 1.0)
        else:
            total += amp * quad(lambda u: u**pw, K**a, math.inf, weight="cos", wvar=c * abs(tau), where="limit tail")
    return total / (2.0 * math.pi) ** n


def cauchy_increments(values: Sequence[complex]) -> np.ndarray:
    v = np.asarray(values, dtype=complex)
    return np.abs(np.diff(v))


# ------------------------------------------------------------------ KMS


def smeared_kms_residual(
    model: QuasifreeModel,
    spec: BlockObservableSpec,
    R: float,
    *,
    centre: float = 0.0,
    width: float = 1.0,
    frequency: float = 0.0,
) -> float:
    """Relative mismatch of  int conj(C_R(t)) g(t) dt  and  int C_R(t) g(t + i beta) dt.

    g(t) = exp(-(t - centre)^2 / (2 width^2) + i frequency t) is entire, and
    C_R(t - i beta) = conj(C_R(t)) is the KMS boundary condition for a
    self-adjoint block observable.

    Both integrals are done mode by mode: a branch e^{-i w t} contributes
    g_hat(w) on the left and e^{-beta w} g_hat(-w) on the right after the
    contour shift, where g_hat(w) = int e^{i w t} g(t) dt is Gaussian.
    """
    if not width > 0:
        raise ValueError("width must be positive")
    beta = model.beta
    terms = branch_terms(model, spec, R, np.zeros(model.dimension))
    if terms.vanishing:
        return 0.0
    norm = width * math.sqrt(2.0 * math.pi)

    def ghat(w, log_factor=0.0):
        # log_factor is folded into the exponent so e^{beta E} never overflows on its own
        v = w + frequency
        return norm * np.exp(log_factor - 0.5 * (width * v) ** 2 + 1j * v * centre)

    E = terms.E
    base = terms.base * terms.prefactor
    lhs = np.sum(np.conj(base) * (np.conj(terms.jp) * ghat(E) + np.conj(terms.jm) * ghat(-E)))
    rhs = np.sum(base * (terms.jp * ghat(-E, -beta * E) + terms.jm * ghat(E, beta * E)))
    if model.ac_background is not None:
        extent = getattr(model.ac_background, "omega_extent", 10.0)
        w, ww = composite_gauss(np.linspace(-extent, extent, 9), 12)
        dens = model.ac_background(w[None, :], terms.q[:, None]) * _bose(beta * w)[None, :]
        lhs += np.sum(np.conj(base) @ (np.conj(dens) * (ww * ghat(w))[None, :]))
        rhs += np.sum(base @ (dens * (ww * ghat(-w, -beta * w))[None, :]))
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return float(abs(lhs - rhs) / scale)
