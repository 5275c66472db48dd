"""Block observables at finite scale R, their scaling limits and exponent fits.

A block observable at macroscopic position X is
    A_R(X) = R^-gamma * integral A(x) f(x/R - X) d^n x,
so its two-point function in the normal regime tends to
W_hat^T(0) (f*f)(X_1 - X_2) and in the critical regime to
c * integral |y + Y|^-(n-alpha) (f*f)(y) d^n y.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import special

from ._backend import core
from .errors import DimensionError, DivergenceError, FitError
from .kernels import AveragingKernel, ProfileKernel
from .quadrature import (
    SPHERE_AREA,
    check_dimension,
    composite_gauss,
    is_integrable,
    plane_wave_average,
    power_weight_gauss,
    quad,
    two_center_integral,
)
from .spectral_models import (
    DispersionForm,
    QuasifreeModel,
    ac_time_profile,
    is_singular_at_origin,
    j_minus_array,
    j_plus_array,
    near_origin_rule,
)

Kernel = AveragingKernel | ProfileKernel


@dataclass(frozen=True)
class BlockObservableSpec:
    """Scaling exponent and averaging kernel of a block observable.

    ``time_derivatives`` = m multiplies the branch weights by omega^(2m),
    i.e. describes the m-th time derivative of the point observable.
    """

    gamma: float
    kernel: Kernel = field(default_factory=AveragingKernel)
    label: str = "A"
    time_shift: float = 0.0
    time_derivatives: int = 0

    def __post_init__(self):
        if not math.isfinite(self.gamma):
            raise ValueError("gamma must be finite")

    def derivative(self) -> "BlockObservableSpec":
        return BlockObservableSpec(self.gamma, self.kernel, f"d/dt {self.label}", self.time_shift, self.time_derivatives + 1)

    def with_gamma(self, gamma: float) -> "BlockObservableSpec":
        return BlockObservableSpec(gamma, self.kernel, self.label, self.time_shift, self.time_derivatives)


@dataclass
class ScaleSweep:
    r_grid: np.ndarray
    values: np.ndarray
    computation_tag: str = ""
    failures: dict = field(default_factory=dict)

    def __post_init__(self):
        self.r_grid = np.asarray(self.r_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        _check_grid(self.r_grid)

    def __len__(self):
        return self.r_grid.size

    def scaled(self, factor_per_r: Callable[[np.ndarray], np.ndarray]) -> "ScaleSweep":
        return ScaleSweep(self.r_grid, self.values * factor_per_r(self.r_grid), self.computation_tag, dict(self.failures))


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    max_residual: float
    window: tuple[int, int]
    excluded: tuple[int, ...] = ()
    points: int = 0


# ------------------------------------------------------------------ sweeps


def geometric_grid(r_min: float, r_max: float, points: int) -> np.ndarray:
    if not 0 < r_min < r_max or points < 2:
        raise ValueError("need 0 < r_min < r_max and at least two points")
    return np.geomspace(r_min, r_max, int(points))


def _check_grid(r):
    if r.ndim != 1 or r.size == 0:
        raise ValueError("r_grid must be a non-empty 1-d sequence")
    if np.any(r <= 0) or np.any(np.diff(r) <= 0):
        raise ValueError("r_grid must be positive and strictly increasing")


def default_workers() -> int:
    env = os.environ.get("RGSCALELAB_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def scale_sweep(
    computation: Callable[[float], complex],
    r_grid: Sequence[float],
    *,
    workers: int | None = None,
    tag: str = "",
) -> ScaleSweep:
    """Evaluate ``computation`` at every R.  Each point is independent, so the
    result does not depend on the number of workers; a failing point is stored
    as NaN with its message in ``failures``.
    """
    r = np.asarray(r_grid, dtype=float)
    _check_grid(r)
    workers = default_workers() if workers is None else max(1, int(workers))
    values = np.full(r.size, np.nan + 0j, dtype=complex)
    failures: dict[int, str] = {}

    def one(i):
        try:
            return i, complex(computation(float(r[i]))), None
        except Exception as exc:  # recorded per point, the sweep continues
            return i, None, f"{type(exc).__name__}: {exc}"

    if workers == 1 or r.size == 1:
        results = [one(i) for i in range(r.size)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(r.size)))
    for i, val, err in results:
        if err is None:
            values[i] = val
        else:
            failures[i] = err
    return ScaleSweep(r, values, tag, failures)


def fit_exponent(sweep: ScaleSweep, window: tuple[int, int] | None = None) -> ExponentFit:
    """Least-squares line through (log R, log|value|).

    The default window is the upper half of the grid, widened to at least
    four points when the grid allows.
    """
    n = len(sweep)
    lo, hi = window if window is not None else (max(0, min(n // 2, n - 4)), n)
    lo, hi = max(0, lo), min(n, hi)
    idx = np.arange(lo, hi)
    mags = np.abs(sweep.values[idx])
    ok = np.isfinite(mags) & (mags > 0)
    excluded = tuple(int(i) for i in idx[~ok])
    idx = idx[ok]
    if idx.size < 4:
        raise FitError(f"only {idx.size} usable points in window [{lo}, {hi}); need 4")
    x = np.log(sweep.r_grid[idx])
    y = np.log(np.abs(sweep.values[idx]))
    if np.ptp(x) == 0:
        raise FitError("degenerate window: all R equal")
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + intercept))))
    return ExponentFit(float(slope), float(intercept), resid, (lo, hi), excluded, int(idx.size))


# ------------------------------------------------------- spectral pipeline


@lru_cache(maxsize=64)
def _spectral_cutoff(kernel) -> float:
    """Radius beyond which k^(n-1)|f_hat|^2 is negligible (1e-17 relative)."""
    if getattr(kernel, "tail_mean_coefficient", 0.0) or not isinstance(kernel, AveragingKernel):
        return 2000.0
    n = kernel.dimension
    k = np.linspace(0.0, 400.0, 4001)
    p = kernel.power_spectrum(k) * np.maximum(k, 1.0) ** (n - 1)
    big = np.nonzero(np.abs(p) > 1e-17 * kernel.fourier_at_zero**2)[0]
    return float(min(400.0, k[big[-1]] + 5.0))


@dataclass(frozen=True)
class RadialRule:
    """Nodes k and weights w with integral_0^inf k^(n-1) G(k) dk ~ sum w G(k)."""

    k: np.ndarray
    w: np.ndarray
    power: np.ndarray


def spectral_rule(
    model: QuasifreeModel,
    kernel: Kernel,
    R: float,
    Y: float,
    t_max: float = 0.0,
    *,
    singular: bool,
    order: int = 16,
) -> RadialRule:
    n = model.dimension
    K = _spectral_cutoff(kernel)
    k_cut = min(1.0, math.pi / (2.0 * Y)) if Y > 0 else 1.0
    kn, wn = near_origin_rule(model, k_cut, singular=singular)
    e_top = float(abs(model.energy(K / R)))
    # about three radians of branch phase per panel
    m = _panel_count(K - k_cut, Y) + int(math.ceil(e_top * t_max / 3.0))
    kf, wf, pf = _far_nodes(kernel, k_cut, K, m, order)
    k = np.concatenate([kn, kf])
    w = np.concatenate([wn, wf * kf ** (n - 1)])
    power = np.concatenate([kernel.power_spectrum(kn), pf])
    return RadialRule(k, w, power)


def _panel_count(length: float, Y: float) -> int:
    # a 16-point panel resolves about two periods of cos(kY)
    width = min(0.5, 2.0 * math.pi / max(Y, 1e-300))
    return max(1, int(math.ceil(length / width)))


@lru_cache(maxsize=256)
def _far_nodes(kernel, k_cut: float, K: float, m: int, order: int):
    k, w = composite_gauss(np.linspace(k_cut, K, m + 1), order)
    p = kernel.power_spectrum(k)
    for a in (k, w, p):
        a.setflags(write=False)
    return k, w, p


def _tail_rule(kernel: Kernel, Y: float, order: int = 24):
    """Mean large-k tail  integral_K^inf C/k^2 G(k) dk  in v = 1/k (only for Y = 0)."""
    c = getattr(kernel, "tail_mean_coefficient", 0.0)
    if not c or Y != 0.0:
        return None
    K = _spectral_cutoff(kernel)
    x, w = np.polynomial.legendre.leggauss(order)
    v = 0.5 / K * (x + 1.0)
    return 1.0 / v, c * w * 0.5 / K


@dataclass(frozen=True)
class BranchTerms:
    """Discretised branch data of a block two-point function at one scale.

    The value at time t is  prefactor * sum base * (jp e^{-iEt} + jm e^{iEt})
    plus the a.c. part, with q = k/R the microscopic momenta.
    """

    base: np.ndarray
    q: np.ndarray
    E: np.ndarray
    jp: np.ndarray
    jm: np.ndarray
    prefactor: float
    vanishing: bool = False


def branch_terms(model: QuasifreeModel, spec: BlockObservableSpec, R: float, Y, t_max: float = 0.0) -> BranchTerms:
    n = model.dimension
    kernel = spec.kernel
    if kernel.dimension != n:
        raise DimensionError("kernel and model dimensions differ")
    if not R > 0:
        raise ValueError("R must be positive")
    Yv = np.atleast_1d(np.asarray(Y, dtype=float))
    if Yv.size != n:
        raise DimensionError(f"Y has {Yv.size} components, model dimension is {n}")
    Ynorm = float(np.linalg.norm(Yv))
    pref = R ** (n - 2.0 * spec.gamma) / (2.0 * math.pi) ** n
    if model.ac_background is None and not np.any(model.weight(np.linspace(0.0, 10.0, 101))):
        empty = np.zeros(0)
        return BranchTerms(empty, empty, empty, empty.astype(complex), empty.astype(complex), pref, True)
    m = spec.time_derivatives
    if m and model.ac_background is not None:
        raise NotImplementedError("time derivatives with an a.c. background are not supported")
    singular = is_singular_at_origin(model) and m == 0
    rule = spectral_rule(model, kernel, R, Ynorm, t_max, singular=singular)
    k = rule.k
    base = rule.w * SPHERE_AREA[n] * rule.power * plane_wave_average(n, k * Ynorm)
    tail = _tail_rule(kernel, Ynorm)
    if tail is not None:
        k = np.concatenate([k, tail[0]])
        base = np.concatenate([base, tail[1]])
    q = k / R
    E = model.energy(q)
    jp = j_plus_array(model, q)
    jm = j_minus_array(model, q)
    if m:
        jp = jp * E ** (2 * m)
        jm = jm * E ** (2 * m)
    return BranchTerms(base, q, E, jp, jm, pref)


def block_two_point_series(
    model: QuasifreeModel,
    spec: BlockObservableSpec,
    R: float,
    Y,
    t,
) -> np.ndarray:
    """Vectorised block two-point function over an array of times t."""
    t = np.atleast_1d(np.asarray(t, dtype=float)) + spec.time_shift
    terms = branch_terms(model, spec, R, Y, float(np.max(np.abs(t))))
    if terms.vanishing:
        return np.zeros(t.shape, dtype=complex)
    out = core.branch_sum(terms.base, terms.E, terms.jp, terms.jm, t)
    if model.ac_background is not None:
        out = out + terms.base @ ac_time_profile(model, terms.q, t)
    return out * terms.prefactor


def block_two_point_spectral(model: QuasifreeModel, spec: BlockObservableSpec, R: float, Y, t: float = 0.0) -> complex:
    """R^(n-2 gamma) (2 pi)^-n integral e^{-ik.Y} |f_hat(k)|^2 [J_+ e^{-iEt} + J_- e^{iEt}](k/R) d^n k."""
    return complex(block_two_point_series(model, spec, R, Y, [t])[0])


def autocorrelation_sweep(model, spec, r_grid, *, workers=None) -> ScaleSweep:
    zero = np.zeros(model.dimension)
    return scale_sweep(
        lambda R: block_two_point_spectral(model, spec, R, zero, 0.0), r_grid, workers=workers,
        tag=f"autocorrelation gamma={spec.gamma:g}",
    )


def derivative_exponent_shift(
    model: QuasifreeModel, spec: BlockObservableSpec, r_grid, *, workers=None
) -> tuple[ExponentFit, ExponentFit]:
    """Fits for the autocorrelation of A and of its time derivative at the same gamma."""
    if model.dispersion.form is not DispersionForm.PURE_POWER or not model.is_critical:
        raise ValueError("the exponent shift is defined for a pure-power branch at mu = 0")
    fa = fit_exponent(autocorrelation_sweep(model, spec, r_grid, workers=workers))
    fd = fit_exponent(autocorrelation_sweep(model, spec.derivative(), r_grid, workers=workers))
    return fa, fd


# ------------------------------------------------------- normal regime


@dataclass(frozen=True, eq=False)
class GaussianTruncated:
    """W^T(z) = A exp(-z.M^-1.z / 2) on the (l-1) n difference variables."""

    order: int = 2
    dimension: int = 1
    amplitude: float = 1.0
    covariance: np.ndarray | None = None

    def __post_init__(self):
        d = (self.order - 1) * self.dimension
        if self.order < 2:
            raise ValueError("truncated functions start at order 2")
        cov = np.eye(d) if self.covariance is None else np.asarray(self.covariance, dtype=float)
        if cov.shape != (d, d):
            raise DimensionError(f"covariance must be {d}x{d}")
        np.linalg.cholesky(cov)
        object.__setattr__(self, "covariance", cov)

    @property
    def variables(self) -> int:
        return (self.order - 1) * self.dimension

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        q = np.einsum("...i,ij,...j->...", z, np.linalg.inv(self.covariance), z)
        return self.amplitude * np.exp(-0.5 * q)

    def fourier(self, p):
        p = np.asarray(p, dtype=float)
        d = self.variables
        norm = self.amplitude * (2.0 * math.pi) ** (d / 2) * math.sqrt(np.linalg.det(self.covariance))
        return norm * np.exp(-0.5 * np.einsum("...i,ij,...j->...", p, self.covariance, p))

    def integral(self) -> float:
        return float(self.fourier(np.zeros(self.variables)))

    def radial(self, rho):
        """Profile for isotropic covariance s^2 I: W^T as a function of |z| (order 2)."""
        s2 = self.covariance[0, 0]
        return self.amplitude * np.exp(-0.5 * np.asarray(rho, dtype=float) ** 2 / s2)

    @property
    def width(self) -> float:
        return float(math.sqrt(np.max(np.linalg.eigvalsh(self.covariance))))


def _fourier_support(kernel: Kernel, rel: float = 1e-13) -> float:
    k = np.linspace(0.0, 400.0, 8001)
    f = np.abs(kernel.fourier(k))
    big = np.nonzero(f > rel * abs(kernel.fourier_at_zero))[0]
    return float(k[big[-1]] + 2.0)


def normal_two_point_limit(truncated_w: GaussianTruncated, kernel: Kernel, Y) -> float:
    """W_hat^T(0) (2 pi)^-n integral e^{-ipY} |f_hat(p)|^2 d^n p, by frequency quadrature."""
    n = kernel.dimension
    Ynorm = float(np.linalg.norm(np.atleast_1d(Y)))
    K = _spectral_cutoff(kernel)
    k, w, power = _far_nodes(kernel, 0.0, K, _panel_count(K, Ynorm), 16)
    total = np.sum(w * k ** (n - 1) * power * plane_wave_average(n, k * Ynorm))
    total = SPHERE_AREA[n] * total
    c = getattr(kernel, "tail_mean_coefficient", 0.0)
    if c and Ynorm == 0.0:
        total += c / K
    return float(truncated_w.integral() * total / (2.0 * math.pi) ** n)


def _offsets(X, l: int, n: int) -> np.ndarray:
    X = np.asarray(X, dtype=float).reshape(l, n)
    return X[:-1] - X[-1]


def block_l_point_normal(
    truncated_w: GaussianTruncated,
    kernel: Kernel,
    R: float,
    X,
    *,
    route: str = "auto",
    order: int | None = None,
) -> complex:
    """Scaled truncated l-point function of block observables at gamma = n/2.

    ``route`` selects the frequency representation ("fourier", l <= 3, n = 1)
    or the difference-variable representation ("position"); "auto" uses
    frequency space for l = 2 with a rapidly decaying kernel transform.  The
    l = 3 frequency route is a two-dimensional product rule and is meant as
    an independent check at moderate R.
    """
    l, n = truncated_w.order, truncated_w.dimension
    if not 2 <= l <= 4:
        raise ValueError("l must be 2, 3 or 4")
    if kernel.dimension != n:
        raise DimensionError("kernel and truncated function dimensions differ")
    offs = _offsets(X, l, n)
    fast = isinstance(kernel, AveragingKernel) and not kernel.is_sharp
    if route == "auto":
        route = "fourier" if (l == 2 and n == 1 and fast) else "position"
    prefactor = R ** ((2 - l) * n / 2.0)
    if route == "fourier":
        if n != 1 or l > 3:
            raise ValueError("the frequency route is implemented for n = 1 and l <= 3")
        return prefactor * _normal_fourier(truncated_w, kernel, R, offs[:, 0], order or 8)
    return prefactor * _normal_position(truncated_w, kernel, R, offs, order)


def _normal_fourier(w_t, kernel, R, offs, order):
    K = _fourier_support(kernel)
    l = w_t.order
    edges = np.linspace(-K, K, int(math.ceil(2 * K / 0.4)) + 1)
    p, wp = composite_gauss(edges, order)
    fhat = kernel.fourier(p)
    if l == 2:
        # f_hat(-p) f_hat(p) = |f_hat(p)|^2 for real f
        val = np.sum(wp * w_t.fourier(p[:, None] / R) * np.abs(fhat) ** 2 * np.exp(1j * p * offs[0]))
        return complex(val / (2.0 * math.pi))
    return _normal_fourier_l3(w_t, kernel, R, offs, K)


def _normal_fourier_l3(w_t, kernel, R, offs, K, h=0.25):
    # Uniform grid: the integrand's conjugate-space support is compact, so the
    # trapezoid rule is spectrally accurate and f_hat(p1 + p2) is a table lookup.
    N = int(math.ceil(K / h))
    idx = np.arange(-N, N + 1)
    p = idx * h
    table = kernel.fourier(np.arange(-2 * N, 2 * N + 1) * h)
    fneg = np.conj(table[N : 3 * N + 1])
    P1, P2 = np.meshgrid(p, p, indexing="ij")
    fsum = table[idx[:, None] + idx[None, :] + 2 * N]
    g = (
        w_t.fourier(np.stack([P1, P2], axis=-1) / R)
        * fneg[:, None]
        * fneg[None, :]
        * fsum
        * np.exp(1j * (P1 * offs[0] + P2 * offs[1]))
    )
    return complex(h * h * np.sum(g) / (2.0 * math.pi) ** 2)


def _overlap(kernel, shifts: np.ndarray, order: int = 48) -> np.ndarray:
    """integral f(y) prod_i f(y + a_i) dy for rows a of ``shifts`` (n = 1)."""
    if kernel_is_smooth(kernel):
        # C-infinity integrand: a fixed composite rule over the support converges fast
        S = kernel.support_radius
        y, w = composite_gauss(np.linspace(-S, S, 9), 24)
        prod = np.broadcast_to(kernel.profile(y), (shifts.shape[0], y.size))
        for j in range(shifts.shape[1]):
            prod = prod * kernel.profile(y[None, :] + shifts[:, j][:, None])
        return prod @ w
    a, b = (-kernel.support_radius, kernel.support_radius) if isinstance(kernel, AveragingKernel) else kernel.support
    lo = np.maximum(a, np.max(a - shifts, axis=1, initial=a))
    hi = np.minimum(b, np.min(b - shifts, axis=1, initial=b))
    out = np.zeros(shifts.shape[0])
    live = hi > lo
    if not np.any(live):
        return out
    x, w = np.polynomial.legendre.leggauss(order)
    lo, hi = lo[live], hi[live]
    half = 0.5 * (hi - lo)
    y = 0.5 * (hi + lo)[:, None] + half[:, None] * x[None, :]
    prod = _eval_1d(kernel, y)
    for j in range(shifts.shape[1]):
        prod = prod * _eval_1d(kernel, y + shifts[live, j][:, None])
    out[live] = np.sum(prod * w[None, :], axis=1) * half
    return out


def _eval_1d(kernel, x):
    if isinstance(kernel, AveragingKernel):
        return kernel.profile(x)
    return kernel(x)


def _normal_position(w_t, kernel, R, offs, order):
    n = w_t.dimension
    l = w_t.order
    if l == 2:
        return real_space_two_point(w_t, kernel, R, offs[0])
    if n != 1:
        raise ValueError("the position route for l >= 3 is implemented for n = 1")
    d = w_t.variables
    order = order or (40 if d == 2 else 28)
    # Gauss-Hermite in z = sqrt(2) L xi with covariance L L^T
    xi, wh = special.roots_hermite(order)
    grids = np.meshgrid(*([xi] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wts = np.prod(np.meshgrid(*([wh] * d), indexing="ij"), axis=0).ravel()
    L = np.linalg.cholesky(w_t.covariance)
    z = math.sqrt(2.0) * pts @ L.T
    jac = w_t.amplitude * 2.0 ** (d / 2) * float(np.prod(np.diag(L)))
    shifts = z / R - offs[:, 0][None, :]
    vals = _overlap(kernel, shifts)
    return complex(jac * np.sum(wts * vals))


def _check_integrable(truncated_w, n: int) -> None:
    if isinstance(truncated_w, GaussianTruncated):
        return
    radial = getattr(truncated_w, "radial", None)
    if radial is not None:
        mag = lambda r: abs(float(radial(r)))
    else:  # n = 1 callable on points; both half-lines
        mag = lambda r: abs(float(truncated_w(np.array([r])))) + abs(float(truncated_w(np.array([-r]))))
    if not is_integrable(mag, n):
        raise DivergenceError("the truncated function is not integrable")


def kernel_is_smooth(kernel) -> bool:
    return isinstance(kernel, AveragingKernel) and not kernel.is_sharp


def real_space_two_point(truncated_w, kernel: Kernel, R: float, Y) -> float:
    """integral W^T(z) (f*f)(z/R - Y) d^n z  (l = 2, gamma = n/2)."""
    n = kernel.dimension
    _check_integrable(truncated_w, n)
    Yv = np.atleast_1d(np.asarray(Y, dtype=float))
    S = kernel.convolution_support
    conv = kernel.self_convolution
    if n == 1:
        y = float(Yv[0])
        breaks = {R * (y + s) for s in (-S, 0.0, S)}
        breaks |= {R * (y + s) for s in (-1.0, 1.0, -2.0, 2.0)}
        lo, hi = R * (y - S), R * (y + S)
        width = getattr(truncated_w, "width", 1.0)
        breaks |= {c * width for c in (-8.0, 0.0, 8.0)}
        return quad(
            lambda z: float(truncated_w(np.array([z]))) * float(conv(z / R - y)), lo, hi,
            points=sorted(breaks), limit=1000, epsabs=1e-14, epsrel=1e-12, where="real-space 2pt",
        )
    radial = getattr(truncated_w, "radial")
    width = getattr(truncated_w, "width", 1.0)
    return two_center_integral(
        lambda r: conv(r), S, lambda rho: R**n * float(radial(R * rho)), float(np.linalg.norm(Yv)), n,
        g_breaks=(S,), h_breaks=tuple(c * width / R for c in (1.0, 4.0, 8.0)),
    )


def sharp_real_space_two_point(truncated_w, R: float, Y) -> float:
    """Real-space scaled two-point value with the sharp ball kernel."""
    n = truncated_w.dimension
    return real_space_two_point(truncated_w, AveragingKernel("sharp", n), R, Y)


# ------------------------------------------------------- critical regime


@dataclass(frozen=True, eq=False)
class CriticalTruncated:
    """W^T(x) = (c + F(|x|)) (1 + |x|^2)^(-(n-alpha)/2), F integrable."""

    dimension: int = 1
    alpha: float = 0.5
    constant: float = 1.0
    remainder: Callable | None = None

    def envelope(self, r):
        return (1.0 + np.asarray(r, dtype=float) ** 2) ** (-(self.dimension - self.alpha) / 2.0)

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        extra = self.remainder(r) if self.remainder is not None else 0.0
        return (self.constant + extra) * self.envelope(r)


def gaussian_remainder(amplitude: float = 1.0, width: float = 1.0) -> Callable:
    return lambda r: amplitude * np.exp(-0.5 * (np.asarray(r, dtype=float) / width) ** 2)


def _check_alpha(n, alpha):
    check_dimension(n)
    if not 0.0 < alpha < n:
        raise ValueError(f"alpha must lie in (0, n) = (0, {n}); got {alpha}")


def riesz_constant(n: int, alpha: float) -> float:
    """Transform of |x|^-(n-alpha) in n dimensions is riesz_constant * |k|^-alpha."""
    return math.pi ** (n / 2) * 2.0**alpha * math.gamma(alpha / 2) / math.gamma((n - alpha) / 2)


def critical_limit_two_point(kernel: Kernel, n: int, alpha: float, Y, *, method: str = "position") -> float:
    """integral |y + Y|^-(n-alpha) (f*f)(y) d^n y.

    "position" integrates in polar coordinates about the singular point
    y = -Y; "fourier" uses the Riesz transform and the kernel power spectrum.
    """
    _check_alpha(n, alpha)
    if kernel.dimension != n:
        raise DimensionError("kernel dimension differs from n")
    Ynorm = float(np.linalg.norm(np.atleast_1d(np.asarray(Y, dtype=float))))
    if method == "fourier":
        return _critical_limit_fourier(kernel, n, alpha, Ynorm)
    S = kernel.convolution_support
    breaks = (2.0, S) if isinstance(kernel, AveragingKernel) and kernel.is_sharp else (S,)
    return two_center_integral(
        kernel.self_convolution, S, lambda rho: 1.0, Ynorm, n, h_power=n - alpha, g_breaks=breaks,
    )


def _critical_limit_fourier(kernel, n, alpha, Y):
    K = _spectral_cutoff(kernel)
    k_cut = min(1.0, math.pi / (2.0 * Y)) if Y > 0 else 1.0
    u, wu = power_weight_gauss(n - 1 - alpha, k_cut, 60)
    kf, wf, pf = _far_nodes(kernel, k_cut, K, _panel_count(K - k_cut, Y), 16)
    near = np.sum(wu * kernel.power_spectrum(u) * plane_wave_average(n, u * Y))
    far = np.sum(wf * kf ** (n - 1 - alpha) * pf * plane_wave_average(n, kf * Y))
    total = near + far
    c = getattr(kernel, "tail_mean_coefficient", 0.0)
    if c and Y == 0.0:
        total += c / SPHERE_AREA[n] * K ** (-1.0 - alpha) / (1.0 + alpha)
    return float(riesz_constant(n, alpha) * SPHERE_AREA[n] * total / (2.0 * math.pi) ** n)


def critical_block_two_point_position(
    truncated_w_critical: CriticalTruncated,
    kernel: Kernel,
    gamma: float,
    R: float,
    Y,
    *,
    split: bool = False,
):
    """R^(2n-2 gamma) integral W^T(R(y + Y)) (f*f)(y) d^n y by real-space quadrature.

    With ``split`` the constant part and the remainder part are returned
    separately as a pair.
    """
    w = truncated_w_critical
    n = w.dimension
    if kernel.dimension != n:
        raise DimensionError("kernel dimension differs from the truncated function")
    Ynorm = float(np.linalg.norm(np.atleast_1d(np.asarray(Y, dtype=float))))
    S = kernel.convolution_support
    pref = R ** (2 * n - 2.0 * gamma)
    breaks = (2.0, S) if isinstance(kernel, AveragingKernel) and kernel.is_sharp else (S,)
    hb = tuple(c / R for c in (1.0, 4.0, 16.0, 64.0))

    def part(h):
        return pref * two_center_integral(kernel.self_convolution, S, h, Ynorm, n, g_breaks=breaks, h_breaks=hb)

    const = part(lambda rho: w.constant * float(w.envelope(R * rho)))
    if w.remainder is None:
        rem = 0.0
    else:
        rem = part(lambda rho: float(w.remainder(np.array(R * rho)) * w.envelope(R * rho)))
    return (const, rem) if split else const + rem


def fixed_point_scaling_residual(
    limit_values: Mapping[float, float], L: float, n: int, gamma: float, *, y_min: float = 0.0
) -> float:
    """max over tabulated Y (|Y| >= y_min, L*Y also tabulated) of
    |v(L Y) L^(2(n-gamma)) - v(Y)| / |v(Y)|."""
    if not L > 1:
        raise ValueError("L must exceed 1")
    keys = np.array(sorted(limit_values), dtype=float)
    worst = 0.0
    found = False
    for y in keys:
        if abs(y) < y_min:
            continue
        target = L * y
        j = np.nonzero(np.isclose(keys, target, rtol=1e-9, atol=0.0))[0]
        if j.size == 0:
            continue
        found = True
        v, vl = limit_values[y], limit_values[float(keys[j[0]])]
        worst = max(worst, abs(vl * L ** (2 * (n - gamma)) - v) / abs(v))
    if not found:
        raise ValueError("no pair (Y, L*Y) in the table")
    return worst


def field_vs_block_consistency(kernel: Kernel, n: int, alpha: float, Y) -> float:
    """Relative difference between the limit formula and the double smearing of
    the scale-invariant field correlation |x1 - x2 + Y|^-(n-alpha)."""
    _check_alpha(n, alpha)
    Yv = np.atleast_1d(np.asarray(Y, dtype=float))
    block = critical_limit_two_point(kernel, n, alpha, Yv)
    if n == 1:
        smeared = _double_smearing_1d(kernel, alpha, float(Yv[0]))
    else:
        smeared = critical_limit_two_point(kernel, n, alpha, Yv, method="fourier")
    return abs(block - smeared) / abs(block)


def _double_smearing_1d(kernel, alpha, Y):
    a, b = (-kernel.support_radius, kernel.support_radius) if isinstance(kernel, AveragingKernel) else kernel.support
    kinks = [a, b, -1.0, 1.0] if isinstance(kernel, AveragingKernel) else [a, b]
    p = 1.0 - alpha

    def inner(x2):
        s = x2 - Y  # singular point x1 = x2 - Y
        pts = sorted({c for c in kinks if a < c < b} | ({s} if a < s < b else set()))
        return quad(
            lambda x1: float(_eval_1d(kernel, np.array(x1))) * abs(x1 - s) ** (-p) if x1 != s else 0.0,
            a, b, points=pts, limit=400, epsabs=1e-13, epsrel=1e-11, where="double smearing inner",
        )

    return quad(
        lambda x2: float(_eval_1d(kernel, np.array(x2))) * inner(x2), a, b,
        points=[c for c in kinks if a < c < b], limit=400, epsabs=1e-12, epsrel=1e-10, where="double smearing",
    )


# ------------------------------------------------------- commutators


@dataclass(frozen=True, eq=False)
class GaussianProfile:
    """Radial commutator-norm profile F(y) = A exp(-|y|^2 / (2 s^2)) with its transform."""

    amplitude: float = 1.0
    width: float = 1.0
    dimension: int = 1
    support: float = math.inf

    def __call__(self, r):
        return self.amplitude * np.exp(-0.5 * (np.asarray(r, dtype=float) / self.width) ** 2)

    def fourier(self, k):
        n = self.dimension
        s = self.width
        return self.amplitude * (2 * math.pi * s * s) ** (n / 2) * np.exp(-0.5 * (s * np.asarray(k, dtype=float)) ** 2)


@dataclass(frozen=True, eq=False)
class IndicatorProfile:
    """F(y) = A for |y| <= a, else 0."""

    amplitude: float = 1.0
    radius: float = 1.0
    dimension: int = 1

    @property
    def support(self) -> float:
        return self.radius

    def __call__(self, r):
        return self.amplitude * (np.abs(np.asarray(r, dtype=float)) <= self.radius)

    def fourier(self, k):
        ball = AveragingKernel("sharp", self.dimension)
        return self.amplitude * self.radius**self.dimension * ball.fourier(self.radius * np.asarray(k, dtype=float))


def commutator_bound(
    kernel: Kernel,
    gamma_a: float,
    gamma_b: float,
    R: float,
    comm_profile,
    *,
    method: str = "real",
) -> float:
    """R^-(gamma_a+gamma_b) integral F(y) f(x/R) f((x+y)/R) dx dy for a radial F.

    "real" integrates R^n F(y) (f*f)(y/R) over y; "fourier" uses
    (2 pi)^-n integral F_hat(p/R) |f_hat(p)|^2 d^n p.
    """
    n = kernel.dimension
    pref = R ** (n - gamma_a - gamma_b)
    supp = float(getattr(comm_profile, "support", math.inf))
    if not math.isfinite(supp) and not is_integrable(lambda r: float(comm_profile(r)), n):
        raise DivergenceError("commutator profile is not integrable")
    S = kernel.convolution_support
    if method == "real":
        top = min(S * R, supp)
        pts = {R * c for c in (1.0, 2.0, S) if R * c < top} | ({supp} if supp < top else set())
        width = getattr(comm_profile, "width", None)
        if width:
            pts |= {c * width for c in (1.0, 4.0, 8.0, 16.0) if c * width < top}
        val = quad(
            lambda r: float(comm_profile(r)) * float(kernel.self_convolution(r / R)) * r ** (n - 1),
            0.0, top, points=sorted(pts), limit=1000, epsabs=1e-14, epsrel=1e-12, where="commutator real",
        )
        return pref * SPHERE_AREA[n] * val
    if method != "fourier":
        raise ValueError("method must be 'real' or 'fourier'")
    K = _spectral_cutoff(kernel)
    k, w, power = _far_nodes(kernel, 0.0, K, int(math.ceil(K / 0.25)), 16)
    total = np.sum(w * k ** (n - 1) * comm_profile.fourier(k / R) * power)
    c = getattr(kernel, "tail_mean_coefficient", 0.0)
    if c:
        v, wv = np.polynomial.legendre.leggauss(24)
        v = 0.5 / K * (v + 1.0)
        total += np.sum(c / SPHERE_AREA[n] * wv * 0.5 / K * comm_profile.fourier(1.0 / (v * R)))
    return float(pref * SPHERE_AREA[n] * total / (2.0 * math.pi) ** n)
