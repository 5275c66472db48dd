"""Quadrature building blocks: fixed rules, adaptive wrappers, radial geometry.

The adaptive routines are thin wrappers over QUADPACK (``scipy.integrate.quad``)
which record the achieved error so that experiment manifests can report it.
Fixed Gauss rules are used wherever the same nodes are reused across many
scales R.
"""

from __future__ import annotations

import contextlib
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy import integrate, special

from .errors import DimensionError, QuadratureError

SUPPORTED_DIMENSIONS = (1, 2, 3)

# "Surface area" of the unit sphere S^{n-1}; for n = 1 the two points +-1.
SPHERE_AREA = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


@dataclass
class Tolerances:
    abs: float = 1e-10
    rel: float = 1e-8


@dataclass
class QuadratureReport:
    """Largest error estimate returned by any adaptive call while active."""

    max_abs_error: float = 0.0
    calls: int = 0
    failures: list = field(default_factory=list)

    def record(self, err, where=""):
        self.calls += 1
        if np.isfinite(err):
            self.max_abs_error = max(self.max_abs_error, float(err))
        else:
            self.failures.append(where)


TOLERANCES = Tolerances()
_REPORTS: list[QuadratureReport] = []


@contextlib.contextmanager
def tolerances(abs_tol: float | None = None, rel_tol: float | None = None) -> Iterator[Tolerances]:
    """Temporarily override the module-wide adaptive tolerances."""
    old = (TOLERANCES.abs, TOLERANCES.rel)
    if abs_tol is not None:
        TOLERANCES.abs = float(abs_tol)
    if rel_tol is not None:
        TOLERANCES.rel = float(rel_tol)
    try:
        yield TOLERANCES
    finally:
        TOLERANCES.abs, TOLERANCES.rel = old


@contextlib.contextmanager
def track_quadrature() -> Iterator[QuadratureReport]:
    report = QuadratureReport()
    _REPORTS.append(report)
    try:
        yield report
    finally:
        _REPORTS.remove(report)


def _record(err, where):
    for rep in _REPORTS:
        rep.record(err, where)


def check_dimension(n: int) -> int:
    if int(n) != n or int(n) not in SUPPORTED_DIMENSIONS:
        raise DimensionError(f"dimension {n!r} unsupported; expected one of {SUPPORTED_DIMENSIONS}")
    return int(n)


def quad(
    func: Callable[[float], float],
    a: float,
    b: float,
    *,
    points: Sequence[float] | None = None,
    weight: str | None = None,
    wvar=None,
    limit: int = 400,
    epsabs: float | None = None,
    epsrel: float | None = None,
    strict: bool = False,
    where: str = "",
) -> float:
    """Adaptive Gauss-Kronrod integral of a real function.

    ``strict=True`` raises :class:`QuadratureError` when the error estimate
    exceeds 100x the requested tolerance; otherwise the estimate is only
    recorded.
    """
    epsabs = TOLERANCES.abs if epsabs is None else epsabs
    epsrel = TOLERANCES.rel if epsrel is None else epsrel
    kwargs = dict(epsabs=epsabs, epsrel=epsrel, limit=limit)
    if points is not None and weight is None:
        pts = sorted({float(p) for p in points if a < p < b})
        if pts:
            kwargs["points"] = pts
    if weight is not None:
        kwargs["weight"] = weight
        kwargs["wvar"] = wvar
        if weight in ("cos", "sin") and math.isinf(b):
            kwargs.pop("epsrel")
            kwargs["limlst"] = 200
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(func, a, b, **kwargs)[:2]
    _record(err, where)
    if strict and err > 100.0 * max(epsabs, epsrel * abs(val)):
        raise QuadratureError(f"quadrature did not converge ({where}): error {err:.3g}", achieved=err)
    return val


def complex_quad(func, a, b, **kwargs) -> complex:
    re = quad(lambda x: func(x).real, a, b, **kwargs)
    im = quad(lambda x: func(x).imag, a, b, **kwargs)
    return complex(re, im)


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_gauss(edges: Sequence[float], order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite Gauss-Legendre rule over ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


@lru_cache(maxsize=None)
def _jacobi(order: int, power: float):
    # weight (1 + x)^power on [-1, 1]
    x, w = special.roots_jacobi(order, 0.0, power)
    return x, w


def power_weight_gauss(power: float, upper: float, order: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Rule for integral_0^upper u^power h(u) du with smooth h (power > -1)."""
    if power <= -1.0:
        raise ValueError("power weight must exceed -1")
    x, w = _jacobi(order, float(power))
    u = 0.5 * upper * (x + 1.0)
    return u, w * (0.5 * upper) ** (power + 1.0)


def fourier_tail(
    amplitudes: Callable[[float], tuple[float, float, float]],
    start: float,
    omega: float,
) -> float:
    """integral_start^inf [a0(q) + a1(q) cos(omega q) + a2(q) sin(omega q)] dq.

    The amplitudes must be slowly varying and decay at least like 1/q.  The
    oscillating parts use QUADPACK's QAWF (integration between zeros with
    epsilon-algorithm acceleration); the non-oscillating part is mapped to a
    finite interval.
    """
    total = quad(lambda q: amplitudes(q)[0], start, math.inf, where="tail:mean")
    total += quad(lambda q: amplitudes(q)[1], start, math.inf, weight="cos", wvar=omega, where="tail:cos")
    total += quad(lambda q: amplitudes(q)[2], start, math.inf, weight="sin", wvar=omega, where="tail:sin")
    return total


def plane_wave_average(n: int, x):
    """Average of exp(i k.y) over directions of k, as a function of x = |k||y|."""
    x = np.asarray(x, dtype=float)
    if n == 1:
        return np.cos(x)
    if n == 2:
        return special.j0(x)
    return np.sinc(x / math.pi)


def _split_gauss(lo: float, hi: float, cuts, order: int = 24, pieces: int = 2):
    edges = sorted({lo, hi} | {c for c in cuts if lo < c < hi})
    fine = []
    for a, b in zip(edges[:-1], edges[1:]):
        fine.extend(np.linspace(a, b, pieces + 1)[:-1])
    fine.append(edges[-1])
    return composite_gauss(fine, order)


def shell_average(g: Callable, rho: float, Y: float, n: int, g_breaks: Sequence[float] = ()) -> float:
    """integral over the unit sphere of g(|rho*w - Y e|) dw (not normalised).

    ``g`` must accept numpy arrays of radii and vanish beyond its support;
    ``g_breaks`` lists radii where g is not smooth.
    """
    if Y == 0.0 or rho == 0.0:
        return SPHERE_AREA[n] * float(g(np.array([abs(rho - Y)]))[0])
    if n == 1:
        return float(np.sum(g(np.array([abs(rho - Y), rho + Y]))))
    lo, hi = abs(rho - Y), rho + Y
    if n == 3:
        s, w = _split_gauss(lo, hi, g_breaks)
        return 2.0 * math.pi * float(np.sum(w * s * g(s))) / (rho * Y)
    # n = 2: angle phi with |rho w - Y e|^2 = rho^2 + Y^2 - 2 rho Y cos(phi)
    cuts = []
    for b in g_breaks:
        c = (rho * rho + Y * Y - b * b) / (2.0 * rho * Y)
        if -1.0 < c < 1.0:
            cuts.append(math.acos(c))
    phi, w = _split_gauss(0.0, math.pi, cuts, order=32)
    r = np.sqrt(np.maximum(rho * rho + Y * Y - 2.0 * rho * Y * np.cos(phi), 0.0))
    return 2.0 * float(np.sum(w * g(r)))


def two_center_integral(
    g: Callable,
    g_support: float,
    h: Callable[[float], float],
    Y: float,
    n: int,
    *,
    h_power: float = 0.0,
    g_breaks: Sequence[float] = (),
    h_breaks: Sequence[float] = (),
) -> float:
    """integral_{R^n} g(|y|) * |y + Y|^(-h_power) * h(|y + Y|) d^n y.

    Computed in polar coordinates centred on the point y = -Y, so an
    integrable power singularity there (``h_power < n``) is absorbed into an
    algebraic weight.  ``g`` is a vectorised radial function supported in
    the ball of radius ``g_support``; ``h`` is a scalar radial function.
    """
    n = check_dimension(n)
    Y = abs(float(Y))
    lo = max(0.0, Y - g_support)
    hi = Y + g_support
    expo = n - 1 - h_power
    if expo <= -1.0:
        raise ValueError("singularity is not integrable")
    kinks = {Y + b for b in g_breaks} | {abs(Y - b) for b in g_breaks} | set(h_breaks)
    kinks |= {hi, lo}

    def integrand(rho):
        return h(rho) * shell_average(g, rho, Y, n, g_breaks)

    if lo > 0.0 or expo == 0.0:
        return quad(
            lambda r: r**expo * integrand(r), lo, hi, points=sorted(kinks), limit=800, where="two-center"
        )
    # algebraic weight near the singular point rho = 0
    cut = min(0.1, 0.5 * min(k for k in kinks if k > 0.0))
    near = quad(integrand, 0.0, cut, weight="alg", wvar=(expo, 0.0), where="two-center:alg")
    far = quad(lambda r: r**expo * integrand(r), cut, hi, points=sorted(kinks), limit=800, where="two-center")
    return near + far


def is_integrable(func: Callable[[float], float], n: int, radii=(8.0, 16.0, 32.0, 64.0, 128.0), tol: float = 1e-6) -> bool:
    """Numerical L1 check for a radial function: integrals of |func| over
    growing balls must Cauchy-converge within ``tol`` (relative to the total).
    """
    n = check_dimension(n)
    vals = []
    prev = 0.0
    acc = 0.0
    for r in radii:
        acc += quad(lambda s: abs(func(s)) * s ** (n - 1), prev, r, limit=800, where="L1")
        vals.append(SPHERE_AREA[n] * acc)
        prev = r
    if not np.all(np.isfinite(vals)):
        return False
    return abs(vals[-1] - vals[-2]) <= tol * max(1.0, abs(vals[-1]))
