"""Averaging kernels, their Fourier transforms and self-convolutions.

Fourier convention used throughout the package::

    f_hat(k) = integral f(x) exp(-i k.x) d^n x

so that the transform of f(x/R) is R^n f_hat(R k), the transform of a
product is (2 pi)^-n times the convolution of the transforms, and Plancherel
reads  integral |f_hat|^2 d^n k = (2 pi)^n integral |f|^2 d^n x.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.polynomial import chebyshev
from scipy import special

from ._backend import core
from .errors import DimensionError
from .quadrature import (
    SPHERE_AREA,
    check_dimension,
    composite_gauss,
    fourier_tail,
    gauss_legendre,
    quad,
)

# Mean of S_n k^(n-1) |chi_hat(k)|^2 at large k is TAIL_MEAN[n] / k^2.
_SHARP_TAIL_MEAN = {1: 4.0, 2: 8.0 * math.pi**2, 3: 32.0 * math.pi**3}


class CutoffType(str, enum.Enum):
    SMOOTH = "smooth"
    SHARP = "sharp"


@dataclass(frozen=True)
class AveragingKernel:
    """Radial cutoff profile f(|x|) in n = 1, 2 or 3 dimensions.

    ``profile_shape`` is the steepness ``lam`` of the smooth step
    g(2-s) / (g(2-s) + g(s-1)) with g(t) = exp(-lam/t); it is ignored for
    the sharp indicator.
    """

    cutoff_type: CutoffType = CutoffType.SMOOTH
    dimension: int = 1
    profile_shape: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "cutoff_type", CutoffType(self.cutoff_type))
        check_dimension(self.dimension)
        if not self.profile_shape > 0:
            raise ValueError("profile_shape must be positive")

    @property
    def is_sharp(self) -> bool:
        return self.cutoff_type is CutoffType.SHARP

    @property
    def support_radius(self) -> float:
        return 1.0 if self.is_sharp else 2.0

    @property
    def convolution_support(self) -> float:
        return 2.0 * self.support_radius

    @property
    def breaks(self) -> tuple[float, ...]:
        return (1.0,) if self.is_sharp else (1.0, 2.0)

    @property
    def tail_mean_coefficient(self) -> float:
        return _SHARP_TAIL_MEAN[self.dimension] if self.is_sharp else 0.0

    def profile(self, s):
        s = np.abs(np.asarray(s, dtype=float))
        if self.is_sharp:
            return (s <= 1.0).astype(float)
        return core.smooth_profile(s, self.profile_shape)

    def __call__(self, x):
        return eval_kernel(self, x)

    def fourier(self, k):
        """Vectorised f_hat(|k|)."""
        return _fourier_values(self, np.abs(np.asarray(k, dtype=float)))

    def power_spectrum(self, k):
        return self.fourier(k) ** 2

    @property
    def fourier_at_zero(self) -> float:
        return float(self.fourier(0.0))

    def self_convolution(self, r):
        """Vectorised (f*f)(|y|) from a cached interpolant (closed form if sharp)."""
        r = np.abs(np.asarray(r, dtype=float))
        return _convolution_interpolant(self)(r)

    def label(self) -> str:
        if self.is_sharp:
            return f"sharp-n{self.dimension}"
        return f"smooth-n{self.dimension}-lam{self.profile_shape:g}"


@dataclass(frozen=True, eq=False)
class ProfileKernel:
    """A bounded, compactly supported, not necessarily even profile on R (n = 1).

    Only used to show that exponents do not depend on the averaging
    function; f*f here means integral f(y + x) f(x) dx, which is even in y.
    """

    func: Callable = field(compare=False)
    support: tuple[float, float] = (-1.0, 1.0)
    breaks_x: tuple[float, ...] = ()
    name: str = "profile"
    dimension: int = 1
    tail_mean_coefficient: float = 0.0
    # power-series coefficients when the profile is a single polynomial piece
    polynomial: tuple[float, ...] | None = None

    @property
    def convolution_support(self) -> float:
        return self.support[1] - self.support[0]

    @property
    def support_radius(self) -> float:
        return max(abs(self.support[0]), abs(self.support[1]))

    @property
    def breaks(self) -> tuple[float, ...]:
        return ()

    def _pieces(self):
        a, b = self.support
        return sorted({a, b, *[x for x in self.breaks_x if a < x < b]})

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.support
        inside = (x >= a) & (x <= b)
        return np.where(inside, self.func(np.clip(x, a, b)), 0.0)

    def fourier(self, k):
        """Complex f_hat(k) = integral f(x) exp(-ikx) dx."""
        k = np.asarray(k, dtype=float)
        flat = k.ravel()
        if self.polynomial is not None and flat.size:
            out = np.empty(flat.shape, dtype=complex)
            big = np.abs(flat) >= 4.0
            out[big] = self._polynomial_fourier(flat[big])
            small = ~big
            if np.any(small):
                out[small] = self._quadrature_fourier(flat[small])
            return out.reshape(k.shape)
        return self._quadrature_fourier(flat).reshape(k.shape)

    def _polynomial_fourier(self, k):
        # repeated integration by parts: int p e^{-ikx} = -e^{-ikx} sum_j p^(j)(x) / (ik)^(j+1)
        p = np.polynomial.Polynomial(self.polynomial)
        a, b = self.support
        total = np.zeros(k.shape, dtype=complex)
        ik = 1j * k
        denom = ik
        for _ in range(p.coef.size):
            total -= (p(b) * np.exp(-1j * k * b) - p(a) * np.exp(-1j * k * a)) / denom
            p = p.deriv()
            denom = denom * ik
        return total

    def _quadrature_fourier(self, flat):
        edges = self._pieces()
        kmax = float(np.max(np.abs(flat))) if flat.size else 0.0
        panels = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            m = max(4, int(math.ceil(kmax * (hi - lo) / 2.0)))
            panels.extend(np.linspace(lo, hi, m + 1)[:-1])
        panels.append(edges[-1])
        x, w = composite_gauss(np.array(panels), 24)
        fx = w * self(x)
        out = np.empty(flat.shape, dtype=complex)
        step = max(1, 4_000_000 // x.size)
        for s in range(0, flat.size, step):
            out[s : s + step] = np.exp(-1j * np.outer(flat[s : s + step], x)) @ fx
        return out

    def power_spectrum(self, k):
        return np.abs(self.fourier(k)) ** 2

    @property
    def fourier_at_zero(self) -> float:
        return float(self.fourier(np.array(0.0)).real)

    def self_convolution(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        flat = r.ravel()
        out = np.empty_like(flat)
        a, b = self.support
        for i, y in enumerate(flat):
            lo, hi = max(a, a - y), min(b, b - y)
            if hi <= lo:
                out[i] = 0.0
                continue
            cuts = {lo, hi} | {c for c in self.breaks_x if lo < c < hi}
            cuts |= {c - y for c in self.breaks_x if lo < c - y < hi}
            edges = np.array(sorted(cuts))
            x, w = composite_gauss(edges, 32)
            out[i] = np.sum(w * self(x + y) * self(x))
        return out.reshape(r.shape)

    def label(self) -> str:
        return self.name


def wedge_kernel() -> ProfileKernel:
    """Asymmetric cubic bump (27/32)(1+x)(1-x)^2 on [-1, 1], maximum 1."""
    return ProfileKernel(
        func=lambda x: 27.0 / 32.0 * (1.0 + x) * (1.0 - x) ** 2,
        support=(-1.0, 1.0),
        name="wedge",
        polynomial=(27.0 / 32.0, -27.0 / 32.0, -27.0 / 32.0, 27.0 / 32.0),
    )


# ---------------------------------------------------------------- evaluation


def _as_point(kernel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != kernel.dimension:
        raise DimensionError(
            f"point of dimension {x.shape[-1]} given to a {kernel.dimension}-dimensional kernel"
        )
    return x


def eval_kernel(kernel: AveragingKernel, x) -> float | np.ndarray:
    """Kernel value at x (last axis of length n); exactly 0 beyond the support."""
    x = _as_point(kernel, x)
    val = kernel.profile(np.linalg.norm(x, axis=-1))
    return float(val) if val.ndim == 0 else val


def _sharp_fourier(n: int, k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if n == 3:
        return 4.0 * math.pi * core.ball3(k)
    out = np.empty_like(k)
    small = k < 1e-3
    ks = k[small]
    kb = k[~small]
    if n == 1:
        out[small] = 2.0 * (1.0 - ks**2 / 6.0 + ks**4 / 120.0)
        out[~small] = 2.0 * np.sin(kb) / kb
    else:
        out[small] = math.pi * (1.0 - ks**2 / 8.0 + ks**4 / 192.0)
        out[~small] = 2.0 * math.pi * special.j1(kb) / kb
    return out


def _fourier_values(kernel: AveragingKernel, k: np.ndarray) -> np.ndarray:
    if kernel.is_sharp:
        return _sharp_fourier(kernel.dimension, np.asarray(k, dtype=float))
    return core.smooth_fourier(k, kernel.dimension, kernel.profile_shape)


def kernel_fourier(kernel: AveragingKernel, k_radius: float) -> float:
    """n-dimensional Fourier transform of the radial kernel at |k| = k_radius."""
    if not math.isfinite(k_radius):
        raise ValueError("k_radius must be finite")
    check_dimension(kernel.dimension)
    return float(kernel.fourier(abs(k_radius)))


def _direct_scaled_fourier(kernel: AveragingKernel, R: float, k: float) -> float:
    """Transform of f(x/R) at |k| by radial quadrature over the scaled support."""
    n = kernel.dimension
    if kernel.is_sharp and n == 1:
        return 2.0 * math.sin(k * R) / k if k else 2.0 * R
    if kernel.is_sharp and n == 3:
        return 4.0 * math.pi * R**3 * float(core.ball3(np.array(k * R)))
    edges = [0.0, *[b * R for b in kernel.breaks]]
    fine = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = max(8, int(math.ceil(k * (hi - lo))))
        fine.extend(np.linspace(lo, hi, m + 1)[:-1])
    fine.append(edges[-1])
    r, w = composite_gauss(np.array(fine), 32)
    from .quadrature import plane_wave_average

    vals = kernel.profile(r / R) * plane_wave_average(n, k * r) * r ** (n - 1)
    return SPHERE_AREA[n] * float(np.sum(w * vals))


def verify_scaling_identity(kernel: AveragingKernel, R: float, k_radius: float) -> float:
    """Normalised residual |FT[f(./R)](k) - R^n f_hat(R k)| / (1 + R^n |f_hat(R k)|)."""
    if not R > 0:
        raise ValueError("R must be positive")
    k = abs(float(k_radius))
    n = kernel.dimension
    rhs = R**n * kernel_fourier(kernel, R * k)
    if R == 1.0:
        return 0.0
    lhs = _direct_scaled_fourier(kernel, R, k)
    return abs(lhs - rhs) / (1.0 + abs(rhs))


# ---------------------------------------------------------- self-convolution


def _sharp_self_convolution(n: int, r: np.ndarray) -> np.ndarray:
    r = np.minimum(np.abs(r), 2.0)
    if n == 1:
        return 2.0 - r
    if n == 2:
        return 2.0 * np.arccos(r / 2.0) - 0.5 * r * np.sqrt(np.maximum(4.0 - r * r, 0.0))
    return math.pi / 12.0 * (4.0 + r) * (2.0 - r) ** 2


def _cumulative_moment(kernel: AveragingKernel, a: np.ndarray) -> np.ndarray:
    """P(a) = integral_0^a s f(s) ds for radial profiles."""
    a = np.clip(np.asarray(a, dtype=float), 0.0, kernel.support_radius)
    inner = 0.5 * np.minimum(a, 1.0) ** 2
    if kernel.is_sharp:
        return inner
    x, w = gauss_legendre(48)
    lo = 1.0
    hi = np.maximum(a, 1.0)
    half = 0.5 * (hi - lo)
    s = lo + half[..., None] * (x + 1.0)
    shell = np.sum(half[..., None] * w * s * kernel.profile(s), axis=-1)
    return inner + shell


def kernel_self_convolution(kernel: AveragingKernel, y) -> float:
    """(f*f)(y) = integral f(y + x) f(x) d^n x by radial quadrature."""
    y = _as_point(kernel, y)
    r = float(np.linalg.norm(y))
    return _self_convolution_quadrature(kernel, r)


def _self_convolution_quadrature(kernel: AveragingKernel, r: float) -> float:
    n = kernel.dimension
    S = kernel.support_radius
    if r >= 2.0 * S:
        return 0.0
    prof = kernel.profile
    if n == 1:
        pts = {-S, S, -1.0, 1.0, -r - 1.0, -r + 1.0, -r - S, -r + S}
        return quad(
            lambda x: float(prof(x) * prof(x + r)), -S, S, points=pts, epsabs=1e-13, epsrel=1e-12,
            where="f*f n=1",
        )
    if r == 0.0:
        return SPHERE_AREA[n] * quad(
            lambda p: float(prof(p)) ** 2 * p ** (n - 1), 0.0, S, points=kernel.breaks, epsabs=1e-13,
            epsrel=1e-12, where="f*f r=0",
        )
    pts = {1.0, S, abs(r - 1.0), abs(r - S), r, 1.0 - r, S - r}
    if n == 3:

        def outer(p):
            return p * float(prof(p)) * float(
                _cumulative_moment(kernel, p + r) - _cumulative_moment(kernel, abs(p - r))
            )

        return 2.0 * math.pi / r * quad(outer, 0.0, S, points=pts, epsabs=1e-13, epsrel=1e-12, where="f*f n=3")

    def ring(p):
        if kernel.is_sharp:
            return quad(
                lambda phi: float(prof(math.sqrt(max(p * p + r * r + 2 * p * r * math.cos(phi), 0.0)))),
                0.0, math.pi, epsabs=1e-13, epsrel=1e-12,
                points=_ring_breaks(p, r, 1.0), where="f*f n=2 ring",
            )
        phi, w = composite_gauss(np.linspace(0.0, math.pi, 9), 32)
        return float(np.sum(w * prof(np.sqrt(np.maximum(p * p + r * r + 2 * p * r * np.cos(phi), 0.0)))))

    return 2.0 * quad(lambda p: p * float(prof(p)) * ring(p), 0.0, S, points=pts, epsabs=1e-12, epsrel=1e-11,
                      where="f*f n=2")


def _ring_breaks(p, r, radius):
    # angle at which |p e_phi + r e_0| = radius
    if p == 0 or r == 0:
        return None
    c = (radius * radius - p * p - r * r) / (2 * p * r)
    if -1 < c < 1:
        return [math.acos(c)]
    return None


@lru_cache(maxsize=64)
def _convolution_interpolant(kernel) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(kernel, AveragingKernel) and kernel.is_sharp:
        n = kernel.dimension
        return lambda r: np.where(np.abs(r) < 2.0, _sharp_self_convolution(n, r), 0.0)
    top = kernel.convolution_support
    deg = 120
    nodes = 0.5 * top * (1.0 - np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1)))
    vals = np.array([_self_convolution_quadrature(kernel, float(r)) for r in nodes])
    coef = chebyshev.chebfit(2.0 * nodes / top - 1.0, vals, deg)

    def interp(r):
        r = np.abs(np.asarray(r, dtype=float))
        out = chebyshev.chebval(2.0 * np.minimum(r, top) / top - 1.0, coef)
        return np.where(r < top, out, 0.0)

    return interp


# -------------------------------------------------------------- identities


def _sharp_convolution_1d(k: float) -> float:
    # (chi_hat * chi_hat)(k) = 2 int_0^inf chi_hat(k/2 + s) chi_hat(k/2 - s) ds
    c = 0.25 * k * k
    A = 0.5 * abs(k) + 20.0 * math.pi

    def h(s):
        a, b = 0.5 * k + s, 0.5 * k - s
        return float(_sharp_fourier(1, np.array([abs(a)]))[0] * _sharp_fourier(1, np.array([abs(b)]))[0])

    central = quad(h, 0.0, A, limit=2000, epsabs=1e-13, epsrel=1e-12, where="conv1 central")
    tail = fourier_tail(lambda s: (-2.0 * math.cos(k) / (c - s * s), 2.0 / (c - s * s), 0.0), A, 2.0)
    return 2.0 * (central + tail)


def _sinc(x):
    return np.sinc(np.asarray(x) / math.pi)


def _sharp_convolution_3d(k: float) -> float:
    four_pi = 4.0 * math.pi
    if k == 0.0:
        A = 20.0 * math.pi

        def u(q):
            return float(q * _sharp_fourier(3, np.array([q]))[0])

        central = quad(lambda q: u(q) ** 2, 0.0, A, limit=2000, epsabs=1e-13, epsrel=1e-12, where="conv3 0")

        def amps(q):
            uc, us = -four_pi / q, four_pi / q**2
            return (0.5 * (uc * uc + us * us), 0.5 * (uc * uc - us * us), uc * us)

        return four_pi * (central + fourier_tail(amps, A, 2.0))
    A = k + 20.0 * math.pi

    def uv(q):
        qc = float(q * _sharp_fourier(3, np.array([q]))[0])
        return qc * four_pi * float(_sinc(abs(q - k)) - _sinc(q + k))

    central = quad(uv, 0.0, A, limit=2000, epsabs=1e-13, epsrel=1e-12, where="conv3 central")

    def amps(q):
        uc, us = -four_pi / q, four_pi / q**2
        vs = four_pi * math.cos(k) * (1.0 / (q - k) - 1.0 / (q + k))
        vc = -four_pi * math.sin(k) * (1.0 / (q - k) + 1.0 / (q + k))
        return (0.5 * (uc * vc + us * vs), 0.5 * (uc * vc - us * vs), 0.5 * (uc * vs + us * vc))

    return 2.0 * math.pi / k * (central + fourier_tail(amps, A, 2.0))


def sharp_convolution_identity_residual(n: int, k_radius: float) -> float:
    """Residual of chi_hat(k) = (2 pi)^-n (chi_hat * chi_hat)(k).

    The right-hand side is a frequency-space quadrature; the identity is the
    transform of chi = chi^2 under the module convention.
    """
    if n not in (1, 3):
        raise DimensionError("closed-form sharp transforms exist only for n = 1 and n = 3")
    k = abs(float(k_radius))
    conv = _sharp_convolution_1d(k) if n == 1 else _sharp_convolution_3d(k)
    lhs = float(_sharp_fourier(n, np.array([k]))[0])
    rhs = conv / (2.0 * math.pi) ** n
    return abs(lhs - rhs) / (1.0 + abs(lhs))


def plancherel_residual(kernel: AveragingKernel) -> float:
    """Relative residual of  int |f_hat|^2 d^n k = (2 pi)^n int f^2 d^n x."""
    n = kernel.dimension
    S = SPHERE_AREA[n]
    space = S * quad(
        lambda r: float(kernel.profile(r)) ** 2 * r ** (n - 1), 0.0, kernel.support_radius,
        points=kernel.breaks, epsabs=1e-14, epsrel=1e-13, where="plancherel x",
    )
    if kernel.is_sharp and n in (1, 3):
        freq = _sharp_convolution_1d(0.0) if n == 1 else _sharp_convolution_3d(0.0)
    else:
        K = 400.0 if not kernel.is_sharp else 4000.0
        k, w = composite_gauss(np.linspace(0.0, K, int(K) + 1), 16)
        freq = S * float(np.sum(w * kernel.power_spectrum(k) * k ** (n - 1)))
        freq += kernel.tail_mean_coefficient / K
    expected = (2.0 * math.pi) ** n * space
    return abs(freq - expected) / expected


# ------------------------------------------------------------ tables


@dataclass(frozen=True)
class KernelTransformTable:
    kernel: AveragingKernel
    fourier_samples: Mapping[float, float]
    self_convolution_samples: Mapping[float, float]


def transform_table(
    kernel: AveragingKernel, k_values: Sequence[float], y_values: Sequence[float]
) -> KernelTransformTable:
    k = np.abs(np.asarray(k_values, dtype=float))
    y = np.abs(np.asarray(y_values, dtype=float))
    fk = kernel.fourier(k)
    cy = np.array([_self_convolution_quadrature(kernel, float(r)) for r in y])
    return KernelTransformTable(
        kernel=kernel,
        fourier_samples=dict(zip(k.tolist(), np.atleast_1d(fk).tolist())),
        self_convolution_samples=dict(zip(y.tolist(), cy.tolist())),
    )
