"""Quasifree thermal models described by their energy-momentum spectrum.

A model has one sharp excitation branch omega = +-(e(k) - mu) carrying the
weights J_+(k), J_-(k) and an optional absolutely continuous commutator
density.  Delta branches are never discretised: they are kept as
(frequency, weight) records and integrated analytically.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionError, DivergenceError, SingularPointError
from .quadrature import (
    SPHERE_AREA,
    check_dimension,
    composite_gauss,
    plane_wave_average,
    power_weight_gauss,
)


class DispersionForm(str, enum.Enum):
    PURE_POWER = "pure-power"
    CUSTOM = "custom"


@dataclass(frozen=True)
class DispersionLaw:
    """e(k) = prefactor * |k|^alpha, or a user function with that small-k law."""

    alpha: float = 1.0
    prefactor: float = 1.0
    form: DispersionForm = DispersionForm.PURE_POWER
    custom: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "form", DispersionForm(self.form))
        if not self.alpha > 0 or not self.prefactor > 0:
            raise ValueError("alpha and prefactor must be positive")
        if self.form is DispersionForm.CUSTOM and self.custom is None:
            raise ValueError("a custom dispersion needs a function")

    def __call__(self, k):
        k = np.abs(np.asarray(k, dtype=float))
        if self.form is DispersionForm.PURE_POWER:
            return self.prefactor * k**self.alpha
        out = np.asarray(self.custom(k), dtype=float)
        if np.any(out < 0):
            raise ValueError("dispersion must be non-negative")
        return out


def constant_weight(value: complex = 1.0) -> Callable:
    value = complex(value)
    return lambda k: np.full(np.shape(k), value, dtype=complex)


@dataclass(frozen=True)
class GaussianBackground:
    """Odd a.c. commutator density  A * omega * exp(-omega^2/w^2 - k^2/s^2).

    Oddness in omega is what keeps the thermal density non-negative and in
    detailed balance.
    """

    amplitude: float = 0.1
    omega_width: float = 1.0
    k_width: float = 1.0

    def __call__(self, omega, k):
        omega = np.asarray(omega, dtype=float)
        k = np.asarray(k, dtype=float)
        return self.amplitude * omega * np.exp(-((omega / self.omega_width) ** 2) - (k / self.k_width) ** 2)

    @property
    def omega_extent(self) -> float:
        return 7.0 * self.omega_width


@dataclass(frozen=True)
class QuasifreeModel:
    dimension: int = 1
    beta: float = 1.0
    mu: float = 0.0
    dispersion: DispersionLaw = field(default_factory=DispersionLaw)
    singular_weight: Callable = field(default_factory=constant_weight, compare=False)
    ac_background: Callable | None = field(default=None, compare=False)
    allow_branch_crossing: bool = False

    def __post_init__(self):
        check_dimension(self.dimension)
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.mu > 0 and not self.allow_branch_crossing:
            raise ValueError(
                "mu > 0 puts the branch through omega = 0 at finite k; set allow_branch_crossing to accept"
            )

    @property
    def is_critical(self) -> bool:
        return self.mu == 0.0

    def energy(self, k):
        """e(k) - mu."""
        return self.dispersion(k) - self.mu

    def weight(self, k):
        return np.asarray(self.singular_weight(np.abs(np.asarray(k, dtype=float))), dtype=complex)

    def with_beta(self, beta: float) -> "QuasifreeModel":
        return QuasifreeModel(
            self.dimension, beta, self.mu, self.dispersion, self.singular_weight, self.ac_background,
            self.allow_branch_crossing,
        )

    def weight_at_zero(self) -> complex:
        return complex(self.weight(np.array([0.0]))[0])


@dataclass(frozen=True)
class Branch:
    omega: float
    weight: complex


@dataclass(frozen=True)
class SpectralValue:
    density: float
    branches: tuple[Branch, Branch]


# -------------------------------------------------------------- weights


def _bose(x):
    """1 / (1 - exp(-x)), stable for small and large x."""
    return -1.0 / np.expm1(-x)


def j_plus_array(model: QuasifreeModel, k) -> np.ndarray:
    k = np.abs(np.asarray(k, dtype=float))
    E = model.energy(k)
    if np.any(E == 0.0):
        raise SingularPointError("Bose factor has a pole where e(k) = mu")
    return _bose(model.beta * E) * model.weight(k)


def j_minus_array(model: QuasifreeModel, k) -> np.ndarray:
    k = np.abs(np.asarray(k, dtype=float))
    E = model.energy(k)
    return np.exp(-model.beta * E) * np.conj(j_plus_array(model, k))


def j_plus(model: QuasifreeModel, k_radius: float) -> complex:
    """J_+(k) = j(k) / (1 - exp(-beta (e(k) - mu)))."""
    return complex(j_plus_array(model, np.array([k_radius]))[0])


def j_minus(model: QuasifreeModel, k_radius: float) -> complex:
    """J_-(k) = exp(-beta (e(k) - mu)) conj(J_+(k))."""
    return complex(j_minus_array(model, np.array([k_radius]))[0])


# -------------------------------------------------------------- spectra


def two_point_spectrum(model: QuasifreeModel, omega: float, k_radius: float) -> SpectralValue:
    if omega == 0.0:
        raise SingularPointError("the thermal density is not defined at omega = 0")
    E = float(model.energy(abs(k_radius)))
    jp = j_plus(model, k_radius)
    jm = j_minus(model, k_radius)
    density = 0.0
    if model.ac_background is not None:
        density = float(model.ac_background(omega, abs(k_radius)) * _bose(model.beta * omega))
    return SpectralValue(density, (Branch(E, jp), Branch(-E, jm)))


def commutator_spectrum(model: QuasifreeModel, omega: float, k_radius: float) -> SpectralValue:
    """(1 - exp(-beta omega)) times the thermal spectrum, branch by branch."""
    E = float(model.energy(abs(k_radius)))
    if E == 0.0:
        raise SingularPointError("Bose factor has a pole where e(k) = mu")
    jp = j_plus(model, k_radius)
    jm = j_minus(model, k_radius)
    b = model.beta
    density = 0.0
    if model.ac_background is not None:
        density = float(model.ac_background(omega, abs(k_radius)))
    return SpectralValue(
        density,
        (Branch(E, -math.expm1(-b * E) * jp), Branch(-E, -math.expm1(b * E) * jm)),
    )


def spectral_detailed_balance_residual(
    positive: SpectralValue, negative: SpectralValue, beta: float, omega: float
) -> float:
    """Residual of F(-w) = exp(-beta w) conj(F(w)) for a pair of spectral records.

    ``positive`` is the spectrum at (omega, k), ``negative`` at (-omega, -k).
    The branch part compares the weight at -E with the weight at +E.
    """
    boltz = math.exp(-beta * omega)
    res = abs(negative.density - boltz * positive.density)
    up, down = positive.branches
    f = math.exp(-beta * up.omega)
    res = max(res, abs(down.weight.real - f * up.weight.real), abs(down.weight.imag + f * up.weight.imag))
    return res


def detailed_balance_residual(model: QuasifreeModel, omega: float, k_radius: float) -> float:
    if omega == 0.0:
        raise SingularPointError("detailed balance is checked at omega != 0")
    pos = two_point_spectrum(model, omega, k_radius)
    neg = two_point_spectrum(model, -omega, k_radius)
    return spectral_detailed_balance_residual(pos, neg, model.beta, omega)


# ---------------------------------------------------------- time profiles


def ac_time_profile(model: QuasifreeModel, k, t, order: int = 96, step: float = 0.0) -> np.ndarray:
    """Matrix [k, t] of  integral F_ac(omega, k) exp(-i omega t) d omega.

    A nonzero ``step`` h returns the central difference quotient in t with
    that step instead, formed mode by mode.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if model.ac_background is None:
        return np.zeros((k.size, t.size), dtype=complex)
    extent = getattr(model.ac_background, "omega_extent", 10.0)
    # even number of panels: no node at omega = 0
    w_nodes, w_weights = composite_gauss(np.linspace(-extent, extent, 9), order // 8)
    dens = model.ac_background(w_nodes[None, :], k[:, None]) * _bose(model.beta * w_nodes)[None, :]
    if step:
        dens = dens * (-1j * np.sin(w_nodes * step) / step)[None, :]
    phase = np.exp(-1j * np.outer(w_nodes, t))
    return (dens * w_weights[None, :]) @ phase


def near_origin_rule(model: QuasifreeModel, k_cut: float, *, singular: bool, order: int = 48):
    """Rule for integral_0^k_cut k^(n-1) G(k) dk  ~  sum weights * G(k_nodes).

    Built in the variable u = k^alpha.  With ``singular`` the rule is exact
    for G ~ 1/e(k) times a smooth function of u, which is how the Bose
    factor behaves at mu = 0; the algebraic weight goes into a Gauss-Jacobi
    rule.
    """
    n = model.dimension
    a = model.dispersion.alpha
    power = n / a - 1.0 - (1.0 if singular else 0.0)
    if power <= -1.0:
        raise DivergenceError(
            f"the integrand behaves like k^({n - 1:g}-{a:g}) at k = 0 and is not integrable (n <= alpha)"
        )
    u, w = power_weight_gauss(power, k_cut**a, order)
    k = u ** (1.0 / a)
    return k, (w * u / a) if singular else (w / a)


def is_singular_at_origin(model: QuasifreeModel) -> bool:
    return model.is_critical and abs(model.weight_at_zero()) > 0.0


def _decays(model: QuasifreeModel) -> bool:
    probe = np.array([1e3, 1e4])
    n = model.dimension
    mag = probe**n * (np.abs(j_plus_array(model, probe)) + np.abs(j_minus_array(model, probe)))
    return bool(mag[1] < 1e-3 * max(mag[0], 1e-300) or np.all(mag < 1e-12))


def position_time_correlation(
    model: QuasifreeModel,
    y,
    t: float,
    *,
    k_max: float | None = None,
    panels: int | None = None,
) -> complex:
    """F(y, t) = (2 pi)^-n integral e^{ik.y} [J_+ e^{-iEt} + J_- e^{iEt}] d^n k + a.c. part.

    ``k_max`` is an ultraviolet cutoff.  Without one the weights must decay
    fast enough for the integral to exist, otherwise DivergenceError.
    """
    n = model.dimension
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.size != n:
        raise DimensionError(f"y has {y.size} components, model dimension is {n}")
    r = float(np.linalg.norm(y))
    if k_max is None:
        if not _decays(model):
            raise DivergenceError("spectral weights do not decay; pass a k_max cutoff")
        k_max = 8.0
        while k_max < 1e5:
            top = k_max ** (n - 1) * (abs(j_plus(model, k_max)) + abs(j_minus(model, k_max)))
            if top < 1e-16:
                break
            k_max *= 2.0
    k_cut = min(1.0, k_max)
    kn, wn = near_origin_rule(model, k_cut, singular=is_singular_at_origin(model))
    E_top = float(abs(model.energy(k_max)))
    m = panels or max(32, int(math.ceil(((k_max - k_cut) * r + E_top * abs(t) + k_max) / 1.5)))
    kf, wf = composite_gauss(np.linspace(k_cut, k_max, m + 1), 16)
    k = np.concatenate([kn, kf])
    w = np.concatenate([wn, wf * kf ** (n - 1)])
    base = w * plane_wave_average(n, k * r)
    E = model.energy(k)
    total = np.sum(base * (j_plus_array(model, k) * np.exp(-1j * E * t) + j_minus_array(model, k) * np.exp(1j * E * t)))
    if model.ac_background is not None:
        total += np.sum(base * ac_time_profile(model, k, [t])[:, 0])
    return complex(SPHERE_AREA[n] * total / (2.0 * math.pi) ** n)
