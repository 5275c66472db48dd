"""Recompute the frozen reference numbers in tests/oracle_values.py.

Everything here is independent of rgscalelab: profiles and spectral
weights are re-derived from their defining formulas and integrated with
mpmath, dense trapezoid grids or plain Monte Carlo.

    python tests/oracles/generate.py        (about a minute)
"""

import math

import mpmath as mp
import numpy as np

mp.mp.dps = 30


def smooth_profile(s, lam=1.0):
    s = np.abs(np.asarray(s, dtype=float))
    out = np.zeros_like(s)
    out[s <= 1.0] = 1.0
    mid = (s > 1.0) & (s < 2.0)
    a = np.exp(-lam / (2.0 - s[mid]))
    b = np.exp(-lam / (s[mid] - 1.0))
    out[mid] = a / (a + b)
    return out


def mp_profile(s, lam=1):
    s = abs(s)
    if s <= 1:
        return mp.mpf(1)
    if s >= 2:
        return mp.mpf(0)
    a = mp.exp(-lam / (2 - s))
    b = mp.exp(-lam / (s - 1))
    return a / (a + b)


def smooth_fourier_n1_trapezoid(k, points=2_000_001):
    # every derivative of the profile vanishes at s = 2: the trapezoid rule is spectrally accurate
    s = np.linspace(0.0, 2.0, points)
    y = smooth_profile(s) * np.cos(k * s)
    h = s[1] - s[0]
    return 2.0 * h * (y.sum() - 0.5 * (y[0] + y[-1]))


def smooth_conv_n3_monte_carlo(r, samples=10_000_000, seed=20240917, chunk=1_000_000):
    rng = np.random.default_rng(seed)
    y = np.array([r, 0.0, 0.0])
    vals = []
    for _ in range(samples // chunk):
        x = rng.uniform(-2.0, 2.0, size=(chunk, 3))
        f1 = smooth_profile(np.linalg.norm(x, axis=1))
        f2 = smooth_profile(np.linalg.norm(y - x, axis=1))
        vals.append(f1 * f2)
    v = np.concatenate(vals) * 64.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def smooth_conv_n3_nested(r):
    """Same value by nested adaptive quadrature over |x| and |x - y|."""
    from scipy import integrate

    f = lambda s: float(smooth_profile(np.array([s]))[0])

    def inner(rho):
        lo, hi = abs(rho - r), min(rho + r, 2.0)
        if lo >= 2.0:
            return 0.0
        pts = [1.0] if lo < 1.0 < hi else None
        v, _ = integrate.quad(lambda s: f(s) * s, lo, hi, points=pts, epsabs=1e-14, epsrel=1e-13, limit=200)
        return v / (rho * r)

    pts = sorted({1.0, abs(1.0 - r), 1.0 + r, 2.0 - r} - {0.0, 2.0})
    v, _ = integrate.quad(lambda rho: rho * rho * f(rho) * inner(rho), 0.0, 2.0, points=pts, epsabs=1e-13, epsrel=1e-12, limit=400)
    return 2.0 * math.pi * v


def smooth_l2_n1():
    return float(2 * (1 + mp.quad(lambda s: mp_profile(s) ** 2, [1, 1.5, 2])))


def thermal_f00_n1(k_max=5.0, beta=1.0, mu=-1.0):
    # J_+ + J_- = coth(beta E / 2) for a real unit weight
    val = mp.quad(lambda k: mp.coth(beta * (k**2 - mu) / 2), [0, 1, 2, 3, 4, k_max])
    return float(2 * val / (2 * mp.pi))


def critical_sharp_n1(alpha, Y):
    p = 1 - mp.mpf(alpha)
    f = lambda y: (2 - abs(y)) * abs(y + Y) ** (-p)
    pts = sorted({-2, 0, 2} | ({-Y} if -2 < -Y < 2 else set()))
    return float(mp.quad(f, pts))


def rescaled_limit_sharp_n1(alpha, tau, beta=1.0, c=1.0, K=2000):
    # (2 pi)^-1 * 2 int_0^inf 4 sin^2 k / k^2 * 2 / (beta c k^alpha) cos(c k^alpha tau) dk
    alpha = mp.mpf(alpha)
    if tau == 0:
        # Mellin transform of sin^2: int x^(s-1) sin^2 x dx = -Gamma(s) cos(pi s / 2) 2^(-s-1)
        s = -1 - alpha
        val = 8 / (beta * c) * -mp.gamma(s) * mp.cos(mp.pi * s / 2) * 2 ** (-s - 1)
        return float(2 * val / (2 * mp.pi))
    g = lambda k: 8 * mp.sin(k) ** 2 / (beta * c * k ** (2 + alpha)) * mp.cos(c * k**alpha * tau)
    head = mp.quad(g, mp.linspace(0, K, 2 * K + 1))
    # beyond K keep the mean of sin^2 only; the cos 2k part is O(K^-(2+alpha)); substitute u = k^alpha
    mean = lambda u: 4 / (beta * c) * u ** (-(1 + 2 * alpha) / alpha) * mp.cos(c * u * tau) / alpha
    tail = mp.quadosc(mean, [K**alpha, mp.inf], omega=c * tau)
    return float(2 * (head + tail) / (2 * mp.pi))


if __name__ == "__main__":
    print("SMOOTH_FOURIER_N1_K1 =", repr(float(smooth_fourier_n1_trapezoid(1.0))))
    mean, se = smooth_conv_n3_monte_carlo(0.7)
    print("SMOOTH_CONV_N3_Y07_MC =", repr(mean), "SE", repr(se))
    print("SMOOTH_CONV_N3_Y07_NESTED =", repr(smooth_conv_n3_nested(0.7)))
    print("SMOOTH_L2_N1 =", repr(smooth_l2_n1()))
    print("THERMAL_F00_N1 =", repr(thermal_f00_n1()))
    print("CRITICAL_SHARP_N1_Y0 =", repr(critical_sharp_n1(0.5, 0)), repr(16 * math.sqrt(2) / 3))
    print("CRITICAL_SHARP_N1_Y3 =", repr(critical_sharp_n1(0.5, 3)))
    print("RESCALED_SHARP_N1_TAU0 =", repr(rescaled_limit_sharp_n1(0.5, 0)))
    print("RESCALED_SHARP_N1_TAU1 =", repr(rescaled_limit_sharp_n1(0.5, 1)))
