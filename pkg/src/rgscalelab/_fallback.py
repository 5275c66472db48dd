"""Pure numpy implementations of the numerical hot spots.

Every function here has a twin with the same signature in ``_core.pyx``.
The compiled module is preferred at import time (see ``_backend``); this
module is used when it is unavailable or when ``RGSCALELAB_PURE_PYTHON`` is
set.
"""

import numpy as np
from scipy.special import expit, j0, j1

# Reference 32-point Gauss-Legendre rule on [-1, 1] used for the transition
# shell 1 < r < 2 of the smooth kernel.
_XREF, _WREF = np.polynomial.legendre.leggauss(32)

# Below this wavenumber the direct (non integrated-by-parts) form is used.
SMALL_K = 0.5


def smooth_profile(s, lam=1.0):
    """Smooth radial step: 1 on s <= 1, 0 on s >= 2, C-infinity in between."""
    s = np.abs(np.asarray(s, dtype=float))
    out = np.zeros_like(s)
    out[s <= 1.0] = 1.0
    mid = (s > 1.0) & (s < 2.0)
    a = 2.0 - s[mid]
    b = s[mid] - 1.0
    out[mid] = expit(lam * (1.0 / b - 1.0 / a))
    return out


def smooth_profile_derivative(s, lam=1.0):
    s = np.abs(np.asarray(s, dtype=float))
    out = np.zeros_like(s)
    mid = (s > 1.0) & (s < 2.0)
    a = 2.0 - s[mid]
    b = s[mid] - 1.0
    z = lam * (1.0 / b - 1.0 / a)
    e = np.exp(-np.abs(z))
    out[mid] = -lam * e / (1.0 + e) ** 2 * (1.0 / a**2 + 1.0 / b**2)
    return out


def ball3(k):
    """(sin k - k cos k) / k^3, with a series where the difference cancels."""
    k = np.asarray(k, dtype=float)
    q = k * k
    series = 1.0 / 3.0 - q * (1.0 / 30.0 - q * (1.0 / 840.0 - q * (1.0 / 45360.0 - q / 3991680.0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (np.sin(k) - k * np.cos(k)) / (k * q)
    return np.where(np.abs(k) < 0.2, series, direct)


def _panels(k):
    return max(8, int(np.ceil(k / 4.0)))


def _shell_nodes(panels):
    edges = np.linspace(1.0, 2.0, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    r = (mid[:, None] + half[:, None] * _XREF[None, :]).ravel()
    w = (half[:, None] * _WREF[None, :]).ravel()
    return r, w


def _transform_one(k, n, lam):
    r, w = _shell_nodes(_panels(k))
    if k < SMALL_K:
        f = smooth_profile(r, lam)
        if k == 0.0:
            inner = {1: 1.0, 2: 0.5, 3: 1.0 / 3.0}[n]
            shell = np.sum(w * f * r ** (n - 1))
        elif n == 1:
            inner = np.sin(k) / k
            shell = np.sum(w * f * np.cos(k * r))
        elif n == 2:
            inner = j1(k) / k
            shell = np.sum(w * f * r * j0(k * r))
        else:
            inner = float(ball3(k))
            kr = k * r
            shell = np.sum(w * f * r**2 * np.sin(kr) / kr)
        return {1: 2.0, 2: 2.0 * np.pi, 3: 4.0 * np.pi}[n] * (inner + shell)
    fp = smooth_profile_derivative(r, lam)
    kr = k * r
    if n == 1:
        return -2.0 / k * np.sum(w * fp * np.sin(kr))
    if n == 2:
        return -2.0 * np.pi / k * np.sum(w * fp * r * j1(kr))
    return -4.0 * np.pi / k**3 * np.sum(w * fp * (np.sin(kr) - kr * np.cos(kr)))


def smooth_fourier(k, n, lam=1.0):
    """Radial Fourier transform of the smooth kernel at |k| (vectorised)."""
    k = np.abs(np.asarray(k, dtype=float))
    flat = k.ravel()
    out = np.empty_like(flat)
    for i, kk in enumerate(flat):
        out[i] = _transform_one(float(kk), n, lam)
    return out.reshape(k.shape)


def branch_sum(base, x, jp, jm, t):
    """sum_i base_i * (jp_i exp(-i x_i t) + jm_i exp(+i x_i t)) for each t."""
    base = np.asarray(base, dtype=float)
    x = np.asarray(x, dtype=float)
    jp = np.asarray(jp, dtype=complex)
    jm = np.asarray(jm, dtype=complex)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t.shape, dtype=complex)
    bp = base * jp
    bm = base * jm
    # chunk over t to bound memory
    step = max(1, 2_000_000 // max(1, x.size))
    for s in range(0, t.size, step):
        phase = np.outer(t[s : s + step], x)
        out[s : s + step] = np.exp(-1j * phase) @ bp + np.exp(1j * phase) @ bm
    return out
