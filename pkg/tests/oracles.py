"""Independent numerical oracles used by the test suite.

Everything here deliberately avoids the package's own evaluation machinery:
plain float formulas, scipy adaptive quadrature with explicit split points,
and a high-order adaptive ODE integrator.  Oracles are slow and simple on
purpose — they exist to cross-check the fast log-space/FFT implementations
through a genuinely different computational route.

Convolution-style integrands are sharply peaked at the ends of wide
intervals; every quadrature below therefore splits the range at explicit
geometric knots (naive single-interval quad silently misses the peaks).
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy import integrate


def split_quad(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    knots: Sequence[float],
    rel_tol: float = 1e-11,
) -> float:
    """Adaptive quadrature over [lo, hi] split at the interior knots."""
    pts = [lo] + sorted(k for k in knots if lo < k < hi) + [hi]
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(fn, a, b, epsabs=0.0, epsrel=rel_tol, limit=300)
        total += val
    return total


def geometric_knots(lo: float, hi: float, first: float) -> list[float]:
    """lo + first, lo + 2*first, lo + 4*first, ... strictly inside (lo, hi)."""
    out = []
    step = first
    pos = lo
    while pos + step < hi:
        pos += step
        out.append(pos)
        step *= 2.0
    return out


def both_end_knots(lo: float, hi: float, first: float) -> list[float]:
    """Geometric knots accumulating from both ends of [lo, hi]."""
    left = geometric_knots(lo, (lo + hi) / 2.0, first)
    right = [hi - (k - lo) for k in left]
    return sorted(set(left + right + [(lo + hi) / 2.0]))


def self_convolution_value(b: Callable[[float], float], x: float) -> float:
    """(b * b)(x) = integral_0^x b(y) b(x-y) dy by split quadrature."""
    fn = lambda y: b(y) * b(x - y)
    return split_quad(fn, 0.0, x, both_end_knots(0.0, x, min(0.25, x / 64.0)))


def convolution_value(
    f: Callable[[float], float],
    g: Callable[[float], float],
    x: float,
    support: tuple[float, float],
    knots: Sequence[float] = (),
) -> float:
    """(f * g)(x) = integral f(y) g(x-y) dy over y in support, split at knots."""
    lo, hi = support
    fn = lambda y: f(y) * g(x - y)
    extra = list(knots) + both_end_knots(lo, hi, max((hi - lo) / 2**16, 1e-8))
    return split_quad(fn, lo, hi, extra)


def density_ratio_oracle(b: Callable[[float], float], total_mass: float, x: float) -> float:
    """integral_0^x b(y)b(x-y)dy / (2 * total_mass * b(x)) in raw floats."""
    return self_convolution_value(b, x) / (2.0 * total_mass * b(x))


def distribution_ratio_oracle(
    B: Callable[[float], float],
    b: Callable[[float], float],
    x: float,
) -> float:
    """Full-mass Stieltjes self-convolution ratio for a decreasing tail B.

    (integral_0^x B(x-y) b(y) dy + B(0) B(x)) / (2 B(0) B(x)) where b = -B'.
    """
    fn = lambda y: B(x - y) * b(y)
    head = split_quad(fn, 0.0, x, both_end_knots(0.0, x, min(0.25, x / 64.0)))
    return (head + B(0.0) * B(x)) / (2.0 * B(0.0) * B(x))


def tail_integral_oracle(
    b: Callable[[float], float],
    x: float,
    decades: float = 10.0,
    rel_tol: float = 1e-12,
) -> float:
    """integral_x^inf b(y) dy: geometric split to x*10^decades, then inversion.

    The far remainder integral_X^inf b is mapped to (0,1] via y = X/u.
    """
    X = x * 10.0**decades
    pts = list(np.geomspace(x, X, int(decades * 8) + 2))
    total = 0.0
    for a, c in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(b, a, c, epsabs=0.0, epsrel=rel_tol, limit=300)
        total += val
    rem, _ = integrate.quad(
        lambda u: b(X / u) * X / u**2 if u > 0 else 0.0,
        0.0,
        1.0,
        epsabs=0.0,
        epsrel=rel_tol,
        limit=300,
    )
    return total + rem


def upper_gamma_oracle(s: float, z: float, rel_tol: float = 1e-12) -> float:
    """integral_z^inf t^(s-1) e^(-t) dt by direct split quadrature."""
    fn = lambda t: t ** (s - 1.0) * math.exp(-t)
    pts = [z + k for k in (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0)]
    return split_quad(fn, z, z + 512.0, pts, rel_tol)


def scalar_ode_solution(
    rhs: Callable[[float, float], float],
    y0: float,
    t_eval: Sequence[float],
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> np.ndarray:
    """High-order adaptive integration of y' = rhs(t, y), y(0) = y0."""
    sol = integrate.solve_ivp(
        lambda t, y: rhs(t, float(y[0])),
        (0.0, max(t_eval)),
        [y0],
        method="DOP853",
        t_eval=list(t_eval),
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:  # pragma: no cover - oracle guard
        raise RuntimeError(f"oracle ODE integration failed: {sol.message}")
    return sol.y[0]


def grid_convolution_direct(f: np.ndarray, g: np.ndarray, dx: float) -> np.ndarray:
    """O(N^2) direct linear convolution on a symmetric grid, same-length output.

    Matches the FFT convention: out_i = dx * sum_j f_j g_{i-j+N/2} where index
    arithmetic follows positions x_i = -L + i dx (so x_i - x_j = (i-j) dx maps
    to kernel node (i-j) + N/2).
    """
    n = f.shape[0]
    out = np.zeros(n)
    half = n // 2
    for i in range(n):
        acc = 0.0
        jlo = max(0, i + half - (n - 1))
        jhi = min(n - 1, i + half)
        for j in range(jlo, jhi + 1):
            acc += f[j] * g[i - j + half]
        out[i] = acc * dx
    return out
