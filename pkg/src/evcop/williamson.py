"""Williamson transforms of densities supported on [0, 1].

For a density ``f`` on [0, 1], the transform
``W(x) = integral_x^1 (1 - x/r) f(r) dr`` is non-negative, non-increasing and
convex with ``W(0) = 1`` and ``W(1) = 0``, and every such function arises this
way.  ``W'' (x) = f(x)/x`` and the survival identity
``W(x) = Fbar(x) + x W'(x)`` (``Fbar`` the survival function of ``f``) drive a
backward recurrence that tabulates ``W`` and its derivatives on a grid while
preserving 2-monotonicity at node resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._hermite import hermite_interpolator
from .errors import InputError, NumericalError

__all__ = [
    "WilliamsonGrid",
    "williamson_from_density",
    "normalize_w",
    "w_power_complement",
    "w_uniform_power",
    "fixed_point",
    "default_w_nodes",
]


def default_w_nodes() -> np.ndarray:
    """Canonical tabulation grid: geometric near 0, uniform elsewhere."""
    return np.unique(np.concatenate([
        [0.0],
        np.geomspace(1e-6, 0.02, 49),
        np.linspace(0.02, 1.0, 481),
    ]))


def _segment_edges(x: np.ndarray, nsub: int = 8) -> np.ndarray:
    """Log-spaced subinterval edges per segment, shape (len(x)-1, nsub+1).

    Segments starting at 0 fall back to linear spacing.
    """
    a = x[:-1][:, None]
    b = x[1:][:, None]
    k = np.arange(nsub + 1)[None, :] / nsub
    with np.errstate(divide="ignore", invalid="ignore"):
        geo = a * (b / a) ** k
    lin = a + (b - a) * k
    edges = np.where(a > 0.0, geo, lin)
    edges[:, 0] = x[:-1]
    edges[:, -1] = x[1:]
    return edges


@dataclass(frozen=True)
class WilliamsonGrid:
    """Tabulated Williamson transform with a C2 piecewise interpolator.

    ``wp[0]`` and ``wpp[0]`` may be non-finite sentinels (unbounded slope at
    0); such entries impose no interpolation constraint.
    """

    x: np.ndarray
    w: np.ndarray
    wp: np.ndarray
    wpp: np.ndarray
    w0_estimate: float
    tail_mass: np.ndarray = field(repr=False)
    normalized: bool = False

    def __post_init__(self):
        ip = hermite_interpolator(self.x, self.w, self.wp, self.wpp)
        object.__setattr__(self, "_ip", ip)
        object.__setattr__(self, "_ip1", ip.derivative())
        object.__setattr__(self, "_ip2", ip.derivative(2))

    def __call__(self, x):
        return self._ip(x)

    def deriv(self, x):
        return self._ip1(x)

    def deriv2(self, x):
        return self._ip2(x)

    @property
    def deriv_at_zero(self) -> float:
        """Right slope at 0; non-finite for densities positive at 0."""
        return float(self.wp[0])

    @property
    def deriv_at_one(self) -> float:
        return float(self.wp[-1])


def williamson_from_density(f, x_nodes) -> WilliamsonGrid:
    """Tabulate the Williamson transform of a density by backward recurrence.

    Segment integrals of ``f`` and ``f/r`` use the trapezoidal rule on a
    log-spaced refinement of each segment, taming the ``1/r`` integrand near
    0.  The recurrences
    ``W'_j = W'_{j+1} - S_j`` and
    ``W_j = W_{j+1} + x_j W'_j - x_{j+1} W'_{j+1} + P_j``
    run from the right endpoint and keep ``W`` non-increasing and ``W'``
    non-decreasing exactly.
    """
    x = np.asarray(x_nodes, dtype=float)
    if x.ndim != 1 or x.size < 3:
        raise InputError("x_nodes must be a 1-d grid with at least 3 nodes")
    if x[0] != 0.0 or x[-1] != 1.0 or np.any(np.diff(x) <= 0.0):
        raise InputError("x_nodes must increase strictly from 0 to 1")
    m = x.size - 2  # interior node count

    edges = _segment_edges(x)  # (m+1, nsub+1)
    inner = edges[1:]  # segments [x_1, x_2] .. [x_m, 1]
    fv = np.asarray(f(inner.ravel()), dtype=float).reshape(inner.shape)
    if not np.all(np.isfinite(fv)) or np.any(fv < 0.0):
        raise NumericalError("density evaluated non-finite or negative on (0, 1)")
    dx = np.diff(inner, axis=1)
    P = np.sum(dx * (fv[:, :-1] + fv[:, 1:]) * 0.5, axis=1)          # j = 1..m
    g = fv / inner
    S = np.sum(dx * (g[:, :-1] + g[:, 1:]) * 0.5, axis=1)            # j = 1..m

    # mass of the first segment [0, x_1], used only for the W(0+) estimate
    first = edges[0]
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        f0 = float(np.asarray(f(0.0), dtype=float))
    if np.isfinite(f0):
        fv0 = np.concatenate([[f0], np.asarray(f(first[1:]), dtype=float)])
        p_first = float(np.sum(np.diff(first) * (fv0[:-1] + fv0[1:]) * 0.5))
    else:
        # integrable singularity at 0: geometric refinement from the right
        sub = x[1] * 0.5 ** np.arange(24, -1, -1.0)
        fs = np.asarray(f(sub), dtype=float)
        p_first = float(np.sum(np.diff(sub) * (fs[:-1] + fs[1:]) * 0.5))

    # wp_j = -sum_{k >= j} S_k, j = 1..m; right endpoint slope is exactly 0
    wp = np.empty(m + 2)
    wp[0] = -np.inf
    wp[-1] = 0.0
    wp[1:m + 1] = -np.cumsum(S[::-1])[::-1]

    tail = np.zeros(m + 2)
    tail[1:m + 1] = np.cumsum(P[::-1])[::-1]
    tail[0] = tail[1] + p_first

    w = np.empty(m + 2)
    w[-1] = 0.0
    w[1:m + 1] = x[1:m + 1] * wp[1:m + 1] + tail[1:m + 1]
    w[0] = 1.0

    if m > 0 and w[1] > 1.2:
        raise NumericalError(
            f"W(x_1) = {w[1]:.4f} > 1.2: grid too coarse for this density; "
            "refine the grid or normalize the transform")

    wpp = np.empty(m + 2)
    wpp[0] = np.inf
    with np.errstate(divide="ignore"):
        fx = np.asarray(f(x[1:]), dtype=float)
    wpp[1:] = fx / x[1:]

    return WilliamsonGrid(x=x, w=w, wp=wp, wpp=wpp,
                          w0_estimate=float(tail[0]), tail_mass=tail,
                          normalized=False)


def normalize_w(g: WilliamsonGrid) -> WilliamsonGrid:
    """Rescale a tabulated transform so its reconstructed value at 0+ is 1.

    Dividing by the W(0+) estimate restores ``W(x) <= 1 - x`` (hence a
    Pickands function below 1) when coarse quadrature let the reconstruction
    drift; the left endpoint is pinned back to exactly 1.
    """
    c = g.w0_estimate
    if not (0.5 < c < 2.0):
        raise NumericalError(
            f"W(0+) estimate {c:.4f} outside (0.5, 2): estimation failed")
    w = g.w / c
    w[0] = 1.0
    return WilliamsonGrid(x=g.x.copy(), w=w, wp=g.wp / c, wpp=g.wpp / c,
                          w0_estimate=1.0, tail_mass=g.tail_mass / c,
                          normalized=True)


class _AnalyticW:
    """Closed-form 2-monotone function with derivatives."""

    def __init__(self, fn, d1, d2, name: str):
        self._fn, self._d1, self._d2 = fn, d1, d2
        self.name = name

    def __call__(self, x):
        return self._fn(np.asarray(x, dtype=float))

    def deriv(self, x):
        with np.errstate(divide="ignore", over="ignore"):
            return self._d1(np.asarray(x, dtype=float))

    def deriv2(self, x):
        with np.errstate(divide="ignore", over="ignore"):
            return self._d2(np.asarray(x, dtype=float))

    @property
    def deriv_at_zero(self) -> float:
        return float(self.deriv(0.0))

    @property
    def deriv_at_one(self) -> float:
        return float(self.deriv(1.0))

    def __repr__(self):
        return f"<{self.name}>"


def w_power_complement(theta: float) -> _AnalyticW:
    """The family W(x) = (1 - x)^theta; density Beta(2, theta - 1) for theta > 1."""
    if theta < 0:
        raise InputError("theta must be >= 0")

    def fn(x):
        return (1.0 - x) ** theta

    def d1(x):
        x = np.asarray(x, dtype=float)
        if theta == 0.0:
            return np.zeros_like(x)
        return -theta * (1.0 - x) ** (theta - 1.0)

    def d2(x):
        x = np.asarray(x, dtype=float)
        if theta * (theta - 1.0) == 0.0:
            return np.zeros_like(x)
        return theta * (theta - 1.0) * (1.0 - x) ** (theta - 2.0)

    return _AnalyticW(fn, d1, d2, f"W=(1-x)^{theta:g}")


def w_uniform_power(theta: float) -> _AnalyticW:
    """Williamson transform of U^theta, U uniform on [0, 1].

    Closed form ``1 + x/(theta-1) - theta x^(1/theta) / (theta-1)`` away from
    theta = 1, and ``1 - x + x log x`` at theta = 1.  Only theta = 2 (the
    square-root density) is its own inverse, hence the only exchangeable
    member.
    """
    if theta <= 0:
        raise InputError("theta must be > 0")
    if theta == 1.0:
        def fn(x):
            with np.errstate(divide="ignore", invalid="ignore"):
                xl = np.where(x > 0, x * np.log(np.maximum(x, 1e-320)), 0.0)
            return 1.0 - x + xl

        def d1(x):
            with np.errstate(divide="ignore"):
                return np.log(x)

        def d2(x):
            with np.errstate(divide="ignore"):
                return 1.0 / x

        return _AnalyticW(fn, d1, d2, "W_U^1")

    a = 1.0 / (theta - 1.0)

    def fn(x):
        return 1.0 + a * x - theta * a * x ** (1.0 / theta)

    def d1(x):
        with np.errstate(divide="ignore"):
            return a - a * x ** (1.0 / theta - 1.0)

    def d2(x):
        with np.errstate(divide="ignore"):
            return (1.0 / theta) * x ** (1.0 / theta - 2.0)

    return _AnalyticW(fn, d1, d2, f"W_U^{theta:g}")


def fixed_point(w) -> float:
    """The unique solution of W(x) = x for a 2-monotone W with W(1) = 0."""
    def g(x):
        return float(w(x)) - x

    g0, g1 = g(0.0), g(1.0)
    if g0 <= 0.0 or g1 >= 0.0:
        raise NumericalError(
            f"no sign change for W(x) - x on [0, 1] (g(0)={g0:.3g}, g(1)={g1:.3g})")
    return float(brentq(g, 0.0, 1.0, xtol=1e-14, rtol=4 * np.finfo(float).eps))
