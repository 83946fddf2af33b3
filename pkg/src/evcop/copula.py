"""Extreme-value copula objects: evaluation, density, simulation.

``C(u, v) = exp(log(uv) A(log u / log(uv)))`` for a Pickands function ``A``.
The class also evaluates through the survival transform
``u + v - 1 + C(1 - u, 1 - v)``, which swaps lower and upper tail behavior.
Simulation inverts the conditional distribution ``dC/du`` by bracketed
bisection with a guarded Newton polish.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._rootfind import vector_bisect
from .errors import InputError, NumericalError

__all__ = ["EvCopula", "tvd_copulas", "supnorm_bound_check", "SupnormBound"]


@dataclass(frozen=True)
class EvCopula:
    """Bivariate extreme-value copula driven by a Pickands function.

    ``pickands`` is any object with ``__call__``, ``deriv`` and ``deriv2``
    (tabulated models, parametric families, transformation wrappers).  With
    ``survival=True`` every quantity is evaluated through the survival
    formula; applying the transform twice returns to the original copula.
    """

    pickands: object
    survival: bool = False

    def survival_copula(self) -> "EvCopula":
        return EvCopula(self.pickands, not self.survival)

    # -- base (non-survival) quantities -------------------------------------

    def _cdf_base(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float),
                                   np.asarray(v, dtype=float))
        out = np.empty(u.shape)
        lo = (u <= 0.0) | (v <= 0.0)
        hi_u = (u >= 1.0) & ~lo
        hi_v = (v >= 1.0) & ~lo
        inner = ~(lo | hi_u | hi_v)
        out[lo] = 0.0
        out[hi_u] = v[hi_u]
        out[hi_v] = u[hi_v]
        out[hi_u & hi_v] = 1.0
        lu = np.log(u[inner])
        lv = np.log(v[inner])
        s = lu + lv
        out[inner] = np.exp(s * np.asarray(self.pickands(lu / s), dtype=float))
        return out

    def _partials_base(self, u, v):
        # C/u = v exp(s (A - 1)): exact (no exp/log round trip) at A == 1,
        # which keeps conditional inversion exact for the independence copula
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float),
                                   np.asarray(v, dtype=float))
        lu = np.log(u)
        lv = np.log(v)
        s = lu + lv
        t = lu / s
        a = np.asarray(self.pickands(t), dtype=float)
        ap = np.asarray(self.pickands.deriv(t), dtype=float)
        scale = np.exp(s * (a - 1.0))
        pu = v * scale * (a + (1.0 - t) * ap)
        pv = u * scale * (a - t * ap)
        return pu, pv

    def _pdf_base(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float),
                                   np.asarray(v, dtype=float))
        lu = np.log(u)
        lv = np.log(v)
        s = lu + lv
        t = lu / s
        a = np.asarray(self.pickands(t), dtype=float)
        ap = np.asarray(self.pickands.deriv(t), dtype=float)
        app = np.asarray(self.pickands.deriv2(t), dtype=float)
        core = (a + (1.0 - t) * ap) * (a - t * ap) - t * (1.0 - t) * app / s
        return np.exp(s * (a - 1.0)) * core

    # -- public surface ------------------------------------------------------

    def cdf(self, u, v):
        """Copula value, honoring the boundary conventions."""
        scalar = np.ndim(u) == 0 and np.ndim(v) == 0
        if self.survival:
            ua, va = np.broadcast_arrays(np.asarray(u, dtype=float),
                                         np.asarray(v, dtype=float))
            out = ua + va - 1.0 + self._cdf_base(1.0 - ua, 1.0 - va)
            out = np.maximum(out, 0.0)
        else:
            out = self._cdf_base(u, v)
        return float(out.flat[0]) if scalar else out

    def partial_u(self, u, v):
        """Conditional CDF of V given U = u (interior arguments)."""
        scalar = np.ndim(u) == 0 and np.ndim(v) == 0
        if self.survival:
            pu, _ = self._partials_base(1.0 - np.asarray(u, dtype=float),
                                        1.0 - np.asarray(v, dtype=float))
            out = 1.0 - pu
        else:
            out = self._partials_base(u, v)[0]
        out = np.asarray(out)
        return float(out.flat[0]) if scalar else out

    def partial_v(self, u, v):
        """Conditional CDF of U given V = v (interior arguments)."""
        scalar = np.ndim(u) == 0 and np.ndim(v) == 0
        if self.survival:
            _, pv = self._partials_base(1.0 - np.asarray(u, dtype=float),
                                        1.0 - np.asarray(v, dtype=float))
            out = 1.0 - pv
        else:
            out = self._partials_base(u, v)[1]
        out = np.asarray(out)
        return float(out.flat[0]) if scalar else out

    def pdf(self, u, v):
        """Copula density (interior arguments)."""
        scalar = np.ndim(u) == 0 and np.ndim(v) == 0
        if self.survival:
            out = self._pdf_base(1.0 - np.asarray(u, dtype=float),
                                 1.0 - np.asarray(v, dtype=float))
        else:
            out = self._pdf_base(u, v)
        out = np.asarray(out)
        return float(out.flat[0]) if scalar else out

    def simulate(self, n: int, seed=None) -> np.ndarray:
        """Draw ``n`` pairs by conditional-distribution inversion.

        For each uniform pair ``(U, P)`` the second coordinate solves
        ``dC/du(U, v) = P``; the solution is bracketed by bisection and
        polished by Newton steps that are only accepted when they reduce the
        residual.  Deterministic for a given seed.
        """
        if n < 1:
            raise InputError("n must be >= 1")
        rng = seed if isinstance(seed, np.random.Generator) \
            else np.random.default_rng(seed)
        u = rng.random(n)
        p = rng.random(n)
        for arr in (u, p):
            bad = arr <= 0.0
            while np.any(bad):
                arr[bad] = rng.random(int(np.sum(bad)))
                bad = arr <= 0.0

        def resid(v):
            return self.partial_u(u, v) - p

        lo = np.full(n, 1e-15)
        hi = np.full(n, 1.0 - 1e-15)
        v = vector_bisect(resid, lo, hi, iters=50, check_bracket=False)
        r = resid(v)
        for _ in range(2):
            dens = self.pdf(u, v)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(np.isfinite(dens) & (dens > 1e-12), r / dens, 0.0)
            v_new = np.clip(v - step, 1e-15, 1.0 - 1e-15)
            r_new = resid(v_new)
            better = np.abs(r_new) <= np.abs(r)
            v = np.where(better, v_new, v)
            r = np.where(better, r_new, r)
        if not np.all(np.isfinite(v)):
            raise NumericalError("conditional inversion produced non-finite values")
        # a residual surviving bisection and polish means the conditional CDF
        # never crossed the target level: the dependence function is invalid
        stuck = np.abs(r) > 1e-6
        if np.any(stuck):
            bad = int(np.argmax(stuck))
            raise NumericalError(
                f"conditional inversion failed at u={u[bad]:.4g}, p={p[bad]:.4g} "
                f"(residual {r[bad]:.3g}); the dependence function is not a "
                "valid Pickands function")
        return np.column_stack([u, v])


def tvd_copulas(c1, c2, eps: float = 1e-4, npts: int = 96, full: bool = False):
    """Total variation distance between two copula densities.

    Tensor Gauss-Legendre quadrature of ``|c1 - c2| / 2`` on the square
    ``[eps, 1-eps]^2``.  The excluded boundary strip carries copula mass at
    most ``4 eps`` under each model, so the truncation understates the true
    distance by at most ``4 eps``; with ``full=True`` that bound is returned
    alongside the value.
    """
    xg, wg = np.polynomial.legendre.leggauss(npts)
    nodes = 0.5 * (1.0 - 2.0 * eps) * (xg + 1.0) + eps
    uu, vv = np.meshgrid(nodes, nodes, indexing="ij")
    d1 = np.asarray(c1.pdf(uu, vv), dtype=float)
    d2 = np.asarray(c2.pdf(uu, vv), dtype=float)
    if not (np.all(np.isfinite(d1)) and np.all(np.isfinite(d2))):
        raise NumericalError("non-finite copula density inside the unit square")
    w2 = np.outer(wg, wg) * (0.5 * (1.0 - 2.0 * eps)) ** 2
    value = float(0.5 * np.sum(w2 * np.abs(d1 - d2)))
    bound = 4.0 * eps
    if full:
        return value, bound
    return value


class SupnormBound(NamedTuple):
    gamma: float
    bound: float
    measured: float


def supnorm_bound_check(a1, a2, n_probes: int = 1000,
                        grid: int = 100) -> SupnormBound:
    """Sup-norm gap between two copulas against its Pickands-level bound.

    ``gamma`` is the sup distance between the two Pickands functions; the
    copula sup distance never exceeds ``2 gamma / (1 + 2 gamma)^(1 + 1/(2 gamma))``.
    """
    t = np.linspace(0.0, 1.0, n_probes)
    gamma = float(np.max(np.abs(np.asarray(a1(t)) - np.asarray(a2(t)))))
    if gamma == 0.0:
        bound = 0.0
    else:
        bound = 2.0 * gamma / (1.0 + 2.0 * gamma) ** (1.0 + 1.0 / (2.0 * gamma))
    g = np.arange(1, grid + 1) / (grid + 1)
    uu, vv = np.meshgrid(g, g, indexing="ij")
    c1 = EvCopula(a1).cdf(uu, vv)
    c2 = EvCopula(a2).cdf(uu, vv)
    measured = float(np.max(np.abs(c1 - c2)))
    return SupnormBound(gamma=gamma, bound=bound, measured=measured)
