import numpy as np
import pytest

from evcop.copula import EvCopula, supnorm_bound_check, tvd_copulas
from evcop.errors import InputError
from evcop.families import ParametricPickands


class FlatPickands:
    def __call__(self, t):
        return np.ones_like(np.asarray(t, dtype=float))

    def deriv(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def deriv2(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))


class PerfectDep:
    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.maximum(t, 1.0 - t)

    def deriv(self, t):
        return np.sign(np.asarray(t, dtype=float) - 0.5)

    def deriv2(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))


def test_cdf_independence_and_perfect_dependence():
    u = np.linspace(0.05, 0.95, 15)
    uu, vv = np.meshgrid(u, u)
    ci = EvCopula(FlatPickands())
    assert np.max(np.abs(ci.cdf(uu, vv) - uu * vv)) <= 1e-12
    cm = EvCopula(PerfectDep())
    assert np.max(np.abs(cm.cdf(uu, vv) - np.minimum(uu, vv))) <= 1e-12


def test_cdf_quadratic_value():
    class Poly:
        def __call__(self, t):
            t = np.asarray(t, dtype=float)
            return t * t - t + 1.0

    c = EvCopula(Poly())
    assert abs(c.cdf(0.5, 0.5) - 0.25 ** 0.75) <= 1e-14


def test_cdf_boundaries(gumbel2):
    u = np.linspace(0.0, 1.0, 21)
    assert np.max(np.abs(gumbel2.cdf(u, np.ones_like(u)) - u)) <= 1e-9
    assert np.max(np.abs(gumbel2.cdf(np.ones_like(u), u) - u)) <= 1e-9
    assert np.max(np.abs(gumbel2.cdf(u, np.zeros_like(u)))) == 0.0
    assert gumbel2.cdf(0.0, 0.7) == 0.0


def test_max_stability(gumbel2):
    u = np.linspace(1 / 21, 20 / 21, 20)
    uu, vv = np.meshgrid(u, u)
    base = gumbel2.cdf(uu, vv)
    for n in (2, 5, 10):
        scaled = gumbel2.cdf(uu ** (1.0 / n), vv ** (1.0 / n)) ** n
        assert np.max(np.abs(scaled - base)) <= 1e-9


def test_partials_independence_and_range(gumbel2):
    ci = EvCopula(FlatPickands())
    assert abs(ci.partial_u(0.3, 0.6) - 0.6) <= 1e-15
    assert abs(ci.partial_v(0.3, 0.6) - 0.3) <= 1e-15
    rng = np.random.default_rng(0)
    u, v = rng.uniform(0.02, 0.98, size=(2, 300))
    pu = gumbel2.partial_u(u, v)
    pv = gumbel2.partial_v(u, v)
    assert np.all((pu >= 0.0) & (pu <= 1.0))
    assert np.all((pv >= 0.0) & (pv <= 1.0))


def test_partials_match_finite_differences(gumbel2):
    rng = np.random.default_rng(1)
    u, v = rng.uniform(0.1, 0.9, size=(2, 100))
    h = 1e-6
    fdu = (gumbel2.cdf(u + h, v) - gumbel2.cdf(u - h, v)) / (2 * h)
    fdv = (gumbel2.cdf(u, v + h) - gumbel2.cdf(u, v - h)) / (2 * h)
    assert np.max(np.abs(gumbel2.partial_u(u, v) - fdu) / np.abs(fdu)) <= 1e-5
    assert np.max(np.abs(gumbel2.partial_v(u, v) - fdv) / np.abs(fdv)) <= 1e-5


def test_pdf_independence_and_fd(gumbel2):
    ci = EvCopula(FlatPickands())
    assert abs(ci.pdf(0.4, 0.8) - 1.0) <= 1e-15
    rng = np.random.default_rng(2)
    u, v = rng.uniform(0.1, 0.9, size=(2, 100))
    h = 1e-5
    fd = (gumbel2.cdf(u + h, v + h) - gumbel2.cdf(u - h, v + h)
          - gumbel2.cdf(u + h, v - h) + gumbel2.cdf(u - h, v - h)) / (4 * h * h)
    assert np.max(np.abs(gumbel2.pdf(u, v) - fd) / np.abs(fd)) <= 1e-4


def test_pdf_integrates_to_one():
    c = EvCopula(ParametricPickands("galambos", 1.0))
    xg, wg = np.polynomial.legendre.leggauss(128)
    eps = 1e-6
    nodes = 0.5 * (1 - 2 * eps) * (xg + 1) + eps
    uu, vv = np.meshgrid(nodes, nodes, indexing="ij")
    w2 = np.outer(wg, wg) * (0.5 * (1 - 2 * eps)) ** 2
    assert abs(np.sum(w2 * c.pdf(uu, vv)) - 1.0) <= 1e-3


def test_two_increasing(gumbel2):
    rng = np.random.default_rng(3)
    a = rng.uniform(0.0, 1.0, size=(500, 2))
    b = rng.uniform(0.0, 1.0, size=(500, 2))
    u1, u2 = np.minimum(a[:, 0], b[:, 0]), np.maximum(a[:, 0], b[:, 0])
    v1, v2 = np.minimum(a[:, 1], b[:, 1]), np.maximum(a[:, 1], b[:, 1])
    mass = (gumbel2.cdf(u2, v2) - gumbel2.cdf(u1, v2)
            - gumbel2.cdf(u2, v1) + gumbel2.cdf(u1, v1))
    assert np.min(mass) >= -1e-10


def test_simulate_independence_exact():
    ci = EvCopula(FlatPickands())
    sample = ci.simulate(2000, seed=42)
    rng = np.random.default_rng(42)
    u = rng.random(2000)
    p = rng.random(2000)
    assert np.array_equal(sample[:, 0], u)
    assert np.array_equal(sample[:, 1], p)


def test_simulate_conditionals_uniform_for_independence():
    # V given U is uniform: Kolmogorov-Smirnov statistic per u-bin stays small
    ci = EvCopula(FlatPickands())
    sample = ci.simulate(10000, seed=17)
    for lo in np.arange(0.0, 1.0, 0.2):
        sel = (sample[:, 0] >= lo) & (sample[:, 0] < lo + 0.2)
        v = np.sort(sample[sel, 1])
        n = v.size
        ks = np.max(np.abs(v - (np.arange(1, n + 1) - 0.5) / n))
        assert ks <= 0.05


def test_simulate_reproducible(gumbel2):
    s1 = gumbel2.simulate(500, seed=9)
    s2 = gumbel2.simulate(500, seed=9)
    assert np.array_equal(s1, s2)
    with pytest.raises(InputError):
        gumbel2.simulate(0)


def test_simulate_rejects_invalid_dependence():
    from evcop.errors import NumericalError

    class Below:
        def __call__(self, t):
            return np.full_like(np.asarray(t, dtype=float), 0.4)

        def deriv(self, t):
            return np.zeros_like(np.asarray(t, dtype=float))

        def deriv2(self, t):
            return np.zeros_like(np.asarray(t, dtype=float))

    with pytest.raises(NumericalError):
        EvCopula(Below()).simulate(200, seed=0)


def test_simulate_blomqvist(gumbel2):
    sample = gumbel2.simulate(5000, seed=7)
    beta_hat = 4.0 * np.mean((sample[:, 0] <= 0.5) & (sample[:, 1] <= 0.5)) - 1.0
    beta_true = 4.0 ** (1.0 - 2.0 ** -0.5) - 1.0
    assert abs(beta_hat - beta_true) <= 0.05


def test_simulated_empirical_copula(gumbel2):
    sample = gumbel2.simulate(20000, seed=13)
    grid = np.arange(1, 11) / 11.0
    worst = 0.0
    for gu in grid:
        for gv in grid:
            emp = np.mean((sample[:, 0] <= gu) & (sample[:, 1] <= gv))
            worst = max(worst, abs(emp - gumbel2.cdf(gu, gv)))
    assert worst <= 0.02


def test_survival_involution_and_boundaries(gumbel2):
    surv = gumbel2.survival_copula()
    back = surv.survival_copula()
    u = np.linspace(0.05, 0.95, 12)
    uu, vv = np.meshgrid(u, u)
    assert np.max(np.abs(back.cdf(uu, vv) - gumbel2.cdf(uu, vv))) <= 1e-12
    assert np.max(np.abs(surv.cdf(u, np.ones_like(u)) - u)) <= 1e-9
    assert np.max(np.abs(surv.cdf(u, np.zeros_like(u)))) <= 1e-12
    # survival density is the reflected density
    assert abs(surv.pdf(0.2, 0.3) - gumbel2.pdf(0.8, 0.7)) <= 1e-14


def test_survival_partials_and_simulation(gumbel2):
    surv = gumbel2.survival_copula()
    rng = np.random.default_rng(4)
    u, v = rng.uniform(0.1, 0.9, size=(2, 50))
    h = 1e-6
    fdu = (surv.cdf(u + h, v) - surv.cdf(u - h, v)) / (2 * h)
    assert np.max(np.abs(surv.partial_u(u, v) - fdu)) <= 1e-6
    sample = surv.simulate(2000, seed=3)
    resid = surv.partial_u(sample[:, 0], sample[:, 1])
    assert np.all((resid > 0) & (resid < 1))


def test_tvd_copulas_properties(gumbel2):
    ci = EvCopula(FlatPickands())
    assert tvd_copulas(gumbel2, gumbel2) == 0.0
    d1 = tvd_copulas(ci, gumbel2)
    d2 = tvd_copulas(gumbel2, ci)
    assert 0.0 < d1 < 1.0
    assert abs(d1 - d2) <= 1e-9
    val, bound = tvd_copulas(ci, gumbel2, full=True)
    assert val == d1
    assert bound == 4e-4


def test_supnorm_bound(gumbel2):
    same = supnorm_bound_check(gumbel2.pickands, gumbel2.pickands)
    assert same.gamma == 0.0 and same.measured == 0.0 and same.bound == 0.0
    other = ParametricPickands("gumbel", 3.0)
    res = supnorm_bound_check(gumbel2.pickands, other)
    assert res.measured <= res.bound + 1e-9


def test_supnorm_bound_random_spline_pairs(basis13):
    rng = np.random.default_rng(5)
    from evcop.fit import pipeline_pickands

    for _ in range(10):
        a1, _, _ = pipeline_pickands(basis13, 0.5 * rng.standard_normal(13),
                                     True, False)
        a2, _, _ = pipeline_pickands(basis13, 0.5 * rng.standard_normal(13),
                                     True, False)
        res = supnorm_bound_check(a1, a2)
        assert res.measured <= res.bound + 1e-9
