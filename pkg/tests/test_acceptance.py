"""Acceptance criteria, one ``criterion`` marker per item.

The terminal summary prints one PASS/FAIL line per criterion.  Criterion 7's
trend clause is evaluated as stated and is expected to fail (strict xfail): at
fixed drift the DP/predictor ratio tends to a constant different from 1, so
the error grows with ``n``.
"""

import math

import numpy as np
import pytest

from ladderepoch import increments as inc
from ladderepoch import ladder_exact as le
from ladderepoch import large_dev as ld
from ladderepoch import limit_laws as ll
from ladderepoch import monte_carlo as mc
from ladderepoch.stable_laws import limit_params
from ladderepoch.verification import _upper_marginal


def crit(num, title):
    return pytest.mark.criterion(num, title)


# -- 1 -------------------------------------------------------------------------------------


def random_lattice(rng):
    """Zero-mean law on 2-4 atoms drawn from {-2h..2h}, h in {1, 2}."""
    h = int(rng.integers(1, 3))
    grid = np.arange(-2 * h, 2 * h + 1)
    while True:
        size = int(rng.integers(2, 5))
        atoms = np.sort(rng.choice(grid, size=size, replace=False))
        if atoms[0] < 0 < atoms[-1]:
            break
    w = rng.uniform(0.2, 1.0, size=size)
    p = w / w.sum()
    mean = float(p @ atoms)
    # move mass onto the extreme atom opposite the mean
    if mean > 0:
        p[0] += mean / -atoms[0]
    else:
        p[-1] += -mean / atoms[-1]
    p /= p.sum()
    p[-1] = 1.0 - math.fsum(p[:-1])
    return inc.lattice_model(dict(zip(atoms.tolist(), p.tolist())))


@crit(1, "oracle equivalence: DP = enumeration on 20 random lattices")
def test_c1_oracle_equivalence():
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(20):
        m = random_lattice(rng)
        assert abs(math.fsum(m.probs * m.values)) < 1e-12
        a = float(rng.choice([0.0, 0.25, 0.5, 1.0]))
        r = len(m.support)
        n = 14
        while r**n > le.ENUM_GUARD:
            n -= 1
        d = le.survival_dp(m, a, n).probs
        e = le.enumerate_bruteforce(m, a, n).probs
        worst = max(worst, float(np.max(np.abs(d - e))))
    assert worst <= 1e-12


# -- 2 -------------------------------------------------------------------------------------


@crit(2, "Spitzer recurrence = DP (rel 1e-10, n <= 500); genf_check <= 1e-10")
@pytest.mark.parametrize("family", ["pm1", "biased"])
def test_c2_spitzer_consistency(family, request):
    m = request.getfixturevalue(family)
    for a in (0.0, 0.05, 0.1, 0.25, 0.5):
        d = le.survival_dp(m, a, 500)
        marg = le.marginal_nonneg_probs(m, a, 500)
        s = le.spitzer_recurrence(marg).probs
        assert np.max(np.abs(s - d.probs) / d.probs) <= 1e-10
        for k in range(51):
            assert le.genf_check(d, marg, k) <= 1e-10


# -- 3 -------------------------------------------------------------------------------------


@crit(3, "golden closed forms: moment constant sqrt(pi/2); integral-equation residuals")
def test_c3_golden():
    assert abs(ll.moment_constant(1.0, alpha=2.0, beta=0.0) - math.sqrt(math.pi / 2)) <= 1e-8
    p = limit_params(2.0)
    for u in (0.25, 0.5, 1.0, 2.0, 4.0):
        assert ll.integral_equation_residual(ll.brownian_correction, p, u) <= 1e-6


# -- 4 -------------------------------------------------------------------------------------


@crit(4, "Laplace characterisation for alpha = 2 within 1e-5")
def test_c4_laplace():
    p = limit_params(2.0)
    for lam in (0.5, 1.0, 2.0):
        lhs = ll.laplace_lhs(ll.brownian_correction, p, lam)
        assert abs(lhs - ll.laplace_rhs(p, lam)) <= 1e-5


# -- 5 -------------------------------------------------------------------------------------


@crit(5, "transition law on the p-biased family")
@pytest.mark.parametrize("v", [0.25, 1.0, 4.0])
def test_c5_transition(biased, v):
    target = ll.brownian_correction(math.sqrt(v))
    errs = {}
    for a in (0.1, 0.05, 0.02):
        n = round(v / a**2)
        exact = le.survival_dp(biased, a, n).probs[n]
        zero = math.comb(n, n // 2) / 2**n
        errs[a] = abs(exact / zero / target - 1)
    assert errs[0.02] <= 0.10
    assert errs[0.02] < errs[0.1]


# -- 6 -------------------------------------------------------------------------------------


@crit(6, "moment law: a E tau -> 1 on the p-biased family")
def test_c6_moment_law(biased):
    for a, tol in ((0.1, 0.05), (0.05, 0.03), (0.02, 0.02)):
        etau = le.expected_tau(biased, a)["etau"]
        assert abs(a * etau - 1) <= tol
    pred = ll.expectation_finite_variance(inc.symmetric_pm1())
    assert abs(pred.series.value - math.log(2) / 2) <= 1e-3
    assert abs(pred.constant - 1) <= 1e-3


# -- 7 -------------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def c7_data(biased):
    a = 0.2
    xi = -0.5 * math.log(1 - a * a)
    assert ld.rate_xi(biased, a).xi == pytest.approx(xi, rel=1e-12)
    tab = le.survival_dp(biased, a, 4000).probs
    mgf = ld.biased_tau_mgf(a)
    err = {n: abs(tab[n] / ld.ld_cor_predict(a, n, xi, mgf) - 1) for n in (1000, 2000, 4000)}
    return err


@crit(7, "LD-normal: DP vs (cor) with closed E exp(xi tau)")
def test_c7_error_at_2000(c7_data):
    assert c7_data[2000] <= 0.25


@crit(7, "LD-normal: DP vs (cor) with closed E exp(xi tau)")
@pytest.mark.xfail(strict=True, reason="error grows with n at fixed a (1000: 2.8%, 2000: 6.2%, 4000: 8.1%)")
def test_c7_error_decreasing(c7_data):
    assert c7_data[1000] > c7_data[2000] > c7_data[4000]


# -- 8 -------------------------------------------------------------------------------------


@crit(8, "LD-heavy: DP / predictor in [0.5, 2] from na/c_n >= 10, monotone toward 1")
@pytest.mark.parametrize("t,a", [(1.5, 0.5), (3.5, 0.3), (3.5, 0.5)])
def test_c8_heavy(t, a):
    m = inc.pareto_tail(t, max_index=200_000)
    n0 = inc.n_for_u(m, a, 10.0)
    assert a * n0 / inc.norming_c(m, n0) >= 10
    tab = le.survival_dp(m, a, 8 * n0)
    etau = le.expected_tau(m, a, table=tab)["etau"]
    ratios = [tab.probs[n] / ld.ld_heavy_predict(a, n, etau, m) for n in (n0, 2 * n0, 4 * n0, 8 * n0)]
    assert all(0.5 <= r <= 2 for r in ratios)
    gaps = [abs(r - 1) for r in ratios]
    assert all(x > y for x, y in zip(gaps, gaps[1:]))


# -- 9 -------------------------------------------------------------------------------------


@crit(9, "bounds: Fuk-Nagaev dominates exact marginals; UpBound statistic bounded")
@pytest.mark.parametrize("name", ["pm1", "pareto3.5", "pareto1.5"])
def test_c9_fuk_nagaev(name):
    model = {"pm1": inc.symmetric_pm1(),
             "pareto3.5": inc.pareto_tail(3.5, max_index=5000),
             "pareto1.5": inc.pareto_tail(1.5, max_index=5000)}[name]
    for n in (10, 50, 200):
        pmf = _upper_marginal(model, n)
        tail = np.cumsum(pmf[::-1])[::-1]
        for x in range(1, len(pmf)):
            assert ld.fuk_nagaev_bound(model, float(x), n) >= tail[x]


@crit(9, "bounds: Fuk-Nagaev dominates exact marginals; UpBound statistic bounded")
@pytest.mark.parametrize("family", ["pm1", "biased"])
def test_c9_upbound(family, request):
    m = request.getfixturevalue(family)
    for a in (0.1, 0.05):
        na = inc.boundary_n_a(m, a)
        tab = le.survival_dp(m, a, 100 * na).probs
        etau = le.expected_tau(m, a)["etau"]
        ns = np.unique(np.geomspace(na, 100 * na, 40).astype(int))
        stats = np.array([ld.upbound_statistic(tab[n], m, a, n, etau) for n in ns])
        assert np.all(np.isfinite(stats)) and stats.max() < 10
        # no growth over the second half of the range
        assert stats[len(stats) // 2:].max() <= stats[: len(stats) // 2].max()


# -- 10 ------------------------------------------------------------------------------------


@crit(10, "Monte Carlo: bitwise reproducibility, CI coverage, tilted variance reduction")
def test_c10_reproducible(biased):
    one = mc.estimate_tail(biased, 0.1, 60, 100_000, 42, threads=1)
    again = mc.estimate_tail(biased, 0.1, 60, 100_000, 42, threads=1)
    multi = mc.estimate_tail(biased, 0.1, 60, 100_000, 42, threads=4)
    assert one.to_dict() == again.to_dict() == multi.to_dict()
    t1 = mc.tilted_estimate_tail(biased, 0.2, 300, 20_000, 42)
    t2 = mc.tilted_estimate_tail(biased, 0.2, 300, 20_000, 42, threads=3)
    assert t1.to_dict() == t2.to_dict()


@crit(10, "Monte Carlo: bitwise reproducibility, CI coverage, tilted variance reduction")
def test_c10_coverage(pm1):
    covered = 0
    for rep in range(100):
        lo, hi = mc.estimate_tail(pm1, 0.0, 3, 2000, 5000 + rep).ci()
        covered += lo <= 0.375 <= hi
    assert 90 <= covered <= 99


@crit(10, "Monte Carlo: bitwise reproducibility, CI coverage, tilted variance reduction")
def test_c10_tilted_stderr(biased):
    a, paths = 0.2, 10_000
    n = round(80 / a**2)
    exact = le.survival_dp(biased, a, n).probs[n]
    tilted = mc.tilted_estimate_tail(biased, a, n, paths, 7)
    plain = mc.estimate_tail(biased, a, n, paths, 7)
    # plain sees no survivors at this depth, so its empirical stderr is 0 and
    # carries no information; its actual stderr is the binomial one
    plain_se = math.sqrt(exact * (1 - exact) / paths)
    assert plain.value == 0.0
    assert tilted.stderr <= plain_se
    assert abs(tilted.value - exact) < 4 * tilted.stderr
    # empirical comparison where the plain estimator has survivors
    t = mc.tilted_estimate_tail(biased, a, 50, paths, 7)
    p = mc.estimate_tail(biased, a, 50, paths, 7)
    assert p.value > 0 and t.stderr <= p.stderr
