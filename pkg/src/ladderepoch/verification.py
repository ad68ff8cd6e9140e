"""Quick invariant suite run by ``ladderepoch verify``.

Each check returns ``(ok, detail)``; the whole suite takes well under a
minute.  The full acceptance runs live in the test suite.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import ladder_exact, large_dev, limit_laws, monte_carlo
from .increments import biased_pm1, lattice_model, pareto_tail, symmetric_pm1
from .stable_laws import limit_params


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str
    seconds: float


def _random_lattice(rng, h):
    k = np.arange(-2 * h, 2 * h + 1)
    while True:
        w = rng.integers(0, 5, size=len(k)).astype(float)
        if w[k < 0].sum() and w[k > 0].sum():
            break
    # shift the mean to zero by re-weighting the two extreme atoms
    mean = float(w @ k) / w.sum()
    p = w / w.sum()
    lo, hi = 0, len(k) - 1
    if mean > 0:
        p[lo] += mean / (-k[lo])
    else:
        p[hi] += -mean / k[hi]
    p /= p.sum()
    return lattice_model(dict(zip(k.tolist(), p.tolist())))


def check_oracle(seed=0, models=5, n=10):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(models):
        m = _random_lattice(rng, int(rng.integers(1, 3)))
        a = float(rng.choice([0.0, 0.25, 0.5]))
        if len(m.support) ** n > 10**7:
            nn = max(1, int(7 / math.log10(len(m.support))))
        else:
            nn = n
        d = ladder_exact.survival_dp(m, a, nn).probs
        e = ladder_exact.enumerate_bruteforce(m, a, nn).probs
        worst = max(worst, float(np.max(np.abs(d - e))))
    return worst <= 1e-12, f"max |dp - enumeration| = {worst:.2e}"


def check_spitzer(n=200):
    worst, gworst = 0.0, 0.0
    for model, a in ((symmetric_pm1(), 0.1), (biased_pm1(0.0), 0.2)):
        d = ladder_exact.survival_dp(model, a, n).probs
        marg = ladder_exact.marginal_nonneg_probs(model, a, n)
        s = ladder_exact.spitzer_recurrence(marg).probs
        worst = max(worst, float(np.max(np.abs(s - d) / d)))
        gworst = max(gworst, ladder_exact.genf_check(d, marg, 50))
    return worst <= 1e-10 and gworst <= 1e-10, f"rel gap {worst:.2e}, genf {gworst:.2e}"


def check_golden():
    c = limit_laws.moment_constant(1, alpha=2, beta=0)
    err = abs(c - math.sqrt(math.pi / 2))
    params = limit_params(2.0, 0.0)
    res = max(limit_laws.integral_equation_residual(limit_laws.brownian_correction, params, u)
              for u in (0.25, 0.5, 1, 2, 4))
    return err <= 1e-8 and res <= 1e-6, f"|C - sqrt(pi/2)| = {err:.2e}, residual {res:.2e}"


def check_laplace():
    params = limit_params(2.0, 0.0)
    worst = 0.0
    for lam in (0.5, 1.0, 2.0):
        lhs = limit_laws.laplace_lhs(limit_laws.brownian_correction, params, lam)
        rhs = float(np.real(limit_laws.laplace_rhs(params, lam)))
        worst = max(worst, abs(lhs - rhs))
    return worst <= 1e-5, f"max |lhs - rhs| = {worst:.2e}"


def check_etau_closed_form():
    a = 0.1
    et = ladder_exact.expected_tau(biased_pm1(0.0), a)["etau"]
    return abs(a * et - 1) <= 1e-8, f"a E tau = {a * et:.12f}"


def check_cramer():
    lam = large_dev.cramer_coefficients(symmetric_pm1(), 1).lambdas
    xi = large_dev.rate_xi(biased_pm1(0.0), 0.1).xi
    ok = abs(lam[0]) < 1e-15 and abs(lam[1] + 1 / 12) < 1e-14
    ok &= abs(xi + 0.5 * math.log(1 - 0.01)) < 1e-14
    return ok, f"lambda = {lam}, xi(0.1) = {xi:.12g}"


def check_fuk_nagaev(n=200):
    worst = math.inf
    for model in (symmetric_pm1(), pareto_tail(3.5, max_index=4000)):
        marg = _upper_marginal(model, n)
        for x in range(5, int(6 * math.sqrt(n * model.second_moment)) + 1, 5):
            bound = large_dev.fuk_nagaev_bound(model, float(x), n)
            worst = min(worst, bound - float(marg[x:].sum()) if x < len(marg) else bound)
    return worst >= 0, f"min(bound - exact) = {worst:.2e}"


def _upper_marginal(model, n):
    """pmf of ``S_n^(0)`` on the integers from 0 upwards (unit span)."""
    off = model.support
    dense = np.zeros(off.max() - off.min() + 1)
    dense[off - off.min()] = model.probs
    pmf = np.array([1.0])
    for _ in range(n):
        pmf = ladder_exact._convolve(pmf, dense)
        pmf = pmf[: 40 * int(math.sqrt(n) + 1) * (off.max() - off.min()) + 1]
    zero = -n * off.min()
    return pmf[zero:]


def check_mc_determinism():
    m = symmetric_pm1()
    e1 = monte_carlo.estimate_tail(m, 0.0, 3, 20000, 11, threads=1)
    e2 = monte_carlo.estimate_tail(m, 0.0, 3, 20000, 11, threads=3)
    z = abs(e1.value - 0.375) / e1.stderr
    return e1.value == e2.value and z < 4, f"estimate {e1.value} (z = {z:.2f}), threads agree"


CHECKS = {
    "oracle": check_oracle,
    "spitzer": check_spitzer,
    "golden": check_golden,
    "laplace": check_laplace,
    "etau": check_etau_closed_form,
    "cramer": check_cramer,
    "fuk-nagaev": check_fuk_nagaev,
    "mc-determinism": check_mc_determinism,
}


def run_all(names=None) -> list[CheckResult]:
    out = []
    for name in names or CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = CHECKS[name]()
        except Exception as exc:  # reported, not raised
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out
