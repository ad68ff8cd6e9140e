"""Large-deviation predictors for the ladder epoch, the Cramer series and bounds.

Regimes for ``u = a n / c_n``:

* zero-drift    ``u ~ 0``:   ``P(tau^(0) > n)``;
* transition    ``u = O(1)``: ``P(tau^(0) > n) (1 - F(u))``;
* LD-normal     ``u -> inf``: ``2 E tau n^-1 Phi_bar(a sqrt n) exp(n a^3 lambda(a))``;
* LD-tail       heavy tails, ``n`` beyond the Gaussian zone: ``E tau P(X >= n a)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize, special

from . import ladder_exact, limit_laws
from .increments import (GAUSSIAN, PARETO, IncrementModel, ModelError, cumulant,
                         drifted_support, log_mgf, norming_c, truncated_second_moment, upper_tail)

U_ZERO = 0.05  # below: zero-drift regime
U_LD = 3.0  # above: large deviations
WINDOW = 1.5  # unresolved window half-width (multiplicative)
FN_CONSTANT = 8.0
DP_ZERO_LIMIT = 20_000  # largest n for an exact zero-drift table in classify


# -- Cramer series -----------------------------------------------------------------


@dataclass(frozen=True)
class CramerCoefficients:
    """``lambda(t) = sum_j lambdas[j] t^j`` for the unit-variance base law.

    The rate of the standardised law is ``t^2/2 - t^3 lambda(t)``.
    """

    m: int
    lambdas: tuple
    gammas: tuple  # standardised cumulants gamma_2.. gamma_{m+3}
    scale: float  # standard deviation of the base law

    def __call__(self, t) -> float:
        return float(np.polyval(self.lambdas[::-1], t))


def _series_mul(p, q, N):
    return np.convolve(p, q)[: N + 1]


def _series_compose_powers(h, N, kmax):
    """Powers h^0..h^kmax truncated at degree N."""
    pw = [np.zeros(N + 1) for _ in range(kmax + 1)]
    pw[0][0] = 1.0
    for k in range(1, kmax + 1):
        pw[k] = _series_mul(pw[k - 1], h, N)
    return pw


def cramer_coefficients(model: IncrementModel, m: int) -> CramerCoefficients:
    """Coefficients ``lambda_0..lambda_m`` by series reversion of ``K'``.

    With ``K(h) = sum_k gamma_k h^k / k!`` the standardised cumulant function,
    ``h(x)`` solves ``K'(h) = x`` and the rate is ``x h - K(h)``.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    if not model.satisfies_cramer and model.tail_exponent <= m + 3:
        raise ModelError(f"cumulants up to order {m + 3} do not exist")
    N = m + 3
    kappas = [cumulant(model, k, 0.0) for k in range(2, N + 1)]
    sigma = math.sqrt(kappas[0])
    gam = [0.0, 0.0] + [kappas[k - 2] / sigma**k for k in range(2, N + 1)]
    # h = x - sum_{k>=3} gamma_k h^{k-1} / (k-1)!, iterated to full order
    x = np.zeros(N + 1)
    x[1] = 1.0
    h = x.copy()
    for _ in range(N):
        pw = _series_compose_powers(h, N, N)
        corr = np.zeros(N + 1)
        for k in range(3, N + 1):
            corr += gam[k] * pw[k - 1] / math.factorial(k - 1)
        h = x - corr
    pw = _series_compose_powers(h, N + 1, N + 1)
    xh = np.zeros(N + 2)
    xh[1:] = h[: N + 1]
    K = np.zeros(N + 2)
    for k in range(2, N + 1):
        K += gam[k] * pw[k] / math.factorial(k)
    rate = xh - K
    lambdas = tuple(float(-rate[j + 3]) for j in range(m + 1))
    return CramerCoefficients(m, lambdas, tuple(gam[2:]), sigma)


# -- rate xi(a) ----------------------------------------------------------------------


@dataclass(frozen=True)
class RatePair:
    h0: float
    xi: float
    mode: str


def rate_xi(model: IncrementModel, a: float, m: int | None = None) -> RatePair:
    """Rate ``xi(a)`` and tilt ``h0`` of the drifted law.

    ``m is None`` uses the moment generating function: ``h0`` minimises
    ``E exp(h X^(a))`` and ``xi = -log`` of the minimum.  An integer ``m``
    uses the truncated Cramer series ``xi = a^2/2 - a^3 lambda_m(a)`` in
    standardised units.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if m is None:
        if model.kind == GAUSSIAN:
            return RatePair(a, 0.5 * a * a, "mgf")
        if not model.satisfies_cramer:
            raise ModelError("no exponential moments: the MGF rate is unavailable")
        x, p = drifted_support(model, a)
        if x.max() <= 0:
            # no upward steps: the infimum is P(X^(a) = 0), reached as h -> inf
            p0 = math.fsum(p[x == 0])
            return RatePair(math.inf, -math.log(p0) if p0 > 0 else math.inf, "mgf")
        dlog = lambda h: _dlog_mgf(model, h, a)
        hi = 1.0
        while dlog(hi) <= 0:
            hi *= 2
            if hi > 1e6:
                raise ModelError("no positive root of the saddle equation")
        h0 = optimize.brentq(dlog, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        xi = -float(log_mgf(model, h0, a))
        return RatePair(h0, xi, "mgf")
    cc = cramer_coefficients(model, m)
    s = cc.scale
    t = a / s
    lam = cc(t)
    dlam = float(np.polyval(np.polyder(np.asarray(cc.lambdas[::-1])), t)) if m > 0 else 0.0
    xi = 0.5 * t * t - t**3 * lam
    # d xi / d a, the series tilt
    h0 = (t - 3 * t * t * lam - t**3 * dlam) / s
    return RatePair(h0, xi, f"series(m={m})")


def _dlog_mgf(model, h, a):
    x, p = drifted_support(model, a)
    w = p * np.exp(h * x - np.max(h * x))
    return float(np.sum(w * x) / np.sum(w))


def cramer_lambda(model: IncrementModel, a: float, m: int | None = None) -> float:
    """``lambda_m(a)`` in standardised units; ``m=None`` is the exact (MGF) value."""
    s = math.sqrt(model.second_moment)
    t = a / s
    if m is None:
        xi = rate_xi(model, a).xi
        return (0.5 * t * t - xi) / t**3
    return cramer_coefficients(model, m)(t)


# -- predictors ------------------------------------------------------------------------


def ld_normal_predict(a: float, n: int, etau: float, model: IncrementModel,
                      m: int | None = None) -> float:
    """``2 E tau n^-1 Phi_bar(a sqrt n) exp(n a^3 lambda_m(a))`` (standardised ``a``).

    ``m=None`` takes the full series, i.e. the exact rate from the MGF;
    ``m=-1`` is the empty partial sum (plain normal approximation), the
    right choice when only a few moments exist.
    """
    s = math.sqrt(model.second_moment)
    t = a / s
    if model.kind == GAUSSIAN or m == -1:
        lam = 0.0
    else:
        lam = cramer_lambda(model, a, m)
    logv = math.log(2 * etau / n) + float(special.log_ndtr(-t * math.sqrt(n))) + n * t**3 * lam
    return math.exp(logv)


def ld_cor_predict(a: float, n: int, xi: float, mgf_tau: float) -> float:
    """``(E e^{xi tau} - 1) / (a sqrt(2 pi) (e^xi - 1)) n^{-3/2} e^{-n xi}``."""
    return ((mgf_tau - 1) / (a * math.sqrt(2 * math.pi) * math.expm1(xi))
            * n**-1.5 * math.exp(-n * xi))


def truncated_tau_mgf(table, xi: float, n: int | None = None) -> float:
    """``E[e^{xi tau}; tau <= n]`` from an exact tail table."""
    p = table.probs if hasattr(table, "probs") else np.asarray(table)
    n = len(p) - 1 if n is None else n
    pk = p[:n] - p[1: n + 1]  # P(tau = k), k = 1..n
    k = np.arange(1, n + 1)
    return math.fsum(np.exp(xi * k) * pk)


def biased_tau_mgf(a: float) -> float:
    """``E e^{xi tau} = sqrt(q/p)`` for the biased walk at its own rate."""
    return math.sqrt((1 + a) / (1 - a))


def ld_heavy_predict(a: float, n: int, etau: float, model: IncrementModel) -> float:
    """``E tau P(X >= n a)``."""
    return etau * upper_tail(model, n * a)


# -- bounds ------------------------------------------------------------------------------


def fuk_nagaev_bound(model: IncrementModel, x: float, n: int, C: float = FN_CONSTANT) -> float:
    """``n P(X >= x/3) + C (n V(x) / x^2)^2`` for ``P(S_n >= x)`` at zero drift."""
    if not x > 0:
        raise ValueError("x must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    return n * upper_tail(model, x / 3) + C * (n * truncated_second_moment(model, x) / x**2) ** 2


def fuk_nagaev_min_constant(model: IncrementModel, n: int, xs, marginals_exact) -> float:
    """Smallest ``C`` making the bound dominate ``P(S_n >= x)`` at the given points."""
    best = 0.0
    for x, p in zip(xs, marginals_exact):
        lead = n * upper_tail(model, x / 3)
        quad = (n * truncated_second_moment(model, x) / x**2) ** 2
        if p > lead:
            if quad == 0:
                return math.inf
            best = max(best, (p - lead) / quad)
    return best


def upbound_statistic(prob: float, model: IncrementModel, a: float, n: int, etau: float) -> float:
    """``P(tau > n) (n a)^2 / (E tau V(n a))``; bounded for ``n >= n_a``."""
    v = truncated_second_moment(model, n * a)
    return prob * (n * a) ** 2 / (etau * v)


# -- regime classification -----------------------------------------------------------


@dataclass
class RegimeReport:
    label: str
    a: float
    n: int
    u: float
    c_n: float
    predictor_name: str
    predictor: float | None
    competitor_name: str | None = None
    competitor: float | None = None
    ratio: float | None = None
    unresolved_window: bool = False
    assumptions: list = field(default_factory=list)
    inputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def zero_drift_reference(model: IncrementModel, n: int) -> tuple[float, str]:
    """``P(tau^(0) > n)``: exact where cheap, else its asymptotic form."""
    if model.kind == GAUSSIAN:
        # Sparre Andersen: continuous symmetric steps give binom(2n, n) 4^-n
        return math.exp(special.gammaln(2 * n + 1) - 2 * special.gammaln(n + 1) - n * math.log(4)), "exact"
    if n <= DP_ZERO_LIMIT and (model.kind != PARETO or n <= 2000):
        return float(ladder_exact.survival_dp(model, 0.0, n).probs[-1]), "dp"
    if model.finite_variance:
        return limit_laws.zero_drift_tail(model, n), "asymptotic"
    raise ModelError("no zero-drift reference for this model at this n")


def etau_reference(model: IncrementModel, a: float) -> tuple[float, str]:
    """``E tau^(a)``: DP sum where feasible, else the finite-variance predictor."""
    if model.kind == GAUSSIAN:
        return limit_laws.expectation_finite_variance(model)(a), "asymptotic"
    if model.kind == PARETO:
        # the power-tail remainder converges much faster with finite variance
        horizon = 1024 if model.finite_variance else 4096
        return ladder_exact.expected_tau(model, a, horizon=horizon)["etau"], "dp+power-tail"
    return ladder_exact.expected_tau(model, a)["etau"], "dp"


def regime_classify(model: IncrementModel, a: float, n: int, *, zero_tail: float | None = None,
                    etau: float | None = None, u_zero: float = U_ZERO,
                    u_ld: float = U_LD) -> RegimeReport:
    """Place ``(a, n)`` in the trichotomy and evaluate the matching predictor."""
    if not a > 0:
        raise ValueError("a must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    c = norming_c(model, n)
    u = a * n / c
    alpha = model.stable_alpha
    assumptions = []
    inputs = {}
    heavy_fv = model.kind == PARETO and model.finite_variance
    window = False
    tail_zone = False
    if heavy_fv:
        t = model.tail_exponent
        ratio_ld = n * a * a / math.log(a ** -2) if a < 1 else math.inf
        thresh = math.sqrt(t - 2)
        tail_zone = ratio_ld > thresh
        window = abs(math.log(ratio_ld / thresh)) < math.log(WINDOW) if ratio_ld < math.inf else False
        inputs["ld_ratio"] = ratio_ld
        inputs["tail_threshold"] = thresh
        assumptions.append("threshold sqrt(t - 2) for tail index -t")
    if u < u_zero:
        label = "zero-drift"
    elif u <= u_ld:
        label = "transition"
    elif alpha < 2 or tail_zone:
        label = "LD-tail"
    else:
        label = "LD-normal"

    def zt():
        nonlocal zero_tail
        if zero_tail is None:
            zero_tail, src = zero_drift_reference(model, n)
            inputs["zero_tail_source"] = src
        inputs["zero_tail"] = zero_tail
        return zero_tail

    def et():
        nonlocal etau
        if etau is None:
            etau, src = etau_reference(model, a)
            inputs["etau_source"] = src
        inputs["etau"] = etau
        return etau

    def normal_ld():
        m = None if model.satisfies_cramer else -1
        if m is None:
            assumptions.append("Cramer condition: series used in full (m = inf)")
        else:
            assumptions.append("normal approximation without Cramer terms")
        return ld_normal_predict(a, n, et(), model, m)

    cdf = limit_laws.limit_cdf(alpha, model.stable_beta)
    if label == "zero-drift":
        name, value = "zero-drift tail", zt()
        comp_name, comp = "transition", zt() * float(cdf(u)) if u > 0 else zt()
    elif label == "transition":
        corr = float(cdf(u))
        name, value = "transition", zt() * corr
        inputs["correction"] = corr
        comp_name, comp = "zero-drift tail", zt()
    elif label == "LD-normal":
        name, value = "LD-normal", normal_ld()
        comp_name, comp = "transition", zt() * float(cdf(u))
    else:
        name, value = "LD-tail", ld_heavy_predict(a, n, et(), model)
        if alpha == 2:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                comp_name, comp = "LD-normal", normal_ld()
        else:
            comp_name, comp = "transition", zt() * float(cdf(u))
    ratio = value / comp if comp else None
    return RegimeReport(label, a, n, u, c, name, value, comp_name, comp, ratio, window,
                        assumptions, inputs)
