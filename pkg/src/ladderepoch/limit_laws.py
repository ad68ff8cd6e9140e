"""Transition law of the ladder epoch under vanishing drift.

For ``u = a n / c_n`` fixed,

    P(tau^(a) > n) ~ P(tau^(0) > n) (1 - F(u)),

where ``1 - F`` is built from the stable limit ``Z`` of ``S_n / c_n``.  All
routines here work with the law of ``Z`` itself (``limit_params``), so for
finite variance ``Z`` is standard normal and the closed Brownian form applies
without rescaling.

Routes to ``1 - F``:

* ``closed_brownian``           alpha = 2;
* ``closed_spectrally_positive`` beta = 1, via an integral of the density;
* ``laplace_inversion``          any (alpha, beta), by inverting
  ``C exp{-int (1 - e^{-lam t}) T(t) dt / t}``, ``T(t) = P(Z > t^{1-1/alpha})``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy import interpolate, special

from . import ladder_exact
from ._inversion import euler_invert, stehfest_invert
from ._quadrature import graded_breaks, panel_rule
from .increments import GAUSSIAN, IncrementModel
from .stable_laws import (StableParams, limit_params, stable_density, stable_tail,
                          tail_constant)

CLOSED_BROWNIAN = "closed_brownian"
CLOSED_SPECTRALLY_POSITIVE = "closed_spectrally_positive"
LAPLACE_INVERSION = "laplace_inversion"

SERIES_HORIZON = 10_000
LD_FLOOR = 1e-21  # below this relative correction defer to large deviations


class SeriesError(RuntimeError):
    """Spitzer series failed its convergence diagnostics."""


# -- closed forms -------------------------------------------------------------------


def _brownian_asym(u):
    # 1/u^2 - 3/u^4 + 15/u^6 - ... , stopped at the smallest term
    inv = 1.0 / (u * u)
    term = inv
    total = np.zeros_like(u)
    best = np.full_like(u, np.inf)
    done = np.zeros_like(u, dtype=bool)
    for k in range(1, 60):
        mag = np.abs(term)
        done |= mag >= best
        total = np.where(done, total, total + term)
        best = np.where(done, best, mag)
        term = -term * (2 * k + 1) * inv
    return total


def brownian_correction(u):
    """``1 - F(u) = u int_u^inf v^-2 e^{-v^2/2} dv`` for the Brownian meander.

    Integrated by parts: ``e^{-u^2/2} - u sqrt(2 pi) Phi_bar(u)``.  Written with
    ``erfcx`` to avoid overflow and with the asymptotic series for large ``u``
    to avoid cancellation.
    """
    x = np.asarray(u, dtype=float)
    if np.any(x < 0):
        raise ValueError("u must be nonnegative")
    y = np.atleast_1d(x)
    out = np.empty_like(y)
    big = y >= 12.0
    small = ~big
    ys = y[small]
    out[small] = np.exp(-0.5 * ys**2) * (1.0 - ys * math.sqrt(math.pi / 2) * special.erfcx(ys / math.sqrt(2)))
    yb = y[big]
    out[big] = np.exp(-0.5 * yb**2) * _brownian_asym(yb)
    return float(out[0]) if x.ndim == 0 else out


def spectrally_positive_correction(alpha: float, u, scale: float | None = None, *,
                                   order: int = 16):
    """``1 - F_{alpha,1}(u)`` from the density ``g`` of the spectrally positive limit:

        u^{1/(alpha-1)} / ((alpha-1) g(0)) int_u^inf v^{-alpha/(alpha-1)} g(v) dv.

    ``scale`` defaults to the scale of the limit of ``S_n / c_n``.
    """
    if not 1 < alpha < 2:
        raise ValueError("alpha must lie in (1, 2)")
    params = limit_params(alpha, 1.0) if scale is None else StableParams(alpha, 1.0, scale)
    x = np.asarray(u, dtype=float)
    y = np.atleast_1d(x)
    if np.any(y <= 0):
        raise ValueError("u must be positive")
    k = alpha / (alpha - 1)
    # 1 - F(u) = 1 - O(u^{1/(alpha-1)}) below this
    tiny = y < 1e-10
    y_eval = np.where(tiny, 1e-10, y)
    uniq = np.unique(y_eval)
    vmax = 1e4 * max(1.0, float(uniq[-1]))
    grid = np.geomspace(uniq[0], vmax, int(40 * math.log10(vmax / uniq[0])) + 8)
    breaks = np.unique(np.concatenate((uniq, grid)))
    nodes, weights = panel_rule(breaks, order)
    vals = nodes ** (-k) * stable_density(params, nodes) * weights
    panel = vals.reshape(len(breaks) - 1, order).sum(axis=1)
    # leading tail term beyond vmax: g(v) ~ alpha K v^{-alpha-1}
    K = tail_constant(params)
    rem = alpha * K * vmax ** (-k - alpha) / (k + alpha)
    upper = np.append(np.cumsum(panel[::-1])[::-1], 0.0) + rem
    idx = np.searchsorted(breaks, y_eval)
    g0 = stable_density(params, 0.0)
    res = y_eval ** (1 / (alpha - 1)) * upper[idx] / ((alpha - 1) * g0)
    res = np.where(tiny, 1.0, np.clip(res, 0.0, 1.0))
    return float(res[0]) if x.ndim == 0 else res


# -- the Laplace-transform characterisation ----------------------------------------


class _LaplaceData:
    """Tabulated ``T(e^s)`` and derived constants for one limit law."""

    S_LO = -60.0
    STEP = 0.02

    def __init__(self, params: StableParams):
        self.params = params
        a = params.alpha
        self.kappa = 1.0 - 1.0 / a
        self.rho = params.rho
        # up to Z-argument 1e4 (beyond the series cut-over)
        self.s_hi = math.log(1e4) / self.kappa
        s = np.arange(self.S_LO, self.s_hi + self.STEP / 2, self.STEP)
        T = stable_tail(params, np.exp(s * self.kappa))
        self.spline = interpolate.CubicSpline(s, T)
        self.anti = self.spline.antiderivative()
        self.T_hi = float(T[-1])
        if a < 2:
            self.rem_hi = self.T_hi / (a - 1)
        else:
            self.rem_hi = 0.0
        g0 = stable_density(params, 0.0)
        # below S_LO: T - rho ~ -g(0) e^{kappa s}
        self.rem_lo = -g0 * math.exp(self.kappa * self.S_LO) / self.kappa
        J = (self.anti(0.0) - self.anti(self.S_LO) - self.rho * (0.0 - self.S_LO)
             + self.anti(self.s_hi) - self.anti(0.0) + self.rem_hi + self.rem_lo)
        self.J = float(J)
        self.C = math.gamma(self.rho) * math.exp(self.rho * np.euler_gamma + self.J)

    def T(self, s):
        s = np.asarray(s, dtype=float)
        out = np.where(s < self.S_LO, self.rho, 0.0)
        inside = (s >= self.S_LO) & (s <= self.s_hi)
        out = np.where(inside, self.spline(np.clip(s, self.S_LO, self.s_hi)), out)
        if self.params.alpha < 2:
            tail = self.T_hi * np.exp(-(self.params.alpha - 1) * (s - self.s_hi))
            out = np.where(s > self.s_hi, tail, out)
        return out

    def upper_integral(self, s0: float) -> float:
        """``int_{s0}^inf T(e^s) ds``."""
        if s0 >= self.s_hi:
            return self.T_hi * math.exp(-(self.params.alpha - 1) * (s0 - self.s_hi)) / (self.params.alpha - 1) \
                if self.params.alpha < 2 else 0.0
        lo = max(s0, self.S_LO)
        val = float(self.anti(self.s_hi) - self.anti(lo)) + self.rem_hi
        if s0 < self.S_LO:
            val += self.rho * (self.S_LO - s0)
        return val

    def exponent(self, lam):
        """``I(lam) = int_0^inf (1 - e^{-lam t}) T(t) dt / t`` for complex ``lam``."""
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        out = np.empty(lam.shape, dtype=complex)
        for i, z in enumerate(lam):
            out[i] = self._exponent_one(z)
        return out

    def _exponent_one(self, z: complex) -> complex:
        if z == 0:
            return 0j
        if z.real <= 0:
            raise ValueError("Laplace argument must have positive real part")
        mod = abs(z)
        s_a = math.log(1e-3 / mod)
        s_b = math.log(45.0 / z.real)
        # small t: 1 - e^{-z t} ~ z t, smooth in s
        lo = min(self.S_LO, s_a - 1.0)
        nodes, w = panel_rule(np.linspace(lo, s_a, max(2, int((s_a - lo) / 0.5)) + 1), 16)
        et = np.exp(nodes)
        total = np.sum(-np.expm1(-z * et) * self.T(nodes) * w)
        total += self.rho * z * math.exp(lo)  # below lo
        # oscillatory middle: panels of width ~ 1/(|z| t) in s
        br = [s_a]
        s = s_a
        while s < s_b:
            s = min(s_b, s + min(0.25, 1.0 / (mod * math.exp(s))))
            br.append(s)
        nodes, w = panel_rule(np.asarray(br), 16)
        et = np.exp(nodes)
        total += np.sum(-np.expm1(-z * et) * self.T(nodes) * w)
        # e^{-z t} negligible beyond s_b
        total += self.upper_integral(s_b)
        return complex(total)

    def rhs(self, lam):
        return self.C * np.exp(-self.exponent(lam))

    def laplace_of_T(self, lam):
        """``L_T(lam) = int_0^inf e^{-lam t} T(t) dt`` for real ``lam > 0``."""
        lam = float(lam)
        s_b = math.log(45.0 / lam)
        nodes, w = panel_rule(np.linspace(self.S_LO, s_b, int((s_b - self.S_LO) / 0.05) + 1), 16)
        et = np.exp(nodes)
        return float(np.sum(np.exp(-lam * et) * et * self.T(nodes) * w))


@lru_cache(maxsize=32)
def _laplace_data(params: StableParams) -> _LaplaceData:
    return _LaplaceData(params)


def laplace_constant(params: StableParams) -> float:
    """Normalising constant ``C`` of the transform.

    Fixed by ``F(0) = 0``: as ``lam -> inf`` the transform must behave like
    ``Gamma(rho) lam^-rho``, which gives ``C = Gamma(rho) exp(rho gamma_E + J)``
    with ``J = int_0^inf (T(t) - rho 1{t<1}) dt / t``.
    """
    return _laplace_data(params).C


def laplace_rhs(params: StableParams, lam):
    """``C exp{-int_0^inf (1 - e^{-lam t}) P(Z > t^{1-1/alpha}) dt / t}``.

    This is the Laplace transform of ``x^{rho-1} (1 - F(x^{1-1/alpha}))``.
    ``params`` is the law of ``Z``; ``lam`` may be complex with positive real part.
    """
    lam_arr = np.asarray(lam)
    if np.any(np.real(lam_arr) < 0):
        raise ValueError("lam must have nonnegative real part")
    res = _laplace_data(params).rhs(lam_arr)
    if not np.all(np.isfinite(res)):
        raise ArithmeticError("Laplace exponent did not converge")
    if lam_arr.ndim == 0:
        v = complex(res[0])
        return v.real if np.isrealobj(lam_arr) else v
    return res.real if np.isrealobj(lam_arr) else res


def laplace_lhs(correction: Callable, params: StableParams, lam: float, *,
                s_lo: float = -60.0, order: int = 16) -> float:
    """``int_0^inf e^{-lam x} x^{rho-1} G(x^{1-1/alpha}) dx`` for a candidate ``G = 1 - F``.

    Computed in ``x = e^s``; below ``s_lo`` the candidate is taken as 1.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    rho = params.rho
    k = 1 - 1 / params.alpha
    s_b = math.log(60.0 / lam)
    nodes, w = panel_rule(np.arange(s_lo, s_b + 0.25, 0.25), order)
    x = np.exp(nodes)
    g = np.asarray(correction(x**k), dtype=float)
    total = math.fsum(np.exp(-lam * x + rho * nodes) * g * w)
    return total + math.exp(rho * s_lo) / rho


def laplace_correction(params: StableParams, u, method: str = "euler", *, diagnostics=False):
    """``1 - F(u)`` by numerically inverting :func:`laplace_rhs`.

    ``method`` is ``"euler"`` (default, error ~1e-8) or ``"stehfest"``
    (real arguments only, error ~1e-4).  Approximate by construction.
    """
    data = _laplace_data(params)
    x = np.asarray(u, dtype=float)
    y = np.atleast_1d(x)
    if np.any(y <= 0):
        raise ValueError("u must be positive")
    out = np.empty_like(y)
    err = np.empty_like(y)
    p = params.alpha / (params.alpha - 1)
    for i, ui in enumerate(y):
        xi = ui**p
        if method == "euler":
            f, e = euler_invert(data.rhs, xi)
        elif method == "stehfest":
            f, e = stehfest_invert(data.rhs, xi)
        else:
            raise ValueError(f"unknown inversion method {method!r}")
        scale = xi ** (1 - data.rho)
        out[i], err[i] = f * scale, e * scale
    res = float(out[0]) if x.ndim == 0 else out
    if diagnostics:
        return res, (float(err[0]) if x.ndim == 0 else err)
    return res


# -- the limit cdf object ----------------------------------------------------------


@dataclass(frozen=True)
class LimitCdf:
    """``u -> 1 - F(u)`` for the limit law ``params`` (see :func:`limit_params`)."""

    params: StableParams
    route: str

    def __call__(self, u):
        u_arr = np.asarray(u, dtype=float)
        if self.route == CLOSED_BROWNIAN:
            return brownian_correction(u_arr)
        y = np.atleast_1d(u_arr)
        out = np.ones_like(y)
        pos = y > 0
        if np.any(pos):
            if self.route == CLOSED_SPECTRALLY_POSITIVE:
                out[pos] = spectrally_positive_correction(self.params.alpha, y[pos], self.params.scale)
            else:
                out[pos] = laplace_correction(self.params, y[pos])
        return float(out[0]) if u_arr.ndim == 0 else out


def limit_cdf(alpha: float, beta: float = 0.0, route: str | None = None) -> LimitCdf:
    """Pick the most accurate available route for ``1 - F_{alpha,beta}``."""
    params = limit_params(alpha, beta)
    if route is None:
        if alpha == 2:
            route = CLOSED_BROWNIAN
        elif beta == 1:
            route = CLOSED_SPECTRALLY_POSITIVE
        else:
            route = LAPLACE_INVERSION
    if route == CLOSED_BROWNIAN and alpha != 2:
        raise ValueError("the Brownian closed form needs alpha = 2")
    if route == CLOSED_SPECTRALLY_POSITIVE and not (alpha < 2 and beta == 1):
        raise ValueError("the spectrally positive closed form needs beta = 1, alpha < 2")
    return LimitCdf(params, route)


def integral_equation_residual(correction: Callable, params: StableParams, u: float,
                               order: int = 16) -> float:
    """``|G(u) - int_0^1 G(u t^k) t^{rho-1} P(Z > u (1-t)^k) dt|``, ``k = 1 - 1/alpha``.

    ``G`` is the candidate ``1 - F``.  The substitution ``t = s^{1/rho}``
    removes the singular weight; both ends of ``s`` get graded panels.
    """
    if not u > 0:
        raise ValueError("u must be positive")
    rho = params.rho
    k = 1 - 1 / params.alpha
    left = graded_breaks(0.0, 0.5, levels=30)
    right = 1.0 - graded_breaks(0.0, 0.5, levels=30)[::-1]
    breaks = np.unique(np.concatenate((left, right)))
    s, w = panel_rule(breaks, order)
    t = s ** (1 / rho)
    inner = np.asarray(correction(u * t**k), dtype=float)
    tail = stable_tail(params, u * (1 - t) ** k)
    rhs = float(np.sum(inner * tail * w)) / rho
    return abs(float(correction(u)) - rhs)


# -- predictors ----------------------------------------------------------------------


class TransitionPrediction(NamedTuple):
    value: float
    correction: float
    advice: str | None


def transition_predict(zero_tail: float, params_or_cdf, u: float) -> TransitionPrediction:
    """``P(tau^(a) > n) ~ P(tau^(0) > n) (1 - F(u))``, ``u = a n / c_n``."""
    if not 0 <= zero_tail <= 1:
        raise ValueError("zero_tail must be a probability")
    if u < 0:
        raise ValueError("u must be nonnegative")
    if isinstance(params_or_cdf, LimitCdf):
        cdf = params_or_cdf
    else:
        p = params_or_cdf
        cdf = limit_cdf(p.alpha, p.beta)
    corr = 1.0 if u == 0 else float(cdf(u))
    advice = None
    if corr < LD_FLOOR:
        advice = "use large-deviation predictor"
    return TransitionPrediction(zero_tail * corr, corr, advice)


def moment_constant(r: float, params: StableParams | None = None, *, alpha: float | None = None,
                    beta: float = 0.0, route: str | None = None) -> float:
    """``int_0^inf x^{r+rho-2} (1 - F(x^{1-1/alpha})) dx`` for ``r`` in ``(1 - rho, alpha)``.

    Closed routes integrate directly; otherwise the integral is expressed
    through the Laplace transform ``q``:
    ``r = 1`` gives ``q(0)``; ``r < 1`` gives ``int lam^{-r} q / Gamma(1-r)``;
    ``1 < r < 2`` gives ``int lam^{1-r} q L_T / Gamma(2-r)``.
    """
    if params is None:
        if alpha is None:
            raise ValueError("give params or alpha")
        params = limit_params(alpha, beta)
    a, rho = params.alpha, params.rho
    if not (1 - rho < r < a):
        raise ValueError(f"moment constant diverges: r={r} outside ({1 - rho:g}, {a:g})")
    cdf_route = route
    if cdf_route is None:
        cdf_route = (CLOSED_BROWNIAN if a == 2 else
                     CLOSED_SPECTRALLY_POSITIVE if params.beta == 1 else LAPLACE_INVERSION)
    if cdf_route == LAPLACE_INVERSION:
        return _moment_laplace(r, params)
    cdf = LimitCdf(params, cdf_route)
    return _moment_direct(r, params, cdf)


def _moment_direct(r, params, cdf, order=16):
    a, rho = params.alpha, params.rho
    p = a / (a - 1)
    # x = u^p turns the integral into p int u^e G(u) du
    e = ((r + rho - 2) * a + 1) / (a - 1)
    # near 0: w = u^{e+1}
    u0 = 1.0
    wmax = u0 ** (e + 1)
    wb = graded_breaks(0.0, wmax, levels=30, ratio=0.5)
    wn, ww = panel_rule(wb, order)
    un = wn ** (1 / (e + 1))
    head = float(np.sum(cdf(un) * ww)) / (e + 1)
    # away from 0: geometric panels, then a power-law remainder
    umax = 40.0 if a == 2 else 1e6
    br = np.geomspace(u0, umax, int(60 * math.log10(umax / u0)) + 2)
    un, uw = panel_rule(br, order)
    G = cdf(un)
    body = float(np.sum(un**e * G * uw))
    rem = 0.0
    if a < 2:
        # 1 - F(u) ~ K u^{-1-alpha}
        gmax = float(cdf(umax))
        rem = gmax * umax ** (e + 1) / (a - e)
    return p * (head + body + rem)


def _moment_laplace(r, params, order=16):
    data = _laplace_data(params)
    rho, a = data.rho, params.alpha
    if r == 1:
        return data.C
    if r >= 2:
        raise NotImplementedError("Laplace route covers r < 2")
    s_lo, s_hi = -40.0, 40.0
    s, w = panel_rule(np.linspace(s_lo, s_hi, 321), order)
    lam = np.exp(s)
    q = data.rhs(lam).real
    lam_lo, lam_hi = math.exp(s_lo), math.exp(s_hi)
    q_lo, q_hi = (float(v.real) for v in data.rhs(np.array([lam_lo, lam_hi])))
    # power-law ends: q -> C at 0, q ~ Gamma(rho) lam^-rho at infinity
    if r < 1:
        body = float(np.sum(lam ** (1 - r) * q * w))
        rem = q_hi * lam_hi ** (1 - r) / (r + rho - 1) + q_lo * lam_lo ** (1 - r) / (1 - r)
        return (body + rem) / math.gamma(1 - r)
    LT = np.array([data.laplace_of_T(z) for z in lam])
    body = float(np.sum(lam ** (2 - r) * q * LT * w))
    # L_T ~ rho / lam at infinity and ~ lam^{alpha-2} (alpha < 2) or const at 0
    rem = (q_hi * data.laplace_of_T(lam_hi) * lam_hi ** (2 - r) / (r + rho - 1)
           + q_lo * data.laplace_of_T(lam_lo) * lam_lo ** (2 - r) / (a - r))
    return (body + rem) / math.gamma(2 - r)


# -- finite-variance expectation and zero-drift tail ---------------------------------


@dataclass(frozen=True)
class SpitzerSeries:
    """``sum_k (P(S_k >= 0) - 1/2) / k`` with its extrapolated remainder."""

    value: float
    partial: float
    remainder: float
    horizon: int
    fit_coef: float

    @property
    def constant(self) -> float:
        return math.exp(self.value)


def spitzer_series(model: IncrementModel, horizon: int = SERIES_HORIZON) -> SpitzerSeries:
    """Sum the series for the zero-drift walk, extrapolating ``c k^{-1/2}`` beyond ``horizon``."""
    if model.kind == GAUSSIAN:
        return SpitzerSeries(0.0, 0.0, 0.0, 0, 0.0)
    if not model.finite_variance:
        raise ValueError("the series needs a finite-variance base law")
    m = ladder_exact.marginal_nonneg_probs(model, 0.0, horizon, tol=1e-18)
    k = np.arange(1, horizon + 1)
    d = m[1:] - 0.5
    partial = math.fsum(d / k)
    lo = horizon // 10
    kk, dd = k[lo:], d[lo:]
    c = float(np.sum(dd * kk**-0.5) / np.sum(1.0 / kk))
    resid = dd - c * kk**-0.5
    # the fit must explain the last decade (lattice parity is averaged over)
    scale = np.mean(np.abs(dd)) + 1e-300
    if horizon >= 100 and abs(np.mean(resid)) > 0.5 * scale:
        raise SeriesError(f"tail fit failed: partial sum {partial:.6g}, fit c={c:.3g}")
    rem = 2.0 * c / math.sqrt(horizon + 0.5)
    return SpitzerSeries(partial + rem, partial, rem, horizon, c)


def expectation_finite_variance(model: IncrementModel, horizon: int = SERIES_HORIZON):
    """Return ``a -> sqrt(E X^2) / (a sqrt 2) exp(series)`` and the series record."""
    series = spitzer_series(model, horizon)
    sigma = math.sqrt(model.second_moment)
    const = sigma / math.sqrt(2) * series.constant

    def predict(a):
        if not a > 0:
            raise ValueError("a must be positive")
        return const / a

    predict.constant = const
    predict.series = series
    return predict


def zero_drift_tail(model: IncrementModel, n: int, horizon: int = SERIES_HORIZON) -> float:
    """``P(tau^(0) > n) ~ exp(series) / sqrt(pi n)`` for finite variance."""
    series = spitzer_series(model, horizon)
    return series.constant / math.sqrt(math.pi * n)


class WaldRecord(NamedTuple):
    es_tau: float
    p_ascending_infinite: float


def wald_and_ascending(model: IncrementModel, a: float, etau: float) -> WaldRecord:
    """``E S_tau = -a E tau`` and ``P(tau_+ = inf) = 1 / E tau``."""
    if not etau >= 1:
        raise ValueError("E tau must be finite and >= 1")
    return WaldRecord(-a * etau, 1.0 / etau)


def dp_tau_moment(model: IncrementModel, a: float, r: float, horizon: int = 100_000, *,
                  table=None) -> tuple[float, float]:
    """``E tau^r = sum_j ((j+1)^r - j^r) P(tau > j)`` from an exact table.

    Returns ``(value, remainder)``; pass ``table`` to reuse a survival table.  Beyond the horizon the tail is extended
    as ``P(tau > j) ~ p_N (j/N)^-rho`` at zero drift (``r < rho`` needed) and
    geometrically with the last-decade rate otherwise.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    if table is None:
        table = ladder_exact.survival_dp(model, a, horizon)
    p = np.asarray(table.probs, dtype=float)
    horizon = len(p) - 1
    j = np.arange(horizon, dtype=float)
    w = (j + 1) ** r - j**r
    body = math.fsum(w * p[:-1])
    N, pN = horizon, float(p[-1])
    if a == 0:
        rho = 0.5
        if r >= rho:
            raise ValueError("E tau^r diverges at zero drift for r >= rho")
        rem = r * pN * N**r / (rho - r)
    else:
        lag = max(1, N // 10)
        q = (pN / p[N - lag]) ** (1.0 / lag) if p[N - lag] > 0 else 0.0
        rem = pN * r * N ** (r - 1) * q / (1 - q) if q < 1 else math.inf
    return body + rem, rem
