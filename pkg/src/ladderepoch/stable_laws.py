"""Strictly stable laws with characteristic function

    E exp(itY) = exp(-lam |t|^alpha (1 - i beta sign(t) tan(pi alpha / 2))),

``lam = scale**alpha``.  alpha = 2 is the normal law with variance ``2 lam``.
Densities and tails come from real Fourier quadrature on composite
Gauss-Legendre panels (node counts depend only on the arguments), switching to
the large-|x| asymptotic series where it is accurate to roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ._quadrature import graded_breaks, panel_rule, uniform_breaks

ASYMPTOTIC_FROM = 12.0  # in units of (lam |1 - i zeta|)**(1/alpha)
_DECAY = 40.0  # integrate while exp(-lam t^alpha) > e^-40
_ORDER = 16


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class StableParams:
    alpha: float
    beta: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not (1 < self.alpha <= 2):
            raise ValueError(f"alpha must lie in (1, 2], got {self.alpha}")
        if not (-1 <= self.beta <= 1):
            raise ValueError(f"beta must lie in [-1, 1], got {self.beta}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.alpha == 2:
            object.__setattr__(self, "beta", 0.0)

    @property
    def rho(self) -> float:
        return positivity_rho(self.alpha, self.beta)

    @property
    def zeta(self) -> float:
        if self.alpha == 2:
            return 0.0
        return self.beta * math.tan(math.pi * self.alpha / 2)

    @property
    def lam(self) -> float:
        return self.scale**self.alpha


def positivity_rho(alpha: float, beta: float) -> float:
    """rho = P(Y >= 0) = 1/2 + arctan(beta tan(pi alpha/2)) / (pi alpha)."""
    StableParams(alpha, beta)
    if alpha == 2:
        return 0.5
    return 0.5 + math.atan(beta * math.tan(math.pi * alpha / 2)) / (math.pi * alpha)


def limit_scale(alpha: float) -> float:
    """Scale of the limit of S_n / c_n when c_n is built from V(u).

    Equals 1/sqrt(2) at alpha = 2 (the standard normal limit).
    """
    if alpha == 2:
        return math.sqrt(0.5)
    v = special.gamma(3 - alpha) * math.cos(math.pi * alpha / 2) / (alpha * (1 - alpha))
    return v ** (1 / alpha)


def limit_params(alpha: float, beta: float = 0.0) -> StableParams:
    """Law of lim S_n / c_n for X in the domain of attraction D(alpha, beta)."""
    return StableParams(alpha, beta, limit_scale(alpha))


# -- kernels on the unit-lam scale --------------------------------------------


def _freq_nodes(alpha, zeta, lam, xmax):
    tmax = (_DECAY / lam) ** (1 / alpha)
    freq = xmax + abs(zeta) * lam * alpha * tmax ** (alpha - 1) + 1.0
    width = 0.5 * math.pi / freq
    head = min(tmax, 4 * width)
    breaks = np.concatenate((graded_breaks(0.0, head, levels=40)[:-1],
                             uniform_breaks(head, tmax, width)))
    return panel_rule(breaks, _ORDER)


def _series_terms(alpha, c, x, nmax=80):
    """Terms of the large-x expansion; returns arrays (density, tail)."""
    x = np.asarray(x, dtype=float)
    dens = np.zeros_like(x)
    tail = np.zeros_like(x)
    lx = np.log(x)
    prev = np.full_like(x, np.inf)
    active = np.ones_like(x, dtype=bool)
    for n in range(1, nmax + 1):
        phase = (-c) ** n * np.exp(-0.5j * math.pi * (n * alpha + 1))
        if abs(phase) == 0:
            continue
        la = special.gammaln(n * alpha) - special.gammaln(n + 1) - n * alpha * lx
        t_term = phase.real * np.exp(la) / math.pi
        d_term = t_term * n * alpha / x
        mag = np.abs(phase) * np.exp(la)
        active &= mag < prev  # stop once terms start growing
        tail += np.where(active, t_term, 0.0)
        dens += np.where(active, d_term, 0.0)
        prev = np.where(active, mag, prev)
        if not np.any(active & (mag > 1e-18 * np.maximum(np.abs(tail), 1e-300))):
            break
    return dens, tail


def _series_cut(alpha, zeta, lam):
    return ASYMPTOTIC_FROM * (lam * math.hypot(1.0, zeta)) ** (1 / alpha)


def _density_core(x, alpha, zeta, lam):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if alpha == 2:
        return np.exp(-x**2 / (4 * lam)) / math.sqrt(4 * math.pi * lam)
    out = np.empty_like(x)
    cut = _series_cut(alpha, zeta, lam)
    far = np.abs(x) >= cut
    if np.any(far):
        xf = x[far]
        pos = xf > 0
        res = np.empty_like(xf)
        if np.any(pos):
            res[pos] = _series_terms(alpha, lam * (1 - 1j * zeta), xf[pos])[0]
        if np.any(~pos):
            res[~pos] = _series_terms(alpha, lam * (1 + 1j * zeta), -xf[~pos])[0]
        out[far] = res
    near = ~far
    if np.any(near):
        xn = x[near]
        t, w = _freq_nodes(alpha, zeta, lam, float(np.max(np.abs(xn))))
        ta = t**alpha
        base = np.exp(-lam * ta)
        ph = lam * zeta * ta
        vals = (base * np.cos(ph[None, :] - np.outer(xn, t))) @ w / math.pi
        out[near] = vals
    return np.maximum(out, 0.0)


def _tail_core(x, alpha, zeta, lam):
    """P(Y > x) by Gil-Pelaez inversion / asymptotic series."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if alpha == 2:
        return special.ndtr(-x / math.sqrt(2 * lam))
    out = np.empty_like(x)
    cut = _series_cut(alpha, zeta, lam)
    far = np.abs(x) >= cut
    if np.any(far):
        xf = x[far]
        pos = xf > 0
        res = np.empty_like(xf)
        if np.any(pos):
            res[pos] = _series_terms(alpha, lam * (1 - 1j * zeta), xf[pos])[1]
        if np.any(~pos):
            res[~pos] = 1.0 - _series_terms(alpha, lam * (1 + 1j * zeta), -xf[~pos])[1]
        out[far] = res
    near = ~far
    if np.any(near):
        xn = x[near]
        t, w = _freq_nodes(alpha, zeta, lam, float(np.max(np.abs(xn))))
        ta = t**alpha
        base = np.exp(-lam * ta) / t
        ph = lam * zeta * ta
        vals = (base * np.sin(ph[None, :] - np.outer(xn, t))) @ w
        out[near] = 0.5 + vals / math.pi
    return np.clip(out, 0.0, 1.0)


def _scalarize(res, x):
    return float(res[0]) if np.ndim(x) == 0 else res


def stable_density(params: StableParams, x):
    """Density of Y(1) at ``x`` (scalar or array)."""
    res = _density_core(x, params.alpha, params.zeta, params.lam)
    if not np.all(np.isfinite(res)):
        raise QuadratureError(f"non-finite density for {params} at {x}")
    return _scalarize(res, x)


def stable_tail(params: StableParams, x, time: float = 1.0):
    """P(Y(time) > x), computed from the characteristic function of Y(time)."""
    if not time > 0:
        raise ValueError("time must be positive")
    res = _tail_core(x, params.alpha, params.zeta, params.lam * time)
    if not np.all(np.isfinite(res)):
        raise QuadratureError(f"non-finite tail for {params} at {x}")
    return _scalarize(res, x)


def tail_constant(params: StableParams) -> float:
    """K with P(Y > x) ~ K x^-alpha as x -> infinity (0 for the normal law)."""
    if params.alpha == 2:
        return 0.0
    a = params.alpha
    return params.lam * special.gamma(a) * math.sin(math.pi * a / 2) * (1 + params.beta) / math.pi


def sample_stable(params: StableParams, rng: np.random.Generator, size=None):
    """Chambers-Mallows-Stuck draws matched to the characteristic function above."""
    a = params.alpha
    v = math.pi * (rng.random(size) - 0.5)
    w = rng.standard_exponential(size)
    if a == 2:
        return params.scale * 2.0 * np.sin(v) * np.sqrt(w)
    zeta = params.zeta
    b = math.atan(zeta) / a
    s = (1 + zeta**2) ** (1 / (2 * a))
    x = (s * np.sin(a * (v + b)) / np.cos(v) ** (1 / a)
         * (np.cos(v - a * (v + b)) / w) ** ((1 - a) / a))
    return params.scale * x
