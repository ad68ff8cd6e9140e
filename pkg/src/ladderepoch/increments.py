"""Zero-mean increment laws X and the drifted family X - a.

Lattice laws carry their support as integer multiples of a span ``h``.
Shifting by a drift that is a rational multiple of ``h`` keeps the walk on a
refined lattice, which is what the exact routes in :mod:`ladder_exact` need.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import optimize, special

LATTICE = "lattice"
GAUSSIAN = "gaussian"
PARETO = "pareto"
BIASED = "biased"
KINDS = (LATTICE, GAUSSIAN, PARETO, BIASED)

MAX_DENOMINATOR = 10_000


class ModelError(ValueError):
    """Raised for malformed or unsupported increment models."""


class LatticeStep(NamedTuple):
    """Step law of the drifted walk on the integer grid ``offsets * span``."""

    offsets: np.ndarray
    probs: np.ndarray
    span: float
    exact_probs: tuple | None = None


@dataclass(frozen=True, eq=False)
class IncrementModel:
    """A zero-mean base law X together with the drift ``a``.

    For ``kind == "biased"`` the drifted law is not ``X - a`` but the
    +-1 walk with ``P(+1) = (1 - a)/2``; the base law is the symmetric
    +-1 walk.
    """

    kind: str
    support: np.ndarray | None = None
    probs: np.ndarray | None = None
    span: float = 1.0
    tail_exponent: float | None = None
    drift: float = 0.0
    exact_probs: tuple | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown model kind {self.kind!r}")
        if not (math.isfinite(self.drift) and self.drift >= 0):
            raise ModelError("drift must be a finite nonnegative number")
        if self.kind == BIASED and self.drift >= 1:
            raise ModelError("biased walk needs drift < 1")
        if self.kind == GAUSSIAN:
            return
        if self.support is None or self.probs is None:
            raise ModelError("lattice models need support and probs")
        support = np.asarray(self.support, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=float)
        if support.shape != probs.shape or support.ndim != 1:
            raise ModelError("support and probs must be 1-d arrays of equal length")
        if np.any(probs < 0):
            raise ModelError("negative probability")
        if np.any(np.diff(support) <= 0):
            raise ModelError("support must be strictly increasing")
        if not self.span > 0:
            raise ModelError("span must be positive")
        total = math.fsum(probs)
        if abs(total - 1.0) > 1e-12:
            raise ModelError(f"probabilities sum to {total!r}, not 1")
        mean = math.fsum(support * probs) * self.span
        if abs(mean) > 1e-12 * max(1.0, self.span):
            raise ModelError(f"base law must have zero mean, got {mean!r}")
        if self.kind == PARETO and not (self.tail_exponent and self.tail_exponent > 1):
            raise ModelError("pareto models need a tail exponent > 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    # -- descriptive properties -------------------------------------------------

    @property
    def is_lattice(self) -> bool:
        return self.kind != GAUSSIAN

    @property
    def stable_alpha(self) -> float:
        if self.kind == PARETO and self.tail_exponent < 2:
            return float(self.tail_exponent)
        return 2.0

    @property
    def stable_beta(self) -> float:
        # one-sided heavy right tail
        return 1.0 if self.stable_alpha < 2 else 0.0

    @property
    def satisfies_cramer(self) -> bool:
        return self.kind != PARETO

    @property
    def finite_variance(self) -> bool:
        return self.kind != PARETO or self.tail_exponent > 2

    def with_drift(self, a: float) -> IncrementModel:
        return IncrementModel(
            kind=self.kind, support=self.support, probs=self.probs,
            span=self.span, tail_exponent=self.tail_exponent, drift=float(a),
            exact_probs=self.exact_probs, params=self.params,
        )

    @cached_property
    def values(self) -> np.ndarray:
        return self.support * self.span

    @cached_property
    def second_moment(self) -> float:
        if self.kind == GAUSSIAN:
            return 1.0
        return math.fsum(self.values**2 * self.probs)

    @cached_property
    def _magnitudes(self):
        # sorted positive magnitudes and V on [s_i, s_{i+1})
        mags = np.abs(self.values)
        keep = mags > 0
        order = np.argsort(mags[keep], kind="stable")
        m = mags[keep][order]
        w = (self.values[keep] ** 2 * self.probs[keep])[order]
        uniq, start = np.unique(m, return_index=True)
        sums = np.add.reduceat(w, start)
        return uniq, np.cumsum(sums)

    @cached_property
    def _gauss_peak(self) -> float:
        res = optimize.minimize_scalar(
            lambda u: -_gauss_V(u) / u**2, bounds=(1e-3, 5.0), method="bounded",
            options={"xatol": 1e-12},
        )
        return float(res.x)

    def describe(self) -> str:
        if self.kind == GAUSSIAN:
            return "gaussian"
        if self.kind == BIASED:
            return "biased+-1"
        if self.kind == PARETO:
            return f"pareto(t={self.tail_exponent:g},h={self.span:g})"
        return f"lattice(h={self.span:g},n={len(self.support)})"

    # -- serialisation -----------------------------------------------------------

    def to_spec(self) -> dict:
        spec = {"kind": self.kind, "drift": repr(self.drift)}
        if self.kind == GAUSSIAN or self.kind == BIASED:
            return spec
        if self.kind == PARETO:
            spec.update({k: self.params[k] for k in sorted(self.params)})
            spec["tail_exponent"] = self.tail_exponent
            return spec
        if self.params.get("generator") == "discretized_gaussian":
            spec.update({k: self.params[k] for k in sorted(self.params)})
            return spec
        spec["span"] = repr(self.span)
        probs = self.exact_probs or self.probs
        spec["mass"] = {str(int(k)): str(p) for k, p in zip(self.support, probs)}
        return spec

    @property
    def hash(self) -> str:
        blob = json.dumps(self.to_spec(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


# -- constructors ----------------------------------------------------------------


def lattice_model(mass: dict, span=1.0, drift=0.0) -> IncrementModel:
    """Lattice law from ``{k: P(X = k * span)}``.

    Probabilities may be given as decimal strings or Fractions, in which case
    an exact copy is kept for the rational DP mode.
    """
    items = sorted((int(k), v) for k, v in mass.items())
    exact = []
    for _, v in items:
        if isinstance(v, str):
            exact.append(Fraction(v.strip()))
        elif isinstance(v, Decimal):
            exact.append(Fraction(v))
        elif isinstance(v, (Fraction, int)):
            exact.append(Fraction(v))
        else:
            exact = None
            break
    support = np.array([k for k, _ in items], dtype=np.int64)
    probs = np.array([float(Fraction(v.strip())) if isinstance(v, str) else float(v) for _, v in items])
    if exact is not None:
        if sum(exact) != 1:
            raise ModelError("exact probabilities do not sum to 1")
        if sum(k * p for k, p in zip(support.tolist(), exact)) != 0:
            raise ModelError("exact base law does not have zero mean")
        exact = tuple(exact)
    return IncrementModel(LATTICE, support, probs, span=float(span), drift=float(drift),
                          exact_probs=exact)


def symmetric_pm1(drift=0.0) -> IncrementModel:
    return lattice_model({-1: "0.5", 1: "0.5"}, drift=drift)


def biased_pm1(drift) -> IncrementModel:
    """+-1 walk with ``P(+1) = (1 - a)/2``; mean ``-a``, variance ``1 - a^2``."""
    return IncrementModel(BIASED, np.array([-1, 1]), np.array([0.5, 0.5]), drift=float(drift),
                          exact_probs=(Fraction(1, 2), Fraction(1, 2)))


def gaussian_unit(drift=0.0) -> IncrementModel:
    return IncrementModel(GAUSSIAN, drift=float(drift))


def discretized_gaussian(span=0.01, width=9.0, drift=0.0) -> IncrementModel:
    """Standard normal rounded to the nearest multiple of ``span``."""
    kmax = int(math.ceil(width / span))
    k = np.arange(-kmax, kmax + 1)
    edges = (np.arange(-kmax, kmax + 2) - 0.5) * span
    cdf = special.ndtr(edges[: kmax + 2])
    half = np.diff(cdf)
    probs = np.concatenate((half, half[-2::-1]))
    probs[kmax] = 1.0 - 2.0 * math.fsum(half[:-1])
    probs /= math.fsum(probs)
    m = IncrementModel(LATTICE, k, probs, span=float(span), drift=float(drift),
                       params={"generator": "discretized_gaussian", "span": span, "width": width})
    return m


def pareto_tail(tail_exponent, scale=0.1, span=1.0, max_index=1_000_000, drift=0.0) -> IncrementModel:
    """Lattice law with ``P(X >= k h) = scale * (k h)^-t`` for ``1 <= k <= max_index``.

    The right tail is cut at ``max_index * span``; the left tail is a single
    atom at ``-span`` sized to make the mean zero, the remainder sits at 0.
    """
    t = float(tail_exponent)
    if t <= 1:
        raise ModelError("tail exponent must exceed 1 for a finite mean")
    k = np.arange(1, max_index + 1, dtype=np.int64)
    surv = scale * (k * span) ** -t
    if surv[0] > 1:
        raise ModelError("scale too large for the span")
    right = surv - np.append(surv[1:], 0.0)
    left = math.fsum(k * right)
    zero = 1.0 - math.fsum(right) - left
    if zero < 0:
        raise ModelError("scale too large: no mass left for the atom at 0")
    support = np.concatenate(([-1, 0], k))
    probs = np.concatenate(([left, zero], right))
    # absorb rounding so the mean is zero to machine precision
    probs[0] = math.fsum(k * right)
    probs[1] = 1.0 - math.fsum(probs[2:]) - probs[0]
    return IncrementModel(PARETO, support, probs, span=float(span), tail_exponent=t,
                          drift=float(drift),
                          params={"scale": scale, "span": span, "max_index": int(max_index)})


def model_from_spec(spec: dict) -> IncrementModel:
    """Build a model from its JSON description (see :meth:`IncrementModel.to_spec`)."""
    kind = spec.get("kind")
    drift = float(Decimal(str(spec.get("drift", 0))))
    if kind == GAUSSIAN:
        return gaussian_unit(drift)
    if kind == BIASED:
        return biased_pm1(drift)
    if kind == PARETO:
        return pareto_tail(float(spec["tail_exponent"]), scale=float(spec.get("scale", 0.1)),
                           span=float(spec.get("span", 1.0)),
                           max_index=int(spec.get("max_index", 1_000_000)), drift=drift)
    if kind == LATTICE:
        if spec.get("generator") == "discretized_gaussian":
            return discretized_gaussian(float(spec["span"]), float(spec.get("width", 9.0)), drift)
        if "mass" not in spec:
            raise ModelError("lattice spec needs a mass table")
        return lattice_model(spec["mass"], span=float(Decimal(str(spec.get("span", 1)))), drift=drift)
    raise ModelError(f"unknown model kind {kind!r}")


# -- distribution-level quantities ------------------------------------------------


def _gauss_V(u):
    # E[X^2; |X| <= u] for a standard normal equals P(chi2_3 <= u^2)
    return special.gammainc(1.5, 0.5 * np.square(u))


def truncated_second_moment(model: IncrementModel, u: float) -> float:
    """V(u) = E[X^2; |X| <= u] of the zero-mean base law."""
    if not math.isfinite(u):
        raise ValueError("u must be finite")
    if u <= 0:
        return 0.0
    if model.kind == GAUSSIAN:
        return float(_gauss_V(u))
    mags, cum = model._magnitudes
    i = np.searchsorted(mags, u, side="right")
    return float(cum[i - 1]) if i > 0 else 0.0


def norming_c(model: IncrementModel, n: int) -> float:
    """Norming constant ``c_n = inf{u >= u_min : V(u) / u^2 <= 1/n}``.

    ``u_min`` is the smallest support magnitude for lattice laws and the
    maximiser of ``V(u)/u^2`` for the Gaussian; below it the ratio is
    degenerate and the literal infimum would be 0.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if model.kind == GAUSSIAN:
        peak = model._gauss_peak
        f = lambda u: _gauss_V(u) / u**2 - 1.0 / n
        if f(peak) <= 0:
            return peak
        hi = max(2.0 * math.sqrt(n), 2 * peak)
        return optimize.brentq(f, peak, hi, xtol=1e-14, rtol=1e-15)
    mags, cum = model._magnitudes
    if len(mags) == 0:
        raise ModelError("degenerate model: V vanishes identically")
    cand = np.maximum(mags, np.sqrt(n * cum))
    upper = np.append(mags[1:], np.inf)
    ok = np.flatnonzero(cand < upper)
    return float(cand[ok[0]])


def n_for_u(model: IncrementModel, a: float, u: float, strict: bool = False) -> int:
    """Smallest ``n`` with ``a n / c_n >= u`` (``> u`` if ``strict``)."""
    if not a > 0:
        raise ValueError("a must be positive")
    if u < 0:
        raise ValueError("u must be nonnegative")
    hit = (lambda n: a * n > u * norming_c(model, n)) if strict else \
        (lambda n: a * n >= u * norming_c(model, n))
    hi = 1
    while not hit(hi):
        hi *= 2
    if hi == 1:
        return 1
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if hit(mid):
            hi = mid
        else:
            lo = mid
    return hi


def boundary_n_a(model: IncrementModel, a: float) -> int:
    """Smallest ``n`` with ``a * n > c_n``."""
    return n_for_u(model, a, 1.0, strict=True)


def upper_tail(model: IncrementModel, x: float) -> float:
    """P(X >= x) for the base law."""
    if model.kind == GAUSSIAN:
        return float(special.ndtr(-x))
    # tolerate roundoff in x = n * a landing on a lattice point
    mask = model.values >= x - 1e-9 * model.span
    return math.fsum(model.probs[mask])


def drifted_lattice(model: IncrementModel, a: float | None = None,
                    max_denominator: int = MAX_DENOMINATOR) -> LatticeStep:
    """Step law of ``X^(a)`` on an integer grid (refined when ``a/h`` is rational)."""
    if not model.is_lattice:
        raise ModelError("exact lattice routes need a lattice model")
    a = model.drift if a is None else float(a)
    if model.kind == BIASED:
        fa = Fraction(a).limit_denominator(max_denominator)
        if abs(float(fa) - a) > 1e-12:
            fa = None
        probs = np.array([(1 + a) / 2, (1 - a) / 2])
        exact = None if fa is None else ((1 + fa) / 2, (1 - fa) / 2)
        return LatticeStep(np.array([-1, 1], dtype=np.int64), probs, 1.0, exact)
    ratio = Fraction(a / model.span).limit_denominator(max_denominator)
    if abs(float(ratio) * model.span - a) > 1e-12 * max(1.0, a):
        raise ModelError(
            f"drift {a!r} is not a rational multiple of the span {model.span!r} "
            f"with denominator <= {max_denominator}")
    q, p = ratio.denominator, ratio.numerator
    offsets = model.support * q - p
    return LatticeStep(offsets, model.probs, model.span / q, model.exact_probs)


def drifted_support(model: IncrementModel, a: float | None = None):
    """Atoms and probabilities ``(x, p)`` of ``X^(a)`` for discrete models."""
    a = model.drift if a is None else float(a)
    if model.kind == GAUSSIAN:
        raise ModelError("continuous model has no atoms")
    if model.kind == BIASED:
        return np.array([-1.0, 1.0]), np.array([(1 + a) / 2, (1 - a) / 2])
    return model.values - a, model.probs


def cumulant(model: IncrementModel, k: int, a: float | None = None) -> float:
    """k-th cumulant of the drifted law ``X^(a)``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    a = model.drift if a is None else float(a)
    if model.kind == PARETO and k >= model.tail_exponent:
        raise ValueError(f"moment does not exist: order {k} >= tail exponent {model.tail_exponent}")
    if model.kind == GAUSSIAN:
        return {1: -a, 2: 1.0}.get(k, 0.0)
    x, p = drifted_support(model, a)
    mean = math.fsum(x * p)
    if k == 1:
        return mean
    c = x - mean
    mu = [1.0, 0.0] + [math.fsum(c**j * p) for j in range(2, k + 1)]
    kap = [0.0] * (k + 1)
    for m in range(2, k + 1):
        kap[m] = mu[m] - sum(math.comb(m - 1, j - 1) * kap[j] * mu[m - j] for j in range(2, m - 1))
    return kap[k]


def log_mgf(model: IncrementModel, h, a: float | None = None):
    """log E exp(h X^(a)); raises for laws without exponential moments."""
    a = model.drift if a is None else float(a)
    h = np.asarray(h, dtype=float)
    if model.kind == GAUSSIAN:
        return 0.5 * h**2 - h * a
    if model.kind == PARETO:
        raise ModelError("heavy-tailed model: no exponential moments (Cramer condition fails)")
    x, p = drifted_support(model, a)
    return special.logsumexp(np.multiply.outer(h, x), b=p, axis=-1)


def sample_steps(model: IncrementModel, rng: np.random.Generator, size, a: float | None = None):
    """Draw increments of the drifted law."""
    a = model.drift if a is None else float(a)
    if model.kind == GAUSSIAN:
        return rng.standard_normal(size) - a
    if model.kind == BIASED:
        up = rng.random(size) < (1 - a) / 2
        return np.where(up, 1.0, -1.0)
    cdf = np.cumsum(model.probs)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    return model.values[np.minimum(idx, len(cdf) - 1)] - a
