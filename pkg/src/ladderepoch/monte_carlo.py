"""Monte Carlo estimates of ``P(tau > n)`` and ``E tau^r``.

Paths are grouped in fixed blocks of ``BLOCK`` paths.  Block ``b`` draws from a
Philox stream keyed by ``(seed, b)``, so the estimate does not depend on how
blocks are distributed over threads.  Block sums are reduced in block order
with ``math.fsum``.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import large_dev
from .increments import GAUSSIAN, PARETO, IncrementModel, ModelError, drifted_lattice, drifted_support

BLOCK = 8192
THREADS_ENV = "LADDEREPOCH_THREADS"
CENSOR_WARN = 0.01


@dataclass
class MCEstimate:
    value: float
    stderr: float
    paths: int
    seed: int
    cap: int | None = None
    tilt: float = 0.0
    censored: float = 0.0  # fraction of paths still alive at the cap
    bias_bound: float = 0.0  # estimated censoring bias (moments only)
    notes: list = field(default_factory=list)

    def ci(self, z: float = 1.959963984540054) -> tuple[float, float]:
        return self.value - z * self.stderr, self.value + z * self.stderr

    def to_dict(self) -> dict:
        return asdict(self)


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-based stream for one block of paths."""
    if seed < 0 or block < 0:
        raise ValueError("seed and block must be non-negative")
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), block]))


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return 1


class _Sampler:
    """Draws steps of ``X^(a)``, possibly under an exponential tilt ``h``.

    Discrete models run on the integer grid of ``drifted_lattice`` so that the
    test ``S_k >= 0`` is exact.
    """

    def __init__(self, model: IncrementModel, a: float, h: float = 0.0):
        self.model, self.a, self.h = model, a, h
        self.unit = None
        self.gaussian = model.kind == GAUSSIAN
        if self.gaussian:
            self.shift = h - a
            self.log_m = 0.5 * h * h - h * a
            return
        x, p = drifted_support(model, a)
        try:
            step = drifted_lattice(model, a)
            self.atoms = np.asarray(step.offsets, dtype=np.int64)
            self.unit = step.span
        except ModelError:
            self.atoms = x
        if h:
            lw = h * x
            w = p * np.exp(lw - lw.max())
            self.log_m = float(np.log(np.sum(p * np.exp(lw - lw.max()))) + lw.max())
            p = w / w.sum()
        else:
            self.log_m = 0.0
        cdf = np.cumsum(p)
        self.cdf = cdf / cdf[-1]

    def draw(self, rng, size):
        if self.gaussian:
            return rng.standard_normal(size) + self.shift
        idx = np.searchsorted(self.cdf, rng.random(size), side="right")
        return self.atoms[np.minimum(idx, len(self.cdf) - 1)]

    def zero(self, size):
        return np.zeros(size, dtype=self.atoms.dtype) if not self.gaussian else np.zeros(size)

    def real(self, s):
        return s * self.unit if self.unit is not None else s


def _simulate_block(sampler: _Sampler, rng, size: int, n: int):
    """Run ``size`` paths for at most ``n`` steps.

    Returns ``(tau, s_n)`` with ``tau = n + 1`` for paths alive after ``n``
    steps; ``s_n`` is only meaningful for those.
    """
    tau = np.full(size, n + 1, dtype=np.int64)
    s = sampler.zero(size)
    alive = np.arange(size)
    for k in range(1, n + 1):
        if len(alive) == 0:
            break
        s = s + sampler.draw(rng, len(alive))
        dead = s < 0
        if dead.any():
            tau[alive[dead]] = k
            keep = ~dead
            alive, s = alive[keep], s[keep]
    s_n = np.zeros(size)
    s_n[alive] = sampler.real(s)
    return tau, s_n


def _blocks(paths: int):
    full, rest = divmod(paths, BLOCK)
    return [BLOCK] * full + ([rest] if rest else [])


def _run(func, paths: int, threads: int | None):
    sizes = _blocks(paths)
    threads = default_threads() if threads is None else threads
    if threads <= 1 or len(sizes) == 1:
        return [func(b, sz) for b, sz in enumerate(sizes)]
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(func, range(len(sizes)), sizes))


def _mean_stderr(sums, sqsums, paths):
    s1 = math.fsum(sums)
    s2 = math.fsum(sqsums)
    mean = s1 / paths
    if paths < 2:
        return mean, 0.0
    var = max(0.0, (s2 - paths * mean * mean) / (paths - 1))
    return mean, math.sqrt(var / paths)


def estimate_tail(model: IncrementModel, a: float, n: int, paths: int, seed: int, *,
                  threads: int | None = None) -> MCEstimate:
    """Fraction of paths with ``min_{k<=n} S_k >= 0``."""
    if paths < 1:
        raise ValueError("paths must be >= 1")
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return MCEstimate(1.0, 0.0, paths, seed)
    sampler = _Sampler(model, a)

    def block(b, size):
        tau, _ = _simulate_block(sampler, block_rng(seed, b), size, n)
        hits = float(np.count_nonzero(tau > n))
        return hits, hits

    res = _run(block, paths, threads)
    value, se = _mean_stderr([r[0] for r in res], [r[1] for r in res], paths)
    return MCEstimate(value, se, paths, seed)


def _tail_index(model: IncrementModel) -> float:
    if model.kind == PARETO:
        return float(model.tail_exponent)
    return 2.0  # UpBound shape: P(tau > n) = O(V(na)/(na)^2)


def estimate_moment(model: IncrementModel, a: float, r: float, paths: int, cap: int,
                    seed: int, *, threads: int | None = None) -> MCEstimate:
    """Sample mean of ``min(tau, cap)^r``.

    The censoring bias ``E[tau^r - cap^r; tau > cap]`` is reported separately
    in ``bias_bound`` from a power tail ``P(tau > k) ~ P(tau > cap) (k/cap)^-g``
    with ``g`` the tail index (``g = 2`` for light tails, the UpBound shape).
    """
    if paths < 1:
        raise ValueError("paths must be >= 1")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    g = _tail_index(model)
    if r >= min(g, model.stable_alpha if model.kind == PARETO else math.inf):
        raise ValueError(f"E tau^{r} is infinite for this model")
    if r == 0:
        return MCEstimate(1.0, 0.0, paths, seed, cap=cap)
    sampler = _Sampler(model, a)

    def block(b, size):
        tau, _ = _simulate_block(sampler, block_rng(seed, b), size, cap)
        cens = tau > cap
        t = np.minimum(tau, cap).astype(float) ** r
        return math.fsum(t), math.fsum(t * t), float(np.count_nonzero(cens))

    res = _run(block, paths, threads)
    value, se = _mean_stderr([x[0] for x in res], [x[1] for x in res], paths)
    censored = math.fsum(x[2] for x in res) / paths
    # int_cap^inf r k^{r-1} P(tau > k) dk under the power tail
    bias = censored * cap**r * r / (g - r) if g > r else math.inf
    est = MCEstimate(value, se, paths, seed, cap=cap, censored=censored, bias_bound=bias)
    if censored > CENSOR_WARN:
        msg = f"cap {cap} too small: censored fraction {censored:.3g}"
        est.notes.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return est


def tilted_estimate_tail(model: IncrementModel, a: float, n: int, paths: int, seed: int, *,
                         threads: int | None = None) -> MCEstimate:
    """Importance sampling under the ``h0``-tilted law.

    Each surviving path carries the likelihood ratio
    ``exp(-h0 S_n + n log M(h0))`` with ``M(h) = E exp(h X^(a))``.
    """
    if paths < 1:
        raise ValueError("paths must be >= 1")
    if n == 0 or a == 0:
        est = estimate_tail(model, a, n, paths, seed, threads=threads)
        return est
    try:
        h0 = large_dev.rate_xi(model, a).h0
    except ModelError as exc:
        warnings.warn(f"tilt unavailable ({exc}); using the plain estimator", RuntimeWarning,
                      stacklevel=2)
        est = estimate_tail(model, a, n, paths, seed, threads=threads)
        est.notes.append("tilt unavailable: plain estimator")
        return est
    sampler = _Sampler(model, a, h0)

    def block(b, size):
        tau, s_n = _simulate_block(sampler, block_rng(seed, b), size, n)
        alive = tau > n
        lr = np.exp(-h0 * s_n[alive] + n * sampler.log_m)
        return math.fsum(lr), math.fsum(lr * lr)

    res = _run(block, paths, threads)
    value, se = _mean_stderr([x[0] for x in res], [x[1] for x in res], paths)
    return MCEstimate(value, se, paths, seed, tilt=h0)
