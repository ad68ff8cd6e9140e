"""Exact ladder-epoch tails for lattice walks.

Two independent routes compute ``P(tau > j)``, ``tau = min{k >= 1: S_k < 0}``:

* a survival DP that propagates the sub-probability mass of paths that have
  not yet gone negative, killing whatever steps below zero;
* the Spitzer recurrence ``n P(tau > n) = sum_j P(tau > j) P(S_{n-j} >= 0)``
  driven by the marginals ``P(S_k >= 0)``.

Brute-force path enumeration and the generating-function identity serve as
oracles for both.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import signal, special

from .increments import IncrementModel, ModelError, drifted_lattice

DP = "dp"
SPITZER = "spitzer"
BRUTEFORCE = "bruteforce"
MONTECARLO = "montecarlo"

TRIM_TOL = 1e-20
EXACT_GRID = 2**16  # runs whose grid cannot outgrow this are never trimmed
MAX_SITES = 20_000_000
DIRECT_CONV = 64  # below this many points np.convolve beats FFT
SPLIT_BODY = 256
MAX_EXACT_STEPS = 64
ENUM_GUARD = 10**8


@dataclass
class LadderTailTable:
    """``probs[j] = P(tau > j)`` for ``j = 0..n`` plus provenance."""

    probs: np.ndarray
    route: str
    model_hash: str = ""
    drift: float = 0.0
    provenance: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.probs) - 1

    def __getitem__(self, j):
        return self.probs[j]

    def to_csv(self, seed="", version="") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "prob", "route", "a", "model_hash", "seed", "code_version"])
        for j, p in enumerate(self.probs):
            w.writerow([j, repr(float(p)), self.route, repr(self.drift), self.model_hash, seed, version])
        return buf.getvalue()


def _convolve(x, pmf, body=SPLIT_BODY):
    """Linear convolution with relative accuracy on small far-tail entries.

    A plain FFT has errors of order eps * max|x| * max|pmf| everywhere, which
    swamps the tiny far sites a heavy-tailed walk survives on.  The leading
    ``body`` points of each factor are therefore convolved directly, and the
    FFT is used only for the far-mass x far-kernel block where both factors are
    small.
    """
    lx, lk = len(x), len(pmf)
    if min(lx, lk) <= DIRECT_CONV:
        return np.convolve(x, pmf)
    if lx <= body or lk <= body:
        return np.convolve(x, pmf)
    out = np.zeros(lx + lk - 1)
    xb, xf = x[:body], x[body:]
    kb, kt = pmf[:body], pmf[body:]
    out[: 2 * body - 1] += np.convolve(xb, kb)
    out[body: body + body + len(kt) - 1] += np.convolve(xb, kt)
    out[body: body + len(xf) + body - 1] += np.convolve(xf, kb)
    far = signal.fftconvolve(xf, kt)
    np.maximum(far, 0.0, out=far)
    out[2 * body:] += far
    return out


class _DensePmf:
    """Step pmf on consecutive integer offsets with tail sums for lumping."""

    def __init__(self, offsets, probs):
        keep = np.asarray(probs) > 0
        offsets = np.asarray(offsets)[keep]
        probs = np.asarray(probs, dtype=float)[keep]
        self.dmin = int(offsets.min())
        self.dmax = int(offsets.max())
        self.dense = np.zeros(self.dmax - self.dmin + 1)
        np.add.at(self.dense, offsets - self.dmin, probs)
        # upper[i] = P(offset >= dmin + i)
        self.upper = np.append(np.cumsum(self.dense[::-1])[::-1], 0.0)

    def head(self, below: int):
        """Dense pmf of offsets < ``below`` and the mass at or above it."""
        m = min(max(below - self.dmin, 0), len(self.dense))
        return self.dense[:m], float(self.upper[m])


class _Survival:
    """Mass of paths with ``S_1..S_k >= lower`` on integer sites.

    With a finite ``horizon`` every site from which the walk cannot drop below
    ``lower`` in the remaining steps is lumped into a scalar (exact).
    """

    def __init__(self, offsets, probs, lower=0, horizon=None, tol=TRIM_TOL,
                 max_sites=MAX_SITES):
        self.pmf = _DensePmf(offsets, probs)
        self.lower = lower
        self.horizon = horizon
        self.tol = tol
        self.max_sites = max_sites
        self.mass = np.ones(1)
        self.origin = 0
        self.k = 0
        self.sure = 0.0
        self.trimmed = 0.0
        self.exit_mass = 0.0
        self.exit_moment = 0.0  # sum of killed mass times site

    def survival(self) -> float:
        return float(np.sum(self.mass)) + self.sure

    def step(self) -> float:
        pmf = self.pmf
        self.k += 1
        if self.horizon is not None and pmf.dmin < 0:
            thr = self.lower - pmf.dmin * (self.horizon - self.k)
        else:
            thr = None if pmf.dmin < 0 else self.lower
        mass, origin = self.mass, self.origin
        if thr is not None:
            kern, jump_out = pmf.head(thr - origin)
            self.sure += jump_out * float(np.sum(mass))
        else:
            kern = pmf.dense
        if len(mass) + len(kern) > self.max_sites:
            raise ModelError(
                f"survival grid would exceed {self.max_sites} sites at step {self.k}; "
                "reduce the horizon or truncate the step law (e.g. a smaller max_index)")
        if len(kern) == 0 or len(mass) == 0:
            new = np.zeros(0)
        else:
            new = _convolve(mass, kern)
        origin = origin + pmf.dmin
        # kill below the barrier
        cut = self.lower - origin
        if cut > 0:
            dead = new[:cut]
            if len(dead):
                sites = origin + np.arange(len(dead))
                self.exit_mass += math.fsum(dead)
                self.exit_moment += math.fsum(dead * sites)
            new = new[cut:]
            origin = self.lower
        if thr is not None and len(new) > thr - origin:
            keep = max(thr - origin, 0)
            self.sure += math.fsum(new[keep:])
            new = new[:keep]
        if len(new):
            total = float(np.sum(new)) + self.sure
            tail = np.cumsum(new[::-1])
            drop = int(np.searchsorted(tail, self.tol * total, side="left"))
            if drop:
                self.trimmed += float(tail[drop - 1])
                new = new[: len(new) - drop]
        self.mass, self.origin = new, origin
        return self.survival()


def _step_of(model, a):
    step = drifted_lattice(model, a)
    return step


def _default_tol(step, n, tol):
    # trimmed top mass survives far better than the bulk, so trimming costs
    # relative accuracy deep in the tail; only trim when the grid could get big
    if tol is not None:
        return tol
    width = int(np.max(step.offsets) - np.min(step.offsets))
    return 0.0 if width * n <= EXACT_GRID else TRIM_TOL


def survival_dp(model: IncrementModel, a: float | None, n: int, *, tol: float | None = None,
                max_sites: int = MAX_SITES, exact: bool = False) -> LadderTailTable:
    """``P(tau > j)``, ``j = 0..n``, by killing mass that steps below zero.

    Parameters
    ----------
    model : lattice increment model
    a : drift (``None`` uses ``model.drift``)
    n : horizon
    tol : top-tail trimming threshold relative to the surviving mass; the
        default trims only when the grid could exceed ``EXACT_GRID`` sites
    exact : use rational arithmetic (small supports, ``n <= 64``)
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    a = model.drift if a is None else float(a)
    step = _step_of(model, a)
    if exact:
        probs = _survival_exact(step, n, lower=0)
        return LadderTailTable(np.array([float(p) for p in probs]), DP, model.hash, a,
                               {"exact": True, "fractions": probs})
    tol = _default_tol(step, n, tol)
    dp = _Survival(step.offsets, step.probs, horizon=n, tol=tol, max_sites=max_sites)
    out = np.empty(n + 1)
    out[0] = 1.0
    for j in range(1, n + 1):
        out[j] = dp.step()
    prov = {"trimmed_mass": dp.trimmed, "tol": tol, "span": step.span,
            "exit_mass": dp.exit_mass, "exit_mean": dp.exit_moment * step.span}
    return LadderTailTable(out, DP, model.hash, a, prov)


def ascending_survival_dp(model: IncrementModel, a: float | None, n: int,
                          tol: float | None = None) -> LadderTailTable:
    """``P(tau_+ > j)`` for the weak ascending epoch ``tau_+ = min{k: S_k >= 0}``.

    Survival means ``S_1..S_j < 0``, i.e. the mirrored walk stays ``>= 1``.
    """
    a = model.drift if a is None else float(a)
    step = _step_of(model, a)
    dp = _Survival(-step.offsets, step.probs, lower=1, horizon=n, tol=_default_tol(step, n, tol))
    out = np.empty(n + 1)
    out[0] = 1.0
    for j in range(1, n + 1):
        out[j] = dp.step()
    return LadderTailTable(out, "dp-ascending", model.hash, a, {"trimmed_mass": dp.trimmed})


def _survival_exact(step, n, lower=0):
    if n > MAX_EXACT_STEPS:
        raise ValueError(f"exact mode is limited to n <= {MAX_EXACT_STEPS}")
    if step.exact_probs is None:
        raise ModelError("exact mode needs rational step probabilities")
    law = [(int(d), p) for d, p in zip(step.offsets, step.exact_probs) if p]
    state = {0: Fraction(1)}
    out = [Fraction(1)]
    for _ in range(n):
        nxt: dict = {}
        for y, m in state.items():
            for d, p in law:
                z = y + d
                if z >= lower:
                    nxt[z] = nxt.get(z, 0) + m * p
        state = nxt
        out.append(sum(state.values(), Fraction(0)))
    return out


def expected_tau(model: IncrementModel, a: float | None = None, *, rel_tol: float = 1e-9,
                 horizon: int = 8192, n_max: int = 2**21, tail: str = "auto",
                 table: LadderTailTable | None = None) -> dict:
    """``E tau = sum_j P(tau > j)`` from the survival DP, remainder extrapolated.

    ``tail="geometric"`` (light tails) steps an open-ended DP until the
    geometric remainder estimate drops below ``rel_tol`` of the partial sum.
    ``tail="power"`` (``P(tau > n)`` regularly varying with index ``-t``) sums a
    fixed-horizon table and adds ``P(tau > N) sum_{j>=N} (j/N)^-t``; pass ``table`` to
    reuse one already computed.
    """
    a = model.drift if a is None else float(a)
    if not a > 0:
        raise ValueError("E tau is infinite at zero drift")
    if tail == "auto":
        tail = "power" if not model.satisfies_cramer else "geometric"
    if tail == "power":
        if table is None:
            table = survival_dp(model, a, horizon)
        p = table.probs
        n = table.n
        head = math.fsum(p[:-1])
        # P(tau > j) ~ P(tau > n) (j / n)^-t for j >= n
        t = model.tail_exponent
        rem = float(p[-1] * n**t * special.zeta(t, n))
        prov = table.provenance
        return {"etau": head + rem, "remainder": rem, "horizon": n, "tail_model": tail,
                "es_tau_dp": prov.get("exit_mean"), "exit_mass": prov.get("exit_mass"),
                "survival_at_horizon": float(p[-1])}
    step = _step_of(model, a)
    dp = _Survival(step.offsets, step.probs)
    hist = [1.0]
    block = 256
    rem = math.inf
    while len(hist) <= n_max:
        for _ in range(block):
            hist.append(dp.step())
        n = len(hist) - 1
        # decay rate over a long lag (lattice walks can be periodic)
        lag = max(2, n // 16)
        last, prev = hist[-1], hist[-1 - lag]
        r = (last / prev) ** (1 / lag) if prev > 0 else 0.0
        rem = last / (1 - r) if r < 1 else math.inf
        head = math.fsum(hist[:-1])
        if rem <= rel_tol * head:
            break
        block = min(4096, max(256, n // 4))
    else:
        raise RuntimeError(f"E tau did not converge within {n_max} steps (remainder {rem:.3g})")
    return {"etau": head + rem, "remainder": rem, "horizon": n, "tail_model": tail,
            "es_tau_dp": dp.exit_moment * step.span, "exit_mass": dp.exit_mass,
            "survival_at_horizon": last}


# -- marginals and the Spitzer route ------------------------------------------------


def marginal_nonneg_probs(model: IncrementModel, a: float | None, n: int, *,
                          tol: float = 0.0, max_sites: int = MAX_SITES) -> np.ndarray:
    """``m[k] = P(S_k >= 0)`` for ``k = 0..n`` (``m[0] = 1``).

    Mass that can no longer change sign before step ``n`` is lumped exactly.
    A positive ``tol`` also trims far tails of absolute mass below ``tol``;
    the default keeps everything, since the recurrence turns absolute errors
    in ``m`` into absolute errors in tiny survival probabilities.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    a = model.drift if a is None else float(a)
    step = _step_of(model, a)
    pmf = _DensePmf(step.offsets, step.probs)
    out = np.empty(n + 1)
    out[0] = 1.0
    mass, origin = np.ones(1), 0
    above = 0.0  # lumped mass that stays >= 0 through step n
    for k in range(1, n + 1):
        if not len(mass):
            out[k:] = min(1.0, above)
            break
        if len(mass) + len(pmf.dense) > max_sites:
            raise ModelError(f"marginal grid would exceed {max_sites} sites at step {k}")
        mass = _convolve(mass, pmf.dense)
        origin += pmf.dmin
        rem = n - k
        hi = -min(pmf.dmin, 0) * rem  # sites >= hi stay >= 0
        lo = -max(pmf.dmax, 0) * rem - 1  # sites <= lo stay < 0
        i_hi = hi - origin
        if 0 <= i_hi < len(mass):
            above += math.fsum(mass[i_hi:])
            mass = mass[:i_hi]
        i_lo = lo - origin
        if i_lo >= 0:
            mass = mass[i_lo + 1:]
            origin = lo + 1
        if len(mass):
            c = np.cumsum(mass)
            d0 = int(np.searchsorted(c, tol, side="right"))
            if d0:
                mass, origin = mass[d0:], origin + d0
            c = np.cumsum(mass[::-1])
            d1 = int(np.searchsorted(c, tol, side="right"))
            if d1:
                above += float(c[d1 - 1])
                mass = mass[: len(mass) - d1]
        start = max(0 - origin, 0)
        out[k] = min(1.0, math.fsum(mass[start:]) + above)
    return out


def spitzer_recurrence(marginals, *, fast: bool = False) -> LadderTailTable:
    """Solve ``n P(tau > n) = sum_{j<n} P(tau > j) m[n - j]`` from ``m[k] = P(S_k >= 0)``.

    ``marginals[0]`` must be 1.  Sums use ``math.fsum`` unless ``fast``.
    """
    m = np.asarray(marginals, dtype=float)
    if m.ndim != 1 or len(m) == 0:
        raise ValueError("marginals must be a nonempty 1-d sequence")
    if np.any(~np.isfinite(m)) or np.any(m < 0) or np.any(m > 1):
        raise ValueError("marginals must lie in [0, 1]")
    if m[0] != 1:
        raise ValueError("marginals[0] = P(S_0 >= 0) must be 1")
    n = len(m) - 1
    p = np.empty(n + 1)
    p[0] = 1.0
    for k in range(1, n + 1):
        terms = p[:k] * m[k:0:-1]
        s = float(np.dot(p[:k], m[k:0:-1])) if fast else math.fsum(terms)
        p[k] = s / k
    return LadderTailTable(p, SPITZER, provenance={"fast": fast})


def genf_check(table, marginals, m: int) -> float:
    """Max coefficient gap between ``exp(sum_{k<=m} z^k m_k / k)`` and the table.

    The exponential is expanded as ``sum_j A^j / j!`` with truncated
    polynomial powers, independent of the recurrence.
    """
    probs = table.probs if isinstance(table, LadderTailTable) else np.asarray(table)
    if m > len(probs) - 1 or m > len(marginals) - 1:
        raise ValueError("m exceeds the table length")
    if m == 0:
        return abs(1.0 - float(probs[0]))
    A = np.zeros(m + 1)
    A[1:] = np.asarray(marginals[1: m + 1], dtype=float) / np.arange(1, m + 1)
    total = np.zeros(m + 1)
    total[0] = 1.0
    power = np.zeros(m + 1)
    power[0] = 1.0
    for j in range(1, m + 1):
        power = np.convolve(power, A)[: m + 1] / j
        if not np.any(power):
            break
        total += power
    return float(np.max(np.abs(total - probs[: m + 1])))


def enumerate_bruteforce(model: IncrementModel, a: float | None, n: int, *,
                         guard: int = ENUM_GUARD) -> LadderTailTable:
    """Sum path probabilities over all ``|support|^n`` step sequences.

    Paths are extended one step at a time and never merged; a path that has
    gone below zero is not extended further, since every continuation is dead.
    """
    a = model.drift if a is None else float(a)
    step = _step_of(model, a)
    keep = step.probs > 0
    offs = step.offsets[keep]
    pr = step.probs[keep]
    r = len(offs)
    if n < 0:
        raise ValueError("n must be >= 0")
    total = r**n
    if total > guard:
        raise ValueError(f"{r}^{n} = {total} paths exceeds the enumeration guard {guard}")
    probs = np.empty(n + 1)
    probs[0] = 1.0
    pos = np.zeros(1, dtype=np.int64)
    path_p = np.ones(1)
    for j in range(1, n + 1):
        pos = (pos[:, None] + offs[None, :]).ravel()
        path_p = (path_p[:, None] * pr[None, :]).ravel()
        alive = pos >= 0
        pos, path_p = pos[alive], path_p[alive]
        probs[j] = math.fsum(path_p)
    return LadderTailTable(probs, BRUTEFORCE, model.hash, a, {"paths": total})
