"""Composite Gauss-Legendre rules with deterministic node counts."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def panel_rule(breaks, order: int = 16):
    """Nodes and weights of a composite rule on consecutive ``breaks``."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = leggauss(order)
    lo = breaks[:-1, None]
    half = 0.5 * np.diff(breaks)[:, None]
    nodes = lo + half * (x[None, :] + 1.0)
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def graded_breaks(a: float, b: float, levels: int = 40, ratio: float = 0.5):
    """Breakpoints on [a, b] refined geometrically towards ``a``.

    Used for integrands with an algebraic singularity at the left end.
    """
    span = b - a
    inner = a + span * ratio ** np.arange(levels, 0, -1)
    return np.concatenate(([a], inner, [b]))


def uniform_breaks(a: float, b: float, width: float):
    count = max(1, int(np.ceil((b - a) / width)))
    return np.linspace(a, b, count + 1)
