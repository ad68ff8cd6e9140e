"""Numerical inversion of Laplace transforms."""

from __future__ import annotations

import math

import numpy as np
from scipy import special


def euler_invert(fhat, x: float, A: float = 18.4, n: int = 15, m: int = 11):
    """Fourier-series (Euler-summed) inversion of ``fhat`` at ``x > 0``.

    ``fhat`` takes an array of complex arguments.  Discretisation error is
    about ``exp(-A)``.  Returns ``(value, error_estimate)`` where the estimate
    is the change from using ``n - 1`` terms before Euler summation.
    """
    if not x > 0:
        raise ValueError("x must be positive")
    k = np.arange(n + m + 1)
    lam = (A + 2j * math.pi * k) / (2 * x)
    vals = np.real(fhat(lam))
    terms = vals * np.where(k % 2 == 0, 1.0, -1.0)
    terms[0] *= 0.5
    partial = np.cumsum(terms)
    binom = special.comb(m, np.arange(m + 1)) / 2.0**m
    scale = math.exp(A / 2) / x
    est = scale * float(binom @ partial[n: n + m + 1])
    alt = scale * float(binom @ partial[n - 1: n + m])
    return est, abs(est - alt)


def stehfest_weights(N: int) -> np.ndarray:
    if N % 2:
        raise ValueError("Gaver-Stehfest needs an even number of terms")
    half = N // 2
    w = np.zeros(N)
    for k in range(1, N + 1):
        s = 0.0
        for j in range((k + 1) // 2, min(k, half) + 1):
            s += (j**half * math.factorial(2 * j)
                  / (math.factorial(half - j) * math.factorial(j) * math.factorial(j - 1)
                     * math.factorial(k - j) * math.factorial(2 * j - k)))
        w[k - 1] = (-1) ** (k + half) * s
    return w


def stehfest_invert(fhat, x: float, N: int = 14):
    """Gaver-Stehfest inversion with real arguments.

    Returns ``(value, error_estimate)``; the estimate compares ``N`` with
    ``N - 2`` terms.  Double precision limits useful ``N`` to about 16.
    """
    if not x > 0:
        raise ValueError("x must be positive")
    ln2 = math.log(2.0)

    def once(N):
        k = np.arange(1, N + 1)
        vals = np.real(fhat(k * ln2 / x + 0j))
        return ln2 / x * float(stehfest_weights(N) @ vals)

    est = once(N)
    return est, abs(est - once(N - 2))
