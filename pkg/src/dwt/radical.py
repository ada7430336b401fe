"""Exact radical canonical forms  N**(1/r) = gamma * q**(1/r).

``q`` is the r-th-power-free part of N.  Radicals q**(1/r) with distinct
r-th-power-free q are linearly independent over the rationals, so exact
comparison of sums of such radicals reduces to integer (or rational)
arithmetic on the gamma coefficients inside each q-class.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache
from math import isqrt

import numpy as np

from .errors import DomainError, UnsupportedLawError

ROOT_ORDERS = (2, 4)


@dataclass(frozen=True, order=True)
class RadicalForm:
    gamma: int
    q: int
    r: int

    @property
    def radicand(self) -> int:
        return self.gamma**self.r * self.q

    def value(self) -> float:
        return self.gamma * self.q ** (1.0 / self.r)


class _Sieve:
    # grows on demand; guarded so worker threads may share it
    def __init__(self):
        self._lock = threading.Lock()
        self.limit = 1
        self.primes = np.zeros(0, dtype=np.int64)

    def upto(self, n: int) -> np.ndarray:
        if n > self.limit:
            with self._lock:
                if n > self.limit:
                    limit = max(n, 2 * self.limit, 1024)
                    flags = np.ones(limit + 1, dtype=bool)
                    flags[:2] = False
                    for p in range(2, isqrt(limit) + 1):
                        if flags[p]:
                            flags[p * p :: p] = False
                    self.primes = np.flatnonzero(flags).astype(np.int64)
                    self.limit = limit
        return self.primes


_SIEVE = _Sieve()


def primes_up_to(n: int) -> np.ndarray:
    primes = _SIEVE.upto(max(n, 2))
    return primes[: np.searchsorted(primes, n, side="right")]


def factorize(N: int) -> list[tuple[int, int]]:
    """Prime factorization by trial division, primes in increasing order.

    >>> factorize(162)
    [(2, 1), (3, 4)]
    """
    N = int(N)
    if N < 1:
        raise DomainError(f"cannot factorize {N}")
    out = []
    rest = N
    for p in primes_up_to(isqrt(N)).tolist():
        if p * p > rest:
            break
        if rest % p == 0:
            e = 0
            while rest % p == 0:
                rest //= p
                e += 1
            out.append((p, e))
    if rest > 1:
        out.append((rest, 1))
    return out


@lru_cache(maxsize=None)
def canonicalize(N: int, r: int) -> RadicalForm:
    """Split N into gamma**r * q with q free of r-th powers."""
    if r not in ROOT_ORDERS:
        raise DomainError(f"root order must be one of {ROOT_ORDERS}, got {r}")
    gamma, q = 1, 1
    for p, e in factorize(N):
        gamma *= p ** (e // r)
        q *= p ** (e % r)
    return RadicalForm(gamma, q, r)


def q_partition(modes, r: int) -> dict[int, list]:
    """Bucket modes by the r-th-power-free part of their radicand.

    Buckets keep the input order of the modes; keys are sorted.
    """
    buckets: dict[int, list] = {}
    for mode in modes:
        rad = mode.radical
        if rad is None:
            raise UnsupportedLawError(f"mode {mode} has no radical representation")
        if rad.r != r:
            raise UnsupportedLawError(f"mode {mode} has root order {rad.r}, expected {r}")
        buckets.setdefault(rad.q, []).append(mode)
    return dict(sorted(buckets.items()))
