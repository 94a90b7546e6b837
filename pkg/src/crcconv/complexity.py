"""Closed-form decoding cost model for serial list Viterbi decoding.

Costs are in units of one addition.  ``c1`` weighs a traceback step against
an add-compare-select branch, ``c2`` weighs one ordered-list operation.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .convcode import TB, ZT

__all__ = ["C1", "C2", "c_ssv", "c_trace", "c_list", "ei_bound", "c_wava", "ComplexityBreakdown", "breakdown"]

C1 = 1.5
C2 = 2.2


def _check_mode(mode: str) -> None:
    if mode not in (ZT, TB):
        raise ValueError(f"mode must be ZT or TB, got {mode!r}")


def c_ssv(mode: str, k: int, m: int, nu: int, c1: float = C1) -> float:
    """Cost of one Viterbi pass plus the first traceback."""
    _check_mode(mode)
    K = k + m
    if mode == ZT:
        head = 2 ** (nu + 1) - 2
        return head + 1.5 * head + 1.5 * (K - nu) * 2 ** (nu + 1) + c1 * (2 * (K + nu) + 1.5 * K)
    return 1.5 * K * 2 ** (nu + 1) + 2 ** nu + 3.5 * c1 * K


def c_trace(mode: str, k: int, m: int, nu: int, el: float, c1: float = C1) -> float:
    """Cost of the tracebacks after the first one."""
    _check_mode(mode)
    if el < 1:
        raise ValueError("expected list rank must be at least 1")
    K = k + m
    if mode == ZT:
        return c1 * (el - 1) * (2 * (K + nu) + 1.5 * K)
    return 3.5 * c1 * (el - 1) * K


def c_list(ei: float, c2: float = C2) -> float:
    """Ordered-list maintenance, c2 * E[I] * log2(E[I])."""
    if ei < 1:
        return 0.0
    return c2 * ei * math.log2(ei)


def ei_bound(mode: str, k: int, m: int, nu: int, el: float) -> float:
    """Upper bound on the expected number of list insertions."""
    _check_mode(mode)
    val = (k + m) * el
    if mode == TB:
        val += 2 ** nu - 1
    return val


def c_wava(nu: int, k: int, iterations: float) -> float:
    """Wrap-around Viterbi cost for a rate-1/omega tail-biting code."""
    if iterations < 0:
        raise ValueError("iteration count must be nonnegative")
    return k * iterations * (0.5 * 2 ** nu + 2 ** (nu + 1))


@dataclass
class ComplexityBreakdown:
    mode: str
    k: int
    m: int
    nu: int
    el: float
    ei: float
    c1: float
    c2: float
    c_ssv: float
    c_trace: float
    c_list: float

    @property
    def c_total(self) -> float:
        return self.c_ssv + self.c_trace + self.c_list

    @property
    def normalized(self) -> float:
        return self.c_total / self.c_ssv

    def to_dict(self) -> dict:
        d = asdict(self)
        d["c_total"] = self.c_total
        d["normalized"] = self.normalized
        return d


def breakdown(mode: str, k: int, m: int, nu: int, el: float, ei: float | None = None,
              c1: float = C1, c2: float = C2) -> ComplexityBreakdown:
    """Full cost model; E[I] defaults to its upper bound."""
    if ei is None:
        ei = ei_bound(mode, k, m, nu, el)
    return ComplexityBreakdown(mode, k, m, nu, el, ei, c1, c2,
                               c_ssv(mode, k, m, nu, c1), c_trace(mode, k, m, nu, el, c1), c_list(ei, c2))
