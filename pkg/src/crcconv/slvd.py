"""Serial list Viterbi decoding of CRC-aided ZT and TB convolutional codes.

Metric: squared Euclidean distance between the received vector and the BPSK
image (amplitude A) of a trellis path.

The forward pass keeps, for every (time t, state s), the survivor branch and
the metric gap ``delta`` between the losing and the surviving branch.  Any
trellis path is its final state plus the set of times at which it takes a
losing branch; its metric is the final survivor metric plus the gaps at those
times.  Paths therefore form a tree (a child adds one detour earlier than all
of its parent's detours) whose metrics never decrease along edges, and a
best-first search over that tree lists paths in metric order.

Tail-biting codes are decoded on the superimposed trellis (every start state
at metric 0).  The list then ranges over all ``2**(nu+N)`` pseudo-paths, and a
candidate is accepted only if it starts and ends in the same state and
passes the CRC.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .convcode import TB, ZT, Trellis
from .gf2poly import CrcScheme, _mod_int

__all__ = [
    "ForwardResult",
    "DecodeResult",
    "Candidate",
    "OpCounters",
    "viterbi_forward",
    "viterbi_forward_batch",
    "list_iterator",
    "slvd_decode",
    "slvd_decode_batch",
    "syndrome_matrix",
]

DECODED = "decoded"
NACK = "nack"


@dataclass
class OpCounters:
    """Operation counts accumulated by the decoder."""

    branches: int = 0
    tracebacks: int = 0
    traceback_steps: int = 0
    insertions: int = 0

    def __iadd__(self, other: "OpCounters") -> "OpCounters":
        self.branches += other.branches
        self.tracebacks += other.tracebacks
        self.traceback_steps += other.traceback_steps
        self.insertions += other.insertions
        return self


@dataclass
class ForwardResult:
    """Survivor structure of one received word.

    ``surv[t-1][s]`` is the branch index b (predecessor ``prev[s, b]``) chosen
    into state s at time t; ``delta[t-1][s]`` is the loser-minus-survivor gap
    there (``inf`` when no finite alternative exists).
    """

    trellis: Trellis
    final_metrics: np.ndarray
    surv: np.ndarray
    delta: np.ndarray
    branches: int


@dataclass(frozen=True)
class Candidate:
    states: tuple[int, ...]
    inputs: tuple[int, ...]
    metric: float
    rank: int


@dataclass
class DecodeResult:
    outcome: str
    list_rank: int
    message: np.ndarray | None = None
    metric: float | None = None
    insertions: int = 0
    tracebacks: int = 0
    counters: OpCounters = field(default_factory=OpCounters)

    @property
    def decoded(self) -> bool:
        return self.outcome == DECODED


def _branch_metrics(trellis: Trellis, y: np.ndarray, amplitude: float) -> np.ndarray:
    """Per-edge metrics arranged by destination: shape (B, N, S, 2)."""
    S = trellis.n_states
    pts = amplitude * trellis.signs  # (S, 2, omega)
    dest = np.arange(S)
    # edge into s' from prev[s', b] carries input s' & 1
    into = pts[trellis.prev, (dest & 1)[:, None]]  # (S, 2, omega)
    diff = y[:, :, None, None, :] - into[None, None]
    return (diff * diff).sum(axis=-1)


def _reshape(trellis: Trellis, y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    N, w = trellis.n_sections, trellis.omega
    if y.shape[-1] != N * w:
        raise ValueError(f"received word must have {N * w} samples, got {y.shape[-1]}")
    return y.reshape(y.shape[:-1] + (N, w))


def viterbi_forward_batch(trellis: Trellis, y, amplitude: float = 1.0, keep_delta: bool = True):
    """Add-compare-select over a batch of received words, shape (B, n).

    Returns (final_metrics (B, S), surv (B, N, S) uint8, delta (B, N, S) or None).
    Ties go to branch 0, i.e. the lower-numbered predecessor.
    """
    Y = _reshape(trellis, np.atleast_2d(y))
    B, N = Y.shape[0], trellis.n_sections
    S = trellis.n_states
    prev = trellis.prev
    gamma = np.zeros((B, S))
    if trellis.mode == ZT:
        gamma[:, 1:] = np.inf
    surv = np.empty((B, N, S), dtype=np.uint8)
    delta = np.empty((B, N, S)) if keep_delta else None
    odd = (np.arange(S) & 1).astype(bool)
    tail_start = N - trellis.nu if trellis.mode == ZT else N
    for t in range(N):
        bm = _branch_metrics(trellis, Y[:, t : t + 1], amplitude)[:, 0]  # (B, S, 2)
        cand = gamma[:, prev] + bm
        if t >= tail_start:
            cand[:, odd, :] = np.inf
        choose1 = cand[:, :, 1] < cand[:, :, 0]
        best = np.where(choose1, cand[:, :, 1], cand[:, :, 0])
        surv[:, t] = choose1
        if keep_delta:
            worst = np.where(choose1, cand[:, :, 0], cand[:, :, 1])
            with np.errstate(invalid="ignore"):
                d = worst - best
            d[~np.isfinite(best) | ~np.isfinite(worst)] = np.inf
            delta[:, t] = d
        gamma = best
    return gamma, surv, delta


def viterbi_forward(trellis: Trellis, y, amplitude: float = 1.0) -> ForwardResult:
    gamma, surv, delta = viterbi_forward_batch(trellis, np.asarray(y)[None], amplitude)
    return ForwardResult(trellis, gamma[0], surv[0], delta[0], _branch_count(trellis))


def _branch_count(trellis: Trellis) -> int:
    N, S = trellis.n_sections, trellis.n_states
    if trellis.mode == TB:
        return 2 * S * N
    # head sections only reach 2**t states; tail sections have one input
    total = 0
    for t in range(N):
        reach = min(S, 1 << t)
        total += reach * (1 if t >= N - trellis.nu else 2)
    return total


class _PathLister:
    """Best-first enumeration of trellis paths from one forward pass."""

    def __init__(self, fwd: ForwardResult, counters: OpCounters):
        tr = fwd.trellis
        self.N = tr.n_sections
        self.prev = tr.prev.tolist()
        self.surv = fwd.surv.tolist()
        self.delta = fwd.delta.tolist()
        self.final = fwd.final_metrics.tolist()
        self.mode = tr.mode
        self.counters = counters
        self.heap: list = []
        self.seq = itertools.count()
        self.rank = 0
        self.pending_children = None
        self.roots_pending = False

    def _trace(self, states: list, t: int, loser: bool) -> None:
        prev, surv = self.prev, self.surv
        s = states[t]
        start = t
        if loser:
            s = prev[s][1 - surv[t - 1][s]]
            t -= 1
            states[t] = s
        while t > 0:
            s = prev[s][surv[t - 1][s]]
            t -= 1
            states[t] = s
        self.counters.tracebacks += 1
        self.counters.traceback_steps += start

    def _push(self, metric: float, entry: tuple) -> None:
        heapq.heappush(self.heap, (metric, next(self.seq), entry))
        self.counters.insertions += 1

    def _expand(self, states: list, metric: float, tmin: int) -> None:
        delta = self.delta
        for t in range(1, tmin):
            d = delta[t - 1][states[t]]
            if d != float("inf"):
                self._push(metric + d, (states, t))

    def __iter__(self):
        return self

    def __next__(self) -> Candidate:
        if self.rank == 0:
            N = self.N
            final = self.final
            if self.mode == ZT:
                s_end = 0
            else:
                s_end = min(range(len(final)), key=lambda s: (final[s], s))
            states = [0] * (N + 1)
            states[N] = s_end
            self._trace(states, N, loser=False)
            self.pending_children = (states, final[s_end], N + 1)
            self.roots_pending = self.mode == TB
            self.best_end = s_end
            self.rank = 1
            return self._candidate(states, final[s_end])
        # children of the previously returned path are inserted only once it
        # has been rejected, so an accepted rank-1 path costs no insertions
        if self.roots_pending:
            for s, m in enumerate(self.final):
                if s != self.best_end and m != float("inf"):
                    self._push(m, ("root", s))
            self.roots_pending = False
        if self.pending_children is not None:
            self._expand(*self.pending_children)
            self.pending_children = None
        if not self.heap:
            raise StopIteration
        metric, _, entry = heapq.heappop(self.heap)
        N = self.N
        states = [0] * (N + 1)
        if entry[0] == "root":
            states[N] = entry[1]
            self._trace(states, N, loser=False)
            tmin = N + 1
        else:
            parent, t = entry
            states[t:] = parent[t:]
            self._trace(states, t, loser=True)
            tmin = t
        self.pending_children = (states, metric, tmin)
        self.rank += 1
        return self._candidate(states, metric)

    def _candidate(self, states: list, metric: float) -> Candidate:
        inputs = tuple(s & 1 for s in states[1:])
        return Candidate(tuple(states), inputs, metric, self.rank)


def list_iterator(trellis_or_forward, y=None, amplitude: float = 1.0,
                  counters: OpCounters | None = None) -> Iterator[Candidate]:
    """Stream trellis paths in nondecreasing metric order.

    Accepts either a Trellis plus received word or a finished ForwardResult.
    """
    if isinstance(trellis_or_forward, ForwardResult):
        fwd = trellis_or_forward
    else:
        fwd = viterbi_forward(trellis_or_forward, y, amplitude)
    return _PathLister(fwd, counters if counters is not None else OpCounters())


def _crc_ok(inputs, K: int, recip: int) -> bool:
    if recip == 1:
        return True
    v = 0
    for i in range(K - 1, -1, -1):
        v = (v << 1) | inputs[i]
    return _mod_int(v, recip) == 0


def _message(inputs, k: int, m: int) -> np.ndarray:
    # v = reverse(v*), and u occupies the top k coefficients of v*
    K = k + m
    return np.array([inputs[K - 1 - m - i] for i in range(k)], dtype=np.uint8)


def _k_m(trellis: Trellis, scheme: CrcScheme | None) -> tuple[int, int]:
    m = scheme.m if scheme is not None else 0
    K = trellis.n_sections - (trellis.nu if trellis.mode == ZT else 0)
    if K - m < 1:
        raise ValueError("trellis too short for this CRC")
    return K - m, m


def decode_from_forward(fwd: ForwardResult, scheme: CrcScheme | None,
                        max_list: int | None) -> DecodeResult:
    trellis = fwd.trellis
    if max_list is not None and max_list < 1:
        raise ValueError("list size must be at least 1")
    k, m = _k_m(trellis, scheme)
    K = k + m
    recip = scheme.reciprocal_bits if scheme is not None else 1
    counters = OpCounters(branches=fwd.branches)
    lister = _PathLister(fwd, counters)
    examined = 0
    for cand in lister:
        examined += 1
        tb_ok = trellis.mode == ZT or cand.states[0] == cand.states[-1]
        if tb_ok and _crc_ok(cand.inputs, K, recip):
            return DecodeResult(DECODED, cand.rank, _message(cand.inputs, k, m), cand.metric,
                                counters.insertions, counters.tracebacks, counters)
        if max_list is not None and examined >= max_list:
            break
    return DecodeResult(NACK, examined, None, None, counters.insertions,
                        counters.tracebacks, counters)


def slvd_decode(trellis: Trellis, scheme: CrcScheme | None, y, max_list: int | None = None,
                amplitude: float = 1.0) -> DecodeResult:
    """Decode one received word; ``max_list=None`` lists until success or exhaustion."""
    return decode_from_forward(viterbi_forward(trellis, y, amplitude), scheme, max_list)


def syndrome_matrix(K: int, scheme: CrcScheme | None) -> np.ndarray:
    """Rows are x^i mod reverse(p) for i < K, so v passes iff (v @ H) % 2 == 0."""
    if scheme is None or scheme.m == 0:
        return np.zeros((K, 0), dtype=np.uint8)
    recip, m = scheme.reciprocal_bits, scheme.m
    rows = [_mod_int(1 << i, recip) for i in range(K)]
    return np.array([[(r >> j) & 1 for j in range(m)] for r in rows], dtype=np.uint8)


def _batch_traceback(trellis: Trellis, gamma: np.ndarray, surv: np.ndarray):
    B, N, S = surv.shape
    if trellis.mode == ZT:
        s = np.zeros(B, dtype=np.int64)
    else:
        s = np.argmin(gamma, axis=1)
    s_end = s.copy()
    inputs = np.empty((B, N), dtype=np.uint8)
    rows = np.arange(B)
    prev = trellis.prev
    for t in range(N, 0, -1):
        inputs[:, t - 1] = s & 1
        b = surv[rows, t - 1, s]
        s = prev[s, b]
    return inputs, s, s_end


@dataclass
class BatchDecode:
    """Per-trial outcome arrays from :func:`slvd_decode_batch`."""

    decoded: np.ndarray
    messages: np.ndarray
    list_rank: np.ndarray
    insertions: np.ndarray
    counters: OpCounters


def slvd_decode_batch(trellis: Trellis, scheme: CrcScheme | None, Y, max_list: int | None = None,
                      amplitude: float = 1.0) -> BatchDecode:
    """Decode a batch of received words (shape (B, n)).

    Rank 1 is handled for the whole batch in numpy; only words whose rank-1
    path is rejected fall back to the per-word list search.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    k, m = _k_m(trellis, scheme)
    K = k + m
    need_list = max_list is None or max_list > 1
    gamma, surv, delta = viterbi_forward_batch(trellis, Y, amplitude, keep_delta=need_list)
    B = Y.shape[0]
    inputs, s0, s_end = _batch_traceback(trellis, gamma, surv)
    H = syndrome_matrix(K, scheme)
    v = inputs[:, :K]
    ok = ((v.astype(np.int64) @ H) % 2 == 0).all(axis=1)
    if trellis.mode == TB:
        ok &= s0 == s_end
    messages = np.zeros((B, k), dtype=np.uint8)
    messages[ok] = v[ok][:, K - 1 - m - np.arange(k)]
    ranks = np.ones(B, dtype=np.int64)
    insertions = np.zeros(B, dtype=np.int64)
    decoded = ok.copy()
    counters = OpCounters(branches=B * _branch_count(trellis), tracebacks=B,
                          traceback_steps=B * trellis.n_sections)
    if not need_list:
        return BatchDecode(decoded, messages, ranks, insertions, counters)
    branches = _branch_count(trellis)
    for i in np.flatnonzero(~ok):
        fwd = ForwardResult(trellis, gamma[i], surv[i], delta[i], branches)
        res = decode_from_forward(fwd, scheme, max_list)
        # rank 1 was already counted above
        res.counters.branches = 0
        res.counters.tracebacks -= 1
        res.counters.traceback_steps -= trellis.n_sections
        counters += res.counters
        ranks[i] = res.list_rank
        insertions[i] = res.insertions
        if res.decoded:
            decoded[i] = True
            messages[i] = res.message
    return BatchDecode(decoded, messages, ranks, insertions, counters)
