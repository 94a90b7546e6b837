"""Distance-spectrum-optimal CRC search.

Pipeline: collect irreducible error events (IEEs) per start state, rebuild
every low-weight tail-biting (or zero-terminated) path from them, then sieve
the CRC candidates by how many of those paths each one lets through, one
Hamming weight at a time.

Paths are handled as input integers: bit t is the encoder input at trellis
step t.  A tail-biting path is fully determined by its N input bits (the
initial state is the last nu of them), so cyclic shifts of a path are cyclic
rotations of that integer.

An independent route to the same spectra, :func:`product_trellis_spectrum`,
runs a weight-enumerator recursion over (encoder state, CRC remainder).  It
handles long truncation distances cheaply and serves as a cross-check.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .convcode import TB, ZT, CodeSpec
from .gf2poly import CrcScheme, Gf2Poly, _mod_int

__all__ = [
    "Iee",
    "TbpSet",
    "DistanceSpectrum",
    "SieveResult",
    "INCONCLUSIVE",
    "collect_iees",
    "reconstruct_tbps",
    "reconstruct_ztps",
    "sieve_dso",
    "distance_spectrum",
    "product_trellis_spectrum",
    "wstar_bound",
    "dso_search",
    "SpectrumCache",
    "REVERSED",
    "DIRECT",
]

INCONCLUSIVE = "INCONCLUSIVE"
CACHE_VERSION = 1

# Which end of the encoder input the CRC check reads first.  "reversed" is the
# codec convention (message bits feed the encoder last-in first); "direct"
# checks divisibility of the input sequence as the encoder sees it.
REVERSED = "reversed"
DIRECT = "direct"


def _oriented(scheme: CrcScheme | None, bit_order: str) -> CrcScheme | None:
    if bit_order not in (REVERSED, DIRECT):
        raise ValueError(f"bit_order must be {REVERSED!r} or {DIRECT!r}")
    if scheme is None or bit_order == REVERSED:
        return scheme
    return scheme.reciprocal()


@dataclass(frozen=True)
class Iee:
    """A closed excursion from ``start`` that avoids every state <= start
    (only state 0 for start 0) before returning."""

    start: int
    inputs: int
    length: int
    weight: int

    def input_bits(self) -> list[int]:
        return [(self.inputs >> t) & 1 for t in range(self.length)]


def _edge_tables(spec: CodeSpec):
    S = 1 << spec.nu
    nxt = [[((s << 1) | u) & (S - 1) for u in (0, 1)] for s in range(S)]
    wt = []
    for s in range(S):
        row = []
        for u in (0, 1):
            reg = (s << 1) | u
            row.append(sum(bin(reg & g.bits).count("1") & 1 for g in spec.generators))
        wt.append(row)
    return nxt, wt


def collect_iees(spec: CodeSpec, d_tilde: int, max_length: int | None = None) -> dict[int, list[Iee]]:
    """All IEEs of weight < d_tilde and length <= max_length, keyed by start state.

    Depth-first search with weight pruning.  The zero-state self-loop is not
    an IEE; reconstruction treats it as a weight-0 filler.
    """
    if d_tilde < 1:
        raise ValueError("distance threshold must be at least 1")
    N = spec.n_sections if max_length is None else max_length
    nxt, wt = _edge_tables(spec)
    S = 1 << spec.nu
    out: dict[int, list[Iee]] = {}
    for sigma in range(S):
        found = []
        floor = sigma if sigma > 0 else 0
        # stack items: (state, inputs, length, weight)
        stack = [(sigma, 0, 0, 0)]
        while stack:
            s, bits, length, w = stack.pop()
            for u in (1, 0):
                t = nxt[s][u]
                w2 = w + wt[s][u]
                if w2 >= d_tilde or length + 1 > N:
                    continue
                b2 = bits | (u << length)
                if t == sigma:
                    if sigma == 0 and length == 0:
                        continue  # zero self-loop
                    found.append(Iee(sigma, b2, length + 1, w2))
                elif t > floor:
                    stack.append((t, b2, length + 1, w2))
        found.sort(key=lambda e: (e.weight, e.length, e.inputs))
        out[sigma] = found
    return out


@dataclass
class TbpSet:
    """Low-weight trellis paths of length N grouped by output weight."""

    spec: CodeSpec
    length: int
    d_tilde: int
    mode: str
    paths: dict[int, list[int]] = field(default_factory=dict)

    def count(self, d: int) -> int:
        return len(self.paths.get(d, ()))

    def counts(self) -> np.ndarray:
        c = np.zeros(self.d_tilde, dtype=np.int64)
        for d, lst in self.paths.items():
            c[d] = len(lst)
        return c

    def info_length(self) -> int:
        return self.length - (self.spec.nu if self.mode == ZT else 0)

    def states(self, path: int) -> list[int]:
        nu, N = self.spec.nu, self.length
        mask = (1 << nu) - 1
        if self.mode == TB:
            s = sum(((path >> (N - 1 - i)) & 1) << i for i in range(nu))
        else:
            s = 0
        seq = [s]
        for t in range(N):
            s = ((s << 1) | ((path >> t) & 1)) & mask
            seq.append(s)
        return seq

    def outputs(self, path: int) -> list[int]:
        st = self.states(path)
        out = []
        for t in range(self.length):
            reg = (st[t] << 1) | ((path >> t) & 1)
            out.extend(bin(reg & g.bits).count("1") & 1 for g in self.spec.generators)
        return out


def _rotate(x: int, r: int, N: int) -> int:
    """Cyclic shift of an N-bit input integer so old time 0 lands at time r."""
    r %= N
    mask = (1 << N) - 1
    return ((x << r) | (x >> (N - r))) & mask


def _concatenations(iees: list[Iee], N: int, d_tilde: int, filler: bool):
    """Concatenations of IEEs (and zero fillers) of total length exactly N.

    Yields (inputs, weight, last_segment_length).  Dynamic programming over
    (weight, length) prefixes.
    """
    segs = [(e.inputs, e.length, e.weight) for e in iees]
    if filler:
        segs.append((0, 1, 0))
    # layers[l] maps weight -> list of (inputs, last_len)
    layers: list[dict[int, list[tuple[int, int]]]] = [dict() for _ in range(N + 1)]
    layers[0][0] = [(0, 0)]
    for l in range(N):
        layer = layers[l]
        if not layer:
            continue
        for w, entries in layer.items():
            for bits, ln, sw in segs:
                w2, l2 = w + sw, l + ln
                if w2 >= d_tilde or l2 > N:
                    continue
                dest = layers[l2].setdefault(w2, [])
                dest.extend((p | (bits << l), ln) for p, _ in entries)
        layers[l] = {}  # free memory
    for w, entries in layers[N].items():
        for p, last in entries:
            yield p, w, last


def reconstruct_tbps(iees: dict[int, list[Iee]], spec: CodeSpec, d_tilde: int,
                     length: int | None = None) -> TbpSet:
    """Every tail-biting path of the given length with weight in [1, d_tilde)."""
    N = spec.n_sections if length is None else length
    out = TbpSet(spec, N, d_tilde, TB)
    seen: dict[int, set[int]] = {}
    for sigma, lst in iees.items():
        for p, w, last in _concatenations(lst, N, d_tilde, filler=(sigma == 0)):
            if w == 0:
                continue
            bucket = seen.setdefault(w, set())
            # the path's original time 0 sits inside its final segment
            for r in range(last):
                bucket.add(_rotate(p, r, N))
    for w in sorted(seen):
        out.paths[w] = sorted(seen[w])
    return out


def reconstruct_ztps(iees: dict[int, list[Iee]], spec: CodeSpec, d_tilde: int,
                     length: int | None = None) -> TbpSet:
    """Zero-terminated paths of length N (tail included) with weight in [1, d_tilde)."""
    N = spec.n_sections if length is None else length
    out = TbpSet(spec, N, d_tilde, ZT)
    buckets: dict[int, list[int]] = {}
    for p, w, _ in _concatenations(iees.get(0, []), N, d_tilde, filler=True):
        if w:
            buckets.setdefault(w, []).append(p)
    for w in sorted(buckets):
        out.paths[w] = sorted(buckets[w])
    return out


def _bit_matrix(ints: list[int], K: int) -> np.ndarray:
    nbytes = (K + 7) // 8 or 1
    mask = (1 << K) - 1
    raw = b"".join((x & mask).to_bytes(nbytes, "little") for x in ints)
    arr = np.frombuffer(raw, dtype=np.uint8).reshape(len(ints), nbytes)
    return np.unpackbits(arr, axis=1, bitorder="little")[:, :K]


def _syndrome_stack(cands: list[int], m: int, K: int) -> np.ndarray:
    """(K, len(cands)*m) matrix whose column block c holds x^i mod reverse(p_c)."""
    cols = np.zeros((K, len(cands) * m), dtype=np.float32)
    for c, p in enumerate(cands):
        recip = int(format(p, f"0{m + 1}b")[::-1], 2)
        for i in range(K):
            r = _mod_int(1 << i, recip)
            for j in range(m):
                cols[i, c * m + j] = (r >> j) & 1
    return cols


def _divisible_counts(paths: list[int], cands: list[int], m: int, K: int,
                      chunk: int = 4096) -> np.ndarray:
    """Number of paths whose input polynomial passes each candidate CRC."""
    counts = np.zeros(len(cands), dtype=np.int64)
    if not paths or not cands:
        return counts
    if m == 0:
        counts[:] = len(paths)
        return counts
    H = _syndrome_stack(cands, m, K)
    for i in range(0, len(paths), chunk):
        V = _bit_matrix(paths[i : i + chunk], K).astype(np.float32)
        syn = np.mod(V @ H, 2.0).reshape(V.shape[0], len(cands), m)
        counts += (syn.sum(axis=2) == 0).sum(axis=0)
    return counts


def crc_candidates(m: int) -> list[int]:
    """All degree-m polynomials with unit constant and leading terms, ascending."""
    if m == 0:
        return [1]
    return [(1 << m) | (mid << 1) | 1 for mid in range(1 << (m - 1))]


@dataclass
class SieveResult:
    crc: CrcScheme
    status: str
    d_min: int | None
    multiplicity: int | None
    audit: list[dict]
    spectrum: np.ndarray
    tied: list[str] = field(default_factory=list)

    @property
    def inconclusive(self) -> bool:
        return self.status == INCONCLUSIVE

    def to_dict(self) -> dict:
        return {
            "crc_hex": self.crc.hex,
            "status": self.status,
            "d_min": self.d_min,
            "multiplicity": self.multiplicity,
            "audit": self.audit,
            "spectrum": [int(x) for x in self.spectrum],
            "tied": self.tied,
        }


def sieve_dso(m: int, paths: TbpSet) -> SieveResult:
    """Keep, weight by weight, the CRCs letting the fewest paths through.

    When several candidates survive every weight below d_tilde the
    lexicographically smallest is returned with status INCONCLUSIVE.
    """
    K = paths.info_length()
    cands = crc_candidates(m)
    audit = [{"d": 0, "survivors": len(cands)}]
    winner_spec = np.zeros(paths.d_tilde, dtype=np.int64)
    status = "OK"
    for d in range(1, paths.d_tilde):
        lst = paths.paths.get(d, [])
        counts = _divisible_counts(lst, cands, m, K)
        if len(cands) > 1:
            best = counts.min()
            keep = counts == best
            cands = [c for c, k_ in zip(cands, keep) if k_]
            counts = counts[keep]
            audit.append({"d": d, "paths": len(lst), "min_count": int(best), "survivors": len(cands)})
        winner_spec[d] = counts[0]
    tied = []
    if len(cands) > 1:
        status = INCONCLUSIVE
        tied = [f"0x{c:X}" for c in cands]
        warnings.warn(f"{len(cands)} CRC candidates tie below distance {paths.d_tilde}; "
                      "raise the distance threshold", RuntimeWarning, stacklevel=2)
    nz = np.flatnonzero(winner_spec)
    d_min = int(nz[0]) if nz.size else None
    mult = int(winner_spec[d_min]) if d_min is not None else None
    return SieveResult(CrcScheme(Gf2Poly(cands[0])), status, d_min, mult, audit, winner_spec, tied)


@dataclass
class DistanceSpectrum:
    """Codeword counts by Hamming weight for weights below ``d_tilde``.

    flavor "higher" counts every input (B_d); "lower" keeps only inputs that
    pass the CRC (C_d).  Index 0 is always 0 (the all-zero word is excluded).
    """

    counts: np.ndarray
    d_tilde: int
    flavor: str
    n: int | None = None

    @property
    def d_min(self) -> int | None:
        nz = np.flatnonzero(self.counts)
        return int(nz[0]) if nz.size else None

    def __getitem__(self, d: int) -> int:
        return int(self.counts[d]) if 0 <= d < len(self.counts) else 0

    def nonzero(self) -> dict[int, int]:
        return {int(d): int(self.counts[d]) for d in np.flatnonzero(self.counts)}

    def to_dict(self) -> dict:
        return {"flavor": self.flavor, "d_tilde": self.d_tilde, "n": self.n,
                "counts": [int(x) for x in self.counts]}

    @classmethod
    def from_dict(cls, d: dict) -> "DistanceSpectrum":
        return cls(np.array(d["counts"], dtype=np.int64), int(d["d_tilde"]), d["flavor"], d.get("n"))


def product_trellis_spectrum(spec: CodeSpec, scheme: CrcScheme | None, d_tilde: int,
                             bit_order: str = REVERSED, exact: bool = True) -> np.ndarray:
    """Counts of codewords of weight d < d_tilde by a forward recursion over
    (encoder state, partial CRC remainder).

    ``exact=False`` accumulates in float64, which cannot overflow and is what
    a full-length union bound needs once counts pass 2**63.
    """
    scheme = _oriented(scheme, bit_order)
    dtype = np.int64 if exact else np.float64
    nu, S = spec.nu, 1 << spec.nu
    K = spec.input_length
    m = scheme.m if scheme is not None else 0
    p = scheme.poly.bits if scheme is not None else 1
    R = 1 << m
    nxt, wt = _edge_tables(spec)
    # v* lists v in reverse order, so Horner on v*(x) mod p consumes v_0 first
    rem_next = np.array([[(_mod_int((r << 1) | u, p)) for u in (0, 1)] for r in range(R)], dtype=np.int64)
    D = d_tilde
    total = np.zeros(D, dtype=dtype)
    starts = range(S) if spec.mode == TB else [0]
    nxt_a = np.array(nxt)
    wt_a = np.array(wt)
    for s0 in starts:
        cnt = np.zeros((S, R, D), dtype=dtype)
        cnt[s0, 0, 0] = 1
        for t in range(spec.n_sections):
            new = np.zeros_like(cnt)
            inputs = (0, 1) if t < K else (0,)
            for s in range(S):
                if not cnt[s].any():
                    continue
                for u in inputs:
                    s2, w = nxt_a[s, u], wt_a[s, u]
                    if w >= D:
                        continue
                    block = cnt[s, :, : D - w]
                    if t < K:
                        np.add.at(new[s2], (rem_next[:, u],), np.pad(block, ((0, 0), (w, 0))))
                    else:
                        new[s2, :, w:] += block
            cnt = new
        end = 0 if spec.mode == ZT else s0
        total += cnt[end, 0]
    total[0] = 0
    return total


def distance_spectrum(spec: CodeSpec, scheme: CrcScheme | None, d_tilde: int,
                      method: str = "trellis", bit_order: str = REVERSED) -> DistanceSpectrum:
    """B_d (scheme None) or C_d for d < d_tilde.

    method "trellis" uses the product-trellis recursion; "iee" rebuilds the
    paths from IEEs and filters them by divisibility.
    """
    scheme = _oriented(scheme, bit_order)
    flavor = "higher" if scheme is None else "lower"
    if method == "trellis":
        counts = product_trellis_spectrum(spec, scheme, d_tilde)
    elif method == "iee":
        iees = collect_iees(spec, d_tilde)
        builder = reconstruct_tbps if spec.mode == TB else reconstruct_ztps
        paths = builder(iees, spec, d_tilde)
        counts = np.zeros(d_tilde, dtype=np.int64)
        m = scheme.m if scheme is not None else 0
        bits = scheme.poly.bits if scheme is not None else 1
        for d, lst in paths.paths.items():
            counts[d] = _divisible_counts(lst, [bits], m, paths.info_length())[0]
    else:
        raise ValueError(f"unknown method {method!r}")
    return DistanceSpectrum(counts, d_tilde, flavor, spec.n)


def wstar_bound(B: DistanceSpectrum, m: int) -> int:
    """Twice the smallest w whose cumulative count of nonzero codewords
    reaches 2**m; an upper bound on d_min of any degree-m CRC."""
    target = 1 << m
    cum = np.cumsum(B.counts[1:])
    hit = np.flatnonzero(cum >= target)
    if hit.size == 0:
        raise ValueError(f"spectrum truncated at {B.d_tilde} before reaching 2^{m} codewords")
    return 2 * int(hit[0] + 1)


def _higher_rate(spec: CodeSpec, m: int) -> CodeSpec:
    """The CRC-free code whose trellis carries k + m inputs."""
    return CodeSpec(spec.k + m, spec.nu, spec.generators, spec.mode)


def wstar_for(spec: CodeSpec, m: int) -> int:
    """2w* for CRC degree m, widening the truncation until it is reached."""
    base = _higher_rate(spec, m)
    for D in (16, 32, 64, base.n + 1):
        B = distance_spectrum(base, None, min(D, base.n + 1))
        try:
            return wstar_bound(B, m)
        except ValueError:
            continue
    raise ValueError("code has fewer than 2^m nonzero codewords")


def default_d_tilde(spec: CodeSpec, m: int) -> int:
    return wstar_for(spec, m) + 1


@dataclass
class SearchRow:
    m: int
    result: SieveResult
    wstar2: int
    d_tilde: int

    def to_dict(self) -> dict:
        out = self.result.to_dict()
        out.update({"m": self.m, "wstar2": self.wstar2, "d_tilde": self.d_tilde})
        return out


def dso_search(spec: CodeSpec, m: int, d_tilde: int | None = None,
               cache: "SpectrumCache | None" = None) -> SearchRow:
    """Full DSO search for CRC degree m on the code described by spec (k, nu,
    generators, mode; any CRC on spec is ignored)."""
    base = _higher_rate(spec, m)
    w2 = wstar_for(spec, m)
    if d_tilde is None:
        d_tilde = w2 + 1
    iees = cache.get_iees(base, d_tilde) if cache is not None else None
    if iees is None:
        iees = collect_iees(base, d_tilde)
        if cache is not None:
            cache.put_iees(base, d_tilde, iees)
    builder = reconstruct_tbps if spec.mode == TB else reconstruct_ztps
    paths = builder(iees, base, d_tilde)
    res = sieve_dso(m, paths)
    return SearchRow(m, res, w2, d_tilde)


class SpectrumCache:
    """JSON cache of IEE lists and search results, keyed by code and threshold."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.data = {"version": CACHE_VERSION, "iees": {}, "searches": {}}
        if self.path.exists():
            loaded = json.loads(self.path.read_text())
            if loaded.get("version") == CACHE_VERSION:
                self.data = loaded

    @staticmethod
    def key(spec: CodeSpec, d_tilde: int, length: int | None = None) -> str:
        N = spec.n_sections if length is None else length
        return f"{','.join(spec.gens_octal)}|nu={spec.nu}|{spec.mode}|d={d_tilde}|N={N}"

    def get_iees(self, spec: CodeSpec, d_tilde: int) -> dict[int, list[Iee]] | None:
        raw = self.data["iees"].get(self.key(spec, d_tilde))
        if raw is None:
            return None
        return {int(s): [Iee(int(s), int(b, 16), ln, w) for b, ln, w in lst] for s, lst in raw.items()}

    def put_iees(self, spec: CodeSpec, d_tilde: int, iees: dict[int, list[Iee]]) -> None:
        self.data["iees"][self.key(spec, d_tilde)] = {
            str(s): [[f"{e.inputs:x}", e.length, e.weight] for e in lst] for s, lst in iees.items()
        }
        self.save()

    def put_search(self, spec: CodeSpec, row: SearchRow) -> None:
        self.data["searches"][f"{self.key(spec, row.d_tilde)}|m={row.m}"] = row.to_dict()
        self.save()

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        tmp.write_text(json.dumps(self.data, sort_keys=True))
        tmp.replace(self.path)
