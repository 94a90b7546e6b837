"""Rate-1/omega feedforward convolutional codes: encoding, trellis, BPSK.

State convention: the encoder state is the last ``nu`` input bits with the
most recent bit in the least-significant position.  The shift register for
an edge is ``(state << 1) | u`` and output bit j is the parity of the
register masked with generator j.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .gf2poly import CrcScheme, Gf2Poly, parse_hex_crc, parse_octal_gen, to_octal_gen

__all__ = ["ZT", "TB", "CodeSpec", "Trellis", "build_trellis", "encode", "encode_states", "modulate"]

ZT = "ZT"
TB = "TB"
MAX_NU = 16
MAX_OMEGA = 8


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


@dataclass(frozen=True)
class CodeSpec:
    """Everything needed to build C_h and, with a CRC, C_l.

    ``m`` is the CRC degree; when ``crc`` is given it must agree with it.
    """

    k: int
    nu: int
    generators: tuple[Gf2Poly, ...]
    mode: str = ZT
    m: int = 0
    crc: CrcScheme | None = None

    def __post_init__(self):
        if self.mode not in (ZT, TB):
            raise ValueError(f"mode must be 'ZT' or 'TB', got {self.mode!r}")
        if self.k < 1:
            raise ValueError("k must be positive")
        if not 1 <= self.nu <= MAX_NU:
            raise ValueError(f"nu must lie in [1, {MAX_NU}]")
        if not 1 <= len(self.generators) <= MAX_OMEGA:
            raise ValueError(f"omega must lie in [1, {MAX_OMEGA}]")
        if self.crc is not None and self.crc.m != self.m:
            object.__setattr__(self, "m", self.crc.m)
        for g in self.generators:
            if g.is_zero() or g.degree > self.nu:
                raise ValueError(f"generator {g} has degree outside [0, nu={self.nu}]")
        if not any(g.degree == self.nu for g in self.generators):
            raise ValueError("no generator reaches degree nu; encoder is not minimal")
        if not any(g.bits & 1 for g in self.generators):
            raise ValueError("no generator has a nonzero constant term")

    @classmethod
    def from_octal(cls, gens: Sequence[str], k: int, mode: str = ZT,
                   crc: str | CrcScheme | None = None, nu: int | None = None) -> "CodeSpec":
        if nu is None:
            nu = max(int(str(g), 8).bit_length() for g in gens) - 1
        polys = tuple(parse_octal_gen(str(g), nu) for g in gens)
        if isinstance(crc, str):
            crc = parse_hex_crc(crc)
        return cls(k=k, nu=nu, generators=polys, mode=mode,
                   m=crc.m if crc is not None else 0, crc=crc)

    def with_crc(self, crc: str | CrcScheme | None) -> "CodeSpec":
        if isinstance(crc, str):
            crc = parse_hex_crc(crc)
        return CodeSpec(self.k, self.nu, self.generators, self.mode,
                        crc.m if crc is not None else 0, crc)

    def with_k(self, k: int) -> "CodeSpec":
        return CodeSpec(k, self.nu, self.generators, self.mode, self.m, self.crc)

    @property
    def omega(self) -> int:
        return len(self.generators)

    @property
    def input_length(self) -> int:
        return self.k + self.m

    @property
    def n_sections(self) -> int:
        return self.k + self.m + (self.nu if self.mode == ZT else 0)

    @property
    def n(self) -> int:
        return self.omega * self.n_sections

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def gens_octal(self) -> list[str]:
        return [to_octal_gen(g, self.nu) for g in self.generators]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "m": self.m,
            "nu": self.nu,
            "omega": self.omega,
            "gens_octal": self.gens_octal,
            "crc_hex": self.crc.hex if self.crc is not None else None,
            "mode": self.mode,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "CodeSpec":
        crc = d.get("crc_hex")
        spec = cls.from_octal(d["gens_octal"], int(d["k"]), d.get("mode", ZT), crc,
                              nu=d.get("nu"))
        if "omega" in d and int(d["omega"]) != spec.omega:
            raise ValueError("omega does not match the number of generators")
        if crc is None and int(d.get("m", 0)) != 0:
            spec = CodeSpec(spec.k, spec.nu, spec.generators, spec.mode, int(d["m"]), None)
        elif crc is not None and "m" in d and int(d["m"]) != spec.m:
            raise ValueError(f"m={d['m']} disagrees with CRC {crc} of degree {spec.m}")
        return spec

    @classmethod
    def from_json(cls, text: str) -> "CodeSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Trellis:
    """Stationary section tables plus the termination rule.

    ``next_state[s, u]``, ``outputs[s, u]`` (omega bits) describe every edge;
    ``prev[s, b]`` lists the two predecessors of s (b is their top bit), and
    the input bit on either incoming edge is ``s & 1``.
    """

    nu: int
    omega: int
    n_sections: int
    mode: str
    next_state: np.ndarray = field(repr=False)
    outputs: np.ndarray = field(repr=False)
    prev: np.ndarray = field(repr=False)

    @property
    def n_states(self) -> int:
        return 1 << self.nu

    @cached_property
    def signs(self) -> np.ndarray:
        """BPSK sign (+1/-1) per edge output, shape (S, 2, omega)."""
        return 1.0 - 2.0 * self.outputs

    @cached_property
    def edge_weight(self) -> np.ndarray:
        return self.outputs.sum(axis=2).astype(np.int64)

    @cached_property
    def out_weight_into(self) -> np.ndarray:
        """Hamming weight of the edge from prev[s, b] into s, shape (S, 2)."""
        S = self.n_states
        w = np.empty((S, 2), dtype=np.int64)
        for s in range(S):
            for b in range(2):
                w[s, b] = self.edge_weight[self.prev[s, b], s & 1]
        return w

    def allowed_inputs(self, section: int) -> tuple[int, ...]:
        if self.mode == ZT and section >= self.n_sections - self.nu:
            return (0,)
        return (0, 1)

    def section_edges(self, section: int) -> list[tuple[int, int, int, tuple[int, ...]]]:
        """Edges (from, input, to, output bits) of one section."""
        if not 0 <= section < self.n_sections:
            raise IndexError(section)
        edges = []
        for s in range(self.n_states):
            for u in self.allowed_inputs(section):
                edges.append((s, u, int(self.next_state[s, u]),
                              tuple(int(b) for b in self.outputs[s, u])))
        return edges


def build_trellis(spec: CodeSpec, length: int | None = None) -> Trellis:
    """Precompute the section tables for ``spec`` over ``length`` sections."""
    N = spec.n_sections if length is None else length
    if N < 1:
        raise ValueError("trellis needs at least one section")
    nu, S = spec.nu, 1 << spec.nu
    mask = S - 1
    next_state = np.empty((S, 2), dtype=np.int64)
    outputs = np.empty((S, 2, spec.omega), dtype=np.uint8)
    for s in range(S):
        for u in (0, 1):
            reg = (s << 1) | u
            next_state[s, u] = reg & mask
            for j, g in enumerate(spec.generators):
                outputs[s, u, j] = _parity(reg & g.bits)
    prev = np.empty((S, 2), dtype=np.int64)
    for s in range(S):
        for b in (0, 1):
            prev[s, b] = (s >> 1) | (b << (nu - 1))
    for arr in (next_state, outputs, prev):
        arr.setflags(write=False)
    return Trellis(nu, spec.omega, N, spec.mode, next_state, outputs, prev)


def _input_ints(spec: CodeSpec, v: Sequence[int]) -> list[int]:
    v = [int(b) & 1 for b in v]
    if len(v) != spec.input_length:
        raise ValueError(f"expected {spec.input_length} input bits, got {len(v)}")
    return v


def initial_state(spec: CodeSpec, v: Sequence[int]) -> int:
    if spec.mode == ZT:
        return 0
    N = len(v)
    return sum(int(v[N - 1 - i]) << i for i in range(spec.nu))


def encode_states(spec: CodeSpec, v: Sequence[int]) -> np.ndarray:
    """State sequence s_0..s_N visited while encoding v."""
    v = _input_ints(spec, v)
    mask = (1 << spec.nu) - 1
    s = initial_state(spec, v)
    inputs = v + [0] * (spec.nu if spec.mode == ZT else 0)
    states = [s]
    for u in inputs:
        s = ((s << 1) | u) & mask
        states.append(s)
    return np.array(states, dtype=np.int64)


def encode(spec: CodeSpec, v: Sequence[int]) -> np.ndarray:
    """Convolutionally encode the (k+m)-bit input v into n code bits."""
    v = _input_ints(spec, v)
    mask = (1 << spec.nu) - 1
    s = initial_state(spec, v)
    inputs = v + [0] * (spec.nu if spec.mode == ZT else 0)
    gens = [g.bits for g in spec.generators]
    out = np.empty(spec.omega * len(inputs), dtype=np.uint8)
    pos = 0
    for u in inputs:
        reg = (s << 1) | u
        for g in gens:
            out[pos] = _parity(reg & g)
            pos += 1
        s = reg & mask
    return out


def modulate(c: Sequence[int], amplitude: float) -> np.ndarray:
    """BPSK: bit 0 -> +A, bit 1 -> -A."""
    if amplitude <= 0:
        raise ValueError("amplitude must be positive")
    c = np.asarray(c, dtype=np.float64)
    return (1.0 - 2.0 * c) * amplitude


def amplitude_from_db(snr_db: float) -> float:
    """Channel SNR gamma_s = A^2 with unit-variance noise."""
    return float(np.sqrt(10.0 ** (snr_db / 10.0)))
