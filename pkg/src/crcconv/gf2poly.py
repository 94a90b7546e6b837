"""Binary polynomials, CRC encoding and the hex/octal string conventions.

Polynomials are stored as Python ints with bit ``i`` holding the coefficient
of ``x**i``.  CRC polynomials are written in hex from the highest to the
lowest coefficient (``0xD`` is ``x^3 + x^2 + 1``); convolutional generators
are written in octal from the lowest to the highest coefficient (``13`` is
``1 + x^2 + x^3``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "Gf2Poly",
    "CrcScheme",
    "parse_hex_crc",
    "parse_octal_gen",
    "poly_mod",
    "reverse_bits",
    "bits_to_int",
    "int_to_bits",
    "crc_encode",
    "crc_check",
    "message_from_input",
]


@dataclass(frozen=True)
class Gf2Poly:
    """Polynomial over GF(2); ``bits`` has the x**i coefficient at bit i."""

    bits: int

    def __post_init__(self):
        if self.bits < 0:
            raise ValueError("polynomial bit pattern must be nonnegative")

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[int]) -> "Gf2Poly":
        """Build from coefficients listed lowest degree first."""
        return cls(bits_to_int(coeffs))

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return self.bits.bit_length() - 1

    @property
    def coeffs(self) -> np.ndarray:
        return int_to_bits(self.bits, max(self.degree + 1, 1))

    def is_zero(self) -> bool:
        return self.bits == 0

    def weight(self) -> int:
        return bin(self.bits).count("1")

    def reversed(self, length: int | None = None) -> "Gf2Poly":
        """Reciprocal polynomial over ``length`` coefficients (default degree+1)."""
        if length is None:
            length = self.degree + 1
        return Gf2Poly(reverse_bits(self.bits, length))

    def __add__(self, other: "Gf2Poly") -> "Gf2Poly":
        return Gf2Poly(self.bits ^ other.bits)

    __xor__ = __add__

    def __mul__(self, other: "Gf2Poly") -> "Gf2Poly":
        a, b, out = self.bits, other.bits, 0
        while b:
            if b & 1:
                out ^= a
            a <<= 1
            b >>= 1
        return Gf2Poly(out)

    def __mod__(self, other: "Gf2Poly") -> "Gf2Poly":
        return poly_mod(self, other)

    def to_hex(self) -> str:
        return f"0x{self.bits:X}"

    def __str__(self) -> str:
        if self.bits == 0:
            return "0"
        terms = []
        for i in range(self.degree, -1, -1):
            if (self.bits >> i) & 1:
                terms.append("1" if i == 0 else ("x" if i == 1 else f"x^{i}"))
        return " + ".join(terms)


@dataclass(frozen=True)
class CrcScheme:
    """Degree-m CRC generator p(x) with p_0 = p_m = 1."""

    poly: Gf2Poly

    def __post_init__(self):
        if self.poly.is_zero() or not (self.poly.bits & 1):
            raise ValueError(f"CRC polynomial {self.poly.to_hex()} must have constant term 1")

    @property
    def m(self) -> int:
        return self.poly.degree

    @property
    def hex(self) -> str:
        return self.poly.to_hex()

    @classmethod
    def from_hex(cls, text: str) -> "CrcScheme":
        return parse_hex_crc(text)

    @property
    def reciprocal_bits(self) -> int:
        # p | v*(x)  <=>  reverse(p) | v(x), with v the reversed v*.
        return reverse_bits(self.poly.bits, self.m + 1)

    def reciprocal(self) -> "CrcScheme":
        return CrcScheme(Gf2Poly(self.reciprocal_bits))

    def __str__(self) -> str:
        return self.hex


_HEX_RE = re.compile(r"^(0[xX])?[0-9a-fA-F]+$")
_OCT_RE = re.compile(r"^[0-7]+$")


def parse_hex_crc(text: str) -> CrcScheme:
    """Parse a CRC polynomial written in hex, highest coefficient first."""
    text = text.strip()
    if not _HEX_RE.match(text):
        raise ValueError(f"not a hex CRC polynomial: {text!r}")
    bits = int(text, 16)
    if bits == 0:
        raise ValueError("CRC polynomial must be nonzero")
    if not bits & 1:
        raise ValueError(f"CRC polynomial {text} must have constant term 1")
    return CrcScheme(Gf2Poly(bits))


def parse_octal_gen(text: str, nu: int | None = None) -> Gf2Poly:
    """Parse a generator polynomial written in octal, lowest coefficient first.

    The octal value read as a binary number lists g_0 at its most significant
    bit.  With ``nu`` given the value is aligned to ``nu + 1`` coefficients,
    otherwise to its own bit length.
    """
    text = str(text).strip()
    if not _OCT_RE.match(text):
        raise ValueError(f"not an octal generator: {text!r}")
    value = int(text, 8)
    if value == 0:
        raise ValueError("generator polynomial must be nonzero")
    length = value.bit_length() if nu is None else nu + 1
    if value.bit_length() > length:
        raise ValueError(f"generator {text} has more than nu+1={length} coefficients")
    return Gf2Poly(reverse_bits(value, length))


def to_octal_gen(poly: Gf2Poly, nu: int) -> str:
    return format(reverse_bits(poly.bits, nu + 1), "o")


def poly_mod(a: Gf2Poly | int, b: Gf2Poly | int) -> Gf2Poly:
    """Remainder of a(x) divided by b(x) over GF(2)."""
    a_bits = a.bits if isinstance(a, Gf2Poly) else int(a)
    b_bits = b.bits if isinstance(b, Gf2Poly) else int(b)
    if b_bits == 0:
        raise ZeroDivisionError("division by the zero polynomial")
    return Gf2Poly(_mod_int(a_bits, b_bits))


def _mod_int(a: int, b: int) -> int:
    db = b.bit_length()
    la = a.bit_length()
    while la >= db:
        a ^= b << (la - db)
        la = a.bit_length()
    return a


def reverse_bits(x: int, length: int) -> int:
    """Reverse the lowest ``length`` bits of x."""
    if x >> length:
        raise ValueError(f"{x:#x} does not fit in {length} bits")
    return int(format(x, f"0{length}b")[::-1], 2) if length > 0 else 0


def bits_to_int(bits: Sequence[int]) -> int:
    """Pack a bit sequence (index 0 = least significant) into an int."""
    out = 0
    for i, b in enumerate(bits):
        if b:
            out |= 1 << i
    return out


def int_to_bits(x: int, length: int) -> np.ndarray:
    return np.array([(x >> i) & 1 for i in range(length)], dtype=np.uint8)


def crc_encode(u: Sequence[int], scheme: CrcScheme) -> np.ndarray:
    """CRC-encode a k-bit message into the (k+m)-bit encoder input v.

    ``u[i]`` is the coefficient of x**i; u_{k-1} enters the encoder first.
    Returns v with v[0] the first bit into the convolutional encoder, i.e.
    the reversal of v*(x) = x^m u(x) + (x^m u(x) mod p(x)).
    """
    u = np.asarray(u, dtype=np.uint8)
    k, m = len(u), scheme.m
    if k < 1:
        raise ValueError("message must contain at least one bit")
    shifted = bits_to_int(u) << m
    vstar = shifted | _mod_int(shifted, scheme.poly.bits)
    return int_to_bits(reverse_bits(vstar, k + m), k + m)


def crc_check(vstar: Sequence[int], scheme: CrcScheme) -> bool:
    """True iff p(x) divides v*(x); ``vstar`` is in un-reversed (v*) order."""
    vstar = np.asarray(vstar, dtype=np.uint8)
    if len(vstar) < scheme.m:
        raise ValueError("sequence shorter than the CRC degree")
    return _mod_int(bits_to_int(vstar), scheme.poly.bits) == 0


def message_from_input(v: Sequence[int], m: int) -> np.ndarray:
    """Recover the k-bit message u from encoder input v = reverse(v*)."""
    v = np.asarray(v, dtype=np.uint8)
    vstar = v[::-1]
    return vstar[m:].copy()
