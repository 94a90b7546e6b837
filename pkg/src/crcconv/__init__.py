"""CRC-aided convolutional codes: DSO CRC design, serial list Viterbi
decoding, error bounds, list-rank models and decoding cost."""

from .convcode import TB, ZT, CodeSpec, build_trellis, encode, modulate
from .gf2poly import CrcScheme, Gf2Poly, crc_check, crc_encode, parse_hex_crc, parse_octal_gen
from .slvd import slvd_decode, slvd_decode_batch

__version__ = "0.1.0"

__all__ = [
    "TB",
    "ZT",
    "CodeSpec",
    "CrcScheme",
    "Gf2Poly",
    "build_trellis",
    "crc_check",
    "crc_encode",
    "encode",
    "modulate",
    "parse_hex_crc",
    "parse_octal_gen",
    "slvd_decode",
    "slvd_decode_batch",
]
