import numpy as np
import pytest

from crcconv.convcode import CodeSpec
from crcconv.dso import (
    DIRECT,
    INCONCLUSIVE,
    DistanceSpectrum,
    SpectrumCache,
    collect_iees,
    crc_candidates,
    distance_spectrum,
    dso_search,
    product_trellis_spectrum,
    reconstruct_tbps,
    reconstruct_ztps,
    sieve_dso,
    wstar_bound,
    wstar_for,
)
from crcconv.gf2poly import CrcScheme, Gf2Poly, parse_hex_crc
from oracles import weight_counts


def code(k, mode, crc=None, gens=("13", "17")):
    return CodeSpec.from_octal(list(gens), k=k, mode=mode, crc=crc)


@pytest.mark.parametrize("mode", ["ZT", "TB"])
@pytest.mark.parametrize("K", [7, 10])
def test_spectra_match_brute_force(mode, K):
    D = 14
    spec = code(K, mode)
    ref = weight_counts(spec, D)
    assert np.array_equal(product_trellis_spectrum(spec, None, D), ref)
    builder = reconstruct_tbps if mode == "TB" else reconstruct_ztps
    assert np.array_equal(builder(collect_iees(spec, D), spec, D).counts(), ref)


@pytest.mark.parametrize("mode", ["ZT", "TB"])
@pytest.mark.parametrize("crc", ["0x9", "0xB", "0x1B"])
def test_crc_filtered_spectra_match_brute_force(mode, crc):
    D = 16
    lower = code(7, mode, crc)
    scheme = lower.crc
    ref = weight_counts(code(7 + scheme.m, mode), D, scheme.poly.bits, scheme.m)
    for method in ("trellis", "iee"):
        got = distance_spectrum(lower, scheme, D, method)
        assert np.array_equal(got.counts, ref), method


def test_other_generators_too():
    spec = code(9, "TB", gens=("5", "7"))
    assert np.array_equal(product_trellis_spectrum(spec, None, 12), weight_counts(spec, 12))
    spec = code(6, "TB", gens=("133", "171"))
    assert np.array_equal(
        reconstruct_tbps(collect_iees(spec, 12), spec, 12).counts(), weight_counts(spec, 12))


def test_iee_invariants():
    spec = code(20, "TB")
    iees = collect_iees(spec, 12)
    assert set(iees) == set(range(8))
    for sigma, lst in iees.items():
        for e in lst:
            assert e.weight < 12
            s = sigma
            for t, u in enumerate(e.input_bits()):
                s = ((s << 1) | u) & 7
                if t < e.length - 1:
                    assert s > sigma if sigma else s != 0
            assert s == sigma
    # the zero self-loop is never an event
    assert all(e.length > 1 or e.weight > 0 for e in iees[0])


def test_trivial_thresholds_give_nothing():
    spec = code(20, "TB")
    assert all(not lst for lst in collect_iees(spec, 1).values())
    zt = code(20, "ZT")
    assert reconstruct_ztps(collect_iees(zt, 6), zt, 6).counts().sum() == 0  # free distance 6


def test_tbp_states_and_outputs_are_consistent():
    spec = code(8, "TB")
    paths = reconstruct_tbps(collect_iees(spec, 10), spec, 10)
    for d, lst in paths.paths.items():
        for p in lst[:20]:
            st = paths.states(p)
            assert st[0] == st[-1]
            assert sum(paths.outputs(p)) == d


def _exhaustive_dso(K, mode, m, D):
    """Lexicographically smallest low-weight spectrum over every candidate."""
    best = None
    for c in crc_candidates(m):
        spec = weight_counts(code(K, mode), D, c, m)
        key = tuple(spec[1:])
        if best is None or key < best[0]:
            best = (key, c)
    return best


@pytest.mark.parametrize("mode", ["ZT", "TB"])
def test_sieve_agrees_with_exhaustive_candidate_scan(mode):
    K, m, D = 10, 3, 13
    spec = code(K, mode)
    builder = reconstruct_tbps if mode == "TB" else reconstruct_ztps
    res = sieve_dso(m, builder(collect_iees(spec, D), spec, D))
    key, poly = _exhaustive_dso(K, mode, m, D)
    assert tuple(res.spectrum[1:]) == key
    if not res.inconclusive:
        assert res.crc.poly.bits == poly
    assert res.audit[0]["survivors"] == 4
    assert [a["survivors"] for a in res.audit] == sorted((a["survivors"] for a in res.audit), reverse=True)


def test_inconclusive_when_threshold_too_low():
    spec = code(20, "ZT")
    paths = reconstruct_ztps(collect_iees(spec, 4), spec, 4)
    with pytest.warns(RuntimeWarning):
        res = sieve_dso(3, paths)
    assert res.status == INCONCLUSIVE
    assert res.crc.hex == "0x9" and len(res.tied) == 4


def test_candidates():
    assert crc_candidates(3) == [0b1001, 0b1011, 0b1101, 0b1111]
    assert len(crc_candidates(6)) == 32
    assert crc_candidates(0) == [1]


def test_wstar_bound_definition():
    B = DistanceSpectrum(np.array([0, 0, 1, 2, 5]), 5, "higher")
    assert wstar_bound(B, 0) == 4  # one codeword at weight 2
    assert wstar_bound(B, 1) == 6
    assert wstar_bound(B, 3) == 8
    with pytest.raises(ValueError):
        wstar_bound(B, 4)


def test_dso_search_small_and_cache(tmp_path):
    spec = code(64, "ZT")
    cache = SpectrumCache(tmp_path / "c.json")
    row = dso_search(spec, 3, cache=cache)
    assert (row.result.crc.hex, row.result.d_min, row.wstar2) == ("0x9", 10, 12)
    cache.put_search(spec, row)
    again = SpectrumCache(tmp_path / "c.json")
    key = next(iter(again.data["iees"]))
    assert "13,17" in key and "ZT" in key
    cached = again.get_iees(code(67, "ZT"), row.d_tilde)
    assert cached == collect_iees(code(67, "ZT"), row.d_tilde)
    assert dso_search(spec, 3, cache=again).result.crc.hex == "0x9"


def test_wstar_for_widens_truncation():
    assert wstar_for(code(64, "TB"), 10) == 18


def test_bit_order_swaps_in_the_reciprocal():
    spec = code(10, "ZT", "0x37")
    direct = distance_spectrum(spec, spec.crc, 16, bit_order=DIRECT)
    recip = distance_spectrum(spec, parse_hex_crc("0x3B"), 16)
    assert np.array_equal(direct.counts, recip.counts)
    with pytest.raises(ValueError):
        distance_spectrum(spec, spec.crc, 16, bit_order="sideways")


def test_float_counts_agree_and_cover_every_codeword():
    spec = code(8, "TB", "0x9")
    exact = product_trellis_spectrum(spec, spec.crc, spec.n + 1)
    approx = product_trellis_spectrum(spec, spec.crc, spec.n + 1, exact=False)
    assert np.array_equal(exact, approx)
    assert exact.sum() == 2 ** 8 - 1


def test_spectrum_serialization():
    s = distance_spectrum(code(10, "ZT", "0x2D"), parse_hex_crc("0x2D"), 14)
    back = DistanceSpectrum.from_dict(s.to_dict())
    assert np.array_equal(back.counts, s.counts) and back.flavor == "lower"
    assert s.d_min == 12 and s[12] == 76
    assert CrcScheme(Gf2Poly(0x2D)).hex == "0x2D"
