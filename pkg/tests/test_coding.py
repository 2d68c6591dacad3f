"""Zeta codelengths and the Elias delta transport code."""

import math

import numpy as np
import pytest
from scipy import special

from crs import (INDEX_OVERHEAD_BITS, CodewordError, ZetaCoder,
                 astar_depth_limited_batch, astar_global_batch,
                 codeword_length, decode_index, decode_stream, encode_index,
                 pack_bitstring, rate_report, unpack_bitstring, zeta_exponent,
                 zeta_normalizer)


# ---------------------------------------------------------------------------
# zeta exponent and normalizer
# ---------------------------------------------------------------------------

def test_zeta_exponent_values():
    # 1 + 1/c at zero information
    assert zeta_exponent(0.0) == pytest.approx(1.6532797258459593, abs=1e-12)
    assert zeta_exponent(0.5310044064107189) == pytest.approx(
        1.4850266802800285, abs=1e-12)


def test_zeta_exponent_decreases_to_one():
    vals = [zeta_exponent(i) for i in (0, 1, 5, 50, 5000)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(1.0, abs=1e-3)
    assert all(v > 1.0 for v in vals)
    with pytest.raises(ValueError, match="nonnegative"):
        zeta_exponent(-0.1)


def test_zeta_normalizer_against_scipy():
    for lam in (1.1, 1.4850266802800285, 2.0, 3.5, 8.0):
        val, lo, hi = zeta_normalizer(lam)
        assert lo <= val <= hi
        assert hi - lo < 1e-12
        assert val == pytest.approx(float(special.zeta(lam, 1)), abs=1e-10)


def test_zeta_normalizer_rejects_divergent():
    with pytest.raises(ValueError, match="exceed 1"):
        zeta_normalizer(1.0)
    with pytest.raises(ValueError, match="exceed 1"):
        zeta_normalizer(0.5)


def test_ideal_codelength_exponent_two():
    coder = ZetaCoder.from_exponent(2.0)
    # pi^2/6 normalizer
    assert coder.log2_normalizer == pytest.approx(0.7180297582234814, abs=1e-10)
    assert coder.ideal_codelength(1) == pytest.approx(coder.log2_normalizer)
    assert coder.ideal_codelength(4) == pytest.approx(
        4.0 + coder.log2_normalizer, abs=1e-10)
    with pytest.raises(ValueError, match="positive"):
        coder.ideal_codelength(0)


def test_coder_for_information_round_trip():
    coder = ZetaCoder.for_information(0.5310044064107189)
    assert coder.exponent == pytest.approx(1.4850266802800285, abs=1e-12)


# ---------------------------------------------------------------------------
# Elias delta code
# ---------------------------------------------------------------------------

def test_encode_small_values():
    assert encode_index(1) == "1"
    assert encode_index(17) == "001010001"


def test_codeword_length_matches_encoding():
    ns = np.arange(1, 600)
    lens = codeword_length(ns)
    for n, expect in zip(ns, lens):
        assert len(encode_index(int(n))) == expect


def test_round_trip_random(rng):
    ns = rng.integers(1, 1 << 20, size=100_000)
    for n in np.unique(ns)[:2000]:
        assert decode_index(encode_index(int(n))) == n


def test_round_trip_boundaries():
    ns = {1, 2}
    for k in range(1, 33):
        ns |= {2**k - 1, 2**k, 2**k + 1}
    for n in sorted(ns):
        assert decode_index(encode_index(n)) == n


def test_encode_rejects_nonpositive():
    with pytest.raises(ValueError):
        encode_index(0)


def test_decode_error_offsets():
    with pytest.raises(CodewordError, match="trailing bits") as excinfo:
        decode_index(encode_index(17) + "0")
    assert excinfo.value.offset == 9
    with pytest.raises(CodewordError, match="length prefix"):
        decode_index("000")
    with pytest.raises(CodewordError, match="truncated length field"):
        decode_index("001")
    with pytest.raises(CodewordError, match="truncated value field"):
        decode_index("00101000")
    with pytest.raises(CodewordError, match="non-binary symbol"):
        decode_index("0010100x1")
    with pytest.raises(CodewordError):
        decode_index("")


def test_decode_stream():
    ns = [1, 17, 4, 1, 300, 2**20]
    bits = "".join(encode_index(n) for n in ns)
    assert list(decode_stream(bits)) == ns


def test_pack_round_trip(rng):
    ns = [int(n) for n in rng.integers(1, 1 << 16, size=50)]
    bits = "".join(encode_index(n) for n in ns)
    data = pack_bitstring(bits)
    assert unpack_bitstring(data, len(bits)) == bits
    assert list(decode_stream(unpack_bitstring(data, len(bits)))) == ns


def test_kraft_inequality():
    lens = codeword_length(np.arange(1, 2049))
    assert np.sum(2.0 ** -lens) <= 1.0


# ---------------------------------------------------------------------------
# rate report
# ---------------------------------------------------------------------------

def test_rate_report_degenerate_indices():
    rep = rate_report(np.ones(100, dtype=int), 0.0)
    assert rep.entropy_bits == 0.0
    assert rep.mean_ideal_bits == pytest.approx(rep.log2_normalizer)
    assert rep.se_ideal_bits == 0.0
    assert rep.within_exponent_form and rep.within_rate_bound


def test_rate_report_two_point(tp):
    out = astar_global_batch(tp, 100_000, seed=17)
    rep = rate_report(out.indices, 0.5310044064107189)
    # (info + overhead) + 1 + log2 zeta(lambda)
    assert rep.bound_exponent_form == pytest.approx(4.480257051255265, abs=1e-9)
    assert rep.bound_rate_bits == pytest.approx(5.1454828415003755, abs=1e-12)
    assert rep.within_exponent_form
    assert rep.within_rate_bound
    assert rep.mean_ideal_bits <= rep.bound_exponent_form + 3 * rep.se_ideal_bits
    # real Elias codewords stay within a constant of the ideal lengths
    assert rep.mean_code_bits <= rep.mean_ideal_bits + 4.0


def test_rate_report_coupled_depth_improves(tp):
    n, seed = 20_000, 18
    full = astar_global_batch(tp, n, seed=seed)
    capped = astar_depth_limited_batch(tp, 8, n, seed=seed)
    lens_full = codeword_length(full.indices)
    lens_capped = codeword_length(capped.indices)
    assert np.all(lens_capped <= lens_full)
    assert lens_capped.mean() <= lens_full.mean()


def test_rate_report_rejects_empty():
    with pytest.raises(ValueError, match="no indices supplied"):
        rate_report(np.array([], dtype=int), 1.0)
    with pytest.raises(ValueError, match="positive"):
        rate_report(np.array([0, 1]), 1.0)
