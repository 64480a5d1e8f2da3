import random
from fractions import Fraction

import pytest

from omegalab.codec import (
    Dyadic,
    ONE,
    ZERO,
    Violation,
    binary_expansion,
    compare,
    decode_gamma,
    encode_gamma,
    find_prefix_violation,
    is_prefix_free,
    kraft_sum,
    pack_bits,
    unpack_bits,
)
from omegalab.errors import DemandMoreBits, DomainError


class TestGamma:
    @pytest.mark.parametrize("n,code", [(1, "1"), (2, "010"), (4, "00100")])
    def test_encode_examples(self, n, code):
        assert encode_gamma(n) == code

    def test_encode_rejects_zero(self):
        with pytest.raises(DomainError):
            encode_gamma(0)

    @pytest.mark.parametrize("stream,offset,expect", [
        ("1", 0, (1, 1)),
        ("00100", 0, (4, 5)),
        ("xx1", 2, (1, 1)),
    ])
    def test_decode_examples(self, stream, offset, expect):
        assert decode_gamma(stream, offset) == expect

    def test_decode_truncated_signals(self):
        with pytest.raises(DemandMoreBits):
            decode_gamma("00", 0)
        with pytest.raises(DemandMoreBits):
            decode_gamma("001", 0)
        with pytest.raises(DemandMoreBits):
            decode_gamma("", 0)

    def test_roundtrip_exhaustive(self):
        for n in range(1, 2 ** 16 + 1):
            code = encode_gamma(n)
            assert len(code) == 2 * (n.bit_length() - 1) + 1
            assert decode_gamma(code) == (n, len(code))

    def test_codes_prefix_free(self):
        codes = {encode_gamma(n) for n in range(1, 2 ** 12 + 1)}
        assert find_prefix_violation(codes) is None

    def test_decode_ignores_trailing_bits(self):
        assert decode_gamma(encode_gamma(9) + "0110", 0) == (9, len(encode_gamma(9)))


class TestDyadic:
    def test_examples(self):
        assert Dyadic(1, 3) + Dyadic(1, 3) == Dyadic(1, 2)
        assert Dyadic(1, 1) + ZERO == Dyadic(1, 1)
        assert compare(Dyadic(3, 3), Dyadic(1, 2)) == 1

    def test_normalization(self):
        assert Dyadic(4, 4) == Dyadic(1, 2)
        assert Dyadic(0, 7) == ZERO
        assert str(Dyadic(6, 4)) == "3/2^3"

    def test_subtraction_below_zero(self):
        with pytest.raises(DomainError):
            Dyadic(1, 3) - Dyadic(1, 2)

    def test_parse_roundtrip(self):
        for d in [ZERO, ONE, Dyadic(11, 4), Dyadic(5, 60)]:
            assert Dyadic.parse(str(d)) == d
        with pytest.raises(DomainError):
            Dyadic.parse("3/4")

    def test_agrees_with_big_rationals(self):
        rng = random.Random(20240917)
        for _ in range(10 ** 4):
            a = Dyadic(rng.randrange(0, 1 << 40), rng.randrange(0, 48))
            b = Dyadic(rng.randrange(0, 1 << 40), rng.randrange(0, 48))
            fa = Fraction(a.num, 1 << a.exp)
            fb = Fraction(b.num, 1 << b.exp)
            s = a + b
            assert Fraction(s.num, 1 << s.exp) == fa + fb
            assert (a < b) == (fa < fb) and (a == b) == (fa == fb)
            if fb <= fa:
                d = a - b
                assert Fraction(d.num, 1 << d.exp) == fa - fb


class TestBinaryExpansion:
    @pytest.mark.parametrize("d,k,bits", [
        (Dyadic(1, 3), 3, "001"),
        (ZERO, 4, "0000"),
        (Dyadic(11, 4), 4, "1011"),
        (ONE, 0, ""),
    ])
    def test_examples(self, d, k, bits):
        assert binary_expansion(d, k) == bits

    def test_one_with_bits_rejected(self):
        with pytest.raises(DomainError):
            binary_expansion(ONE, 1)
        with pytest.raises(DomainError):
            binary_expansion(Dyadic(3, 1), 2)


class TestKraftAndPrefixFree:
    def test_kraft_examples(self):
        assert kraft_sum({"0", "10", "11"}) == ONE
        assert kraft_sum(set()) == ZERO
        assert kraft_sum({"000"}) == Dyadic(1, 3)

    def test_prefix_free_examples(self):
        assert find_prefix_violation({"0", "10", "11"}) is None
        assert find_prefix_violation({"0", "01"}) == Violation("0", "01")
        assert find_prefix_violation(set()) is None
        assert find_prefix_violation({"", "1"}) == Violation("", "1")

    def test_violation_scan_order_deterministic(self):
        # "00" is the first member in length-lex order with a prefix present
        assert find_prefix_violation({"0", "00", "01", "000"}) == Violation("0", "00")

    def test_random_prefix_free_sets_satisfy_kraft(self):
        rng = random.Random(7)
        for _ in range(10 ** 3):
            # grow a random prefix-free set by splitting leaves of a binary tree
            leaves = [""]
            for _ in range(rng.randrange(0, 12)):
                i = rng.randrange(len(leaves))
                s = leaves.pop(i)
                leaves += [s + "0", s + "1"]
            chosen = [s for s in leaves if rng.random() < 0.7]
            assert is_prefix_free(chosen)
            assert kraft_sum(chosen) <= ONE


class TestPackBits:
    def test_roundtrip_and_order(self):
        strings = ["", "0", "1", "00", "01", "10", "11", "000", "0110"]
        keys = [pack_bits(s) for s in strings]
        assert keys == sorted(keys)
        assert [unpack_bits(k) for k in keys] == strings
        with pytest.raises(DomainError):
            unpack_bits(0)
