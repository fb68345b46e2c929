"""
Tests for words, sigma_n and word-set bitmaps
"""
import pytest

from app.backend.errors import DomainError, ResourceRefusal
from app.backend.services.words import (
    Word,
    WordSet,
    enumerate_xi,
    extend,
    index_of,
    sigma,
    union_all,
    word_of,
    xi_cardinality,
)


class TestWord:
    def test_msb_first_index(self):
        assert index_of(Word.parse("10")) == 2
        assert index_of(Word.parse("0001")) == 1
        assert str(word_of(5, 3)) == "101"

    def test_index_out_of_range(self):
        with pytest.raises(DomainError):
            word_of(8, 3)

    def test_rejects_non_bits(self):
        with pytest.raises(DomainError):
            Word.parse("012")
        with pytest.raises(DomainError):
            Word((0, 2))

    def test_pad(self):
        assert str(Word.parse("1").pad(4)) == "1000"
        assert str(Word.parse("11").pad(4, fill=1)) == "1111"
        assert Word.parse("101").pad(2) == Word.parse("101")


class TestSigma:
    """sigma_n keeps the first 2(n-1) letters"""

    def test_prefix(self):
        assert str(sigma(Word.parse("010111"), 2)) == "01"
        assert len(sigma(Word.parse("0101"), 1)) == 0

    def test_short_word_raises(self):
        with pytest.raises(DomainError):
            sigma(Word.parse("01"), 3)

    def test_xi_enumeration(self):
        words = list(enumerate_xi(2))
        assert [str(w) for w in words] == ["00", "01", "10", "11"]
        assert xi_cardinality(4) == 64
        assert sum(1 for _ in enumerate_xi(4)) == 64

    def test_xi_enumeration_guard(self):
        with pytest.raises(ResourceRefusal):
            next(enumerate_xi(17))


class TestWordSet:
    """Dense bitmaps indexed by word"""

    def test_extend_prepends_letter(self):
        s = WordSet.of(1, [Word.parse("0")])
        assert Word.parse("10") in extend(1, s)
        assert Word.parse("00") in extend(0, s)
        assert len(extend(1, s)) == 1

    def test_extend_full_set(self):
        both = extend(0, WordSet.full(2)) | extend(1, WordSet.full(2))
        assert both.is_full()
        assert len(both) == 8

    def test_membership_and_iteration(self):
        words = [Word.parse("011"), Word.parse("110")]
        s = WordSet.of(3, words)
        assert sorted(str(w) for w in s) == ["011", "110"]
        assert Word.parse("010") not in s
        assert Word.parse("01") not in s

    def test_project_prefix(self):
        s = WordSet.of(2, [Word.parse("10"), Word.parse("11")])
        assert s.project_prefix() == WordSet.of(1, [Word.parse("1")])

    def test_subset(self):
        a = WordSet.of(2, [Word.parse("10")])
        assert a <= WordSet.full(2)
        assert not WordSet.full(2) <= a

    def test_hex_round_trip(self):
        s = WordSet.of(3, [Word.parse("000"), Word.parse("111")])
        assert s.to_hex() == "3:81"
        assert WordSet.from_hex(s.to_hex()) == s

    def test_bitmap_outside_range_raises(self):
        with pytest.raises(DomainError):
            WordSet(1, 0b100)

    def test_union_all(self):
        parts = [WordSet.of(2, [Word.parse("00")]), WordSet.of(2, [Word.parse("11")])]
        assert len(union_all(2, parts)) == 2

    def test_union_of_different_lengths_raises(self):
        with pytest.raises(DomainError):
            WordSet.full(1) | WordSet.full(2)
