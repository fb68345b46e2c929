"""
Finite words, the prefix maps sigma_n and dense word sets

A word of length l is indexed MSB-first: letter xi_1 is bit l-1 of the
index. Prepending letter b to every word of a set is then a single shift
of the membership bitmap by b * 2^(l-1).
"""
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Tuple

from ..errors import DomainError, ResourceRefusal

XI_ENUMERATION_LIMIT_BITS = 30


@dataclass(frozen=True)
class Word:
    bits: Tuple[int, ...] = ()

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise DomainError(f"word letters must be 0 or 1: {self.bits}")

    @classmethod
    def parse(cls, text: str) -> "Word":
        if any(ch not in "01" for ch in text):
            raise DomainError(f"not a bit string: {text!r}")
        return cls(tuple(int(ch) for ch in text))

    def __len__(self) -> int:
        return len(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)

    def prefix(self, length: int) -> "Word":
        if length > len(self.bits):
            raise DomainError(f"prefix of length {length} from a word of length {len(self.bits)}")
        return Word(self.bits[:length])

    def pad(self, length: int, fill: int = 0) -> "Word":
        """Extend with `fill` up to `length` (no-op when already long enough)"""
        if len(self.bits) >= length:
            return self
        return Word(self.bits + (fill,) * (length - len(self.bits)))


def index_of(w: Word) -> int:
    idx = 0
    for b in w.bits:
        idx = (idx << 1) | b
    return idx


def word_of(idx: int, length: int) -> Word:
    if length < 0 or not 0 <= idx < (1 << length):
        raise DomainError(f"index {idx} outside [0, 2^{length})")
    return Word(tuple((idx >> (length - 1 - i)) & 1 for i in range(length)))


def sigma(w: Word, n: int) -> Word:
    """sigma_n: the prefix of length 2(n-1)"""
    if n < 1:
        raise DomainError(f"sigma_n needs n >= 1, got {n}")
    need = 2 * (n - 1)
    if len(w) < need:
        raise DomainError(f"sigma_{n} needs a word of length >= {need}, got {len(w)}")
    return w.prefix(need)


def xi_cardinality(n: int) -> int:
    return 1 << (2 * (n - 1))


def enumerate_xi(n: int) -> Iterator[Word]:
    """All words of Xi_n = {0,1}^(2(n-1)) in index order"""
    if n < 1:
        raise DomainError(f"Xi_n needs n >= 1, got {n}")
    length = 2 * (n - 1)
    if length > XI_ENUMERATION_LIMIT_BITS:
        raise ResourceRefusal(
            f"refusing to enumerate Xi_{n}: 2^{length} words exceeds 2^{XI_ENUMERATION_LIMIT_BITS}",
            limit="2^(2(n-1))",
        )
    for idx in range(1 << length):
        yield word_of(idx, length)


@dataclass(frozen=True)
class WordSet:
    length: int
    bitmap: int = 0

    def __post_init__(self):
        if self.length < 0:
            raise DomainError("word length must be nonnegative")
        if self.bitmap < 0 or self.bitmap >> (1 << self.length):
            raise DomainError("bitmap has members outside {0,1}^length")

    @classmethod
    def empty(cls, length: int) -> "WordSet":
        return cls(length, 0)

    @classmethod
    def full(cls, length: int) -> "WordSet":
        return cls(length, (1 << (1 << length)) - 1)

    @classmethod
    def of(cls, length: int, words: Iterable[Word]) -> "WordSet":
        bitmap = 0
        for w in words:
            if len(w) != length:
                raise DomainError(f"word {w} does not have length {length}")
            bitmap |= 1 << index_of(w)
        return cls(length, bitmap)

    def __contains__(self, w: Word) -> bool:
        return len(w) == self.length and (self.bitmap >> index_of(w)) & 1 == 1

    def __len__(self) -> int:
        return self.bitmap.bit_count()

    def __iter__(self) -> Iterator[Word]:
        return (word_of(i, self.length) for i in self.indices())

    def __or__(self, other: "WordSet") -> "WordSet":
        if other.length != self.length:
            raise DomainError("union of word sets of different lengths")
        return WordSet(self.length, self.bitmap | other.bitmap)

    def __le__(self, other: "WordSet") -> bool:
        return self.length == other.length and self.bitmap & ~other.bitmap == 0

    def indices(self) -> Iterator[int]:
        bm = self.bitmap
        while bm:
            low = bm & -bm
            yield low.bit_length() - 1
            bm ^= low

    def is_full(self) -> bool:
        return self.bitmap == (1 << (1 << self.length)) - 1

    def project_prefix(self) -> "WordSet":
        """Words of length l-1 obtained by dropping the last letter"""
        if self.length == 0:
            raise DomainError("the empty word has no proper prefix")
        bitmap = 0
        for i in self.indices():
            bitmap |= 1 << (i >> 1)
        return WordSet(self.length - 1, bitmap)

    def to_hex(self) -> str:
        return f"{self.length}:{self.bitmap:x}"

    @classmethod
    def from_hex(cls, text: str) -> "WordSet":
        length, _, hexbits = text.partition(":")
        return cls(int(length), int(hexbits or "0", 16))


def extend(b: int, s: WordSet) -> WordSet:
    """{b.w : w in s}, a set of words one letter longer"""
    if b not in (0, 1):
        raise DomainError(f"letter must be 0 or 1, got {b}")
    return WordSet(s.length + 1, s.bitmap << (b << s.length))


def union_all(length: int, sets: Sequence[WordSet]) -> WordSet:
    bitmap = 0
    for s in sets:
        bitmap |= s.bitmap
    return WordSet(length, bitmap)
