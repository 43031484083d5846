"""Finite words over the alphabet {0, ..., M-1}.

A word is a plain tuple of ints; the empty tuple is the empty word.
All enumerations are length-lexicographic.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Sequence

Word = tuple

EMPTY: Word = ()


def word(letters: Iterable[int] | str) -> Word:
    """Build a word from ints or from a string such as ``"30"`` or ``"3.0"``."""
    if isinstance(letters, str):
        return parse_word(letters)
    return tuple(int(x) for x in letters)


def parse_word(text: str) -> Word:
    text = text.strip()
    if text in ("", "-", "()"):
        return EMPTY
    if "." in text or "," in text:
        parts = text.replace(",", ".").split(".")
        return tuple(int(p) for p in parts if p != "")
    return tuple(int(ch) for ch in text)


def word_str(w: Sequence[int]) -> str:
    """Compact text form: digits run together when every letter is < 10."""
    if len(w) == 0:
        return ""
    if all(0 <= x < 10 for x in w):
        return "".join(str(x) for x in w)
    return ".".join(str(x) for x in w)


def check_alphabet(w: Sequence[int], M: int) -> None:
    for x in w:
        if not 0 <= x < M:
            raise ValueError(f"letter {x} outside alphabet {{0..{M - 1}}}")


def all_words(M: int, Lmax: int, letters: Sequence[int] | None = None) -> Iterator[Word]:
    """All words of length <= Lmax in length-lexicographic order."""
    alphabet = sorted(letters) if letters is not None else range(M)
    for n in range(Lmax + 1):
        yield from itertools.product(alphabet, repeat=n)


def is_prefix(u: Sequence[int], v: Sequence[int]) -> bool:
    return len(u) <= len(v) and tuple(v[: len(u)]) == tuple(u)


def is_irreducible(beta: Sequence[int]) -> bool:
    """True when ``beta`` is nonempty and not a power ``w^k`` with k >= 2."""
    p = len(beta)
    if p == 0:
        return False
    beta = tuple(beta)
    for d in range(1, p):
        if p % d == 0 and beta[:d] * (p // d) == beta:
            return False
    return True


def length_lex_key(w: Sequence[int]) -> tuple:
    return (len(w), tuple(w))
