"""Tokenization, syllable counting, readability and vocabulary-richness features."""

from __future__ import annotations

import re
from collections import Counter
from functools import lru_cache
from dataclasses import dataclass

URL_TOKEN = "<url>"
MENTION_TOKEN = "<user>"

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_WORD_RE = re.compile(r"<url>|<user>|\w+(?:['’]\w+)*")
_SENT_RE = re.compile(r"[.!?]+")
_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")


def normalize(text: str) -> str:
    """Lowercase and replace URLs and @-mentions with placeholder tokens."""
    text = _URL_RE.sub(f" {URL_TOKEN} ", text)
    text = _MENTION_RE.sub(f" {MENTION_TOKEN} ", text)
    return text.lower()


def tokenize(text: str) -> list[str]:
    return _WORD_RE.findall(normalize(text))


def count_tokens(text: str) -> int:
    return len(tokenize(text))


@lru_cache(maxsize=65536)
def count_syllables(word: str) -> int:
    """Vowel-group syllable heuristic.

    Each maximal run of ``aeiouy`` is one syllable.  A trailing silent ``e`` is
    dropped (but not in ``-le`` endings after a consonant, e.g. "table"), and
    every word has at least one syllable.
    """
    w = "".join(ch for ch in word.lower() if ch.isalpha())
    if not w:
        return 0
    n = len(_VOWEL_GROUP_RE.findall(w))
    if w.endswith("e") and not w.endswith(("ee", "ye")) and n > 1:
        if not (w.endswith("le") and len(w) > 2 and w[-3] not in "aeiouy"):
            n -= 1
    return max(1, n)


def flesch_reading_ease(words: int, sentences: int, syllables: int) -> float:
    return 206.835 - 1.015 * (words / sentences) - 84.6 * (syllables / words)


def flesch_kincaid_grade(words: int, sentences: int, syllables: int) -> float:
    return 0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59


def gunning_fog(words: int, sentences: int, complex_words: int) -> float:
    return 0.4 * ((words / sentences) + 100.0 * (complex_words / words))


@dataclass(frozen=True)
class Readability:
    flesch_kincaid_grade: float
    flesch_reading_ease: float
    gunning_fog: float
    degenerate: bool = False

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.flesch_kincaid_grade, self.flesch_reading_ease, self.gunning_fog)


def readability(text: str) -> Readability:
    """Readability scores from the raw text.

    Words are alphabetic tokens (URLs and mentions excluded).  Text with words
    but no terminal punctuation counts as one sentence; text without words is
    degenerate and scores zero.
    """
    words = [t for t in tokenize(text) if t not in (URL_TOKEN, MENTION_TOKEN) and any(c.isalpha() for c in t)]
    if not words:
        return Readability(0.0, 0.0, 0.0, degenerate=True)
    stripped = _URL_RE.sub(" ", text)
    sentences = sum(1 for s in _SENT_RE.split(stripped) if re.search(r"[^\W\d_]", s))
    sentences = max(1, sentences)
    syl = [count_syllables(w) for w in words]
    n_complex = sum(1 for s in syl if s >= 3)
    n, total = len(words), sum(syl)
    return Readability(
        flesch_kincaid_grade(n, sentences, total),
        flesch_reading_ease(n, sentences, total),
        gunning_fog(n, sentences, n_complex),
    )


@dataclass(frozen=True)
class Richness:
    type_token_ratio: float
    hapax_legomena: int
    hapax_dislegomena: int

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.type_token_ratio, float(self.hapax_legomena), float(self.hapax_dislegomena))


def richness(tokens: list[str]) -> Richness:
    if not tokens:
        return Richness(0.0, 0, 0)
    counts = Counter(tokens)
    freq = Counter(counts.values())
    return Richness(len(counts) / len(tokens), freq.get(1, 0), freq.get(2, 0))
