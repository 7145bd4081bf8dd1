"""Text feature extraction: word/char TF-IDF, lexicon frequencies, style blocks."""

from __future__ import annotations

import math
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .text import Readability, Richness, normalize, readability, richness, tokenize

_SPACE_RE = re.compile(r"\s+")

READABILITY_NAMES = ("flesch_kincaid_grade", "flesch_reading_ease", "gunning_fog")
RICHNESS_NAMES = ("type_token_ratio", "hapax_legomena", "hapax_dislegomena")

# Extra dense blocks: name -> (feature names, fn(text, tokens) -> values)
PluggableBlock = tuple[Sequence[str], Callable[[str, list[str]], Sequence[float]]]


def word_ngrams(tokens: list[str], n_max: int = 2) -> list[str]:
    grams = list(tokens)
    for n in range(2, n_max + 1):
        grams += [" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]
    return grams


def char_ngrams(text: str, n: int = 3) -> list[str]:
    s = _SPACE_RE.sub(" ", normalize(text)).strip()
    return [s[i : i + n] for i in range(len(s) - n + 1)]


def load_lexicon(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip().lower() for line in fh if line.strip())


def load_lexicons(paths: Iterable) -> dict[str, frozenset[str]]:
    out = {}
    for p in sorted(Path(x) for x in paths):
        if p.stem in out:
            raise ValueError(f"two lexicon files named {p.stem!r}")
        out[p.stem] = load_lexicon(p)
    return out


@dataclass
class FeatureVector:
    word: dict[int, float]
    char: dict[int, float]
    lexicon: dict[str, float]
    readability: Readability
    richness: Richness
    extra: dict[str, tuple[float, ...]] = field(default_factory=dict)

    def dense(self) -> list[float]:
        vals = list(self.lexicon.values())
        vals += self.readability.as_tuple() + self.richness.as_tuple()
        for block in self.extra.values():
            vals += block
        return vals


@dataclass
class _Tfidf:
    vocab: dict[str, int]
    idf: np.ndarray

    @classmethod
    def fit(cls, docs: list[list[str]], min_df: int) -> "_Tfidf":
        df = Counter()
        for grams in docs:
            df.update(set(grams))
        terms = sorted(t for t, c in df.items() if c >= min_df)
        n = len(docs)
        return cls({t: i for i, t in enumerate(terms)}, np.array([math.log(n / df[t]) for t in terms]))

    def vector(self, grams: list[str]) -> dict[int, float]:
        tf = Counter(self.vocab[g] for g in grams if g in self.vocab)
        vec = {i: c * self.idf[i] for i, c in sorted(tf.items()) if self.idf[i] > 0.0}
        norm = math.sqrt(sum(v * v for v in vec.values()))
        return {i: v / norm for i, v in vec.items()} if norm > 0 else {}


class FeatureExtractor:
    """Fitted feature tables.  ``fit`` freezes the vocabularies and dense scaling."""

    def __init__(
        self,
        lexicons: Mapping[str, frozenset[str]] | None = None,
        ngram_max: int = 2,
        min_df: int = 2,
        char_n: int = 3,
        extra_blocks: Mapping[str, PluggableBlock] | None = None,
    ):
        self.lexicons = dict(sorted((lexicons or {}).items()))
        self.ngram_max = ngram_max
        self.min_df = min_df
        self.char_n = char_n
        self.extra_blocks = dict(extra_blocks or {})
        self.word: _Tfidf | None = None
        self.char: _Tfidf | None = None
        self.dense_mean: np.ndarray | None = None
        self.dense_scale: np.ndarray | None = None

    @property
    def fitted(self) -> bool:
        return self.word is not None

    def dense_names(self) -> list[str]:
        names = [f"lexicon:{k}" for k in self.lexicons]
        names += [f"readability:{k}" for k in READABILITY_NAMES]
        names += [f"richness:{k}" for k in RICHNESS_NAMES]
        for block, (fnames, _) in self.extra_blocks.items():
            names += [f"{block}:{f}" for f in fnames]
        return names

    @property
    def n_features(self) -> int:
        return len(self.word.vocab) + len(self.char.vocab) + len(self.dense_names())

    def fit(self, texts: Sequence[str], threads: int = 1) -> "FeatureExtractor":
        self.fit_transform(texts, threads)
        return self

    def fit_transform(self, texts: Sequence[str], threads: int = 1) -> sparse.csr_matrix:
        toks = [tokenize(t) for t in texts]
        self.word = _Tfidf.fit([word_ngrams(t, self.ngram_max) for t in toks], self.min_df)
        self.char = _Tfidf.fit([char_ngrams(t, self.char_n) for t in texts], self.min_df)
        fvs = self.extract_many(texts, threads)
        dense = np.array([v.dense() for v in fvs], dtype=float).reshape(len(fvs), -1)
        self.dense_mean = dense.mean(axis=0)
        std = dense.std(axis=0)
        self.dense_scale = np.where(std > 0, std, 1.0)
        return self._stack(fvs)

    def extract(self, text: str) -> FeatureVector:
        if self.word is None:
            raise RuntimeError("feature extractor is not fitted")
        if not text.strip():
            raise ValueError("cannot extract features from empty text")
        tokens = tokenize(text)
        n = len(tokens)
        lex = {name: (sum(1 for t in tokens if t in words) / n if n else 0.0) for name, words in self.lexicons.items()}
        extra = {name: tuple(float(x) for x in fn(text, tokens)) for name, (_, fn) in self.extra_blocks.items()}
        return FeatureVector(
            word=self.word.vector(word_ngrams(tokens, self.ngram_max)),
            char=self.char.vector(char_ngrams(text, self.char_n)),
            lexicon=lex,
            readability=readability(text),
            richness=richness(tokens),
            extra=extra,
        )

    def extract_many(self, texts: Sequence[str], threads: int = 1) -> list[FeatureVector]:
        if threads > 1 and len(texts) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return list(pool.map(self.extract, texts))
        return [self.extract(t) for t in texts]

    def to_row_parts(self, fv: FeatureVector) -> tuple[list[int], list[float]]:
        nw, nc = len(self.word.vocab), len(self.char.vocab)
        cols = list(fv.word.keys()) + [nw + i for i in fv.char.keys()]
        vals = list(fv.word.values()) + list(fv.char.values())
        dense = (np.asarray(fv.dense(), dtype=float) - self.dense_mean) / self.dense_scale
        for j, v in enumerate(dense):
            if v != 0.0:
                cols.append(nw + nc + j)
                vals.append(float(v))
        return cols, vals

    def transform(self, texts: Sequence[str], threads: int = 1) -> sparse.csr_matrix:
        return self._stack(self.extract_many(texts, threads))

    def _stack(self, fvs: Sequence[FeatureVector]) -> sparse.csr_matrix:
        indptr, indices, data = [0], [], []
        for fv in fvs:
            cols, vals = self.to_row_parts(fv)
            indices += cols
            data += vals
            indptr.append(len(indices))
        return sparse.csr_matrix(
            (np.array(data, dtype=float), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
            shape=(len(fvs), self.n_features),
        )

    def to_dict(self) -> dict:
        if self.extra_blocks:
            raise ValueError("extractors with pluggable blocks cannot be serialized; re-register the blocks")
        return {
            "ngram_max": self.ngram_max,
            "min_df": self.min_df,
            "char_n": self.char_n,
            "lexicons": {k: sorted(v) for k, v in self.lexicons.items()},
            "word_vocab": sorted(self.word.vocab, key=self.word.vocab.get),
            "word_idf": self.word.idf.tolist(),
            "char_vocab": sorted(self.char.vocab, key=self.char.vocab.get),
            "char_idf": self.char.idf.tolist(),
            "dense_mean": self.dense_mean.tolist(),
            "dense_scale": self.dense_scale.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureExtractor":
        fx = cls({k: frozenset(v) for k, v in d["lexicons"].items()}, d["ngram_max"], d["min_df"], d["char_n"])
        fx.word = _Tfidf({t: i for i, t in enumerate(d["word_vocab"])}, np.array(d["word_idf"], dtype=float))
        fx.char = _Tfidf({t: i for i, t in enumerate(d["char_vocab"])}, np.array(d["char_idf"], dtype=float))
        fx.dense_mean = np.array(d["dense_mean"], dtype=float)
        fx.dense_scale = np.array(d["dense_scale"], dtype=float)
        return fx


def extract_features(text: str, vocab: FeatureExtractor) -> FeatureVector:
    return vocab.extract(text)
