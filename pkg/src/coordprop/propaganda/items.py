"""Text items (articles and tweet chunks) and chunking of users' original tweets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from ..corpus import Corpus
from .text import count_tokens

MIN_TAIL_FRACTION = 0.25


@dataclass(frozen=True)
class TextItem:
    item_id: str
    kind: Literal["article", "tweet_chunk"]
    text: str
    owner: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError(f"item {self.item_id} has empty text")


def chunk_tweets(corpus: Corpus, user: str, target_tokens: int = 400) -> list[TextItem]:
    """Group a user's original tweets, oldest first, into chunks of about ``target_tokens``.

    A chunk closes as soon as it reaches ``target_tokens``.  A trailing chunk
    shorter than a quarter of the target is folded into the previous one.
    """
    if target_tokens < 50:
        raise ValueError(f"target_tokens must be >= 50, got {target_tokens}")
    originals = sorted(
        (t for t in corpus.user_tweets(user) if not t.is_retweet and t.text.strip()),
        key=lambda t: (t.timestamp, t.tweet_id),
    )
    groups: list[list[str]] = []
    cur: list[str] = []
    n = 0
    for t in originals:
        cur.append(t.text)
        n += count_tokens(t.text)
        if n >= target_tokens:
            groups.append(cur)
            cur, n = [], 0
    if cur:
        if groups and n < MIN_TAIL_FRACTION * target_tokens:
            groups[-1].extend(cur)
        else:
            groups.append(cur)
    return [
        TextItem(f"{user}#chunk{i}", "tweet_chunk", "\n".join(texts), user)
        for i, texts in enumerate(groups)
    ]


def article_items(corpus: Corpus, user: str) -> list[TextItem]:
    """Distinct articles shared by ``user`` as items owned by their url."""
    return [
        TextItem(url, "article", corpus.articles[url].text, url)
        for url in corpus.shared_articles(user)
    ]
