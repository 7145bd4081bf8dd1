"""Corpus data model and JSON Lines / CSV ingestion."""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping
from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

logger = logging.getLogger(__name__)

TRACKING_PARAMS = frozenset(
    {"fbclid", "gclid", "igshid", "mc_cid", "mc_eid", "ref", "ref_src", "s", "dclid", "yclid"}
)


class CorpusError(Exception):
    """Base class for ingestion failures."""


class ParseError(CorpusError):
    def __init__(self, path, lineno: int, message: str):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class IntegrityError(CorpusError):
    pass


def canonicalize_url(url: str) -> str:
    """Lowercase scheme and host, drop the fragment and tracking parameters."""
    url = url.strip()
    parts = urlsplit(url)
    if not parts.scheme and not parts.netloc:
        return url
    query = [
        (k, v)
        for k, v in parse_qsl(parts.query, keep_blank_values=True)
        if k.lower() not in TRACKING_PARAMS and not k.lower().startswith("utm_")
    ]
    return urlunsplit(
        (parts.scheme.lower(), parts.netloc.lower(), parts.path, urlencode(query), "")
    )


@dataclass(frozen=True)
class Tweet:
    tweet_id: str
    author_id: str
    timestamp: int
    text: str
    retweeted_id: str | None = None
    quoted_id: str | None = None
    urls: tuple[str, ...] = ()

    def __post_init__(self):
        if self.retweeted_id is not None and self.retweeted_id == self.tweet_id:
            raise ValueError(f"tweet {self.tweet_id} retweets itself")
        if not math.isfinite(self.timestamp) or self.timestamp < 0:
            raise ValueError(f"tweet {self.tweet_id} has invalid timestamp {self.timestamp}")

    @property
    def is_retweet(self) -> bool:
        return self.retweeted_id is not None


@dataclass(frozen=True)
class Article:
    url: str
    title: str
    text: str
    frame: str | None = None

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"article {self.url} has empty text")


@dataclass(frozen=True)
class UserSignal:
    user_id: str
    automation_score: float
    suspended: bool

    def __post_init__(self):
        if not 0.0 <= self.automation_score <= 1.0:
            raise ValueError(
                f"automation score for {self.user_id} outside [0,1]: {self.automation_score}"
            )


@dataclass(frozen=True)
class Corpus:
    """Immutable tweet/article/signal collection.

    ``tweets`` preserves input order (after de-duplication); everything else
    is derived in :meth:`build`.
    """

    tweets: Mapping[str, Tweet]
    articles: Mapping[str, Article]
    signals: Mapping[str, UserSignal]
    users: tuple[str, ...]
    tweet_articles: Mapping[str, tuple[str, ...]]
    by_author: Mapping[str, tuple[str, ...]]
    dangling: frozenset[str]
    duplicates: int = 0

    @classmethod
    def build(
        cls,
        tweets: Iterable[Tweet],
        articles: Iterable[Article] = (),
        signals: Iterable[UserSignal] = (),
        duplicates: int = 0,
    ) -> "Corpus":
        tweet_map: dict[str, Tweet] = {}
        for t in tweets:
            tweet_map[t.tweet_id] = t
        article_map: dict[str, Article] = {}
        for a in articles:
            prev = article_map.get(a.url)
            if prev is not None and prev.text != a.text:
                raise IntegrityError(f"duplicate article url with differing text: {a.url}")
            article_map[a.url] = a
        signal_map = {s.user_id: s for s in signals}

        by_author: dict[str, list[str]] = defaultdict(list)
        links: dict[str, tuple[str, ...]] = {}
        dangling = set()
        for t in tweet_map.values():
            by_author[t.author_id].append(t.tweet_id)
            linked = tuple(dict.fromkeys(u for u in t.urls if u in article_map))
            if linked:
                links[t.tweet_id] = linked
            if t.retweeted_id is not None and t.retweeted_id not in tweet_map:
                dangling.add(t.retweeted_id)
        return cls(
            tweets=MappingProxyType(tweet_map),
            articles=MappingProxyType(article_map),
            signals=MappingProxyType(signal_map),
            users=tuple(sorted(by_author)),
            tweet_articles=MappingProxyType(links),
            by_author=MappingProxyType({u: tuple(ids) for u, ids in by_author.items()}),
            dangling=frozenset(dangling),
            duplicates=duplicates,
        )

    def user_tweets(self, user_id: str) -> list[Tweet]:
        return [self.tweets[i] for i in self.by_author.get(user_id, ())]

    def retweet_edges(self) -> list[tuple[str, str]]:
        """(retweeter, retweeted tweet id) pairs, one per retweet record."""
        return [(t.author_id, t.retweeted_id) for t in self.tweets.values() if t.is_retweet]

    def shared_articles(self, user_id: str) -> list[str]:
        """Distinct article urls linked from any of the user's tweets, in first-share order."""
        seen: dict[str, None] = {}
        for tid in self.by_author.get(user_id, ()):
            for url in self.tweet_articles.get(tid, ()):
                seen.setdefault(url, None)
        return list(seen)

    def summary(self) -> dict:
        n_rt = sum(1 for t in self.tweets.values() if t.is_retweet)
        return {
            "tweets": len(self.tweets),
            "users": len(self.users),
            "retweets": n_rt,
            "original_tweets": len(self.tweets) - n_rt,
            "articles": len(self.articles),
            "linked_tweets": len(self.tweet_articles),
            "linked_articles": len({u for v in self.tweet_articles.values() for u in v}),
            "dangling_retweet_targets": len(self.dangling),
            "duplicate_tweet_records": self.duplicates,
            "signals": len(self.signals),
        }


def _iter_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise ParseError(path, lineno, "record is not a JSON object")
            yield lineno, rec


def _opt_id(rec, key, path, lineno):
    val = rec.get(key)
    if val is None:
        return None
    if not isinstance(val, (str, int)) or isinstance(val, bool):
        raise ParseError(path, lineno, f"field '{key}' must be a string id")
    return str(val)


def _parse_tweet(rec: dict, path, lineno: int) -> Tweet:
    for key in ("id", "author_id", "ts", "text"):
        if key not in rec or rec[key] is None:
            raise ParseError(path, lineno, f"missing required field '{key}'")
    ts = rec["ts"]
    if isinstance(ts, bool) or not isinstance(ts, int):
        raise ParseError(path, lineno, "field 'ts' must be integer epoch seconds")
    if not isinstance(rec["text"], str):
        raise ParseError(path, lineno, "field 'text' must be a string")
    urls = rec.get("urls") or []
    if not isinstance(urls, list) or not all(isinstance(u, str) for u in urls):
        raise ParseError(path, lineno, "field 'urls' must be an array of strings")
    try:
        return Tweet(
            tweet_id=_opt_id(rec, "id", path, lineno),
            author_id=_opt_id(rec, "author_id", path, lineno),
            timestamp=ts,
            text=rec["text"],
            retweeted_id=_opt_id(rec, "retweeted_id", path, lineno),
            quoted_id=_opt_id(rec, "quoted_id", path, lineno),
            urls=tuple(canonicalize_url(u) for u in urls),
        )
    except ValueError as exc:
        raise ParseError(path, lineno, str(exc)) from None


def _parse_article(rec: dict, path, lineno: int) -> Article:
    for key in ("url", "title", "text"):
        if not isinstance(rec.get(key), str):
            raise ParseError(path, lineno, f"missing or non-string field '{key}'")
    frame = rec.get("frame")
    if frame is not None and not isinstance(frame, str):
        raise ParseError(path, lineno, "field 'frame' must be a string")
    try:
        return Article(canonicalize_url(rec["url"]), rec["title"], rec["text"], frame)
    except ValueError as exc:
        raise ParseError(path, lineno, str(exc)) from None


def read_signals(path) -> list[UserSignal]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"user_id", "automation_score", "suspended"} - set(reader.fieldnames or ())
        if missing:
            raise ParseError(path, 1, f"header missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, 2):
            try:
                susp = row["suspended"].strip()
                if susp not in ("0", "1"):
                    raise ValueError(f"suspended must be 0 or 1, got {susp!r}")
                out.append(
                    UserSignal(row["user_id"].strip(), float(row["automation_score"]), susp == "1")
                )
            except (ValueError, AttributeError) as exc:
                raise ParseError(path, lineno, str(exc)) from None
    return out


def load_corpus(tweet_path, article_path=None, signal_path=None) -> Corpus:
    """Read the tweet file plus optional article and signal files.

    Duplicate tweet ids keep the last record; the number of dropped
    duplicates is logged and stored on the corpus.
    """
    tweets: dict[str, Tweet] = {}
    dupes = 0
    for lineno, rec in _iter_jsonl(tweet_path):
        t = _parse_tweet(rec, tweet_path, lineno)
        if t.tweet_id in tweets:
            dupes += 1
            del tweets[t.tweet_id]
        tweets[t.tweet_id] = t
    if dupes:
        logger.warning("%s: %d duplicate tweet records (last record kept)", tweet_path, dupes)

    articles = []
    if article_path is not None:
        articles = [_parse_article(rec, article_path, n) for n, rec in _iter_jsonl(article_path)]
    signals = read_signals(signal_path) if signal_path is not None else []
    return Corpus.build(tweets.values(), articles, signals, duplicates=dupes)


def write_corpus(corpus: Corpus, out_dir) -> dict[str, Path]:
    """Write the corpus back out in the ingestion formats (tweets, articles, signals)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"tweets": out_dir / "tweets.jsonl"}
    with open(paths["tweets"], "w", encoding="utf-8", newline="\n") as fh:
        for t in corpus.tweets.values():
            rec = {"id": t.tweet_id, "author_id": t.author_id, "ts": t.timestamp, "text": t.text}
            if t.retweeted_id is not None:
                rec["retweeted_id"] = t.retweeted_id
            if t.quoted_id is not None:
                rec["quoted_id"] = t.quoted_id
            if t.urls:
                rec["urls"] = list(t.urls)
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    if corpus.articles:
        paths["articles"] = out_dir / "articles.jsonl"
        with open(paths["articles"], "w", encoding="utf-8", newline="\n") as fh:
            for a in corpus.articles.values():
                rec = {"url": a.url, "title": a.title, "text": a.text}
                if a.frame is not None:
                    rec["frame"] = a.frame
                fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    if corpus.signals:
        paths["signals"] = out_dir / "signals.csv"
        with open(paths["signals"], "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["user_id", "automation_score", "suspended"])
            for s in corpus.signals.values():
                w.writerow([s.user_id, repr(float(s.automation_score)), int(s.suspended)])
    return paths


def _pct(distinct: int, total: int) -> float | None:
    return 100.0 * distinct / total if total else None


def community_stats(corpus: Corpus, assignment: Mapping[str, object]) -> list[dict]:
    """Per-community volume table (users, article shares, tweets, distinct fractions).

    ``assignment`` maps user id to community label.  Percentages are raw
    floats (``None`` when the total is zero); round them for display only.
    """
    unknown = sorted(u for u in assignment if u not in corpus.by_author)
    if unknown:
        shown = ", ".join(unknown[:10]) + (" ..." if len(unknown) > 10 else "")
        raise CorpusError(f"{len(unknown)} assigned users not in corpus: {shown}")

    members: dict[object, list[str]] = defaultdict(list)
    for user, label in assignment.items():
        members[label].append(user)

    rows = []
    for label in sorted(members, key=lambda c: (-len(members[c]), str(c))):
        shares = 0
        distinct_articles: set[str] = set()
        n_tweets = 0
        originals: set[str] = set()
        for user in members[label]:
            for tid in corpus.by_author[user]:
                t = corpus.tweets[tid]
                n_tweets += 1
                originals.add(t.retweeted_id if t.is_retweet else t.tweet_id)
                linked = corpus.tweet_articles.get(tid, ())
                shares += len(linked)
                distinct_articles.update(linked)
        rows.append(
            {
                "community": label,
                "users": len(members[label]),
                "article_shares": shares,
                "distinct_articles": len(distinct_articles),
                "pct_distinct_articles": _pct(len(distinct_articles), shares),
                "tweets": n_tweets,
                "distinct_tweets": len(originals),
                "pct_distinct_tweets": _pct(len(originals), n_tweets),
            }
        )
    return rows


def format_pct(value: float | None) -> str:
    return "" if value is None else f"{value:.1f}%"
