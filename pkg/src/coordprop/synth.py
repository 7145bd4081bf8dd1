"""Synthetic corpora with planted coordinated communities and controlled propaganda rates.

Coordination is planted through shared retweet pools: a member with
coordination level rho draws each retweet from its community's pool with
probability rho and from a global pool otherwise.  A few broker accounts
retweet from two neighbouring pools and hold the network together.  Original tweets come in
chunk-sized blocks; each block is written from the propaganda vocabulary
with the member's propaganda rate pi, from the neutral vocabulary otherwise.
The two vocabularies are disjoint, so the text problem is separable.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Article, Corpus, Tweet, UserSignal, write_corpus

PROPAGANDA_WORDS = (
    "traitors enemy betrayal invasion destroy corrupt elite puppets lies treason "
    "disaster shameful radical extremist cowards scandal regime rigged sabotage "
    "brainwashed globalist tyranny outrage crooked evil menace crisis surrender "
    "humiliation catastrophe propaganda coverup stolen fraud liars parasites "
    "conspiracy collapse chaos patriots wake rise fight crush sellout hypocrites "
    "vile sinister doomed rotten scum poison ruin agenda weak pathetic"
).split()

NEUTRAL_WORDS = (
    "policy budget council report hospital school transport housing survey "
    "committee review proposal funding climate energy research community local "
    "voters candidate debate manifesto constituency turnout poll result interview "
    "discussion analysis statement minister spending investment infrastructure "
    "education training pension healthcare library museum weather railway bridge "
    "garden market festival volunteers charity meeting update schedule agreement"
).split()

FILLER_WORDS = "the a and of to in on for with is are was this that it we they".split()

FRAMES = ("economy", "political", "public_opinion", "policy_prescription")

TWEET_TOKENS = 20
CHUNK_TWEETS = 20


@dataclass
class CommunitySpec:
    size: int
    rho: float
    pi: float
    automation_level: float = 0.2
    suspension_rate: float = 0.05
    # spread of members' coordination below rho, and slopes of pi / signals
    # along the planted coordination rank (rank 0 = least, 1 = most coordinated)
    rho_spread: float = 0.0
    pi_slope: float = 0.0
    automation_slope: float = 0.0
    suspension_slope: float = 0.0

    def __post_init__(self):
        if self.size < 2:
            raise ValueError(f"community size must be >= 2, got {self.size}")
        for name in ("rho", "pi", "automation_level", "suspension_rate", "rho_spread"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


@dataclass
class ScenarioConfig:
    communities: list[CommunitySpec]
    pool_size: int = 60
    global_pool_size: int = 2000
    retweets_per_user: tuple[int, int] = (200, 300)
    chunks_per_user: int = 5
    articles_per_user: int = 4
    articles_per_frame: int = 20
    crowd_users: int = 400
    # brokers per pair of consecutive communities: accounts retweeting both
    # pools, which keep the backbone connected as real debate networks are
    brokers: int = 3
    broker_rho: float = 0.9
    background_users: int = 0
    max_users: int = 100_000
    seed: int = 0

    def __post_init__(self):
        self.communities = [c if isinstance(c, CommunitySpec) else CommunitySpec(**c) for c in self.communities]
        self.retweets_per_user = tuple(self.retweets_per_user)
        if not self.communities:
            raise ValueError("scenario needs at least one community")
        lo, hi = self.retweets_per_user
        if not 1 <= lo <= hi:
            raise ValueError(f"bad retweets_per_user range {self.retweets_per_user}")
        if self.brokers < 0 or not 0.0 <= self.broker_rho <= 1.0:
            raise ValueError("brokers must be >= 0 and broker_rho in [0, 1]")
        if self.pool_size < 1 or self.global_pool_size < 1:
            raise ValueError("retweet pools must be non-empty")
        total = sum(c.size for c in self.communities) + self.crowd_users + self.background_users
        total += self.brokers * (len(self.communities) - 1)
        if total > self.max_users:
            raise ValueError(f"scenario needs {total} users but the user budget is {self.max_users}")

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        return cls(**d)


@dataclass
class GroundTruth:
    community: dict[str, int]
    rank: dict[str, float]
    rho: dict[str, float]
    pi: dict[str, float]
    config: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1)


def _clip01(x: float) -> float:
    return min(1.0, max(0.0, x))


def _sentence(rng, vocab, n) -> str:
    words = []
    for _ in range(n):
        pool = FILLER_WORDS if rng.random() < 0.25 else vocab
        words.append(pool[rng.integers(len(pool))])
    return " ".join(words).capitalize() + "."


def template_text(rng, propaganda: bool, n_tokens: int) -> str:
    vocab = PROPAGANDA_WORDS if propaganda else NEUTRAL_WORDS
    parts, left = [], n_tokens
    while left > 0:
        n = min(left, int(rng.integers(8, 16)))
        parts.append(_sentence(rng, vocab, n))
        left -= n
    return " ".join(parts)


def _user_ids(rng, n, used) -> list[str]:
    out = []
    while len(out) < n:
        uid = f"u{int(rng.integers(16**8)):08x}"
        if uid not in used:
            used.add(uid)
            out.append(uid)
    return out


def generate(config: ScenarioConfig) -> tuple[Corpus, GroundTruth]:
    rng = np.random.default_rng(config.seed)
    used: set[str] = set()
    tweets: list[Tweet] = []
    t0 = 1_573_516_800  # campaign start, UTC

    def tid() -> str:
        return f"t{len(tweets):09d}"

    # pool tweets are originals by source accounts outside the network
    global_sources = _user_ids(rng, 10, used)
    global_pool = []
    for i in range(config.global_pool_size):
        t = Tweet(tid(), global_sources[i % len(global_sources)], t0 + i, template_text(rng, False, 12))
        tweets.append(t)
        global_pool.append(t.tweet_id)
    community_pools = []
    for ci, _ in enumerate(config.communities):
        src = _user_ids(rng, 3, used)
        pool = []
        for i in range(config.pool_size):
            t = Tweet(tid(), src[i % 3], t0 + 10_000 + ci * 1000 + i, template_text(rng, bool(ci % 2), 12))
            tweets.append(t)
            pool.append(t.tweet_id)
        community_pools.append(pool)

    articles = []
    prop_articles, neutral_articles = [], []
    for frame in FRAMES:
        for j in range(config.articles_per_frame):
            prop = j % 2 == 0
            url = f"https://news.example.org/{frame}/{j:03d}"
            articles.append(Article(url, f"{frame} story {j}", template_text(rng, prop, 150), frame))
            (prop_articles if prop else neutral_articles).append(url)

    truth = GroundTruth({}, {}, {}, {}, asdict(config))
    signals = []
    lo, hi = config.retweets_per_user
    ts = t0 + 100_000
    for ci, spec in enumerate(config.communities):
        members = _user_ids(rng, spec.size, used)
        for j, user in enumerate(members):
            rank = j / (spec.size - 1)
            rho_u = spec.rho * (1.0 - spec.rho_spread * (1.0 - rank))
            pi_u = _clip01(spec.pi + spec.pi_slope * (rank - 0.5))
            truth.community[user] = ci
            truth.rank[user] = rank
            truth.rho[user] = rho_u
            truth.pi[user] = pi_u

            for _ in range(int(rng.integers(lo, hi + 1))):
                if rng.random() < rho_u:
                    target = community_pools[ci][rng.integers(config.pool_size)]
                else:
                    target = global_pool[rng.integers(config.global_pool_size)]
                ts += 1
                tweets.append(Tweet(tid(), user, ts, "RT", retweeted_id=target))

            shared = []
            for _ in range(config.articles_per_user):
                pool = prop_articles if rng.random() < pi_u else neutral_articles
                shared.append(pool[rng.integers(len(pool))])
            for c in range(config.chunks_per_user):
                prop = bool(rng.random() < pi_u)
                for k in range(CHUNK_TWEETS):
                    ts += 1
                    n = c * CHUNK_TWEETS + k
                    urls = (shared[n],) if n < len(shared) else ()
                    tweets.append(Tweet(tid(), user, ts, template_text(rng, prop, TWEET_TOKENS), urls=urls))

            auto = _clip01(spec.automation_level + spec.automation_slope * (rank - 0.5) + rng.normal(0, 0.05))
            p_susp = _clip01(spec.suspension_rate + spec.suspension_slope * (rank - 0.5))
            signals.append(UserSignal(user, round(auto, 6), bool(rng.random() < p_susp)))

    # brokers: split between two neighbouring pools, no original tweets or signals
    for ci in range(len(config.communities) - 1):
        for user in _user_ids(rng, config.brokers, used):
            for _ in range(int(rng.integers(lo, hi + 1))):
                ts += 1
                if rng.random() < config.broker_rho:
                    pool = community_pools[ci + int(rng.random() < 0.5)]
                    target = pool[rng.integers(config.pool_size)]
                else:
                    target = global_pool[rng.integers(config.global_pool_size)]
                tweets.append(Tweet(tid(), user, ts, "RT", retweeted_id=target))

    # crowd: heavy retweeters of the global pool only (uncoordinated superspreaders)
    for user in _user_ids(rng, config.crowd_users, used):
        for _ in range(int(rng.integers(lo, hi + 1))):
            ts += 1
            target = global_pool[rng.integers(config.global_pool_size)]
            tweets.append(Tweet(tid(), user, ts, "RT", retweeted_id=target))
        for k in range(CHUNK_TWEETS):
            ts += 1
            tweets.append(Tweet(tid(), user, ts, template_text(rng, False, TWEET_TOKENS)))
        signals.append(UserSignal(user, round(float(rng.uniform(0, 0.3)), 6), False))

    # background: light retweeters that only matter for superspreader ranking
    for user in _user_ids(rng, config.background_users, used):
        for _ in range(int(rng.integers(1, 4))):
            ts += 1
            target = global_pool[rng.integers(config.global_pool_size)]
            tweets.append(Tweet(tid(), user, ts, "RT", retweeted_id=target))
        ts += 1
        tweets.append(Tweet(tid(), user, ts, template_text(rng, False, TWEET_TOKENS)))
        signals.append(UserSignal(user, round(float(rng.uniform(0, 0.3)), 6), False))

    return Corpus.build(tweets, articles, signals), truth


def training_corpus(n_items: int = 1000, seed: int = 0, n_tokens=(100, 500)) -> list[tuple[str, int]]:
    """Labelled template texts, half propagandistic, in random order.

    ``n_tokens`` is a fixed length or an inclusive ``(lo, hi)`` range; a range
    covers both article-length and chunk-length texts.
    """
    rng = np.random.default_rng(seed)
    lo, hi = (n_tokens, n_tokens) if isinstance(n_tokens, int) else n_tokens
    labels = [i % 2 for i in range(n_items)]
    rng.shuffle(labels)
    return [(template_text(rng, bool(lbl), int(rng.integers(lo, hi + 1))), int(lbl)) for lbl in labels]


def write_scenario(corpus: Corpus, truth: GroundTruth, out_dir, training_items: int = 400) -> dict[str, Path]:
    out_dir = Path(out_dir)
    paths = write_corpus(corpus, out_dir)
    paths["ground_truth"] = out_dir / "ground_truth.json"
    paths["ground_truth"].write_text(truth.to_json() + "\n", encoding="utf-8")
    if training_items:
        paths["training"] = out_dir / "training.jsonl"
        seed = int(truth.config.get("seed", 0)) + 1
        with open(paths["training"], "w", encoding="utf-8", newline="\n") as fh:
            for text, label in training_corpus(training_items, seed):
                fh.write(json.dumps({"text": text, "label": label}, sort_keys=True) + "\n")
    return paths


def adjusted_rand_index(truth: dict, pred: dict) -> float:
    """ARI over the users present in both labelings."""
    users = sorted(set(truth) & set(pred))
    n = len(users)
    if n < 2:
        return 1.0
    pairs = Counter((truth[u], pred[u]) for u in users)
    a = Counter(truth[u] for u in users)
    b = Counter(pred[u] for u in users)

    def c2(x):
        return x * (x - 1) / 2.0

    index = sum(c2(v) for v in pairs.values())
    sa = sum(c2(v) for v in a.values())
    sb = sum(c2(v) for v in b.values())
    expected = sa * sb / c2(n)
    max_index = (sa + sb) / 2.0
    if max_index == expected:
        return 1.0
    return (index - expected) / (max_index - expected)
