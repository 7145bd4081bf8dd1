import json

import pytest

from coordprop import synth
from coordprop.corpus import Corpus, Tweet
from coordprop.propaganda import train_classifier
from coordprop.simnet import SimilarityNetwork


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write((r if isinstance(r, str) else json.dumps(r)) + "\n")
    return path


def net(edges: dict, nodes=()) -> SimilarityNetwork:
    return SimilarityNetwork.from_edges({tuple(sorted(k)): w for k, w in edges.items()}, nodes)


def retweet_corpus(rts: dict[str, list[str]]) -> Corpus:
    """Corpus from ``{user: [retweeted tweet ids, ...]}``."""
    tweets, n = [], 0
    for user, targets in rts.items():
        for t in targets:
            tweets.append(Tweet(f"r{n}", user, n, "RT", retweeted_id=t))
            n += 1
    return Corpus.build(tweets)


@pytest.fixture(scope="session")
def model():
    """Classifier trained once on the synthetic separable corpus."""
    return train_classifier(synth.training_corpus(400, seed=101), lam=1e-4)
