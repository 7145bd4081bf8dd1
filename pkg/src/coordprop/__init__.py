"""Coordinated online behavior and propaganda: co-retweet networks, community
detection, coordination scores, propaganda classification and trend analysis.
"""

from .communities import dismantle, louvain, modularity
from .corpus import Corpus, load_corpus
from .measures import MEASURES, community_trend, informativeness
from .simnet import SimilarityNetwork, backbone, similarity_network
from .stats import pearson

__version__ = "0.1.0"

__all__ = [
    "MEASURES",
    "Corpus",
    "SimilarityNetwork",
    "backbone",
    "community_trend",
    "dismantle",
    "informativeness",
    "load_corpus",
    "louvain",
    "modularity",
    "pearson",
    "similarity_network",
]
