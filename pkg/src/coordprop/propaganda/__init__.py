"""Propaganda scoring: features, classifier, and text items."""

from .features import FeatureExtractor, FeatureVector, extract_features, load_lexicons
from .items import TextItem, article_items, chunk_tweets
from .model import ItemScore, PropagandaModel, TrainingError, score_item, train_classifier

__all__ = [
    "FeatureExtractor",
    "FeatureVector",
    "ItemScore",
    "PropagandaModel",
    "TextItem",
    "TrainingError",
    "article_items",
    "chunk_tweets",
    "extract_features",
    "load_lexicons",
    "score_item",
    "train_classifier",
]
