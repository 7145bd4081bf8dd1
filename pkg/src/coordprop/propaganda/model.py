"""L2-regularized maximum-entropy (logistic) propaganda classifier."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize, sparse
from scipy.special import expit, log_expit

from .features import FeatureExtractor
from .items import TextItem

MODEL_FORMAT = "coordprop-propaganda-model"
MODEL_VERSION = 1


class TrainingError(ValueError):
    pass


def logistic_loss_grad(w: np.ndarray, b: float, X, y: np.ndarray, lam: float) -> tuple[float, np.ndarray, float]:
    """Mean log-loss plus ``lam / 2 * ||w||^2`` (bias unpenalized), with its gradient.

    Returns ``(loss, grad_w, grad_b)``.
    """
    z = X @ w + b
    n = len(y)
    # -[y log s(z) + (1-y) log s(-z)]
    loss = -(y * log_expit(z) + (1.0 - y) * log_expit(-z)).sum() / n + 0.5 * lam * float(w @ w)
    r = (expit(z) - y) / n
    grad_w = np.asarray(X.T @ r).ravel() + lam * w
    return float(loss), grad_w, float(r.sum())


@dataclass
class ItemScore:
    item_id: str
    score: float

    @property
    def label(self) -> int:
        return int(self.score > 0.5)


@dataclass
class PropagandaModel:
    features: FeatureExtractor
    weights: np.ndarray
    bias: float
    lam: float
    seed: int
    converged: bool = True
    iterations: int = 0

    def decision(self, X) -> np.ndarray:
        return np.asarray(X @ self.weights).ravel() + self.bias

    def predict_proba(self, texts: Sequence[str], threads: int = 1) -> np.ndarray:
        return expit(self.decision(self.features.transform(texts, threads)))

    def score_items(self, items: Sequence[TextItem], threads: int = 1) -> list[ItemScore]:
        probs = self.predict_proba([it.text for it in items], threads) if items else []
        return [ItemScore(it.item_id, float(p)) for it, p in zip(items, probs)]

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "lambda": self.lam,
            "seed": self.seed,
            "bias": self.bias,
            "weights": self.weights.tolist(),
            "converged": self.converged,
            "iterations": self.iterations,
            "features": self.features.to_dict(),
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    @classmethod
    def load(cls, path) -> "PropagandaModel":
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        if d.get("format") != MODEL_FORMAT:
            raise ValueError(f"{path}: not a propaganda model file")
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"{path}: unsupported model version {d.get('version')}")
        return cls(
            features=FeatureExtractor.from_dict(d["features"]),
            weights=np.array(d["weights"], dtype=float),
            bias=float(d["bias"]),
            lam=float(d["lambda"]),
            seed=int(d["seed"]),
            converged=bool(d.get("converged", True)),
            iterations=int(d.get("iterations", 0)),
        )


def fit_logistic(X, y, lam: float, max_iter: int = 1000, gtol: float = 1e-6):
    """Minimize the regularized log-loss with L-BFGS from the zero vector.

    Returns ``(w, b, converged, iterations)``; convergence means the full
    gradient norm dropped below ``gtol``.
    """
    d = X.shape[1]

    def fun(theta):
        loss, gw, gb = logistic_loss_grad(theta[:d], theta[d], X, y, lam)
        return loss, np.append(gw, gb)

    res = optimize.minimize(
        fun,
        np.zeros(d + 1),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": gtol / 10, "ftol": 0.0, "maxcor": 20},
    )
    _, grad = fun(res.x)
    return res.x[:d], float(res.x[d]), bool(np.linalg.norm(grad) < gtol), int(res.nit)


def train_classifier(
    items: Sequence[tuple[TextItem | str, int]],
    lam: float = 1e-3,
    seed: int = 0,
    lexicons=None,
    max_iter: int = 1000,
    threads: int = 1,
    extractor: FeatureExtractor | None = None,
) -> PropagandaModel:
    """Fit the feature tables and the classifier on ``(item, label)`` pairs.

    Optimization starts from zero and is deterministic; ``seed`` only fixes
    the order in which training items are presented, and is stored with the
    model.
    """
    if lam < 0:
        raise TrainingError(f"lambda must be >= 0, got {lam}")
    texts = [it.text if isinstance(it, TextItem) else it for it, _ in items]
    labels = np.array([int(lbl) for _, lbl in items], dtype=float)
    if not set(np.unique(labels)) <= {0.0, 1.0}:
        raise TrainingError("labels must be 0 or 1")
    if len(np.unique(labels)) < 2:
        raise TrainingError("training set needs at least one item of each class")
    order = np.random.default_rng(seed).permutation(len(texts))
    texts = [texts[i] for i in order]
    labels = labels[order]

    fx = extractor or FeatureExtractor(lexicons=lexicons)
    X = fx.fit_transform(texts, threads)
    w, b, converged, nit = fit_logistic(X, labels, lam, max_iter=max_iter)
    return PropagandaModel(fx, w, b, lam, seed, converged, nit)


def score_item(model: PropagandaModel, item: TextItem) -> ItemScore:
    return model.score_items([item])[0]


def read_training_corpus(path) -> list[tuple[str, int]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            if not isinstance(rec.get("text"), str) or rec.get("label") not in (0, 1):
                raise ValueError(f"{path}:{lineno}: need string 'text' and 'label' in {{0,1}}")
            out.append((rec["text"], rec["label"]))
    return out
