"""Evaluation protocols: network reconstruction, link prediction, attribute prediction and
node classification.

Every ranking breaks score ties by ascending node indices so results never depend on
execution order.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt
from scipy.stats import rankdata
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import f1_score
from sklearn.multiclass import OneVsRestClassifier

from .embeddings import EmbeddingMatrix
from .errors import EvaluationError
from .models.report import MetricRow

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence
    from pathlib import Path

    from .graph import AttributedNetwork
    from .splits import EvalSplit
    from .tensor import Matrix

__all__ = (
    "ATTRIBUTE_NEIGHBOURS",
    "RankingResult",
    "attribute_prediction_auc",
    "attribute_scores",
    "auc_score",
    "classify",
    "cosine_matrix",
    "cosine_similarity",
    "link_prediction_auc",
    "make_classifier",
    "network_reconstruction",
    "rank_pairs",
    "write_metric_csv",
)

_log = logging.getLogger(__name__)

ATTRIBUTE_NEIGHBOURS = 10
ZERO_DENOMINATOR = 1e-12
MAX_SPLIT_REDRAWS = 20


def _values(emb: EmbeddingMatrix | Matrix) -> Matrix:
    return emb.values if isinstance(emb, EmbeddingMatrix) else np.asarray(emb, dtype=np.float64)


def cosine_similarity(u: npt.ArrayLike, v: npt.ArrayLike) -> float:
    """Cosine of the angle between ``u`` and ``v``; 0 if either is the zero vector."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape:
        msg = f"vectors differ in length: {a.shape} vs {b.shape}"
        raise EvaluationError(msg)
    norms = float(np.linalg.norm(a) * np.linalg.norm(b))
    if norms == 0.0:
        return 0.0
    return float(np.clip(a @ b / norms, -1.0, 1.0))


def cosine_matrix(values: Matrix) -> Matrix:
    """All pairwise cosine similarities between rows; zero rows score 0 against everything."""
    norms = np.linalg.norm(values, axis=1, keepdims=True)
    unit = np.divide(values, norms, out=np.zeros_like(values), where=norms > 0)
    return np.clip(unit @ unit.T, -1.0, 1.0)


@dataclass(frozen=True)
class RankingResult:
    """Ranked node pairs and the metrics read off them.

    Attributes
    ----------
    pairs: :class:`numpy.ndarray`
        ``(i, j)`` with ``i < j``, best first, truncated to the largest ``k``.
    scores: :class:`numpy.ndarray`
        Similarity of each pair; non-increasing.
    metrics: :class:`dict`
        ``precision@k`` keyed by ``k``.
    """

    pairs: npt.NDArray[np.int64]
    scores: npt.NDArray[np.float64]
    metrics: dict[int, float] = field(default_factory=dict)


def rank_pairs(
    emb: EmbeddingMatrix | Matrix,
) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.float64]]:
    """Every unordered node pair sorted by descending cosine similarity."""
    values = _values(emb)
    sims = cosine_matrix(values)
    i, j = np.triu_indices(values.shape[0], k=1)
    scores = sims[i, j]
    order = np.lexsort((j, i, -scores))
    return np.stack([i[order], j[order]], axis=1).astype(np.int64), scores[order]


def network_reconstruction(
    emb: EmbeddingMatrix | Matrix,
    net: AttributedNetwork,
    ks: Sequence[int],
) -> RankingResult:
    """Precision of the top-``k`` most similar pairs at recovering the network's edges.

    Raises
    ------
    EvaluationError
        If ``ks`` is empty or some ``k`` is below 1 or above the number of pairs.
    """
    n = _values(emb).shape[0]
    candidates = n * (n - 1) // 2
    if not ks:
        msg = "at least one k is required"
        raise EvaluationError(msg)
    for k in ks:
        if not 1 <= k <= candidates:
            msg = f"k={k} outside [1, {candidates}] candidate pairs"
            raise EvaluationError(msg)
    pairs, scores = rank_pairs(emb)
    top = max(ks)
    pairs, scores = pairs[:top], scores[:top]
    hits = np.asarray(net.adjacency[pairs[:, 0], pairs[:, 1]]).ravel() != 0
    cumulative = np.cumsum(hits)
    metrics = {int(k): float(cumulative[k - 1] / k) for k in ks}
    return RankingResult(pairs=pairs, scores=scores, metrics=metrics)


def auc_score(positive: npt.ArrayLike, negative: npt.ArrayLike) -> float:
    """Probability that a positive outscores a negative, ties counting one half.

    Computed from average ranks, which equals ``(concordant + 0.5 * ties) / (P * N)``.
    """
    pos = np.asarray(positive, dtype=np.float64).ravel()
    neg = np.asarray(negative, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        msg = f"AUC needs positives and negatives, got {pos.size} and {neg.size}"
        raise EvaluationError(msg)
    ranks = rankdata(np.concatenate([pos, neg]))
    concordant = ranks[: pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(concordant / (pos.size * neg.size))


def link_prediction_auc(emb: EmbeddingMatrix | Matrix, split: EvalSplit) -> float:
    """AUC of hidden edges against sampled non-edges, scored by cosine similarity."""
    if split.kind != "link-prediction":
        msg = f"link prediction needs a link split, got {split.kind}"
        raise EvaluationError(msg)
    values = _values(emb)

    def score(pairs: npt.NDArray[np.int64]) -> npt.NDArray[np.float64]:
        return np.array([cosine_similarity(values[i], values[j]) for i, j in pairs])

    return auc_score(score(split.positives), score(split.negatives))


def attribute_scores(
    emb: EmbeddingMatrix | Matrix,
    split: EvalSplit,
    net_train: AttributedNetwork,
    neighbours: int = ATTRIBUTE_NEIGHBOURS,
) -> npt.NDArray[np.float64]:
    """Score every hidden cell ``(j, k)`` from its node's most similar neighbours.

    The score is the similarity mass of neighbours that carry attribute ``k`` in the
    training matrix divided by the mass of those that do not. A zero denominator is
    replaced by ``1e-12``; no carrying neighbour gives 0.
    """
    if split.kind != "attribute-prediction":
        msg = f"attribute prediction needs an attribute split, got {split.kind}"
        raise EvaluationError(msg)
    values = _values(emb)
    n = values.shape[0]
    size = min(neighbours, n - 1)
    if size < 1:
        msg = "attribute prediction needs at least two nodes"
        raise EvaluationError(msg)
    if size < neighbours:
        _log.warning("Only %d other node(s); neighbourhoods shrink from %d.", size, neighbours)

    cells = split.positives
    nodes, inverse = np.unique(cells[:, 0], return_inverse=True)
    sims = cosine_matrix(values)[nodes]
    sims[np.arange(len(nodes)), nodes] = -np.inf
    nearest = np.argsort(-sims, axis=1, kind="stable")[:, :size]
    nearest_sims = np.take_along_axis(sims, nearest, axis=1)

    members = nearest[inverse]
    member_sims = nearest_sims[inverse]
    columns = np.repeat(cells[:, 1], size)
    train_attrs = net_train.attributes.tocsr()
    carries = np.asarray(train_attrs[members.ravel(), columns]).reshape(members.shape) != 0
    positive = np.sum(np.where(carries, member_sims, 0.0), axis=1)
    negative = np.sum(np.where(carries, 0.0, member_sims), axis=1)
    negative = np.where(negative == 0.0, ZERO_DENOMINATOR, negative)
    return np.where(carries.any(axis=1), positive / negative, 0.0)


def attribute_prediction_auc(
    emb: EmbeddingMatrix | Matrix,
    split: EvalSplit,
    net_train: AttributedNetwork,
) -> float:
    """AUC of hidden attribute cells ranked by :func:`attribute_scores`; true 1s are positives."""
    scores = attribute_scores(emb, split, net_train)
    truth = split.values != 0
    return auc_score(scores[truth], scores[~truth])


def make_classifier() -> OneVsRestClassifier:
    """One-vs-rest L2-regularised logistic regression (liblinear, ``C=1``)."""
    return OneVsRestClassifier(
        LogisticRegression(C=1.0, solver="liblinear", tol=1e-6, random_state=0),
    )


def classify(
    emb: EmbeddingMatrix | Matrix,
    labels: npt.ArrayLike,
    test_ratio: float,
    seed: int,
    repeats: int = 10,
) -> tuple[float, float]:
    """Average micro- and macro-F1 of a linear classifier over random train/test splits.

    Nodes labelled ``-1`` are ignored. A split whose training part misses a class is
    redrawn, up to 20 times.

    Returns
    -------
    tuple[float, float]
        ``(micro_f1, macro_f1)``.

    Raises
    ------
    EvaluationError
        If the ratio is out of range, no node is labelled, or no valid split was found.
    """
    if not 0.0 < test_ratio < 1.0:
        msg = f"test_ratio must lie strictly between 0 and 1, got {test_ratio}"
        raise EvaluationError(msg)
    values = _values(emb)
    y_all = np.asarray(labels, dtype=np.int64)
    labelled = y_all >= 0
    x, y = values[labelled], y_all[labelled]
    if y.size == 0:
        msg = "no labelled nodes to classify"
        raise EvaluationError(msg)
    classes = np.unique(y)
    if classes.size == 1:
        _log.warning("Only one class present; classification is degenerate.")
        return 1.0, 1.0

    rng = np.random.default_rng(seed)
    n_test = max(1, round(test_ratio * y.size))
    micro: list[float] = []
    macro: list[float] = []
    for _ in range(repeats):
        for _ in range(MAX_SPLIT_REDRAWS):
            order = rng.permutation(y.size)
            test, train = order[:n_test], order[n_test:]
            if np.array_equal(np.unique(y[train]), classes):
                break
        else:
            msg = f"no split in {MAX_SPLIT_REDRAWS} draws kept every class in training"
            raise EvaluationError(msg)
        model = make_classifier().fit(x[train], y[train])
        predicted = model.predict(x[test])
        micro.append(float(f1_score(y[test], predicted, average="micro")))
        macro.append(float(f1_score(y[test], predicted, average="macro", zero_division=0)))
    return float(np.mean(micro)), float(np.mean(macro))


def write_metric_csv(rows: Iterable[MetricRow], path: Path) -> None:
    """Write metric rows under ``MetricRow.CSV_HEADER``."""
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MetricRow.CSV_HEADER)
        writer.writerows(row.as_csv() for row in rows)
