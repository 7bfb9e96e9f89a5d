"""Hidden-link and hidden-attribute train/test splits."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from .errors import SplitError
from .graph import AttributedNetwork

__all__ = ("EvalSplit", "SplitKind", "restore_attributes", "split_attributes", "split_links")

_log = logging.getLogger(__name__)

SplitKind = Literal["link-prediction", "attribute-prediction"]

NEGATIVE_ATTEMPTS_PER_POSITIVE = 100
MAX_ATTRIBUTE_REDRAWS = 20


@dataclass(frozen=True, eq=False)
class EvalSplit:
    """A network with some items hidden, plus the hidden items.

    Attributes
    ----------
    kind: :class:`str`
        ``"link-prediction"`` or ``"attribute-prediction"``.
    train_network: :class:`AttributedNetwork`
        The original network minus the hidden items.
    positives: :class:`numpy.ndarray`
        Hidden edges ``(i, j)`` with ``i < j``, or hidden attribute cells ``(j, k)``.
    negatives: :class:`numpy.ndarray`
        Sampled unconnected pairs ``(i, j)``; empty for attribute splits.
    values: :class:`numpy.ndarray`
        Original value of each hidden item (edge weight, or attribute value).
    ratio: :class:`float`
        Fraction of items hidden.
    """

    kind: SplitKind
    train_network: AttributedNetwork
    positives: npt.NDArray[np.int64]
    negatives: npt.NDArray[np.int64]
    values: npt.NDArray[np.float64]
    ratio: float


def _check_ratio(ratio: float) -> None:
    if not 0.0 < ratio < 1.0:
        msg = f"ratio must lie strictly between 0 and 1, got {ratio}"
        raise SplitError(msg)


def split_links(net: AttributedNetwork, ratio: float, seed: int) -> EvalSplit:
    """Hide ``round(ratio * l)`` edges and sample as many unconnected pairs.

    Negatives are drawn by rejection sampling against the original edge set, with at
    most ``100`` attempts per positive.

    Raises
    ------
    SplitError
        If the ratio is out of range, nothing (or everything) would be hidden, or too
        few unconnected pairs were found.
    """
    _check_ratio(ratio)
    pairs, weights = net.edge_list()
    total = len(pairs)
    count = round(ratio * total)
    if count < 1 or total - count < 1:
        msg = f"cannot hide {count} of {total} edges and keep at least one"
        raise SplitError(msg)

    rng = np.random.default_rng(seed)
    hidden = np.sort(rng.choice(total, size=count, replace=False))
    keep = np.ones(total, dtype=bool)
    keep[hidden] = False

    existing = net.edge_set()
    negatives: list[tuple[int, int]] = []
    chosen: set[tuple[int, int]] = set()
    attempts = 0
    budget = NEGATIVE_ATTEMPTS_PER_POSITIVE * count
    while len(negatives) < count:
        if attempts >= budget:
            msg = f"found only {len(negatives)} of {count} unconnected pairs in {budget} attempts"
            raise SplitError(msg)
        attempts += 1
        i, j = (int(x) for x in rng.integers(0, net.n, size=2))
        if i == j:
            continue
        key = (i, j) if i < j else (j, i)
        if key in existing or key in chosen:
            continue
        chosen.add(key)
        negatives.append(key)

    kept = pairs[keep]
    train_adjacency = sp.csr_matrix(
        (
            np.concatenate([weights[keep], weights[keep]]),
            (np.concatenate([kept[:, 0], kept[:, 1]]), np.concatenate([kept[:, 1], kept[:, 0]])),
        ),
        shape=(net.n, net.n),
        dtype=np.float64,
    )
    train_adjacency.sort_indices()
    isolated = int(np.sum(np.diff(train_adjacency.indptr) == 0))
    _log.debug("Hid %d of %d edges; %d isolated node(s) remain.", count, total, isolated)
    return EvalSplit(
        kind="link-prediction",
        train_network=net.replace(adjacency=train_adjacency),
        positives=pairs[hidden],
        negatives=np.array(negatives, dtype=np.int64).reshape(-1, 2),
        values=weights[hidden],
        ratio=ratio,
    )


def split_attributes(net: AttributedNetwork, ratio: float, seed: int) -> EvalSplit:
    """Hide ``round(ratio * n * m)`` attribute cells chosen uniformly over the whole matrix.

    Hidden cells are zeroed in the training network and their original values kept.
    The draw is repeated (up to 20 times, same generator) until the hidden cells hold
    both a 1 and a 0.

    Raises
    ------
    SplitError
        If the ratio is out of range, no cell would be hidden, or every draw was
        single-valued.
    """
    _check_ratio(ratio)
    cells = net.n * net.m
    count = round(ratio * cells)
    if count < 1:
        msg = f"ratio {ratio} hides no cell of a {net.n}x{net.m} attribute matrix"
        raise SplitError(msg)

    rng = np.random.default_rng(seed)
    attributes = net.attributes.tocsr()
    for _ in range(MAX_ATTRIBUTE_REDRAWS):
        flat = np.sort(rng.choice(cells, size=count, replace=False))
        rows, cols = np.divmod(flat, net.m)
        values = np.asarray(attributes[rows, cols], dtype=np.float64).ravel()
        if np.any(values != 0) and np.any(values == 0):
            break
    else:
        msg = f"{MAX_ATTRIBUTE_REDRAWS} draws of {count} cells never held both values"
        raise SplitError(msg)

    mask = sp.csr_matrix(
        (np.ones(count), (rows, cols)),
        shape=attributes.shape,
        dtype=np.float64,
    )
    train_attributes = (attributes - attributes.multiply(mask)).tocsr()
    train_attributes.eliminate_zeros()
    train_attributes.sort_indices()
    return EvalSplit(
        kind="attribute-prediction",
        train_network=net.replace(attributes=train_attributes),
        positives=np.stack([rows, cols], axis=1).astype(np.int64),
        negatives=np.empty((0, 2), dtype=np.int64),
        values=values,
        ratio=ratio,
    )


def restore_attributes(split: EvalSplit) -> sp.csr_matrix:
    """Write the hidden values back into the training attribute matrix."""
    if split.kind != "attribute-prediction":
        msg = f"cannot restore attributes from a {split.kind} split"
        raise SplitError(msg)
    train = split.train_network.attributes
    cells = split.positives
    patch = sp.csr_matrix((split.values, (cells[:, 0], cells[:, 1])), shape=train.shape)
    restored = (train + patch).tocsr()
    restored.eliminate_zeros()
    restored.sort_indices()
    return restored
