from __future__ import annotations

import os
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp

from mdne.graph import AttributedNetwork
from mdne.models.config import LayerSpec, RbmConfig, TrainConfig

NetworkFactory = Callable[..., AttributedNetwork]


def random_network(
    seed: int,
    n: int = 8,
    m: int = 6,
    *,
    density: float = 0.4,
    classes: int = 0,
) -> AttributedNetwork:
    """A random attributed network where every node has at least one edge and attribute."""
    rng = np.random.default_rng(seed)
    edges = [
        (i, j, 1.0) for i in range(n) for j in range(i + 1, n) if rng.random() < density
    ]
    edges += [(i, (i + 1) % n, 1.0) for i in range(n)]
    attrs = (rng.random((n, m)) < 0.4).astype(np.float64)
    attrs[np.arange(n), rng.integers(0, m, size=n)] = 1.0
    labels = None
    names: tuple[str, ...] = ()
    if classes:
        labels = np.arange(n, dtype=np.int64) % classes
        names = tuple(f"c{k}" for k in range(classes))
    return AttributedNetwork.from_edges(
        [f"v{i}" for i in range(n)],
        edges,
        sp.csr_matrix(attrs),
        labels,
        names,
    )


@pytest.fixture
def network_factory() -> NetworkFactory:
    return random_network


@pytest.fixture
def toy_network() -> AttributedNetwork:
    return random_network(0, n=6, m=4)


@pytest.fixture
def path_network() -> AttributedNetwork:
    """a - b - c - d with one attribute each, plus an isolated e."""
    attrs = sp.csr_matrix(np.eye(5, 4, dtype=np.float64))
    return AttributedNetwork.from_edges(
        ["a", "b", "c", "d", "e"],
        [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)],
        attrs,
    )


@pytest.fixture
def toy_spec() -> LayerSpec:
    return LayerSpec(pre_struct_dim=3, pre_attr_dim=2, hidden_dims=[2])


@pytest.fixture
def fast_config(toy_spec: LayerSpec) -> TrainConfig:
    return TrainConfig(
        spec=toy_spec,
        max_iters=20,
        lr=0.05,
        pretrain=RbmConfig(epochs=5, batch=4),
    )


@pytest.fixture(scope="session")
def cora_dir() -> Path:
    path = os.environ.get("MDNE_CORA_DIR")
    if not path:
        pytest.skip("MDNE_CORA_DIR is not set")
    return Path(path)
