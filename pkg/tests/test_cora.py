"""Full-dataset runs on Cora. Set ``MDNE_CORA_DIR`` to a directory holding
``cora.content`` and ``cora.cites`` and select them with ``pytest -m slow``.
"""

from pathlib import Path

import numpy as np
import pytest

from mdne.embeddings import EmbeddingMatrix
from mdne.evaluation import attribute_prediction_auc, classify, network_reconstruction
from mdne.graph import AttributedNetwork, load_cora_format
from mdne.models.config import LayerSpec, TrainConfig
from mdne.models.report import TrainReport
from mdne.splits import split_attributes
from mdne.sweep import classification_objective, grid_search
from mdne.trainer import fit

pytestmark = pytest.mark.slow

Trained = tuple[EmbeddingMatrix, TrainReport]


@pytest.fixture(scope="module")
def cora(cora_dir: Path) -> AttributedNetwork:
    return load_cora_format(cora_dir / "cora.content", cora_dir / "cora.cites")


@pytest.fixture(scope="module")
def config() -> TrainConfig:
    return TrainConfig(spec=LayerSpec.preset("cora"), max_iters=400, convergence_tol=0.0)


@pytest.fixture(scope="module")
def trained(cora: AttributedNetwork, config: TrainConfig) -> Trained:
    _, emb, report = fit(cora, config)
    return emb, report


def test_dataset_shape(cora: AttributedNetwork) -> None:
    assert (cora.n, cora.num_edges, cora.m) == (2708, 5278, 1433)
    assert len(cora.label_names) == 7


def test_runs_all_iterations(trained: Trained) -> None:
    _, report = trained
    assert report.iterations == 400


def test_loss_drops_early(trained: Trained) -> None:
    losses = np.array(trained[1].losses)
    total = losses[0] - losses[-1]
    assert total > 0
    assert losses[0] - losses[39] >= 0.9 * total


def test_reconstruction(cora: AttributedNetwork, trained: Trained) -> None:
    metrics = network_reconstruction(trained[0], cora, [1000, 5000]).metrics
    assert metrics[1000] >= 0.90
    assert metrics[5000] >= 0.60


def test_classification(cora: AttributedNetwork, trained: Trained) -> None:
    micro, macro = classify(trained[0], cora.labels, 0.1, seed=0, repeats=10)
    assert micro >= 0.75
    assert macro >= 0.72


def test_attribute_prediction(cora: AttributedNetwork, config: TrainConfig) -> None:
    scores = []
    for ratio in (0.05, 0.25, 0.45):
        split = split_attributes(cora, ratio, seed=0)
        _, emb, _ = fit(split.train_network, config)
        scores.append(attribute_prediction_auc(emb, split, split.train_network))
    assert scores[0] >= 0.70
    assert scores[1] <= scores[0] + 0.01
    assert scores[2] <= scores[1] + 0.01


def test_preprocessing_does_not_hurt(
    cora: AttributedNetwork,
    config: TrainConfig,
    trained: Trained,
) -> None:
    joint = config.model_copy(update={"spec": LayerSpec.preset("cora", preprocess=False)})
    _, joint_emb, _ = fit(cora, joint)
    with_pre, _ = classify(trained[0], cora.labels, 0.1, seed=0)
    without_pre, _ = classify(joint_emb, cora.labels, 0.1, seed=0)
    assert with_pre >= without_pre - 0.02


def test_lambda_sensitivity(cora: AttributedNetwork, config: TrainConfig) -> None:
    lambdas = [0.0, 0.01, 0.02, 0.03, 0.04]
    cells = grid_search(
        cora,
        config,
        {"weights.lambda": lambdas},
        classification_objective(0.1),
    )
    scores = {cell.params["weights.lambda"]: cell.score for cell in cells}
    assert all(score is not None for score in scores.values())
    assert scores[0.02] >= scores[0.0]
    stable = [scores[value] for value in (0.02, 0.03, 0.04)]
    assert max(stable) - min(stable) <= 0.03
