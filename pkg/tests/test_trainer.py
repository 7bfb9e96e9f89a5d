from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from mdne.errors import ConfigError, TrainingError
from mdne.graph import AttributedNetwork, load_generic
from mdne.model import loss_total
from mdne.models.config import LayerSpec, LossWeights, RbmConfig, TrainConfig
from mdne.models.report import LossRecord
from mdne.trainer import fit

NO_PRETRAIN = RbmConfig(enabled=False)


@pytest.fixture
def edgeless() -> AttributedNetwork:
    attrs = np.eye(6, 4)
    attrs[4:, 0] = 1.0
    return AttributedNetwork.from_edges([f"v{i}" for i in range(6)], [], attrs)


def reg_only(**fields: object) -> TrainConfig:
    return TrainConfig(
        spec=LayerSpec(pre_struct_dim=3, pre_attr_dim=2, hidden_dims=[2]),
        weights=LossWeights(**{"lambda": 0.0}, alpha=0.0, upsilon=1.0),
        pretrain=NO_PRETRAIN,
        **fields,
    )


class TestFit:
    def test_single_iteration(
        self,
        toy_network: AttributedNetwork,
        fast_config: TrainConfig,
    ) -> None:
        config = fast_config.model_copy(update={"max_iters": 1})
        params, emb, report = fit(toy_network, config)
        assert report.iterations == len(report.records) == 1
        assert report.stop_reason == "max_iters"
        assert emb.values.shape == (6, 2)
        assert emb.node_ids == toy_network.node_ids
        assert params.is_finite()

    def test_embeddings_lie_in_unit_interval(
        self,
        toy_network: AttributedNetwork,
        fast_config: TrainConfig,
    ) -> None:
        _, emb, _ = fit(toy_network, fast_config)
        assert np.all((emb.values > 0.0) & (emb.values < 1.0))

    def test_mix_is_weighted_sum(
        self,
        toy_network: AttributedNetwork,
        fast_config: TrainConfig,
    ) -> None:
        _, _, report = fit(toy_network, fast_config)
        for record in report.records:
            expected = loss_total(
                record.l_1st,
                record.l_2nd,
                record.l_att,
                record.l_reg,
                fast_config.weights,
            )
            assert record.l_mix == pytest.approx(expected, abs=1e-9)

    def test_deterministic(self, network_factory, fast_config: TrainConfig) -> None:
        net = network_factory(2, n=10, m=6)
        config = fast_config.model_copy(update={"batch": 4})
        _, first, first_report = fit(net, config)
        _, second, second_report = fit(net, config)
        assert_array_equal(first.values, second.values)
        assert first_report.losses == second_report.losses

    def test_seed_changes_result(
        self,
        toy_network: AttributedNetwork,
        fast_config: TrainConfig,
    ) -> None:
        _, first, _ = fit(toy_network, fast_config)
        _, second, _ = fit(toy_network, fast_config.model_copy(update={"seed": 1}))
        assert not np.array_equal(first.values, second.values)

    def test_on_iteration_hook(
        self,
        toy_network: AttributedNetwork,
        fast_config: TrainConfig,
    ) -> None:
        seen: list[LossRecord] = []
        _, _, report = fit(toy_network, fast_config, on_iteration=seen.append)
        assert seen == report.records
        assert [r.iteration for r in seen] == list(range(len(seen)))

    def test_first_order_pulls_linked_nodes_together(self) -> None:
        net = AttributedNetwork.from_edges(["a", "b"], [(0, 1, 1.0)], np.eye(2, 3))
        config = TrainConfig(
            spec=LayerSpec(pre_struct_dim=1, pre_attr_dim=1, hidden_dims=[1]),
            weights=LossWeights(**{"lambda": 0.0}, alpha=0.0, upsilon=0.0),
            pretrain=NO_PRETRAIN,
            lr=0.5,
            max_iters=30,
            convergence_tol=0.0,
        )
        _, _, report = fit(net, config)
        first_order = [record.l_1st for record in report.records]
        assert first_order[-1] < first_order[0]
        assert all(b <= a for a, b in zip(first_order, first_order[1:], strict=False))

    def test_regularizer_shrinks_weights(self, edgeless: AttributedNetwork) -> None:
        _, _, report = fit(edgeless, reg_only(lr=0.1, max_iters=10))
        reg = np.array([record.l_reg for record in report.records])
        assert_allclose(reg[1:] / reg[:-1], 0.81, rtol=1e-9)

    def test_mini_batch_counts_epochs(self, network_factory, fast_config: TrainConfig) -> None:
        net = network_factory(5, n=10, m=6)
        config = fast_config.model_copy(update={"batch": 3, "max_iters": 4})
        _, _, report = fit(net, config)
        assert report.iterations == 4


class TestStopping:
    def test_converges(self, edgeless: AttributedNetwork) -> None:
        config = reg_only(lr=0.1, max_iters=50, convergence_tol=0.5, patience=2)
        _, _, report = fit(edgeless, config)
        assert report.stop_reason == "converged"
        assert report.iterations == 3

    def test_halves_learning_rate_after_divergence(
        self,
        edgeless: AttributedNetwork,
        caplog: pytest.LogCaptureFixture,
    ) -> None:
        _, _, report = fit(edgeless, reg_only(lr=3.0, max_iters=2000))
        assert report.lr == 1.5
        assert "retrying with lr=1.5" in caplog.text

    def test_gives_up_after_retries(self, edgeless: AttributedNetwork) -> None:
        config = reg_only(lr=1000.0, max_iters=400, max_retries=2)
        with pytest.raises(TrainingError) as info:
            fit(edgeless, config)
        assert info.value.iteration >= 0

    def test_rejects_overcomplete_layers(
        self,
        toy_network: AttributedNetwork,
        fast_config: TrainConfig,
    ) -> None:
        config = fast_config.model_copy(
            update={"spec": LayerSpec(pre_struct_dim=3, pre_attr_dim=2, hidden_dims=[4])},
        )
        with pytest.raises(ConfigError):
            fit(toy_network, config)


class TestWeightedInputs:
    @pytest.fixture
    def counts_ring(self, tmp_path: Path) -> AttributedNetwork:
        edges = tmp_path / "edges.tsv"
        attrs = tmp_path / "attrs.tsv"
        edges.write_text(
            "".join(f"v{i} v{(i + 1) % 6} {1 + i % 3}\n" for i in range(6)),
            encoding="utf-8",
        )
        attrs.write_text(
            "".join(f"v{i} {i % 3}:{1 + i % 4} 3:0.5\n" for i in range(6)),
            encoding="utf-8",
        )
        return load_generic(edges, attrs, binarize=False)

    def test_pretrains_on_unbinarized_attributes(
        self,
        counts_ring: AttributedNetwork,
        fast_config: TrainConfig,
    ) -> None:
        assert counts_ring.attributes.max() == 4.0
        params, emb, report = fit(counts_ring, fast_config)
        assert (params.structure_scale, params.attribute_scale) == (3.0, 4.0)
        assert report.iterations >= 1
        assert np.all((emb.values > 0.0) & (emb.values < 1.0))

    def test_random_start_records_scales(
        self,
        counts_ring: AttributedNetwork,
        fast_config: TrainConfig,
    ) -> None:
        config = fast_config.model_copy(update={"pretrain": NO_PRETRAIN})
        params, _, _ = fit(counts_ring, config)
        assert (params.structure_scale, params.attribute_scale) == (3.0, 4.0)
