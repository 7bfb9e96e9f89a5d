"""Greedy layer-wise pretraining with Bernoulli-Bernoulli RBMs (CD-1)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from .errors import ConfigError, DataError
from .model import Layer, ModelParams
from .tensor import Matrix, sigmoid

if TYPE_CHECKING:
    from collections.abc import Callable

    from .graph import AttributedNetwork
    from .models.config import LayerSpec, RbmConfig

__all__ = (
    "CdStatistics",
    "RbmLayer",
    "init_rbm",
    "layer_seed",
    "pretrain_stack",
    "train_rbm",
)

_log = logging.getLogger(__name__)

Data = Matrix | sp.spmatrix


@dataclass
class RbmLayer:
    """A trained (or freshly initialised) restricted Boltzmann machine.

    Attributes
    ----------
    weight: :class:`numpy.ndarray`
        ``visible_dim x hidden_dim`` couplings.
    b_visible, b_hidden: :class:`numpy.ndarray`
        Unit biases.
    errors: :class:`list` of :class:`float`
        Mean squared reconstruction error per visible unit, one entry per epoch.
    """

    weight: Matrix
    b_visible: npt.NDArray[np.float64]
    b_hidden: npt.NDArray[np.float64]
    errors: list[float] = field(default_factory=list)

    @property
    def visible_dim(self) -> int:
        return int(self.weight.shape[0])

    @property
    def hidden_dim(self) -> int:
        return int(self.weight.shape[1])

    def hidden_probs(self, visible: Data) -> Matrix:
        """``P(h = 1 | v)`` for each row of ``visible``."""
        return sigmoid(np.asarray(visible @ self.weight) + self.b_hidden)

    def visible_probs(self, hidden: Matrix) -> Matrix:
        """``P(v = 1 | h)`` for each row of ``hidden``."""
        return sigmoid(hidden @ self.weight.T + self.b_visible)

    def reconstruction_error(self, data: Data) -> float:
        """Mean squared error per visible unit of a mean-field up-down pass."""
        visible = _dense(data)
        recon = self.visible_probs(self.hidden_probs(visible))
        return float(np.mean((visible - recon) ** 2))


@dataclass(frozen=True)
class CdStatistics:
    """The quantities one CD-1 update is computed from, passed to ``on_batch`` hooks."""

    epoch: int
    visible: Matrix
    hidden: Matrix
    reconstruction: Matrix
    hidden_negative: Matrix
    positive: Matrix
    negative: Matrix


def _dense(data: Data) -> Matrix:
    if sp.issparse(data):
        return np.asarray(data.toarray(), dtype=np.float64)  # type: ignore[union-attr]
    return np.asarray(data, dtype=np.float64)


def _value_range(data: Data) -> tuple[float, float]:
    values = data.data if sp.issparse(data) else np.asarray(data)  # type: ignore[union-attr]
    if values.size == 0:
        return 0.0, 0.0
    return float(np.min(values)), float(np.max(values))


def init_rbm(visible_dim: int, hidden_dim: int, rng: np.random.Generator) -> RbmLayer:
    """Small Gaussian couplings, zero biases."""
    return RbmLayer(
        weight=rng.normal(0.0, 0.01, size=(visible_dim, hidden_dim)),
        b_visible=np.zeros(visible_dim),
        b_hidden=np.zeros(hidden_dim),
    )


def train_rbm(
    data: Data,
    hidden_dim: int,
    config: RbmConfig,
    *,
    on_batch: Callable[[CdStatistics], None] | None = None,
) -> RbmLayer:
    """Train a Bernoulli-Bernoulli RBM with one-step contrastive divergence.

    The negative phase reconstructs the visible units from the mean-field hidden
    probabilities of the same batch, so the update is deterministic given the seed
    (which drives initialisation and batch order).

    Parameters
    ----------
    data : Matrix | scipy.sparse matrix
        Rows of visible activations in ``[0, 1]``; sparse rows are densified per batch.
    hidden_dim : int
        Number of hidden units.
    config : RbmConfig
        Learning rate, epochs, batch size and seed.
    on_batch : Callable | None
        Called with the statistics of every update before it is applied.

    Raises
    ------
    DataError
        If ``data`` has no rows or columns, or values outside ``[0, 1]``.
    ConfigError
        If ``hidden_dim`` is not positive.
    """
    rows, visible_dim = data.shape
    if rows == 0 or visible_dim == 0:
        msg = "cannot train an RBM on empty data"
        raise DataError(msg)
    if hidden_dim <= 0:
        msg = f"hidden_dim must be positive, got {hidden_dim}"
        raise ConfigError(msg)
    low, high = _value_range(data)
    if low < 0.0 or high > 1.0:
        msg = f"RBM visible data must lie in [0, 1], got range [{low}, {high}]"
        raise DataError(msg)

    rng = np.random.default_rng(config.seed)
    rbm = init_rbm(visible_dim, hidden_dim, rng)
    source = (
        data.tocsr()  # type: ignore[union-attr]
        if sp.issparse(data)
        else np.asarray(data, dtype=np.float64)
    )

    for epoch in range(config.epochs):
        order = rng.permutation(rows)
        squared = 0.0
        for start in range(0, rows, config.batch):
            idx = order[start : start + config.batch]
            v0 = _dense(source[idx])
            h0 = rbm.hidden_probs(v0)
            v1 = rbm.visible_probs(h0)
            h1 = rbm.hidden_probs(v1)
            positive = v0.T @ h0
            negative = v1.T @ h1
            if on_batch is not None:
                on_batch(CdStatistics(epoch, v0, h0, v1, h1, positive, negative))
            size = len(idx)
            rbm.weight += config.lr * (positive - negative) / size
            rbm.b_visible += config.lr * np.mean(v0 - v1, axis=0)
            rbm.b_hidden += config.lr * np.mean(h0 - h1, axis=0)
            squared += float(np.sum((v0 - v1) ** 2))
        rbm.errors.append(squared / (rows * visible_dim))
        _log.debug("RBM %dx%d epoch %d: error %.6f", visible_dim, hidden_dim, epoch, rbm.errors[-1])
    return rbm


def layer_seed(seed: int, index: int) -> int:
    """Independent seed for the ``index``-th RBM of a stack."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def pretrain_stack(net: AttributedNetwork, spec: LayerSpec, config: RbmConfig) -> ModelParams:
    """Initialise every layer of the autoencoder from a stack of RBMs.

    The structure and attribute rows train the two pre-processing RBMs (or the
    concatenated rows train one joint RBM); their hidden probabilities feed the next
    RBM up the tower. Each RBM seeds one encoder layer with ``(W, b_hidden)`` and its
    mirrored decoder layer with a copy of ``(W.T, b_visible)``.
    """
    spec.validate_for(net.n, net.m)
    s = net.structure_matrix()
    a = net.attribute_matrix()

    def rbm_config(index: int) -> RbmConfig:
        return config.model_copy(update={"seed": layer_seed(config.seed, index)})

    def mirror(rbm: RbmLayer) -> Layer:
        return Layer(rbm.weight.T.copy(), rbm.b_visible.copy())

    if spec.preprocess:
        _log.info("Pretraining structure layer %dx%d", net.n, spec.pre_struct_dim)
        structure = train_rbm(s, spec.pre_struct_dim, rbm_config(0))
        _log.info("Pretraining attribute layer %dx%d", net.m, spec.pre_attr_dim)
        attribute = train_rbm(a, spec.pre_attr_dim, rbm_config(1))
        inputs = [
            Layer(structure.weight.copy(), structure.b_hidden.copy()),
            Layer(attribute.weight.copy(), attribute.b_hidden.copy()),
        ]
        outputs = [mirror(structure), mirror(attribute)]
        h = np.hstack([structure.hidden_probs(s), attribute.hidden_probs(a)])
    else:
        joint_input = sp.hstack([s, a], format="csr")
        _log.info("Pretraining joint layer %dx%d", net.n + net.m, spec.joint_dim)
        joint = train_rbm(joint_input, spec.joint_dim, rbm_config(0))
        inputs = [Layer(joint.weight.copy(), joint.b_hidden.copy())]
        outputs = [mirror(joint)]
        h = joint.hidden_probs(joint_input)

    encoder: list[Layer] = []
    decoder: list[Layer] = []
    for k, width in enumerate(spec.hidden_dims, start=2):
        _log.info("Pretraining encoder layer %dx%d", h.shape[1], width)
        rbm = train_rbm(h, width, rbm_config(k))
        encoder.append(Layer(rbm.weight.copy(), rbm.b_hidden.copy()))
        decoder.insert(0, mirror(rbm))
        h = rbm.hidden_probs(h)

    return ModelParams(
        spec=spec,
        n=net.n,
        m=net.m,
        inputs=inputs,
        encoder=encoder,
        decoder=decoder,
        outputs=outputs,
        structure_scale=net.structure_scale,
        attribute_scale=net.attribute_scale,
    )
