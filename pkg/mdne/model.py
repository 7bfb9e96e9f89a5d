"""The multimodal deep autoencoder: parameters, forward pass, losses and gradients.

Weights are stored ``(fan_in, fan_out)`` and applied to row batches as ``X @ W + b``.
With pre-processing on, the layer order is::

    s_i -> structure layer --\\
                              concat -> encoder ... -> y_i -> decoder ... -> split
    a_i -> attribute layer --/                                                  |
                                          s_hat_i <- structure head <-----------+
                                          a_hat_i <- attribute head <-----------+

With pre-processing off a single joint layer reads ``[s_i, a_i]`` and a single joint
head produces ``[s_hat_i, a_hat_i]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt

from .errors import ContractError, ShapeError
from .tensor import Matrix, as_matrix, frobenius_sq, hadamard, matmul, sigmoid

if TYPE_CHECKING:
    from collections.abc import Iterator

    from .models.config import LayerSpec, LossWeights, PenaltyConfig

__all__ = (
    "Batch",
    "ForwardCache",
    "Gradients",
    "Layer",
    "LossComponents",
    "ModelParams",
    "backward",
    "embed_new_node",
    "encode",
    "forward",
    "init_params",
    "layer_shapes",
    "loss_attribute",
    "loss_first_order",
    "loss_reg",
    "loss_second_order",
    "loss_total",
    "objective",
)


@dataclass(slots=True)
class Layer:
    """One fully connected sigmoid layer."""

    weight: Matrix
    bias: npt.NDArray[np.float64]

    def apply(self, x: Matrix) -> tuple[Matrix, Matrix]:
        """Return ``(pre_activation, activation)`` for input rows ``x``."""
        z = matmul(x, self.weight) + self.bias
        return z, sigmoid(z)

    def zeros_like(self) -> Layer:
        """A layer of the same shape filled with zeros."""
        return Layer(np.zeros_like(self.weight), np.zeros_like(self.bias))


LayerShapes = dict[str, list[tuple[int, int]]]


def layer_shapes(spec: LayerSpec, n: int, m: int) -> LayerShapes:
    """Weight shapes of every layer group, in canonical order."""
    chain = [spec.joint_dim, *spec.hidden_dims]
    encoder = list(zip(chain, chain[1:], strict=False))
    decoder = [(fan_out, fan_in) for fan_in, fan_out in reversed(encoder)]
    if spec.preprocess:
        inputs = [(n, spec.pre_struct_dim), (m, spec.pre_attr_dim)]
        outputs = [(spec.pre_struct_dim, n), (spec.pre_attr_dim, m)]
    else:
        inputs = [(n + m, spec.joint_dim)]
        outputs = [(spec.joint_dim, n + m)]
    return {"inputs": inputs, "encoder": encoder, "decoder": decoder, "outputs": outputs}


@dataclass
class ModelParams:
    """All weights and biases of the model.

    Attributes
    ----------
    spec: :class:`LayerSpec`
        The layer structure these parameters realise.
    n, m: :class:`int`
        Node and attribute counts of the network the model reads.
    inputs: :class:`list` of :class:`Layer`
        Structure and attribute pre-processing layers, or the one joint layer.
    encoder: :class:`list` of :class:`Layer`
        Layers from the concatenated pre-processing output down to ``d``.
    decoder: :class:`list` of :class:`Layer`
        Mirror of the encoder, from ``d`` back up to the concatenated width.
    outputs: :class:`list` of :class:`Layer`
        Structure and attribute reconstruction heads, or the one joint head.
    structure_scale, attribute_scale: :class:`float`
        Divisors the training network's raw adjacency and attribute values were
        scaled by; :func:`embed_new_node` applies them to raw rows.
    version: :class:`int`
        Bumped on every in-place update so stale forward caches are detectable.
    """

    spec: LayerSpec
    n: int
    m: int
    inputs: list[Layer]
    encoder: list[Layer]
    decoder: list[Layer]
    outputs: list[Layer]
    structure_scale: float = 1.0
    attribute_scale: float = 1.0
    version: int = 0

    GROUPS = ("inputs", "encoder", "decoder", "outputs")

    def groups(self) -> Iterator[tuple[str, list[Layer]]]:
        """Yield ``(group_name, layers)`` in canonical order."""
        for name in self.GROUPS:
            yield name, getattr(self, name)

    def layers(self) -> list[Layer]:
        """Every layer in canonical order."""
        return [layer for _, layers in self.groups() for layer in layers]

    def named_arrays(self) -> Iterator[tuple[str, npt.NDArray[np.float64]]]:
        """Yield ``("encoder.0.weight", array)`` style pairs in canonical order."""
        for name, layers in self.groups():
            for k, layer in enumerate(layers):
                yield f"{name}.{k}.weight", layer.weight
                yield f"{name}.{k}.bias", layer.bias

    def weights(self) -> list[Matrix]:
        """Every weight matrix, biases excluded."""
        return [layer.weight for layer in self.layers()]

    def zeros_like(self) -> ModelParams:
        """Parameters of the same shapes filled with zeros (a gradient accumulator)."""
        return ModelParams(
            spec=self.spec,
            n=self.n,
            m=self.m,
            inputs=[layer.zeros_like() for layer in self.inputs],
            encoder=[layer.zeros_like() for layer in self.encoder],
            decoder=[layer.zeros_like() for layer in self.decoder],
            outputs=[layer.zeros_like() for layer in self.outputs],
        )

    def copy(self) -> ModelParams:
        """A deep copy, e.g. a frozen snapshot for concurrent readers."""

        def dup(layers: list[Layer]) -> list[Layer]:
            return [Layer(layer.weight.copy(), layer.bias.copy()) for layer in layers]

        return ModelParams(
            spec=self.spec,
            n=self.n,
            m=self.m,
            inputs=dup(self.inputs),
            encoder=dup(self.encoder),
            decoder=dup(self.decoder),
            outputs=dup(self.outputs),
            structure_scale=self.structure_scale,
            attribute_scale=self.attribute_scale,
            version=self.version,
        )

    def sgd_step(self, grads: Gradients, lr: float) -> None:
        """Apply ``theta -= lr * grad`` in place."""
        for layer, grad in zip(self.layers(), grads.layers(), strict=True):
            layer.weight -= lr * grad.weight
            layer.bias -= lr * grad.bias
        self.version += 1

    def is_finite(self) -> bool:
        """Whether every parameter is finite."""
        return all(np.all(np.isfinite(array)) for _, array in self.named_arrays())


Gradients = ModelParams


def init_params(spec: LayerSpec, n: int, m: int, rng: np.random.Generator) -> ModelParams:
    """Random initialisation used when pretraining is off.

    Weights are uniform in ``(-r, r)`` with ``r = sqrt(6 / (fan_in + fan_out))``; biases
    start at zero.
    """

    def make(shapes: list[tuple[int, int]]) -> list[Layer]:
        layers: list[Layer] = []
        for fan_in, fan_out in shapes:
            r = np.sqrt(6.0 / (fan_in + fan_out))
            layers.append(Layer(rng.uniform(-r, r, size=(fan_in, fan_out)), np.zeros(fan_out)))
        return layers

    shapes = layer_shapes(spec, n, m)
    return ModelParams(
        spec=spec,
        n=n,
        m=m,
        inputs=make(shapes["inputs"]),
        encoder=make(shapes["encoder"]),
        decoder=make(shapes["decoder"]),
        outputs=make(shapes["outputs"]),
    )


@dataclass
class ForwardCache:
    """Everything :func:`backward` needs from a forward pass.

    ``inputs``, ``encoder``, ``decoder`` and ``outputs`` hold ``(pre, post)`` activation
    pairs per layer, aligned with the layers of :class:`ModelParams`.
    """

    params_id: int
    version: int
    s_rows: Matrix
    a_rows: Matrix
    joint: Matrix
    inputs: list[tuple[Matrix, Matrix]] = field(default_factory=list)
    encoder: list[tuple[Matrix, Matrix]] = field(default_factory=list)
    decoder: list[tuple[Matrix, Matrix]] = field(default_factory=list)
    outputs: list[tuple[Matrix, Matrix]] = field(default_factory=list)

    @property
    def y(self) -> Matrix:
        """The embedding layer output."""
        return self.encoder[-1][1] if self.encoder else self.joint


def _check_rows(params: ModelParams, s_rows: Matrix, a_rows: Matrix) -> None:
    if (
        s_rows.ndim != 2
        or a_rows.ndim != 2
        or s_rows.shape[1] != params.n
        or a_rows.shape[1] != params.m
        or s_rows.shape[0] != a_rows.shape[0]
    ):
        raise ShapeError("forward", s_rows.shape, a_rows.shape, (params.n, params.m))


def _encode(params: ModelParams, s_rows: Matrix, a_rows: Matrix) -> ForwardCache:
    _check_rows(params, s_rows, a_rows)
    cache = ForwardCache(
        params_id=id(params),
        version=params.version,
        s_rows=s_rows,
        a_rows=a_rows,
        joint=np.empty((0, 0)),
    )
    if params.spec.preprocess:
        structure, attribute = params.inputs
        cache.inputs = [structure.apply(s_rows), attribute.apply(a_rows)]
        cache.joint = np.hstack([cache.inputs[0][1], cache.inputs[1][1]])
    else:
        cache.inputs = [params.inputs[0].apply(np.hstack([s_rows, a_rows]))]
        cache.joint = cache.inputs[0][1]
    h = cache.joint
    for layer in params.encoder:
        z, h = layer.apply(h)
        cache.encoder.append((z, h))
    return cache


def encode(params: ModelParams, s_rows: Matrix, a_rows: Matrix) -> Matrix:
    """Embed rows without running the decoder."""
    return _encode(params, s_rows, a_rows).y


def forward(
    params: ModelParams,
    s_rows: Matrix,
    a_rows: Matrix,
) -> tuple[Matrix, Matrix, Matrix, ForwardCache]:
    """Run the full autoencoder on a batch of adjacency and attribute rows.

    Parameters
    ----------
    params : ModelParams
        Model parameters; read only.
    s_rows : Matrix
        ``batch x n`` adjacency rows.
    a_rows : Matrix
        ``batch x m`` attribute rows.

    Returns
    -------
    tuple
        ``(Y, S_hat, A_hat, cache)``: ``batch x d`` embeddings, sigmoid reconstructions of
        both inputs, and the activation cache for :func:`backward`.

    Raises
    ------
    ShapeError
        If the rows do not match ``(n, m)`` or each other's batch size.
    """
    cache = _encode(params, s_rows, a_rows)
    h = cache.y
    for layer in params.decoder:
        z, h = layer.apply(h)
        cache.decoder.append((z, h))
    if params.spec.preprocess:
        split = params.spec.pre_struct_dim
        structure, attribute = params.outputs
        cache.outputs = [structure.apply(h[:, :split]), attribute.apply(h[:, split:])]
        s_hat, a_hat = cache.outputs[0][1], cache.outputs[1][1]
    else:
        cache.outputs = [params.outputs[0].apply(h)]
        joint = cache.outputs[0][1]
        s_hat, a_hat = joint[:, : params.n], joint[:, params.n :]
    return cache.y, s_hat, a_hat, cache


def loss_first_order(
    y: Matrix,
    pairs: npt.NDArray[np.int64],
    weights: npt.NDArray[np.float64],
) -> float:
    """Weighted squared distance between embeddings of linked rows.

    ``pairs`` index rows of ``y``; each unordered pair appears once.
    """
    if len(pairs) == 0:
        return 0.0
    diff = y[pairs[:, 0]] - y[pairs[:, 1]]
    return float(np.sum(weights * np.sum(diff * diff, axis=1)))


def _penalty(truth: Matrix, gamma: float) -> Matrix:
    return np.where(truth != 0, gamma, 1.0)


def _masked_error(name: str, hat: Matrix, truth: Matrix, gamma: float) -> float:
    if hat.shape != truth.shape:
        raise ShapeError(name, hat.shape, truth.shape)
    return frobenius_sq(hadamard(hat - truth, _penalty(truth, gamma)))


def loss_second_order(s_hat: Matrix, s: Matrix, gamma1: float) -> float:
    """Adjacency reconstruction error with nonzero entries weighted by ``gamma1``."""
    return _masked_error("loss_second_order", s_hat, s, gamma1)


def loss_attribute(a_hat: Matrix, a: Matrix, gamma2: float) -> float:
    """Attribute reconstruction error with nonzero entries weighted by ``gamma2``."""
    return _masked_error("loss_attribute", a_hat, a, gamma2)


def loss_reg(params: ModelParams) -> float:
    """Half the summed squared Frobenius norms of all weight matrices."""
    return 0.5 * sum(frobenius_sq(weight) for weight in params.weights())


@dataclass(frozen=True, slots=True)
class LossComponents:
    """The four loss terms of one evaluation."""

    l_1st: float
    l_2nd: float
    l_att: float
    l_reg: float


def loss_total(
    l_1st: float,
    l_2nd: float,
    l_att: float,
    l_reg: float,
    weights: LossWeights,
) -> float:
    """``lambda * L_att + alpha * L_2nd + L_1st + upsilon * L_reg``."""
    return weights.lambda_ * l_att + weights.alpha * l_2nd + l_1st + weights.upsilon * l_reg


@dataclass(frozen=True)
class Batch:
    """One optimisation batch.

    Attributes
    ----------
    s_rows, a_rows: :class:`numpy.ndarray`
        Dense adjacency and attribute rows.
    pairs, pair_weights: :class:`numpy.ndarray`
        Edges with both endpoints in the batch, as batch-local row indices.
    first_order_scale: :class:`float`
        Factor applied to the in-batch first-order term (``l / edges_in_batch``).
    reg_scale: :class:`float`
        Share of the regularizer charged to this batch (``batch_rows / n``).
    """

    s_rows: Matrix
    a_rows: Matrix
    pairs: npt.NDArray[np.int64]
    pair_weights: npt.NDArray[np.float64]
    first_order_scale: float = 1.0
    reg_scale: float = 1.0


def objective(
    params: ModelParams,
    batch: Batch,
    weights: LossWeights,
    penalties: PenaltyConfig,
) -> tuple[float, LossComponents, ForwardCache]:
    """Forward ``batch`` and return ``(batch_objective, components, cache)``.

    ``components.l_1st`` already carries the batch rescaling; the batch objective
    charges ``reg_scale * L_reg``. In full-batch mode both scales are one and the
    objective equals :func:`loss_total`.
    """
    y, s_hat, a_hat, cache = forward(params, batch.s_rows, batch.a_rows)
    components = LossComponents(
        l_1st=batch.first_order_scale * loss_first_order(y, batch.pairs, batch.pair_weights),
        l_2nd=loss_second_order(s_hat, batch.s_rows, penalties.gamma1),
        l_att=loss_attribute(a_hat, batch.a_rows, penalties.gamma2),
        l_reg=loss_reg(params),
    )
    value = (
        weights.lambda_ * components.l_att
        + weights.alpha * components.l_2nd
        + components.l_1st
        + weights.upsilon * batch.reg_scale * components.l_reg
    )
    return value, components, cache


def _backprop(layer: Layer, grad: Layer, x: Matrix, h: Matrix, dh: Matrix) -> Matrix:
    dz = dh * h * (1.0 - h)
    grad.weight += x.T @ dz
    grad.bias += dz.sum(axis=0)
    return dz @ layer.weight.T


def backward(
    params: ModelParams,
    cache: ForwardCache,
    batch: Batch,
    weights: LossWeights,
    penalties: PenaltyConfig,
) -> Gradients:
    """Gradient of the batch objective with respect to every parameter.

    Raises
    ------
    ContractError
        If ``cache`` was produced by different parameters, by these parameters before
        an update, or for different rows than ``batch``.
    """
    if cache.params_id != id(params) or cache.version != params.version:
        msg = "forward cache does not belong to the current parameters"
        raise ContractError(msg)
    if cache.s_rows is not batch.s_rows or cache.a_rows is not batch.a_rows:
        msg = "forward cache was computed for a different batch"
        raise ContractError(msg)

    grads = params.zeros_like()
    s, a = batch.s_rows, batch.a_rows
    n = params.n

    if params.spec.preprocess:
        s_hat, a_hat = cache.outputs[0][1], cache.outputs[1][1]
    else:
        joint_out = cache.outputs[0][1]
        s_hat, a_hat = joint_out[:, :n], joint_out[:, n:]
    ds_hat = 2.0 * weights.alpha * hadamard(s_hat - s, _penalty(s, penalties.gamma1) ** 2)
    da_hat = 2.0 * weights.lambda_ * hadamard(a_hat - a, _penalty(a, penalties.gamma2) ** 2)

    top = cache.decoder[-1][1] if cache.decoder else cache.y
    if params.spec.preprocess:
        split = params.spec.pre_struct_dim
        dtop = np.hstack(
            [
                _backprop(params.outputs[0], grads.outputs[0], top[:, :split], s_hat, ds_hat),
                _backprop(params.outputs[1], grads.outputs[1], top[:, split:], a_hat, da_hat),
            ],
        )
    else:
        dtop = _backprop(
            params.outputs[0],
            grads.outputs[0],
            top,
            cache.outputs[0][1],
            np.hstack([ds_hat, da_hat]),
        )

    dh = dtop
    below = [cache.y] + [h for _, h in cache.decoder[:-1]]
    for k in reversed(range(len(params.decoder))):
        dh = _backprop(params.decoder[k], grads.decoder[k], below[k], cache.decoder[k][1], dh)

    y = cache.y
    if len(batch.pairs):
        p, q = batch.pairs[:, 0], batch.pairs[:, 1]
        g = 2.0 * batch.first_order_scale * batch.pair_weights[:, None] * (y[p] - y[q])
        np.add.at(dh, p, g)
        np.add.at(dh, q, -g)

    below = [cache.joint] + [h for _, h in cache.encoder[:-1]]
    for k in reversed(range(len(params.encoder))):
        dh = _backprop(params.encoder[k], grads.encoder[k], below[k], cache.encoder[k][1], dh)

    if params.spec.preprocess:
        split = params.spec.pre_struct_dim
        _backprop(params.inputs[0], grads.inputs[0], s, cache.inputs[0][1], dh[:, :split])
        _backprop(params.inputs[1], grads.inputs[1], a, cache.inputs[1][1], dh[:, split:])
    else:
        _backprop(params.inputs[0], grads.inputs[0], np.hstack([s, a]), cache.inputs[0][1], dh)

    reg = weights.upsilon * batch.reg_scale
    if reg:
        for layer, grad in zip(params.layers(), grads.layers(), strict=True):
            grad.weight += reg * layer.weight
    return grads


def embed_new_node(
    params: ModelParams,
    s_vec: npt.ArrayLike | None = None,
    a_vec: npt.ArrayLike | None = None,
) -> npt.NDArray[np.float64]:
    """Embed a node that was not part of training.

    Rows are taken on the training network's raw scale, e.g. an unnormalised
    weighted adjacency row; they are divided by the scales stored in ``params`` the
    same way the training inputs were. A missing modality is replaced by a zero vector.

    Raises
    ------
    ContractError
        If both vectors are missing.
    ShapeError
        If a vector has the wrong length.
    """
    if s_vec is None and a_vec is None:
        msg = "a new node needs at least one of structure or attribute vectors"
        raise ContractError(msg)
    s = np.zeros(params.n) if s_vec is None else np.ravel(s_vec) / params.structure_scale
    a = np.zeros(params.m) if a_vec is None else np.ravel(a_vec) / params.attribute_scale
    return encode(params, as_matrix(s), as_matrix(a))[0]
