"""Fine-tuning of the autoencoder by plain stochastic gradient descent."""

from __future__ import annotations

import logging
import math
import time
from typing import TYPE_CHECKING

import numpy as np
import scipy.sparse as sp

from .embeddings import EmbeddingMatrix, embed_network
from .errors import TrainingError
from .model import Batch, ModelParams, backward, init_params, loss_reg, loss_total, objective
from .models.report import LossRecord, StopReason, TrainReport
from .pretrain import pretrain_stack

if TYPE_CHECKING:
    from collections.abc import Callable, Iterator

    from .graph import AttributedNetwork
    from .models.config import TrainConfig

__all__ = ("fit", "initial_params", "iter_batches")

_log = logging.getLogger(__name__)


class _Diverged(Exception):  # noqa: N818
    def __init__(self, iteration: int, loss: float) -> None:
        self.iteration = iteration
        self.loss = loss
        super().__init__(iteration, loss)


def initial_params(net: AttributedNetwork, config: TrainConfig) -> ModelParams:
    """Parameters fine-tuning starts from: RBM-pretrained, or random when pretraining is off."""
    if config.pretrain.enabled:
        rbm = config.pretrain.model_copy(update={"seed": config.seed})
        return pretrain_stack(net, config.spec, rbm)
    params = init_params(config.spec, net.n, net.m, np.random.default_rng(config.seed))
    params.structure_scale = net.structure_scale
    params.attribute_scale = net.attribute_scale
    return params


def _batch(
    s: sp.csr_matrix,
    a: sp.csr_matrix,
    idx: np.ndarray,
    total_edges: int,
    n: int,
) -> Batch:
    inside = sp.triu(s[idx][:, idx], k=1).tocoo()
    pairs = np.stack([inside.row, inside.col], axis=1).astype(np.int64)
    scale = total_edges / inside.nnz if inside.nnz and len(idx) < n else 1.0
    return Batch(
        s_rows=s[idx].toarray(),
        a_rows=a[idx].toarray(),
        pairs=pairs,
        pair_weights=inside.data.astype(np.float64),
        first_order_scale=scale,
        reg_scale=len(idx) / n,
    )


def iter_batches(
    net: AttributedNetwork,
    batch_size: int,
    rng: np.random.Generator,
) -> Iterator[Batch]:
    """Yield one epoch of batches over a random permutation of the nodes.

    Only edges with both endpoints inside a batch contribute to its first-order term,
    rescaled by ``total_edges / edges_in_batch``. Each batch therefore charges a
    full-network estimate of ``L_1st``, so one epoch of ``n / batch_size`` batches
    weighs the first-order term about ``n / batch_size`` times, while the regularizer
    is charged ``batch_rows / n`` per batch and counts once per epoch. The
    reconstruction terms are per-row sums and also count once.
    """
    s = net.structure_matrix().tocsr()
    a = net.attribute_matrix().tocsr()
    order = rng.permutation(net.n)
    for start in range(0, net.n, batch_size):
        idx = np.sort(order[start : start + batch_size])
        yield _batch(s, a, idx, net.num_edges, net.n)


def _fine_tune(
    net: AttributedNetwork,
    config: TrainConfig,
    params: ModelParams,
    lr: float,
    on_iteration: Callable[[LossRecord], None] | None,
) -> TrainReport:
    weights, penalties = config.weights, config.penalties
    batch_size = config.batch_size(net.n)
    rng = np.random.default_rng(config.seed)
    full = (
        _batch(
            net.structure_matrix().tocsr(),
            net.attribute_matrix().tocsr(),
            np.arange(net.n),
            net.num_edges,
            net.n,
        )
        if batch_size >= net.n
        else None
    )

    report = TrainReport(lr=lr)
    started = time.perf_counter()
    previous: float | None = None
    streak = 0
    stop: StopReason = "max_iters"
    for iteration in range(config.max_iters):
        l_reg = loss_reg(params)
        l_1st = l_2nd = l_att = 0.0
        batches = [full] if full is not None else iter_batches(net, batch_size, rng)
        with np.errstate(over="ignore", invalid="ignore"):
            for batch in batches:
                value, components, cache = objective(params, batch, weights, penalties)
                if not math.isfinite(value):
                    raise _Diverged(iteration, value)
                params.sgd_step(backward(params, cache, batch, weights, penalties), lr)
                l_1st += components.l_1st
                l_2nd += components.l_2nd
                l_att += components.l_att
        if not params.is_finite():
            raise _Diverged(iteration, math.nan)

        l_mix = loss_total(l_1st, l_2nd, l_att, l_reg, weights)
        record = LossRecord(
            iteration=iteration,
            l_1st=l_1st,
            l_2nd=l_2nd,
            l_att=l_att,
            l_reg=l_reg,
            l_mix=l_mix,
            elapsed_ms=(time.perf_counter() - started) * 1000.0,
        )
        report.records.append(record)
        if on_iteration is not None:
            on_iteration(record)
        _log.debug(
            "iter %d: L_mix=%.6g L_1st=%.6g L_2nd=%.6g L_att=%.6g L_reg=%.6g",
            iteration,
            l_mix,
            l_1st,
            l_2nd,
            l_att,
            l_reg,
        )

        if previous is not None:
            change = abs(previous - l_mix) / abs(l_mix) if l_mix else 0.0
            streak = streak + 1 if change < config.convergence_tol else 0
            if streak >= config.patience:
                stop = "converged"
                break
        previous = l_mix

    report.iterations = len(report.records)
    report.wall_time = time.perf_counter() - started
    report.stop_reason = stop
    return report


def fit(
    net: AttributedNetwork,
    config: TrainConfig,
    *,
    on_iteration: Callable[[LossRecord], None] | None = None,
) -> tuple[ModelParams, EmbeddingMatrix, TrainReport]:
    """Pretrain (unless disabled) and fine-tune a model on ``net``.

    Training stops after ``max_iters`` iterations, or once the relative change of
    ``L_mix`` stays below ``convergence_tol`` for ``patience`` consecutive iterations.
    In mini-batch mode one iteration is one epoch. When the loss stops being finite the
    attempt restarts from the same initial parameters with half the learning rate, at
    most ``max_retries`` times.

    Parameters
    ----------
    net : AttributedNetwork
        The training network.
    config : TrainConfig
        Hyperparameters; validated against ``(n, m)`` first.
    on_iteration : Callable | None
        Called with each iteration's loss record.

    Returns
    -------
    tuple
        ``(params, embeddings, report)``.

    Raises
    ------
    ConfigError
        If the layer structure does not fit the network.
    TrainingError
        If every attempt diverged.
    """
    config.validate_for(net.n, net.m)
    _log.info(
        "Fitting %s on n=%d m=%d l=%d for up to %d iterations",
        config.spec,
        net.n,
        net.m,
        net.num_edges,
        config.max_iters,
    )
    start = initial_params(net, config)
    lr = config.lr
    for attempt in range(config.max_retries + 1):
        params = start.copy()
        try:
            report = _fine_tune(net, config, params, lr, on_iteration)
        except _Diverged as exc:
            if attempt == config.max_retries:
                msg = (
                    f"loss became {exc.loss} at iteration {exc.iteration} "
                    f"after {attempt} learning-rate halving(s); last lr={lr}"
                )
                raise TrainingError(exc.iteration, exc.loss, msg) from None
            _log.warning(
                "Loss became %s at iteration %d with lr=%g; retrying with lr=%g.",
                exc.loss,
                exc.iteration,
                lr,
                lr / 2,
            )
            lr /= 2
            continue
        _log.info(
            "Stopped after %d iteration(s) (%s), L_mix=%.6g",
            report.iterations,
            report.stop_reason,
            report.losses[-1],
        )
        return params, embed_network(params, net), report
    msg = "unreachable"
    raise AssertionError(msg)
