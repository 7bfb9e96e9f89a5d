"""Coordinate-wise hyperparameter grid search."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from .errors import ConfigError, EvaluationError, MDNEException
from .evaluation import classify, network_reconstruction
from .models.report import GridCell
from .trainer import fit

if TYPE_CHECKING:
    from collections.abc import Callable, Mapping, Sequence

    from .graph import AttributedNetwork
    from .models.config import TrainConfig

    Objective = Callable[[AttributedNetwork, TrainConfig], float]

__all__ = (
    "cell_seed",
    "classification_objective",
    "grid_search",
    "rank_cells",
    "reconstruction_objective",
    "write_grid_csv",
)

_log = logging.getLogger(__name__)


def _reconstruction_score(net: AttributedNetwork, config: TrainConfig, *, k: int) -> float:
    _, emb, _ = fit(net, config)
    return network_reconstruction(emb, net, [k]).metrics[k]


def _classification_score(
    net: AttributedNetwork,
    config: TrainConfig,
    *,
    test_ratio: float,
    repeats: int,
) -> float:
    if net.labels is None:
        msg = "classification objective needs a labelled network"
        raise EvaluationError(msg)
    _, emb, _ = fit(net, config)
    micro, _ = classify(emb, net.labels, test_ratio, config.seed, repeats)
    return micro


def reconstruction_objective(k: int) -> Objective:
    """Train, then score precision@``k`` of network reconstruction."""
    return partial(_reconstruction_score, k=k)


def classification_objective(
    test_ratio: float,
    repeats: int = 10,
) -> Objective:
    """Train, then score the average micro-F1 of node classification."""
    return partial(_classification_score, test_ratio=test_ratio, repeats=repeats)


def cell_seed(seed: int, index: int) -> int:
    """Training seed of the ``index``-th grid cell."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _current_value(config: TrainConfig, path: str) -> Any:
    node: Any = config.model_dump()
    for part in path.split("."):
        node = node["lambda_" if part == "lambda" else part]
    return node


def _evaluate(
    net: AttributedNetwork,
    config: TrainConfig,
    objective: Objective,
) -> tuple[float | None, str | None]:
    try:
        return float(objective(net, config)), None
    except MDNEException as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _run_cells(
    executor: ProcessPoolExecutor | None,
    net: AttributedNetwork,
    configs: list[TrainConfig],
    objective: Objective,
) -> list[tuple[float | None, str | None]]:
    if executor is None:
        return [_evaluate(net, config, objective) for config in configs]
    count = len(configs)
    return list(executor.map(_evaluate, [net] * count, configs, [objective] * count))


def grid_search(
    net: AttributedNetwork,
    base_config: TrainConfig,
    grid: Mapping[str, Sequence[Any]],
    objective: Objective,
    *,
    rounds: int = 1,
    threads: int = 1,
) -> list[GridCell]:
    """Tune one hyperparameter at a time, keeping the best value before moving on.

    Each round walks the grid keys in order. For a key, every candidate value is trained
    and scored with the other keys at their current best; the winner (first on ties) is
    then fixed. Combinations already scored in an earlier step are reused rather than
    retrained. Cell ``i`` trains with seed ``cell_seed(base_config.seed, i)`` whatever
    the thread count, so results do not depend on parallelism.

    Parameters
    ----------
    net : AttributedNetwork
        The training network.
    base_config : TrainConfig
        Values of every field the grid does not name, and starting values for those it does.
    grid : Mapping[str, Sequence]
        Dotted field paths, e.g. ``"weights.lambda"`` or ``"spec.hidden_dims"``, to
        candidate values.
    objective : Callable
        ``(net, config) -> score``; higher is better. Must be picklable when
        ``threads > 1``.
    rounds : int
        Passes over the keys.
    threads : int
        Worker processes evaluating the values of one key concurrently.

    Returns
    -------
    list[GridCell]
        Every evaluated cell, best score first; failed cells last.

    Raises
    ------
    ConfigError
        If the grid is empty, a key has no values, or a key names no field.
    """
    if not grid:
        msg = "grid search needs at least one parameter"
        raise ConfigError(msg)
    for key, values in grid.items():
        if not values:
            msg = f"grid entry {key!r} has no values"
            raise ConfigError(msg)
        base_config.override({key: values[0]})

    current = {key: _current_value(base_config, key) for key in grid}
    scored: dict[str, GridCell] = {}
    cells: list[GridCell] = []
    executor = ProcessPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for round_no in range(rounds):
            for key, values in grid.items():
                candidates = [{**current, key: value} for value in values]
                pending: list[dict[str, Any]] = []
                for params in candidates:
                    if repr(params) not in scored and params not in pending:
                        pending.append(params)
                configs: list[tuple[int, dict[str, Any], TrainConfig | None, str | None]] = []
                for params in pending:
                    index = len(cells) + len(configs)
                    try:
                        config = base_config.override(
                            {**params, "seed": cell_seed(base_config.seed, index)},
                        )
                    except ConfigError as exc:
                        configs.append((index, params, None, f"ConfigError: {exc}"))
                    else:
                        configs.append((index, params, config, None))

                runnable = [config for _, _, config, _ in configs if config is not None]
                outcomes = iter(_run_cells(executor, net, runnable, objective))
                for index, params, config, error in configs:
                    score, error = (None, error) if config is None else next(outcomes)
                    cell = GridCell(
                        index=index,
                        params=params,
                        score=score,
                        error=error,
                        seed=cell_seed(base_config.seed, index),
                    )
                    _log.info(
                        "Round %d cell %d %s: %s",
                        round_no,
                        index,
                        params,
                        error or f"score={score:.6g}",
                    )
                    scored[repr(params)] = cell
                    cells.append(cell)

                best_score = -np.inf
                for params in candidates:
                    score = scored[repr(params)].score
                    if score is not None and score > best_score:
                        best_score = score
                        current[key] = params[key]
    finally:
        if executor is not None:
            executor.shutdown()
    return rank_cells(cells)


def rank_cells(cells: Sequence[GridCell]) -> list[GridCell]:
    """Best score first, ties by cell index, failed cells last."""
    return sorted(
        cells,
        key=lambda cell: (cell.score is None, -(cell.score or 0.0), cell.index),
    )


def write_grid_csv(cells: Sequence[GridCell], path: Path | str) -> None:
    """Write ranked cells with one column per grid key."""
    keys = list(dict.fromkeys(key for cell in cells for key in cell.params))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "cell", *keys, "score", "seed", "error"])
        for rank, cell in enumerate(cells, start=1):
            writer.writerow(
                [
                    rank,
                    cell.index,
                    *(cell.params.get(key, "") for key in keys),
                    "" if cell.score is None else repr(cell.score),
                    cell.seed,
                    cell.error or "",
                ],
            )
