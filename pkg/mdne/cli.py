"""Command-line entry point: ``mdne train | eval | embed-node | sweep``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import __version__
from .checkpoint import MAGIC, load_checkpoint, save_checkpoint
from .embeddings import EmbeddingMatrix, embed_network, load_embeddings, save_embeddings
from .errors import (
    CheckpointError,
    ConfigError,
    ContractError,
    DataError,
    EvaluationError,
    MDNEException,
    ShapeError,
)
from .evaluation import (
    attribute_prediction_auc,
    classify,
    link_prediction_auc,
    network_reconstruction,
    write_metric_csv,
)
from .model import embed_new_node
from .models.experiment import ExperimentConfig, load_grid
from .models.report import MetricRow
from .splits import split_attributes, split_links
from .sweep import classification_objective, grid_search, reconstruction_objective, write_grid_csv
from .trainer import fit

if TYPE_CHECKING:
    from collections.abc import Sequence

    from .graph import AttributedNetwork

__all__ = ("main",)

_log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3
RETRAINING_TASKS = frozenset({"linkpred", "attrpred"})

_VALIDATION_ERRORS = (
    CheckpointError,
    ConfigError,
    ContractError,
    DataError,
    EvaluationError,
    ShapeError,
)

console = Console()


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        msg = f"expected a positive integer, got {text}"
        raise argparse.ArgumentTypeError(msg)
    return value


def build_parser() -> argparse.ArgumentParser:
    """The ``mdne`` argument parser."""
    parser = argparse.ArgumentParser(
        prog="mdne",
        description="Multimodal deep embedding of attributed networks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)

    def experiment(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--config", type=Path, required=True, help="TOML experiment file")
        sub.add_argument("--seed", type=int, help="override the experiment seed")
        sub.add_argument("--out", type=Path, help="override the output directory")
        return sub

    experiment("train", "train a model and write checkpoint, embeddings and loss report")

    evaluate = experiment("eval", "run evaluation protocols and write metrics CSVs")
    evaluate.add_argument(
        "--task",
        choices=("reconstruct", "linkpred", "attrpred", "classify"),
        help="protocol to run; defaults to every task listed in [eval] tasks",
    )
    evaluate.add_argument(
        "--input",
        type=Path,
        help="checkpoint or embeddings file to score (reconstruct and classify only)",
    )
    evaluate.add_argument("--k", type=_positive_int, nargs="+", help="precision@k cut-offs")
    evaluate.add_argument("--ratio", type=float, nargs="+", help="hidden or test fractions")

    node = commands.add_parser("embed-node", help="embed an unseen node from a checkpoint")
    node.add_argument("--checkpoint", type=Path, required=True)
    node.add_argument("--structure", type=Path, help="file with the node's raw adjacency row")
    node.add_argument("--attributes", type=Path, help="file with the node's raw attribute row")

    sweep = experiment("sweep", "coordinate-wise grid search over hyperparameters")
    sweep.add_argument("--grid", type=Path, help="TOML file with a [grid] table")
    sweep.add_argument("--threads", type=_positive_int, help="worker processes")
    return parser


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _load_experiment(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config).with_overrides(
        seed=args.seed,
        output_dir=args.out,
        threads=getattr(args, "threads", None),
    )
    config.output_dir.mkdir(parents=True, exist_ok=True)
    return config


def _table(title: str, columns: Sequence[str], rows: Sequence[Sequence[object]]) -> Table:
    table = Table(title=title)
    for column in columns:
        table.add_column(column)
    for row in rows:
        table.add_row(*(f"{cell:.4f}" if isinstance(cell, float) else str(cell) for cell in row))
    return table


def cmd_train(args: argparse.Namespace) -> int:
    """Train on the configured dataset and write model, embeddings and loss report."""
    config = _load_experiment(args)
    net = config.dataset.load()
    stats = net.stats()
    console.print(
        _table(
            config.dataset.name,
            ("nodes", "edges", "attributes", "nonzero attributes", "classes"),
            [(stats.n, stats.l, stats.m, stats.f, stats.classes)],
        ),
    )

    params, emb, report = fit(net, config.training)
    out = config.output_dir
    save_checkpoint(params, out / "model.ckpt")
    save_embeddings(emb, out / "embeddings.tsv")
    report.to_csv(out / "train_report.csv")

    last = report.records[-1]
    console.print(
        _table(
            f"{report.iterations} iteration(s), {report.stop_reason}, {report.wall_time:.1f}s",
            ("L_mix", "L_1st", "L_2nd", "L_att", "L_reg"),
            [(last.l_mix, last.l_1st, last.l_2nd, last.l_att, last.l_reg)],
        ),
    )
    _log.info("Wrote model.ckpt, embeddings.tsv and train_report.csv to %s", out)
    return EXIT_OK


def _aligned(emb: EmbeddingMatrix, net: AttributedNetwork) -> EmbeddingMatrix:
    if emb.node_ids == net.node_ids:
        return emb
    position = {node_id: i for i, node_id in enumerate(emb.node_ids)}
    missing = [node_id for node_id in net.node_ids if node_id not in position]
    if missing or emb.n != net.n:
        msg = f"embeddings do not cover the network's nodes (e.g. {missing[:3]})"
        raise ContractError(msg)
    order = [position[node_id] for node_id in net.node_ids]
    return EmbeddingMatrix(net.node_ids, emb.values[order])


def _artifact_embeddings(path: Path, net: AttributedNetwork) -> EmbeddingMatrix:
    with path.open("rb") as fh:
        is_checkpoint = fh.read(len(MAGIC)) == MAGIC
    if is_checkpoint:
        params = load_checkpoint(path)
        if (params.n, params.m) != (net.n, net.m):
            msg = f"checkpoint expects n={params.n} m={params.m}, network has n={net.n} m={net.m}"
            raise ContractError(msg)
        return embed_network(params, net)
    return _aligned(load_embeddings(path), net)


def _eval_rows(
    args: argparse.Namespace,
    config: ExperimentConfig,
    net: AttributedNetwork,
    task: str,
) -> list[MetricRow]:
    seed, name = config.seed, config.dataset.name

    def row(param: float, metric: str, value: float) -> MetricRow:
        return MetricRow(
            task=task,
            dataset=name,
            param=param,
            metric=metric,
            value=value,
            seed=seed,
        )

    if task in RETRAINING_TASKS:
        rows: list[MetricRow] = []
        defaults = config.eval.link_ratios if task == "linkpred" else config.eval.attr_ratios
        ratios = args.ratio or defaults
        for ratio in ratios:
            if task == "linkpred":
                split = split_links(net, ratio, seed)
                _, emb, _ = fit(split.train_network, config.training)
                value = link_prediction_auc(emb, split)
            else:
                split = split_attributes(net, ratio, seed)
                _, emb, _ = fit(split.train_network, config.training)
                value = attribute_prediction_auc(emb, split, split.train_network)
            rows.append(row(ratio, "auc", value))
        return rows

    def embeddings() -> EmbeddingMatrix:
        if args.input is not None:
            return _artifact_embeddings(args.input, net)
        return fit(net, config.training)[1]

    if task == "reconstruct":
        ks = args.k or config.eval.ks
        result = network_reconstruction(embeddings(), net, ks)
        return [row(k, f"precision@{k}", result.metrics[k]) for k in ks]

    labels = net.labels
    if labels is None:
        msg = f"dataset {name!r} has no labels to classify"
        raise EvaluationError(msg)
    emb = embeddings()
    rows = []
    for ratio in args.ratio or config.eval.test_ratios:
        micro, macro = classify(emb, labels, ratio, seed, config.eval.repeats)
        rows += [row(ratio, "micro_f1", micro), row(ratio, "macro_f1", macro)]
    return rows


def cmd_eval(args: argparse.Namespace) -> int:
    """Run ``--task``, or every task in ``[eval] tasks``, writing ``metrics_<task>.csv`` each."""
    config = _load_experiment(args)
    tasks = [args.task] if args.task is not None else list(dict.fromkeys(config.eval.tasks))
    retraining = [task for task in tasks if task in RETRAINING_TASKS]
    if args.input is not None and retraining:
        msg = f"{retraining[0]} trains on each masked network; --input is not accepted"
        raise ConfigError(msg)

    net = config.dataset.load()
    for task in tasks:
        rows = _eval_rows(args, config, net, task)
        path = config.output_dir / f"metrics_{task}.csv"
        write_metric_csv(rows, path)
        console.print(
            _table(
                f"{task} on {config.dataset.name}",
                ("ratio or k", "metric", "value"),
                [(row.as_csv()[2], row.metric, row.value) for row in rows],
            ),
        )
        _log.info("Wrote %s", path)
    return EXIT_OK


def _read_vector(path: Path) -> np.ndarray:
    try:
        return np.loadtxt(path, dtype=np.float64, ndmin=1).ravel()
    except (OSError, ValueError) as exc:
        msg = f"{path}: cannot read vector ({exc})"
        raise DataError(msg) from exc


def cmd_embed_node(args: argparse.Namespace) -> int:
    """Print the embedding of a node given by one or both modality files."""
    if args.structure is None and args.attributes is None:
        msg = "embed-node needs --structure, --attributes, or both"
        raise ContractError(msg)
    params = load_checkpoint(args.checkpoint)
    structure = _read_vector(args.structure) if args.structure is not None else None
    attributes = _read_vector(args.attributes) if args.attributes is not None else None
    vector = embed_new_node(params, structure, attributes)
    sys.stdout.write("\t".join(f"{value:.17g}" for value in vector) + "\n")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Grid-search hyperparameters and write the ranked ``sweep.csv``."""
    config = _load_experiment(args)
    grid = load_grid(args.grid) if args.grid is not None else config.sweep.grid
    if not grid:
        msg = "no grid given: pass --grid or add a [sweep.grid] table"
        raise ConfigError(msg)
    net = config.dataset.load()
    objective = (
        reconstruction_objective(config.sweep.k)
        if config.sweep.objective == "reconstruct"
        else classification_objective(config.sweep.test_ratio, config.eval.repeats)
    )
    cells = grid_search(
        net,
        config.training,
        grid,
        objective,
        rounds=config.sweep.rounds,
        threads=config.threads,
    )
    path = config.output_dir / "sweep.csv"
    write_grid_csv(cells, path)
    console.print(
        _table(
            f"{config.sweep.objective} sweep on {config.dataset.name}",
            ("cell", "params", "score"),
            [
                (cell.index, cell.params, cell.score if cell.score is not None else cell.error)
                for cell in cells
            ],
        ),
    )
    _log.info("Wrote %s", path)
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "embed-node": cmd_embed_node,
    "sweep": cmd_sweep,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return its exit code.

    0 on success, 2 for invalid configuration, data or arguments, 3 for training and
    other runtime failures.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except (*_VALIDATION_ERRORS, OSError) as exc:
        print(f"mdne: error: {exc}", file=sys.stderr)  # noqa: T201
        return EXIT_VALIDATION
    except MDNEException as exc:
        print(f"mdne: error: {exc}", file=sys.stderr)  # noqa: T201
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
