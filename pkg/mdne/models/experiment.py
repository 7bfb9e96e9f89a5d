from __future__ import annotations

import tomllib
from pathlib import Path
from typing import TYPE_CHECKING, Any, Literal

from pydantic import Field, PositiveInt, ValidationError, field_validator, model_validator

from mdne.errors import ConfigError
from mdne.graph import load_cora_format, load_generic, load_network

from .base import ConfigModel
from .config import TrainConfig

if TYPE_CHECKING:
    from mdne.graph import AttributedNetwork

__all__ = (
    "DatasetConfig",
    "EvalConfig",
    "EvalTask",
    "ExperimentConfig",
    "SweepConfig",
    "load_grid",
)

EvalTask = Literal["reconstruct", "linkpred", "attrpred", "classify"]
Ratio = float


def _flatten(table: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in table.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{path}."))
        else:
            flat[path] = value
    return flat


class DatasetConfig(ConfigModel):
    """Where the network comes from.

    ``cora`` reads a ``.content``/``.cites`` pair, ``generic`` an edge list plus an
    attribute table (and optional labels), ``canonical`` a file written by
    :func:`mdne.graph.save_network`.
    """

    name: str = Field(default="network", description="Dataset column of metric CSVs.")
    format: Literal["cora", "generic", "canonical"] = "cora"
    content: Path | None = None
    cites: Path | None = None
    edges: Path | None = None
    attributes: Path | None = None
    labels: Path | None = None
    path: Path | None = None
    binarize: bool = True
    weighted: bool = True

    @model_validator(mode="after")
    def check_paths(self) -> DatasetConfig:
        """Require the paths the chosen format reads."""
        required = {
            "cora": ("content", "cites"),
            "generic": ("edges", "attributes"),
            "canonical": ("path",),
        }[self.format]
        missing = [key for key in required if getattr(self, key) is None]
        if missing:
            msg = f"format {self.format!r} needs {', '.join(missing)}"
            raise ValueError(msg)
        return self

    def resolved(self, base: Path) -> DatasetConfig:
        """Copy with every relative path anchored at ``base``."""
        update = {
            key: base / value
            for key in ("content", "cites", "edges", "attributes", "labels", "path")
            if (value := getattr(self, key)) is not None and not value.is_absolute()
        }
        return self.model_copy(update=update)

    def load(self) -> AttributedNetwork:
        """Read the network this section describes."""
        if self.format == "cora":
            return load_cora_format(self.content, self.cites)  # type: ignore[arg-type]
        if self.format == "generic":
            return load_generic(
                self.edges,  # type: ignore[arg-type]
                self.attributes,  # type: ignore[arg-type]
                self.labels,
                binarize=self.binarize,
                weighted=self.weighted,
            )
        return load_network(self.path)  # type: ignore[arg-type]


class EvalConfig(ConfigModel):
    """Which protocols ``mdne eval`` runs and with what parameters."""

    tasks: list[EvalTask] = Field(default_factory=lambda: ["reconstruct"])
    ks: list[PositiveInt] = Field(
        default_factory=lambda: [1000, 3000, 5000],
        description="precision@k cut-offs.",
    )
    link_ratios: list[Ratio] = Field(
        default_factory=lambda: [0.05, 0.15, 0.25, 0.35, 0.45],
        description="Fractions of edges hidden for link prediction.",
    )
    attr_ratios: list[Ratio] = Field(
        default_factory=lambda: [0.05, 0.15, 0.25, 0.35, 0.45],
        description="Fractions of attribute cells hidden for attribute prediction.",
    )
    test_ratios: list[Ratio] = Field(
        default_factory=lambda: [0.1, 0.3, 0.5, 0.7, 0.9],
        description="Classification test fractions.",
    )
    repeats: PositiveInt = Field(default=10, description="Random splits averaged per ratio.")

    @field_validator("link_ratios", "attr_ratios", "test_ratios")
    @classmethod
    def check_ratios(cls, v: list[float]) -> list[float]:
        """Every ratio must be a proper fraction."""
        for value in v:
            if not 0.0 < value < 1.0:
                msg = f"ratio {value} must lie strictly between 0 and 1"
                raise ValueError(msg)
        return v


class SweepConfig(ConfigModel):
    """Grid search settings for ``mdne sweep``."""

    objective: Literal["reconstruct", "classify"] = "reconstruct"
    k: PositiveInt = Field(default=1000, description="Cut-off of the reconstruction objective.")
    test_ratio: Ratio = Field(default=0.1, gt=0.0, lt=1.0)
    rounds: PositiveInt = Field(default=1, description="Coordinate-wise passes over the grid.")
    grid: dict[str, list[Any]] = Field(default_factory=dict)

    @field_validator("grid", mode="before")
    @classmethod
    def flatten_grid(cls, v: Any) -> Any:
        """Accept nested tables as well as quoted dotted keys."""
        return _flatten(v) if isinstance(v, dict) else v


class ExperimentConfig(ConfigModel):
    """A complete, validated experiment file."""

    seed: int = Field(default=0, description="Seeds training, splits and classifiers.")
    output_dir: Path = Path("runs")
    threads: PositiveInt = Field(default=1, description="Worker processes for sweeps.")
    dataset: DatasetConfig
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)

    @classmethod
    def from_file(cls, path: Path | str) -> ExperimentConfig:
        """Read and validate a TOML experiment file.

        Relative dataset paths and ``output_dir`` are resolved against the file's
        directory.

        Raises
        ------
        ConfigError
            If the file is unreadable, is not TOML, or fails validation.
        """
        path = Path(path)
        data = _read_toml(path)
        try:
            config = cls.model_validate(data)
        except ValidationError as exc:
            raise ConfigError(f"{path}: invalid experiment", validation=exc) from exc
        base = path.parent
        output_dir = config.output_dir
        if not output_dir.is_absolute():
            output_dir = base / output_dir
        return config.model_copy(
            update={"dataset": config.dataset.resolved(base), "output_dir": output_dir},
        )

    @property
    def training(self) -> TrainConfig:
        """The training section with the experiment seed applied."""
        return self.train.model_copy(update={"seed": self.seed})

    def with_overrides(
        self,
        *,
        seed: int | None = None,
        output_dir: Path | None = None,
        threads: int | None = None,
    ) -> ExperimentConfig:
        """Apply command-line overrides."""
        update: dict[str, Any] = {}
        if seed is not None:
            update["seed"] = seed
        if output_dir is not None:
            update["output_dir"] = output_dir
        if threads is not None:
            if threads < 1:
                msg = f"threads must be positive, got {threads}"
                raise ConfigError(msg)
            update["threads"] = threads
        return self.model_copy(update=update)


def _read_toml(path: Path) -> dict[str, Any]:
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        msg = f"{path}: cannot read configuration ({exc.strerror})"
        raise ConfigError(msg) from exc
    except tomllib.TOMLDecodeError as exc:
        msg = f"{path}: {exc}"
        raise ConfigError(msg) from exc


def load_grid(path: Path | str) -> dict[str, list[Any]]:
    """Read a grid file: a ``[grid]`` table of dotted parameter paths to value lists.

    Raises
    ------
    ConfigError
        If the table is missing, empty, or maps a key to something other than a
        non-empty list.
    """
    path = Path(path)
    table = _read_toml(path).get("grid")
    if not isinstance(table, dict) or not table:
        msg = f"{path}: expected a non-empty [grid] table"
        raise ConfigError(msg)
    grid = _flatten(table)
    for key, values in grid.items():
        if not isinstance(values, list) or not values:
            msg = f"{path}: grid entry {key!r} must be a non-empty list"
            raise ConfigError(msg)
    return grid
