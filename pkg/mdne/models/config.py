from __future__ import annotations

from typing import TYPE_CHECKING, Any, ClassVar, Literal

from pydantic import Field, PositiveInt, ValidationError, field_validator

from mdne.errors import ConfigError

from .base import ConfigModel

if TYPE_CHECKING:
    from collections.abc import Mapping

__all__ = (
    "FULL_BATCH_LIMIT",
    "LayerSpec",
    "LossWeights",
    "PenaltyConfig",
    "RbmConfig",
    "TrainConfig",
)

FULL_BATCH_LIMIT = 5000
AUTO_BATCH_SIZE = 1024


class LayerSpec(ConfigModel):
    """Layer widths of the multimodal autoencoder.

    ``(n, m)-(pre_struct_dim, pre_attr_dim)-hidden_dims`` in the usual notation. With
    ``preprocess`` off the two pre-processing layers become a single joint layer of
    width ``pre_struct_dim + pre_attr_dim`` over the concatenated input.
    """

    PRESETS: ClassVar[dict[str, tuple[int, int, tuple[int, ...]]]] = {
        "cora": (300, 200, (128,)),
        "citeseer": (250, 250, (128,)),
        "unc": (3000, 500, (128,)),
        "oklahoma": (3600, 650, (128,)),
    }

    pre_struct_dim: PositiveInt = Field(default=300, description="Structure pre-processing width.")
    pre_attr_dim: PositiveInt = Field(default=200, description="Attribute pre-processing width.")
    hidden_dims: list[PositiveInt] = Field(
        default_factory=lambda: [128],
        min_length=1,
        description="Encoder widths after the pre-processing layer, ending in d.",
    )
    preprocess: bool = Field(default=True, description="Per-modality pre-processing layers.")

    @classmethod
    def preset(cls, name: str, *, preprocess: bool = True) -> LayerSpec:
        """Return one of the published layer structures by dataset name."""
        try:
            struct, attr, hidden = cls.PRESETS[name.lower()]
        except KeyError:
            msg = f"unknown layer preset {name!r}, expected one of {sorted(cls.PRESETS)}"
            raise ConfigError(msg) from None
        return cls(
            pre_struct_dim=struct,
            pre_attr_dim=attr,
            hidden_dims=list(hidden),
            preprocess=preprocess,
        )

    @property
    def d(self) -> int:
        """Embedding dimension."""
        return self.hidden_dims[-1]

    @property
    def joint_dim(self) -> int:
        """Width of the concatenated pre-processing output."""
        return self.pre_struct_dim + self.pre_attr_dim

    def widths(self, n: int, m: int) -> list[int]:
        """Total layer widths from the input up to the embedding layer."""
        return [n + m, self.joint_dim, *self.hidden_dims]

    def validate_for(self, n: int, m: int) -> None:
        """Check that the tower is undercomplete for ``n`` nodes and ``m`` attributes.

        Raises
        ------
        ConfigError
            If a layer is not strictly narrower than the one below it, or ``d`` is not
            smaller than ``min(n, m)``.
        """
        widths = self.widths(n, m)
        for lower, upper in zip(widths, widths[1:], strict=False):
            if upper >= lower:
                msg = f"layer widths {widths} are not strictly decreasing"
                raise ConfigError(msg)
        if self.d >= min(n, m):
            msg = f"embedding dimension {self.d} must be smaller than min(n={n}, m={m})"
            raise ConfigError(msg)

    def __str__(self) -> str:
        hidden = "-".join(map(str, self.hidden_dims))
        if self.preprocess:
            return f"({self.pre_struct_dim},{self.pre_attr_dim})-{hidden}"
        return f"{self.joint_dim}-{hidden}"


class PenaltyConfig(ConfigModel):
    """Up-weighting of nonzero entries in the reconstruction losses."""

    gamma1: float = Field(default=10.0, gt=1.0, description="Nonzero adjacency penalty.")
    gamma2: float = Field(default=10.0, gt=1.0, description="Nonzero attribute penalty.")


class LossWeights(ConfigModel):
    """Weights of the attribute, second-order and regularization terms.

    The first-order term carries an implicit weight of one.
    """

    lambda_: float = Field(
        default=0.03,
        ge=0.0,
        alias="lambda",
        description="Attribute loss weight; midpoint of the stable range [0.02, 0.04].",
    )
    alpha: float = Field(default=0.5, ge=0.0, description="Second-order loss weight.")
    upsilon: float = Field(default=1e-4, ge=0.0, description="L2 regularization weight.")


class RbmConfig(ConfigModel):
    """Layer-wise RBM pretraining settings."""

    enabled: bool = True
    lr: float = Field(default=0.1, gt=0.0)
    epochs: PositiveInt = 30
    batch: PositiveInt = 64
    seed: int = Field(default=0, description="Replaced by the training seed inside fit.")


class TrainConfig(ConfigModel):
    """Everything :func:`mdne.trainer.fit` needs besides the network."""

    weights: LossWeights = Field(default_factory=LossWeights)
    penalties: PenaltyConfig = Field(default_factory=PenaltyConfig)
    spec: LayerSpec = Field(default_factory=LayerSpec)
    lr: float = Field(default=0.01, gt=0.0, description="Constant SGD step size.")
    max_iters: PositiveInt = Field(default=400, description="Iteration budget (epochs).")
    batch: Literal["full", "auto"] | PositiveInt = Field(
        default="auto",
        description="'full', a row count, or 'auto' (full up to 5000 nodes, else 1024).",
    )
    convergence_tol: float = Field(default=1e-5, ge=0.0)
    patience: PositiveInt = 5
    seed: int = 0
    max_retries: int = Field(default=3, ge=0, description="lr halvings after divergence.")
    pretrain: RbmConfig = Field(default_factory=RbmConfig)

    @field_validator("batch", mode="before")
    @classmethod
    def lower_batch(cls, v: Any) -> Any:
        """Accept case-insensitive batch keywords."""
        if isinstance(v, str) and not v.strip().isdigit():
            return v.strip().lower()
        return v

    def batch_size(self, n: int) -> int:
        """Resolve the batch policy to a row count for an ``n``-node network."""
        if self.batch == "full":
            return n
        if self.batch == "auto":
            return n if n <= FULL_BATCH_LIMIT else AUTO_BATCH_SIZE
        return min(self.batch, n)

    def validate_for(self, n: int, m: int) -> None:
        """Check this configuration against network dimensions."""
        self.spec.validate_for(n, m)

    def override(self, overrides: Mapping[str, Any]) -> TrainConfig:
        """Return a copy with dotted-path fields replaced, e.g. ``{"weights.lambda": 0.02}``.

        Raises
        ------
        ConfigError
            If a path does not name a field or a value fails validation.
        """
        data = self.model_dump()
        for path, value in overrides.items():
            parts = ["lambda_" if part == "lambda" else part for part in path.split(".")]
            node = data
            for part in parts[:-1]:
                if not isinstance(node.get(part), dict):
                    msg = f"unknown configuration path {path!r}"
                    raise ConfigError(msg)
                node = node[part]
            if parts[-1] not in node:
                msg = f"unknown configuration path {path!r}"
                raise ConfigError(msg)
            node[parts[-1]] = value
        try:
            return TrainConfig.model_validate(data)
        except ValidationError as exc:
            raise ConfigError("invalid override", validation=exc) from exc
