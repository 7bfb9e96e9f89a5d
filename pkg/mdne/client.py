from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Any, Self

from .checkpoint import load_checkpoint, save_checkpoint
from .embeddings import EmbeddingMatrix, embed_network, save_embeddings
from .errors import ContractError
from .model import embed_new_node
from .models.config import TrainConfig
from .trainer import fit

if TYPE_CHECKING:
    from collections.abc import Callable
    from pathlib import Path
    from types import TracebackType

    import numpy as np
    import numpy.typing as npt

    from .graph import AttributedNetwork
    from .model import ModelParams
    from .models.report import LossRecord, TrainReport

__all__ = ("MDNE",)

_log = logging.getLogger(__name__)


class MDNE:
    """High-level handle on one multimodal embedding model.

    Parameters
    ----------
    config : TrainConfig | None
        Training hyperparameters; defaults are used when omitted.
    **overrides
        Dotted-path overrides applied on top of ``config``, with ``__`` standing in
        for the dot, e.g. ``weights__lambda=0.02``.

    Examples
    --------
    ::

        with MDNE(max_iters=200) as model:
            emb = model.fit(net)
            model.save("cora.ckpt")
    """

    def __init__(self, config: TrainConfig | None = None, **overrides: Any) -> None:
        base = config or TrainConfig()
        self.config = (
            base.override({key.replace("__", "."): value for key, value in overrides.items()})
            if overrides
            else base
        )
        self._params: ModelParams | None = None
        self.embeddings: EmbeddingMatrix | None = None
        self.report: TrainReport | None = None

    def __enter__(self) -> Self:
        """Enter the context manager and return the model."""
        return self

    def __exit__(
        self,
        type: type[BaseException] | None,  # noqa: A002
        value: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        """Release the trained parameters when leaving the context."""
        self.close()

    def close(self) -> None:
        """Drop the parameters, embeddings and report."""
        self._params = None
        self.embeddings = None
        self.report = None

    @property
    def params(self) -> ModelParams:
        """The trained parameters.

        Raises
        ------
        ContractError
            If the model has neither been fitted nor loaded.
        """
        if self._params is None:
            msg = "model is not trained; call fit() or load() first"
            raise ContractError(msg)
        return self._params

    @property
    def is_trained(self) -> bool:
        return self._params is not None

    def fit(
        self,
        net: AttributedNetwork,
        *,
        on_iteration: Callable[[LossRecord], None] | None = None,
    ) -> EmbeddingMatrix:
        """Train on ``net`` and return the embeddings of its nodes."""
        self._params, self.embeddings, self.report = fit(
            net,
            self.config,
            on_iteration=on_iteration,
        )
        return self.embeddings

    def embed(self, net: AttributedNetwork) -> EmbeddingMatrix:
        """Encode every node of ``net`` with the trained parameters.

        Raises
        ------
        ContractError
            If ``net`` does not have the node and attribute counts the model was built for.
        """
        params = self.params
        if (net.n, net.m) != (params.n, params.m):
            msg = f"model expects n={params.n} m={params.m}, network has n={net.n} m={net.m}"
            raise ContractError(msg)
        return embed_network(params, net)

    def embed_new_node(
        self,
        structure: npt.ArrayLike | None = None,
        attributes: npt.ArrayLike | None = None,
    ) -> npt.NDArray[np.float64]:
        """Embed an unseen node from its adjacency row, attribute row, or both."""
        return embed_new_node(self.params, structure, attributes)

    def save(self, path: Path | str) -> None:
        """Write the parameters as a checkpoint."""
        save_checkpoint(self.params, path)
        _log.info("Saved checkpoint to %s", path)

    def save_embeddings(self, path: Path | str) -> None:
        """Write the embeddings from the last :meth:`fit`."""
        if self.embeddings is None:
            msg = "no embeddings to save; call fit() first"
            raise ContractError(msg)
        save_embeddings(self.embeddings, path)

    @classmethod
    def load(cls, path: Path | str, config: TrainConfig | None = None) -> Self:
        """Restore a model from a checkpoint; ``config`` is kept for later refits."""
        params = load_checkpoint(path)
        model = cls(config or TrainConfig(spec=params.spec))
        model._params = params
        return model
