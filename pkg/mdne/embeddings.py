"""Node embedding matrices and their text file format.

File layout::

    #mdne v1 n=<n> d=<d>
    <node_id>\\t<f1>\\t...\\t<fd>

Values are written with 17 significant digits, enough to read back every float64
exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .errors import ParseError
from .model import encode

if TYPE_CHECKING:
    from .graph import AttributedNetwork
    from .model import ModelParams
    from .tensor import Matrix

__all__ = ("EmbeddingMatrix", "embed_network", "load_embeddings", "save_embeddings")

_HEADER = re.compile(r"^#mdne v1 n=(\d+) d=(\d+)$")
EMBED_BATCH = 1024


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """Final representations, row ``i`` belonging to ``node_ids[i]``."""

    node_ids: tuple[str, ...]
    values: Matrix

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def d(self) -> int:
        return int(self.values.shape[1])

    def scaled(self, factor: float) -> EmbeddingMatrix:
        """Every vector multiplied by ``factor``."""
        return EmbeddingMatrix(self.node_ids, self.values * factor)


def embed_network(
    params: ModelParams,
    net: AttributedNetwork,
    batch_size: int = EMBED_BATCH,
) -> EmbeddingMatrix:
    """Encode every node of ``net``, densifying ``batch_size`` rows at a time."""
    s = net.structure_matrix()
    a = net.attribute_matrix()
    chunks = [
        encode(
            params,
            s[start : start + batch_size].toarray(),
            a[start : start + batch_size].toarray(),
        )
        for start in range(0, net.n, batch_size)
    ]
    values = np.vstack(chunks) if chunks else np.empty((0, params.spec.d))
    return EmbeddingMatrix(net.node_ids, values)


def save_embeddings(emb: EmbeddingMatrix, path: Path | str) -> None:
    """Write ``emb`` in the embeddings text format."""
    lines = [f"#mdne v1 n={emb.n} d={emb.d}"]
    lines.extend(
        node_id + "\t" + "\t".join(f"{value:.17g}" for value in row)
        for node_id, row in zip(emb.node_ids, emb.values.tolist(), strict=True)
    )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_embeddings(path: Path | str) -> EmbeddingMatrix:
    """Read an embeddings file.

    Raises
    ------
    ParseError
        On a missing header, a row with the wrong column count, or a row count that
        disagrees with the header.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or (header := _HEADER.match(lines[0])) is None:
        raise ParseError(path, 1, "missing '#mdne v1 n=<n> d=<d>' header")
    n, d = int(header.group(1)), int(header.group(2))
    node_ids: list[str] = []
    rows: list[list[float]] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != d + 1:
            raise ParseError(path, line_no, f"expected {d} values, got {len(fields) - 1}")
        try:
            rows.append([float(value) for value in fields[1:]])
        except ValueError:
            raise ParseError(path, line_no, "non-numeric embedding value") from None
        node_ids.append(fields[0])
    if len(rows) != n:
        raise ParseError(path, 1, f"header says n={n} but {len(rows)} rows follow")
    values = np.array(rows, dtype=np.float64).reshape(n, d)
    return EmbeddingMatrix(tuple(node_ids), values)
