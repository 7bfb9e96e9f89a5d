"""Attributed networks: storage, loaders for the cora and generic text formats, and a
canonical save format.

Canonical format (UTF-8, tab separated)::

    #mdne-network v1 n=<n> m=<m>
    [nodes]
    <node_id>                      one line per node, in index order
    [edges]
    <id_i> <id_j> <weight>         each undirected edge once, i < j
    [attrs]
    <node_id> <k>:<value> ...      nonzero attribute cells, k ascending
    [labels]
    <node_id> <class name>         optional section, labelled nodes only

Floats are written with ``repr`` so a load/save cycle is bit-identical.
"""

from __future__ import annotations

import dataclasses
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from .errors import EmptyInputError, ParseError

if TYPE_CHECKING:
    from collections.abc import Iterable, Iterator, Sequence

    from .tensor import Matrix

__all__ = (
    "AttributedNetwork",
    "NetworkStats",
    "load_cora_format",
    "load_generic",
    "load_network",
    "save_network",
)

_log = logging.getLogger(__name__)

_HEADER = re.compile(r"^#mdne-network v1 n=(\d+) m=(\d+)$")
UNLABELLED = -1


@dataclass(frozen=True, slots=True)
class NetworkStats:
    """Summary counts of a network."""

    n: int
    l: int  # noqa: E741
    m: int
    f: int
    classes: int


@dataclass(frozen=True, eq=False)
class AttributedNetwork:
    """An undirected graph whose nodes carry sparse attribute vectors.

    Attributes
    ----------
    node_ids: :class:`tuple` of :class:`str`
        External identifiers, position ``i`` is node ``i``.
    adjacency: :class:`scipy.sparse.csr_matrix`
        Symmetric ``n x n`` edge weights with an empty diagonal.
    attributes: :class:`scipy.sparse.csr_matrix`
        ``n x m`` attribute matrix.
    labels: :class:`numpy.ndarray` | None
        Dense class index per node, ``-1`` where unknown.
    label_names: :class:`tuple` of :class:`str`
        Class name of each class index.
    """

    node_ids: tuple[str, ...]
    adjacency: sp.csr_matrix
    attributes: sp.csr_matrix
    labels: npt.NDArray[np.int64] | None = None
    label_names: tuple[str, ...] = ()

    @classmethod
    def from_edges(
        cls,
        node_ids: Sequence[str],
        edges: Iterable[tuple[int, int, float]],
        attributes: sp.spmatrix | Matrix,
        labels: npt.NDArray[np.int64] | None = None,
        label_names: Sequence[str] = (),
    ) -> AttributedNetwork:
        """Build a network from index pairs.

        Self-loops are dropped and repeated pairs, in either orientation, collapse to
        one edge keeping the first weight seen.
        """
        n = len(node_ids)
        weights: dict[tuple[int, int], float] = {}
        for i, j, w in edges:
            if i == j:
                continue
            key = (i, j) if i < j else (j, i)
            weights.setdefault(key, float(w))
        return cls(
            node_ids=tuple(node_ids),
            adjacency=_symmetric(n, weights),
            attributes=_csr(attributes),
            labels=labels,
            label_names=tuple(label_names),
        )

    @property
    def n(self) -> int:
        """Node count."""
        return len(self.node_ids)

    @property
    def m(self) -> int:
        """Attribute count."""
        return int(self.attributes.shape[1])

    @property
    def num_edges(self) -> int:
        """Undirected edge count ``l``."""
        return int(sp.triu(self.adjacency, k=1).nnz)

    @property
    def has_labels(self) -> bool:
        """Whether at least one node carries a class label."""
        return self.labels is not None and bool(np.any(self.labels != UNLABELLED))

    def edge_list(self) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.float64]]:
        """Return ``(pairs, weights)`` with one row ``(i, j)``, ``i < j``, per edge.

        Pairs are in row-major order.
        """
        upper = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        pairs = np.stack([upper.row[order], upper.col[order]], axis=1).astype(np.int64)
        return pairs, upper.data[order].astype(np.float64)

    def edge_set(self) -> set[tuple[int, int]]:
        """All edges as ``(i, j)`` tuples with ``i < j``."""
        pairs, _ = self.edge_list()
        return {(int(i), int(j)) for i, j in pairs}

    def degrees(self) -> npt.NDArray[np.int64]:
        """Number of neighbours of each node."""
        return np.diff(self.adjacency.indptr).astype(np.int64)

    @property
    def structure_scale(self) -> float:
        """Largest edge weight, or 1.0 for an edgeless or unweighted network."""
        return _scale(self.adjacency)

    @property
    def attribute_scale(self) -> float:
        """Largest attribute value, or 1.0 when every value already lies in ``[0, 1]``."""
        return _scale(self.attributes)

    def structure_matrix(self) -> sp.csr_matrix:
        """Adjacency divided by :attr:`structure_scale`, the model's structure input."""
        return _scaled(self.adjacency, self.structure_scale)

    def attribute_matrix(self) -> sp.csr_matrix:
        """Attributes divided by :attr:`attribute_scale`, the model's attribute input."""
        return _scaled(self.attributes, self.attribute_scale)

    def index_of(self) -> dict[str, int]:
        """Map from external id to node index."""
        return {node_id: i for i, node_id in enumerate(self.node_ids)}

    def stats(self) -> NetworkStats:
        """Node, edge, attribute, nonzero-attribute and class counts."""
        return NetworkStats(
            n=self.n,
            l=self.num_edges,
            m=self.m,
            f=int(self.attributes.count_nonzero()),
            classes=len(self.label_names),
        )

    def replace(self, **changes: object) -> AttributedNetwork:
        """Return a copy with some fields swapped."""
        return dataclasses.replace(self, **changes)  # type: ignore[arg-type]


def _scale(matrix: sp.csr_matrix) -> float:
    top = float(matrix.max()) if matrix.nnz else 0.0
    return top if top > 1.0 else 1.0


def _scaled(matrix: sp.csr_matrix, scale: float) -> sp.csr_matrix:
    return matrix if scale == 1.0 else (matrix / scale).tocsr()


def _symmetric(n: int, weights: dict[tuple[int, int], float]) -> sp.csr_matrix:
    if not weights:
        return sp.csr_matrix((n, n), dtype=np.float64)
    keys = np.array(list(weights), dtype=np.int64)
    values = np.fromiter(weights.values(), dtype=np.float64, count=len(weights))
    rows = np.concatenate([keys[:, 0], keys[:, 1]])
    cols = np.concatenate([keys[:, 1], keys[:, 0]])
    data = np.concatenate([values, values])
    matrix = sp.csr_matrix((data, (rows, cols)), shape=(n, n), dtype=np.float64)
    matrix.sort_indices()
    return matrix


def _csr(matrix: sp.spmatrix | Matrix) -> sp.csr_matrix:
    out = sp.csr_matrix(matrix, dtype=np.float64)
    out.eliminate_zeros()
    out.sort_indices()
    return out


def _lines(path: Path) -> Iterator[tuple[int, list[str]]]:
    with path.open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            tokens = raw.split()
            if tokens and not tokens[0].startswith("#"):
                yield line_no, tokens


def _float(path: Path, line_no: int, token: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(path, line_no, f"not a number: {token!r}") from None
    if not np.isfinite(value):
        raise ParseError(path, line_no, f"non-finite value: {token!r}")
    return value


def _label_array(
    n: int,
    raw: dict[int, str],
) -> tuple[npt.NDArray[np.int64] | None, tuple[str, ...]]:
    if not raw:
        return None, ()
    names = tuple(sorted(set(raw.values())))
    lookup = {name: k for k, name in enumerate(names)}
    labels = np.full(n, UNLABELLED, dtype=np.int64)
    for i, name in raw.items():
        labels[i] = lookup[name]
    return labels, names


def load_cora_format(content_path: Path | str, cites_path: Path | str) -> AttributedNetwork:
    """Load a citation network in the LINQS ``.content`` / ``.cites`` layout.

    Parameters
    ----------
    content_path : Path | str
        Lines of ``<id> <bit> ... <bit> <label>``.
    cites_path : Path | str
        Lines of ``<cited_id> <citing_id>``.

    Returns
    -------
    AttributedNetwork
        Symmetrized, unweighted edges; binary attributes; class names mapped to indices
        in sorted order.

    Raises
    ------
    ParseError
        On a malformed line, including a row whose width differs from the first row.
    EmptyInputError
        If the content file holds no nodes.
    """
    content_path, cites_path = Path(content_path), Path(cites_path)
    node_ids: list[str] = []
    index: dict[str, int] = {}
    rows: list[int] = []
    cols: list[int] = []
    raw_labels: dict[int, str] = {}
    m: int | None = None

    for line_no, tokens in _lines(content_path):
        if len(tokens) < 3:
            raise ParseError(content_path, line_no, "expected <id> <bits...> <label>")
        node_id, bits, label = tokens[0], tokens[1:-1], tokens[-1]
        if m is None:
            m = len(bits)
        elif len(bits) != m:
            raise ParseError(content_path, line_no, f"expected {m} attributes, got {len(bits)}")
        if node_id in index:
            raise ParseError(content_path, line_no, f"duplicate node id {node_id!r}")
        i = index[node_id] = len(node_ids)
        node_ids.append(node_id)
        for k, token in enumerate(bits):
            if _float(content_path, line_no, token) != 0.0:
                rows.append(i)
                cols.append(k)
        raw_labels[i] = label

    if not node_ids or m is None:
        raise EmptyInputError(content_path)

    edges: list[tuple[int, int, float]] = []
    dropped = 0
    for line_no, tokens in _lines(cites_path):
        if len(tokens) != 2:
            raise ParseError(cites_path, line_no, "expected <cited_id> <citing_id>")
        cited, citing = (index.get(token) for token in tokens)
        if cited is None or citing is None:
            dropped += 1
            continue
        edges.append((cited, citing, 1.0))
    if dropped:
        _log.warning("Dropped %d citation(s) referencing unknown ids in %s.", dropped, cites_path)

    attributes = sp.csr_matrix(
        (np.ones(len(rows)), (rows, cols)),
        shape=(len(node_ids), m),
        dtype=np.float64,
    )
    labels, names = _label_array(len(node_ids), raw_labels)
    net = AttributedNetwork.from_edges(node_ids, edges, attributes, labels, names)
    _log.info("Loaded %s: n=%d l=%d m=%d", content_path.name, net.n, net.num_edges, net.m)
    return net


def load_generic(
    edge_list: Path | str,
    attribute_table: Path | str,
    labels: Path | str | None = None,
    *,
    binarize: bool = True,
    weighted: bool = True,
) -> AttributedNetwork:
    """Load an edge list plus a sparse attribute table.

    Parameters
    ----------
    edge_list : Path | str
        Lines of ``<src> <dst> [weight]``; weight defaults to 1.0 and must be positive.
    attribute_table : Path | str
        Lines of ``<id> <k>:<v> ...`` with zero-based attribute index ``k``.
    labels : Path | str | None
        Optional lines of ``<id> <class name>``.
    binarize : bool
        Coerce attribute values to {0, 1} by a nonzero test.
    weighted : bool
        Keep edge weights; when false every edge weighs 1.0.

    Returns
    -------
    AttributedNetwork
        Nodes are ordered by first appearance in the attribute table, then the edge list.

    Raises
    ------
    ParseError
        On a malformed line.
    EmptyInputError
        If neither file names a node.
    """
    edge_path, attr_path = Path(edge_list), Path(attribute_table)
    node_ids: list[str] = []
    index: dict[str, int] = {}

    def intern(node_id: str) -> int:
        if node_id not in index:
            index[node_id] = len(node_ids)
            node_ids.append(node_id)
        return index[node_id]

    cells: dict[tuple[int, int], float] = {}
    m = 0
    for line_no, tokens in _lines(attr_path):
        i = intern(tokens[0])
        for pair in tokens[1:]:
            key, sep, value = pair.partition(":")
            if not sep or not key.isdigit():
                raise ParseError(attr_path, line_no, f"expected <k>:<v>, got {pair!r}")
            v = _float(attr_path, line_no, value)
            if binarize:
                v = 1.0 if v != 0.0 else 0.0
            cells[i, int(key)] = v
            m = max(m, int(key) + 1)

    edges: list[tuple[int, int, float]] = []
    for line_no, tokens in _lines(edge_path):
        if len(tokens) not in {2, 3}:
            raise ParseError(edge_path, line_no, "expected <src> <dst> [weight]")
        w = _float(edge_path, line_no, tokens[2]) if len(tokens) == 3 else 1.0
        if w <= 0.0:
            raise ParseError(edge_path, line_no, f"edge weight must be positive, got {w}")
        edges.append((intern(tokens[0]), intern(tokens[1]), w if weighted else 1.0))

    if not node_ids:
        raise EmptyInputError(attr_path)

    raw_labels: dict[int, str] = {}
    if labels is not None:
        label_path = Path(labels)
        for line_no, tokens in _lines(label_path):
            if len(tokens) != 2:
                raise ParseError(label_path, line_no, "expected <id> <label>")
            if tokens[0] in index:
                raw_labels[index[tokens[0]]] = tokens[1]

    keys = list(cells)
    attributes = sp.csr_matrix(
        (
            np.fromiter(cells.values(), dtype=np.float64, count=len(cells)),
            ([i for i, _ in keys], [k for _, k in keys]),
        ),
        shape=(len(node_ids), m),
        dtype=np.float64,
    )
    label_array, names = _label_array(len(node_ids), raw_labels)
    net = AttributedNetwork.from_edges(node_ids, edges, attributes, label_array, names)
    _log.info("Loaded %s: n=%d l=%d m=%d", edge_path.name, net.n, net.num_edges, net.m)
    return net


def save_network(net: AttributedNetwork, path: Path | str) -> None:
    """Write ``net`` in the canonical sectioned text format."""
    ids = net.node_ids
    pairs, weights = net.edge_list()
    lines = [f"#mdne-network v1 n={net.n} m={net.m}", "[nodes]", *ids, "[edges]"]
    lines.extend(
        f"{ids[i]}\t{ids[j]}\t{w!r}"
        for (i, j), w in zip(pairs.tolist(), weights.tolist(), strict=True)
    )
    lines.append("[attrs]")
    attrs = net.attributes
    for i in range(net.n):
        start, stop = attrs.indptr[i], attrs.indptr[i + 1]
        if start == stop:
            continue
        cells = " ".join(
            f"{k}:{v!r}"
            for k, v in zip(
                attrs.indices[start:stop].tolist(),
                attrs.data[start:stop].tolist(),
                strict=True,
            )
        )
        lines.append(f"{ids[i]}\t{cells}")
    if net.labels is not None and net.has_labels:
        lines.append("[labels]")
        lines.extend(
            f"{ids[i]}\t{net.label_names[k]}"
            for i, k in enumerate(net.labels.tolist())
            if k != UNLABELLED
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_network(path: Path | str) -> AttributedNetwork:
    """Read a network written by :func:`save_network`."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw or (header := _HEADER.match(raw[0])) is None:
        raise ParseError(path, 1, "missing '#mdne-network v1 n=<n> m=<m>' header")
    n, m = int(header.group(1)), int(header.group(2))

    section = ""
    node_ids: list[str] = []
    index: dict[str, int] = {}
    edges: list[tuple[int, int, float]] = []
    rows: list[int] = []
    cols: list[int] = []
    values: list[float] = []
    raw_labels: dict[int, str] = {}

    def lookup(line_no: int, node_id: str) -> int:
        try:
            return index[node_id]
        except KeyError:
            raise ParseError(path, line_no, f"unknown node id {node_id!r}") from None

    for line_no, line in enumerate(raw[1:], start=2):
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            continue
        fields = line.split("\t")
        if section == "nodes":
            index[line] = len(node_ids)
            node_ids.append(line)
        elif section == "edges" and len(fields) == 3:
            edges.append(
                (
                    lookup(line_no, fields[0]),
                    lookup(line_no, fields[1]),
                    _float(path, line_no, fields[2]),
                ),
            )
        elif section == "attrs" and len(fields) == 2:
            i = lookup(line_no, fields[0])
            for pair in fields[1].split(" "):
                key, _, value = pair.partition(":")
                rows.append(i)
                cols.append(int(key))
                values.append(_float(path, line_no, value))
        elif section == "labels" and len(fields) == 2:
            raw_labels[lookup(line_no, fields[0])] = fields[1]
        else:
            raise ParseError(path, line_no, f"unexpected line in section [{section}]")

    if not node_ids:
        raise EmptyInputError(path)
    if len(node_ids) != n:
        raise ParseError(path, 1, f"header says n={n} but {len(node_ids)} nodes are listed")
    attributes = sp.csr_matrix((values, (rows, cols)), shape=(n, m), dtype=np.float64)
    labels, names = _label_array(n, raw_labels)
    return AttributedNetwork.from_edges(node_ids, edges, attributes, labels, names)
