from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from mdne.errors import EmptyInputError, ParseError
from mdne.graph import (
    AttributedNetwork,
    load_cora_format,
    load_generic,
    load_network,
    save_network,
)


def write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def cora_files(tmp_path: Path) -> tuple[Path, Path]:
    content = write(
        tmp_path / "toy.content",
        "p1\t1\t0\t1\tTheory\np2\t0\t1\t0\tNeural\np3\t1\t1\t0\tTheory\n",
    )
    cites = write(tmp_path / "toy.cites", "p1\tp2\np2\tp1\np2\tp3\np1\tp9\n")
    return content, cites


class TestCoraFormat:
    def test_loads_and_symmetrizes(self, cora_files: tuple[Path, Path]) -> None:
        net = load_cora_format(*cora_files)
        assert net.node_ids == ("p1", "p2", "p3")
        assert (net.n, net.m, net.num_edges) == (3, 3, 2)
        assert net.edge_set() == {(0, 1), (1, 2)}
        assert (net.adjacency != net.adjacency.T).nnz == 0
        assert_array_equal(net.attributes.toarray(), [[1, 0, 1], [0, 1, 0], [1, 1, 0]])

    def test_labels_are_sorted_class_indices(self, cora_files: tuple[Path, Path]) -> None:
        net = load_cora_format(*cora_files)
        assert net.label_names == ("Neural", "Theory")
        assert_array_equal(net.labels, [1, 0, 1])

    def test_unknown_ids_are_dropped_with_warning(
        self,
        cora_files: tuple[Path, Path],
        caplog: pytest.LogCaptureFixture,
    ) -> None:
        load_cora_format(*cora_files)
        assert "Dropped 1 citation" in caplog.text

    def test_ragged_row_reports_line(self, tmp_path: Path) -> None:
        content = write(tmp_path / "bad.content", "a 1 0 X\nb 1 Y\n")
        cites = write(tmp_path / "bad.cites", "")
        with pytest.raises(ParseError) as info:
            load_cora_format(content, cites)
        assert info.value.line_no == 2

    def test_empty_content(self, tmp_path: Path) -> None:
        with pytest.raises(EmptyInputError):
            load_cora_format(write(tmp_path / "e.content", ""), write(tmp_path / "e.cites", ""))


class TestGenericFormat:
    def test_path_graph(self, tmp_path: Path) -> None:
        net = load_generic(
            write(tmp_path / "edges.tsv", "a b\nb c\nc d\n"),
            write(tmp_path / "attrs.tsv", "a 0:1\nb 1:1\nc 2:1\nd 3:1\n"),
        )
        assert net.num_edges == 3
        assert_array_equal(net.degrees(), [1, 2, 2, 1])

    def test_weighted_edge_is_symmetric(self, tmp_path: Path) -> None:
        net = load_generic(
            write(tmp_path / "edges.tsv", "a b 2.5\nb c\n"),
            write(tmp_path / "attrs.tsv", "a 0:0.5\nb 1:3\n"),
            binarize=False,
        )
        assert net.adjacency[0, 1] == net.adjacency[1, 0] == 2.5
        assert net.attributes[1, 1] == 3.0
        assert net.structure_matrix().max() == 1.0
        assert net.structure_matrix()[1, 2] == pytest.approx(0.4)
        assert net.attribute_scale == 3.0
        assert net.attribute_matrix().max() == 1.0
        assert net.attribute_matrix()[0, 0] == pytest.approx(0.5 / 3.0)

    def test_unit_range_is_not_rescaled(self, tmp_path: Path) -> None:
        net = load_generic(
            write(tmp_path / "edges.tsv", "a b 0.5\n"),
            write(tmp_path / "attrs.tsv", "a 0:0.25\nb 1:1\n"),
            binarize=False,
        )
        assert (net.structure_scale, net.attribute_scale) == (1.0, 1.0)
        assert net.structure_matrix()[0, 1] == 0.5
        assert net.attribute_matrix()[0, 0] == 0.25

    def test_single_attribute_pair(self, tmp_path: Path) -> None:
        net = load_generic(
            write(tmp_path / "edges.tsv", "x y\n"),
            write(tmp_path / "attrs.tsv", "x 3:1\ny 0:1\n"),
        )
        row = net.attributes[net.index_of()["x"]]
        assert_array_equal(row.indices, [3])
        assert net.m == 4

    def test_binarizes_by_default(self, tmp_path: Path) -> None:
        net = load_generic(
            write(tmp_path / "edges.tsv", "a b\n"),
            write(tmp_path / "attrs.tsv", "a 0:0.3 1:7\nb 1:2\n"),
        )
        assert set(net.attributes.data.tolist()) == {1.0}

    def test_labels_file(self, tmp_path: Path) -> None:
        net = load_generic(
            write(tmp_path / "edges.tsv", "a b\nb c\n"),
            write(tmp_path / "attrs.tsv", "a 0:1\nb 1:1\n"),
            write(tmp_path / "labels.tsv", "a red\nc blue\n"),
        )
        assert net.label_names == ("blue", "red")
        assert_array_equal(net.labels, [1, -1, 0])

    @pytest.mark.parametrize(
        ("edges", "attrs"),
        [
            ("a b -1\n", "a 0:1\n"),
            ("a b c d\n", "a 0:1\n"),
            ("a b\n", "a zero:1\n"),
            ("a b\n", "a 0:one\n"),
        ],
    )
    def test_malformed_lines(self, tmp_path: Path, edges: str, attrs: str) -> None:
        with pytest.raises(ParseError):
            load_generic(write(tmp_path / "e.tsv", edges), write(tmp_path / "a.tsv", attrs))


class TestNetwork:
    def test_self_loops_and_duplicates_collapse(self) -> None:
        net = AttributedNetwork.from_edges(
            ["a", "b", "c"],
            [(0, 0, 1.0), (0, 1, 2.0), (1, 0, 5.0), (1, 2, 1.0)],
            np.eye(3),
        )
        assert net.edge_set() == {(0, 1), (1, 2)}
        assert net.adjacency[1, 0] == 2.0
        assert net.adjacency.diagonal().sum() == 0.0

    def test_stats(self, toy_network: AttributedNetwork) -> None:
        stats = toy_network.stats()
        assert (stats.n, stats.m) == (6, 4)
        assert stats.l == toy_network.num_edges
        assert stats.f == toy_network.attributes.nnz
        assert stats.classes == 0

    def test_canonical_round_trip(self, tmp_path: Path, network_factory) -> None:
        net = network_factory(3, n=7, m=5, classes=3)
        first = tmp_path / "net.txt"
        second = tmp_path / "again.txt"
        save_network(net, first)
        loaded = load_network(first)
        assert loaded.node_ids == net.node_ids
        assert (loaded.adjacency != net.adjacency).nnz == 0
        assert (loaded.attributes != net.attributes).nnz == 0
        assert_array_equal(loaded.labels, net.labels)
        save_network(loaded, second)
        assert first.read_bytes() == second.read_bytes()

    def test_canonical_header_required(self, tmp_path: Path) -> None:
        with pytest.raises(ParseError):
            load_network(write(tmp_path / "x.txt", "[nodes]\na\n"))
