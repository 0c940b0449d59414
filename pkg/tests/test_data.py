"""TU parsing, filtering, featurization, stats, and round-trip tests."""

import numpy as np
import pytest

from dsgc.data import (
    Dataset,
    Graph,
    dataset_stats,
    filter_connected,
    parse_tu_dataset,
    prepare_dataset,
    synthesize_features,
    write_tu_dataset,
)
from dsgc.errors import ContractError, TUParseError


def write_tu(tmp_path, name, edges, indicator, labels, node_labels=None):
    d = tmp_path / name
    d.mkdir(exist_ok=True)
    (d / f"{name}_A.txt").write_text("".join(f"{u}, {v}\n" for u, v in edges))
    (d / f"{name}_graph_indicator.txt").write_text("".join(f"{g}\n" for g in indicator))
    (d / f"{name}_graph_labels.txt").write_text("".join(f"{l}\n" for l in labels))
    if node_labels is not None:
        (d / f"{name}_node_labels.txt").write_text("".join(f"{l}\n" for l in node_labels))
    return d


class TestGraphInvariants:
    def test_valid_graph(self):
        g = Graph(n=3, edges=[(0, 1), (1, 2)])
        assert g.num_edges == 2
        assert list(g.degrees()) == [1, 2, 1]

    def test_rejects_out_of_range(self):
        with pytest.raises(ContractError):
            Graph(n=2, edges=[(0, 2)])

    def test_rejects_self_loop_and_disorder(self):
        with pytest.raises(ContractError):
            Graph(n=2, edges=[(1, 1)])
        with pytest.raises(ContractError):
            Graph(n=2, edges=[(1, 0)])

    def test_rejects_duplicate(self):
        with pytest.raises(ContractError):
            Graph(n=3, edges=[(0, 1), (0, 1)])

    def test_rejects_feature_mismatch(self):
        with pytest.raises(ContractError):
            Graph(n=2, edges=[(0, 1)], features=np.ones((3, 2)))

    def test_connectivity(self):
        assert Graph(n=3, edges=[(0, 1), (1, 2)]).is_connected()
        assert not Graph(n=3, edges=[(0, 1)]).is_connected()
        assert Graph(n=1, edges=np.empty((0, 2))).is_connected()


class TestParse:
    def test_two_graph_toy(self, tmp_path):
        d = write_tu(tmp_path, "TOY", [(1, 2), (2, 1)], [1, 1, 2], [1, -1])
        ds = parse_tu_dataset(d)
        assert len(ds) == 2
        assert ds.num_classes == 2
        g1, g2 = ds.graphs
        assert (g1.n, g1.num_edges) == (2, 1)
        assert (g2.n, g2.num_edges) == (1, 0)
        # labels remapped densely in ascending raw order: -1 -> 0, 1 -> 1
        assert (g1.label, g2.label) == (1, 0)

    def test_node_labels_file_ignored(self, tmp_path):
        d = write_tu(tmp_path, "TOY", [(1, 2), (2, 1)], [1, 1], [1], node_labels=[7, 9])
        ds = parse_tu_dataset(d)
        assert len(ds) == 1 and ds.graphs[0].features is None

    def test_missing_file_named(self, tmp_path):
        d = write_tu(tmp_path, "TOY", [(1, 2)], [1, 1], [1])
        (d / "TOY_graph_labels.txt").unlink()
        with pytest.raises(FileNotFoundError, match="TOY_graph_labels.txt"):
            parse_tu_dataset(d)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            parse_tu_dataset(tmp_path / "nope")

    def test_node_id_out_of_range_reports_line(self, tmp_path):
        d = write_tu(tmp_path, "TOY", [(1, 2), (1, 9)], [1, 1], [1])
        with pytest.raises(TUParseError, match=r"_A\.txt:2"):
            parse_tu_dataset(d)

    def test_cross_graph_edge_rejected(self, tmp_path):
        d = write_tu(tmp_path, "TOY", [(1, 3)], [1, 1, 2], [1, 2])
        with pytest.raises(TUParseError, match="crosses"):
            parse_tu_dataset(d)

    def test_self_loop_rejected(self, tmp_path):
        d = write_tu(tmp_path, "TOY", [(2, 2)], [1, 1], [1])
        with pytest.raises(TUParseError, match="self-loop"):
            parse_tu_dataset(d)

    def test_duplicate_direction_collapsed(self, tmp_path):
        d = write_tu(tmp_path, "TOY", [(1, 2), (2, 1), (2, 3), (3, 2)], [1, 1, 1], [5])
        ds = parse_tu_dataset(d)
        assert ds.graphs[0].num_edges == 2
        assert ds.num_classes == 1

    def test_roundtrip_isomorphic(self, tmp_path):
        rng = np.random.default_rng(0)
        graphs = []
        for _ in range(12):
            n = int(rng.integers(2, 9))
            full = [(i, j) for i in range(n) for j in range(i + 1, n)]
            take = rng.random(len(full)) < 0.5
            edges = np.array([e for e, t in zip(full, take) if t], dtype=np.int64).reshape(-1, 2)
            graphs.append(Graph(n=n, edges=edges, label=int(rng.integers(3))))
        ds = Dataset(name="RT", graphs=graphs, num_classes=3)
        out = tmp_path / "RT"
        write_tu_dataset(ds, out)
        back = parse_tu_dataset(out)
        assert len(back) == len(ds)
        assert back.num_classes <= ds.num_classes
        for a, b in zip(ds.graphs, back.graphs):
            assert a.n == b.n
            assert np.array_equal(a.edges, b.edges)  # identical node order -> identical rows
        assert [g.label for g in ds.graphs] == [
            sorted({g.label for g in ds.graphs})[b.label] for b in back.graphs
        ]


class TestFilterAndFeatures:
    def test_filter_drops_disconnected(self):
        ds = Dataset(
            name="F",
            graphs=[
                Graph(n=3, edges=[(0, 1), (1, 2)], label=0),
                Graph(n=3, edges=[(0, 1)], label=0),  # isolated node 2
                Graph(n=1, edges=np.empty((0, 2)), label=0),
            ],
            num_classes=1,
        )
        out = filter_connected(ds)
        assert [g.n for g in out.graphs] == [3, 1]

    def test_filter_idempotent(self):
        ds = Dataset(
            name="F",
            graphs=[Graph(n=2, edges=[(0, 1)], label=0), Graph(n=2, edges=np.empty((0, 2)), label=0)],
            num_classes=1,
        )
        once = filter_connected(ds)
        twice = filter_connected(once)
        assert [id(g) for g in once.graphs] == [id(g) for g in twice.graphs]

    def test_path_graph_features(self):
        g = synthesize_features(Graph(n=3, edges=[(0, 1), (1, 2)]), cap=4)
        assert g.features.shape == (3, 5)
        assert list(np.argmax(g.features, axis=1)) == [1, 2, 1]

    def test_single_edge_cap_one(self):
        g = synthesize_features(Graph(n=2, edges=[(0, 1)]), cap=1)
        assert np.array_equal(g.features, [[0.0, 1.0], [0.0, 1.0]])

    def test_star_center_clamped(self):
        edges = [(0, i) for i in range(1, 11)]
        g = synthesize_features(Graph(n=11, edges=edges), cap=4)
        assert np.argmax(g.features[0]) == 4
        assert g.features[0].sum() == 1.0

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n = int(rng.integers(1, 12))
            full = [(i, j) for i in range(n) for j in range(i + 1, n)]
            take = rng.random(len(full)) < 0.4
            edges = np.array([e for e, t in zip(full, take) if t], dtype=np.int64).reshape(-1, 2)
            g = synthesize_features(Graph(n=n, edges=edges), cap=3)
            assert np.array_equal(g.features.sum(axis=1), np.ones(n))


class TestStats:
    def test_triangle(self):
        ds = Dataset(name="T", graphs=[Graph(n=3, edges=[(0, 1), (0, 2), (1, 2)], label=0)], num_classes=1)
        s = dataset_stats(ds)
        assert (s.num_graphs, s.num_classes, s.avg_nodes, s.avg_edges) == (1, 1, 3.0, 3.0)

    def test_mean_nodes(self):
        ds = Dataset(
            name="T",
            graphs=[Graph(n=2, edges=[(0, 1)], label=0), Graph(n=4, edges=[(0, 1), (1, 2), (2, 3)], label=0)],
            num_classes=1,
        )
        assert dataset_stats(ds).avg_nodes == 3.0

    def test_empty_rejected(self):
        with pytest.raises(ContractError):
            dataset_stats(Dataset(name="E", graphs=[], num_classes=1))


class TestPrepare:
    def test_prepare_filters_and_featurizes(self, tmp_path):
        d = write_tu(
            tmp_path, "P",
            [(1, 2), (2, 1), (3, 4), (4, 3)],
            [1, 1, 2, 2, 2],  # graph 2 has an isolated node 5
            [1, 2],
        )
        ds = prepare_dataset(d, degree_cap=3)
        assert len(ds) == 1
        assert ds.graphs[0].features.shape == (2, 4)
        keep = prepare_dataset(d, degree_cap=3, keep_disconnected=True)
        assert len(keep) == 2
