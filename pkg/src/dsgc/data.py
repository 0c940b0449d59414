"""Graph containers and the TU graph-kernel text format.

A dataset directory holds `<DS>_A.txt` (comma-separated, 1-indexed edge
rows), `<DS>_graph_indicator.txt` (graph id per node line) and
`<DS>_graph_labels.txt` (label per graph line). An optional
`<DS>_node_labels.txt` may be present; it is tolerated and ignored —
features are synthesized from degrees so all datasets are treated alike.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, TUParseError

DEFAULT_DEGREE_CAP = 64


@dataclass
class Graph:
    """An undirected graph with canonical (i < j, sorted, unique) edge rows.

    `orig_ids` maps local node ids back to the parent graph for sampled
    sub-graphs; `cache` memoizes derived matrices (adjacency, propagation
    operators) and never affects equality.
    """

    n: int
    edges: np.ndarray                      # (m, 2) int64, i < j per row
    features: np.ndarray | None = None     # (n, F) float64
    label: int | None = None
    orig_ids: np.ndarray | None = None
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.n < 1:
            raise ContractError(f"graph needs at least one node, got n={self.n}")
        m = len(self.edges)
        if m:
            a, b = self.edges[:, 0], self.edges[:, 1]
            if a.min() < 0 or b.max() >= self.n:
                raise ContractError("edge endpoint out of range")
            if (a >= b).any():
                raise ContractError("edges must be canonical (i < j), no self-loops")
            keys = a * self.n + b
            if len(np.unique(keys)) != m:
                raise ContractError("duplicate undirected edge")
        if self.features is not None:
            self.features = np.asarray(self.features, dtype=np.float64)
            if self.features.shape[0] != self.n:
                raise ContractError(
                    f"feature rows {self.features.shape[0]} != node count {self.n}"
                )

    @property
    def num_edges(self):
        return len(self.edges)

    def neighbors(self):
        """Adjacency list as a tuple of sorted int arrays (cached)."""
        adj = self.cache.get("adj")
        if adj is None:
            lists = [[] for _ in range(self.n)]
            for a, b in self.edges:
                lists[a].append(b)
                lists[b].append(a)
            adj = tuple(np.array(sorted(l), dtype=np.int64) for l in lists)
            self.cache["adj"] = adj
        return adj

    def degrees(self):
        if self.num_edges == 0:
            return np.zeros(self.n, dtype=np.int64)
        return np.bincount(self.edges.ravel(), minlength=self.n)

    def is_connected(self):
        """BFS reachability from node 0 (cached)."""
        hit = self.cache.get("connected")
        if hit is None:
            adj = self.neighbors()
            seen = np.zeros(self.n, dtype=bool)
            seen[0] = True
            frontier = [0]
            while frontier:
                nxt = []
                for u in frontier:
                    for v in adj[u]:
                        if not seen[v]:
                            seen[v] = True
                            nxt.append(int(v))
                frontier = nxt
            hit = bool(seen.all())
            self.cache["connected"] = hit
        return hit


def canonical_edges(pairs, n):
    """Normalize an iterable of (i, j) pairs to unique i < j rows, dropping order."""
    arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
    if len(arr) == 0:
        return arr
    lo = arr.min(axis=1)
    hi = arr.max(axis=1)
    keys = np.unique(lo * n + hi)
    return np.stack([keys // n, keys % n], axis=1)


@dataclass
class Dataset:
    name: str
    graphs: list
    num_classes: int

    def __post_init__(self):
        if self.num_classes < 1:
            raise ContractError("num_classes must be positive")
        labels = {g.label for g in self.graphs if g.label is not None}
        if labels and (min(labels) < 0 or max(labels) >= self.num_classes):
            raise ContractError("graph label outside [0, num_classes)")

    def __len__(self):
        return len(self.graphs)


@dataclass(frozen=True)
class DatasetStats:
    num_graphs: int
    num_classes: int
    avg_nodes: float
    avg_edges: float


def _dataset_prefix(directory):
    names = [f for f in os.listdir(directory) if f.endswith("_A.txt")]
    if not names:
        raise FileNotFoundError(f"no <name>_A.txt edge file in {directory}")
    if len(names) > 1:
        raise TUParseError(f"multiple edge files found: {sorted(names)}", path=directory)
    return names[0][: -len("_A.txt")]


def _read_required(directory, filename):
    path = os.path.join(directory, filename)
    if not os.path.isfile(path):
        raise FileNotFoundError(f"missing dataset file: {path}")
    with open(path) as fh:
        return path, fh.read().splitlines()


def parse_tu_dataset(directory):
    """Parse a TU-format directory into a Dataset of label-dense graphs.

    Edges are undirected and deduplicated; labels are remapped to 0..K-1 in
    ascending order of the raw values. Node features are not synthesized
    here (see synthesize_features).
    """
    if not os.path.isdir(directory):
        raise FileNotFoundError(f"dataset directory not found: {directory}")
    name = _dataset_prefix(directory)
    a_path, edge_lines = _read_required(directory, f"{name}_A.txt")
    ind_path, ind_lines = _read_required(directory, f"{name}_graph_indicator.txt")
    lab_path, label_lines = _read_required(directory, f"{name}_graph_labels.txt")

    node_graph = np.empty(len(ind_lines), dtype=np.int64)  # node -> graph, 0-indexed
    count = 0
    for i, line in enumerate(ind_lines):
        line = line.strip()
        if not line:
            continue
        try:
            node_graph[count] = int(line) - 1
        except ValueError:
            raise TUParseError(f"bad graph indicator {line!r}", ind_path, i + 1) from None
        count += 1
    node_graph = node_graph[:count]
    num_nodes = count
    if num_nodes == 0:
        raise TUParseError("empty graph indicator file", ind_path)

    raw_labels = []
    for i, line in enumerate(label_lines):
        line = line.strip()
        if not line:
            continue
        try:
            raw_labels.append(int(line))
        except ValueError:
            raise TUParseError(f"bad graph label {line!r}", lab_path, i + 1) from None
    num_graphs = len(raw_labels)
    if node_graph.min() < 0 or node_graph.max() >= num_graphs:
        raise TUParseError(
            f"graph indicator outside 1..{num_graphs}", ind_path
        )

    # local node index within each graph, in order of global node id
    sizes = np.bincount(node_graph, minlength=num_graphs)
    offsets = np.zeros(num_graphs, dtype=np.int64)
    np.cumsum(sizes[:-1], out=offsets[1:])
    local_idx = np.arange(num_nodes) - offsets[node_graph]
    if (local_idx < 0).any():
        raise TUParseError("graph indicator is not grouped by graph", ind_path)

    per_graph_edges = [set() for _ in range(num_graphs)]
    for i, line in enumerate(edge_lines):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise TUParseError(f"expected 'i, j', got {line!r}", a_path, i + 1)
        try:
            u = int(parts[0])
            v = int(parts[1])
        except ValueError:
            raise TUParseError(f"non-integer edge endpoint in {line!r}", a_path, i + 1) from None
        if not (1 <= u <= num_nodes) or not (1 <= v <= num_nodes):
            raise TUParseError(
                f"node id out of range in edge ({u}, {v}), have {num_nodes} nodes",
                a_path,
                i + 1,
            )
        if u == v:
            raise TUParseError(f"self-loop on node {u}", a_path, i + 1)
        gu, gv = node_graph[u - 1], node_graph[v - 1]
        if gu != gv:
            raise TUParseError(
                f"edge ({u}, {v}) crosses graphs {gu + 1} and {gv + 1}", a_path, i + 1
            )
        lu, lv = int(local_idx[u - 1]), int(local_idx[v - 1])
        per_graph_edges[gu].add((min(lu, lv), max(lu, lv)))

    label_map = {raw: k for k, raw in enumerate(sorted(set(raw_labels)))}
    graphs = []
    for gid in range(num_graphs):
        n = int(sizes[gid])
        if n == 0:
            raise TUParseError(f"graph {gid + 1} has no nodes", ind_path)
        edges = canonical_edges(per_graph_edges[gid], n) if per_graph_edges[gid] else np.empty((0, 2), dtype=np.int64)
        graphs.append(Graph(n=n, edges=edges, label=label_map[raw_labels[gid]]))
    return Dataset(name=name, graphs=graphs, num_classes=len(label_map))


def write_tu_dataset(ds, directory):
    """Write a Dataset back to TU format (both edge directions, 1-indexed)."""
    os.makedirs(directory, exist_ok=True)
    a_rows, ind_rows, lab_rows = [], [], []
    base = 1
    for gid, g in enumerate(ds.graphs, start=1):
        for _ in range(g.n):
            ind_rows.append(str(gid))
        for i, j in g.edges:
            a_rows.append(f"{base + int(i)}, {base + int(j)}")
            a_rows.append(f"{base + int(j)}, {base + int(i)}")
        lab_rows.append(str(g.label if g.label is not None else 0))
        base += g.n
    for fname, rows in [
        (f"{ds.name}_A.txt", a_rows),
        (f"{ds.name}_graph_indicator.txt", ind_rows),
        (f"{ds.name}_graph_labels.txt", lab_rows),
    ]:
        with open(os.path.join(directory, fname), "w") as fh:
            fh.write("\n".join(rows) + "\n")


def filter_connected(ds):
    """Keep only single-component graphs (subsumes dropping isolated nodes)."""
    kept = [g for g in ds.graphs if g.is_connected()]
    return Dataset(name=ds.name, graphs=kept, num_classes=ds.num_classes)


def synthesize_features(g, cap=DEFAULT_DEGREE_CAP):
    """One-hot encode min(degree, cap) per node; returns a new Graph, F = cap + 1."""
    if cap < 1:
        raise ContractError(f"degree cap must be positive, got {cap}")
    deg = np.minimum(g.degrees(), cap)
    feats = np.zeros((g.n, cap + 1), dtype=np.float64)
    feats[np.arange(g.n), deg] = 1.0
    return Graph(n=g.n, edges=g.edges, features=feats, label=g.label, orig_ids=g.orig_ids)


def dataset_stats(ds):
    """Graph count, class count, mean node count, mean undirected-edge count."""
    if not ds.graphs:
        raise ContractError("dataset_stats: empty dataset")
    return DatasetStats(
        num_graphs=len(ds.graphs),
        num_classes=ds.num_classes,
        avg_nodes=float(np.mean([g.n for g in ds.graphs])),
        avg_edges=float(np.mean([g.num_edges for g in ds.graphs])),
    )


def prepare_dataset(directory, degree_cap=DEFAULT_DEGREE_CAP, keep_disconnected=False):
    """Parse, connectivity-filter (optional), and featurize a TU directory."""
    ds = parse_tu_dataset(directory)
    if not keep_disconnected:
        ds = filter_connected(ds)
    graphs = [synthesize_features(g, degree_cap) for g in ds.graphs]
    return Dataset(name=ds.name, graphs=graphs, num_classes=ds.num_classes)
