"""Per-class knowledge graphs over flips and their centralities.

Each class gets a weighted directed graph whose edge u -> v carries
|P(v | u, class) - 0.5|, the distance of the conditional probability from
independence. Flips of the same feature are never connected.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from cactus.abstraction import AbstractionMap, FlipTable
from cactus.errors import ConfigError, KnowledgeGraphError, PageRankConvergenceError
from cactus.utils import resolve_threads, write_json

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PageRankConfig:
    """Power-iteration parameters for weighted PageRank."""

    damping: float = 0.85
    tol: float = 1e-12
    max_iter: int = 10_000

    def __post_init__(self):
        if not 0.0 < self.damping < 1.0:
            raise ConfigError(f"damping must lie in (0, 1), got {self.damping}")
        if self.tol <= 0:
            raise ConfigError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True, eq=False)
class ClassGraph:
    """Weighted directed graph of one class.

    Attributes:
        class_id: Class index
        weights: n x n matrix; weights[u, v] is the weight of edge u -> v (0 if absent)
        edge_mask: n x n boolean matrix of the edges present (zero-weight edges included)
        flip_class_prob: P(flip | class) per node
    """

    class_id: int
    weights: np.ndarray
    edge_mask: np.ndarray
    flip_class_prob: np.ndarray

    def __post_init__(self):
        n = self.flip_class_prob.shape[0]
        if self.weights.shape != (n, n) or self.edge_mask.shape != (n, n):
            raise KnowledgeGraphError(
                f"Graph of class {self.class_id} has inconsistent node count"
            )
        for array in (self.weights, self.edge_mask, self.flip_class_prob):
            array.flags.writeable = False

    @classmethod
    def from_edges(
        cls,
        class_id: int,
        n_nodes: int,
        edges: Sequence[Tuple[int, int, float]],
        flip_class_prob: Optional[Sequence[float]] = None,
    ) -> "ClassGraph":
        """Build a graph from an explicit (from, to, weight) edge list."""
        weights = np.zeros((n_nodes, n_nodes))
        mask = np.zeros((n_nodes, n_nodes), dtype=bool)
        for u, v, w in edges:
            if u == v:
                raise KnowledgeGraphError(f"Self-loop on node {u}")
            weights[u, v] = w
            mask[u, v] = True
        probs = np.zeros(n_nodes) if flip_class_prob is None else np.asarray(flip_class_prob, float)
        return cls(class_id, weights, mask, probs)

    @property
    def n_nodes(self) -> int:
        """Number of flips in the graph."""
        return int(self.flip_class_prob.shape[0])

    @property
    def nodes(self) -> range:
        """Node indices, equal to flip indices."""
        return range(self.n_nodes)

    @property
    def n_edges(self) -> int:
        """Number of directed edges."""
        return int(self.edge_mask.sum())

    def edges(self) -> Iterator[Tuple[int, int, float]]:
        """Edges in row-major (from, to) order."""
        for u, v in zip(*np.nonzero(self.edge_mask)):
            yield int(u), int(v), float(self.weights[u, v])

    def to_networkx(self, names: Optional[Sequence[str]] = None) -> nx.DiGraph:
        """Export as a networkx DiGraph with `weight` edges and `class_prob` nodes."""
        label = (lambda i: names[i]) if names is not None else (lambda i: i)
        graph = nx.DiGraph(class_id=self.class_id)
        for i in self.nodes:
            graph.add_node(label(i), class_prob=float(self.flip_class_prob[i]))
        graph.add_weighted_edges_from((label(u), label(v), w) for u, v, w in self.edges())
        return graph


@dataclass(frozen=True, eq=False)
class CentralityTable:
    """PageRank and total degree per (class, flip); both K x |universe|."""

    pagerank: np.ndarray
    degree: np.ndarray


def _class_rows(ft: FlipTable, labels: np.ndarray, class_id: int) -> np.ndarray:
    rows = ft.matrix[np.asarray(labels) == class_id]
    if rows.shape[0] == 0:
        raise KnowledgeGraphError(f"Class {class_id} has no rows")
    return rows


def class_conditional_prob(
    ft: FlipTable, labels: Sequence[int], class_id: int, flip: int
) -> float:
    """P(flip | class): share of the class rows carrying the flip.

    The denominator counts every class row, including rows where the
    flip's feature is missing.
    """
    rows = _class_rows(ft, labels, class_id)
    return int(rows[:, flip].sum()) / rows.shape[0]


def conditional_edge_prob(
    ft: FlipTable,
    labels: Sequence[int],
    class_id: int,
    from_flip: int,
    to_flip: int,
) -> Optional[float]:
    """P(to | from, class), or None when `from_flip` never occurs in the class.

    Raises:
        KnowledgeGraphError: If both flips belong to the same feature
    """
    feature_of = ft.universe.feature_of_flip
    if feature_of[from_flip] == feature_of[to_flip]:
        raise KnowledgeGraphError(
            f"Flips '{ft.universe.flips[from_flip]}' and '{ft.universe.flips[to_flip]}' "
            "belong to the same feature"
        )
    rows = _class_rows(ft, labels, class_id)
    present = rows[:, from_flip]
    denominator = int(present.sum())
    if denominator == 0:
        return None
    return int((present & rows[:, to_flip]).sum()) / denominator


def build_class_graph(ft: FlipTable, labels: Sequence[int], class_id: int) -> ClassGraph:
    """Build the knowledge graph of one class.

    Every ordered pair of flips from different features whose conditional
    probability is defined becomes an edge weighted |P - 0.5|.
    """
    rows = _class_rows(ft, labels, class_id).astype(np.float64)
    co = rows.T @ rows  # exact integer co-occurrence counts
    present = np.diag(co).copy()
    feature_of = ft.universe.feature_of_flip
    mask = (present > 0)[:, None] & (feature_of[:, None] != feature_of[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        prob = co / present[:, None]
    weights = np.where(mask, np.abs(prob - 0.5), 0.0)
    flip_class_prob = present / rows.shape[0]
    graph = ClassGraph(class_id, weights, mask, flip_class_prob)
    logger.debug(
        "Class %d graph: %d nodes, %d edges", class_id, graph.n_nodes, graph.n_edges
    )
    return graph


def build_class_graphs(
    ft: FlipTable, labels: Sequence[int], n_classes: int, n_jobs: Optional[int] = None
) -> List[ClassGraph]:
    """One graph per class, in class order."""
    labels = np.asarray(labels)
    return Parallel(n_jobs=resolve_threads(n_jobs), prefer="threads")(
        delayed(build_class_graph)(ft, labels, c) for c in range(n_classes)
    )


def pagerank(
    g: ClassGraph,
    damping: float = 0.85,
    tol: float = 1e-12,
    max_iter: int = 10_000,
) -> np.ndarray:
    """Weighted PageRank by power iteration.

    The transition u -> v has probability weight(u, v) / out-weight(u).
    Nodes with zero out-weight redistribute uniformly. Iterates
    r <- (1 - d)/n + d * M^T r until the L1 change drops below `tol`.

    Raises:
        PageRankConvergenceError: If `max_iter` iterations do not suffice
    """
    PageRankConfig(damping, tol, max_iter)
    n = g.n_nodes
    if n == 0:
        return np.zeros(0)
    weights = g.weights
    out_weight = weights.sum(axis=1)
    dangling = out_weight <= 0
    transition = np.divide(
        weights,
        out_weight[:, None],
        out=np.zeros_like(weights),
        where=~dangling[:, None],
    )
    transition_t = np.ascontiguousarray(transition.T)

    rank = np.full(n, 1.0 / n)
    residual = np.inf
    for _ in range(max_iter):
        updated = (1.0 - damping) / n + damping * (
            transition_t @ rank + rank[dangling].sum() / n
        )
        residual = float(np.abs(updated - rank).sum())
        rank = updated
        if residual < tol:
            return rank / rank.sum()
    raise PageRankConvergenceError(residual, max_iter)


def total_degree(g: ClassGraph) -> np.ndarray:
    """Sum of incoming and outgoing edge weights per node."""
    return g.weights.sum(axis=0) + g.weights.sum(axis=1)


def compute_centralities(
    graphs: Sequence[ClassGraph],
    config: PageRankConfig = PageRankConfig(),
    n_jobs: Optional[int] = None,
) -> CentralityTable:
    """PageRank and total degree for every class graph."""
    ranks = Parallel(n_jobs=resolve_threads(n_jobs), prefer="threads")(
        delayed(pagerank)(g, config.damping, config.tol, config.max_iter) for g in graphs
    )
    return CentralityTable(
        pagerank=np.vstack(ranks),
        degree=np.vstack([total_degree(g) for g in graphs]),
    )


def export_graphs(
    graphs: Sequence[ClassGraph],
    centralities: CentralityTable,
    amap: AbstractionMap,
    class_names: Sequence[str],
    out_dir: Union[str, Path],
) -> List[Path]:
    """Write an edge-list CSV and a JSON node table per class.

    Returns:
        Paths written, two per class
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = [f.name for f in amap.flips]
    written: List[Path] = []
    for g in graphs:
        label = class_names[g.class_id]
        edges = nx.to_pandas_edgelist(
            g.to_networkx(names), source="from_flip", target="to_flip"
        )
        if edges.empty:
            edges = pd.DataFrame(columns=["from_flip", "to_flip", "weight"])
        edge_path = out_dir / f"graph_{label}_edges.csv"
        edges[["from_flip", "to_flip", "weight"]].to_csv(
            edge_path, index=False, lineterminator="\n"
        )
        nodes = [
            {
                "flip": names[i],
                "class_prob": g.flip_class_prob[i],
                "pagerank": centralities.pagerank[g.class_id, i],
                "degree": centralities.degree[g.class_id, i],
            }
            for i in g.nodes
        ]
        node_path = write_json(out_dir / f"graph_{label}_nodes.json", nodes)
        written.extend([edge_path, node_path])
    logger.info("Exported %d class graphs to %s", len(graphs), out_dir)
    return written
