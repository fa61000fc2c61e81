"""
Graph Module for the distributed average tracking simulator.
Builds undirected interaction graphs and exposes the spectral quantities
consumed by the gain conditions.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

# Local imports
from core.errors import GraphError, SpectrumError

DEFAULT_EIGEN_TOL = 1e-10
DEFAULT_ZERO_TOL = 1e-8

# Canonical ten-agent topology: ring 1-2-...-10-1 plus two chords.
CANONICAL_CHORDS = ((1, 5), (3, 8))


@dataclass(frozen=True)
class Graph:
    """
    Undirected, unweighted interaction graph.

    Edges are stored 1-based as (smaller, larger) pairs in sorted order, which
    is also the column order of the incidence matrix. Every edge is oriented
    from its smaller to its larger endpoint (-1 at the tail row, +1 at the head
    row). Matrices are integer-valued and read-only.
    """

    n: int
    edges: Tuple[Tuple[int, int], ...]
    adjacency: np.ndarray = field(repr=False)
    laplacian: np.ndarray = field(repr=False)
    incidence: np.ndarray = field(repr=False)
    _neighbors: Tuple[Tuple[int, ...], ...] = field(repr=False, compare=False)

    @property
    def m(self) -> int:
        """Number of edges."""
        return len(self.edges)

    @property
    def degree(self) -> np.ndarray:
        """Node degrees (diagonal of the Laplacian)."""
        return np.diag(self.laplacian).copy()

    def neighbors(self, i: int) -> Tuple[int, ...]:
        """0-based neighbor indices of the 0-based node i."""
        return self._neighbors[i]

    def edge_list(self) -> List[List[int]]:
        """1-based edge list, as written in scenario documents."""
        return [[i, j] for i, j in self.edges]

    def to_dict(self) -> Dict[str, object]:
        return {'n': self.n, 'edges': self.edge_list()}


@dataclass(frozen=True)
class Spectrum:
    """Ascending Laplacian eigenvalues with the two the gain conditions use."""

    eigenvalues: np.ndarray
    lambda2: float
    lambdaN: float
    residual: float = 0.0

    def zero_count(self, zero_tol: float = DEFAULT_ZERO_TOL) -> int:
        """Number of eigenvalues classified as zero."""
        return int(np.sum(np.abs(self.eigenvalues) < zero_tol))

    def to_dict(self) -> Dict[str, object]:
        return {
            'eigenvalues': [float(e) for e in self.eigenvalues],
            'lambda2': float(self.lambda2),
            'lambdaN': float(self.lambdaN),
            'residual': float(self.residual),
        }


def _normalize_edges(n: int, edges: Iterable[Sequence[int]]) -> Tuple[Tuple[int, int], ...]:
    normalized = set()
    for edge in edges:
        pair = tuple(edge)
        if len(pair) != 2:
            raise GraphError(
                f"Edge {pair!r} must be an index pair; weighted edges are not supported"
            )
        i, j = (int(k) for k in pair)
        if not (1 <= i <= n and 1 <= j <= n):
            raise GraphError(f"Edge ({i}, {j}) has an index outside [1, {n}]")
        if i == j:
            raise GraphError(f"Self edge ({i}, {i}) is not allowed")
        normalized.add((min(i, j), max(i, j)))
    return tuple(sorted(normalized))


def build_graph(n: int, edges: Iterable[Sequence[int]]) -> Graph:
    """
    Build an undirected graph from a 1-based edge list.

    Args:
        n: Number of agents (a single isolated agent is allowed)
        edges: Index pairs (i, j) with 1 <= i, j <= n and i != j; duplicates
            and reversed duplicates collapse

    Returns:
        Graph with adjacency, Laplacian and incidence matrices populated

    Raises:
        GraphError: On a non-positive agent count, out-of-range index, self
            edge or weighted edge
    """
    if int(n) != n or n < 1:
        raise GraphError(f"Agent count must be a positive integer, got {n!r}")
    n = int(n)
    pairs = _normalize_edges(n, edges)

    adjacency = np.zeros((n, n), dtype=np.int64)
    incidence = np.zeros((n, len(pairs)), dtype=np.int64)
    for k, (i, j) in enumerate(pairs):
        adjacency[i - 1, j - 1] = 1
        adjacency[j - 1, i - 1] = 1
        incidence[i - 1, k] = -1
        incidence[j - 1, k] = 1

    laplacian = np.diag(adjacency.sum(axis=1)) - adjacency
    neighbors = tuple(tuple(int(j) for j in np.flatnonzero(adjacency[i])) for i in range(n))

    for matrix in (adjacency, laplacian, incidence):
        matrix.setflags(write=False)

    logger.debug(f"Built graph with n={n}, m={len(pairs)}")
    return Graph(n=n, edges=pairs, adjacency=adjacency, laplacian=laplacian,
                 incidence=incidence, _neighbors=neighbors)


def is_connected(g: Graph) -> bool:
    """True iff a breadth-first traversal from node 1 reaches every node."""
    if g.n == 1:
        return True
    order = breadth_first_order(csr_matrix(g.adjacency), 0, directed=False,
                                return_predecessors=False)
    return len(order) == g.n


def spectrum(g: Graph, tol: float = DEFAULT_EIGEN_TOL) -> Spectrum:
    """
    Compute the Laplacian spectrum with a dense symmetric eigensolver.

    Args:
        g: Graph whose Laplacian is decomposed
        tol: Accepted eigen-residual max|L V - V diag(lambda)|, relative to
            max(1, ||L||_2)

    Returns:
        Spectrum with ascending eigenvalues, lambda2 and lambdaN

    Raises:
        SpectrumError: If the decomposition residual exceeds the tolerance
    """
    laplacian = g.laplacian.astype(float)
    try:
        eigenvalues, eigenvectors = linalg.eigh(laplacian)
    except linalg.LinAlgError as e:
        raise SpectrumError(f"Symmetric eigensolver failed: {e}", residual=float('inf'))

    residual = float(np.max(np.abs(laplacian @ eigenvectors - eigenvectors * eigenvalues)))
    scale = max(1.0, float(eigenvalues[-1]))
    if residual > tol * scale:
        raise SpectrumError("Laplacian eigen-decomposition did not converge", residual=residual)

    lambda2 = float(eigenvalues[1]) if g.n > 1 else 0.0
    return Spectrum(eigenvalues=eigenvalues, lambda2=lambda2,
                    lambdaN=float(eigenvalues[-1]), residual=residual)


def centering_projector(n: int) -> np.ndarray:
    """Return M = I - (1/n) 1 1^T, the projector onto zero-sum vectors."""
    if n < 1:
        raise GraphError(f"Projector size must be positive, got {n}")
    return np.eye(n) - np.ones((n, n)) / n


def quadratic_form_bounds(g: Graph, y: np.ndarray,
                          spec: Optional[Spectrum] = None) -> Tuple[float, float, float]:
    """
    Evaluate the quadratic-form sandwich for a zero-sum vector y.

    Returns:
        (lambda2 * y'y, y'Ly, lambdaN * y'y)
    """
    spec = spec or spectrum(g)
    y = np.asarray(y, dtype=float)
    yy = float(y @ y)
    return spec.lambda2 * yy, float(y @ g.laplacian @ y), spec.lambdaN * yy


def ring_graph(n: int) -> Graph:
    """Cycle 1-2-...-n-1 (a single edge for n = 2)."""
    return build_graph(n, [(i, i % n + 1) for i in range(1, n + 1)] if n > 1 else [])


def path_graph(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(1, n)])


def complete_graph(n: int) -> Graph:
    return build_graph(n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)])


def canonical_topology() -> Graph:
    """Ten-agent ring with chords (1,5) and (3,8), used by the replication presets."""
    ring = [(i, i % 10 + 1) for i in range(1, 11)]
    return build_graph(10, ring + list(CANONICAL_CHORDS))


def random_connected_graph(n: int, density: float = 0.3,
                           rng: Optional[np.random.Generator] = None) -> Graph:
    """
    Sample a connected graph: a random spanning tree plus extra edges.

    Args:
        n: Number of nodes
        density: Probability of adding each non-tree edge
        rng: Numpy random generator (seeded by callers for reproducibility)
    """
    rng = rng or np.random.default_rng()
    order = rng.permutation(n) + 1
    edges = set()
    for k in range(1, n):
        parent = order[rng.integers(0, k)]
        edges.add((int(min(parent, order[k])), int(max(parent, order[k]))))
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if (i, j) not in edges and rng.random() < density:
                edges.add((i, j))
    return build_graph(n, sorted(edges))


def preset_graph(name: str, n: Optional[int] = None) -> Graph:
    """Resolve a named topology used in scenario documents."""
    if name == 'canonical':
        if n not in (None, 10):
            raise GraphError("The canonical topology has exactly 10 agents")
        return canonical_topology()
    builders = {'ring': ring_graph, 'path': path_graph, 'complete': complete_graph}
    if name not in builders:
        raise GraphError(f"Unknown graph preset '{name}'")
    if n is None:
        raise GraphError(f"Graph preset '{name}' needs an agent count")
    return builders[name](n)
