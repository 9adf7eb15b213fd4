"""Problem data model: graphs, interaction matrices, and instance generation.

An instance bundles everything the optimizers need: the innate opinions s,
the row-stochastic interaction matrix P, resistance bounds [l, u], the
initial resistance vector, and the change budget (k, p).
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

ROW_SUM_TOL = 1e-12
FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph with vertices 0..n-1.

    edges is an (m, 2) int array with u < v per row, sorted lexicographically.
    """

    n: int
    edges: np.ndarray

    def __post_init__(self):
        edges = np.ascontiguousarray(self.edges, dtype=np.int64).reshape(-1, 2)
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)

    @property
    def m(self) -> int:
        return self.edges.shape[0]


def load_edge_list(path) -> Graph:
    """Parse a whitespace-separated edge list and return its largest component.

    Lines starting with '#' and blank lines are ignored. Self-loops and
    duplicate edges are dropped. Vertices of the largest connected component
    are relabeled 0..n-1 in order of first appearance in the file; ties in
    component size go to the component whose earliest vertex appears first.
    """
    first_seen: dict[int, int] = {}
    edge_set: set[tuple[int, int]] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected two integers, got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise ValueError(f"line {lineno}: expected two integers, got {line!r}") from None
            for x in (u, v):
                if x not in first_seen:
                    first_seen[x] = len(first_seen)
            if u == v:
                continue
            a, b = (u, v) if u < v else (v, u)
            edge_set.add((a, b))
    if not edge_set:
        raise ValueError("empty graph")

    # Work in first-appearance labels so component selection is deterministic.
    relabel = first_seen
    edges = np.array(sorted((relabel[a], relabel[b]) for a, b in edge_set))
    n_all = len(relabel)
    adj = sp.csr_matrix(
        (np.ones(2 * len(edges)), (np.concatenate([edges[:, 0], edges[:, 1]]),
                                   np.concatenate([edges[:, 1], edges[:, 0]]))),
        shape=(n_all, n_all),
    )
    n_comp, labels = connected_components(adj, directed=False)
    sizes = np.bincount(labels, minlength=n_comp)
    best = max(range(n_comp), key=lambda c: (sizes[c], -int(np.min(np.nonzero(labels == c)[0]))))
    keep = np.nonzero(labels == best)[0]
    new_id = -np.ones(n_all, dtype=np.int64)
    new_id[keep] = np.arange(len(keep))  # keep is sorted by first appearance
    mask = (new_id[edges[:, 0]] >= 0) & (new_id[edges[:, 1]] >= 0)
    sub = new_id[edges[mask]]
    sub.sort(axis=1)
    order = np.lexsort((sub[:, 1], sub[:, 0]))
    return Graph(n=len(keep), edges=sub[order])


def chain_graph(n: int) -> Graph:
    """Path graph 0-1-...-(n-1); handy for scaling measurements."""
    if n < 2:
        raise ValueError("chain needs at least 2 vertices")
    idx = np.arange(n - 1)
    return Graph(n=n, edges=np.column_stack([idx, idx + 1]))


def random_connected_graph(n: int, m: int, seed: int) -> Graph:
    """Connected graph on n vertices with m edges: random spanning tree plus
    uniformly drawn extra edges. Deterministic given seed."""
    if m < n - 1:
        raise ValueError("need m >= n - 1 for connectivity")
    if m > n * (n - 1) // 2:
        raise ValueError("too many edges for a simple graph")
    rng = np.random.default_rng(seed)
    edge_set = set()
    for i in range(1, n):
        p = int(rng.integers(0, i))
        edge_set.add((min(p, i), max(p, i)))
    while len(edge_set) < m:
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        if u != v:
            edge_set.add((min(u, v), max(u, v)))
    return Graph(n=n, edges=np.array(sorted(edge_set)))


class RowStochasticMatrix:
    """Sparse nonnegative matrix with unit row sums, stored in CSR layout.

    Invariants checked at construction: all stored values in [0, 1], each row
    sums to 1 within ROW_SUM_TOL, and every row has at least one nonzero.
    """

    def __init__(self, csr: sp.csr_matrix):
        csr = sp.csr_matrix(csr)
        n, n2 = csr.shape
        if n != n2:
            raise ValueError("interaction matrix must be square")
        if csr.nnz and (csr.data.min() < 0.0 or csr.data.max() > 1.0):
            raise ValueError("interaction weights must lie in [0, 1]")
        row_nnz = np.diff(csr.indptr)
        if np.any(row_nnz == 0):
            raise ValueError("isolated agent: every row needs at least one nonzero")
        row_sums = np.asarray(csr.sum(axis=1)).ravel()
        err = np.max(np.abs(row_sums - 1.0))
        if err > ROW_SUM_TOL:
            raise ValueError(f"row sums deviate from 1 by {err:.3e} > {ROW_SUM_TOL}")
        csr.data.setflags(write=False)
        csr.indices.setflags(write=False)
        csr.indptr.setflags(write=False)
        self._csr = csr

    @property
    def n(self) -> int:
        return self._csr.shape[0]

    @property
    def row_offsets(self) -> np.ndarray:
        return self._csr.indptr

    @property
    def col_indices(self) -> np.ndarray:
        return self._csr.indices

    @property
    def values(self) -> np.ndarray:
        return self._csr.data

    def tocsr(self) -> sp.csr_matrix:
        return self._csr

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()

    def column_sums(self) -> np.ndarray:
        return np.asarray(self._csr.sum(axis=0)).ravel()

    def __matmul__(self, other):
        return self._csr @ other


@dataclass(frozen=True)
class Instance:
    """Full input of the budgeted opinion-minimization problem."""

    s: np.ndarray
    P: RowStochasticMatrix
    l: np.ndarray
    u: np.ndarray
    alpha_init: np.ndarray
    k: float
    p: int

    def __post_init__(self):
        n = self.P.n
        for name in ("s", "l", "u", "alpha_init"):
            vec = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if vec.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},)")
            vec.setflags(write=False)
            object.__setattr__(self, name, vec)
        object.__setattr__(self, "k", float(self.k))
        if np.any(self.l <= 0.0):
            raise ValueError("lower bounds must be strictly positive")
        if np.any(self.l > self.alpha_init) or np.any(self.alpha_init > self.u):
            raise ValueError("need l <= alpha_init <= u elementwise")
        if np.any(self.u > 1.0):
            raise ValueError("upper bounds must not exceed 1")
        if np.any(self.s < 0.0) or np.any(self.s > 1.0):
            raise ValueError("innate opinions must lie in [0, 1]")
        if self.k < 0.0:
            raise ValueError("budget k must be nonnegative")
        if self.p not in (1, 2):
            raise ValueError("norm order p must be 1 or 2")

    @property
    def n(self) -> int:
        return self.P.n

    def with_budget(self, k: float, p: int | None = None) -> "Instance":
        """Same realization with a different budget; no re-randomization."""
        return dataclasses.replace(self, k=float(k), p=self.p if p is None else p)


def change_norm(instance: Instance, alpha: np.ndarray) -> float:
    """lp distance of alpha from the initial resistance vector."""
    d = alpha - instance.alpha_init
    if instance.p == 1:
        return float(np.sum(np.abs(d)))
    return float(np.linalg.norm(d))


def feasibility_gap(instance: Instance, alpha: np.ndarray) -> float:
    """Largest constraint violation (0 means feasible): max of box overshoot
    and budget overshoot."""
    box = max(float(np.max(instance.l - alpha, initial=0.0)),
              float(np.max(alpha - instance.u, initial=0.0)))
    return max(box, change_norm(instance, alpha) - instance.k)


def is_feasible(instance: Instance, alpha: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
    return feasibility_gap(instance, alpha) <= tol


def generate_instance(graph: Graph, seed: int, p: int = 1, k: float = 0.0) -> Instance:
    """Seeded random instance on a connected graph.

    Per vertex: s ~ U[0,1); l = 0.001 w.p. 0.99 else U[0.001,0.1);
    u = 0.999 w.p. 0.99 else U[0.9,0.999); alpha_init ~ U[l,u).
    Per edge {i,j}: symmetric weight w ~ U[0,1); P_ij = w_ij / sum_k w_ik.

    Determinism: one RNG substream per field in the fixed spawn order
    (s, w, l, u, alpha_init), so adding fields later never perturbs
    earlier draws. All uniform draws are half-open.
    """
    if graph.n < 2:
        raise ValueError("need at least 2 vertices")
    n, edges = graph.n, graph.edges
    streams = np.random.SeedSequence(seed).spawn(5)
    rng_s, rng_w, rng_l, rng_u, rng_a = (np.random.default_rng(ss) for ss in streams)

    s = rng_s.uniform(0.0, 1.0, n)
    w = rng_w.uniform(0.0, 1.0, edges.shape[0])

    l_branch = rng_l.random(n)
    l_values = rng_l.uniform(0.001, 0.1, n)
    l = np.where(l_branch < 0.99, 0.001, l_values)

    u_branch = rng_u.random(n)
    u_values = rng_u.uniform(0.9, 0.999, n)
    u = np.where(u_branch < 0.99, 0.999, u_values)

    alpha_init = rng_a.uniform(l, u)

    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    vals = np.concatenate([w, w])
    W = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    row_sums = np.asarray(W.sum(axis=1)).ravel()
    if np.any(row_sums <= 0.0):
        raise ValueError("degenerate draw: a vertex has zero total weight")
    W = sp.csr_matrix(W.multiply(1.0 / row_sums[:, None]))
    return Instance(s=s, P=RowStochasticMatrix(W), l=l, u=u,
                    alpha_init=alpha_init, k=float(k), p=p)


def budget_from_reference(alpha_ref: np.ndarray, instance: Instance, c: float) -> float:
    """Budget k = c * ||alpha_ref - alpha_init||_p used by the c-sweep."""
    if np.any(alpha_ref < instance.l) or np.any(alpha_ref > instance.u):
        raise ValueError("reference vector must respect the box bounds")
    return float(c) * change_norm(instance, alpha_ref)


# Text serialization. Floats use 17 significant digits, which round-trips
# IEEE doubles exactly.

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def save_instance(instance: Instance, path) -> None:
    """Write the self-describing text container (see load_instance)."""
    csr = instance.P.tocsr().tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"opinion-opt-instance v1 n={instance.n} p={instance.p} k={_fmt(instance.k)}\n")
        for name in ("s", "l", "u", "alpha_init"):
            fh.write(name + "\n")
            for x in getattr(instance, name):
                fh.write(_fmt(x) + "\n")
        fh.write("P\n")
        for r, c, v in zip(csr.row, csr.col, csr.data):
            fh.write(f"{r} {c} {_fmt(v)}\n")


def load_instance(path) -> Instance:
    """Read an instance written by save_instance. Round-trip is bit-exact."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError("empty instance file")
    head = lines[0].split()
    if len(head) != 5 or head[0] != "opinion-opt-instance" or head[1] != "v1":
        raise ValueError(f"bad header: {lines[0]!r}")
    fields = dict(part.split("=", 1) for part in head[2:])
    n = int(fields["n"])
    p = int(fields["p"])
    k = float(fields["k"])

    pos = 1
    vectors = {}
    for name in ("s", "l", "u", "alpha_init"):
        if lines[pos] != name:
            raise ValueError(f"expected section {name!r} at line {pos + 1}")
        pos += 1
        vectors[name] = np.array([float(x) for x in lines[pos:pos + n]])
        if vectors[name].shape != (n,):
            raise ValueError(f"section {name!r} is truncated")
        pos += n
    if lines[pos] != "P":
        raise ValueError(f"expected section 'P' at line {pos + 1}")
    rows, cols, vals = [], [], []
    for line in lines[pos + 1:]:
        if not line:
            continue
        r, c, v = line.split()
        rows.append(int(r))
        cols.append(int(c))
        vals.append(float(v))
    P = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return Instance(s=vectors["s"], P=RowStochasticMatrix(P), l=vectors["l"],
                    u=vectors["u"], alpha_init=vectors["alpha_init"], k=k, p=p)
