"""Graphs, combinatorial Laplacians and their deterministic eigenbases."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

ROUND = 1e-9


class GraphError(ValueError):
    pass


class EdgeListError(GraphError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class DisconnectedGraphError(GraphError):
    pass


@dataclass(frozen=True)
class GraphSpec:
    """Undirected weighted graph on ``node_count`` nodes.

    ``virtual_nodes`` counts trailing isolated nodes appended by
    :func:`pad_to_odd`; they are excluded from the connectivity check.
    """

    node_count: int
    edges: tuple[tuple[int, int, float], ...]
    name: str = ""
    virtual_nodes: int = 0

    def __post_init__(self):
        if self.node_count < 1:
            raise GraphError("node_count must be positive")
        seen = set()
        for u, v, w in self.edges:
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise GraphError(f"edge ({u}, {v}) out of range")
            if not w > 0:
                raise GraphError(f"edge ({u}, {v}) has non-positive weight {w}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphError(f"duplicate edge {key}")
            seen.add(key)

    @property
    def real_nodes(self) -> int:
        return self.node_count - self.virtual_nodes

    def adjacency(self) -> np.ndarray:
        W = np.zeros((self.node_count, self.node_count))
        for u, v, w in self.edges:
            W[u, v] = W[v, u] = w
        return W

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)


def parse_edge_list(text: str) -> GraphSpec:
    """Parse ``n <count>`` followed by ``u v [w]`` lines.

    Lines starting with ``#`` are comments; ``# name: <label>`` sets the
    graph name.
    """
    node_count = None
    name = ""
    edges = []
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = re.match(r"#\s*name:\s*(.*)$", line)
            if m:
                name = m.group(1).strip()
            continue
        parts = line.split()
        if parts[0] == "n":
            if node_count is not None:
                raise EdgeListError(lineno, "repeated node-count header")
            if len(parts) != 2:
                raise EdgeListError(lineno, "malformed header, expected 'n <count>'")
            try:
                node_count = int(parts[1])
            except ValueError:
                raise EdgeListError(lineno, f"bad node count {parts[1]!r}") from None
            if node_count < 1:
                raise EdgeListError(lineno, "node count must be positive")
            continue
        if node_count is None:
            raise EdgeListError(lineno, "edge before 'n <count>' header")
        if len(parts) not in (2, 3):
            raise EdgeListError(lineno, "expected 'u v [w]'")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise EdgeListError(lineno, f"malformed edge {line!r}") from None
        if u == v:
            raise EdgeListError(lineno, f"self-loop at node {u}")
        if not (0 <= u < node_count and 0 <= v < node_count):
            raise EdgeListError(lineno, f"node index out of range [0, {node_count})")
        if not (np.isfinite(w) and w > 0):
            raise EdgeListError(lineno, f"weight must be positive, got {w}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise EdgeListError(lineno, f"duplicate edge {key} (first on line {seen[key]})")
        seen[key] = lineno
        edges.append((u, v, w))
    if node_count is None:
        raise EdgeListError(0, "missing 'n <count>' header")
    return GraphSpec(node_count, tuple(edges), name)


def format_edge_list(g: GraphSpec) -> str:
    lines = []
    if g.name:
        lines.append(f"# name: {g.name}")
    lines.append(f"n {g.node_count}")
    lines.extend(f"{u} {v} {w!r}" for u, v, w in g.edges)
    return "\n".join(lines) + "\n"


def build_laplacian(g: GraphSpec) -> np.ndarray:
    """Combinatorial Laplacian ``D - W``."""
    W = g.adjacency()
    return np.diag(W.sum(axis=1)) - W


@dataclass(frozen=True, eq=False)
class LaplacianEig:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    const_index: int
    grid_shape: tuple[int, int] | None = field(default=None)

    @property
    def n(self) -> int:
        return len(self.eigenvalues)


def _canonical_order(values: np.ndarray, vectors: np.ndarray):
    """Ascending eigenvalues; ties ordered lexicographically by rounded entries.

    Signs are fixed first so that each vector's first entry above ``ROUND``
    in magnitude is positive. Tied eigenvalues are replaced by their group
    mean so the reordered vector stays ascending.
    """
    vectors = vectors.copy()
    for j in range(vectors.shape[1]):
        big = np.flatnonzero(np.abs(vectors[:, j]) > ROUND)
        if big.size and vectors[big[0], j] < 0:
            vectors[:, j] = -vectors[:, j]
    order = np.argsort(values, kind="stable")
    values, vectors = values[order].copy(), vectors[:, order]
    tol = ROUND * max(1.0, float(np.max(np.abs(values))))
    keys = np.rint(vectors / ROUND).astype(np.int64)
    out = []
    start = 0
    for stop in range(1, len(values) + 1):
        if stop == len(values) or values[stop] - values[stop - 1] > tol:
            group = list(range(start, stop))
            group.sort(key=lambda j: tuple(keys[:, j]))
            out.extend(group)
            if stop - start > 1:
                values[start:stop] = 0.0 if values[start] == 0.0 else values[start:stop].mean()
            start = stop
    out = np.array(out)
    return values[out], np.ascontiguousarray(vectors[:, out])


def _zero_tol(values) -> float:
    return 1e-9 * max(1.0, float(np.max(np.abs(values))))


def eigendecompose(L) -> LaplacianEig:
    """Orthonormal eigenbasis of a connected graph's Laplacian."""
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise GraphError("Laplacian must be square")
    if np.max(np.abs(L - L.T), initial=0.0) > 1e-12:
        raise GraphError("Laplacian is not symmetric")
    n = L.shape[0]
    values, vectors = np.linalg.eigh(L)
    tol = _zero_tol(values)
    if n > 1 and values[1] <= tol:
        raise DisconnectedGraphError(
            "zero eigenvalue has multiplicity > 1: graph is not connected")
    # the null vector is known in closed form
    values = values.copy()
    values[0] = 0.0
    vectors[:, 0] = 1.0 / np.sqrt(n)
    values, vectors = _canonical_order(values, vectors)
    const = int(np.flatnonzero(values == 0.0)[0])
    return LaplacianEig(values, vectors, const)


def torus_edges(h: int, w: int):
    edges = []
    for r in range(h):
        for c in range(w):
            i = r * w + c
            edges.append((i, ((r + 1) % h) * w + c, 1.0))
            edges.append((i, r * w + (c + 1) % w, 1.0))
    return edges


def torus_eigendecompose(h: int, w: int) -> LaplacianEig:
    """Eigenbasis of the periodic ``h x w`` grid built from plane waves.

    Each conjugate frequency pair contributes a cosine and a sine, so every
    multi-dimensional eigenspace is split along single frequencies.
    """
    n = h * w
    r, c = np.divmod(np.arange(n), w)
    values, vectors = [], []
    seen = set()
    for kx in range(h):
        for ky in range(w):
            if (kx, ky) in seen:
                continue
            twin = ((-kx) % h, (-ky) % w)
            seen.update({(kx, ky), twin})
            lam = 4.0 - 2.0 * np.cos(2 * np.pi * kx / h) - 2.0 * np.cos(2 * np.pi * ky / w)
            theta = 2 * np.pi * (kx * r / h + ky * c / w)
            if twin == (kx, ky):
                v = np.cos(theta)
                vectors.append(v / np.linalg.norm(v))
                values.append(lam)
            else:
                scale = np.sqrt(2.0 / n)
                vectors += [scale * np.cos(theta), scale * np.sin(theta)]
                values += [lam, lam]
    values = np.array(values)
    values[0] = 0.0
    vectors = np.stack(vectors, axis=1)
    values, vectors = _canonical_order(values, vectors)
    const = int(np.flatnonzero(values == 0.0)[0])
    return LaplacianEig(values, vectors, const, grid_shape=(h, w))


def torus_shape(g: GraphSpec) -> tuple[int, int] | None:
    """Return (h, w) when ``g`` is exactly the periodic grid named ``torus(h,w)``."""
    m = re.fullmatch(r"torus\((\d+),\s*(\d+)\)", g.name.strip())
    if not m:
        return None
    h, w = int(m.group(1)), int(m.group(2))
    if h < 3 or w < 3 or g.real_nodes != h * w:
        return None
    want = {(min(u, v), max(u, v)) for u, v, _ in torus_edges(h, w)}
    have = {(min(u, v), max(u, v)) for u, v, x in g.edges if x == 1.0}
    if want != have or len(g.edges) != len(want):
        return None
    return h, w


def laplacian_eig(g: GraphSpec) -> LaplacianEig:
    """Eigenbasis for ``g``, honoring padded virtual nodes and exact tori."""
    n_real = g.real_nodes
    shape = torus_shape(g)
    if shape is not None:
        base = torus_eigendecompose(*shape)
    else:
        sub = GraphSpec(n_real, g.edges, g.name)
        base = eigendecompose(build_laplacian(sub))
    if g.virtual_nodes == 0:
        return base
    k = g.virtual_nodes
    vectors = np.zeros((g.node_count, g.node_count))
    vectors[:n_real, :n_real] = base.eigenvectors
    vectors[n_real:, n_real:] = np.eye(k)
    values = np.concatenate([base.eigenvalues, np.zeros(k)])
    const_vec = vectors[:, base.const_index].copy()
    values, vectors = _canonical_order(values, vectors)
    const = int(np.flatnonzero(np.all(vectors == const_vec[:, None], axis=0))[0])
    return LaplacianEig(values, vectors, const, grid_shape=base.grid_shape)


def as_batch(x, n: int | None = None) -> np.ndarray:
    """Coerce signals to a finite ``samples x channels x nodes`` float array."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, None, :]
    elif x.ndim == 2:
        x = x[:, None, :]
    elif x.ndim != 3:
        raise ValueError(f"signal batch must have 1-3 dims, got {x.ndim}")
    if n is not None and x.shape[2] != n:
        raise ValueError(f"signals have {x.shape[2]} nodes, model expects {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal batch has non-finite entries")
    return x


def pad_to_odd(g: GraphSpec, batch=None):
    """Append one isolated virtual node when the node count is even."""
    if g.node_count % 2 == 1:
        return g, (None if batch is None else as_batch(batch))
    padded = GraphSpec(g.node_count + 1, g.edges, g.name, g.virtual_nodes + 1)
    if batch is None:
        return padded, None
    x = as_batch(batch, g.node_count)
    x = np.concatenate([x, np.zeros(x.shape[:2] + (1,))], axis=2)
    return padded, x
