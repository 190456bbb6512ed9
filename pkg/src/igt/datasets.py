"""Synthetic graphs and signal datasets, plus IDX image files."""

from __future__ import annotations

import gzip
import struct
from collections import deque
from dataclasses import dataclass

import numpy as np

from .graph import GraphError, GraphSpec, torus_edges

SBM_MAX_ATTEMPTS = 100  # must stay below the dataset stream keys


def rng_for(*key: int) -> np.random.Generator:
    """Counter-based generator keyed by integers; same key, same stream."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(key))))


def cycle_graph(n: int) -> GraphSpec:
    if n < 3 or n % 2 == 0:
        raise GraphError("cycle needs an odd node count >= 3")
    return GraphSpec(n, tuple((i, (i + 1) % n, 1.0) for i in range(n)), f"cycle({n})")


def torus_graph(h: int, w: int) -> GraphSpec:
    if h < 3 or w < 3:
        raise GraphError("torus sides must be at least 3")
    return GraphSpec(h * w, tuple(torus_edges(h, w)), f"torus({h},{w})")


def is_connected(n: int, edges) -> bool:
    adj = [[] for _ in range(n)]
    for u, v, _ in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = {0}
    todo = deque([0])
    while todo:
        u = todo.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return len(seen) == n


def community_labels(sizes) -> np.ndarray:
    return np.repeat(np.arange(len(sizes)), sizes)


def sbm_graph(sizes, p_in: float, p_out: float, seed: int) -> GraphSpec:
    """Stochastic block model, resampled until connected."""
    sizes = list(sizes)
    if not p_in > p_out:
        raise GraphError("p_in must exceed p_out")
    n = sum(sizes)
    comm = community_labels(sizes)
    iu, ju = np.triu_indices(n, 1)
    prob = np.where(comm[iu] == comm[ju], p_in, p_out)
    for attempt in range(SBM_MAX_ATTEMPTS):
        keep = rng_for(seed, attempt).random(len(iu)) < prob
        edges = tuple((int(a), int(b), 1.0) for a, b in zip(iu[keep], ju[keep]))
        if is_connected(n, edges):
            name = f"sbm(m={len(sizes)},sizes={sizes},p_in={p_in},p_out={p_out},seed={seed})"
            return GraphSpec(n, edges, name)
    raise GraphError(f"SBM not connected after {SBM_MAX_ATTEMPTS} attempts")


def gen_graph(kind: str, **params) -> GraphSpec:
    if kind == "cycle":
        return cycle_graph(params["n"])
    if kind == "torus":
        return torus_graph(params["h"], params["w"])
    if kind == "sbm":
        return sbm_graph(params["sizes"], params["p_in"], params["p_out"], params.get("seed", 0))
    raise ValueError(f"unknown graph kind {kind!r}")


@dataclass(frozen=True, eq=False)
class Dataset:
    signals: np.ndarray  # samples x channels x nodes
    labels: np.ndarray
    params: dict

    def __len__(self):
        return len(self.labels)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.signals[idx], self.labels[idx], self.params)


def lazy_walk_matrix(n: int, u, v, w) -> np.ndarray:
    """Row-stochastic ``(I + D^-1 W) / 2``; isolated nodes keep their mass."""
    W = np.zeros((n, n))
    W[u, v] = w
    W[v, u] = w
    deg = W.sum(axis=1)
    iso = np.flatnonzero(deg == 0)
    W[iso, iso] = 1.0
    deg[iso] = 1.0
    return 0.5 * (np.eye(n) + W / deg[:, None])


def gen_diffusion_dataset(g: GraphSpec, samples: int, T: int, q: float, seed: int,
                          communities=None) -> Dataset:
    """Diffused source indicators on edge-perturbed copies of ``g``.

    Every sample drops each edge independently with probability ``q`` and
    runs ``T`` lazy random-walk steps from a uniform source node; the label
    is the source's community.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    n = g.node_count
    comm = np.zeros(n, dtype=np.int64) if communities is None else np.asarray(communities)
    rng = rng_for(seed, 101)
    u = np.array([e[0] for e in g.edges], dtype=np.int64)
    v = np.array([e[1] for e in g.edges], dtype=np.int64)
    w = np.array([e[2] for e in g.edges], dtype=float)
    X = np.zeros((samples, 1, n))
    y = np.zeros(samples, dtype=np.int64)
    for p in range(samples):
        keep = rng.random(len(u)) >= q
        source = int(rng.integers(n))
        P = lazy_walk_matrix(n, u[keep], v[keep], w[keep])
        x = np.zeros(n)
        x[source] = 1.0
        for _ in range(T):
            x = x @ P
        X[p, 0] = x
        y[p] = comm[source]
    params = {"kind": "diffusion", "samples": samples, "T": T, "q": q, "seed": seed,
              "graph": g.name}
    return Dataset(X, y, params)


def texture_spectrum(h: int, w: int, angle: float, radius: float, width: float = 0.8,
                     floor: float = 0.05) -> np.ndarray:
    """Power spectrum of an oriented band-pass texture on the DFT grid."""
    kx = np.fft.fftfreq(h) * h
    ky = np.fft.fftfreq(w) * w
    KX, KY = np.meshgrid(kx, ky, indexing="ij")
    cx, cy = radius * np.cos(angle), radius * np.sin(angle)
    bump = (np.exp(-((KX - cx) ** 2 + (KY - cy) ** 2) / (2 * width ** 2))
            + np.exp(-((KX + cx) ** 2 + (KY + cy) ** 2) / (2 * width ** 2)))
    return bump + floor / (1.0 + KX ** 2 + KY ** 2)


def gen_torus_textures(h: int, w: int, samples: int, seed: int, classes: int = 4,
                       radius: float | None = None) -> Dataset:
    """Unit-norm Gaussian textures on an ``h x w`` torus, labeled by orientation.

    Class ``c`` has spectral power concentrated around the frequency of
    orientation ``pi * c / classes``; every sample is broadband.
    """
    rng = rng_for(seed, 102)
    radius = min(h, w) / 4 if radius is None else radius
    amps = [np.sqrt(texture_spectrum(h, w, np.pi * c / classes, radius))
            for c in range(classes)]
    X = np.zeros((samples, 1, h * w))
    y = rng.integers(classes, size=samples)
    for p in range(samples):
        noise = rng.standard_normal((h, w)) + 1j * rng.standard_normal((h, w))
        x = np.real(np.fft.ifft2(amps[y[p]] * noise)).ravel()
        X[p, 0] = x / np.linalg.norm(x)
    params = {"kind": "textures", "h": h, "w": w, "samples": samples, "seed": seed,
              "classes": classes, "radius": radius}
    return Dataset(X, y.astype(np.int64), params)


class IDXError(ValueError):
    pass


_IDX_TYPES = {0x08: np.dtype(">u1"), 0x09: np.dtype(">i1"), 0x0B: np.dtype(">i2"),
              0x0C: np.dtype(">i4"), 0x0D: np.dtype(">f4"), 0x0E: np.dtype(">f8")}
IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


def parse_idx(data: bytes, expect: str | None = None) -> np.ndarray:
    """Decode an IDX stream (optionally gzip-compressed).

    u8 image tensors come back as ``samples x (rows * cols)`` floats in
    [0, 1]; u8 label vectors as int64.
    """
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    if len(data) < 4:
        raise IDXError("truncated IDX header")
    magic = struct.unpack(">I", data[:4])[0]
    if magic >> 16 != 0:
        raise IDXError(f"bad IDX magic 0x{magic:08x}")
    code, ndim = (magic >> 8) & 0xFF, magic & 0xFF
    if code not in _IDX_TYPES:
        raise IDXError(f"unknown IDX element type 0x{code:02x}")
    if expect == "images" and magic != IMAGES_MAGIC:
        raise IDXError(f"expected images magic 0x{IMAGES_MAGIC:08x}, got 0x{magic:08x}")
    if expect == "labels" and magic != LABELS_MAGIC:
        raise IDXError(f"expected labels magic 0x{LABELS_MAGIC:08x}, got 0x{magic:08x}")
    if len(data) < 4 + 4 * ndim:
        raise IDXError("truncated IDX dimensions")
    dims = struct.unpack(f">{ndim}I", data[4:4 + 4 * ndim])
    dtype = _IDX_TYPES[code]
    count = 1
    for d in dims:
        count *= d
    need = count * dtype.itemsize
    body = data[4 + 4 * ndim:]
    if count > (1 << 40):
        raise IDXError("IDX dimensions overflow")
    if len(body) < need:
        raise IDXError(f"truncated IDX payload: {len(body)} of {need} bytes")
    if len(body) > need:
        raise IDXError(f"IDX payload has {len(body) - need} trailing bytes")
    arr = np.frombuffer(body, dtype=dtype, count=count).reshape(dims)
    if magic == IMAGES_MAGIC:
        return arr.reshape(dims[0], -1).astype(np.float64) / 255.0
    if magic == LABELS_MAGIC:
        return arr.astype(np.int64)
    return arr.astype(dtype.newbyteorder("="))


def encode_idx(array) -> bytes:
    """Serialize an unsigned-byte tensor in IDX layout."""
    array = np.asarray(array)
    if array.dtype != np.uint8:
        raise IDXError("only uint8 tensors are encoded")
    header = struct.pack(">I", (0x08 << 8) | array.ndim)
    header += struct.pack(f">{array.ndim}I", *array.shape)
    return header + array.tobytes()
