"""Averaging operators, filter banks and the modulus cascade."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .budgets import ZERO_BUDGET, constraint_budgets, tightness
from .fourier import SpectralFourier
from .graph import as_batch

GAUSS_WIDTH = 0.8
MAX_ORDER = 2
ENERGY_TARGET = 0.99
# bound on complex entries materialized per chunk in layer_forward
_CHUNK_ENTRIES = 1 << 22


class NormalizationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AveragingOp:
    """Low-pass averaging ``A`` together with its transfer magnitudes.

    ``spectral_magnitudes[i]`` is the gain of ``A`` on Fourier column ``i``.
    For ``kind == "graph"`` the operator is the orthogonal projector on the
    constant atom; for ``"grid"`` it is a periodized Gaussian on a torus
    whose feature maps are subsampled by ``2**J``.
    """

    kind: str
    spectral_magnitudes: np.ndarray
    const_vector: np.ndarray | None = None
    matrix: np.ndarray | None = None
    grid_shape: tuple[int, int] | None = None
    J: int | None = None

    @property
    def n(self) -> int:
        return len(self.spectral_magnitudes)

    def apply(self, x):
        """``A x`` in the node domain (along the last axis)."""
        x = np.asarray(x)
        if self.kind == "graph":
            return (x @ self.const_vector)[..., None] * self.const_vector
        return x @ self.matrix.T

    def energy(self, x):
        """``|A x|^2`` along the last axis."""
        x = np.asarray(x)
        if self.kind == "graph":
            return (x @ self.const_vector) ** 2
        return np.sum((x @ self.matrix.T) ** 2, axis=-1)

    def gram(self, r):
        """``A^T A r`` along the last axis."""
        r = np.asarray(r)
        if self.kind == "graph":
            return (r @ self.const_vector)[..., None] * self.const_vector
        return (r @ self.matrix.T) @ self.matrix

    def complement_energy(self, x):
        """``|(I - A) x|^2`` along the last axis."""
        x = np.asarray(x)
        if self.kind == "graph":
            return np.sum(x * x, axis=-1) - (x @ self.const_vector) ** 2
        return np.sum((x - x @ self.matrix.T) ** 2, axis=-1)

    def features(self, x):
        """Averaged coefficients emitted into the representation.

        Graph averaging yields one coefficient per channel, grid averaging the
        subsampled low-pass map.
        """
        x = np.asarray(x)
        if self.kind == "graph":
            return (x @ self.const_vector)[..., None]
        h, w = self.grid_shape
        step = 2 ** self.J
        low = (x @ self.matrix.T)[..., : h * w]
        low = low.reshape(low.shape[:-1] + (h, w))[..., ::step, ::step]
        return low.reshape(low.shape[:-2] + (-1,))

    @property
    def features_per_channel(self) -> int:
        if self.kind == "graph":
            return 1
        h, w = self.grid_shape
        step = 2 ** self.J
        return -(-h // step) * -(-w // step)


def graph_averaging(fourier: SpectralFourier) -> AveragingOp:
    e = np.real(fourier.columns[:, fourier.const_col]).copy()
    mags = np.zeros(fourier.n)
    mags[fourier.const_col] = 1.0
    return AveragingOp("graph", mags, const_vector=e)


def periodized_gaussian(h: int, w: int, sigma: float) -> np.ndarray:
    """Gaussian kernel wrapped on an ``h x w`` torus, normalized to unit sum."""
    def wrap(m):
        reps = int(np.ceil(8 * sigma / m)) + 1
        u = np.arange(m)[:, None] + m * np.arange(-reps, reps + 1)[None, :]
        return np.exp(-(u ** 2) / (2 * sigma ** 2)).sum(axis=1)
    g = np.outer(wrap(h), wrap(w))
    return g / g.sum()


def grid_averaging(fourier: SpectralFourier, J: int = 3) -> AveragingOp:
    if fourier.grid_shape is None:
        raise ValueError("grid averaging needs an operator built on a periodic grid")
    h, w = fourier.grid_shape
    if J < 0 or 2 ** J > min(h, w):
        raise ValueError(f"2**J = {2 ** J} exceeds the smallest grid side {min(h, w)}")
    n = fourier.n
    kernel = periodized_gaussian(h, w, GAUSS_WIDTH * 2 ** J)
    r, c = np.divmod(np.arange(h * w), w)
    G = np.zeros((n, n))
    G[: h * w, : h * w] = kernel[(r[:, None] - r[None, :]) % h, (c[:, None] - c[None, :]) % w]
    Fc = fourier.columns
    mags = np.abs(np.einsum("mi,mk,ki->i", Fc.conj(), G, Fc))
    return AveragingOp("grid", mags, matrix=G, grid_shape=(h, w), J=J)


def make_averaging(fourier: SpectralFourier, kind: str = "graph", J: int = 3) -> AveragingOp:
    if kind == "graph":
        return graph_averaging(fourier)
    if kind == "grid":
        return grid_averaging(fourier, J)
    raise ValueError(f"unknown averaging kind {kind!r}")


@dataclass(frozen=True, eq=False)
class FilterBank:
    spectra: np.ndarray  # K x n complex, indexed by Fourier column
    layer_index: int = 1
    tightness_eps: float = float("nan")

    @property
    def K(self) -> int:
        return self.spectra.shape[0]

    def measured(self, fourier: SpectralFourier, avg: AveragingOp) -> "FilterBank":
        b = constraint_budgets(self.spectra, avg.spectral_magnitudes, fourier.conj_of)
        return replace(self, tightness_eps=tightness(b))


@dataclass(frozen=True, eq=False)
class IGTModel:
    fourier: SpectralFourier
    averaging: AveragingOp
    banks: tuple[FilterBank, ...]
    meta: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return len(self.banks)

    @property
    def n(self) -> int:
        return self.fourier.n


@dataclass(frozen=True, eq=False)
class Representation:
    """Per-sample features, layer-major then by (input channel, filter path)."""

    features: np.ndarray
    layer_channels: tuple[int, ...]
    features_per_channel: int
    averaged: bool


def filter_response(spectra, fourier: SpectralFourier, z):
    """Complex ``W_k z`` for real rows ``z`` (..., n) -> (..., K, n)."""
    zhat = fourier.analyze(z)
    return (zhat[..., None, :] * spectra) @ fourier.columns.T


def layer_forward(bank: FilterBank, fourier: SpectralFourier, batch) -> np.ndarray:
    """One cascade step ``|W U x|``; output channels ordered (input, filter)."""
    x = as_batch(batch, fourier.n)
    B, Q, n = x.shape
    K = bank.K
    if bank.spectra.shape[1] != n:
        raise ValueError("filter bank and Fourier operator dimensions differ")
    out = np.empty((B, Q * K, n))
    step = max(1, _CHUNK_ENTRIES // max(1, Q * K * n))
    for s in range(0, B, step):
        y = filter_response(bank.spectra, fourier, x[s:s + step])
        out[s:s + step] = np.abs(y).reshape(-1, Q * K, n)
    return out


def cascade(model: IGTModel, batch, depth: int | None = None) -> list[np.ndarray]:
    """``[U_0 x, ..., U_depth x]``."""
    x = as_batch(batch, model.n)
    depth = model.order if depth is None else depth
    layers = [x]
    for bank in model.banks[:depth]:
        layers.append(layer_forward(bank, model.fourier, layers[-1]))
    return layers


def igt_transform(model: IGTModel, batch, averaged: bool = True) -> Representation:
    """Averaged transform ``{A U_0 x, ..., A U_N x}`` or, unaveraged, ``U_N x``."""
    layers = cascade(model, batch)
    B = layers[0].shape[0]
    if not averaged:
        last = layers[-1]
        return Representation(last.reshape(B, -1), (last.shape[1],), last.shape[2], False)
    avg = model.averaging
    parts = [avg.features(u).reshape(B, -1) for u in layers]
    return Representation(np.concatenate(parts, axis=1),
                          tuple(u.shape[1] for u in layers),
                          avg.features_per_channel, True)


@dataclass(frozen=True)
class EnergyProfile:
    fractions: tuple[float, ...]  # |A U_n x|^2 / |x|^2, n = 0..N
    residual: float  # |(I - A) U_N x|^2 / |x|^2, energy left for further layers
    selected_order: int

    @property
    def cumulative(self) -> tuple[float, ...]:
        return tuple(np.cumsum(self.fractions).tolist())


def energy_profile(model: IGTModel, batch) -> EnergyProfile:
    layers = cascade(model, batch)
    avg = model.averaging
    total = float(np.sum(layers[0] ** 2))
    if total == 0.0:
        raise ValueError("energy profile undefined for an all-zero batch")
    fracs = [float(np.sum(avg.energy(u))) / total for u in layers]
    last = layers[-1]
    residual = (float(np.sum(last ** 2)) - float(np.sum(avg.energy(last)))) / total
    cap = min(model.order, MAX_ORDER)
    cum = np.cumsum(fracs)
    hits = [k for k in range(cap + 1) if cum[k] >= ENERGY_TARGET]
    return EnergyProfile(tuple(fracs), residual, hits[0] if hits else cap)


def normalize_to_extremal(bank: FilterBank, avg: AveragingOp,
                          fourier: SpectralFourier) -> FilterBank:
    """Rescale every frequency group so its budget is used exactly."""
    b = constraint_budgets(bank.spectra, avg.spectral_magnitudes, fourier.conj_of)
    dead = (b.gamma == 0) & (b.lam > ZERO_BUDGET)
    if np.any(dead):
        raise NormalizationError(
            f"frequencies {np.flatnonzero(dead).tolist()} carry no filter energy")
    scale = np.zeros_like(b.gamma)
    live = b.lam > ZERO_BUDGET
    scale[live] = np.sqrt(b.lam[live] / b.gamma[live])
    return FilterBank(bank.spectra * scale, bank.layer_index, 0.0)
