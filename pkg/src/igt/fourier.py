"""Hilbert pairing of Laplacian eigenvectors and the complex Fourier operator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import LaplacianEig
from .matching import max_weight_perfect_matching

GREEDY_MIN_PAIRS = 1500


class PairingError(ValueError):
    pass


@dataclass(frozen=True)
class PairMap:
    pairs: tuple[tuple[int, int], ...]
    const_index: int
    total_cost: float


@dataclass(frozen=True, eq=False)
class SpectralFourier:
    """Unitary matrix whose columns are the graph's complex Fourier atoms.

    With ``d`` pairs, columns ``0..d-1`` are analytic, column ``2d-1-i`` is
    the conjugate of column ``i`` and column ``2d`` is the real constant atom.
    """

    columns: np.ndarray
    analytic_indices: np.ndarray
    conj_of: np.ndarray
    const_col: int
    pairs: tuple[tuple[int, int], ...]
    frequencies: np.ndarray  # per column: mean Laplacian eigenvalue of its pair
    grid_shape: tuple[int, int] | None = None

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    def analyze(self, z):
        """Spectral coefficients <z, F_i> along the last axis."""
        return np.asarray(z) @ self.columns.conj()

    def synthesize(self, zhat):
        return np.asarray(zhat) @ self.columns.T


def cost_bound(n: int) -> float:
    """Upper bound on the pairing cost of unit-norm eigenvectors."""
    d = (n - 1) // 2
    return d * np.sqrt(2.0 * n)


def _validate_pairs(eig: LaplacianEig, pairs):
    used = []
    for a, b in pairs:
        used += [a, b]
    expected = sorted(set(range(eig.n)) - {eig.const_index})
    if eig.const_index in used:
        raise PairingError("constant eigenvector cannot be paired")
    if sorted(used) != expected:
        raise PairingError("pairs must partition the non-constant eigenvectors")


def pairing_cost(eig: LaplacianEig, pairing) -> float:
    """Sum over pairs of the l1 norm of the complex envelope ``e_a + j e_b``."""
    pairs = pairing.pairs if isinstance(pairing, PairMap) else tuple(pairing)
    _validate_pairs(eig, pairs)
    E = eig.eigenvectors
    return float(sum(np.hypot(E[:, a], E[:, b]).sum() for a, b in pairs))


def pairing_cost_matrix(vectors: np.ndarray, chunk: int = 64) -> np.ndarray:
    """Pairwise envelope l1 norms between columns of ``vectors``."""
    sq = vectors ** 2
    m = vectors.shape[1]
    C = np.empty((m, m))
    for start in range(0, m, chunk):
        stop = min(m, start + chunk)
        C[start:stop] = np.sqrt(sq[:, start:stop, None] + sq[:, None, :]).sum(axis=0)
    C = 0.5 * (C + C.T)
    np.fill_diagonal(C, 0.0)
    return C


def _orientation(ea, eb) -> float:
    # relative sign of the pair from labeling-independent odd moments;
    # falls back to the eigenbasis sign convention when they vanish
    for t in (np.sum(ea ** 3 * eb), np.sum(ea * eb ** 3)):
        if abs(t) > 1e-10:
            return float(np.sign(t))
    return 1.0


def build_fourier(eig: LaplacianEig, greedy: bool = False):
    """Pair eigenvectors by maximum envelope cost and assemble the operator.

    Returns ``(PairMap, SpectralFourier)``.
    """
    n = eig.n
    if n % 2 == 0:
        raise PairingError(f"dimension must be odd, got {n}; pad the graph first")
    d = (n - 1) // 2
    if greedy and d <= GREEDY_MIN_PAIRS:
        raise PairingError(f"greedy pairing is reserved for more than {GREEDY_MIN_PAIRS} pairs")
    E = eig.eigenvectors
    pool = np.array([i for i in range(n) if i != eig.const_index])
    if d == 0:
        pairs = ()
    else:
        C = pairing_cost_matrix(E[:, pool])
        local = max_weight_perfect_matching(C, greedy=greedy)
        pairs = tuple((int(pool[a]), int(pool[b])) for a, b in local)
    total = float(sum(np.hypot(E[:, a], E[:, b]).sum() for a, b in pairs))

    F = np.zeros((n, n), dtype=complex)
    conj_of = np.empty(n, dtype=np.int64)
    freqs = np.empty(n)
    for i, (a, b) in enumerate(pairs):
        s = _orientation(E[:, a], E[:, b])
        col = (E[:, a] + 1j * s * E[:, b]) / np.sqrt(2.0)
        F[:, i] = col
        F[:, 2 * d - 1 - i] = col.conj()
        conj_of[i], conj_of[2 * d - 1 - i] = 2 * d - 1 - i, i
        freqs[i] = freqs[2 * d - 1 - i] = 0.5 * (eig.eigenvalues[a] + eig.eigenvalues[b])
    F[:, 2 * d] = E[:, eig.const_index]
    conj_of[2 * d] = 2 * d
    freqs[2 * d] = eig.eigenvalues[eig.const_index]
    pm = PairMap(pairs, eig.const_index, total)
    sf = SpectralFourier(F, np.arange(d), conj_of, 2 * d, pairs, freqs, eig.grid_shape)
    return pm, sf


def grid_frequencies(fourier: SpectralFourier) -> np.ndarray:
    """Dominant signed 2D frequency ``(kx, ky)`` of each column on a torus."""
    if fourier.grid_shape is None:
        raise ValueError("operator was not built on a periodic grid")
    h, w = fourier.grid_shape
    out = np.zeros((fourier.n, 2), dtype=np.int64)
    for i in range(fourier.n):
        spec = np.abs(np.fft.fft2(fourier.columns[: h * w, i].reshape(h, w)))
        kx, ky = np.unravel_index(int(np.argmax(spec)), spec.shape)
        # fft2 uses exp(-j...), so a column exp(+j theta) peaks at -k
        out[i] = ((-kx + h // 2) % h - h // 2, (-ky + w // 2) % w - w // 2)
    return out
