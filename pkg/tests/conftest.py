import numpy as np
import pytest

from igt.datasets import cycle_graph, is_connected, torus_graph
from igt.fourier import build_fourier
from igt.graph import GraphSpec, laplacian_eig
from igt.transform import make_averaging


def random_connected_graph(rng, n, p=0.3, weighted=False):
    """Random spanning tree plus Erdos-Renyi extras; always connected."""
    edges = {}
    order = rng.permutation(n)
    for i in range(1, n):
        u, v = int(order[i]), int(order[rng.integers(i)])
        edges[(min(u, v), max(u, v))] = 1.0
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges[(u, v)] = 1.0
    out = []
    for (u, v) in sorted(edges):
        w = float(rng.uniform(0.5, 2.0)) if weighted else 1.0
        out.append((u, v, w))
    assert is_connected(n, out)
    return GraphSpec(n, tuple(out), f"random({n})")


def operator_matrices(spectra, fourier):
    """Dense ``W_k = F diag(spectra_k) F*`` stacked as K x n x n."""
    F = fourier.columns
    return np.einsum("mi,ki,li->kml", F, spectra, F.conj())


def random_bank(rng, K, n, scale=1.0):
    return scale * (rng.standard_normal((K, n)) + 1j * rng.standard_normal((K, n)))


class Setup:
    def __init__(self, g, kind="graph", J=1):
        self.graph = g
        self.eig = laplacian_eig(g)
        self.pairs, self.fourier = build_fourier(self.eig)
        self.avg = make_averaging(self.fourier, kind, J)

    @property
    def n(self):
        return self.fourier.n


@pytest.fixture(scope="session")
def cycle9():
    return Setup(cycle_graph(9))


@pytest.fixture(scope="session")
def rand15():
    return Setup(random_connected_graph(np.random.default_rng(5), 15, 0.3, weighted=True))


@pytest.fixture(scope="session")
def torus5():
    return Setup(torus_graph(5, 5))


@pytest.fixture(scope="session")
def torus5_grid():
    return Setup(torus_graph(5, 5), "grid", 1)


# acceptance verdicts, printed as one line each at the end of the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
