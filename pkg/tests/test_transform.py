import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import Setup, operator_matrices, random_bank, random_connected_graph
from igt.datasets import cycle_graph, torus_graph
from igt.graph import GraphSpec
from igt.training import TrainConfig, greedy_train, project_spectra
from igt.transform import (FilterBank, IGTModel, NormalizationError, cascade, energy_profile,
                           grid_averaging, igt_transform, layer_forward, make_averaging,
                           normalize_to_extremal, periodized_gaussian)


def feasible_bank(rng, s, K, scale=1.0, layer=1):
    return FilterBank(project_spectra(random_bank(rng, K, s.n, scale), s.avg, s.fourier), layer)


def extremal_bank(rng, s, K, layer=1):
    return normalize_to_extremal(FilterBank(random_bank(rng, K, s.n), layer), s.avg, s.fourier)


class TestAveraging:
    def test_graph_projector(self, rand15):
        s = rand15
        E = s.eig.eigenvectors
        for j in range(s.n):
            out = s.avg.apply(E[:, j])
            want = E[:, j] if j == s.eig.const_index else np.zeros(s.n)
            assert np.allclose(out, want, atol=1e-12)
        mags = s.avg.spectral_magnitudes
        assert mags[s.fourier.const_col] == 1 and mags.sum() == 1

    @settings(max_examples=50)
    @given(arrays(np.float64, 15, elements=st.floats(1e-3, 1e3)))
    def test_positive_input_keeps_mass(self, x):
        s = Setup(random_connected_graph(np.random.default_rng(5), 15, 0.3, weighted=True))
        assert np.linalg.norm(s.avg.apply(x)) >= np.linalg.norm(x) / np.sqrt(15) * (1 - 1e-12)

    def test_grid_constant_image(self, torus5_grid):
        s = torus5_grid
        x = np.full(s.n, 3.0)
        assert np.allclose(s.avg.apply(x), x)
        feats = s.avg.features(x)
        assert feats.shape == (9,)
        assert np.allclose(feats, 3.0)

    def test_grid_magnitudes(self):
        s = Setup(torus_graph(9, 9), "grid", 3)
        mags = s.avg.spectral_magnitudes
        assert np.all(mags >= 0) and np.max(mags) <= 1 + 1e-12
        assert abs(mags[s.fourier.const_col] - 1) < 1e-12
        assert s.avg.features_per_channel == 4
        # the kernel is diagonal in the Fourier basis
        F, G = s.fourier.columns, s.avg.matrix
        D = F.conj().T @ G @ F
        assert np.max(np.abs(D - np.diag(np.diag(D)))) < 1e-12

    def test_grid_J_too_large(self, torus5):
        with pytest.raises(ValueError, match="exceeds"):
            grid_averaging(torus5.fourier, 3)

    def test_grid_needs_torus(self, cycle9):
        with pytest.raises(ValueError, match="periodic grid"):
            make_averaging(cycle9.fourier, "grid", 1)

    def test_periodized_gaussian(self):
        k = periodized_gaussian(9, 9, 2.4)
        assert abs(k.sum() - 1) < 1e-15
        # even in both directions on the torus
        assert np.allclose(k, np.roll(k[::-1], 1, axis=0), rtol=0, atol=1e-18)
        assert np.allclose(k, np.roll(k[:, ::-1], 1, axis=1), rtol=0, atol=1e-18)

    def test_unknown_kind(self, cycle9):
        with pytest.raises(ValueError):
            make_averaging(cycle9.fourier, "box")


class TestLayerForward:
    def test_all_pass(self, rand15):
        rng = np.random.default_rng(0)
        z = rng.standard_normal((4, 2, 15))
        out = layer_forward(FilterBank(np.ones((1, 15), complex)), rand15.fourier, z)
        assert np.allclose(out, np.abs(z), atol=1e-12)
        zp = np.abs(z)
        assert np.allclose(layer_forward(FilterBank(np.ones((1, 15), complex)), rand15.fourier, zp),
                           zp, atol=1e-12)

    def test_zero_bank(self, rand15):
        out = layer_forward(FilterBank(np.zeros((3, 15), complex)), rand15.fourier,
                            np.ones((2, 1, 15)))
        assert out.shape == (2, 3, 15) and np.all(out == 0)

    def test_cycle_indicator_is_flat(self):
        s = Setup(cycle_graph(11))
        z = np.random.default_rng(1).standard_normal(11)
        zhat = s.fourier.analyze(z)
        for i in s.fourier.analytic_indices:
            spec = np.zeros((1, 11), complex)
            spec[0, i] = 1
            out = layer_forward(FilterBank(spec), s.fourier, z)[0, 0]
            assert np.allclose(out, abs(zhat[i]) / np.sqrt(11), atol=1e-12)

    def test_channel_order(self, cycle9):
        rng = np.random.default_rng(2)
        bank = feasible_bank(rng, cycle9, 3)
        x = rng.standard_normal((2, 2, 9))
        out = layer_forward(bank, cycle9.fourier, x)
        single = layer_forward(bank, cycle9.fourier, x[:, 1:2])
        assert np.allclose(out[:, 3:6], single, rtol=0, atol=1e-14)

    def test_dimension_mismatch(self, cycle9):
        with pytest.raises(ValueError):
            layer_forward(FilterBank(np.ones((1, 7), complex)), cycle9.fourier, np.ones((1, 9)))
        with pytest.raises(ValueError):
            layer_forward(FilterBank(np.ones((1, 9), complex)), cycle9.fourier, np.ones((1, 8)))


def two_layer_model(rng, s, K=(3, 2), extremal=False):
    make = extremal_bank if extremal else feasible_bank
    return IGTModel(s.fourier, s.avg, tuple(make(rng, s, k, layer=i + 1) for i, k in enumerate(K)))


class TestTransform:
    def test_zero_maps_to_zero(self, rand15):
        model = two_layer_model(np.random.default_rng(0), rand15)
        rep = igt_transform(model, np.zeros((2, 1, 15)))
        assert np.all(rep.features == 0)

    def test_bookkeeping(self, rand15):
        model = two_layer_model(np.random.default_rng(0), rand15)
        rep = igt_transform(model, np.ones((4, 2, 15)))
        assert rep.layer_channels == (2, 6, 12)
        assert rep.features.shape == (4, 2 + 6 + 12)
        un = igt_transform(model, np.ones((4, 2, 15)), averaged=False)
        assert un.features.shape == (4, 12 * 15) and not un.averaged

    def test_grid_bookkeeping(self, torus5_grid):
        model = two_layer_model(np.random.default_rng(0), torus5_grid, K=(2, 2))
        rep = igt_transform(model, np.ones((3, 1, 25)))
        assert rep.features.shape == (3, (1 + 2 + 4) * 9)

    @pytest.mark.parametrize("fixture", ["rand15", "torus5_grid", "cycle9"])
    def test_non_expansive(self, fixture, request):
        s = request.getfixturevalue(fixture)
        rng = np.random.default_rng(7)
        model = two_layer_model(rng, s, K=(4, 3))
        x = rng.standard_normal((300, 1, s.n))
        y = x + rng.standard_normal((300, 1, s.n)) * rng.uniform(0.01, 2, (300, 1, 1))
        Sx, Sy = igt_transform(model, x).features, igt_transform(model, y).features
        lhs = np.linalg.norm(Sx - Sy, axis=1)
        rhs = np.linalg.norm((x - y).reshape(300, -1), axis=1)
        assert np.all(lhs <= rhs * (1 + 1e-9))

    def test_nonnegative_deeper_layers(self, rand15):
        model = two_layer_model(np.random.default_rng(3), rand15)
        rep = igt_transform(model, np.random.default_rng(4).standard_normal((20, 1, 15)))
        assert np.all(rep.features[:, 1:] >= 0)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(12)
        g = random_connected_graph(rng, 21, 0.25, weighted=True)
        P = rng.permutation(21)
        inv = np.argsort(P)
        gp = GraphSpec(21, tuple((int(inv[u]), int(inv[v]), w) for u, v, w in g.edges), g.name)
        x = np.abs(rng.standard_normal((64, 1, 21)))
        cfg = TrainConfig([4], batch_size=16, epochs=1, seed=3)
        feats = []
        for graph, data in ((g, x), (gp, x[..., P])):
            s = Setup(graph)
            assert np.min(np.diff(s.eig.eigenvalues)) > 1e-6
            model = greedy_train(data, s.fourier, s.avg, cfg)
            feats.append(igt_transform(model, data).features)
        assert np.max(np.abs(feats[0] - feats[1])) < 1e-6


class TestEnergy:
    @pytest.mark.parametrize("fixture", ["rand15", "torus5_grid"])
    def test_telescoping_inequality(self, fixture, request):
        s = request.getfixturevalue(fixture)
        rng = np.random.default_rng(1)
        model = two_layer_model(rng, s)
        layers = cascade(model, rng.standard_normal((50, 1, s.n)))
        for n in range(model.order):
            lhs = s.avg.energy(layers[n]).sum(axis=1) + (layers[n + 1] ** 2).sum(axis=(1, 2))
            rhs = (layers[n] ** 2).sum(axis=(1, 2))
            assert np.all(lhs <= rhs * (1 + 1e-9))

    def test_extremal_equalities(self, rand15):
        rng = np.random.default_rng(2)
        model = two_layer_model(rng, rand15, extremal=True)
        x = rng.standard_normal((50, 1, 15))
        layers = cascade(model, x)
        for n in range(model.order):
            lhs = rand15.avg.energy(layers[n]).sum(axis=1) + (layers[n + 1] ** 2).sum(axis=(1, 2))
            rhs = (layers[n] ** 2).sum(axis=(1, 2))
            assert np.max(np.abs(lhs - rhs) / rhs) < 1e-7
        prof = energy_profile(model, x)
        assert abs(sum(prof.fractions) + prof.residual - 1) < 1e-7

    def test_profile_bounded(self, torus5_grid):
        rng = np.random.default_rng(4)
        model = two_layer_model(rng, torus5_grid)
        prof = energy_profile(model, rng.standard_normal((30, 1, 25)))
        assert prof.cumulative[-1] + prof.residual <= 1 + 1e-9
        assert len(prof.fractions) == 3

    def test_constant_signal(self, rand15):
        model = two_layer_model(np.random.default_rng(0), rand15)
        prof = energy_profile(model, np.ones((1, 1, 15)))
        assert prof.fractions[0] == pytest.approx(1.0, abs=1e-15)
        assert prof.selected_order == 0

    def test_decay_for_positive_inputs(self, rand15):
        rng = np.random.default_rng(5)
        model = two_layer_model(rng, rand15, K=(3, 2, 2), extremal=True)
        x = rng.uniform(0.01, 1, (40, 1, 15))
        layers = cascade(model, x)
        norm0 = (x ** 2).sum(axis=(1, 2))
        for N in range(1, 4):
            assert np.all((layers[N] ** 2).sum(axis=(1, 2)) <= (1 - 1 / 15) ** N * norm0 * (1 + 1e-12))

    def test_zero_batch(self, rand15):
        model = two_layer_model(np.random.default_rng(0), rand15)
        with pytest.raises(ValueError, match="zero"):
            energy_profile(model, np.zeros((2, 1, 15)))

    def test_order_cap(self, rand15):
        model = two_layer_model(np.random.default_rng(0), rand15, K=(2, 2, 2))
        prof = energy_profile(model, np.random.default_rng(1).standard_normal((10, 1, 15)))
        assert prof.selected_order <= 2


class TestExtremal:
    def test_idempotent(self, rand15):
        b = extremal_bank(np.random.default_rng(0), rand15, 4)
        again = normalize_to_extremal(b, rand15.avg, rand15.fourier)
        assert np.max(np.abs(again.spectra - b.spectra)) < 1e-12
        assert b.tightness_eps == 0

    @pytest.mark.parametrize("fixture", ["rand15", "cycle9"])
    def test_isometry_on_complement(self, fixture, request):
        s = request.getfixturevalue(fixture)
        rng = np.random.default_rng(1)
        b = extremal_bank(rng, s, 3)
        Ws = operator_matrices(b.spectra, s.fourier)
        for _ in range(100):
            x = rng.standard_normal(s.n)
            wx = sum(np.linalg.norm(W @ x) ** 2 for W in Ws)
            ax = np.linalg.norm(s.avg.apply(x)) ** 2
            xx = x @ x
            assert abs(wx + ax - xx) < 1e-9 * xx
            assert abs(wx - np.linalg.norm(x - s.avg.apply(x)) ** 2) < 1e-9 * xx

    def test_uniform_single_filter(self, rand15):
        spec = np.full((1, 15), 0.3 + 0j)
        out = normalize_to_extremal(FilterBank(spec), rand15.avg, rand15.fourier).spectra[0]
        off = [i for i in range(15) if i != rand15.fourier.const_col]
        assert np.allclose(np.abs(out[off]) ** 2, 1.0, atol=1e-14)
        assert out[rand15.fourier.const_col] == 0

    def test_dead_frequency(self, rand15):
        spec = np.ones((2, 15), complex)
        spec[:, 3] = 0
        spec[:, rand15.fourier.conj_of[3]] = 0
        with pytest.raises(NormalizationError, match="3"):
            normalize_to_extremal(FilterBank(spec), rand15.avg, rand15.fourier)
