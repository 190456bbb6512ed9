import json

import numpy as np
import pytest

from conftest import Setup
from igt.datasets import Dataset, gen_torus_textures, torus_graph
from igt.io import FormatError, save_tensor
from igt.persist import (load_dataset, load_fourier, load_model, save_dataset, save_fourier,
                         save_model)
from igt.training import TrainConfig, greedy_train
from igt.transform import igt_transform


@pytest.fixture(scope="module")
def grid_model():
    s = Setup(torus_graph(5, 5), "grid", 1)
    data = gen_torus_textures(5, 5, 64, 0)
    return greedy_train(data.signals, s.fourier, s.avg, TrainConfig([3, 2], 16, epochs=1)), data


def test_fourier_roundtrip(tmp_path, rand15):
    save_fourier(tmp_path, rand15.fourier, {"graph": "x"})
    f, info = load_fourier(tmp_path)
    assert info == {"graph": "x"}
    assert np.array_equal(f.columns, rand15.fourier.columns)
    assert np.array_equal(f.conj_of, rand15.fourier.conj_of)
    assert f.pairs == rand15.fourier.pairs and f.const_col == rand15.fourier.const_col
    assert np.array_equal(f.frequencies, rand15.fourier.frequencies)


def test_model_roundtrip(tmp_path, grid_model):
    model, data = grid_model
    save_model(tmp_path, model)
    back, _ = load_model(tmp_path)
    assert back.order == 2 and back.averaging.kind == "grid" and back.averaging.J == 1
    assert back.fourier.grid_shape == (5, 5)
    for a, b in zip(model.banks, back.banks):
        assert np.array_equal(a.spectra, b.spectra) and a.tightness_eps == b.tightness_eps
    assert back.meta == model.meta
    assert np.array_equal(igt_transform(model, data.signals).features,
                          igt_transform(back, data.signals).features)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["filters_per_layer"] == [3, 2]


def test_model_errors(tmp_path, grid_model):
    model, _ = grid_model
    with pytest.raises(FormatError, match="manifest"):
        load_model(tmp_path)
    save_model(tmp_path, model)
    save_tensor(tmp_path / "bank_2.igtm", np.zeros((5, 25), complex))
    with pytest.raises(FormatError, match="bank_2"):
        load_model(tmp_path)
    man = json.loads((tmp_path / "manifest.json").read_text())
    man["format"] = "other"
    (tmp_path / "manifest.json").write_text(json.dumps(man))
    with pytest.raises(FormatError, match="unsupported"):
        load_model(tmp_path)
    del man["order"]
    man["format"] = "igt-model/1"
    (tmp_path / "manifest.json").write_text(json.dumps(man))
    with pytest.raises(FormatError, match="order"):
        load_model(tmp_path)


def test_dataset_roundtrip(tmp_path):
    d = Dataset(np.random.default_rng(0).standard_normal((4, 2, 5)), np.array([0, 1, 1, 0]),
                {"kind": "x", "q": 0.1})
    save_dataset(tmp_path, d)
    back = load_dataset(tmp_path)
    assert np.array_equal(back.signals, d.signals) and np.array_equal(back.labels, d.labels)
    assert back.params == d.params


def test_dataset_label_mismatch(tmp_path):
    save_dataset(tmp_path, Dataset(np.zeros((3, 1, 5)), np.zeros(3, np.int64), {}))
    meta = json.loads((tmp_path / "meta.json").read_text())
    meta["labels"] = [0]
    (tmp_path / "meta.json").write_text(json.dumps(meta))
    with pytest.raises(FormatError, match="labels"):
        load_dataset(tmp_path)
