"""On-disk layout for Fourier operators, models and datasets.

Every artifact is a directory of IGTM tensors plus a JSON sidecar::

    fourier/   fourier.igtm  fourier.json
    model/     manifest.json  fourier.igtm  fourier.json  bank_1.igtm ...
    dataset/   signals.igtm  meta.json
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .datasets import Dataset
from .fourier import SpectralFourier
from .io import FormatError, dump_json, load_json, load_tensor, save_tensor
from .transform import FilterBank, IGTModel, make_averaging

MODEL_FORMAT = "igt-model/1"
FOURIER_FORMAT = "igt-fourier/1"
DATASET_FORMAT = "igt-dataset/1"


def _require(d: dict, keys, what: str):
    missing = [k for k in keys if k not in d]
    if missing:
        raise FormatError(f"{what} is missing keys {missing}")


def save_fourier(path, fourier: SpectralFourier, info: dict | None = None) -> None:
    """Write ``fourier.igtm`` and its index-map sidecar into ``path``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    save_tensor(path / "fourier.igtm", fourier.columns)
    sidecar = {
        "format": FOURIER_FORMAT,
        "n": fourier.n,
        "analytic_indices": [int(i) for i in fourier.analytic_indices],
        "conj_of": [int(i) for i in fourier.conj_of],
        "const_col": int(fourier.const_col),
        "pairs": [list(p) for p in fourier.pairs],
        "frequencies": [float(f) for f in fourier.frequencies],
        "grid_shape": None if fourier.grid_shape is None else list(fourier.grid_shape),
        "info": info or {},
    }
    dump_json(path / "fourier.json", sidecar)


def load_fourier(path) -> tuple[SpectralFourier, dict]:
    path = Path(path)
    side = load_json(path / "fourier.json")
    _require(side, ["format", "n", "analytic_indices", "conj_of", "const_col", "pairs",
                    "frequencies"], "fourier sidecar")
    if side["format"] != FOURIER_FORMAT:
        raise FormatError(f"unsupported fourier format {side['format']!r}")
    cols = load_tensor(path / "fourier.igtm")
    n = side["n"]
    if cols.shape != (n, n) or not np.iscomplexobj(cols):
        raise FormatError(f"fourier tensor has shape {cols.shape}, expected complex {n}x{n}")
    grid = side.get("grid_shape")
    sf = SpectralFourier(cols, np.asarray(side["analytic_indices"], dtype=np.int64),
                         np.asarray(side["conj_of"], dtype=np.int64), int(side["const_col"]),
                         tuple(tuple(p) for p in side["pairs"]),
                         np.asarray(side["frequencies"], dtype=float),
                         None if grid is None else tuple(grid))
    return sf, side.get("info", {})


def save_model(path, model: IGTModel, info: dict | None = None) -> None:
    path = Path(path)
    save_fourier(path, model.fourier, info)
    for i, bank in enumerate(model.banks, start=1):
        save_tensor(path / f"bank_{i}.igtm", bank.spectra)
    avg = model.averaging
    manifest = {
        "format": MODEL_FORMAT,
        "n": model.n,
        "order": model.order,
        "filters_per_layer": [b.K for b in model.banks],
        "tightness_eps": [b.tightness_eps for b in model.banks],
        "averaging": {"kind": avg.kind, "J": avg.J},
        "meta": model.meta,
    }
    dump_json(path / "manifest.json", manifest)


def load_model(path) -> tuple[IGTModel, dict]:
    path = Path(path)
    if not (path / "manifest.json").exists():
        raise FormatError(f"{path} has no manifest.json")
    man = load_json(path / "manifest.json")
    _require(man, ["format", "n", "order", "filters_per_layer", "averaging"], "model manifest")
    if man["format"] != MODEL_FORMAT:
        raise FormatError(f"unsupported model format {man['format']!r}")
    fourier, info = load_fourier(path)
    if fourier.n != man["n"]:
        raise FormatError("manifest dimension disagrees with the Fourier operator")
    avg_spec = man["averaging"]
    avg = make_averaging(fourier, avg_spec["kind"], avg_spec.get("J") or 0)
    eps = man.get("tightness_eps") or [float("nan")] * man["order"]
    banks = []
    for i, K in enumerate(man["filters_per_layer"], start=1):
        spectra = load_tensor(path / f"bank_{i}.igtm")
        if spectra.shape != (K, fourier.n):
            raise FormatError(f"bank_{i} has shape {spectra.shape}, expected {(K, fourier.n)}")
        banks.append(FilterBank(spectra.astype(complex), i, float(eps[i - 1])))
    return IGTModel(fourier, avg, tuple(banks), man.get("meta", {})), info


def save_dataset(path, data: Dataset) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    save_tensor(path / "signals.igtm", data.signals)
    dump_json(path / "meta.json", {"format": DATASET_FORMAT,
                                   "labels": [int(v) for v in data.labels],
                                   "params": data.params})


def load_dataset(path) -> Dataset:
    path = Path(path)
    meta = load_json(path / "meta.json")
    _require(meta, ["format", "labels"], "dataset metadata")
    if meta["format"] != DATASET_FORMAT:
        raise FormatError(f"unsupported dataset format {meta['format']!r}")
    signals = load_tensor(path / "signals.igtm")
    if signals.ndim != 3 or np.iscomplexobj(signals):
        raise FormatError("signals must be a real samples x channels x nodes tensor")
    labels = np.asarray(meta["labels"], dtype=np.int64)
    if len(labels) != signals.shape[0]:
        raise FormatError(f"{len(labels)} labels for {signals.shape[0]} signals")
    return Dataset(signals, labels, meta.get("params", {}))
