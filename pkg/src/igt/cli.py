"""Command-line interface: ``igt <subcommand> ...``.

Exit status is 0 on success, 1 on a domain error (one line on stderr) and 2
on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import datasets as ds
from .fourier import build_fourier, grid_frequencies
from .graph import format_edge_list, laplacian_eig, pad_to_odd, parse_edge_list, torus_shape
from .io import save_tensor
from .persist import (load_dataset, load_fourier, load_model, save_dataset, save_fourier,
                      save_model)
from .pipeline import evaluate_pipeline, match_nodes
from .svm import C_GRID
from .training import TrainConfig, greedy_train
from .transform import energy_profile, igt_transform, make_averaging

log = logging.getLogger("igt")

CONFIG_ALIASES = {"K": "filters_per_layer", "batch": "batch_size", "lr": "lr0",
                  "drops": "milestones", "decay": "lr_decay"}
MODEL_KEYS = ("averaging", "J")


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """17 significant digits: parses back to the same double."""
    return format(float(x), ".17g")


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        out.writerows(rows)


def _figure_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".png")


def _check_inputs(*paths) -> None:
    for p in paths:
        if p is not None and not Path(p).exists():
            raise FileNotFoundError(f"no such file or directory: {p}")


def _read_graph(path):
    return parse_edge_list(Path(path).read_text())


def _graph_from_args(a):
    if a.graph:
        return _read_graph(a.graph)
    if a.kind is None:
        raise UsageError("synth needs --graph or --kind")
    if a.kind == "cycle":
        return ds.cycle_graph(a.n)
    if a.kind == "torus":
        return ds.torus_graph(a.h, a.w)
    sizes = [int(s) for s in a.sizes.split(",")]
    return ds.sbm_graph(sizes, a.p_in, a.p_out, a.seed)


def _sbm_sizes(g):
    # recover community sizes from the generator's name tag
    if not g.name.startswith("sbm("):
        return None
    inside = g.name[g.name.index("sizes=[") + 7:]
    return [int(s) for s in inside[: inside.index("]")].split(",")]


def cmd_synth(a) -> int:
    _check_inputs(a.graph, a.idx_images, a.idx_labels)
    if a.seed is None:
        a.seed = 0
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    if a.dataset == "idx":
        if not (a.idx_images and a.idx_labels):
            raise UsageError("--dataset idx needs --idx-images and --idx-labels")
        images = ds.parse_idx(Path(a.idx_images).read_bytes(), expect="images")
        labels = ds.parse_idx(Path(a.idx_labels).read_bytes(), expect="labels")
        if len(images) != len(labels):
            raise ValueError(f"{len(images)} images but {len(labels)} labels")
        if a.limit:
            images, labels = images[a.offset:a.offset + a.limit], labels[a.offset:a.offset + a.limit]
        side = math.isqrt(images.shape[1])
        h, w = (a.h, a.w) if a.h and a.w else (side, side)
        if h * w != images.shape[1]:
            raise ValueError(f"images have {images.shape[1]} pixels, not {h}x{w}")
        g = ds.torus_graph(h, w)
        data = ds.Dataset(images[:, None, :], labels,
                          {"kind": "idx", "images": str(a.idx_images), "offset": a.offset,
                           "samples": len(labels)})
    else:
        g = _graph_from_args(a)
        data = None
        if a.dataset == "diffusion":
            data = ds.gen_diffusion_dataset(g, a.samples, a.T, a.q, a.seed, _community(g))
        elif a.dataset == "textures":
            shape = _torus_dims(g)
            data = ds.gen_torus_textures(*shape, a.samples, a.seed, a.classes)
    (out / "graph.txt").write_text(format_edge_list(g))
    if data is not None:
        save_dataset(out / "data", data)
    print(f"graph {g.name or '(unnamed)'}: {g.node_count} nodes, {len(g.edges)} edges"
          + (f"; {len(data)} samples" if data is not None else ""))
    return 0


def _community(g):
    sizes = _sbm_sizes(g)
    if sizes is None:
        raise ValueError("diffusion labels need an SBM graph (community sizes)")
    return ds.community_labels(sizes)


def _torus_dims(g):
    shape = torus_shape(g)
    if shape is None:
        raise ValueError("texture datasets need a torus graph")
    return shape


def _pair(g, greedy=False):
    padded, _ = pad_to_odd(g)
    eig = laplacian_eig(padded)
    pm, fourier = build_fourier(eig, greedy=greedy)
    info = {"graph": g.name, "real_nodes": g.node_count, "n": padded.node_count,
            "pairing_cost": pm.total_cost, "const_index": pm.const_index}
    return fourier, info


def cmd_pair(a) -> int:
    _check_inputs(a.graph)
    fourier, info = _pair(_read_graph(a.graph), a.greedy)
    save_fourier(a.out, fourier, info)
    print(f"n={fourier.n} pairs={len(fourier.pairs)} cost={fmt(info['pairing_cost'])}")
    return 0


def load_train_config(path, seed) -> tuple[TrainConfig, dict]:
    raw = {} if path is None else json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError("training config must be a JSON object")
    model_opts = {k: raw.pop(k) for k in MODEL_KEYS if k in raw}
    cfg = {CONFIG_ALIASES.get(k, k): v for k, v in raw.items()}
    if seed is not None:
        cfg["seed"] = seed
    return TrainConfig.from_dict(cfg), model_opts


def cmd_train(a) -> int:
    _check_inputs(a.fourier, a.graph, a.data, a.config)
    cfg, opts = load_train_config(a.config, a.seed)
    if a.fourier:
        fourier, info = load_fourier(a.fourier)
    elif a.graph:
        fourier, info = _pair(_read_graph(a.graph))
    else:
        raise UsageError("train needs --fourier or --graph")
    kind = a.averaging or opts.get("averaging", "graph")
    J = a.J if a.J is not None else opts.get("J", 3)
    avg = make_averaging(fourier, kind, J)
    data = load_dataset(a.data)
    x = match_nodes(data.signals, fourier.n)
    history = []
    t0 = time.perf_counter()
    model = greedy_train(x, fourier, avg, cfg, history)
    save_model(a.out, model, info)
    log_path = Path(a.log) if a.log else Path(a.out) / "train_log.jsonl"
    with open(log_path, "w") as fh:
        for rec in history:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    msg = f"trained order-{model.order} model, K={cfg.filters_per_layer}"
    if not a.deterministic:
        msg += f" in {time.perf_counter() - t0:.1f}s"
    print(msg)
    return 0


def cmd_transform(a) -> int:
    _check_inputs(a.model, a.data)
    model, _ = load_model(a.model)
    data = load_dataset(a.data)
    rep = igt_transform(model, match_nodes(data.signals, model.n), averaged=not a.no_average)
    save_tensor(a.out, rep.features)
    print(f"{rep.features.shape[0]} samples x {rep.features.shape[1]} features")
    return 0


def _parse_grid(text):
    if text is None:
        return C_GRID
    try:
        grid = tuple(float(c) for c in text.split(","))
    except ValueError:
        raise UsageError(f"bad --c-grid {text!r}") from None
    if not grid or any(not c > 0 for c in grid):
        raise UsageError("--c-grid values must be positive")
    return grid


def cmd_classify(a) -> int:
    grid = _parse_grid(a.c_grid)
    if len(a.train) != len(a.test):
        raise UsageError("--train and --test must be given the same number of times")
    _check_inputs(a.model, *a.train, *a.test)
    model, _ = load_model(a.model)
    seed = 0 if a.seed is None else a.seed
    reports = []
    for tr, te in zip(a.train, a.test):
        reports.append(evaluate_pipeline(model, load_dataset(tr), load_dataset(te),
                                         ablation=a.ablation, averaged=not a.no_average,
                                         c_grid=grid, folds=a.folds, seed=seed,
                                         timed=not a.deterministic))
    doc = reports[0] if len(reports) == 1 else {"runs": reports}
    Path(a.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    rows = [_table_row(r) for r in reports]
    if a.table:
        header = ["q", "accuracy_test", "accuracy_train", "baseline_raw", "unaveraged"]
        _write_csv(a.table, header,
                   [["" if r[k] is None else fmt(r[k]) for k in header] for r in rows])
        if a.figure:
            from .plotting import plot_accuracy_curve
            plot_accuracy_curve(rows, _figure_path(a.table))
    for r in rows:
        print(f"q={r['q']}: igt={r['accuracy_test']:.4f} raw={r['baseline_raw']:.4f}")
    return 0


def _table_row(rep) -> dict:
    q = rep["test_params"].get("q")
    other = rep.get("unaveraged")
    return {"q": float("nan") if q is None else q, "accuracy_test": rep["accuracy_test"],
            "accuracy_train": rep["accuracy_train"],
            "baseline_raw": rep["baseline_raw"]["accuracy_test"],
            "unaveraged": None if other is None else other["accuracy_test"]}


def spectra_table(fourier, spectra):
    """Header and rows: filter index, moduli by ascending frequency, (kx, ky) on tori."""
    order = np.lexsort((np.arange(fourier.n), fourier.frequencies))
    header = ["filter"] + [f"mod_c{c}" for c in order]
    freqs = None
    if fourier.grid_shape is not None:
        freqs = grid_frequencies(fourier)[order]
        for c in order:
            header += [f"kx_c{c}", f"ky_c{c}"]
    rows = []
    mods = np.abs(spectra)[:, order]
    for k in range(spectra.shape[0]):
        row = [str(k)] + [fmt(v) for v in mods[k]]
        if freqs is not None:
            row += [str(int(v)) for v in freqs.ravel()]
        rows.append(row)
    return header, rows, mods, freqs


def cmd_spectra(a) -> int:
    _check_inputs(a.model, a.fourier)
    if a.model:
        model, _ = load_model(a.model)
        if not 1 <= a.layer <= model.order:
            raise ValueError(f"layer {a.layer} out of range 1..{model.order}")
        fourier = model.fourier
        header, rows, mods, freqs = spectra_table(fourier, model.banks[a.layer - 1].spectra)
    elif a.fourier:
        fourier, _ = load_fourier(a.fourier)
        mods = np.abs(fourier.columns.T)
        header = ["column"] + [f"node_{m}" for m in range(fourier.n)]
        rows = [[str(i)] + [fmt(v) for v in mods[i]] for i in range(fourier.n)]
        freqs = None
    else:
        raise UsageError("spectra needs --model or --fourier")
    _write_csv(a.out, header, rows)
    if a.figure:
        from .plotting import plot_filter_moduli
        plot_filter_moduli(mods, _figure_path(a.out), freqs, fourier.grid_shape if a.model else None)
    print(f"wrote {len(rows)} rows to {a.out}")
    return 0


def cmd_energy(a) -> int:
    _check_inputs(a.model, a.data)
    model, _ = load_model(a.model)
    data = load_dataset(a.data)
    prof = energy_profile(model, match_nodes(data.signals, model.n))
    rows = [[str(k), fmt(f), fmt(c)] for k, (f, c) in enumerate(zip(prof.fractions,
                                                                    prof.cumulative))]
    rows.append(["residual", fmt(prof.residual), fmt(prof.cumulative[-1] + prof.residual)])
    _write_csv(a.out, ["order", "fraction", "cumulative"], rows)
    if a.figure:
        from .plotting import plot_energy
        plot_energy(prof.fractions, prof.residual, _figure_path(a.out), prof.selected_order)
    print(f"selected order {prof.selected_order}; cumulative "
          + " ".join(f"{c:.4f}" for c in prof.cumulative))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the seed")
    common.add_argument("--deterministic", action="store_true",
                        help="omit timings so reruns write identical bytes")
    common.add_argument("--threads", type=int, default=None,
                        help="BLAS thread cap (default: $IGT_THREADS or 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="igt", description="Interferometric graph transform")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    s = sub.add_parser("synth", parents=[common], help="write a graph and a dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--graph", help="existing edge list (instead of --kind)")
    s.add_argument("--kind", choices=["cycle", "torus", "sbm"])
    s.add_argument("--n", type=int, default=33)
    s.add_argument("--h", type=int, default=None)
    s.add_argument("--w", type=int, default=None)
    s.add_argument("--sizes", default="31,32")
    s.add_argument("--p-in", type=float, default=0.5)
    s.add_argument("--p-out", type=float, default=0.02)
    s.add_argument("--dataset", choices=["none", "diffusion", "textures", "idx"], default="none")
    s.add_argument("--samples", type=int, default=2000)
    s.add_argument("--T", type=int, default=4)
    s.add_argument("--q", type=float, default=0.0)
    s.add_argument("--classes", type=int, default=4)
    s.add_argument("--idx-images")
    s.add_argument("--idx-labels")
    s.add_argument("--offset", type=int, default=0)
    s.add_argument("--limit", type=int, default=0)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("pair", parents=[common], help="build the Fourier operator of a graph")
    s.add_argument("--graph", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--greedy", action="store_true", help="greedy matching (d > 1500 only)")
    s.set_defaults(func=cmd_pair)

    s = sub.add_parser("train", parents=[common], help="greedy layer-wise training")
    s.add_argument("--fourier")
    s.add_argument("--graph")
    s.add_argument("--data", required=True)
    s.add_argument("--config", help="TrainConfig JSON")
    s.add_argument("--averaging", choices=["graph", "grid"])
    s.add_argument("--J", type=int, default=None)
    s.add_argument("--out", required=True)
    s.add_argument("--log", help="JSON-lines training log (default: OUT/train_log.jsonl)")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("transform", parents=[common], help="export representations")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--no-average", action="store_true")
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("classify", parents=[common], help="linear SVM evaluation report")
    s.add_argument("--model", required=True)
    s.add_argument("--train", action="append", required=True)
    s.add_argument("--test", action="append", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--table", help="accuracy table CSV, one row per train/test pair")
    s.add_argument("--ablation", action="store_true", help="also report the other variant")
    s.add_argument("--no-average", action="store_true")
    s.add_argument("--c-grid", help="comma-separated C values")
    s.add_argument("--folds", type=int, default=3)
    s.add_argument("--figure", action="store_true", help="also render PNG next to the table")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("spectra", parents=[common], help="filter or Fourier moduli as CSV")
    s.add_argument("--model")
    s.add_argument("--fourier")
    s.add_argument("--layer", type=int, default=1)
    s.add_argument("--out", required=True)
    s.add_argument("--figure", action="store_true", help="also render PNG next to the CSV")
    s.set_defaults(func=cmd_spectra)

    s = sub.add_parser("energy", parents=[common], help="per-order energy table")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--figure", action="store_true", help="also render PNG next to the CSV")
    s.set_defaults(func=cmd_energy)
    return p


def _threads(a) -> int:
    if a.threads is not None:
        return a.threads
    env = os.environ.get("IGT_THREADS")
    try:
        return int(env) if env else 1
    except ValueError:
        raise UsageError(f"IGT_THREADS must be an integer, got {env!r}") from None


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:  # argparse reports usage errors with status 2
        return int(e.code or 0)
    logging.basicConfig(level=logging.DEBUG if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        threads = _threads(a)
        if threads < 1:
            raise UsageError("--threads must be at least 1")
        with threadpool_limits(limits=threads):
            return a.func(a)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"igt: error: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError) as e:
        msg = str(e).splitlines()[0] if str(e) else type(e).__name__
        print(f"igt: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
