"""Static figures written next to the CSV exports (Agg backend, PNG)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {"font.size": 8, "axes.titlesize": 8, "figure.dpi": 120}
# no timestamps or version strings, so reruns give identical bytes
_PNG_META = {"Software": None}


def _save(fig, path) -> None:
    fig.savefig(path, metadata=_PNG_META, bbox_inches="tight")
    plt.close(fig)


def _grid(count: int) -> tuple[int, int]:
    cols = int(np.ceil(np.sqrt(count)))
    return int(np.ceil(count / cols)), cols


def plot_filter_moduli(moduli, path, freqs=None, grid_shape=None, title="") -> None:
    """One panel per filter.

    With ``freqs`` and ``grid_shape`` each panel is the modulus laid out on
    the centered 2D frequency plane; otherwise a curve over column index.
    """
    moduli = np.asarray(moduli)
    K = moduli.shape[0]
    with plt.rc_context(_STYLE):
        if freqs is not None and grid_shape is not None:
            h, w = grid_shape
            rows, cols = _grid(K)
            fig, axes = plt.subplots(rows, cols, figsize=(1.6 * cols, 1.6 * rows), squeeze=False)
            vmax = float(moduli.max()) or 1.0
            for k, ax in enumerate(axes.flat):
                ax.set_axis_off()
                if k >= K:
                    continue
                img = np.zeros((h, w))
                for (kx, ky), m in zip(freqs, moduli[k]):
                    img[kx + h // 2, ky + w // 2] = m
                ax.imshow(img, cmap="magma", vmin=0.0, vmax=vmax, origin="lower",
                          extent=(-w // 2 - 0.5, w - w // 2 - 0.5, -h // 2 - 0.5, h - h // 2 - 0.5))
                ax.set_title(f"filter {k}")
        else:
            fig, ax = plt.subplots(figsize=(6, 3))
            for k in range(K):
                ax.plot(moduli[k], lw=0.8, label=f"{k}" if K <= 10 else None)
            ax.set_xlabel("column, ascending frequency")
            ax.set_ylabel("modulus")
            if K <= 10:
                ax.legend(ncol=min(K, 5), frameon=False)
        if title:
            fig.suptitle(title)
        _save(fig, path)


def plot_energy(fractions, residual, path, selected_order=None) -> None:
    fr = np.asarray(fractions, dtype=float)
    orders = np.arange(len(fr))
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4, 3))
        ax.bar(orders, fr, color="0.55", label="per order")
        ax.plot(orders, np.cumsum(fr), "o-", color="k", label="cumulative")
        ax.bar([len(fr)], [residual], color="0.85", label="residual")
        ax.axhline(0.99, ls=":", color="0.3", lw=0.8)
        if selected_order is not None:
            ax.axvline(selected_order, ls="--", color="tab:red", lw=0.8)
        ax.set_xticks(list(orders) + [len(fr)], [str(o) for o in orders] + ["res"])
        ax.set_xlabel("order")
        ax.set_ylabel("energy fraction")
        ax.set_ylim(0, 1.05)
        ax.legend(frameon=False)
        _save(fig, path)


def plot_accuracy_curve(rows, path) -> None:
    """``rows``: dicts with ``q`` plus accuracy columns, one line per column."""
    rows = sorted(rows, key=lambda r: r["q"])
    q = [r["q"] for r in rows]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4, 3))
        for key, style in (("accuracy_test", "o-"), ("baseline_raw", "s--"),
                           ("unaveraged", "^:")):
            vals = [r.get(key) for r in rows]
            if all(v is not None for v in vals):
                ax.plot(q, vals, style, label=key)
        ax.set_xlabel("edge failure probability")
        ax.set_ylabel("test accuracy")
        ax.legend(frameon=False)
        _save(fig, path)
