"""Histogram figures of benchmark records, written as SVG."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

BINS = 30


def histogram(values_by_method: dict, path, xlabel: str, bins: int = BINS) -> None:
    """Overlaid per-method histograms over shared bins.

    numpy bins are right-open except the last, which is closed.
    """
    finite = {k: np.asarray(v, dtype=float) for k, v in values_by_method.items()}
    finite = {k: v[np.isfinite(v)] for k, v in finite.items()}
    pooled = np.concatenate([v for v in finite.values()] or [np.zeros(0)])
    edges = np.histogram_bin_edges(pooled if pooled.size else [0.0, 1.0], bins=bins)
    fig, ax = plt.subplots(figsize=(6, 4))
    for method, v in finite.items():
        ax.hist(v, bins=edges, histtype="step", label=method)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("count")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def benchmark_figures(records, out_dir) -> list:
    """``hist_error.svg`` and ``hist_time.svg`` in ``out_dir``; returns their paths."""
    err, tim = {}, {}
    for r in records:
        err.setdefault(r.method, []).append(r.error_e)
        tim.setdefault(r.method, []).append(r.time_seconds)
    paths = [f"{out_dir}/hist_error.svg", f"{out_dir}/hist_time.svg"]
    histogram(err, paths[0], "error e (log10 amplification)")
    histogram(tim, paths[1], "time (s)")
    return paths
