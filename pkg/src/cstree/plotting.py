"""Static figures written to files (Agg backend, nothing interactive)."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .euclid import GeometricTree  # noqa: E402


def plot_bench(records: list[dict], out: str | Path) -> Path:
    """Fill time against terminal count on a log axis, one series per n, with the fitted line."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    by_n: dict[int, list[dict]] = {}
    fits = {r["n"]: r for r in records if r.get("fit")}
    for r in records:
        if not r.get("fit"):
            by_n.setdefault(r["n"], []).append(r)
    for n, rows in sorted(by_n.items()):
        ks = [r["terminals"] for r in rows]
        ts = [r["fill_s"] for r in rows]
        (line,) = ax.semilogy(ks, ts, "o", label=f"n={n}")
        if n in fits:
            f = fits[n]
            ax.semilogy(ks, [math.exp(f["intercept"] + f["log_slope"] * k) for k in ks], "-",
                        color=line.get_color(), label=f"fit base {f['base']:.2f}")
    ax.set_xlabel("|T|")
    ax.set_ylabel("fill time (s)")
    ax.legend()
    fig.tight_layout()
    out = Path(out)
    fig.savefig(out)
    plt.close(fig)
    return out


def draw_tree(tree: GeometricTree, out: str | Path, title: str | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    for a, b in tree.edges:
        p, q = tree.points[a], tree.points[b]
        ax.plot([p[0], q[0]], [p[1], q[1]], "k-", lw=1.2)
    xs = [p[0] for p in tree.points]
    ys = [p[1] for p in tree.points]
    k = tree.n_terminals
    ax.plot(xs[:k], ys[:k], "o", color="tab:blue", label="terminal")
    if len(xs) > k:
        ax.plot(xs[k:], ys[k:], "s", color="tab:red", ms=4, label="Steiner point")
    ax.set_aspect("equal")
    ax.set_title(title or f"length {tree.length:.6f}")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    out = Path(out)
    fig.savefig(out)
    plt.close(fig)
    return out
