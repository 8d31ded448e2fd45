"""Figure rendering for the CLI.  matplotlib is imported lazily, Agg backend."""

from __future__ import annotations

import os


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_scan(rows: list[dict], m: float, b: float, seams: dict, path: str, log: bool = False) -> str:
    """kappa against v, coloured by branch, with the seam positions marked."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    branches = sorted({r["branch"] for r in rows})
    for name in branches:
        pts = [(r["v"], r["kappa"]) for r in rows if r["branch"] == name]
        ax.plot(*zip(*pts), ".", ms=3, label=name)
    lo, hi = rows[0]["v"], rows[-1]["v"]
    for k, (label, s) in enumerate(seams.items()):
        if s is not None and lo <= s <= hi:
            ax.axvline(s, color=f"C{k + 3}", lw=0.8, ls="--", label=f"v = {label}")
    if log:
        ax.set_xscale("log")
    ax.set_xlabel("v")
    ax.set_ylabel("kappa")
    ax.set_title(f"m = {m:g}, b = {b:g}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_suite(record: dict, directory: str) -> list[str]:
    """Search margins and kink gaps from a suite record; returns the written paths."""
    plt = _pyplot()
    os.makedirs(directory, exist_ok=True)
    written = []

    search = record.get("search") or []
    if search:
        fig, ax = plt.subplots(figsize=(7.0, 3.8))
        rel = [r["margin"] / r["formula_value"] for r in search]
        labels = [f"{r['m']:g}/{r['b']:g}/{r['v']:.3g}" for r in search]
        ax.bar(range(len(rel)), rel, color=["C0" if x >= 0 else "C3" for x in rel])
        ax.axhline(-1e-6, color="C3", lw=0.8, ls="--", label="soundness limit")
        ax.set_yscale("symlog", linthresh=1e-10)
        ax.set_xticks(range(len(rel)), labels, rotation=70, fontsize=6)
        ax.set_ylabel("(best bound - formula) / formula")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = os.path.join(directory, "search_margins.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    kinks = record.get("kinks") or []
    if kinks:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        gap = [abs(k["left_slope"] - k["right_slope"]) for k in kinks]
        noise = [k["left_err"] + k["right_err"] for k in kinks]
        sc = ax.scatter(noise, gap, c=[k["m"] for k in kinks], s=12, cmap="viridis")
        lo = min(noise)
        hi = max(max(gap), 10 * max(noise))
        ax.plot([lo, hi / 10], [10 * lo, hi], color="C3", lw=0.8, ls="--", label="gap = 10 x noise")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("finite-difference error estimate")
        ax.set_ylabel("slope jump at v0")
        fig.colorbar(sc, label="m")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = os.path.join(directory, "kink_gaps.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written

