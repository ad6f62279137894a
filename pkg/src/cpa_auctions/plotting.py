"""Optional PNG rendering for ``repro --plot``.

matplotlib is imported lazily so the library and the rest of the CLI run
without it.
"""

from __future__ import annotations

from collections import defaultdict

from .errors import ConfigError


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise ConfigError("--plot needs matplotlib (pip install 'artifact[plot]')",
                          key="plot") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _groups(rows, key):
    out = defaultdict(list)
    for row in rows:
        out[row[key]].append(row)
    return out


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    return path


def plot_reserve(grid_rows, target_cpa, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    hi = 0.0
    for r, rows in sorted(_groups(grid_rows, "reserve").items()):
        pay = [row["payment"] for row in rows]
        ax.plot(pay, [row["value"] for row in rows], marker=".", label=f"r={r:g}")
        hi = max(hi, max(pay))
    ax.plot([0, hi], [0, hi / target_cpa], "k--", lw=1, label="value = payment / T")
    ax.set_xlabel("payment per buyer")
    ax.set_ylabel("value per buyer")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_rates(rows, path):
    plt = _pyplot()
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    for ax, (a, grp) in zip(axes, sorted(_groups(rows, "a").items())):
        alpha = [row["alpha"] for row in grp]
        ax.plot(alpha, [row["R"] for row in grp], label="R")
        ax.plot(alpha, [row["C"] for row in grp], label="C")
        ax.set_title(f"a={a:g}")
        ax.set_xlabel("alpha")
        ax.legend()
    return _save(fig, path)


def plot_trajectories(rows, path):
    plt = _pyplot()
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5), sharey=True)
    for ax, (ctrl, grp) in zip(axes, sorted(_groups(rows, "controller").items())):
        for _, path_rows in sorted(_groups(grp, "path").items()):
            ax.plot([r["t"] for r in path_rows], [r["empirical_cpa"] for r in path_rows], lw=0.8)
        ax.set_title(ctrl)
        ax.set_xlabel("t")
    axes[0].set_ylabel("empirical CPA")
    return _save(fig, path)


def plot_gamma(rows, path):
    plt = _pyplot()
    fams = _groups(rows, "family")
    fig, axes = plt.subplots(1, len(fams), figsize=(4 * len(fams), 3.5), squeeze=False)
    for ax, (fam, grp) in zip(axes[0], sorted(fams.items())):
        for n, n_rows in sorted(_groups(grp, "n").items()):
            n_rows = sorted(n_rows, key=lambda r: r["param_value"])
            ax.plot([r["param_value"] for r in n_rows], [r["gamma"] for r in n_rows], marker=".",
                    label=f"n={n}")
        ax.set_title(fam)
        ax.set_xlabel("parameter")
        ax.set_ylabel("gamma")
        ax.legend(fontsize=7)
    return _save(fig, path)
