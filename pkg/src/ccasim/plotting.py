"""File-output figure renderers for the CLI scenarios.

Import cost is deferred: matplotlib is only pulled in when a plot is
actually rendered, and the Agg backend keeps everything headless.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

_DPI = 150


def _ax(figsize=(6.0, 4.0)):
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=figsize)
    return fig, ax


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    import matplotlib.pyplot as plt

    plt.close(fig)
    return path


def plot_band(m, omega, kappa, path) -> Path:
    fig, ax = _ax()
    ax.plot(m, omega, "o-", ms=4)
    ax.set_xlabel("mode index m")
    ax.set_ylabel("frequency (GHz)")
    ax2 = ax.twinx()
    ax2.plot(m, 1e3 * np.asarray(kappa), "s--", ms=3, color="tab:red", alpha=0.7)
    ax2.set_ylabel("linewidth (MHz)", color="tab:red")
    return _save(fig, path)


def plot_transmission(omega, s21, path, extra: dict | None = None) -> Path:
    fig, ax = _ax((7.0, 4.0))
    ax.plot(omega, np.abs(s21), lw=0.9, label="|S21|")
    for label, trace in (extra or {}).items():
        ax.plot(omega, np.abs(trace), lw=0.9, alpha=0.8, label=label)
    ax.set_xlabel("frequency (GHz)")
    ax.set_ylabel("|S21|")
    ax.set_yscale("log")
    ax.legend(loc="best", fontsize=8)
    return _save(fig, path)


def plot_cloud(sites, cloud, x_q, path) -> Path:
    fig, ax = _ax()
    ax.bar(sites, cloud, width=0.8)
    ax.axvline(x_q, color="k", ls=":", lw=1)
    ax.set_xlabel("site")
    ax.set_ylabel("photonic amplitude")
    return _save(fig, path)


def plot_splitting(omega_bar, U, path) -> Path:
    fig, ax = _ax()
    ax.plot(omega_bar, 1e3 * np.asarray(U), "o-", ms=3)
    ax.set_xlabel("mean bound-state frequency (GHz)")
    ax.set_ylabel("U (MHz)")
    return _save(fig, path)


def plot_anharmonicity(omega_1ex, beta_dress, path, reference=None) -> Path:
    fig, ax = _ax()
    ax.plot(omega_1ex, 1e3 * np.asarray(beta_dress), "o-", ms=3, label="transmon")
    if reference is not None:
        ax.plot(omega_1ex, 1e3 * np.asarray(reference), "--", label="two-level limit")
        ax.legend(fontsize=8)
    ax.set_xlabel("bound-state frequency (GHz)")
    ax.set_ylabel("dressed anharmonicity (MHz)")
    return _save(fig, path)


def plot_zz(omega_q1, zeta, path) -> Path:
    fig, ax = _ax()
    ax.plot(omega_q1, 1e3 * np.asarray(zeta), "o-", ms=3)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("qubit-1 bare frequency (GHz)")
    ax.set_ylabel("zeta (MHz)")
    return _save(fig, path)


def plot_levels(x, levels, path, xlabel="parameter") -> Path:
    fig, ax = _ax()
    levels = np.asarray(levels)
    for j in range(levels.shape[1]):
        ax.plot(x, levels[:, j], lw=0.7, color="tab:blue")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("energy (GHz)")
    return _save(fig, path)


def plot_level_diagram(energies, classification, path) -> Path:
    fig, ax = _ax((5.0, 5.0))
    energies = np.asarray(energies)
    colors = {"band": "tab:gray", "sideband": "tab:orange", "discrete": "tab:red"}
    for cls, color in colors.items():
        mask = np.asarray(classification) == cls
        ax.plot(np.where(mask)[0], energies[mask], ".", ms=4, color=color, label=cls)
    ax.set_xlabel("level index")
    ax.set_ylabel("energy (GHz)")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_chevron(targets, taus, P, path, label="P") -> Path:
    fig, ax = _ax((6.5, 4.5))
    mesh = ax.pcolormesh(taus, targets, P, shading="auto", vmin=0.0, vmax=1.0)
    fig.colorbar(mesh, ax=ax, label=label)
    ax.set_xlabel("hold time (ns)")
    ax.set_ylabel("flux target (GHz)")
    return _save(fig, path)


def plot_populations(t, P_q, path, released=None) -> Path:
    fig, ax = _ax((7.0, 4.0))
    for i, row in enumerate(np.atleast_2d(P_q)):
        ax.plot(t, row, label=f"P{i + 1}")
    if released is not None:
        ax.plot(t, released, "--", color="gray", label="released")
    ax.set_xlabel("time (ns)")
    ax.set_ylabel("population")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_histogram(values, path, xlabel="value") -> Path:
    fig, ax = _ax()
    ax.hist(np.asarray(values), bins=40)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("count")
    return _save(fig, path)


def plot_kerr_traces(traces, path, fits=None) -> Path:
    """traces: list of (label, omega, |S21|); fits: matching model curves."""
    fig, ax = _ax((7.0, 4.0))
    for i, (label, w, m) in enumerate(traces):
        ax.plot(w, m, ".", ms=3, label=str(label))
        if fits is not None:
            ax.plot(fits[i][0], fits[i][1], "-", lw=1, color="k", alpha=0.7)
    ax.set_xlabel("frequency (GHz)")
    ax.set_ylabel("|S21|")
    ax.legend(fontsize=7)
    return _save(fig, path)
