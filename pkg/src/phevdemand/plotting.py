"""Matplotlib rendering of daily profiles."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .profile import GridMismatchError  # noqa: E402

# fixed SVG ids so repeated runs produce identical files
matplotlib.rcParams["svg.hashsalt"] = "phevdemand"


def _check(profiles):
    if not profiles:
        raise ValueError("no profiles to plot")
    first = profiles[0]
    for p in profiles[1:]:
        if not first.same_grid(p):
            raise GridMismatchError("profiles to overlay must share one grid")


def render_profiles(profiles, path, labels=None, title=None, band=True):
    """Overlay ``profiles`` and save to ``path``; format follows the extension.

    Line ``i`` is written with gid ``profile-i``. Monte Carlo profiles get a
    +-2 standard error band when ``band`` is set.
    """
    profiles = list(profiles)
    _check(profiles)
    labels = list(labels) if labels else [f"profile {i}" for i in range(len(profiles))]

    fig, ax = plt.subplots(figsize=(8, 4.5))
    try:
        for i, (p, label) in enumerate(zip(profiles, labels)):
            (line,) = ax.plot(p.centers, p.values, label=label, lw=1.4)
            line.set_gid(f"profile-{i}")
            if band and p.stderr is not None:
                ax.fill_between(p.centers, p.values - 2 * p.stderr, p.values + 2 * p.stderr,
                                color=line.get_color(), alpha=0.2, lw=0)
        ax.set_xlim(0, 24)
        ax.set_xticks(range(0, 25, 3))
        ax.set_xlabel("time of day (hours)")
        ax.set_ylabel("expected power (kW)")
        ax.grid(alpha=0.3)
        if title:
            ax.set_title(title)
        ax.legend(loc="upper left", frameon=False)
        fig.tight_layout()
        fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
    finally:
        plt.close(fig)
    return path


def emit_svg(profiles, path, labels=None, title=None):
    """Standalone SVG overlay, one polyline per profile plus a legend."""
    return render_profiles(profiles, path, labels=labels, title=title)
