"""Matplotlib rendering of convergence figures, byte-stable for fixed data."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

# fixed hash salt keeps the generated SVG element ids reproducible
_RC = {"svg.hashsalt": "liftlap"}


def report_series(reports):
    """(label, r, error) triples for a list of ConvergenceReports."""
    out = []
    for rep in reports:
        out.append(
            (
                rep.operator.value,
                [lv.r for lv in rep.levels],
                [lv.max_interior_error for lv in rep.levels],
            )
        )
    return out


def save_convergence_svg(path, series, title=None):
    """Log-log error plot, one polyline per series, written as SVG.

    Renders without timestamps or random ids, so identical inputs produce
    identical bytes.
    """
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.0, 4.5))
        for label, r, err in series:
            ax.loglog(r, err, "o-", label=label)
        ax.set_xlabel("mesh size r")
        ax.set_ylabel("max interior error")
        ax.grid(True, which="both", linestyle=":", linewidth=0.5)
        ax.legend(loc="best")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
