"""Figure rendering for sweep reports.

Renders the two summary figures next to the delimited sweep output: the
witness curves versus field, and the combined decay-length /
indistinguishability / generation-rate panel.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def _split_rows(rows):
    good = [r for r in rows if r.error is None and r.witnesses is not None]
    return good


def render_witness_figure(rows, path) -> str:
    good = _split_rows(rows)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    b = [r.b_ext for r in good]
    for attr, color, label in (
        ("w1", "tab:blue", "$w_1$"),
        ("w2", "tab:orange", "$w_2$"),
        ("w3", "tab:green", "$w_3$"),
        ("w4", "tab:red", "$w_4$"),
    ):
        ax.plot(b, [getattr(r.witnesses, attr) for r in good], "o-",
                color=color, ms=3.5, lw=1.2, label=label)
    ax.axhline(0.0, color="0.7", lw=0.8)
    ax.set_xlabel("external field (T)")
    ax.set_ylabel("witness value")
    ax.set_ylim(-1.05, 1.05)
    ax.legend(frameon=False, ncol=4)
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)
    return str(path)


def render_overview_figure(rows, path) -> str:
    good = _split_rows(rows)
    b = [r.b_ext for r in good]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.0, 6.0), sharex=True)
    zeta = [r.zeta_le if math.isfinite(r.zeta_le) else float("nan") for r in good]
    ax1.plot(b, zeta, "D-", color="tab:red", ms=4, lw=1.2)
    ax1.set_ylabel("entanglement length (photons)", color="tab:red")
    ax1.tick_params(axis="y", labelcolor="tab:red")
    ax2.plot(b, [r.indistinguishability for r in good], "s-",
             color="tab:blue", ms=4, lw=1.2, label="indistinguishability")
    ax2.set_ylabel("indistinguishability", color="tab:blue")
    ax2.set_ylim(0.0, 1.0)
    ax2.tick_params(axis="y", labelcolor="tab:blue")
    ax3 = ax2.twinx()
    ax3.plot(b, [r.rate_ghz for r in good], "k^-", ms=4, lw=1.2, label="rate")
    ax3.set_ylabel("generation rate (GHz)")
    ax2.set_xlabel("external field (T)")
    fig.tight_layout()
    fig.savefig(path, dpi=160)
    plt.close(fig)
    return str(path)


def render_sweep_figures(rows, out_prefix) -> list[str]:
    """Render both sweep figures; returns the written paths."""
    prefix = str(out_prefix)
    return [
        render_overview_figure(rows, prefix + "_overview.png"),
        render_witness_figure(rows, prefix + "_witnesses.png"),
    ]
