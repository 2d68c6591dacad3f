"""Figure rendering for the CLI report paths.

Every helper takes already-computed data plus a destination path, writes a
PNG with the Agg backend (no display required), and returns the path.  The
CSV report stays the primary artifact; these are the pictures next to it.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .measures import level_stats, survival_inverse  # noqa: E402


def _finish(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def save_level_curves(pd, path, n_points: int = 200) -> Path:
    """Tail probabilities, clipped mean, and survival across ratio levels."""
    sup = pd.sup_ratio
    hi = 1.1 * sup if np.isfinite(sup) else 1.5 * survival_inverse(pd, 0.01)
    grid = np.linspace(0.0, hi, n_points)
    stats = [level_stats(pd, float(h)) for h in grid]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    ax1.plot(grid, [s.tail_p for s in stats], label="tail under proposal")
    ax1.plot(grid, [s.tail_q for s in stats], label="tail under target")
    ax1.set_xlabel("ratio level")
    ax1.set_ylabel("tail probability")
    ax1.legend(frameon=False)
    ax2.plot(grid, [s.clipped_mean for s in stats], label="clipped mean")
    ax2.plot(grid, [s.survival for s in stats], label="survival")
    ax2.set_xlabel("ratio level")
    ax2.legend(frameon=False)
    fig.suptitle("Level-set summary")
    return _finish(fig, path)


def save_truncation_bars(tt, path) -> Path:
    """Proposal, target, and truncated-target masses side by side."""
    m = tt.base.alphabet_size
    x = np.arange(m)
    width = 0.28
    fig, ax = plt.subplots(figsize=(max(4.0, 0.5 * m), 3.2))
    ax.bar(x - width, tt.base.p, width, label="proposal")
    ax.bar(x, tt.base.q, width, label="target")
    ax.bar(x + width, tt.masses, width, label="truncated target")
    ax.set_xlabel("symbol")
    ax.set_ylabel("mass")
    ax.set_title(f"Truncation at cap {tt.cap:g} "
                 f"(TV to target {tt.tv_to_target:.4g})")
    ax.legend(frameon=False)
    return _finish(fig, path)


def save_law_comparison(masses, reference, path, *, title="Empirical law") -> Path:
    """Empirical masses against the reference law they should follow."""
    masses = np.asarray(masses, dtype=float)
    reference = np.asarray(reference, dtype=float)
    x = np.arange(masses.size)
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(4.0, 0.5 * masses.size), 3.2))
    ax.bar(x - width / 2, masses, width, label="empirical")
    ax.bar(x + width / 2, reference, width, label="reference")
    ax.set_xlabel("symbol")
    ax.set_ylabel("mass")
    ax.set_title(title)
    ax.legend(frameon=False)
    return _finish(fig, path)


def save_index_histogram(indices, path) -> Path:
    """Distribution of log2 of the selected indices."""
    logs = np.log2(np.asarray(indices, dtype=float))
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.hist(logs, bins=min(40, max(5, int(logs.max()) + 1)), density=True)
    ax.axvline(logs.mean(), color="k", linestyle="--",
               label=f"mean {logs.mean():.3f} bits")
    ax.set_xlabel("log2 of selected index")
    ax.set_ylabel("density")
    ax.set_title("Selected-index sizes")
    ax.legend(frameon=False)
    return _finish(fig, path)


def save_complexity_curves(gen, eps, gamma, path, *,
                           d_lo=0.05, d_hi=3.0, n_points=120) -> Path:
    """Improved vs classic proposal-count bounds across divergence values."""
    from .bounds import classic_rejection_complexity, improved_rejection_complexity

    grid = np.linspace(d_lo, d_hi, n_points)
    classic = [classic_rejection_complexity(d, gen, eps).value for d in grid]
    improved = [improved_rejection_complexity(d, gen, eps, gamma).value
                for d in grid]
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.semilogy(grid, classic, label="classic bound")
    ax.semilogy(grid, improved, label="improved bound")
    ax.set_xlabel(f"{gen.name} divergence (bits)")
    ax.set_ylabel("proposal-count bound")
    ax.set_title(f"Rejection complexity, eps={eps:g}, gamma={gamma:g}")
    ax.legend(frameon=False)
    return _finish(fig, path)


def save_codelength_scatter(indices, ideal_bits, code_bits, path) -> Path:
    """Ideal power-law codelength vs actual self-delimiting length per index."""
    indices = np.asarray(indices, dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.scatter(indices, ideal_bits, s=8, alpha=0.5, label="ideal length")
    ax.scatter(indices, code_bits, s=8, alpha=0.5, marker="x",
               label="self-delimiting length")
    ax.set_xscale("log")
    ax.set_xlabel("index")
    ax.set_ylabel("bits")
    ax.set_title("Index codelengths")
    ax.legend(frameon=False)
    return _finish(fig, path)


def save_suite_margins(rows, path) -> Path:
    """Statistic-vs-bound margin for every acceptance-suite row."""
    ids = [r.test_id for r in rows]
    margins = np.array([r.bound - r.statistic for r in rows])
    colors = ["tab:green" if r.passed else "tab:red" for r in rows]
    fig, ax = plt.subplots(figsize=(7.0, 0.32 * len(rows) + 1.2))
    y = np.arange(len(rows))
    ax.barh(y, np.sign(margins) * np.log10(1.0 + np.abs(margins) * 1e6),
            color=colors)
    ax.set_yticks(y)
    ax.set_yticklabels(ids, fontsize=7)
    ax.invert_yaxis()
    ax.axvline(0.0, color="k", linewidth=0.8)
    ax.set_xlabel("signed log margin (bound - statistic, scaled)")
    ax.set_title("Acceptance suite margins")
    return _finish(fig, path)
