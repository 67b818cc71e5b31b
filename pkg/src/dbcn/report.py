"""Text summaries and matplotlib figures for transfer statistics."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Sequence

from .sim import TransferStats

FIGSIZE = (6.4, 3.6)
STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _by_variant(stats: Sequence[TransferStats]) -> dict[str, list[TransferStats]]:
    groups: dict[str, list[TransferStats]] = defaultdict(list)
    for s in stats:
        groups[s.variant].append(s)
    return dict(sorted(groups.items()))


def summary_table(stats: Sequence[TransferStats]) -> str:
    header = f"{'variant':<8}{'version':>8}{'objects':>9}{'hits':>8}{'bytes_on_wire':>15}{'full_size':>12}{'savings':>9}"
    lines = [header, "-" * len(header)]
    for s in stats:
        lines.append(
            f"{s.variant:<8}{s.version:>8}{s.objects_transferred:>9}{s.cache_hits:>8}"
            f"{s.bytes_on_wire:>15}{s.full_size:>12}{s.savings_ratio:>9.4f}"
        )
    return "\n".join(lines)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_transfer(stats: Sequence[TransferStats], path: str | Path) -> Path:
    """Bytes on wire per version, one line per variant, against full size."""
    plt = _pyplot()
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, (ax_bytes, ax_save) = plt.subplots(1, 2, figsize=(FIGSIZE[0] * 1.6, FIGSIZE[1]))
        full_drawn = False
        for variant, rows in _by_variant(stats).items():
            xs = [r.version for r in rows]
            ax_bytes.plot(xs, [max(r.bytes_on_wire, 1) for r in rows], marker="o", ms=3,
                          label=variant)
            ax_save.plot(xs, [r.savings_ratio for r in rows], marker="o", ms=3, label=variant)
            if not full_drawn:
                ax_bytes.plot(xs, [max(r.full_size, 1) for r in rows], ls="--", color="0.5",
                              label="full size")
                full_drawn = True
        ax_bytes.set_yscale("log")
        ax_bytes.set_xlabel("version")
        ax_bytes.set_ylabel("bytes on wire")
        ax_save.set_xlabel("version")
        ax_save.set_ylabel("savings ratio")
        ax_save.axhline(0.0, color="0.7", lw=0.8)
        # one shared legend under both panels, where it cannot cover a line
        pairs = sorted(zip(*ax_bytes.get_legend_handles_labels()),
                       key=lambda hl: hl[1] == "full size")
        handles, labels = [h for h, _ in pairs], [lab for _, lab in pairs]
        fig.legend(handles, labels, loc="lower center", ncol=len(labels), frameon=False)
        fig.tight_layout(rect=(0, 0.08, 1, 1))
        fig.savefig(path, dpi=120, metadata={"Software": None})
        plt.close(fig)
    return path
