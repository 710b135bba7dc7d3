"""File outputs for simulation runs and incentive sweeps.

Every report lands as delimited text (one record per line, tab-separated)
plus rendered figures alongside, so a run can be eyeballed and re-plotted
without re-running anything.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .incentives import Party, entry_threshold, sweep_expected_payoffs
from .protocol import TransactionParams
from .simulate import SimulationRun

FIG_SIZE = (6.4, 4.0)


def write_lines(path: Path, lines: list[str]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def simulation_outputs(result: SimulationRun, outdir: str | Path,
                       figures: bool = True) -> list[Path]:
    """Write report.tsv, transcript.ndjson, and the run's figures."""
    outdir = Path(outdir)
    written = [
        write_lines(outdir / "report.tsv",
                    [f"{k}\t{v}" for k, v in result.report.rows()]),
        write_lines(outdir / "transcript.ndjson", result.transcript_lines()),
    ]
    if figures:
        written.append(_outcome_histogram(result, outdir / "outcome_histogram.png"))
        written.append(_payoff_vs_confidence(result, outdir / "answerer_payoff_vs_p.png"))
    return written


def _outcome_histogram(result: SimulationRun, path: Path) -> Path:
    counts = result.report.outcome_counts
    labels = ["VerifiedCorrect", "VerifiedWrong", "Expired"]
    values = [counts.get(label, 0) for label in labels]
    fig, ax = plt.subplots(figsize=FIG_SIZE)
    ax.bar(labels, values, color=["#2a9d8f", "#e76f51", "#8d99ae"])
    ax.set_ylabel("settled transactions")
    ax.set_title(f"Outcomes over {result.report.n_entered} entered transactions")
    for spine in ("top", "right"):
        ax.spines[spine].set_visible(False)
    fig.savefig(path, bbox_inches="tight", dpi=150)
    plt.close(fig)
    return path


def _payoff_vs_confidence(result: SimulationRun, path: Path, bins: int = 20) -> Path:
    entered = [r for r in result.records if r.entered]
    fig, ax = plt.subplots(figsize=FIG_SIZE)
    if entered:
        sums = [0.0] * bins
        counts = [0] * bins
        for record in entered:
            index = min(int(record.p * bins), bins - 1)
            sums[index] += record.answerer_net
            counts[index] += 1
        centers = [(i + 0.5) / bins for i in range(bins) if counts[i]]
        means = [sums[i] / counts[i] / 100 for i in range(bins) if counts[i]]
        ax.plot(centers, means, "o", label="simulated mean (binned)")

    params = result.config.params
    theory = sweep_expected_payoffs(params, Party.ANSWERER, steps=100,
                                    q_verifies=Fraction(str(result.config.q_verifies)),
                                    x_approves=Fraction(str(result.config.x_approves)))
    ax.plot([float(p) for p, _ in theory], [float(ev) / 100 for _, ev in theory],
            "-", label="expected value")
    p_star = float(entry_threshold(params))
    ax.axvline(p_star, linestyle=":", color="gray", label=f"entry threshold {p_star:.2f}")
    ax.axhline(0, linewidth=0.8, color="black")
    ax.set_xlabel("answerer confidence p")
    ax.set_ylabel("answerer net ($)")
    ax.legend(frameon=False)
    fig.savefig(path, bbox_inches="tight", dpi=150)
    plt.close(fig)
    return path


def incentive_sweep_outputs(params: TransactionParams, outdir: str | Path,
                            steps: int = 100, q_verifies=1, x_approves=1,
                            figures: bool = True) -> list[Path]:
    """Tabulate expected payoff per party across the confidence grid; plot it."""
    outdir = Path(outdir)
    grids = {party: sweep_expected_payoffs(params, party, steps, q_verifies, x_approves)
             for party in Party.ALL}
    header = "p\t" + "\t".join(f"ev_{party}_cents" for party in Party.ALL)
    lines = [header]
    for i in range(steps + 1):
        p = grids[Party.ASKER][i][0]
        cells = [str(float(p))] + [repr(float(grids[party][i][1])) for party in Party.ALL]
        lines.append("\t".join(cells))
    written = [write_lines(outdir / "incentive_sweep.tsv", lines)]

    if figures:
        fig, ax = plt.subplots(figsize=FIG_SIZE)
        xs = [float(p) for p, _ in grids[Party.ANSWERER]]
        for party in Party.ALL:
            ax.plot(xs, [float(ev) / 100 for _, ev in grids[party]], label=party)
        p_star = float(entry_threshold(params))
        ax.axvline(p_star, linestyle=":", color="gray",
                   label=f"entry threshold {p_star:.2f}")
        ax.axhline(0, linewidth=0.8, color="black")
        ax.set_xlabel("answerer confidence p")
        ax.set_ylabel("expected net ($)")
        ax.legend(frameon=False)
        path = outdir / "expected_payoff_vs_p.png"
        fig.savefig(path, bbox_inches="tight", dpi=150)
        plt.close(fig)
        written.append(path)
    return written
