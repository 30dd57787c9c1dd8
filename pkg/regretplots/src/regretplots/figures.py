"""Regret-curve figures from simulation harness CSV tables.

The harness emits one aggregate table (``t,policy,mean_cum_regret,stderr``)
plus one per-policy run table (``seed,policy,t,...,cum_regret,...``).  This
module loads either, and draws mean cumulative regret per policy with a
+-1 standard error band.  The plotted arrays are exactly the loaded arrays;
there is no smoothing or resampling.
"""

import argparse
import csv
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

AGGREGATE_COLUMNS = ("t", "policy", "mean_cum_regret", "stderr")
RUN_COLUMNS = ("seed", "policy", "t", "cum_regret")


class LoadError(Exception):
    """A regret table does not match the expected schema."""


@dataclass(frozen=True)
class RegretSeries:
    """One policy's mean cumulative regret over rounds, with its spread."""

    policy: str
    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray

    def __post_init__(self):
        if not (len(self.t) == len(self.mean) == len(self.stderr)):
            raise ValueError("series arrays must have equal length")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("series rounds must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)


def _check_fields(fields, required: tuple[str, ...], path) -> None:
    for column in required:
        if column not in (fields or ()):
            raise LoadError(f"{path}: missing column {column!r}")


def _cell(row: dict, column: str, cast, path) -> float:
    try:
        return cast(row[column])
    except (TypeError, ValueError):
        raise LoadError(
            f"{path}: bad value {row.get(column)!r} in column {column!r}"
        ) from None


def _to_series(policy: str, rows: list[tuple[int, float, float]], path) -> RegretSeries:
    rows.sort()
    rounds = [r[0] for r in rows]
    if len(set(rounds)) != len(rounds):
        raise LoadError(f"{path}: duplicate round for policy {policy!r}")
    return RegretSeries(
        policy=policy,
        t=np.array(rounds, dtype=int),
        mean=np.array([r[1] for r in rows]),
        stderr=np.array([r[2] for r in rows]),
    )


def load_aggregate(path) -> list[RegretSeries]:
    """Read a harness aggregate table into one series per policy.

    Series come back in first-appearance order, each sorted by round.  An
    empty table (header only) is an empty list.
    """
    by_policy: dict[str, list[tuple[int, float, float]]] = {}
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        _check_fields(reader.fieldnames, AGGREGATE_COLUMNS, path)
        for row in reader:
            t = _cell(row, "t", int, path)
            mean = _cell(row, "mean_cum_regret", float, path)
            err = _cell(row, "stderr", float, path)
            by_policy.setdefault(row["policy"], []).append((t, mean, err))
    return [_to_series(p, rows, path) for p, rows in by_policy.items()]


def load_runs(paths) -> list[RegretSeries]:
    """Re-aggregate per-policy run tables (one row per seed and round).

    The mean is over seeds; the spread is the sample standard deviation
    divided by sqrt(#seeds), zero for a single seed — the same statistic
    the harness writes, so the result should match ``load_aggregate`` on
    the corresponding aggregate file.
    """
    by_key: dict[tuple[str, int], list[float]] = {}
    order: list[str] = []
    for path in paths:
        with open(path, newline="") as handle:
            reader = csv.DictReader(handle)
            _check_fields(reader.fieldnames, RUN_COLUMNS, path)
            for row in reader:
                policy = row["policy"]
                if policy not in order:
                    order.append(policy)
                t = _cell(row, "t", int, path)
                y = _cell(row, "cum_regret", float, path)
                by_key.setdefault((policy, t), []).append(y)
    out = []
    for policy in order:
        rows = []
        for (p, t), ys in by_key.items():
            if p != policy:
                continue
            n = len(ys)
            mean = float(np.mean(ys))
            err = 0.0 if n == 1 else float(np.std(ys, ddof=1) / math.sqrt(n))
            rows.append((t, mean, err))
        out.append(_to_series(policy, rows, "<runs>"))
    return out


def build_regret_figure(series: list[RegretSeries]):
    """Assemble the figure: one line per policy, band = mean +- stderr."""
    if not series:
        raise ValueError("need at least one series to plot")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for s in series:
        (line,) = ax.plot(s.t, s.mean, label=s.policy, linewidth=1.6)
        ax.fill_between(
            s.t,
            s.mean - s.stderr,
            s.mean + s.stderr,
            color=line.get_color(),
            alpha=0.25,
            linewidth=0,
        )
    ax.set_xlabel("round")
    ax.set_ylabel("mean cumulative regret")
    ax.legend(frameon=False)
    fig.tight_layout()
    return fig


def render_regret_figure(series: list[RegretSeries], out_path) -> Path:
    """Write the figure to ``out_path`` (format from the file suffix)."""
    fig = build_regret_figure(series)
    out = Path(out_path)
    try:
        fig.savefig(out, dpi=150)
    finally:
        plt.close(fig)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="regretplots",
        description="Draw mean-regret curves from a harness aggregate table.",
    )
    parser.add_argument("--in", dest="table", required=True,
                        help="aggregate csv from the simulation harness")
    parser.add_argument("--out", dest="figure", required=True,
                        help="output image path (suffix picks the format)")
    args = parser.parse_args(argv)
    try:
        series = load_aggregate(args.table)
        if not series:
            print(f"{args.table}: no data rows", file=sys.stderr)
            return 1
        out = render_regret_figure(series, args.figure)
    except (LoadError, OSError) as exc:
        print(str(exc), file=sys.stderr)
        return 1
    print(f"wrote {out} ({len(series)} series)")
    return 0


def main_entry() -> None:
    raise SystemExit(main())
