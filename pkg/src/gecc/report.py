"""Tabulate evolve ledgers and bound sweeps into plot-ready CSV files."""
from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import numpy as np

from .evolve import read_ledger
from .graph import fmt_float


def _run_kind(rows):
    return "warm" if any(r["mode"] == "warm" for r in rows) else "cold"


def _per_step(rows):
    steps = defaultdict(list)
    for r in rows:
        steps[r["step"]].append(r)
    return dict(sorted(steps.items()))


def _write(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt_float(v) if isinstance(v, float) else v for v in row])


def read_bounds(path):
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def summarize(ledgers, bounds=None, out_dir="."):
    """Write the plot-data CSVs and return a summary dict.

    ``ledgers`` is a list of ledger row lists (one per evolve run). A run
    counts as warm-started if any of its rows used a warm start.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs = {}
    for rows in ledgers:
        kind = _run_kind(rows)
        if kind in runs:
            kind = f"{kind}{len(runs)}"
        runs[kind] = _per_step(rows)

    acc_rows, time_rows = [], []
    for kind, steps in runs.items():
        for step, rows in steps.items():
            acc_rows.append([step, kind, rows[0]["test_accuracy"], rows[0]["condensed_size"]])
            t_prop = rows[0]["seconds_propagate"]
            t_clu = float(sum(r["seconds_cluster"] for r in rows))
            time_rows.append([step, kind, t_prop, t_clu, t_prop + t_clu])
    _write(out / "accuracy_vs_step.csv", ["step", "run", "test_accuracy", "condensed_size"],
           acc_rows)
    _write(out / "time_vs_step.csv",
           ["step", "run", "seconds_propagate", "seconds_cluster", "seconds_total"], time_rows)

    def med_iters(kind, step):
        rows = runs.get(kind, {}).get(step)
        return float(np.median([r["iterations"] for r in rows])) if rows else ""

    all_steps = sorted({s for steps in runs.values() for s in steps})
    iter_rows = [[s, med_iters("warm", s), med_iters("cold", s)] for s in all_steps]
    _write(out / "iterations_warm_vs_cold.csv", ["step", "warm_iterations", "cold_iterations"],
           iter_rows)

    summary = {"steps": len(all_steps), "runs": sorted(runs)}
    if "warm" in runs and "cold" in runs:
        warm_it = [r["iterations"] for rows in runs["warm"].values() for r in rows
                   if r["mode"] == "warm"]
        cold_it = [r["iterations"] for s, rows in runs["cold"].items() for r in rows
                   if s in runs["warm"] and any(x["mode"] == "warm" for x in runs["warm"][s])]
        if warm_it and cold_it:
            w, c = float(np.median(warm_it)), float(np.median(cold_it))
            summary.update(warm_median_iterations=w, cold_median_iterations=c,
                           warm_start_benefit=w < c)

    if bounds:
        per = defaultdict(lambda: {"instances": 0, "passed": 0, "violations": 0,
                                   "premise_failures": 0, "skipped": 0})
        for row in bounds:
            s = per[int(row["theorem"])]
            s["instances"] += 1
            if row["pass"] == "skip":
                s["skipped"] += 1
                continue
            premise = row.get("premise", "")
            if premise == "0":
                s["premise_failures"] += 1
            if row["pass"] == "1":
                s["passed"] += 1
            elif premise != "0":
                s["violations"] += 1
        summary["bounds"] = {k: dict(v) for k, v in sorted(per.items())}

    lines = [f"runs: {', '.join(summary['runs'])}", f"steps: {summary['steps']}"]
    if "warm_start_benefit" in summary:
        lines.append(f"median iterations warm/cold: {summary['warm_median_iterations']:g} / "
                     f"{summary['cold_median_iterations']:g}")
        lines.append(f"warm-start benefit: {'yes' if summary['warm_start_benefit'] else 'no'}")
    for th, s in summary.get("bounds", {}).items():
        lines.append(f"theorem {th}: {s['passed']}/{s['instances']} pass, "
                     f"{s['violations']} violations, {s['premise_failures']} premise failures")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    summary["text"] = "\n".join(lines)
    return summary


def summarize_files(ledger_paths, bounds_paths=(), out_dir="."):
    ledgers = [read_ledger(p) for p in ledger_paths]
    bounds = [row for p in bounds_paths for row in read_bounds(p)]
    return summarize(ledgers, bounds, out_dir)
