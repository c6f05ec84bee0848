"""Writers for per-step tables, run summaries and plot data."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .runner import ScenarioResult

STEP_HEADER = ["step", "method", "mean_estimate_mbps", "sd_mbps", "mean_reward", "probe_bits_cum"]
PLOT_HEADER = ["step", "mean_estimate_mbps", "sd_mbps", "lower_mbps", "upper_mbps",
               "true_available_bandwidth_mbps"]


def _num(x: float) -> str:
    return format(float(x), ".10g")


def step_rows(result: ScenarioResult) -> list[list]:
    rows = []
    for method, agg in result.methods.items():
        mean, sd, rew = agg.mean_estimate, agg.sd, agg.mean_reward
        for i, step in enumerate(agg.steps):
            rows.append([int(step), method.value, float(mean[i]), float(sd[i]), float(rew[i]),
                         int(agg.probe_bits_cum[i])])
    return rows


def summary(result: ScenarioResult) -> dict:
    out = {
        "scenario": result.config.name,
        "true_available_bandwidth_mbps": result.true_available_bandwidth,
        "repetitions": result.config.repetitions,
        "master_seed": result.config.master_seed,
        "methods": {},
        "config": result.config.to_dict(),
    }
    for method, agg in result.methods.items():
        last = int(agg.steps[-1])
        mean, sd = agg.at_step(last)
        out["methods"][method.value] = {
            "steps": last,
            "final_mean_estimate_mbps": mean,
            "final_sd_mbps": None if sd != sd else sd,
            "final_estimates_mbps": agg.final_estimates.tolist(),
            "probe_bits_total": int(agg.probe_bits_cum[-1]),
        }
    return out


def emit_results(result: ScenarioResult, fmt: str = "csv", destination: str | Path = ".") -> list[Path]:
    """Write the per-step table, ``summary.json`` and one plot CSV per method.

    ``fmt`` selects CSV or JSON for the per-step table. Returns written paths.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    out = Path(destination)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    rows = step_rows(result)
    if fmt == "csv":
        path = out / "steps.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(STEP_HEADER)
            for r in rows:
                w.writerow([r[0], r[1], _num(r[2]), _num(r[3]), _num(r[4]), r[5]])
    else:
        path = out / "steps.json"
        path.write_text(json.dumps([dict(zip(STEP_HEADER, r)) for r in rows], indent=1) + "\n")
    written.append(path)

    path = out / "summary.json"
    path.write_text(json.dumps(summary(result), indent=2) + "\n")
    written.append(path)

    a = result.true_available_bandwidth
    for method, agg in result.methods.items():
        path = out / f"plot_{method.value.lower()}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(PLOT_HEADER)
            for step, m, s in zip(agg.steps, agg.mean_estimate, agg.sd):
                w.writerow([int(step), _num(m), _num(s), _num(m - s), _num(m + s), _num(a)])
        written.append(path)
    return written
