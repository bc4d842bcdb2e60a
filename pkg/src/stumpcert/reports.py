"""Certification reports: per-sample records and CA / ACR / BCA metrics.

Conventions (also echoed in the report header): a sample certified at radius
r keeps its prediction for every perturbation of norm strictly below r; ACR
is the mean certified radius over all test samples with misclassified samples
contributing 0 (radii capped for finite tables); CA@0 is the fraction with
success probability strictly above 1/2, which can differ from the clean
accuracy of the unsmoothed ensemble -- both are reported.
"""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from stumpcert.boosting import AdaBoostEnsemble, robadaboost_certify, robadaboost_predict
from stumpcert.data import Dataset
from stumpcert.ensemble import StumpEnsemble
from stumpcert.noise import DEFAULT_RADIUS_CAP, NoiseModel
from stumpcert.rs_baseline import RsConfig, rs_certify
from stumpcert.smoothing import certify_radius, exact_success_probability, joint_certify

REPORT_FORMAT = "cert-report"
REPORT_VERSION = 1

HEADER_NOTE = (
    "certified at radius r means the prediction is constant for every "
    "perturbation of norm < r; ACR averages certified radii with "
    "misclassified samples as 0"
)


def _certify_one(args):
    ens, data, noise, r0_grid, cap, i = args
    x_num = data.numerical[i] if data.n_numerical else None
    x_cat = data.categorical[i] if data.n_categorical else None
    y = int(data.labels[i])
    p1 = exact_success_probability(ens, x_num, 1, noise, x_cat)
    p_y = p1 if y == 1 else exact_success_probability(ens, x_num, 0, noise, x_cat)
    rec = {
        "index": i,
        "label": y,
        "smoothed_class": int(p1 > 0.5),
        "p_y": p_y,
    }
    clean_value, clean_class = ens.predict_clean(x_num, x_cat)
    rec["clean_value"] = clean_value
    rec["clean_class"] = clean_class
    radii = {}
    for r0 in r0_grid:
        out = joint_certify(ens, x_num, x_cat, y, noise, r0, cap=cap)
        radii[str(r0)] = out.radius if out.certified else 0.0
    rec["radius"] = radii[str(r0_grid[0])]
    rec["radius_by_r0"] = radii
    return rec


def _certify_chunk(ens, data, noise, r0_grid, cap, indices):
    return [_certify_one((ens, data, noise, r0_grid, cap, i)) for i in indices]


def certify_dataset(
    ens: StumpEnsemble,
    data: Dataset,
    noise: NoiseModel,
    radius_grid,
    r0_grid=None,
    cap: float = DEFAULT_RADIUS_CAP,
    workers: int = 1,
) -> dict:
    """Certify every sample and assemble the metrics block.

    With ``r0_grid`` given (categorical budgets), radii are recomputed per
    budget via the joint certificate; budget 0 equals plain certification.
    ``workers`` > 1 certifies samples on a process pool; records are merged in
    index order, so the report is identical regardless of scheduling.
    """
    radius_grid = [float(r) for r in radius_grid]
    r0_grid = [int(r) for r in (r0_grid if r0_grid is not None else [0])]
    n = data.n_samples
    if workers > 1 and n > 1:
        from concurrent.futures import ProcessPoolExecutor
        from functools import partial

        chunks = np.array_split(np.arange(n), min(workers * 4, n))
        work = partial(_certify_chunk, ens, data, noise, r0_grid, cap)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, [c.tolist() for c in chunks]))
        samples = [rec for part in parts for rec in part]
    else:
        samples = _certify_chunk(ens, data, noise, r0_grid, cap, range(n))
    metrics = _metrics_block(samples, radius_grid, r0_grid)
    return {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "note": HEADER_NOTE,
        "radius_grid": radius_grid,
        "r0_grid": r0_grid,
        "metrics": metrics,
        "samples": samples,
    }


def certify_dataset_adaboost(
    F: AdaBoostEnsemble,
    data: Dataset,
    noise: NoiseModel,
    radius_grid,
    cap: float = DEFAULT_RADIUS_CAP,
) -> dict:
    radius_grid = [float(r) for r in radius_grid]
    samples = []
    for i in range(data.n_samples):
        x_num = data.numerical[i] if data.n_numerical else None
        x_cat = data.categorical[i] if data.n_categorical else None
        y = int(data.labels[i])
        out = robadaboost_certify(F, x_num, y, noise, cap=cap, x_cat=x_cat)
        samples.append(
            {
                "index": i,
                "label": y,
                "smoothed_class": robadaboost_predict(F, x_num, noise, x_cat),
                "p_y": None,
                "radius": out.radius if out.certified else 0.0,
                "radius_by_r0": {"0": out.radius if out.certified else 0.0},
            }
        )
    metrics = _metrics_block(samples, radius_grid, [0])
    return {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "note": HEADER_NOTE,
        "radius_grid": radius_grid,
        "r0_grid": [0],
        "metrics": metrics,
        "samples": samples,
    }


def _accuracy(flags: np.ndarray) -> float:
    return float(np.mean(flags)) if len(flags) else 0.0


def _balanced(flags: np.ndarray, labels: np.ndarray) -> float:
    per_class = [
        _accuracy(flags[labels == c]) for c in (0, 1) if np.any(labels == c)
    ]
    return float(np.mean(per_class)) if per_class else 0.0


def _metrics_block(samples, radius_grid, r0_grid) -> dict:
    labels = np.array([s["label"] for s in samples])
    smoothed = np.array([s["smoothed_class"] for s in samples])
    correct = smoothed == labels
    metrics = {
        "n_samples": len(samples),
        "nac": _accuracy(correct),
        "balanced_nac": _balanced(correct, labels),
        "certified_accuracy": {},
        "balanced_certified_accuracy": {},
        "acr": {},
    }
    if all(s.get("clean_value") is not None for s in samples):
        clean = np.array([s["clean_class"] for s in samples])
        metrics["clean_accuracy"] = _accuracy(clean == labels)
    for r0 in r0_grid:
        radii = np.array([s["radius_by_r0"][str(r0)] for s in samples])
        certified = radii > 0.0
        metrics["acr"][str(r0)] = float(np.mean(radii))
        ca_row, bca_row = {}, {}
        for r in radius_grid:
            ok = certified & (radii >= r) if r > 0 else certified
            ca_row[_fmt_r(r)] = _accuracy(ok)
            bca_row[_fmt_r(r)] = _balanced(ok, labels)
        metrics["certified_accuracy"][str(r0)] = ca_row
        metrics["balanced_certified_accuracy"][str(r0)] = bca_row
    return metrics


def _fmt_r(r: float) -> str:
    return f"{r:g}"


# -- DRS vs sampling-RS ablation ----------------------------------------------


def ablate_rs(
    ens: StumpEnsemble,
    data: Dataset,
    noise: NoiseModel,
    n_list,
    alpha: float,
    seed: int,
    radius_grid,
    cap: float = DEFAULT_RADIUS_CAP,
) -> dict:
    """DRS row plus one sampling-RS row per sample count n."""
    radius_grid = [float(r) for r in radius_grid]
    labels = data.labels
    drs_radii = np.array(
        [
            certify_radius(ens, data.numerical[i], int(labels[i]), noise, cap=cap).radius
            for i in range(data.n_samples)
        ]
    )
    rows = [_ablation_row("drs", None, drs_radii, np.zeros(len(labels), bool), radius_grid)]
    for n in n_list:
        radii = np.zeros(data.n_samples)
        abstained = np.zeros(data.n_samples, dtype=bool)
        for i in range(data.n_samples):
            out = rs_certify(
                ens,
                data.numerical[i],
                int(labels[i]),
                noise,
                RsConfig(int(n), alpha, seed + i),
                cap=cap,
            )
            radii[i] = out.radius
            abstained[i] = out.abstained
        rows.append(_ablation_row("rs", int(n), radii, abstained, radius_grid))
    return {
        "format": "rs-ablation",
        "version": 1,
        "alpha": alpha,
        "seed": seed,
        "radius_grid": radius_grid,
        "rows": rows,
    }


def _ablation_row(method, n, radii, abstained, radius_grid) -> dict:
    certified = radii > 0.0
    return {
        "method": method,
        "n": n,
        "acr": float(np.mean(radii)),
        "abstain_rate": float(np.mean(abstained)),
        "certified_accuracy": {
            _fmt_r(r): float(np.mean(certified & (radii >= r) if r > 0 else certified))
            for r in radius_grid
        },
    }


# -- aggregation and emission --------------------------------------------------


def aggregate_crossval(reports: list[dict]) -> dict:
    """Mean and standard deviation of fold metrics (population std over folds)."""
    def stack(path):
        vals = []
        for rep in reports:
            node = rep["metrics"]
            for key in path:
                node = node[key]
            vals.append(node)
        return np.asarray(vals, dtype=np.float64)

    out = {"format": "crossval-report", "version": 1, "k": len(reports), "metrics": {}}
    for name in ("nac", "balanced_nac"):
        vals = stack((name,))
        out["metrics"][name] = {"mean": float(vals.mean()), "std": float(vals.std())}
    first = reports[0]["metrics"]
    for r0, row in first["certified_accuracy"].items():
        agg = {}
        for r in row:
            vals = stack(("certified_accuracy", r0, r))
            agg[r] = {"mean": float(vals.mean()), "std": float(vals.std())}
        out["metrics"].setdefault("certified_accuracy", {})[r0] = agg
        acr = stack(("acr", r0))
        out["metrics"].setdefault("acr", {})[r0] = {
            "mean": float(acr.mean()),
            "std": float(acr.std()),
        }
    return out


def report_to_json(report: dict) -> str:
    """Deterministic serialization: fixed key order and float repr."""
    return json.dumps(report, sort_keys=True, indent=1) + "\n"


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        fh.write(report_to_json(report))


def samples_to_csv(report: dict, path) -> None:
    """Per-sample records with radii and certified-at verdicts per grid radius."""
    fields = ["index", "label", "clean_value", "clean_class", "smoothed_class", "p_y", "radius"]
    r0s = [k for k in report.get("r0_grid", [0])]
    radius_grid = report.get("radius_grid", [])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            fields
            + [f"radius_r0_{r0}" for r0 in r0s]
            + [f"certified_at_{_fmt_r(r)}" for r in radius_grid]
        )
        for s in report["samples"]:
            row = [s.get(f) for f in fields]
            row += [s["radius_by_r0"][str(r0)] for r0 in r0s]
            base = s["radius_by_r0"][str(r0s[0])]
            row += [int(base > 0.0 and base >= r) for r in radius_grid]
            writer.writerow(row)


def render_table(report: dict) -> str:
    """Human-readable summary of a certification report."""
    m = report["metrics"]
    buf = io.StringIO()
    buf.write(f"samples: {m['n_samples']}\n")
    if "clean_accuracy" in m:
        buf.write(f"clean accuracy (unsmoothed): {100 * m['clean_accuracy']:.1f}%\n")
    buf.write(f"NAC (smoothed): {100 * m['nac']:.1f}%   balanced: {100 * m['balanced_nac']:.1f}%\n")
    radius_keys = [_fmt_r(r) for r in report["radius_grid"]]
    header = "r0   ACR     " + "".join(f"CA@{k:<7}" for k in radius_keys)
    buf.write(header.rstrip() + "\n")
    for r0 in report["r0_grid"]:
        ca = m["certified_accuracy"][str(r0)]
        row = f"{r0:<4} {m['acr'][str(r0)]:<7.3f} " + "".join(
            f"{100 * ca[k]:<10.1f}" for k in radius_keys
        )
        buf.write(row.rstrip() + "\n")
    return buf.getvalue()


def render_ablation_table(report: dict) -> str:
    buf = io.StringIO()
    radius_keys = [_fmt_r(r) for r in report["radius_grid"]]
    buf.write("method   n        ACR     abstain  " + "".join(f"CA@{k:<7}" for k in radius_keys).rstrip() + "\n")
    for row in report["rows"]:
        n = "-" if row["n"] is None else str(row["n"])
        line = f"{row['method']:<8} {n:<8} {row['acr']:<7.3f} {row['abstain_rate']:<8.3f} "
        line += "".join(f"{100 * row['certified_accuracy'][k]:<10.1f}" for k in radius_keys)
        buf.write(line.rstrip() + "\n")
    return buf.getvalue()
