"""Command line interface: train, certify, ablate-rs, crossval."""

from __future__ import annotations

import json
import time

import click

from stumpcert import boosting, reports
from stumpcert.data import DataError, DatasetSpec, load_and_split
from stumpcert.ensemble import (
    ModelFormatError,
    ensemble_from_dict,
    ensemble_to_dict,
    save_ensemble,
)
from stumpcert.noise import DEFAULT_RADIUS_CAP, NoiseModel
from stumpcert.training import TrainConfig, TrainingError, fit_independent_ensemble

ADABOOST_FORMAT = "stump-adaboost"
ADABOOST_VERSION = 1


def _parse_grid(text: str, cast=float):
    try:
        return [cast(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise click.UsageError(f"bad grid {text!r}: {exc}")


def _load_train_config(config, noise_kind, noise_scale, delta, step, margin,
                       impurity_threshold, fit_mode, seed) -> TrainConfig:
    doc = {}
    if config:
        with open(config) as fh:
            doc = json.load(fh)
    if noise_kind:
        doc["noise_kind"] = noise_kind
    if noise_scale is not None:
        doc["noise_scale"] = noise_scale
    if "noise_kind" not in doc or "noise_scale" not in doc:
        raise click.UsageError("noise kind and scale are required (flags or config file)")
    if delta is not None:
        doc["delta"] = delta
    if step is not None:
        doc["search_step"] = step
    if margin is not None:
        doc["search_margin"] = margin
    if impurity_threshold is not None:
        doc["impurity_threshold"] = impurity_threshold
    if fit_mode is not None:
        doc["fit_mode"] = fit_mode
    if seed is not None:
        doc["sampling_seed"] = seed
    try:
        return TrainConfig.from_dict(doc)
    except ValueError as exc:
        raise click.UsageError(str(exc))


@click.group()
def main():
    """Deterministic robustness certificates for decision stump ensembles."""


common_noise = [
    click.option("--noise-kind", type=click.Choice(["uniform", "gaussian"]), default=None,
                 help="uniform gives l1, gaussian gives l2 certificates"),
    click.option("--noise-scale", type=float, default=None),
]


def add_options(opts):
    def wrap(fn):
        for opt in reversed(opts):
            fn = opt(fn)
        return fn
    return wrap


@main.command()
@click.option("--data", "data_spec", required=True, type=click.Path(exists=True),
              help="dataset spec JSON")
@click.option("--config", type=click.Path(exists=True), default=None,
              help="training config JSON; flags override file values")
@add_options(common_noise)
@click.option("--delta", type=int, default=None, help="leaf discretization steps")
@click.option("--step", type=float, default=None, help="split line-search step")
@click.option("--margin", type=float, default=None,
              help="search range beyond data range, in noise scales")
@click.option("--impurity-threshold", type=float, default=None)
@click.option("--fit-mode", type=click.Choice(["mle", "sampling", "default"]), default=None)
@click.option("--method", type=click.Choice(["independent", "treeboost", "adaboost"]),
              default="independent")
@click.option("--q", type=float, default=0.9, help="treeboost certifiable percentile")
@click.option("--n-extra", type=int, default=20, help="treeboost stumps to add")
@click.option("-K", "n_members", type=int, default=20, help="adaboost rounds")
@click.option("--target-radius", type=float, default=0.0, help="adaboost/treeboost target radius")
@click.option("--seed", type=int, default=None, help="seed for sampling fit mode")
@click.option("--out", required=True, type=click.Path(), help="model file to write")
def train(data_spec, config, noise_kind, noise_scale, delta, step, margin,
          impurity_threshold, fit_mode, method, q, n_extra, n_members,
          target_radius, seed, out):
    """Train a stump ensemble and write the model JSON."""
    cfg = _load_train_config(config, noise_kind, noise_scale, delta, step, margin,
                             impurity_threshold, fit_mode, seed)
    try:
        spec = DatasetSpec.from_file(data_spec)
        train_set, _ = load_and_split(spec)
    except (DataError, OSError, KeyError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"bad dataset spec: {exc}")
    t0 = time.perf_counter()
    meta = {
        "method": method,
        "train_noise_kind": cfg.noise.kind.value,
        "train_noise_scale": cfg.noise.scale,
    }
    try:
        if method == "independent":
            ens = fit_independent_ensemble(train_set, cfg)
            save_ensemble(ens, out, metadata=meta)
        elif method == "treeboost":
            tb = boosting.TreeBoostConfig(cfg, q=q, n_extra=n_extra,
                                          target_radius=target_radius)
            ens = boosting.robtreeboost_fit(train_set, tb)
            save_ensemble(ens, out, metadata=meta)
        else:
            F = boosting.robadaboost_fit(train_set, n_members, target_radius, cfg)
            doc = {
                "format": ADABOOST_FORMAT,
                "version": ADABOOST_VERSION,
                "target_radius": F.target_radius,
                "alphas": list(F.alphas),
                "members": [ensemble_to_dict(m) for m in F.members],
                "metadata": meta,
            }
            with open(out, "w") as fh:
                json.dump(doc, fh, indent=1, sort_keys=True)
                fh.write("\n")
    except (TrainingError, ValueError) as exc:
        raise click.ClickException(str(exc))
    click.echo(f"trained {method} model in {time.perf_counter() - t0:.2f}s -> {out}")


def load_any_model(path):
    """Returns ('ensemble', StumpEnsemble) or ('adaboost', AdaBoostEnsemble)."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") == ADABOOST_FORMAT:
        if doc.get("version") != ADABOOST_VERSION:
            raise ModelFormatError(
                f"unsupported {ADABOOST_FORMAT} version {doc.get('version')!r}, "
                f"expected {ADABOOST_VERSION}"
            )
        members = tuple(ensemble_from_dict(m) for m in doc["members"])
        return "adaboost", boosting.AdaBoostEnsemble(
            members, tuple(float(a) for a in doc["alphas"]), float(doc["target_radius"])
        )
    return "ensemble", ensemble_from_dict(doc)


@main.command()
@click.option("--model", required=True, type=click.Path(exists=True))
@click.option("--data", "data_spec", required=True, type=click.Path(exists=True))
@add_options(common_noise)
@click.option("--radii", default="0,0.25,0.5,0.75,1.0,1.25,1.5",
              help="comma-separated radius grid")
@click.option("--r0", "r0_grid", default="0", help="comma-separated l0 budgets")
@click.option("--cap", type=float, default=DEFAULT_RADIUS_CAP,
              help="radius reported when the success probability is exactly 1")
@click.option("--split", type=click.Choice(["test", "train"]), default="test")
@click.option("--workers", type=int, default=1,
              help="process-pool size for per-sample certification")
@click.option("--out", type=click.Path(), default=None, help="report JSON path")
@click.option("--csv", "csv_out", type=click.Path(), default=None,
              help="per-sample records CSV path")
def certify(model, data_spec, noise_kind, noise_scale, radii, r0_grid, cap,
            split, workers, out, csv_out):
    """Certify a model over a dataset split and emit the report."""
    if not noise_kind or noise_scale is None:
        raise click.UsageError("--noise-kind and --noise-scale are required")
    noise = NoiseModel(noise_kind, noise_scale)
    try:
        kind, ens = load_any_model(model)
        spec = DatasetSpec.from_file(data_spec)
        train_set, test_set = load_and_split(spec)
    except (ModelFormatError, DataError, OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(str(exc))
    data = test_set if split == "test" else train_set
    if data.n_rejected:
        click.echo(f"note: {data.n_rejected} rows rejected for missing values")
    t0 = time.perf_counter()
    if kind == "adaboost":
        report = reports.certify_dataset_adaboost(ens, data, noise,
                                                  _parse_grid(radii), cap=cap)
    else:
        report = reports.certify_dataset(ens, data, noise, _parse_grid(radii),
                                         _parse_grid(r0_grid, int), cap=cap,
                                         workers=workers)
    elapsed = time.perf_counter() - t0
    report["config"] = {
        "model": str(model),
        "data": str(data_spec),
        "split": split,
        "noise_kind": noise.kind.value,
        "noise_scale": noise.scale,
        "delta": ens.members[0].delta if kind == "adaboost" else ens.delta,
        "cap": cap,
    }
    click.echo(reports.render_table(report), nl=False)
    click.echo(f"certified {report['metrics']['n_samples']} samples in {elapsed:.2f}s")
    if out:
        reports.write_report(report, out)
    if csv_out:
        reports.samples_to_csv(report, csv_out)


@main.command("ablate-rs")
@click.option("--model", required=True, type=click.Path(exists=True))
@click.option("--data", "data_spec", required=True, type=click.Path(exists=True))
@add_options(common_noise)
@click.option("--n", "n_list", default="100,1000,10000", help="sample counts")
@click.option("--alpha", type=float, default=1e-3, help="confidence level")
@click.option("--seed", type=int, default=0)
@click.option("--radii", default="0,0.5,1.0,1.5,2.0,2.5,3.0,3.5")
@click.option("--out", type=click.Path(), default=None)
def ablate_rs(model, data_spec, noise_kind, noise_scale, n_list, alpha, seed, radii, out):
    """Compare deterministic certification against sampling-based smoothing."""
    if not noise_kind or noise_scale is None:
        raise click.UsageError("--noise-kind and --noise-scale are required")
    noise = NoiseModel(noise_kind, noise_scale)
    try:
        kind, ens = load_any_model(model)
        if kind != "ensemble":
            raise click.ClickException("the RS ablation needs a plain stump ensemble")
        if ens.categorical:
            raise click.ClickException(
                "the RS ablation smooths numerical features only; "
                "train the model without categorical columns"
            )
        spec = DatasetSpec.from_file(data_spec)
        _, test_set = load_and_split(spec)
    except (ModelFormatError, DataError, OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(str(exc))
    report = reports.ablate_rs(ens, test_set, noise, _parse_grid(n_list, int),
                               alpha, seed, _parse_grid(radii))
    report["config"] = {
        "model": str(model),
        "data": str(data_spec),
        "noise_kind": noise.kind.value,
        "noise_scale": noise.scale,
    }
    click.echo(reports.render_ablation_table(report), nl=False)
    if out:
        reports.write_report(report, out)


@main.command()
@click.option("--data", "data_spec", required=True, type=click.Path(exists=True))
@click.option("--config", type=click.Path(exists=True), default=None)
@add_options(common_noise)
@click.option("-k", "folds", type=int, default=5)
@click.option("--radii", default="0,0.25,0.5,1.0")
@click.option("--r0", "r0_grid", default="0")
@click.option("--delta", type=int, default=None)
@click.option("--impurity-threshold", type=float, default=None)
@click.option("--out", type=click.Path(), default=None)
def crossval(data_spec, config, noise_kind, noise_scale, folds, radii, r0_grid,
             delta, impurity_threshold, out):
    """k-fold cross-validation of independent training; reports mean and std."""
    cfg = _load_train_config(config, noise_kind, noise_scale, delta, None, None,
                             impurity_threshold, None, None)
    try:
        spec = DatasetSpec.from_file(data_spec)
    except (DataError, OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(str(exc))
    import dataclasses

    from stumpcert.data import SplitSpec

    fold_reports = []
    for fold in range(folds):
        fold_spec = dataclasses.replace(spec, split=SplitSpec("kfold", k=folds, fold=fold))
        try:
            train_set, test_set = load_and_split(fold_spec)
            ens = fit_independent_ensemble(train_set, cfg)
        except (DataError, TrainingError) as exc:
            raise click.ClickException(f"fold {fold}: {exc}")
        rep = reports.certify_dataset(ens, test_set, cfg.noise, _parse_grid(radii),
                                      _parse_grid(r0_grid, int))
        fold_reports.append(rep)
        click.echo(f"fold {fold}: NAC {100 * rep['metrics']['nac']:.1f}% "
                   f"ACR {rep['metrics']['acr']['0']:.3f}")
    agg = reports.aggregate_crossval(fold_reports)
    agg["config"] = {
        "data": str(data_spec),
        "k": folds,
        "noise_kind": cfg.noise.kind.value,
        "noise_scale": cfg.noise.scale,
    }
    for name, stat in agg["metrics"].items():
        if name in ("nac", "balanced_nac"):
            click.echo(f"{name}: {100 * stat['mean']:.1f}% +- {100 * stat['std']:.1f}%")
    if out:
        reports.write_report(agg, out)


if __name__ == "__main__":
    main()
