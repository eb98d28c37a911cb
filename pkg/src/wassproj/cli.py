"""Command-line front end: ``python -m wassproj <command> ...``.

Every command writes plot-ready CSV/JSON into ``--out`` (a directory) and
prints a one-line JSON summary on stdout.  Failures print a JSON error
document on stderr and exit with status 1 (2 for usage errors).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import datagen, io
from .distributions import encode_many, wasserstein2, wasserstein2_spline
from .errors import InvalidArgumentError, ParseError, WassprojError
from .geodesic_pca import GeodesicOptions, fit_global_geodesic, fit_nested_geodesic
from .projected_pca import (
    fit_pca,
    ghost_variance,
    interpretability_score,
    normalized_reconstruction_error,
    project_dataset,
    reconstruction_error,
)
from .projected_regression import DEFAULT_RHO_GRID, RegressionModel, cross_validate_rho, fit_regression, predict
from .spline_basis import SplineBasis

QUANTILE_GRID = np.linspace(0.0, 1.0, 101)


class UsageError(WassprojError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    out: str = "."
    J: int | None = None
    k: int | None = None
    rho: float | None = None
    rho_grid: list | None = None
    folds: str = "loo"
    seed: int = 0
    method: str = "projected"
    params: dict = field(default_factory=dict)

    def validate(self):
        if self.J is not None and self.J < 4:
            raise InvalidArgumentError("--basis-size must be >= 4")
        if self.k is not None and self.J is not None and not 0 <= self.k <= self.J:
            raise InvalidArgumentError("--dims must lie in [0, basis size]")
        for p in self.inputs:
            if not Path(p).is_file():
                raise InvalidArgumentError(f"input file not found: {p}")
        return self


def _basis(cfg):
    return SplineBasis(cfg.J) if cfg.J is not None else None


def _load_quantiles(path, basis):
    return io.read_any(path, basis, encode_many)


def _parse_grid(text):
    try:
        grid = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InvalidArgumentError(f"bad --rho-grid {text!r}") from None
    if not grid or any(r <= 0 for r in grid):
        raise InvalidArgumentError("--rho-grid needs positive comma-separated values")
    return grid


def _parse_params(items):
    params = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise InvalidArgumentError(f"--param expects key=value, got {item!r}")
        try:
            params[key] = int(val)
        except ValueError:
            params[key] = float(val)
    return params


# --- commands ---------------------------------------------------------------


def cmd_encode(cfg: RunConfig):
    if cfg.J is None:
        raise InvalidArgumentError("--basis-size is required")
    basis = SplineBasis(cfg.J)
    ids, dists = io.read_distributions(cfg.inputs[0])
    qs = encode_many(dists, basis)
    errs = [wasserstein2(d, q) for d, q in zip(dists, qs)]
    out = Path(cfg.out) / "coefficients.csv"
    io.write_coefficients(out, ids, qs, basis.J, {"encoding_w2": errs})
    return {"coefficients": str(out), "n": len(ids), "max_encoding_w2": max(errs, default=0.0)}


def _pca_diagnostics(models, data, kmax):
    """Rows ``k, RE, NRE, IS, GV`` for k = 0..kmax; ``models[k]`` spans the k-dim component."""
    rows = []
    for k in range(kmax + 1):
        m = models[k]
        re = reconstruction_error(m, data, k)
        nre = normalized_reconstruction_error(m, data, k)
        is_k = interpretability_score(m, data, k) if k else float("nan")
        gv = ghost_variance(m, data, k)
        rows.append([k, re, nre, is_k, gv])
    return rows


def cmd_pca(cfg: RunConfig):
    ids, data, basis = _load_quantiles(cfg.inputs[0], _basis(cfg))
    if len(data) < 2:
        raise InvalidArgumentError("PCA needs at least two observations")
    k = basis.J if cfg.k is None else cfg.k
    if not 0 <= k <= basis.J:
        raise InvalidArgumentError("--dims must lie in [0, basis size]")
    out = Path(cfg.out)
    opts = GeodesicOptions(seed=cfg.seed)
    if cfg.method == "projected":
        model = fit_pca(data)
        models = [model] * (k + 1)
        doc = model.to_dict()
    elif cfg.method == "nested":
        res = fit_nested_geodesic(data, None, k, opts)
        model = res.to_model()
        models = [model] * (k + 1)
        doc = res.to_dict()
    elif cfg.method == "global":
        fits = [fit_global_geodesic(data, None, h, opts) for h in range(k + 1)]
        models = [f.to_model() for f in fits]
        model = models[k]
        doc = fits[k].to_dict()
    else:
        raise InvalidArgumentError(f"unknown --method {cfg.method!r}")
    (out).mkdir(parents=True, exist_ok=True)
    (out / "model.json").write_text(json.dumps(doc) + "\n", encoding="utf-8")
    io.write_table(out / "diagnostics.csv", ["k", "RE", "NRE", "IS", "GV"], _pca_diagnostics(models, data, k))
    scores, _ = project_dataset(model, data, k)
    io.write_table(
        out / "scores.csv",
        ["dist_id"] + [f"s{j}" for j in range(1, k + 1)],
        [[did, *row] for did, row in zip(ids, scores)],
    )
    return {"method": cfg.method, "model": str(out / "model.json"), "n": len(data), "dims": k}


def _load_predictors(paths, basis):
    ids_ref, blocks = None, []
    for p in paths:
        ids, qs, basis = _load_quantiles(p, basis)
        if ids_ref is None:
            ids_ref = ids
        elif ids != ids_ref:
            raise InvalidArgumentError(f"dist_id order in {p} differs from the first predictor file")
        blocks.append(qs)
    return ids_ref, blocks, basis


def cmd_regress(cfg: RunConfig, z_paths, y_path, include_intercept):
    basis = _basis(cfg)
    zids, Z, basis = _load_predictors(z_paths, basis)
    yids, Y, basis = _load_quantiles(y_path, basis)
    if zids != yids:
        raise InvalidArgumentError("predictor and response files must list the same dist_id in the same order")
    out = Path(cfg.out)
    if cfg.rho is not None and cfg.rho_grid is None:
        best, table = cfg.rho, []
    else:
        grid = cfg.rho_grid or list(DEFAULT_RHO_GRID)
        folds = cfg.folds if cfg.folds == "loo" else int(cfg.folds)
        best, table = cross_validate_rho(Z, Y, grid, folds, include_intercept, seed=cfg.seed)
    model = fit_regression(Z, Y, best, include_intercept)
    out.mkdir(parents=True, exist_ok=True)
    (out / "model.json").write_text(model.to_json() + "\n", encoding="utf-8")
    io.write_table(out / "cv.csv", ["rho", "mean_w2"], table)
    return {"model": str(out / "model.json"), "rho": best, "n": len(Y), "K": len(Z)}


def cmd_predict(cfg: RunConfig, model_path, z_paths):
    try:
        model = RegressionModel.from_json(Path(model_path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"bad model file: {exc}") from None
    if cfg.J is not None and cfg.J != model.basis.J:
        raise InvalidArgumentError(f"--basis-size {cfg.J} does not match the model's J={model.basis.J}")
    ids, Z, _ = _load_predictors(z_paths, model.basis)
    if len(Z) != model.K:
        raise InvalidArgumentError(f"model expects {model.K} predictor files, got {len(Z)}")
    preds = [predict(model, [z[i] for z in Z]) for i in range(len(ids))]
    header = io.coefficient_header(model.basis.J) + [f"q{j:03d}" for j in range(len(QUANTILE_GRID))]
    rows = [[did, *q.coeffs, *q.quantile(QUANTILE_GRID)] for did, q in zip(ids, preds)]
    out = Path(cfg.out) / "predictions.csv"
    io.write_table(out, header, rows)
    return {"predictions": str(out), "n": len(ids)}


def _load_for_distance(path, basis):
    kind = io.detect_format(path)
    if kind == "coefficients":
        ids, qs, _ = io.read_coefficients(path, basis)
        return ids, qs, "spline"
    ids, dists = io.read_distributions(path)
    return ids, dists, "empirical"


def cmd_wasserstein(cfg: RunConfig):
    basis = _basis(cfg)
    ida, A, ka = _load_for_distance(cfg.inputs[0], basis)
    idb, B, kb = _load_for_distance(cfg.inputs[-1], basis) if len(cfg.inputs) > 1 else (ida, A, ka)
    if ka != kb:
        raise InvalidArgumentError("both inputs must be distributions or both coefficients")
    dist = wasserstein2_spline if ka == "spline" else wasserstein2
    D = np.array([[dist(a, b) for b in B] for a in A]).reshape(len(A), len(B))
    out = Path(cfg.out) / "distances.csv"
    io.write_table(out, ["dist_id", *idb], [[i, *row] for i, row in zip(ida, D)])
    return {"distances": str(out), "shape": list(D.shape)}


def cmd_simulate(cfg: RunConfig, scenario, n):
    sc = datagen.Scenario(scenario, cfg.params, cfg.seed)
    result = datagen.simulate(sc, n)
    out = Path(cfg.out)
    files = {}
    if isinstance(result, tuple):
        for name, dists in zip(("z", "y"), result):
            io.write_distributions(out / f"{name}.csv", dists)
            files[name] = f"{name}.csv"
    else:
        io.write_distributions(out / "distributions.csv", result)
        files["distributions"] = "distributions.csv"
    manifest = {"scenario": sc.name, "params": sc.params, "seed": sc.seed, "n": n, "files": files}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {"manifest": str(out / "manifest.json"), **files}


def cmd_bench(cfg: RunConfig, n):
    J = cfg.J or 20
    k = cfg.k if cfg.k is not None else 5
    basis = SplineBasis(J)
    data = encode_many(datagen.gen_dpm(n, 10, cfg.seed), basis)
    t0 = time.perf_counter()
    model = fit_pca(data)
    project_dataset(model, data, k)
    t_proj = time.perf_counter() - t0
    t0 = time.perf_counter()
    fit_global_geodesic(data, None, k, GeodesicOptions(seed=cfg.seed))
    t_geo = time.perf_counter() - t0
    doc = {"n": n, "J": J, "k": k, "projected_s": t_proj, "global_geodesic_s": t_geo, "speedup": t_geo / t_proj}
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bench.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return doc


# --- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wassproj", description="Projected PCA and regression for 1-D distributions (2-Wasserstein).")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, basis=True):
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        if basis:
            sp.add_argument("--basis-size", type=int, dest="basis_size", help="number of spline coefficients J")

    sp = sub.add_parser("encode", help="encode distributions as monotone spline coefficients")
    sp.add_argument("input")
    common(sp)

    for name in ("pca", "geodesic-pca"):
        sp = sub.add_parser(name, help="projected or geodesic PCA with diagnostics")
        sp.add_argument("input", help="coefficients CSV or distributions CSV (needs --basis-size)")
        sp.add_argument("--dims", type=int)
        default = "projected" if name == "pca" else "global"
        sp.add_argument("--method", choices=("projected", "global", "nested"), default=default)
        common(sp)

    sp = sub.add_parser("regress", help="fit projected distribution-on-distribution regression")
    sp.add_argument("--z", action="append", required=True, help="predictor CSV (repeat for several)")
    sp.add_argument("--y", required=True, help="response CSV")
    sp.add_argument("--rho", type=float)
    sp.add_argument("--rho-grid", dest="rho_grid")
    sp.add_argument("--folds", default="loo", help="'loo' or number of folds")
    sp.add_argument("--no-intercept", action="store_true")
    common(sp)

    sp = sub.add_parser("predict", help="apply a fitted regression model")
    sp.add_argument("model")
    sp.add_argument("--z", action="append", required=True)
    common(sp)

    sp = sub.add_parser("wasserstein", help="pairwise 2-Wasserstein distances")
    sp.add_argument("inputs", nargs="+", help="one or two CSV files")
    common(sp)

    sp = sub.add_parser("simulate", help="generate a simulation scenario")
    sp.add_argument("scenario", choices=datagen.SCENARIOS)
    sp.add_argument("-n", type=int, default=100)
    sp.add_argument("--param", action="append", help="scenario parameter key=value")
    common(sp, basis=False)

    sp = sub.add_parser("bench", help="time projected PCA against global geodesic PCA")
    sp.add_argument("-n", type=int, default=100)
    sp.add_argument("--dims", type=int)
    common(sp)
    return p


def run(argv=None) -> dict:
    args = build_parser().parse_args(argv)
    cmd = args.command
    rho_grid = _parse_grid(args.rho_grid) if getattr(args, "rho_grid", None) else None
    if getattr(args, "folds", "loo") != "loo" and not str(args.folds).isdigit():
        raise InvalidArgumentError("--folds must be 'loo' or a positive integer")
    inputs = []
    if cmd in ("encode", "pca", "geodesic-pca"):
        inputs = [args.input]
    elif cmd == "wasserstein":
        if len(args.inputs) > 2:
            raise InvalidArgumentError("wasserstein takes one or two input files")
        inputs = list(args.inputs)
    elif cmd == "regress":
        inputs = [*args.z, args.y]
    elif cmd == "predict":
        inputs = [args.model, *args.z]
    cfg = RunConfig(
        command=cmd,
        inputs=inputs,
        out=args.out,
        J=getattr(args, "basis_size", None),
        k=getattr(args, "dims", None),
        rho=getattr(args, "rho", None),
        rho_grid=rho_grid,
        folds=getattr(args, "folds", "loo"),
        seed=args.seed,
        method=getattr(args, "method", "projected"),
        params=_parse_params(getattr(args, "param", None)),
    ).validate()
    if cmd == "encode":
        return cmd_encode(cfg)
    if cmd in ("pca", "geodesic-pca"):
        return cmd_pca(cfg)
    if cmd == "regress":
        return cmd_regress(cfg, args.z, args.y, not args.no_intercept)
    if cmd == "predict":
        return cmd_predict(cfg, args.model, args.z)
    if cmd == "wasserstein":
        return cmd_wasserstein(cfg)
    if cmd == "simulate":
        if args.n < 1:
            raise InvalidArgumentError("-n must be >= 1")
        return cmd_simulate(cfg, args.scenario, args.n)
    return cmd_bench(cfg, args.n)


def main(argv=None) -> int:
    try:
        summary = run(argv)
    except UsageError as exc:
        print(json.dumps({"error": "UsageError", "message": str(exc)}), file=sys.stderr)
        return 2
    except (WassprojError, OSError, ValueError) as exc:
        doc = {"error": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "line", None) is not None:
            doc["line"] = exc.line
        print(json.dumps(doc), file=sys.stderr)
        return 1
    print(json.dumps(summary, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
