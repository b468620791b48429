"""Batch command-line pipeline.

Commands: synth | fit | path | select | eval | export-dot.  Each stage
reads and writes declared files so runs can be resumed, diffed and
scripted.  A ``--config`` file holds ``key=value`` lines that fill in any
flag not given on the command line (explicit flags win).  Every output
embeds the resolved configuration and git-style content hashes of its
inputs; wall-clock timings go to ``.log`` sidecars so that rerunning a
command with identical config and inputs reproduces identical JSON/CSV
bytes.

Exit codes: 0 success, 1 computational failure (solver/fit did not
converge or diverged), 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .admm import SolverConfig, solve
from .checkpoint import load_state, save_state
from .clusters import Clustering, extract_clustering, to_dot
from .data import (Dataset, load_dataset, load_similarity, save_dataset,
                   save_similarity, _data_rows)
from .errors import (CovclustError, DimensionError, DomainError, FitError,
                     InputError, NumericError, SolverError)
from .kernels import get_backend
from .metrics import (EvalReport, REPRESENTATIONS, accuracy, anmi, cv_select,
                      kmeans_similarity)
from .modelselect import SIGMA_GRID, map_fit, project_dataset, select_sigma
from .path import PathRecord, nu_grid, run_path, score_path
from .provenance import (input_hashes, provenance_comments, write_csv,
                         write_json)
from .synth import MODES, estimate_similarity, make_ground_truth, \
    make_similarity, sample

__all__ = ["RunConfig", "main", "build_parser",
           "cmd_synth", "cmd_fit", "cmd_path", "cmd_select", "cmd_eval",
           "cmd_export_dot"]

HELDOUT_SEED_OFFSET = 1_000_000


@dataclass(frozen=True)
class RunConfig:
    """Resolved parameters of one command, as serialized into outputs."""

    command: str
    options: dict

    def to_jsonable(self) -> dict:
        return {"command": self.command, **self.options}


def _run_config(args, keys) -> RunConfig:
    options = {}
    for key in keys:
        value = getattr(args, key)
        if isinstance(value, Path):
            value = str(value)
        options[key] = value
    options["threads"] = args.threads
    if hasattr(args, "kernels"):
        options["kernels"] = args.kernels
        options["kernels_resolved"] = get_backend(args.kernels).NAME
    return RunConfig(command=args.command, options=options)


def _ensure_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from None


def _load_similarity_matrix(path, d: int) -> np.ndarray:
    """Dense similarity matrix for the k-means baseline; a dense file is
    used verbatim (diagonal kept), triples build a zero-diagonal matrix."""
    rows = list(_data_rows(path))
    if rows and [c.lower() for c in rows[0][1]] == ["i", "j", "weight"]:
        return load_similarity(path, d=d).to_dense()
    try:
        S = np.array([[float(v) for v in cells] for _, cells in rows])
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InputError(f"{path}: dense similarity must be square")
    if d and S.shape[0] != d:
        raise InputError(f"{path}: matrix is {S.shape[0]}x{S.shape[0]}, "
                         f"expected d={d}")
    return S


def _solver_config(args, nu: float) -> SolverConfig:
    return SolverConfig(nu=nu, lam=args.lam, rho=args.rho, eps=args.eps,
                        max_iter=args.max_iter, init=args.init,
                        seed=args.seed, kernels=args.kernels)


def _write_timings(path, pairs) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name, seconds in pairs:
            fh.write(f"{name}\t{seconds:.6f}\n")


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    out = _ensure_dir(args.out)
    run = _run_config(args, ["out", "d", "n", "c", "clusters", "mode",
                             "seed", "n_heldout"])
    config = run.to_jsonable()
    truth = make_ground_truth(args.d, c=args.c, K=args.clusters)
    S = make_similarity(truth, args.mode)
    truth = truth.with_similarity(S)
    data = sample(truth, args.n, seed=args.seed)
    comments = provenance_comments(config, {})
    save_dataset(out / "dataset.csv", data, comments)
    if args.n_heldout:
        heldout = sample(truth, args.n_heldout,
                         seed=args.seed + HELDOUT_SEED_OFFSET)
        save_dataset(out / "heldout.csv", heldout, comments)
    save_similarity(out / "similarity_true.csv", S, comments)
    _, S_est = estimate_similarity(data, return_matrix=True)
    save_similarity(out / "similarity_est.csv", S_est, comments)
    write_json(out / "truth.json", {
        "d": args.d, "n": args.n, "c": args.c, "K": args.clusters,
        "mode": args.mode, "seed": args.seed,
        "m": truth.clustering.m,
        "assignment": truth.clustering.assignment.tolist(),
        "B": truth.B.tolist(),
        "beta0": truth.beta0.tolist(),
    }, config=config, inputs={})
    print(f"wrote synthetic dataset (d={args.d}, n={args.n}, "
          f"mode={args.mode}) to {out}")
    return 0


# ---------------------------------------------------------------------------
# fit


def cmd_fit(args) -> int:
    out = _ensure_dir(args.out)
    data = load_dataset(args.data)
    graph = load_similarity(args.similarity, d=data.d)
    inputs = input_hashes([args.data, args.similarity])
    run = _run_config(args, ["data", "similarity", "out", "nu", "lam",
                             "rho", "eps", "max_iter", "init", "seed"])
    config = run.to_jsonable()
    cfg = _solver_config(args, args.nu)
    start = time.perf_counter()
    state, diags = solve(data, graph, cfg)
    elapsed = time.perf_counter() - start
    clustering = extract_clustering(state, graph)
    final = diags[-1]
    write_json(out / "fit_report.json", {
        "converged": state.converged,
        "iterations": state.k,
        "primal": final["primal"],
        "dual": final["dual"],
        "threshold": final["threshold"],
        "g_value": final["g_value"],
        "m": clustering.m,
    }, config=config, inputs=inputs)
    write_json(out / "clustering.json", {
        "nu": args.nu,
        "converged": state.converged,
        **clustering.to_jsonable(),
    }, config=config, inputs=inputs)
    with open(out / "diagnostics.jsonl", "w", encoding="utf-8") as fh:
        for rec in diags:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    save_state(out / "checkpoint.bin", state, nu=args.nu)
    _write_timings(out / "timings.log", [("solve", elapsed)])
    status = "converged" if state.converged else "NOT converged"
    print(f"fit {status} after {state.k} iterations, m={clustering.m}")
    return 0 if state.converged else 1


# ---------------------------------------------------------------------------
# path


def _build_grid(args, n: int) -> list[float]:
    if args.nus:
        try:
            grid = [float(v) for v in args.nus.split(",") if v.strip()]
        except ValueError as exc:
            raise InputError(f"--nus: {exc}") from None
        if not grid:
            raise InputError("--nus produced an empty grid")
        return sorted(grid, reverse=True)
    if args.a_step < 1:
        raise InputError("--a-step must be >= 1")
    return nu_grid(n, args.a_max)[:: args.a_step]


def _record_from_jsonable(obj) -> PathRecord:
    clustering = None
    if "assignment" in obj:
        clustering = Clustering(np.asarray(obj["assignment"],
                                           dtype=np.int64), int(obj["m"]))
    return PathRecord(nu=float(obj["nu"]), clustering=clustering,
                      converged=bool(obj["converged"]),
                      iterations=int(obj["iterations"]),
                      seconds=0.0, failed=bool(obj.get("failed", False)),
                      error=str(obj.get("error", "")),
                      duplicate_of_prev=bool(obj.get("duplicate_of_prev",
                                                     False)))


def _resume_prefix(out: Path, meta: dict, grid: list[float]):
    """Validate an interrupted run and load its finished records."""
    meta_path = out / "path_meta.json"
    records_path = out / "path_records.jsonl"
    if not (meta_path.exists() and records_path.exists()):
        return [], None
    old = _load_json(meta_path)
    for key in ("config", "inputs", "grid"):
        if old.get(key) != meta[key]:
            raise InputError(
                f"--resume: existing {meta_path} was produced by a "
                f"different {key}; remove the output directory or rerun "
                "with matching settings")
    records = []
    with open(records_path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(_record_from_jsonable(json.loads(line)))
    if len(records) > len(grid):
        raise InputError("--resume: more finished records than grid points")
    for rec, nu in zip(records, grid):
        if rec.nu != nu:
            raise InputError("--resume: finished records do not match the "
                             "requested grid")
    initial_state = None
    ck = out / "checkpoint.bin"
    if records and ck.exists():
        initial_state, _ = load_state(ck)
    return records, initial_state


def cmd_path(args) -> int:
    out = _ensure_dir(args.out)
    data = load_dataset(args.data)
    graph = load_similarity(args.similarity, d=data.d)
    inputs = input_hashes([args.data, args.similarity])
    grid = _build_grid(args, data.n)
    run = _run_config(args, ["data", "similarity", "out", "a_max", "a_step",
                             "nus", "lam", "rho", "eps", "max_iter", "init",
                             "seed", "warm_start", "early_exit"])
    config = run.to_jsonable()
    meta = {"config": config, "inputs": inputs, "grid": grid}
    cfg = _solver_config(args, 0.0)

    done: list[PathRecord] = []
    initial_state = None
    if args.resume:
        done, initial_state = _resume_prefix(out, meta, grid)
        if done:
            print(f"resuming after {len(done)} finished grid points")
    write_json(out / "path_meta.json", {"grid": grid}, config=config,
               inputs=inputs)
    records_path = out / "path_records.jsonl"
    mode = "a" if done else "w"
    offset = len(done)
    timings: list[tuple[str, float]] = []

    with open(records_path, mode, encoding="utf-8") as fh:

        def checkpoint_hook(record, state):
            fh.write(json.dumps(record.to_jsonable(include_score=False),
                                sort_keys=True) + "\n")
            fh.flush()
            pos = checkpoint_hook.counter + offset
            checkpoint_hook.counter += 1
            write_json(out / f"clustering_{pos:04d}.json",
                       record.to_jsonable(include_score=False),
                       config=config, inputs=inputs)
            if state is not None:
                save_state(out / "checkpoint.bin", state, nu=record.nu)
            timings.append((f"nu_{pos:04d}", record.seconds))

        checkpoint_hook.counter = 0
        new_records = run_path(data, graph, cfg, grid[len(done):],
                               warm_start=args.warm_start,
                               early_exit=args.early_exit,
                               callback=checkpoint_hook,
                               initial_state=initial_state)
    records = done + new_records
    n_converged = sum(1 for r in records if r.converged)
    write_json(out / "path_report.json", {
        "grid": grid,
        "n_converged": n_converged,
        "records": [r.to_jsonable(include_score=False) for r in records],
    }, config=config, inputs=inputs)
    write_csv(out / "path_summary.csv",
              ["nu", "m", "converged", "log_marginal", "train_accuracy"],
              [[r.nu, r.clustering.m if r.clustering else None, r.converged,
                None, None] for r in records],
              config=config, inputs=inputs)
    _write_timings(out / "timings.log", timings)
    print(f"path: {n_converged}/{len(records)} grid points converged")
    return 0 if n_converged else 1


# ---------------------------------------------------------------------------
# select


def _records_from_report(path) -> list[PathRecord]:
    report = _load_json(path)
    try:
        return [_record_from_jsonable(obj) for obj in report["records"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed path report ({exc})") from None


def cmd_select(args) -> int:
    out = _ensure_dir(args.out)
    data = load_dataset(args.data)
    report_path = Path(args.path)
    if report_path.is_dir():
        report_path = report_path / "path_report.json"
    records = _records_from_report(report_path)
    inputs = input_hashes([args.data, report_path])
    run = _run_config(args, ["data", "path", "out", "selector", "sigma",
                             "sigma_grid", "folds", "seed"])
    config = run.to_jsonable()

    sigma_scores = None
    if args.sigma is not None:
        sigma = args.sigma
    else:
        if args.sigma_grid:
            try:
                grid = [float(v) for v in args.sigma_grid.split(",")
                        if v.strip()]
            except ValueError as exc:
                raise InputError(f"--sigma-grid: {exc}") from None
        else:
            grid = list(SIGMA_GRID)
        sigma, table = select_sigma(data, folds=args.folds, grid=grid,
                                    seed=args.seed, return_scores=True)
        sigma_scores = [{"sigma": s, "cv_mean_loglik": v}
                        for s, v in table.items()]

    if args.selector == "marginal":
        records = score_path(data, records, sigma)
        scored = [r for r in records if r.score is not None]
        if not scored:
            raise FitError("no clustering on the path could be scored")
        unique: dict[tuple, object] = {}
        for rec in scored:
            unique.setdefault(rec.clustering.key(), rec.score)
        ranking = sorted(unique.values(), key=lambda s: s.sort_key())
        selected_rec = next(r for r in scored if r.is_best)
        selected_payload = {
            "selector": "marginal",
            "sigma": sigma,
            "nu": selected_rec.nu,
            "log_marginal": selected_rec.score.log_marginal,
            "train_accuracy": selected_rec.score.train_accuracy,
            **selected_rec.clustering.to_jsonable(),
        }
        write_json(out / "scores.json", {
            "selector": "marginal",
            "sigma": sigma,
            "sigma_scores": sigma_scores,
            "ranking": [s.to_jsonable(include_params=False)
                        for s in ranking],
        }, config=config, inputs=inputs)
        write_csv(out / "scored_path.csv",
                  ["nu", "m", "converged", "log_marginal", "train_accuracy"],
                  [[r.nu, r.clustering.m if r.clustering else None,
                    r.converged,
                    r.score.log_marginal if r.score else None,
                    r.score.train_accuracy if r.score else None]
                   for r in records],
                  config=config, inputs=inputs)
    else:
        selected_rec, table = cv_select(records, data, folds=args.folds,
                                        sigma=sigma, seed=args.seed,
                                        return_scores=True)
        selected_payload = {
            "selector": "cv",
            "sigma": sigma,
            "nu": selected_rec.nu,
            **selected_rec.clustering.to_jsonable(),
        }
        write_json(out / "scores.json", {
            "selector": "cv",
            "sigma": sigma,
            "sigma_scores": sigma_scores,
            "ranking": table,
        }, config=config, inputs=inputs)
        write_csv(out / "cv_scores.csv",
                  ["m", "nu", "cv_mean", "cv_sd", "eligible", "selected"],
                  [[row["m"], row["nu"], row["cv_mean"], row["cv_sd"],
                    row["eligible"], row["selected"]] for row in table],
                  config=config, inputs=inputs)
    write_json(out / "selected.json", selected_payload,
               config=config, inputs=inputs)
    with open(out / "selected.dot", "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(to_dot(selected_rec.clustering))
    print(f"selected m={selected_rec.clustering.m} at "
          f"nu={selected_rec.nu:.6g} (selector={args.selector}, "
          f"sigma={sigma:g})")
    return 0


# ---------------------------------------------------------------------------
# eval


def _heldout_accuracy(train: Dataset, heldout, clustering, sigma: float):
    if heldout is None:
        return math.nan
    params = map_fit(project_dataset(train, clustering), sigma)
    reduced = project_dataset(heldout, clustering)
    return accuracy(params, reduced.as_dataset())


def cmd_eval(args) -> int:
    out = _ensure_dir(args.out)
    data = load_dataset(args.data)
    sel_doc = _load_json(args.selected)
    selected = Clustering.from_jsonable(sel_doc)
    if selected.d != data.d:
        raise InputError(
            f"selected clustering covers {selected.d} covariates, "
            f"data has {data.d}")
    truth_clus = None
    paths = [args.data, args.selected]
    if args.truth:
        truth_doc = _load_json(args.truth)
        truth_clus = Clustering.from_jsonable(truth_doc)
        if truth_clus.d != data.d:
            raise InputError("truth clustering does not match data")
        paths.append(args.truth)
    heldout = None
    if args.heldout:
        heldout = load_dataset(args.heldout, c=data.c)
        if heldout.d != data.d:
            raise InputError("held-out dataset does not match data")
        paths.append(args.heldout)
    if truth_clus is None and heldout is None:
        raise InputError("need --truth and/or --heldout to evaluate")
    S = _load_similarity_matrix(args.similarity, data.d)
    paths.append(args.similarity)
    inputs = input_hashes(paths)
    run = _run_config(args, ["data", "similarity", "selected", "truth",
                             "heldout", "out", "sigma", "seed", "restarts"])
    config = run.to_jsonable()

    sigma = args.sigma if args.sigma is not None else \
        float(sel_doc.get("sigma", 1.0))

    def against_truth(clus):
        return anmi(clus, truth_clus) if truth_clus is not None else math.nan

    reports = [EvalReport(
        anmi=against_truth(selected),
        heldout_accuracy=_heldout_accuracy(data, heldout, selected, sigma),
        m=selected.m, method="proposed", seed=args.seed)]
    full = Clustering.singletons(data.d)
    reports.append(EvalReport(
        anmi=against_truth(full),
        heldout_accuracy=_heldout_accuracy(data, heldout, full, sigma),
        m=full.m, method="full_model", seed=args.seed))
    for rep in REPRESENTATIONS:
        km = kmeans_similarity(S, selected.m, seed=args.seed,
                               restarts=args.restarts, representation=rep,
                               threads=args.threads)
        reports.append(EvalReport(
            anmi=against_truth(km),
            heldout_accuracy=_heldout_accuracy(data, heldout, km, sigma),
            m=km.m, method=f"kmeans_{rep}", seed=args.seed))
    write_json(out / "eval_report.json", {
        "sigma": sigma,
        "reports": [r.to_jsonable() for r in reports],
    }, config=config, inputs=inputs)
    write_csv(out / "comparison.csv",
              ["method", "m", "anmi", "accuracy", "seed"],
              [[r.method, r.m, r.anmi, r.heldout_accuracy, r.seed]
               for r in reports],
              config=config, inputs=inputs)
    shown = ", ".join(f"{r.method}: anmi={r.anmi:.3f}" for r in reports
                      if r.anmi == r.anmi)
    print(f"eval written to {out}" + (f" ({shown})" if shown else ""))
    return 0


# ---------------------------------------------------------------------------
# export-dot


def cmd_export_dot(args) -> int:
    doc = _load_json(args.clustering)
    clustering = Clustering.from_jsonable(doc)
    names = None
    if args.names:
        with open(args.names, "r", encoding="utf-8") as fh:
            names = [line.rstrip("\n") for line in fh if line.strip()]
        if len(names) != clustering.d:
            raise InputError(
                f"{args.names}: {len(names)} names for {clustering.d} "
                "covariates")
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(to_dot(clustering, names))
    print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------------------
# parser and dispatch


def _parse_config_file(path) -> dict:
    """key=value lines; '#' comments; true/false become booleans."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise InputError(
                    f"{path}:{lineno}: expected key=value, got {stripped!r}")
            key, _, value = stripped.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if value.lower() in ("true", "false"):
                values[key] = value.lower() == "true"
            else:
                values[key] = value
    return values


def _add_common(parser):
    parser.add_argument("--config", default=None, metavar="FILE",
                        help="key=value file merged under explicit flags")
    parser.add_argument("--threads", type=int,
                        default=os.cpu_count() or 1,
                        help="worker threads for restart/scoring loops "
                             "(recorded in outputs; default: CPU count)")


def _add_solver(parser):
    parser.add_argument("--lam", type=float, default=0.1,
                        help="ridge weight on ||B||_F^2 (default 0.1)")
    parser.add_argument("--rho", type=float, default=1.0,
                        help="ADMM penalty parameter (default 1.0)")
    parser.add_argument("--eps", type=float, default=1e-5,
                        help="residual tolerance factor (default 1e-5)")
    parser.add_argument("--max-iter", type=int, default=1000,
                        help="ADMM iteration cap (default 1000)")
    parser.add_argument("--init", choices=["zeros", "random"],
                        default="zeros", help="cold-start mode")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--kernels", choices=["auto", "compiled", "numpy"],
                        default="auto", help="edge-kernel backend")


# flags that must be present after merging the config file; argparse's
# ``required`` cannot be used because a config file may supply them
REQUIRED = {
    "synth": ("out", "d", "n"),
    "fit": ("data", "similarity", "out", "nu"),
    "path": ("data", "similarity", "out"),
    "select": ("data", "path", "out"),
    "eval": ("data", "similarity", "selected", "out"),
    "export-dot": ("clustering", "out"),
}


def build_parser():
    """Returns (parser, subparsers-by-command)."""
    parser = argparse.ArgumentParser(
        prog="covclust",
        description="Joint covariate clustering and multinomial "
                    "classification via similarity-fused regression.")
    sub = parser.add_subparsers(dest="command", required=True)
    by_command = {}

    p = by_command["synth"] = sub.add_parser(
        "synth", help="generate a synthetic problem")
    p.add_argument("--out", help="output directory")
    p.add_argument("--d", type=int, help="covariate count")
    p.add_argument("--n", type=int, help="sample count (multiple of c)")
    p.add_argument("--c", type=int, default=4, help="class count")
    p.add_argument("--clusters", type=int, default=10,
                   help="true cluster count K")
    p.add_argument("--mode", choices=list(MODES), default="agree",
                   help="similarity regime")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-heldout", type=int, default=0,
                   help="also draw a held-out set of this size")
    _add_common(p)

    p = by_command["fit"] = sub.add_parser("fit", help="solve a single nu")
    p.add_argument("--data")
    p.add_argument("--similarity")
    p.add_argument("--out")
    p.add_argument("--nu", type=float)
    _add_solver(p)
    _add_common(p)

    p = by_command["path"] = sub.add_parser("path", help="sweep the nu grid")
    p.add_argument("--data")
    p.add_argument("--similarity")
    p.add_argument("--out")
    p.add_argument("--a-max", type=int, default=299,
                   help="largest grid exponent a (default 299)")
    p.add_argument("--a-step", type=int, default=1,
                   help="subsample the grid to every a-step-th point")
    p.add_argument("--nus", default=None,
                   help="explicit comma-separated nu values (overrides "
                        "--a-max/--a-step)")
    p.add_argument("--no-warm-start", dest="warm_start",
                   action="store_false",
                   help="cold-start every grid point")
    p.add_argument("--early-exit", action="store_true",
                   help="stop once the clustering reaches m = d")
    p.add_argument("--resume", action="store_true",
                   help="continue an interrupted sweep in --out")
    _add_solver(p)
    _add_common(p)

    p = by_command["select"] = sub.add_parser(
        "select", help="choose a clustering from a path")
    p.add_argument("--data")
    p.add_argument("--path",
                   help="path output directory or path_report.json")
    p.add_argument("--out")
    p.add_argument("--selector", choices=["marginal", "cv"],
                   default="marginal")
    p.add_argument("--sigma", type=float, default=None,
                   help="prior scale; default: cross-validated")
    p.add_argument("--sigma-grid", default=None,
                   help="comma-separated sigma candidates for CV")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)

    p = by_command["eval"] = sub.add_parser(
        "eval", help="evaluate a selected clustering")
    p.add_argument("--data")
    p.add_argument("--similarity",
                   help="similarity matrix for the k-means baseline")
    p.add_argument("--selected",
                   help="selected.json (or any clustering JSON)")
    p.add_argument("--truth", default=None, help="truth.json")
    p.add_argument("--heldout", default=None, help="held-out dataset CSV")
    p.add_argument("--out")
    p.add_argument("--sigma", type=float, default=None,
                   help="prior scale for held-out fits (default: from "
                        "selected.json, else 1.0)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10,
                   help="k-means restarts")
    _add_common(p)

    p = by_command["export-dot"] = sub.add_parser(
        "export-dot", help="render a clustering as DOT")
    p.add_argument("--clustering", help="clustering/selected JSON file")
    p.add_argument("--out", help="output .dot file")
    p.add_argument("--names", default=None,
                   help="file with one covariate name per line")
    _add_common(p)

    return parser, by_command


COMMANDS = {
    "synth": cmd_synth,
    "fit": cmd_fit,
    "path": cmd_path,
    "select": cmd_select,
    "eval": cmd_eval,
    "export-dot": cmd_export_dot,
}


def _peek_command_and_config(argv):
    """Pre-scan so config-file defaults can be installed before parsing."""
    command = next((tok for tok in argv if tok in COMMANDS), None)
    config = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            config = argv[i + 1]
        elif tok.startswith("--config="):
            config = tok.split("=", 1)[1]
    return command, config


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, by_command = build_parser()
    command, config_path = _peek_command_and_config(argv)
    if config_path and command:
        try:
            overrides = _parse_config_file(config_path)
        except (OSError, InputError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        known = {a.dest for a in by_command[command]._actions}
        unknown = set(overrides) - known
        if unknown:
            print(f"error: {config_path}: unknown keys {sorted(unknown)}",
                  file=sys.stderr)
            return 2
        by_command[command].set_defaults(**overrides)
    args = parser.parse_args(argv)
    missing = [name for name in REQUIRED[args.command]
               if getattr(args, name.replace("-", "_")) is None]
    if missing:
        flags = ", ".join("--" + m.replace("_", "-") for m in missing)
        print(f"error: {args.command}: missing required arguments: {flags}",
              file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except (InputError, DomainError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, FitError, NumericError, CovclustError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
