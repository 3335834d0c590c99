"""Command-line interface: fit, simulate, loglik, metrics, and hull.

Every fit writes a manifest.json capturing the command, configuration, input
checksums, and objective trace, so a run can be reproduced from the manifest
alone. Floats are printed with 17 significant digits so CSV round-trips are
bit-faithful. Exit codes: 0 success, 2 usage or input errors, 3 solver abort.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, backend
from .countmat import (
    MatrixMarketError,
    read_matrix_market,
    write_matrix_market,
)
from .evaluate import metrics_report, simulate
from .fitter import FitConfig, compute_size_factors, fit, make_quad
from .geometry import upper_right_hull
from .likelihood import FactorModel, approx_loglik, exact_loglik, identity_loglik

_F = "%.17g"


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def _write_factor_csv(path: str, A: np.ndarray):
    header = ",".join("factor_%d" % (k + 1) for k in range(A.shape[1]))
    np.savetxt(path, A, fmt=_F, delimiter=",", header=header, comments="")


def _read_factor_csv(path: str) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def _config_dict(cfg: FitConfig) -> dict:
    return {
        "k": cfg.k,
        "c": "inf" if math.isinf(cfg.c) else cfg.c,
        "objective": cfg.objective,
        "max_outer_iters": cfg.max_outer_iters,
        "rel_tol": cfg.rel_tol,
        "inner_cycles": cfg.inner_cycles,
        "max_halvings": cfg.max_halvings,
        "seed": cfg.seed,
        "use_size_factors": cfg.use_size_factors,
        "n_threads": cfg.n_threads,
    }


def _fail(msg: str, code: int = 2) -> int:
    print("error: %s" % msg, file=sys.stderr)
    return code


def cmd_fit(args, argv) -> int:
    if not os.path.isfile(args.input):
        return _fail("input file not found: %s" % args.input)
    try:
        Y = read_matrix_market(args.input)
    except MatrixMarketError as e:
        return _fail(str(e))
    try:
        cfg = FitConfig(
            k=args.k,
            c=args.c,
            objective=args.objective,
            max_outer_iters=args.max_iters,
            rel_tol=args.tol,
            seed=args.seed,
            use_size_factors=(args.size_factors == "on"),
            n_threads=args.threads,
        )
    except ValueError as e:
        return _fail(str(e))
    os.makedirs(args.out_dir, exist_ok=True)
    manifest = {
        "command": ["shiftlognmf"] + list(argv),
        "library_version": __version__,
        "config": _config_dict(cfg),
        "seed": cfg.seed,
        "inputs": {args.input: _sha256(args.input)},
        "backend": backend.BACKEND_NAME,
    }
    manifest_path = os.path.join(args.out_dir, "manifest.json")
    t0 = time.perf_counter()
    try:
        model, report = fit(Y, cfg)
    except (RuntimeError, ValueError) as e:
        manifest["error"] = str(e)
        manifest["wall_time"] = time.perf_counter() - t0
        with open(manifest_path, "wt") as fh:
            json.dump(manifest, fh, indent=2)
        return _fail(str(e), code=3)

    paths = {
        "L": os.path.join(args.out_dir, "L.csv"),
        "F": os.path.join(args.out_dir, "F.csv"),
        "trace": os.path.join(args.out_dir, "trace.csv"),
        "manifest": manifest_path,
    }
    _write_factor_csv(paths["L"], model.L)
    _write_factor_csv(paths["F"], model.F)
    with open(paths["trace"], "wt") as fh:
        fh.write("iteration,loglik\n")
        for t, ll in enumerate(report.loglik_trace, start=1):
            fh.write(("%d," + _F + "\n") % (t, ll))
    manifest.update(
        {
            "effective_c": report.effective_c,
            "outputs": {k: v for k, v in paths.items() if k != "manifest"},
            "loglik_trace": [float(x) for x in report.loglik_trace],
            "wall_time": report.wall_time,
            "converged": report.converged,
            "iterations": report.iterations,
            "empty_factors": list(report.empty_factors),
            "backend": report.backend,
        }
    )
    with open(manifest_path, "wt") as fh:
        json.dump(manifest, fh, indent=2)
    print(
        "fit: %d iterations, %s, objective %s -> %s"
        % (
            report.iterations,
            "converged" if report.converged else "max-iters reached",
            _F % report.objective_value,
            args.out_dir,
        )
    )
    return 0


def cmd_simulate(args) -> int:
    try:
        Y, L, F = simulate(args.n, args.m, args.k, args.c, args.sparsity, args.seed)
    except ValueError as e:
        return _fail(str(e))
    out_dir = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(out_dir, exist_ok=True)
    write_matrix_market(Y, args.out)
    _write_factor_csv(os.path.join(out_dir, "L_true.csv"), L)
    _write_factor_csv(os.path.join(out_dir, "F_true.csv"), F)
    realized = 1.0 - Y.nnz / (Y.n_rows * Y.n_cols)
    print("simulate: wrote %s (%d x %d, %.4f zero)" % (args.out, Y.n_rows, Y.n_cols, realized))
    return 0


def _load_model_dir(model_dir: str):
    lpath = os.path.join(model_dir, "L.csv")
    fpath = os.path.join(model_dir, "F.csv")
    if not (os.path.isfile(lpath) and os.path.isfile(fpath)):
        raise FileNotFoundError("model directory must contain L.csv and F.csv: %s" % model_dir)
    L = _read_factor_csv(lpath)
    F = _read_factor_csv(fpath)
    mpath = os.path.join(model_dir, "manifest.json")
    manifest = None
    if os.path.isfile(mpath):
        with open(mpath, "rt") as fh:
            manifest = json.load(fh)
    return L, F, manifest


def _resolve_c(args, manifest) -> float | None:
    if args.c is not None:
        return args.c
    if manifest is not None and "effective_c" in manifest:
        return float(manifest["effective_c"])
    return None


def cmd_loglik(args) -> int:
    if not os.path.isfile(args.input):
        return _fail("input file not found: %s" % args.input)
    try:
        Y = read_matrix_market(args.input)
        L, F, manifest = _load_model_dir(args.model_dir)
    except (MatrixMarketError, FileNotFoundError, ValueError) as e:
        return _fail(str(e))
    c = _resolve_c(args, manifest)
    if c is None:
        return _fail("no c available: pass --c or provide a manifest.json")
    s = None
    if manifest is not None and manifest.get("config", {}).get("use_size_factors"):
        s = compute_size_factors(Y)
    try:
        if args.kind == "identity":
            value = identity_loglik(Y, L, F, s)
        else:
            model = FactorModel(L=L, F=F, c=c, s=s)
            if args.kind == "exact":
                value = exact_loglik(Y, model, include_constants=args.include_constants)
            else:
                value = approx_loglik(Y, model, make_quad(args.kind, c))
    except ValueError as e:
        return _fail(str(e))
    print(_F % value)
    return 0


def cmd_metrics(args) -> int:
    try:
        L, F, manifest = _load_model_dir(args.model_dir)
    except (FileNotFoundError, ValueError) as e:
        return _fail(str(e))
    c = _resolve_c(args, manifest)
    if c is None:
        return _fail("no c available: pass --c or provide a manifest.json")
    report = metrics_report(L, F, c)
    out_dir = args.out_dir or args.model_dir
    os.makedirs(out_dir, exist_ok=True)
    payload = json.dumps(report.to_json_dict(), indent=2)
    with open(os.path.join(out_dir, "metrics.json"), "wt") as fh:
        fh.write(payload + "\n")
    with open(os.path.join(out_dir, "metrics.csv"), "wt") as fh:
        fh.write(report.csv_header() + "\n" + report.to_csv_row() + "\n")
    print(payload)
    return 0


def cmd_hull(args) -> int:
    if not os.path.isfile(args.input):
        return _fail("input file not found: %s" % args.input)
    try:
        try:
            pts = np.loadtxt(args.input, delimiter=",", ndmin=2)
        except ValueError:
            pts = np.loadtxt(args.input, delimiter=",", skiprows=1, ndmin=2)
        hull = upper_right_hull(pts)
    except ValueError as e:
        return _fail(str(e))
    payload = json.dumps(
        {
            "vertices": hull.vertex_indices.tolist(),
            "normals": [[float(z) for z in row] for row in hull.normals],
        },
        indent=2,
    )
    if args.out:
        with open(args.out, "wt") as fh:
            fh.write(payload + "\n")
    print(payload)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="shiftlognmf",
        description="Poisson matrix factorization with a shifted-log link",
    )
    p.add_argument("--version", action="version", version="shiftlognmf " + __version__)
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="factorize a MatrixMarket count matrix")
    f.add_argument("--input", required=True, help="MatrixMarket coordinate file")
    f.add_argument("--k", type=int, required=True, help="number of factors")
    f.add_argument("--c", type=float, required=True, help="shift parameter (inf for identity-like)")
    f.add_argument("--objective", default="exact",
                   choices=["exact", "approx-taylor", "approx-chebyshev"])
    f.add_argument("--size-factors", default="off", choices=["on", "off"])
    f.add_argument("--max-iters", type=int, default=100)
    f.add_argument("--tol", type=float, default=1e-6)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--threads", type=int, default=0)
    f.add_argument("--out-dir", required=True)

    s = sub.add_parser("simulate", help="generate a calibrated sparse count matrix")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--sparsity", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="output MatrixMarket path")

    l = sub.add_parser("loglik", help="evaluate a stored model against a matrix")
    l.add_argument("--model-dir", required=True)
    l.add_argument("--input", required=True)
    l.add_argument("--kind", default="exact",
                   choices=["exact", "approx-taylor", "approx-chebyshev", "identity"])
    l.add_argument("--c", type=float, default=None, help="override the manifest's c")
    l.add_argument("--include-constants", action="store_true")

    m = sub.add_parser("metrics", help="sparsity and correlation metrics of a stored model")
    m.add_argument("--model-dir", required=True)
    m.add_argument("--c", type=float, default=None)
    m.add_argument("--out-dir", default=None)

    h = sub.add_parser("hull", help="upper-right hull of 2-d factor rows")
    h.add_argument("--input", required=True, help="2-column CSV")
    h.add_argument("--out", default=None)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = _build_parser().parse_args(argv)
    if args.command == "fit":
        return cmd_fit(args, argv)
    if args.command == "simulate":
        return cmd_simulate(args)
    if args.command == "loglik":
        return cmd_loglik(args)
    if args.command == "metrics":
        return cmd_metrics(args)
    return cmd_hull(args)


if __name__ == "__main__":
    sys.exit(main())
