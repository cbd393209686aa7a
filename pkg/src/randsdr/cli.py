"""Command line interface: ``randsdr <command> [options]``.

Exit status is 0 on success, 2 for bad input (unreadable or malformed
files, invalid options) and 3 when a numerical routine fails. Set
``RANDSDR_NUM_THREADS`` to cap the BLAS thread pool.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from randsdr import experiments, io, knn, lpp, sdr, simgen
from randsdr.linalg import LinAlgError, RngStream
from randsdr.rsvd import DEFAULT_OVERSAMPLING, DEFAULT_T_MAX, adaptive_randomized_svd

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
THREADS_ENV = "RANDSDR_NUM_THREADS"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _config(args):
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _outdir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_svd(args):
    X = io.read_matrix(args.input)
    t0 = time.perf_counter()
    res = adaptive_randomized_svd(X, t_max=args.t_max, d_max=args.d_max, delta=args.delta,
                                  rng=RngStream(args.seed), d=args.d, t=args.t)
    elapsed = time.perf_counter() - t0
    out = _outdir(args.out)
    io.write_matrix(out / "U.csv", res.U)
    io.write_vector(out / "S.csv", res.S)
    io.write_matrix(out / "V.csv", res.V)
    report = {
        "command": "svd",
        "config": _config(args),
        "d_star": res.rank_est,
        "t_star": res.power_iters,
        "bicv_curve": res.info.get("bicv_curve"),
        "bicv_ranks": res.info.get("bicv_ranks"),
        "stability_scores": res.info.get("stability_scores"),
    }
    if args.timing:
        report["wall_time"] = elapsed
    io.dump_json(out / "report.json", _jsonable(report))
    return EXIT_OK


def _fit_model(args, X, y):
    rng = RngStream(args.seed)
    if args.method == "pca":
        return sdr.fit_pca(X, r=args.r, mode=args.mode, t=args.t, d_max=args.d_max,
                           t_max=args.t_max, delta=args.delta, rng=rng, y=y)
    if args.method == "lpp":
        return lpp.fit_lpp(X, k=args.k, b=args.bandwidth, r=args.r or 2, mode=args.mode,
                           t=args.t, delta=args.delta, rng=rng)
    if y is None:
        raise io.InputError(f"--y is required for {args.method}")
    H = args.H
    if H is None:
        H = None if sdr.is_categorical(y) else sdr.DEFAULT_SLICES
    common = dict(H=H, r=args.r, mode=args.mode, d=args.d, t=args.t, d_max=args.d_max,
                  t_max=args.t_max, delta=args.delta, rng=rng, solver=args.solver)
    if args.method == "sir":
        return sdr.fit_sir(X, y, **common)
    return sdr.fit_lsir(X, y, k=args.k, **common)


def cmd_fit(args):
    X = io.read_matrix(args.x)
    y = io.read_vector(args.y) if args.y else None
    if y is not None and y.shape[0] != X.shape[0]:
        raise io.InputError(f"--y has {y.shape[0]} entries but X has {X.shape[0]} rows")
    model = _fit_model(args, X, y)
    out = _outdir(args.out)
    io.save_model(out / "model.json", model)
    report = {"command": "fit", "config": _config(args), "method": model.method, "r": model.r,
              "d_star": model.d_star, "t_star": model.t_star,
              "eigenvalues": None if model.eigenvalues is None else model.eigenvalues}
    io.dump_json(out / "report.json", _jsonable(report))
    return EXIT_OK


def cmd_transform(args):
    model = io.load_model(args.model)
    X = io.read_matrix(args.input)
    Z = sdr.transform(model, X, center=args.center)
    io.write_matrix(args.out, Z)
    return EXIT_OK


def cmd_evaluate(args):
    model = io.load_model(args.model)
    Xtr, ytr = io.read_matrix(args.x_train), io.read_vector(args.y_train)
    Xte, yte = io.read_matrix(args.x_test), io.read_vector(args.y_test)
    Z = sdr.transform(model, Xtr, center=args.center)
    Zt = sdr.transform(model, Xte, center=args.center)
    report = {"command": "evaluate", "config": _config(args), "method": model.method}
    if sdr.is_categorical(ytr):
        pred = knn.knn_classify(Z, ytr, Zt, args.k)
        report["accuracy"] = simgen.accuracy(yte, pred)
    else:
        report["mspe"], report["r2"] = simgen.mspe_r2(Z, ytr, Zt, yte)
    if args.b_true:
        b = io.read_vector(args.b_true).astype(float)
        report["aedr"] = simgen.aedr(b, model.G)
    io.dump_json(args.out, _jsonable(report))
    return EXIT_OK


def cmd_simulate(args):
    rng = RngStream(args.seed)
    if args.family == "lowrank":
        ds = simgen.gen_lowrank_noise(args.n, args.p, args.d_star, args.kappa, rng,
                                      noise_var=args.noise_var)
    elif args.family == "xor":
        ds = simgen.gen_xor(args.n, args.p, args.d_star, args.sigma, args.pi, rng)
    else:
        ds = simgen.gen_latent_factor(args.n, args.p, args.d_star, tuple(args.s2n), rng)
    out = _outdir(args.out)
    io.write_matrix(out / "X.csv", ds.X)
    if ds.y is not None:
        io.write_vector(out / "y.csv", ds.y)
    truth = {k: v for k, v in ds.truth.items()}
    io.dump_json(out / "truth.json", _jsonable({"config": _config(args), "truth": truth}))
    return EXIT_OK


def _summary_csv(rows):
    keys = list(rows[0].keys())
    lines = [",".join(keys)]
    for r in rows:
        lines.append(",".join(f"{r[k]:.17g}" if isinstance(r[k], float) else str(r[k]) for k in keys))
    return "\n".join(lines) + "\n"


def _overrides(pairs):
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise io.InputError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            raise io.InputError(f"--set {key}: value is not JSON: {value!r}") from None
    return out


def cmd_reproduce(args):
    res = experiments.run(args.experiment, args.scale, args.seed, jobs=args.jobs,
                          **_overrides(args.set))
    out = _outdir(args.out)
    res["config"]["jobs"] = None  # replicate results do not depend on it
    io.dump_json(out / f"{args.experiment}.json", _jsonable(res))
    with open(out / f"{args.experiment}.csv", "w", newline="\n", encoding="ascii") as fh:
        fh.write(_summary_csv(res["summary"]))
    return EXIT_OK


def _positive(kind):
    def parse(s):
        v = kind(s)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {s}")
        return v
    return parse


def build_parser():
    ap = argparse.ArgumentParser(prog="randsdr", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("svd", help="adaptive randomized SVD of a CSV matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--d-max", type=_positive(int))
    p.add_argument("--t-max", type=_positive(int), default=DEFAULT_T_MAX)
    p.add_argument("--delta", type=int, default=DEFAULT_OVERSAMPLING)
    p.add_argument("--d", type=_positive(int), help="pin the rank")
    p.add_argument("--t", type=_positive(int), help="pin the power count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timing", action="store_true", help="add wall_time to the report")
    p.set_defaults(func=cmd_svd)

    p = sub.add_parser("fit", help="fit a dimension reduction model")
    p.add_argument("--method", choices=["pca", "sir", "lsir", "lpp"], required=True)
    p.add_argument("--mode", choices=["exact", "randomized"], default="exact")
    p.add_argument("--x", required=True)
    p.add_argument("--y")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--H", type=_positive(int),
                   help=f"number of slices (default {sdr.DEFAULT_SLICES}; one per class for labels)")
    p.add_argument("--k", type=_positive(int), default=10)
    p.add_argument("--r", type=_positive(int))
    p.add_argument("--d", type=_positive(int))
    p.add_argument("--t", type=_positive(int))
    p.add_argument("--d-max", type=_positive(int))
    p.add_argument("--t-max", type=_positive(int), default=DEFAULT_T_MAX)
    p.add_argument("--delta", type=int, default=DEFAULT_OVERSAMPLING)
    p.add_argument("--bandwidth", type=_positive(float), help="LPP heat kernel bandwidth")
    p.add_argument("--solver", choices=["auto", "pencil", "restricted"], default="auto",
                   help="generalized eigenproblem route for sir/lsir")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("transform", help="project data with a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--center", choices=["self", "train"], default="self")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("evaluate", help="score a fitted model on held-out data")
    p.add_argument("--model", required=True)
    p.add_argument("--x-train", required=True)
    p.add_argument("--y-train", required=True)
    p.add_argument("--x-test", required=True)
    p.add_argument("--y-test", required=True)
    p.add_argument("--b-true", help="true direction, one value per line, for AEDR")
    p.add_argument("--k", type=_positive(int), default=10, help="kNN size for class labels")
    p.add_argument("--center", choices=["self", "train"], default="self")
    p.add_argument("--out", required=True, help="output JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="generate a synthetic data set")
    p.add_argument("--family", choices=["lowrank", "xor", "latent"], required=True)
    p.add_argument("--n", type=_positive(int), required=True)
    p.add_argument("--p", type=_positive(int), required=True)
    p.add_argument("--d-star", type=_positive(int))
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--noise-var", type=_positive(float), help="lowrank noise variance (default 1/n)")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--pi", type=float, default=0.5)
    p.add_argument("--s2n", type=float, nargs=2, default=[0.3, 0.6], metavar=("LO", "HI"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reproduce", help="run a simulation study")
    p.add_argument("--experiment", choices=sorted(experiments.EXPERIMENTS), required=True)
    p.add_argument("--scale", choices=["desk", "full"], default="desk")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=_positive(int), default=1)
    p.add_argument("--set", action="append", metavar="KEY=JSON",
                   help="override a configuration entry, e.g. --set replicates=3")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_reproduce)
    return ap


def _validate(args):
    if args.command == "simulate" and args.d_star is None and args.family != "latent":
        raise io.InputError("--d-star is required for this family")
    if getattr(args, "seed", 0) < 0 or getattr(args, "seed", 0) >= 2**64:
        raise io.InputError("--seed must be in [0, 2^64)")


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    threads = os.environ.get(THREADS_ENV)
    try:
        _validate(args)
        if threads:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=int(threads)):
                return args.func(args)
        return args.func(args)
    except LinAlgError as exc:
        print(f"randsdr: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (io.InputError, ValueError, OSError) as exc:
        print(f"randsdr: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run():
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        sys.exit(main())


if __name__ == "__main__":
    run()
