"""Simulation studies: singular-value accuracy, rank/t selection, XOR
classification and latent factor regression.

Each ``run_*`` function returns a plain dict with a ``config`` echo, one
record per replicate and a ``summary`` of means and standard errors.
Replicate ``i`` draws everything from ``RngStream(seed).child(name, i)``,
so results do not depend on how many replicates are run or in what
order.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy.sparse.linalg import svds

from randsdr import knn, sdr, simgen
from randsdr.linalg import RngStream, gaussian_matrix, qr_orthonormalize
from randsdr.rsvd import DEFAULT_OVERSAMPLING, adaptive_randomized_svd, randomized_svd_fixed

__all__ = ["SCALES", "EXPERIMENTS", "run", "mean_se"]

SCALES = {
    "table1": {
        "desk": dict(n=400, p=1000, d_star=20, replicates=10),
        "full": dict(n=2000, p=5000, d_star=50, replicates=10),
    },
    "rank-t": {
        "desk": dict(n=500, p=1250, d_range=(5, 25), replicates=30),
        "full": dict(n=2000, p=5000, d_range=(10, 50), replicates=50),
    },
    "xor": {
        "desk": dict(shapes=[(200, 400)], replicates=10, sigmas=[0.1, 0.2, 0.5, 1.0, 2.0]),
        "full": dict(shapes=[(1000, 200), (200, 1000)], replicates=20,
                     sigmas=[0.1, 0.2, 0.5, 1.0, 2.0]),
    },
    "latent-nlarge": {
        "desk": dict(n=1000, p=250, replicates=20),
        "full": dict(n=3000, p=500, replicates=20),
    },
    "latent-plarge": {
        "desk": dict(n=250, p=1000, replicates=20),
        "full": dict(n=500, p=3000, replicates=20),
    },
}

S2N = {"low": (0.3, 0.6), "high": (0.6, 0.9)}
LATENT_METHODS = ("sir", "rand.sir", "lsir", "rand.lsir", "pca", "rand.pca")
XOR_METHODS = ("sir", "lsir", "rand.lsir", "rand.proj", "oracle")


def mean_se(values):
    v = np.asarray(values, float)
    se = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def _map(fn, args, jobs):
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, args))
    return [fn(a) for a in args]


def _top_singular_values(X, k):
    if k < min(X.shape) // 4:
        s = svds(X, k=k, return_singular_vectors=False, random_state=0, tol=0)
        return np.sort(s)[::-1]
    return np.linalg.svd(X, compute_uv=False)[:k]


# ---------------------------------------------------------------------------
# singular value accuracy versus t


def _table1_rep(args):
    cfg, stream = args
    ds = simgen.gen_lowrank_noise(cfg["n"], cfg["p"], cfg["d_star"], cfg["kappa"],
                                  stream.child("data"), noise_var=cfg["noise_var"])
    ref = _top_singular_values(ds.X, cfg["d_star"])
    errs = []
    for t in cfg["t_values"]:
        res = randomized_svd_fixed(ds.X, cfg["d_star"], cfg["delta"], t, stream.child("rsvd", t))
        errs.append(simgen.singular_value_error(res.S, ref))
    return {"errors": errs}


def run_table1(scale="desk", seed=0, jobs=1, **overrides):
    """Percent singular-value error of the fixed-rank randomized SVD for t = 1..5."""
    cfg = dict(SCALES["table1"][scale], kappa=1.0, noise_var=1.0, delta=DEFAULT_OVERSAMPLING,
               t_values=[1, 2, 3, 4, 5])
    cfg.update(overrides)
    root = RngStream(seed).child("table1")
    reps = _map(_table1_rep, [(cfg, root.child(i)) for i in range(cfg["replicates"])], jobs)
    E = np.array([r["errors"] for r in reps])
    summary = []
    for j, t in enumerate(cfg["t_values"]):
        m, se = mean_se(E[:, j])
        summary.append({"t": t, "mean": m, "se": se})
    return {"experiment": "table1", "config": dict(cfg, scale=scale, seed=seed),
            "replicates": reps, "summary": summary}


# ---------------------------------------------------------------------------
# rank and power-count selection


def _rank_rep(args):
    cfg, kappa, stream = args
    lo, hi = cfg["d_range"]
    d = int(stream.child("rank").generator().integers(lo, hi + 1))
    ds = simgen.gen_lowrank_noise(cfg["n"], cfg["p"], d, kappa, stream.child("data"))
    res = adaptive_randomized_svd(ds.X, t_max=cfg["t_max"], d_max=d + cfg["d_slack"],
                                  delta=cfg["delta"], rng=stream.child("select"))
    return {"kappa": kappa, "d_star": d, "d_hat": int(res.rank_est), "t_star": int(res.power_iters),
            "bicv_curve": res.info["bicv_curve"]}


def run_rank_t(scale="desk", seed=0, jobs=1, **overrides):
    """Estimated versus true rank and the selected power count, for kappa = 1, 2."""
    cfg = dict(SCALES["rank-t"][scale], kappas=[1.0, 2.0], d_slack=30, t_max=10,
               delta=DEFAULT_OVERSAMPLING)
    cfg.update(overrides)
    root = RngStream(seed).child("rank-t")
    args = [(cfg, k, root.child(k, i)) for k in cfg["kappas"] for i in range(cfg["replicates"])]
    reps = _map(_rank_rep, args, jobs)
    summary = []
    for k in cfg["kappas"]:
        rows = [r for r in reps if r["kappa"] == k]
        d = np.array([r["d_star"] for r in rows])
        dh = np.array([r["d_hat"] for r in rows])
        ts = np.array([r["t_star"] for r in rows])
        top = d >= np.quantile(d, 2.0 / 3.0)
        summary.append({
            "kappa": k,
            "within2": float(np.mean(np.abs(dh - d) <= 2)),
            "mean_bias": float(np.mean(dh - d)),
            "top_tercile_bias": float(np.mean(dh[top] - d[top])),
            "median_t_star": float(np.median(ts)),
        })
    return {"experiment": "rank-t", "config": dict(cfg, scale=scale, seed=seed),
            "replicates": reps, "summary": summary}


# ---------------------------------------------------------------------------
# XOR classification


def _xor_k_values(n, clusters=10):
    size = n / clusters
    ks = list(range(max(1, round(0.1 * size)), max(1, round(0.3 * size)) + 1, 2))
    return ks, max(1, round(0.2 * size))


def _xor_rep(args):
    cfg, n, p, sigma, stream = args
    d = cfg["d_star"]
    train = simgen.gen_xor(n, p, d, sigma, cfg["pi"], stream.child("train"))
    test = simgen.gen_xor(n, p, d, sigma, cfg["pi"], stream.child("test"))
    ks, k_smooth = _xor_k_values(n)
    out = {"n": n, "p": p, "sigma": sigma}
    for method in XOR_METHODS:
        if method == "sir":
            model = sdr.fit_sir(train.X, train.y, H=None)
        elif method == "lsir":
            model = sdr.fit_lsir(train.X, train.y, H=None, k=k_smooth, r=d)
        elif method == "rand.lsir":
            model = sdr.fit_lsir(train.X, train.y, H=None, k=k_smooth, r=d, mode="randomized",
                                 d_max=min(d + 30, min(n, p) - cfg["delta"]), delta=cfg["delta"],
                                 rng=stream.child("rand.lsir"))
        if method == "rand.proj":
            G = qr_orthonormalize(gaussian_matrix(p, d, stream.child("rand.proj")), check_rank=False)
        elif method == "oracle":
            G = train.truth["basis"]
        else:
            G = model.G
        Z = (train.X - train.X.mean(axis=0)) @ G
        Zt = (test.X - test.X.mean(axis=0)) @ G
        accs = [simgen.accuracy(test.y, knn.knn_classify(Z, train.y, Zt, k)) for k in ks]
        out[method] = float(np.mean(accs))
    return out


def run_xor(scale="desk", seed=0, jobs=1, **overrides):
    """kNN accuracy on projections of XOR data over a noise sweep."""
    cfg = dict(SCALES["xor"][scale], d_star=10, pi=0.5, delta=DEFAULT_OVERSAMPLING)
    cfg.update(overrides)
    root = RngStream(seed).child("xor")
    args = [(cfg, n, p, s, root.child(n, p, s, i)) for (n, p) in cfg["shapes"]
            for s in cfg["sigmas"] for i in range(cfg["replicates"])]
    reps = _map(_xor_rep, args, jobs)
    summary = []
    for (n, p) in cfg["shapes"]:
        for s in cfg["sigmas"]:
            rows = [r for r in reps if r["n"] == n and r["p"] == p and r["sigma"] == s]
            entry = {"n": n, "p": p, "sigma": s}
            for m in XOR_METHODS:
                entry[m], entry[m + "_se"] = mean_se([r[m] for r in rows])
            summary.append(entry)
    return {"experiment": "xor", "config": dict(cfg, shapes=[list(x) for x in cfg["shapes"]],
                                                  scale=scale, seed=seed),
            "replicates": reps, "summary": summary}


# ---------------------------------------------------------------------------
# latent factor regression


def _fit_latent(method, X, y, cfg, stream):
    H, k, solver = cfg["H"], cfg["k"], cfg["solver"]
    if method == "sir":
        return sdr.fit_sir(X, y, H=H, r=1, solver=solver)
    if method == "rand.sir":
        return sdr.fit_sir(X, y, H=H, r=1, mode="randomized", d=1, rng=stream, solver=solver)
    if method == "lsir":
        return sdr.fit_lsir(X, y, H=H, k=k, r=1, solver=solver)
    if method == "rand.lsir":
        return sdr.fit_lsir(X, y, H=H, k=k, r=1, mode="randomized", d=1, rng=stream, solver=solver)
    if method == "pca":
        return sdr.fit_pca(X, r=1)
    if method == "rand.pca":
        return sdr.fit_pca(X, r=1, mode="randomized", rng=stream)
    raise ValueError(method)


def _latent_rep(args):
    cfg, regime, stream = args
    ds = simgen.gen_latent_factor(cfg["n"], cfg["p"], s2n_range=S2N[regime], rng=stream.child("data"))
    Xt, yt = simgen.latent_factor_sample(ds.truth, cfg["n"], stream.child("test"))
    out = {"regime": regime, "d_star": ds.truth["d_star"]}
    for method in LATENT_METHODS:
        model = _fit_latent(method, ds.X, ds.y, cfg, stream.child(method))
        mspe, r2 = simgen.mspe_r2(sdr.transform(model, ds.X), ds.y, sdr.transform(model, Xt), yt)
        out[method] = {"r2": r2, "mspe": mspe, "aedr": simgen.aedr(ds.truth["b_true"], model.G),
                       "t_star": int(model.t_star)}
    return out


def _run_latent(name, scale, seed, jobs, overrides):
    # directions restricted to range(Gamma): the exact pencil amplifies the
    # weak noise directions of X when psi^2 is small
    cfg = dict(SCALES[name][scale], H=10, k=10, regimes=["low", "high"], solver="restricted")
    cfg.update(overrides)
    root = RngStream(seed).child(name)
    args = [(cfg, g, root.child(g, i)) for g in cfg["regimes"] for i in range(cfg["replicates"])]
    reps = _map(_latent_rep, args, jobs)
    summary = []
    for g in cfg["regimes"]:
        rows = [r for r in reps if r["regime"] == g]
        for m in LATENT_METHODS:
            entry = {"regime": g, "method": m}
            for metric in ("r2", "mspe", "aedr"):
                entry[metric], entry[metric + "_se"] = mean_se([r[m][metric] for r in rows])
            summary.append(entry)
    return {"experiment": name, "config": dict(cfg, scale=scale, seed=seed),
            "replicates": reps, "summary": summary}


def run_latent_nlarge(scale="desk", seed=0, jobs=1, **overrides):
    """Latent factor regression with more samples than covariates."""
    return _run_latent("latent-nlarge", scale, seed, jobs, overrides)


def run_latent_plarge(scale="desk", seed=0, jobs=1, **overrides):
    """Latent factor regression with more covariates than samples."""
    return _run_latent("latent-plarge", scale, seed, jobs, overrides)


EXPERIMENTS = {
    "table1": run_table1,
    "rank-t": run_rank_t,
    "xor": run_xor,
    "latent-nlarge": run_latent_nlarge,
    "latent-plarge": run_latent_plarge,
}


def run(name, scale="desk", seed=0, jobs=1, **overrides):
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    if scale not in ("desk", "full"):
        raise ValueError("scale must be 'desk' or 'full'")
    return EXPERIMENTS[name](scale=scale, seed=seed, jobs=jobs, **overrides)
