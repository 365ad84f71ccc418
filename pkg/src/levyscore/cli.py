"""Command-line interface.

    levyscore <command> --config cfg.toml [--seed N] [--threads N] [--out DIR]

Commands: simulate, density, score, fisher, mle, crlb, validate.
CSV outputs start with '#'-prefixed metadata lines (config hash, seed,
version, command); JSON reports embed the same fields.  With a fixed
config and seed, outputs are byte-identical for any --threads value.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .config import Config, load_config
from .drifts import validate_drift
from .estimators import (Engine, estimate_density, estimate_fisher_onestep,
                         estimate_score, pool_weights, sample_pool)
from .inference import crlb_experiment, mle, simulate_observations
from .levy import require_assumption_h
from .oracles import (duality_check, fd_variation_check, girsanov_mc_check,
                      integral_formula_check)
from .weights import compute_weights

__all__ = ["main"]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def _meta(cfg: Config, args, command: str) -> dict:
    # deliberately excludes thread count: outputs must not depend on it
    return {"command": command, "config_hash": cfg.hash, "seed": args.seed,
            "version": __version__}


def _out_path(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _write_csv(path: str, meta: dict, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in meta.items():
            fh.write(f"# {k} = {v}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (np.floating, float)):
        return repr(float(v))
    if isinstance(v, (np.integer, int, np.bool_, bool)):
        return int(v)
    return v


def _write_json(path: str, meta: dict, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump({"meta": meta, **_jsonable(payload)}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _engine(cfg: Config, horizon: float) -> Engine:
    sim = cfg["simulation"]
    model = cfg.build_model()
    spec = cfg.build_spec()
    require_assumption_h(model, spec, sim["assumption_policy"])
    return Engine.build(cfg.build_drift(), model, spec, horizon=horizon,
                        activity_target=sim["activity_target"],
                        eps_trunc=sim["eps_trunc"])


def _pool(cfg: Config, eng: Engine, args, labels, stack="full", n=None,
          horizon=None, theta=None):
    sim = cfg["simulation"]
    return sample_pool(
        eng, sim["theta"] if theta is None else theta, sim["x0"],
        sim["horizon"] if horizon is None else horizon,
        sim["n_paths"] if n is None else n,
        args.seed, labels, stack=stack, step=sim["step"], chunk=sim["chunk"],
        threads=args.threads)


def _density_grid(cfg: Config) -> np.ndarray:
    d = cfg["density"]
    if d["y"] is not None:
        return np.asarray(d["y"], dtype=float)
    return np.linspace(d["y_lo"], d["y_hi"], d["y_n"])


def cmd_simulate(cfg: Config, args) -> int:
    sim = cfg["simulation"]
    eng = _engine(cfg, sim["horizon"])
    pool = _pool(cfg, eng, args, ("simulate",))
    ws = compute_weights(pool, sim["dx_floor"])
    cols = ["path", "x", "cal_e", "dx", "d2x", "d3x", "dth_x", "d_dth_x",
            "delta1", "d_delta1", "valid"]
    rows = zip(range(ws.n_total), pool["x"], pool["cal_e"], pool["dx"],
               pool["d2x"], pool["d3x"], pool["dth_x"], pool["d_dth_x"],
               pool["delta1"], pool["d_delta1"], ws.valid)
    path = _out_path(args, "simulate.csv")
    _write_csv(path, _meta(cfg, args, "simulate"), cols, rows)
    print(f"simulate: {ws.n_total} paths, {ws.n_dropped} dropped -> {path}")
    return 0


def cmd_density(cfg: Config, args) -> int:
    sim = cfg["simulation"]
    rep = cfg["density"]["rep"]
    eng = _engine(cfg, sim["horizon"])
    stack = "density" if rep == "1" else "full"
    pool = _pool(cfg, eng, args, ("density",), stack=stack)
    ws = compute_weights(pool, sim["dx_floor"])
    ys = _density_grid(cfg)
    header = ["y", "p_rep1", "stderr_rep1", "p_rep2", "stderr_rep2",
              "n_used", "n_dropped"]
    e1 = estimate_density(ws, ys, sim["x0"], rep=1) if rep in ("1", "both") else None
    e2 = estimate_density(ws, ys, sim["x0"], rep=2) if rep in ("2", "both") else None
    rows = []
    for i, y in enumerate(ys):
        a = e1[i] if e1 else None
        b = e2[i] if e2 else None
        some = a or b
        rows.append([y, a.value if a else "", a.stderr if a else "",
                     b.value if b else "", b.stderr if b else "",
                     some.n_used, some.n_dropped])
    path = _out_path(args, "density.csv")
    _write_csv(path, _meta(cfg, args, "density"), header, rows)
    print(f"density: {len(ys)} points (rep={rep}) -> {path}")
    return 0


def cmd_score(cfg: Config, args) -> int:
    sim = cfg["simulation"]
    sc = cfg["score"]
    eng = _engine(cfg, sim["horizon"])
    pool = _pool(cfg, eng, args, ("score",))
    ws = compute_weights(pool, sim["dx_floor"])
    ys = (np.asarray(sc["y"], dtype=float) if sc["y"] is not None
          else _density_grid(cfg))
    ests = estimate_score(ws, ys, bandwidth=sc["bandwidth"], ess_min=sc["ess_min"])
    header = ["y", "score", "stderr", "ess", "bandwidth", "ess_low"]
    rows = [[y, e.value, e.stderr, e.flags["ess"], e.flags["bandwidth"],
             bool(e.flags.get("ess_low", False))] for y, e in zip(ys, ests)]
    path = _out_path(args, "score.csv")
    _write_csv(path, _meta(cfg, args, "score"), header, rows)
    n_low = sum(1 for e in ests if e.flags.get("ess_low"))
    print(f"score: {len(ys)} points, {n_low} low-ess -> {path}")
    return 0


def cmd_fisher(cfg: Config, args) -> int:
    sim = cfg["simulation"]
    fc = cfg["fisher"]
    eng = _engine(cfg, sim["horizon"])
    pool = _pool(cfg, eng, args, ("fisher", "pool"))
    ws = compute_weights(pool, sim["dx_floor"])
    draws = sample_pool(eng, sim["theta"], sim["x0"], sim["horizon"],
                        fc["n_draws"], args.seed + fc["draw_seed_offset"],
                        ("fisher", "draws"), stack="plain", step=sim["step"],
                        chunk=sim["chunk"], threads=args.threads)["x"]
    est = estimate_fisher_onestep(ws, draws, bandwidth=fc["bandwidth"])
    payload = {"info": est.value, "stderr": est.stderr, "n_draws": est.n_used,
               "n_dropped": est.n_dropped,
               "ess_low_count": est.flags["ess_low_count"]}
    path = _out_path(args, "fisher.json")
    _write_json(path, _meta(cfg, args, "fisher"), payload)
    print(f"fisher: info={est.value:.6g} +- {est.stderr:.2g} -> {path}")
    return 0


def cmd_mle(cfg: Config, args) -> int:
    sim = cfg["simulation"]
    mc = cfg["mle"]
    eng = _engine(cfg, mc["delta"])
    obs_theta = mc["obs_theta"] if mc["obs_theta"] is not None else sim["theta"]
    obs = simulate_observations(eng, obs_theta, sim["x0"], mc["n_obs"],
                                mc["delta"], args.seed, step=sim["step"])
    rep = mle(eng, obs, mc["n_mc"], args.seed, tol=mc["tol"],
              n_scan=mc["n_scan"], step=sim["step"], threads=args.threads,
              p_floor=mc["p_floor"])
    obs_path = _out_path(args, "observations.csv")
    _write_csv(obs_path, _meta(cfg, args, "mle"), ["j", "t", "x"],
               [[j, j * mc["delta"], x] for j, x in enumerate(obs.x)])
    payload = {"theta_hat": rep.theta_hat, "loglik": rep.loglik,
               "n_eval": rep.n_eval, "flags": rep.flags, "curve": rep.curve,
               "obs_theta": obs_theta, "n_obs": mc["n_obs"], "delta": mc["delta"],
               "n_mc": mc["n_mc"]}
    path = _out_path(args, "mle.json")
    _write_json(path, _meta(cfg, args, "mle"), payload)
    extra = f" flags={rep.flags}" if rep.flags else ""
    print(f"mle: theta_hat={rep.theta_hat:.4f} ({rep.n_eval} evals){extra} -> {path}")
    return 0


def cmd_crlb(cfg: Config, args) -> int:
    sim = cfg["simulation"]
    mc = cfg["mle"]
    cr = cfg["crlb"]
    eng = _engine(cfg, mc["delta"])
    theta0 = mc["obs_theta"] if mc["obs_theta"] is not None else sim["theta"]
    report = crlb_experiment(
        eng, theta0, sim["x0"], mc["n_obs"], mc["delta"], mc["n_mc"], args.seed,
        cr["n_replicas"], n_bias_pairs=cr["n_bias_pairs"],
        dtheta_bias=cr["dtheta_bias"], n_outer=cr["n_outer"],
        n_mc_fisher=cr["n_mc_fisher"], tol=mc["tol"], n_scan=mc["n_scan"],
        step=sim["step"], threads=args.threads, p_floor=mc["p_floor"])
    payload = {"theta_true": theta0, **report}
    path = _out_path(args, "crlb.json")
    _write_json(path, _meta(cfg, args, "crlb"), payload)
    print(f"crlb: mse={report['mse']:.4f} bound={report['bound']:.4f} "
          f"ratio={report['mse_over_bound']:.2f} -> {path}")
    return 0


def cmd_validate(cfg: Config, args) -> int:
    sim = cfg["simulation"]
    model = cfg.build_model()
    spec = cfg.build_spec()
    drift = cfg.build_drift()
    from .levy import check_assumption_h
    h_rep = check_assumption_h(model, spec)
    d_rep = validate_drift(drift)
    eng = Engine.build(drift, model, spec, horizon=sim["horizon"],
                       activity_target=sim["activity_target"],
                       eps_trunc=sim["eps_trunc"])
    theta, x0, horizon = sim["theta"], sim["x0"], sim["horizon"]
    fd = fd_variation_check(eng, theta, x0, horizon, 50, args.seed, step=1e-3)
    fd.pop("base")
    if_rep = integral_formula_check(eng, theta, x0, horizon, 200, args.seed, step=2e-3)
    pool = _pool(cfg, eng, args, ("validate",), n=20_000)
    ws = compute_weights(pool, sim["dx_floor"])
    dual = duality_check(ws)
    gir = girsanov_mc_check(eng, theta, x0, horizon, 20_000, args.seed, c=1e-2,
                            step=sim["step"])
    checks = {
        "assumption_h": bool(h_rep["passed"]),
        "drift_partials": bool(d_rep["passed"]),
        "fd_variations": all(fd[k] < t for k, t in
                             (("dx", 1e-4), ("d2x", 1e-3), ("d3x", 1e-3),
                              ("dth_x", 1e-6), ("d_dth_x", 1e-3))),
        "integral_formulas": all(if_rep[k] < 1e-8 for k in
                                 ("x", "dx", "d2x", "d3x", "dth_x", "d_dth_x")),
        "duality": all(abs(v["z"]) < 4 for v in dual.values()),
        "tilt": abs(gir["z_kappa"]) < 4 and abs(gir["z_change_of_vars"]) < 4
                and gir["corr_linearisation"] > 0.999,
    }
    payload = {"checks": checks, "assumption_h": h_rep, "drift": d_rep,
               "fd_variations": fd, "integral_formulas": if_rep,
               "duality": dual, "tilt": gir,
               "passed": all(checks.values())}
    path = _out_path(args, "validate.json")
    _write_json(path, _meta(cfg, args, "validate"), payload)
    for name, ok in checks.items():
        print(f"validate: {name}: {'ok' if ok else 'FAIL'}")
    print(f"validate -> {path}")
    return 0 if all(checks.values()) else 1


_COMMANDS = {
    "simulate": cmd_simulate, "density": cmd_density, "score": cmd_score,
    "fisher": cmd_fisher, "mle": cmd_mle, "crlb": cmd_crlb,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="levyscore",
                                 description="Monte Carlo density, score and "
                                             "information estimates for "
                                             "jump-driven diffusions")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", "-c", required=True, help="TOML configuration")
        p.add_argument("--seed", type=int, default=None,
                       help="override run.seed")
        p.add_argument("--threads", type=int, default=None,
                       help="override run.threads")
        p.add_argument("--out", default=None, help="override run.out directory")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    run = cfg["run"]
    args.seed = run["seed"] if args.seed is None else args.seed
    args.threads = run["threads"] if args.threads is None else args.threads
    args.out = run["out"] if args.out is None else args.out
    if args.seed < 0 or args.threads < 1:
        print("error: seed must be >= 0 and threads >= 1", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](cfg, args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
