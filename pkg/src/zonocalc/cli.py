"""Experiment driver: TOML configs in, JSON/CSV reports out.

Subcommands mirror the library layers: ``section`` estimates a zonoid
section, ``expect`` compares a Kac-Rice integral against the Monte Carlo
oracle, ``crofton`` checks curve Crofton formulas, ``inequality`` sweeps the
AF/BM family, ``simulate`` runs the oracle alone and ``algebra`` operates on
serialized zonotopes.  Every report embeds the config hash and seed; CSV
bodies are byte-stable for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from math import sqrt
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import algebra as za
from .fields import model_from_config
from .finsler import finsler_from_section, finsler_length
from .manifolds import builtin, sphere_arc, torus_line
from .rng import generator
from .sections import bernoulli_mixture, estimate_section, kac_rice_volume, pair_density
from .simulator import count_zeros_1d, count_zeros_2d, measure_zero_length_2d
from .zonotope import Zonotope, from_samples

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_SCHEMA = {
    "experiment": None,
    "seed": None,
    "manifold": {"name", "n", "nx", "ny", "nz", "n_theta", "n_phi", "a", "b"},
    "model": {"basis", "order", "degree", "lmax", "components", "law", "cov", "dof", "scale", "phi", "shift_std"},
    "model2": {"basis", "order", "degree", "lmax", "components", "law", "cov", "dof", "scale", "phi", "shift_std"},
    "estimate": {"n_samples", "stream"},
    "simulate": {"trials", "grid_n", "stream", "mode"},
    "expect": {"tolerance_se"},
    "crofton": {"curve", "length", "colatitude", "n_t", "start", "direction"},
    "inequality": {"kind", "seeds", "t", "n_samples", "pass_fraction"},
    "algebra": {"op", "inputs", "k"},
}


class ConfigError(Exception):
    def __init__(self, message: str, key: str = ""):
        super().__init__(message)
        self.key = key


def validate_config(doc: dict):
    if not isinstance(doc, dict):
        raise ConfigError("config must be a table")
    for key, value in doc.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config key {key!r}", key)
        allowed = _SCHEMA[key]
        if allowed is None:
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"config key {key!r} must be a table", key)
        for sub in value:
            if sub not in allowed:
                raise ConfigError(f"unknown config key {key}.{sub}", f"{key}.{sub}")
    if "seed" not in doc:
        raise ConfigError("config key 'seed' is mandatory", "seed")


def config_hash(doc: dict) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _build_manifold(doc: dict):
    man = dict(doc.get("manifold", {"name": "circle"}))
    name = man.pop("name", "circle")
    return builtin(name, **man)


def _write_report(out: Path, doc: dict):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        json.dump(doc, fh, indent=1, default=float)


def _write_csv(path: Path, header: list, rows: list, timestamp: str):
    with open(path, "w", newline="") as fh:
        fh.write(f"# generated {timestamp}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])


def _combined_verdict(pred, pred_se, mean, mc_se, tol):
    gap = abs(pred - mean)
    combined = sqrt(pred_se**2 + mc_se**2)
    return ("PASS" if gap <= tol * combined else "FAIL"), gap, combined


# -- experiments -------------------------------------------------------------

def _run_section(doc, out, seed, threads, dump):
    chart, rule = _build_manifold(doc)
    model = model_from_config(doc.get("model", {}), chart)
    est = dict(doc.get("estimate", {}))
    section = estimate_section(
        model, chart, rule, n_samples=int(est.get("n_samples", 2048)), seed=seed,
        stream=int(est.get("stream", 0)),
    )
    ts = time.strftime("%Y-%m-%dT%H:%M:%S")
    section.export_json(str(out / "section.json"))
    section.export_csv(str(out / "section.csv"), timestamp=ts)
    total, se = kac_rice_volume(section)
    return {"predicted_volume": total, "predicted_se": se, "nodes": section.n_nodes}, EXIT_OK


def _run_expect(doc, out, seed, threads, dump):
    chart, rule = _build_manifold(doc)
    model = model_from_config(doc.get("model", {}), chart)
    est = dict(doc.get("estimate", {}))
    sim = dict(doc.get("simulate", {}))
    tol = float(doc.get("expect", {}).get("tolerance_se", 3.0))
    section = estimate_section(
        model, chart, rule, n_samples=int(est.get("n_samples", 2048)), seed=seed,
        stream=int(est.get("stream", 0)),
    )
    pred, pred_se = kac_rice_volume(section)
    trials = int(sim.get("trials", 2000))
    grid_n = int(sim.get("grid_n", 256))
    mc_stream = int(sim.get("stream", 1))
    if chart.dim == 1:
        report = count_zeros_1d(model, chart, trials, seed, grid_n=grid_n, stream=mc_stream,
                                keep_trials=dump, threads=threads)
    elif model.k == 1:
        report = measure_zero_length_2d(model, chart, trials, seed, grid_n=grid_n,
                                        stream=mc_stream, keep_trials=dump, threads=threads)
    else:
        report = count_zeros_2d(model, chart, trials, seed, grid_n=grid_n, stream=mc_stream,
                                keep_trials=dump, threads=threads)
    verdict, gap, combined = _combined_verdict(pred, pred_se, report.mean, report.standard_error, tol)
    ts = time.strftime("%Y-%m-%dT%H:%M:%S")
    section.export_csv(str(out / "section.csv"), timestamp=ts)
    rows = [[i, float(section.delta[i]), float(section.delta_se[i])] for i in range(section.n_nodes)]
    _write_csv(out / "density.csv", ["node", "delta", "delta_se"], rows, ts)
    if dump and report.counts is not None:
        _write_csv(out / "trials.csv", ["trial", "count"],
                   [[i, float(v)] for i, v in enumerate(report.counts)], ts)
    result = {
        "predicted": pred,
        "predicted_se": pred_se,
        "mc_mean": report.mean,
        "mc_se": report.standard_error,
        "gap": gap,
        "combined_se": combined,
        "tolerance_se": tol,
        "verdict": verdict,
        "mc_warnings": report.warnings,
    }
    return result, EXIT_OK if verdict == "PASS" else EXIT_FAIL


def _run_crofton(doc, out, seed, threads, dump):
    chart, rule = _build_manifold(doc)
    model = model_from_config(doc.get("model", {}), chart)
    cro = dict(doc.get("crofton", {}))
    est = dict(doc.get("estimate", {}))
    sim = dict(doc.get("simulate", {}))
    tol = float(doc.get("expect", {}).get("tolerance_se", 3.0))
    kind = cro.get("curve", "equator")
    if chart.name == "sphere2":
        curve = sphere_arc(chart, float(cro.get("length", np.pi)), kind=kind,
                           colatitude=float(cro.get("colatitude", np.pi / 2)))
    elif chart.name.startswith("torus"):
        curve = torus_line(chart, cro.get("start", [0.1, 0.2]), cro.get("direction", [1.0, 0.0]))
    else:
        raise ConfigError(f"no stock curves for manifold {chart.name!r}", "crofton.curve")
    section = estimate_section(model, chart, rule, n_samples=int(est.get("n_samples", 1024)),
                               seed=seed, stream=int(est.get("stream", 0)))
    F = finsler_from_section(section)
    flen, flen_se = finsler_length(F, curve, n_t=int(cro.get("n_t", 64)))
    pred, pred_se = 2.0 * flen, 2.0 * flen_se
    report = count_zeros_1d(model, curve, int(sim.get("trials", 2000)), seed,
                            grid_n=int(sim.get("grid_n", 256)), stream=int(sim.get("stream", 1)),
                            keep_trials=dump, threads=threads)
    verdict, gap, combined = _combined_verdict(pred, pred_se, report.mean, report.standard_error, tol)
    ts = time.strftime("%Y-%m-%dT%H:%M:%S")
    t_rule = np.linspace(0.0, 1.0, 65)
    rows = []
    cum = 0.0
    for i, t in enumerate(t_rule[:-1]):
        v = np.asarray(curve.velocity(float(t)))
        p = np.asarray(curve.point(float(t)))
        v_on = chart.vector_frame(p[None, :])[0] @ v
        z = F.zonotope_at(p, key=4096 + i)
        fval = z.support(v_on)
        cum += fval / (len(t_rule) - 1)
        rows.append([float(t), float(fval), float(cum)])
    _write_csv(out / "curve_length.csv", ["t", "finsler_speed", "cumulative_length"], rows, ts)
    result = {
        "finsler_length": flen,
        "predicted_crossings": pred,
        "predicted_se": pred_se,
        "mc_mean": report.mean,
        "mc_se": report.standard_error,
        "verdict": verdict,
    }
    return result, EXIT_OK if verdict == "PASS" else EXIT_FAIL


def _run_inequality(doc, out, seed, threads, dump):
    ineq = dict(doc.get("inequality", {}))
    kind = ineq.get("kind", "af")
    seeds = int(ineq.get("seeds", 20))
    ts = time.strftime("%Y-%m-%dT%H:%M:%S")
    rows, holds = [], []
    if kind in ("af", "bm"):
        t = float(ineq.get("t", 0.5))
        for s in range(seeds):
            rng = generator(seed, 0xAF, s)
            K = from_samples(rng.standard_normal((6, 2)), mode="centered")
            L = from_samples(rng.standard_normal((6, 2)), mode="centered")
            if kind == "af":
                lhs, rhs, ok = za.af_inequality(K, L)
            else:
                lhs, rhs, ok = za.bm_inequality(K, L, t)
            rows.append([s, float(lhs), float(rhs), int(ok)])
            holds.append(ok)
        frac = float(np.mean(holds))
        verdict = "PASS" if frac == 1.0 else "FAIL"
    elif kind in ("kraf", "krbm"):
        chart, rule = _build_manifold(doc)
        model_doc = doc.get("model", {"basis": "trig2d", "order": 1})
        n_samples = int(ineq.get("n_samples", 512))
        t = float(ineq.get("t", 0.5))
        node_ok, node_total = 0, 0
        for s in range(seeds):
            model1 = model_from_config(model_doc, chart)
            model2 = model_from_config(doc.get("model2", model_doc), chart)
            secs = [
                estimate_section(model1, chart, rule, n_samples, seed, stream=16 * s + j)
                for j in range(2)
            ]
            secs2 = [
                estimate_section(model2, chart, rule, n_samples, seed, stream=16 * s + 8 + j)
                for j in range(2)
            ]
            if kind == "kraf":
                d12, se12 = pair_density(secs[0], secs2[0])
                d11, se11 = pair_density(secs[0], secs[1])
                d22, se22 = pair_density(secs2[0], secs2[1])
                rhs = np.sqrt(np.maximum(d11 * d22, 0.0))
                denom = np.maximum(rhs, 1e-12)
                rhs_se = 0.5 * denom * np.sqrt((se11 / np.maximum(d11, 1e-12)) ** 2 +
                                               (se22 / np.maximum(d22, 1e-12)) ** 2)
                slack = 3.0 * np.sqrt(se12**2 + rhs_se**2)
                ok = d12 >= rhs - slack
            else:
                mix = bernoulli_mixture(secs[0], secs2[0], t)
                mix2 = bernoulli_mixture(secs[1], secs2[1], t)
                dt, set_ = pair_density(mix, mix2)
                d0, se0 = pair_density(secs[0], secs[1])
                d1, se1 = pair_density(secs2[0], secs2[1])
                rhs = np.maximum(d0, 1e-12) ** (1 - t) * np.maximum(d1, 1e-12) ** t
                rhs_se = rhs * np.sqrt(((1 - t) * se0 / np.maximum(d0, 1e-12)) ** 2 +
                                       (t * se1 / np.maximum(d1, 1e-12)) ** 2)
                slack = 3.0 * np.sqrt(set_**2 + rhs_se**2)
                ok = dt >= rhs - slack
            node_ok += int(ok.sum())
            node_total += ok.size
            rows.append([s, int(ok.sum()), int(ok.size)])
        frac = node_ok / max(node_total, 1)
        verdict = "PASS" if frac >= float(ineq.get("pass_fraction", 0.99)) else "FAIL"
    else:
        raise ConfigError(f"unknown inequality kind {kind!r}", "inequality.kind")
    _write_csv(out / "inequality.csv", ["case", "lhs_or_ok", "rhs_or_total", "holds"] if rows and len(rows[0]) == 4 else ["seed", "ok_nodes", "total_nodes"], rows, ts)
    return {"kind": kind, "fraction_holds": frac, "verdict": verdict}, (
        EXIT_OK if verdict == "PASS" else EXIT_FAIL
    )


def _run_simulate(doc, out, seed, threads, dump):
    chart, rule = _build_manifold(doc)
    model = model_from_config(doc.get("model", {}), chart)
    sim = dict(doc.get("simulate", {}))
    trials = int(sim.get("trials", 2000))
    grid_n = int(sim.get("grid_n", 256))
    stream = int(sim.get("stream", 1))
    mode = sim.get("mode", "count")
    if chart.dim == 1:
        report = count_zeros_1d(model, chart, trials, seed, grid_n=grid_n, mode=mode,
                                stream=stream, keep_trials=dump, threads=threads)
    elif model.k == 1:
        report = measure_zero_length_2d(model, chart, trials, seed, grid_n=grid_n,
                                        stream=stream, keep_trials=dump, threads=threads)
    else:
        report = count_zeros_2d(model, chart, trials, seed, grid_n=grid_n, stream=stream,
                                keep_trials=dump, threads=threads)
    ts = time.strftime("%Y-%m-%dT%H:%M:%S")
    if dump and report.counts is not None:
        _write_csv(out / "trials.csv", ["trial", "count"],
                   [[i, float(v)] for i, v in enumerate(report.counts)], ts)
    return {"report": report.to_json_dict()}, EXIT_OK


def _run_algebra(doc, out, seed, threads, dump):
    alg = dict(doc.get("algebra", {}))
    op = alg.get("op")
    inputs = [Zonotope.loads(Path(p).read_text()) for p in alg.get("inputs", [])]
    if op == "mixed_volume":
        value = za.mixed_volume(inputs)
        result = {"op": op, "value": value}
    elif op == "length":
        result = {"op": op, "value": [K.length() for K in inputs]}
    elif op == "intrinsic":
        k = int(alg.get("k", 1))
        result = {"op": op, "value": [za.intrinsic_volume(K, k) for K in inputs]}
    elif op == "wedge":
        if len(inputs) != 2:
            raise ConfigError("wedge needs exactly two inputs", "algebra.inputs")
        prod = za.wedge_zonotopes(inputs[0], inputs[1])
        (out / "wedge.json").write_text(prod.dumps())
        result = {"op": op, "length": prod.length(), "output": str(out / "wedge.json")}
    else:
        raise ConfigError(f"unknown algebra op {op!r}", "algebra.op")
    return result, EXIT_OK


_EXPERIMENTS = {
    "section": _run_section,
    "expect": _run_expect,
    "crofton": _run_crofton,
    "inequality": _run_inequality,
    "simulate": _run_simulate,
    "algebra": _run_algebra,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="zonocalc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default="out", help="report directory")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--dump-trials", action="store_true")
    try:
        args = parser.parse_args(argv)
    except SystemExit:
        return EXIT_CONFIG
    try:
        with open(args.config, "rb") as fh:
            doc = tomllib.load(fh)
        validate_config(doc)
        declared = doc.get("experiment")
        if declared is not None and declared != args.command:
            raise ConfigError(
                f"config declares experiment {declared!r} but {args.command!r} was invoked",
                "experiment",
            )
    except (OSError, tomllib.TOMLDecodeError, ConfigError) as exc:
        key = getattr(exc, "key", "")
        print(json.dumps({"error": "config", "message": str(exc), "key": key}), file=sys.stderr)
        return EXIT_CONFIG
    seed = args.seed if args.seed is not None else int(doc["seed"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result, code = _EXPERIMENTS[args.command](doc, out, seed, args.threads, args.dump_trials)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc), "key": exc.key}), file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(json.dumps({"error": "numerical", "message": str(exc)}), file=sys.stderr)
        _write_report(out, {"error": str(exc), "config_hash": config_hash(doc), "seed": seed})
        return EXIT_NUMERICAL
    report = {
        "experiment": args.command,
        "config_hash": config_hash(doc),
        "seed": seed,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "result": result,
    }
    _write_report(out, report)
    print(json.dumps({k: report[k] for k in ("experiment", "config_hash", "seed", "result")},
                     default=float))
    return code


if __name__ == "__main__":
    sys.exit(main())
