"""Command-line surface: config ingestion, mode dispatch, result emission.

Configs are YAML mappings; ``--set a.b.c=value`` overrides scalar leaves.
Result documents are JSON (floats round-trip exactly) carrying a schema
version and the fully resolved configuration.  Exit codes: 0 success,
2 infeasible constraints, 3 certification failure, 4 config error.
"""

import argparse
import json
import os
import sys
from dataclasses import asdict

import numpy as np
import yaml

from .channel import ChannelSpec, ConstraintSet, EhModel, HpaModel, normalize_spec
from .errors import (AccuracyError, CertificationError, ConfigError,
                     ContractError, DomainError, InfeasibleError)
from .infometrics import (ExtendedDistribution, MassPointDistribution,
                          average_energy, average_power, mutual_information,
                          rate_bits)
from .montecarlo import SimConfig, empirical_energy, empirical_mi
from .region import RegionCurve, CapacityPoint, trace_region
from .shannon import solve_extended, solve_onoff
from .solver import SolveOptions, build_grid, prune_support, solve_ask, solve_weights
from .verify import kkt_check, kkt_check_extended

SCHEMA_VERSION = 1
MODES = ("solve", "region", "onoff", "extended", "ask", "verify", "mc")
_OUT_DIR_ENV = "SWIPTCAP_OUT_DIR"


def load_config(path):
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    return raw


def apply_overrides(raw, overrides):
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        key, _, val = item.partition("=")
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {key!r} crosses a scalar")
        leaf = parts[-1]
        if isinstance(node.get(leaf), (dict, list)):
            raise ConfigError(f"override {key!r} targets a non-scalar leaf")
        node[leaf] = yaml.safe_load(val)
    return raw


def _materialize(raw):
    """Validate the raw mapping into model objects."""
    try:
        mode = raw.get("mode")
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
        hpa = HpaModel(**raw.get("hpa", {}))
        eh = EhModel(**raw.get("eh", {}))
        spec = ChannelSpec(**raw.get("channel", {}))
        cs_raw = dict(raw.get("constraints", {}))
        states = cs_raw.pop("states", None)
        if states is None:
            raise ConfigError("constraints.states is required")
        states = tuple(_state_pair(s) for s in states)
        constraints = ConstraintSet(states=states, **cs_raw)
        opts = SolveOptions(**raw.get("solve", {}))
    except ConfigError:
        raise
    except (TypeError, DomainError, ContractError, ValueError) as exc:
        raise ConfigError(str(exc))
    if spec.sigma1_sq != 1.0 or spec.sigma2_sq != 1.0:
        constraints, report = normalize_spec(spec, constraints)
        eh = EhModel(b=eh.b, h2=eh.h2 / report.amplitude_scale)
    resolved = dict(raw)
    resolved["constraints"] = asdict(constraints)
    resolved["hpa"], resolved["eh"] = asdict(hpa), asdict(eh)
    resolved["solve"] = asdict(opts)
    resolved.setdefault("seed", 20260801)
    resolved.setdefault("threads", 1)
    return mode, hpa, eh, constraints, opts, resolved


def _state_pair(s):
    if isinstance(s, dict):
        return (s["peak"], s["prob"])
    if isinstance(s, (list, tuple)) and len(s) == 2:
        return (s[0], s[1])
    raise ConfigError(f"state entry {s!r} must be [peak, prob]")


def _config_dist(raw, peak):
    d = raw.get("distribution")
    if not isinstance(d, dict) or "locations" not in d or "weights" not in d:
        raise ConfigError("this mode needs distribution.locations/weights")
    try:
        return MassPointDistribution(np.asarray(d["locations"], dtype=float),
                                     np.asarray(d["weights"], dtype=float),
                                     peak=float(d.get("peak", peak)))
    except (DomainError, ContractError, ValueError) as exc:
        raise ConfigError(f"bad distribution: {exc}")


def _dist_doc(dist):
    if isinstance(dist, ExtendedDistribution):
        return dict(type="extended", points=dist.points.tolist(),
                    weights=dist.weights.tolist(),
                    states=[list(s) for s in dist.states])
    return dict(type="mass_points", locations=dist.locations.tolist(),
                weights=dist.weights.tolist(), peak=dist.peak)


def _doc_from_result(result, report=None):
    doc = dict(rate_nats=result.rate, rate_bits=rate_bits(result.rate),
               power=result.power, energy=result.energy,
               lambda1=result.lam1, lambda2=result.lam2,
               duality_gap=result.gap, iterations=result.iterations,
               distribution=_dist_doc(result.distribution))
    if report is not None:
        doc["kkt"] = dict(verdict=bool(report.verdict),
                          max_violation=report.max_violation,
                          max_support_residual=report.max_support_residual,
                          lambda1=report.lam1, lambda2=report.lam2,
                          c_value=report.c_value, tol=report.tol)
    return doc


def emit_curve(curve, path, fmt="tabular"):
    """Write a region curve; tabular CSV or structured JSON (lossless)."""
    if not curve.points:
        raise ContractError("refusing to emit an empty curve")
    if fmt == "tabular":
        lines = ["e_req,rate_nats,rate_bits,energy,lambda1,lambda2,kkt_ok"]
        for p in curve.points:
            lines.append(",".join([
                f"{p.e_req:.12g}", f"{p.rate_nats:.12g}", f"{p.rate_bits:.12g}",
                f"{p.energy:.12g}", f"{p.lam1:.12g}", f"{p.lam2:.12g}",
                "true" if p.kkt_ok else "false"]))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    elif fmt == "structured":
        doc = dict(schema_version=SCHEMA_VERSION, config=curve.config,
                   points=[dict(e_req=p.e_req, rate_nats=p.rate_nats,
                                rate_bits=p.rate_bits, energy=p.energy,
                                power=p.power, lambda1=p.lam1, lambda2=p.lam2,
                                kkt_ok=p.kkt_ok, wall_clock=p.wall_clock,
                                gap=p.gap,
                                distribution=_dist_doc(p.distribution))
                           for p in curve.points])
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)
    else:
        raise ConfigError(f"unknown curve format {fmt!r}")
    return path


def load_curve(path):
    """Re-load a structured curve file; floats round-trip bit-exactly."""
    with open(path) as fh:
        doc = json.load(fh)
    points = []
    for p in doc["points"]:
        d = p["distribution"]
        if d["type"] == "extended":
            dist = ExtendedDistribution(np.asarray(d["points"]),
                                        np.asarray(d["weights"]),
                                        tuple(tuple(s) for s in d["states"]))
        else:
            dist = MassPointDistribution(np.asarray(d["locations"]),
                                         np.asarray(d["weights"]), d["peak"])
        points.append(CapacityPoint(
            e_req=p["e_req"], rate_nats=p["rate_nats"],
            rate_bits=p["rate_bits"], energy=p["energy"], power=p["power"],
            lam1=p["lambda1"], lam2=p["lambda2"], kkt_ok=p["kkt_ok"],
            wall_clock=p["wall_clock"], distribution=dist, gap=p["gap"]))
    return RegionCurve(points=points, config=doc.get("config", {}))


def _sweep(raw, key, default=None, required=False):
    sweep = raw.get("sweep", {}) or {}
    if required and key not in sweep:
        raise ConfigError(f"sweep.{key} is required for this mode")
    return sweep.get(key, default)


def run(config_path, overrides=(), out_dir=None):
    """Execute a config; returns the process exit status."""
    try:
        raw = apply_overrides(load_config(config_path), list(overrides))
        mode, hpa, eh, constraints, opts, resolved = _materialize(raw)
        out = out_dir or os.environ.get(_OUT_DIR_ENV) \
            or raw.get("output", {}).get("dir", ".")
        basename = raw.get("output", {}).get("basename", "run")
        formats = raw.get("output", {}).get("formats", ["structured"])
        os.makedirs(out, exist_ok=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4

    try:
        payload, certified = _dispatch(mode, raw, hpa, eh, constraints, opts,
                                       resolved, out, basename, formats)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except (CertificationError, AccuracyError) as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return 3

    doc = dict(schema_version=SCHEMA_VERSION, mode=mode, config=resolved,
               result=payload)
    doc_path = os.path.join(out, f"{basename}.json")
    with open(doc_path, "w") as fh:
        json.dump(doc, fh, indent=1)
    print(doc_path)
    return 0 if certified else 3


def _dispatch(mode, raw, hpa, eh, constraints, opts, resolved, out, basename,
              formats):
    check_tol = _sweep(raw, "check_tol", 1e-4)
    if mode == "solve":
        grid = build_grid(constraints.peak, opts.dx)
        res = prune_support(solve_weights(grid, constraints, hpa, eh, opts))
        rep = kkt_check(res, constraints, hpa, eh, check_step=opts.dx / 10,
                        tol=check_tol)
        return _doc_from_result(res, rep), rep.verdict

    if mode == "ask":
        n_max = _sweep(raw, "n_max", required=True)
        grid = build_grid(constraints.peak, opts.dx)
        res = prune_support(solve_ask(grid, constraints, hpa, eh, n_max, opts))
        rep = kkt_check(res, constraints, hpa, eh, check_step=opts.dx / 10,
                        tol=check_tol)
        # cardinality-limited solutions are generally not globally optimal;
        # report the certificate but do not gate the exit status on it
        return _doc_from_result(res, rep), True

    if mode == "extended":
        res = prune_support(solve_extended(constraints.states, constraints,
                                           hpa, eh, opts))
        rep = kkt_check_extended(res, constraints.states, constraints, hpa,
                                 eh, check_step=opts.dx / 10, tol=check_tol)
        return _doc_from_result(res, rep), rep.verdict

    if mode == "onoff":
        sect = raw.get("onoff") or {}
        if "a2" not in sect or "p2" not in sect:
            raise ConfigError("onoff mode needs onoff.a2 and onoff.p2")
        res = prune_support(solve_onoff(sect["a2"], sect["p2"], constraints,
                                        hpa, eh, opts))
        states = ((0.0, 1.0 - sect["p2"]), (float(sect["a2"]), sect["p2"]))
        rep = kkt_check_extended(res, states, constraints, hpa, eh,
                                 check_step=opts.dx / 10, tol=check_tol)
        return _doc_from_result(res, rep), rep.verdict

    if mode == "region":
        n_points = _sweep(raw, "n_points", 8)
        curve = trace_region(constraints, hpa, eh, n_points, opts)
        files = {}
        if "tabular" in formats:
            files["tabular"] = emit_curve(
                curve, os.path.join(out, f"{basename}.csv"), "tabular")
        if "structured" in formats:
            files["structured"] = emit_curve(
                curve, os.path.join(out, f"{basename}_curve.json"),
                "structured")
        ok = all(p.kkt_ok for p in curve.points)
        summary = dict(n_points=len(curve.points), files=files,
                       e_req=[p.e_req for p in curve.points],
                       rate_nats=[p.rate_nats for p in curve.points],
                       all_certified=ok)
        return summary, ok

    if mode == "verify":
        dist = _config_dist(raw, constraints.peak)
        power = average_power(dist)
        energy = average_energy(dist, hpa, eh)
        if power > constraints.avg_power + 1e-9:
            raise InfeasibleError("distribution violates the power cap",
                                  constraint="power")
        if energy < constraints.e_req - 1e-9:
            raise InfeasibleError("distribution misses the energy floor",
                                  constraint="energy")
        rep = kkt_check(dist, constraints, hpa, eh, tol=check_tol)
        doc = dict(rate_nats=mutual_information(dist, hpa),
                   power=power, energy=energy,
                   kkt=dict(verdict=bool(rep.verdict),
                            max_violation=rep.max_violation,
                            max_support_residual=rep.max_support_residual,
                            lambda1=rep.lam1, lambda2=rep.lam2))
        return doc, rep.verdict

    if mode == "mc":
        dist = _config_dist(raw, constraints.peak)
        n = int((raw.get("mc") or {}).get("n", 10**6))
        cfg = SimConfig(n=n, seed=int(resolved["seed"]), hpa=hpa, eh=eh)
        mi_hat, mi_se = empirical_mi(dist, hpa, cfg)
        en_hat, en_se = empirical_energy(dist, cfg)
        doc = dict(mi_estimate=mi_hat, mi_stderr=mi_se,
                   mi_analytic=mutual_information(dist, hpa),
                   energy_estimate=en_hat, energy_stderr=en_se,
                   energy_analytic=average_energy(dist, hpa, eh))
        return doc, True

    raise ConfigError(f"unhandled mode {mode!r}")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="swiptcap",
        description="Capacity-achieving input distributions and "
                    "information-energy capacity regions for the "
                    "Rayleigh-fading wireless-power channel.")
    parser.add_argument("config", help="YAML run configuration")
    parser.add_argument("--set", dest="overrides", action="append",
                        default=[], metavar="KEY=VALUE",
                        help="override a scalar config leaf (repeatable)")
    parser.add_argument("--out-dir", default=None,
                        help=f"output directory (or ${_OUT_DIR_ENV})")
    args = parser.parse_args(argv)
    return run(args.config, overrides=args.overrides, out_dir=args.out_dir)


if __name__ == "__main__":
    sys.exit(main())
