"""``snowlab <verb> [flags]``: reproducible experiments with JSON reports.

Exit status: 0 on success, 2 when a checked inequality is violated, 1 on
input or configuration errors (with a JSON error payload on stderr).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import configure_threads
from .assouad import (
    PsiFamily,
    certify_window,
    lower_witness,
    sample_pairs,
    sample_sparse_pairs,
    truncated_sums,
    verify_real,
    verify_seq,
)
from .errors import ConfigError, SnowlabError
from .generators import random_step_function
from .invariants import scaling_law_check, space_enflo, space_roundness
from .lp_spaces import dist_Lp, indicator_embed, l2_distance_sq
from .mendel_naor import kernel_distance, mn_isometry_check, normalizer
from .metric_core import PointMap, distortion, load_matrix, moduli, snowflake
from .serialization import dumps, encode

OK, INPUT_ERROR, VIOLATION = 0, 1, 2


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


# name -> (converter, default); a default of None means "required" for matrix
# paths and "absent" for the optional ones listed in OPTIONAL
_WINDOW = {
    "radius": (float, 10.0),
    "min_gap": (float, 2.0 ** -10),
    "eps": (float, 1e-6),
}
_SCAN = {"pcap": (float, 64.0), "tol": (float, 1e-9), "grid": (int, 64)}

PARAMS: dict[str, dict] = {
    "snowflake-verify": {"p": (float, 1.0), "q": (float, 2.0), **_WINDOW, "pairs": (int, 10_000)},
    "embed-seq-verify": {
        "p": (float, 0.5), "q": (float, 1.0), **_WINDOW,
        "pairs": (int, 1000), "nnz": (int, 10), "length": (int, 100),
    },
    "mn-check": {"p": (float, 1.0), "q": (float, 2.0), "tol": (float, 1e-10), "pairs": (int, 100), "cells": (int, 4)},
    "roundness": {"matrix": (str, None), **_SCAN},
    "enflo": {"matrix": (str, None), "nmax": (int, 2), "budget": (int, 100_000), **_SCAN},
    "scaling-check": {"matrix": (str, None), "s": (_floats, [0.5, 0.25]), **_SCAN},
    "indicator-check": {"pairs": (int, 1000), "cells": (int, 5), "low": (float, -2.0), "high": (float, 2.0)},
    "distortion": {
        "matrix": (str, None), "target": (str, None), "s": (float, None),
        "image": (_ints, None), "thresholds": (_floats, None),
    },
}
OPTIONAL = {("distortion", "target"), ("distortion", "s"), ("distortion", "image"), ("distortion", "thresholds")}
POSITIVE_INTS = {"pairs", "nnz", "length", "cells", "nmax", "budget"}


@dataclass
class ExperimentConfig:
    verb: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out_path: str | None = None

    def to_json(self) -> dict:
        return {"verb": self.verb, "params": dict(self.params), "seed": self.seed, "out_path": self.out_path}

    @classmethod
    def from_json(cls, obj) -> "ExperimentConfig":
        if isinstance(obj, dict) and "config" in obj:
            obj = obj["config"]
        if not isinstance(obj, dict) or "verb" not in obj:
            raise ConfigError('config must be an object with a "verb" field')
        return cls(obj["verb"], dict(obj.get("params") or {}), int(obj.get("seed", 0)), obj.get("out_path"))

    def validated(self) -> "ExperimentConfig":
        """Fill defaults, coerce types and range-check; raises :class:`ConfigError`."""
        if self.verb not in PARAMS:
            raise ConfigError(f"unknown verb {self.verb!r}")
        spec = PARAMS[self.verb]
        unknown = set(self.params) - set(spec)
        if unknown:
            raise ConfigError(f"unknown parameters for {self.verb}: {sorted(unknown)}")
        out = {}
        for name, (conv, default) in spec.items():
            raw = self.params.get(name)
            if raw is None:
                if default is None and (self.verb, name) not in OPTIONAL:
                    raise ConfigError(f"{self.verb} needs --{name.replace('_', '-')}")
                out[name] = default
                continue
            try:
                out[name] = conv(raw)
            except (TypeError, ValueError):
                raise ConfigError(f"bad value for {name}: {raw!r}") from None
            if name in POSITIVE_INTS and out[name] < 1:
                raise ConfigError(f"{name} must be >= 1, got {out[name]}")
        if self.verb in ("snowflake-verify", "embed-seq-verify", "mn-check"):
            PsiFamily(out["p"], out["q"])  # BadExponents early
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        return ExperimentConfig(self.verb, out, int(self.seed), self.out_path)


@dataclass
class Report:
    config: ExperimentConfig
    results: dict
    violation: bool = False
    wall_time_ms: int | None = None
    tool_version: str = __version__

    def to_json(self) -> dict:
        out = {
            "tool": "snowlab",
            "tool_version": self.tool_version,
            "config": self.config.to_json(),
            "status": "violation" if self.violation else "ok",
            "results": self.results,
        }
        if self.wall_time_ms is not None:
            out["wall_time_ms"] = self.wall_time_ms
        return out

    @property
    def exit_code(self) -> int:
        return VIOLATION if self.violation else OK


# --------------------------------------------------------------------------
# verbs
# --------------------------------------------------------------------------


def _bound_payload(check, tail: float) -> dict:
    return {
        "constants": {"A": check.A, "B": check.B},
        "lower_factor": 1.0 - tail,
        "A_emp": check.ratio_min,
        "B_emp": check.ratio_max,
        "distortion_emp": check.ratio_max / check.ratio_min,
        "witness_min": check.witness_min,
        "witness_max": check.witness_max,
        "lower_violations": check.lower_violations,
        "upper_violations": check.upper_violations,
        "pairs": check.pairs,
    }


def _snowflake_verify(cfg: ExperimentConfig):
    P = cfg.params
    fam = PsiFamily(P["p"], P["q"])
    win = certify_window(fam, P["radius"], P["min_gap"], P["eps"])
    rng = np.random.default_rng(cfg.seed)
    xs, ys = sample_pairs(rng, P["pairs"], P["radius"], P["min_gap"])
    check = verify_real(fam, win, xs, ys)
    _, _, case, value = lower_witness(fam, xs, ys)
    floor = fam.constants.A * np.abs(xs - ys) ** fam.p * (1.0 - 1e-12)
    missing = int(np.sum(value < floor))
    res = {
        "window": win.to_json(),
        **_bound_payload(check, win.tail_bound),
        "lower_witness": {
            "missing": missing,
            "case_1": int(np.sum(case == 1)),
            "case_2": int(np.sum(case == 2)),
        },
    }
    return res, not check.ok or missing > 0


def _embed_seq_verify(cfg: ExperimentConfig):
    P = cfg.params
    fam = PsiFamily(P["p"], P["q"])
    win = certify_window(fam, P["radius"], P["min_gap"], P["eps"])
    if P["nnz"] > P["length"]:
        raise ConfigError("nnz cannot exceed length")
    rng = np.random.default_rng(cfg.seed)
    pairs = sample_sparse_pairs(rng, P["pairs"], P["nnz"], P["length"], P["radius"], P["min_gap"])
    check = verify_seq(fam, win, pairs)
    return {"window": win.to_json(), **_bound_payload(check, win.tail_bound)}, not check.ok


def _mn_check(cfg: ExperimentConfig):
    P = cfg.params
    k = normalizer(P["p"], P["q"], P["tol"])
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for _ in range(P["pairs"]):
        f = random_step_function(rng, P["cells"])
        g = random_step_function(rng, P["cells"])
        rows.append(mn_isometry_check(k, f, g).to_json())
    kernel = []
    for d in (0.1, 1.0, 10.0):
        v = kernel_distance(k, d)
        kernel.append({"delta": d, "value": v, "rel_err": abs(v - d ** k.p) / d ** k.p})
    worst = max((r["rel_err"] for r in rows), default=0.0)
    threshold = 10.0 * k.tol
    res = {
        "kernel": k.to_json(),
        "threshold": threshold,
        "max_rel_err": worst,
        "kernel_checks": kernel,
        "pairs": rows,
    }
    bad = worst > threshold or any(c["rel_err"] > threshold for c in kernel)
    return res, bad


def _roundness(cfg: ExperimentConfig):
    P = cfg.params
    space = load_matrix(P["matrix"], "metric")
    rep = space_roundness(space, P["pcap"], P["tol"], P["grid"])
    return {"validity": space.validity.label, "n": space.n, "roundness": rep.to_json()}, False


def _enflo(cfg: ExperimentConfig):
    P = cfg.params
    space = load_matrix(P["matrix"], "metric")
    rep = space_enflo(space, P["nmax"], P["pcap"], P["tol"], P["budget"], cfg.seed, P["grid"])
    return {"validity": space.validity.label, "n": space.n, "enflo": rep.to_json()}, False


def _scaling_check(cfg: ExperimentConfig):
    P = cfg.params
    space = load_matrix(P["matrix"], "metric")
    rows, bad = [], False
    for s in P["s"]:
        rep = scaling_law_check(space, s, P["pcap"], P["tol"], P["grid"])
        allowed = P["tol"] * (1.0 + 1.0 / s)
        rows.append({**rep.to_json(), "allowed_abs_err": allowed})
        bad |= rep.finiteness_mismatch > 0 or rep.max_abs_err > allowed
    return {"validity": space.validity.label, "n": space.n, "scaling": rows}, bad


INDICATOR_TOL = 1e-12


def _indicator_check(cfg: ExperimentConfig):
    P = cfg.params
    rng = np.random.default_rng(cfg.seed)
    worst, where = 0.0, None
    for i in range(P["pairs"]):
        f = random_step_function(rng, P["cells"], P["low"], P["high"])
        g = random_step_function(rng, P["cells"], P["low"], P["high"])
        err = abs(l2_distance_sq(indicator_embed(f), indicator_embed(g)) - dist_Lp(f, g, 1.0))
        if err > worst:
            worst, where = err, i
    res = {"pairs": P["pairs"], "max_abs_err": worst, "worst_pair": where, "tolerance": INDICATOR_TOL}
    return res, worst > INDICATOR_TOL


def _distortion(cfg: ExperimentConfig):
    P = cfg.params
    source = load_matrix(P["matrix"])
    if P["target"] is not None and P["s"] is not None:
        raise ConfigError("give either --target or --s, not both")
    if P["target"] is not None:
        target = load_matrix(P["target"])
    elif P["s"] is not None:
        target = snowflake(source, P["s"])
    else:
        target = source
    image = P["image"] if P["image"] is not None else list(range(source.n))
    pmap = PointMap(source, target, image)
    rep = distortion(pmap)
    res = {
        "A": rep.A,
        "B": rep.B,
        "product": rep.product,
        "injective": rep.injective,
        "witness_lower": list(rep.witness_lower),
        "witness_upper": list(rep.witness_upper),
    }
    if P["thresholds"]:
        prof = moduli(pmap, P["thresholds"])
        res["moduli"] = {"thresholds": list(prof.thresholds), "rho": list(prof.rho), "omega": list(prof.omega)}
    return res, False


VERBS = {
    "snowflake-verify": _snowflake_verify,
    "embed-seq-verify": _embed_seq_verify,
    "mn-check": _mn_check,
    "roundness": _roundness,
    "enflo": _enflo,
    "scaling-check": _scaling_check,
    "indicator-check": _indicator_check,
    "distortion": _distortion,
}


def run(config: ExperimentConfig, timing: bool = False) -> Report:
    """Validate, dispatch and (if ``out_path`` is set) write the JSON report."""
    cfg = config.validated()
    t0 = time.perf_counter()
    results, violated = VERBS[cfg.verb](cfg)
    elapsed = int(round((time.perf_counter() - t0) * 1000)) if timing else None
    report = Report(cfg, results, bool(violated), elapsed)
    if cfg.out_path:
        Path(cfg.out_path).write_text(dumps(report.to_json()))
    return report


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

SWEEP_COLUMNS = ["axis", "value", "status", "p", "q", "s", "A", "B",
                 "A_emp", "B_emp", "distortion_emp", "critical", "error"]


def _sweep_row(cfg: ExperimentConfig, report: Report) -> dict:
    P, R = cfg.params, report.results
    row = {"p": P.get("p"), "q": P.get("q")}
    if "constants" in R:
        row.update(A=R["constants"]["A"], B=R["constants"]["B"], A_emp=R["A_emp"],
                   B_emp=R["B_emp"], distortion_emp=R["distortion_emp"])
    if "scaling" in R:
        row["s"] = R["scaling"][0]["s"]
        row["critical"] = R["scaling"][0]["space_critical_snowflaked"]
    elif "roundness" in R:
        row["critical"] = R["roundness"]["critical"]
    elif "enflo" in R:
        row["critical"] = R["enflo"]["critical"]
    elif cfg.verb == "distortion":
        row.update(s=P.get("s"), A=R["A"], B=R["B"], distortion_emp=R["product"])
    return row


def _cell(v):
    v = encode(v)
    return "" if v is None else repr(v) if isinstance(v, float) else str(v)


def sweep(config: ExperimentConfig, axis: str, values, stream=None) -> str:
    """One CSV row per axis value; failing rows are flagged and the sweep goes on."""
    if config.verb not in PARAMS:
        raise ConfigError(f"unknown verb {config.verb!r}")
    if axis not in PARAMS[config.verb] and axis != "seed":
        raise ConfigError(f"{axis!r} is not a parameter of {config.verb}")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for value in values:
        params = dict(config.params)
        seed = config.seed
        if axis == "seed":
            seed = int(value)
        elif axis == "s" and config.verb == "scaling-check":
            params["s"] = [value]
        else:
            params[axis] = value
        cfg = ExperimentConfig(config.verb, params, seed, None)
        row = {"axis": axis, "value": value}
        try:
            rep = run(cfg)
            row.update(_sweep_row(cfg.validated(), rep))
            row["status"] = "violation" if rep.violation else "ok"
        except SnowlabError as exc:
            row.update(status="error", error=exc.code)
        writer.writerow({k: _cell(row.get(k)) for k in SWEEP_COLUMNS})
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse's own exit code 2 would read as a violation
        raise ConfigError(message)


def _add_verb_flags(parser, verb):
    for name in PARAMS[verb]:
        parser.add_argument("--" + name.replace("_", "-"), dest=name, default=None)


def _common(parser):
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    parser.add_argument("--config", default=None, help="JSON config (or a previous report) overriding flags")
    parser.add_argument("--timing", action="store_true", help="add wall_time_ms to the report")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="snowlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"snowlab {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    for verb in PARAMS:
        p = sub.add_parser(verb)
        _add_verb_flags(p, verb)
        _common(p)
    p = sub.add_parser("run", help="run the verb named in --config")
    _common(p)
    p = sub.add_parser("sweep", help="CSV sweep of one parameter")
    p.add_argument("sweep_verb", choices=sorted(PARAMS))
    p.add_argument("--axis", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    _common(p)
    return parser


def _load_config_file(path) -> ExperimentConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return ExperimentConfig.from_json(obj)


def _config_from_args(args, verb: str) -> ExperimentConfig:
    params = {n: getattr(args, n) for n in PARAMS[verb] if getattr(args, n, None) is not None}
    cfg = ExperimentConfig(verb, params, args.seed if args.seed is not None else 0, args.out)
    if args.config:
        file_cfg = _load_config_file(args.config)
        if verb != file_cfg.verb and args.verb != "run":
            raise ConfigError(f"config is for {file_cfg.verb!r}, not {verb!r}")
        merged = {**cfg.params, **file_cfg.params}
        cfg = ExperimentConfig(file_cfg.verb, merged, file_cfg.seed,
                               file_cfg.out_path if file_cfg.out_path is not None else cfg.out_path)
    return cfg


def _parse_value(text: str):
    try:
        return float(text) if any(c in text for c in ".eE") or text.lower() in ("inf", "nan") else int(text)
    except ValueError:
        return text


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        configure_threads()
        parser = build_parser()
        # sweep forwards unknown flags to the swept verb
        if argv and argv[0] == "sweep":
            args, rest = parser.parse_known_args(argv)
            verb_parser = _Parser(prog=f"snowlab sweep {args.sweep_verb}")
            _add_verb_flags(verb_parser, args.sweep_verb)
            vargs = verb_parser.parse_args(rest)
            vargs.seed, vargs.out, vargs.config, vargs.verb = args.seed, args.out, args.config, args.sweep_verb
            cfg = _config_from_args(vargs, args.sweep_verb)
            values = [_parse_value(v.strip()) for v in args.values.split(",") if v.strip()]
            text = sweep(ExperimentConfig(cfg.verb, cfg.params, cfg.seed, None), args.axis, values)
            if args.out:
                Path(args.out).write_text(text)
            else:
                sys.stdout.write(text)
            return OK
        args = parser.parse_args(argv)
        if args.verb == "run":
            if not args.config:
                raise ConfigError("run needs --config")
            cfg = _load_config_file(args.config)
            if args.out:
                cfg.out_path = args.out
        else:
            cfg = _config_from_args(args, args.verb)
        report = run(cfg, timing=args.timing)
        if not cfg.out_path:
            sys.stdout.write(dumps(report.to_json()))
        return report.exit_code
    except SnowlabError as exc:
        sys.stderr.write(dumps({"error": exc.payload()}))
        return INPUT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
