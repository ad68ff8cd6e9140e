"""Command-line front end.

Subcommands: exact, mc, transition-scan, regime-scan, decide, verify,
calibrate-fn.  Settings come from an optional JSON config (``--config``)
overridden by flags.  Exit codes: 0 success, 2 consistency failure,
3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from . import __version__, ladder_exact, large_dev, limit_laws, monte_carlo, verification
from .increments import (GAUSSIAN, IncrementModel, ModelError, model_from_spec, n_for_u,
                         norming_c, symmetric_pm1)

EXIT_OK = 0
EXIT_CONSISTENCY = 2
EXIT_CONFIG = 3

MODEL_SHORTCUTS = {
    "pm1": {"kind": "lattice", "mass": {"-1": "0.5", "1": "0.5"}},
    "biased": {"kind": "biased"},
    "gaussian": {"kind": "gaussian"},
    "pareto3.5": {"kind": "pareto", "tail_exponent": 3.5},
    "pareto1.5": {"kind": "pareto", "tail_exponent": 1.5},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    model: dict = field(default_factory=lambda: dict(MODEL_SHORTCUTS["pm1"]))
    drifts: list = field(default_factory=list)
    ns: list = field(default_factory=list)
    vs: list = field(default_factory=list)
    routes: list = field(default_factory=lambda: ["dp", "spitzer"])
    output: str = "-"
    seed: int = 0
    paths: int = 100_000
    threads: int | None = None
    tolerance: float = 1e-10
    cap: int = 100_000

    def build_model(self) -> IncrementModel:
        try:
            return model_from_spec(self.model)
        except (ModelError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad model spec: {exc}") from exc


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        known = {f.name for f in fields(ExperimentConfig)}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        for k, v in raw.items():
            setattr(cfg, k, v)
    if args.model:
        if args.model in MODEL_SHORTCUTS:
            cfg.model = dict(MODEL_SHORTCUTS[args.model])
        else:
            try:
                cfg.model = json.loads(args.model)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"--model is neither a shortcut nor JSON: {args.model}") from exc
    for flag, attr in (("a", "drifts"), ("n", "ns"), ("v", "vs")):
        val = getattr(args, flag, None)
        if val is not None:
            setattr(cfg, attr, val)
    for attr in ("seed", "paths", "threads", "output", "tolerance", "cap"):
        val = getattr(args, attr, None)
        if val is not None:
            setattr(cfg, attr, val)
    if getattr(args, "routes", None):
        cfg.routes = args.routes.split(",")
    return cfg


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


# -- output helpers --------------------------------------------------------------------


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _emit(cfg: ExperimentConfig, name: str, text: str):
    if cfg.output in ("-", ""):
        sys.stdout.write(text)
        return
    path = cfg.output
    if os.path.isdir(path) or path.endswith(os.sep):
        os.makedirs(path, exist_ok=True)
        path = os.path.join(path, name)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _csv(header, rows, model, seed):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header) + ["model_hash", "seed", "code_version"])
    for r in rows:
        w.writerow([_fmt(x) for x in r] + [model.hash, seed, __version__])
    return buf.getvalue()


def _json(obj) -> str:
    def default(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        raise TypeError(type(o))
    return json.dumps(obj, indent=2, sort_keys=True, default=default) + "\n"


# -- subcommands ------------------------------------------------------------------------


def cmd_exact(cfg: ExperimentConfig) -> int:
    model = cfg.build_model()
    _require(model.is_lattice, "exact routes need a lattice model")
    _require(cfg.ns, "empty n grid")
    drifts = cfg.drifts or [0.0]
    N = max(int(n) for n in cfg.ns)
    _require(N >= 0, "n must be >= 0")
    rows, failures = [], []
    for a in drifts:
        dp = ladder_exact.survival_dp(model, a, N).probs
        sp = genf = None
        if "spitzer" in cfg.routes:
            marg = ladder_exact.marginal_nonneg_probs(model, a, N)
            sp = ladder_exact.spitzer_recurrence(marg).probs
            genf = ladder_exact.genf_check(dp, marg, min(50, N))
        bf = None
        if "bruteforce" in cfg.routes:
            kmax = 0
            while kmax < N and len(model.support) ** (kmax + 1) <= ladder_exact.ENUM_GUARD // 10:
                kmax += 1
            bf = ladder_exact.enumerate_bruteforce(model, a, kmax).probs
        for n in cfg.ns:
            n = int(n)
            rel = abs(sp[n] - dp[n]) / dp[n] if sp is not None and dp[n] > 0 else None
            b = bf[n] if bf is not None and n < len(bf) else None
            rows.append((a, n, dp[n], None if sp is None else sp[n], rel, genf, b))
            if rel is not None and rel > cfg.tolerance:
                failures.append(f"a={a} n={n}: dp={dp[n]!r} spitzer={sp[n]!r} rel={rel:.3e}")
            if b is not None and abs(b - dp[n]) > 1e-12:
                failures.append(f"a={a} n={n}: dp={dp[n]!r} bruteforce={b!r}")
        if genf is not None and genf > cfg.tolerance:
            failures.append(f"a={a}: genf_check {genf:.3e}")
    header = ("a", "n", "dp", "spitzer", "rel_diff", "genf_check", "bruteforce")
    _emit(cfg, "exact.csv", _csv(header, rows, model, cfg.seed))
    if failures:
        sys.stderr.write("route disagreement:\n" + "\n".join(failures) + "\n")
        return EXIT_CONSISTENCY
    return EXIT_OK


def cmd_mc(cfg: ExperimentConfig) -> int:
    model = cfg.build_model()
    _require(cfg.ns, "empty n grid")
    _require(cfg.paths >= 1, "paths must be >= 1")
    records = []
    for a in cfg.drifts or [0.0]:
        for n in cfg.ns:
            est = monte_carlo.estimate_tail(model, a, int(n), cfg.paths, cfg.seed,
                                            threads=cfg.threads)
            rec = {"a": a, "n": int(n), "estimator": "plain", **est.to_dict()}
            records.append(rec)
            if "tilted" in cfg.routes and a > 0:
                est = monte_carlo.tilted_estimate_tail(model, a, int(n), cfg.paths, cfg.seed,
                                                       threads=cfg.threads)
                records.append({"a": a, "n": int(n), "estimator": "tilted", **est.to_dict()})
    out = {"model": model.to_spec(), "model_hash": model.hash, "seed": cfg.seed,
           "code_version": __version__, "estimates": records}
    _emit(cfg, "mc.json", _json(out))
    return EXIT_OK


def _survival(model, a, n, cfg):
    if model.is_lattice:
        return float(ladder_exact.survival_dp(model, a, n).probs[n]), "dp"
    est = monte_carlo.estimate_tail(model, a, n, cfg.paths, cfg.seed, threads=cfg.threads)
    return est.value, "mc"


def _zero_tail(model, n, cfg):
    if model.kind == GAUSSIAN:
        return large_dev.zero_drift_reference(model, n)[0], "exact"
    return _survival(model, 0.0, n, cfg)


def cmd_transition_scan(cfg: ExperimentConfig) -> int:
    model = cfg.build_model()
    _require(cfg.vs, "empty v grid")
    _require(cfg.drifts, "empty drift grid")
    alpha = model.stable_alpha
    cdf = limit_laws.limit_cdf(alpha, model.stable_beta)
    rows = []
    for a in cfg.drifts:
        _require(a > 0, "drifts must be positive")
        for v in cfg.vs:
            u = v ** (1 - 1 / alpha) if v > 0 else 0.0
            if v == 0:
                n = 0
            elif alpha == 2:
                n = max(1, round(v * model.second_moment / a**2))
            else:
                n = n_for_u(model, a, u)
            if n == 0:
                num, den, src = 1.0, 1.0, "trivial"
            else:
                num, src = _survival(model, a, n, cfg)
                den, _ = _zero_tail(model, n, cfg)
            ratio = num / den if den > 0 else None
            pred = 1.0 if u == 0 else float(cdf(u))
            u_emp = a * n / norming_c(model, n) if n else 0.0
            rows.append((a, v, n, u, u_emp, ratio, pred, src))
    header = ("a", "v", "n", "u", "u_empirical", "ratio", "limit_correction", "source")
    _emit(cfg, "transition_scan.csv", _csv(header, rows, model, cfg.seed))
    return EXIT_OK


def cmd_regime_scan(cfg: ExperimentConfig) -> int:
    model = cfg.build_model()
    _require(cfg.drifts and cfg.ns, "regime-scan needs drift and n grids")
    rows = []
    for a in cfg.drifts:
        _require(a > 0, "drifts must be positive")
        etau = None
        for n in cfg.ns:
            n = int(n)
            rep = large_dev.regime_classify(model, a, n, etau=etau)
            etau = rep.inputs.get("etau", etau)
            exact = None
            if model.is_lattice and "dp" in cfg.routes:
                exact = float(ladder_exact.survival_dp(model, a, n).probs[n])
            ratio = exact / rep.predictor if exact is not None and rep.predictor else None
            rows.append((a, n, rep.u, rep.label, rep.predictor, exact, ratio,
                         int(rep.unresolved_window)))
    header = ("a", "n", "u", "label", "predictor", "exact", "ratio", "unresolved_window")
    _emit(cfg, "regime_scan.csv", _csv(header, rows, model, cfg.seed))
    return EXIT_OK


def cmd_decide(cfg: ExperimentConfig) -> int:
    model = cfg.build_model()
    _require(len(cfg.drifts) == 1 and len(cfg.ns) == 1, "decide needs exactly one a and one n")
    a, n = float(cfg.drifts[0]), int(cfg.ns[0])
    _require(a > 0 and n >= 1, "decide needs a > 0 and n >= 1")
    rep = large_dev.regime_classify(model, a, n)
    doc = {"model": model.to_spec(), "model_hash": model.hash, "seed": cfg.seed,
           "code_version": __version__, **rep.to_dict()}
    lines = [
        f"regime      : {rep.label}  (u = a n / c_n = {rep.u:.6g}, c_n = {rep.c_n:.6g})",
        f"recommended : {rep.predictor_name} = {rep.predictor:.6g}",
    ]
    if rep.competitor_name:
        r = "n/a" if rep.ratio is None else f"{rep.ratio:.6g}"
        lines.append(f"competitor  : {rep.competitor_name} = {rep.competitor:.6g}  (ratio {r})")
    if rep.unresolved_window:
        lines.append("warning     : (a, n) lies in the unresolved window between the normal and tail zones")
    for s in rep.assumptions:
        lines.append(f"assumption  : {s}")
    sys.stderr.write("\n".join(lines) + "\n")
    _emit(cfg, "decide.json", _json(doc))
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, only=None) -> int:
    results = verification.run_all(only)
    bad = 0
    for r in results:
        bad += not r.ok
        sys.stdout.write(f"{'PASS' if r.ok else 'FAIL'}  {r.name:<16} {r.detail}  ({r.seconds:.1f}s)\n")
    return EXIT_CONSISTENCY if bad else EXIT_OK


def _corpus_models(cfg):
    from .increments import pareto_tail  # noqa: PLC0415
    if cfg.model and cfg.model != MODEL_SHORTCUTS["pm1"]:
        return [cfg.build_model()]
    return [symmetric_pm1(), pareto_tail(3.5, max_index=4000), pareto_tail(2.5, max_index=4000)]


def cmd_calibrate_fn(cfg: ExperimentConfig) -> int:
    ns = [int(n) for n in cfg.ns] or [50, 200]
    rows, worst = [], 0.0
    for model in _corpus_models(cfg):
        _require(model.is_lattice, "calibration needs exact marginals (lattice model)")
        for n in ns:
            marg = verification._upper_marginal(model, n)
            c = norming_c(model, n)
            xs = [float(x) for x in range(max(1, int(c)), min(len(marg), int(8 * c) + 1))]
            exact = [float(marg[int(x):].sum()) for x in xs]
            cmin = large_dev.fuk_nagaev_min_constant(model, n, xs, exact)
            worst = max(worst, cmin)
            ok = all(large_dev.fuk_nagaev_bound(model, x, n) >= p for x, p in zip(xs, exact))
            rows.append((model.describe(), n, len(xs), cmin, large_dev.FN_CONSTANT, int(ok)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "n", "points", "min_safe_C", "default_C", "default_dominates",
                "code_version"])
    for r in rows:
        w.writerow([_fmt(x) for x in r] + [__version__])
    _emit(cfg, "calibrate_fn.csv", buf.getvalue())
    sys.stderr.write(f"minimal safe C over the corpus: {worst:.6g} (default {large_dev.FN_CONSTANT})\n")
    return EXIT_OK if worst <= large_dev.FN_CONSTANT else EXIT_CONSISTENCY


# -- parser -----------------------------------------------------------------------------


def _floats(s):
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _ints(s):
    try:
        return [int(float(x)) for x in s.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ladderepoch", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--model", help=f"shortcut {sorted(MODEL_SHORTCUTS)} or JSON spec")
    common.add_argument("--a", type=_floats, help="comma-separated drifts")
    common.add_argument("--n", type=_ints, help="comma-separated horizons")
    common.add_argument("--seed", type=int)
    common.add_argument("--output", "-o", help="file, directory, or - for stdout")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("exact", parents=[common], help="DP, Spitzer and generating-function check")
    s.add_argument("--routes", help="comma list from dp,spitzer,bruteforce")
    s.add_argument("--tolerance", type=float)
    s = sub.add_parser("mc", parents=[common], help="Monte Carlo tail estimates")
    s.add_argument("--paths", type=int)
    s.add_argument("--threads", type=int)
    s.add_argument("--routes", help="add 'tilted' for importance sampling")
    s = sub.add_parser("transition-scan", parents=[common], help="ratio to zero drift vs limit law")
    s.add_argument("--v", type=_floats, help="comma-separated v grid")
    s.add_argument("--paths", type=int)
    s.add_argument("--threads", type=int)
    s = sub.add_parser("regime-scan", parents=[common], help="classify an (a, n) grid")
    s.add_argument("--routes", help="include dp to add exact values")
    sub.add_parser("decide", parents=[common], help="recommend a formula for one (a, n)")
    s = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    s.add_argument("--only", help=f"comma list from {','.join(verification.CHECKS)}")
    sub.add_parser("calibrate-fn", parents=[common], help="minimal Fuk-Nagaev constant")
    return p


COMMANDS = {
    "exact": cmd_exact,
    "mc": cmd_mc,
    "transition-scan": cmd_transition_scan,
    "regime-scan": cmd_regime_scan,
    "decide": cmd_decide,
    "calibrate-fn": cmd_calibrate_fn,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args)
        if args.command == "verify":
            only = args.only.split(",") if args.only else None
            if only and set(only) - set(verification.CHECKS):
                raise ConfigError(f"unknown checks: {sorted(set(only) - set(verification.CHECKS))}")
            return cmd_verify(cfg, only)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except ModelError as exc:
        sys.stderr.write(f"model error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
