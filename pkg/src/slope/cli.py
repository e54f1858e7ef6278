"""Command-line interface.

Subcommands: ``solve``, ``lambda``, ``prox``, ``simulate`` and ``rerun``.
Exit codes are shared by all of them: 0 success, 1 input error, 2 the
solver did not converge. Every run writes a manifest next to its output
(``<out>.manifest.json``, or ``manifest.json`` inside a simulation
directory) from which ``slope rerun`` reproduces the output byte for byte.
"""

import argparse
import json
import os
import statistics
import sys
import time

import jsonschema
import numpy as np

from . import io, simlab
from .inference import DegenerateFitError, RankDeficientError, scaled_slope
from .lambdas import (default_grid, lambda_bh, lambda_gaussian, lambda_monte_carlo, lambda_oscar,
                      standardize)
from .solver import SlopeProblem, SolverConfig, SolverError, solve
from .sorted_l1 import ProxWorkspace, check_lambda, prox_sorted_l1, prox_sorted_l1_sorted_nonneg

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; 2 is reserved for nonconvergence
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _on_off(value):
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def _sigma(value):
    if value == "scaled":
        return value
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a positive number or 'scaled'") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("sigma must be positive")
    return v


def _manifest_path(out):
    return os.fspath(out) + ".manifest.json"


def _sidecar_path(out):
    return os.path.splitext(os.fspath(out))[0] + ".json"


# ----------------------------------------------------------------------
# solve


def _lambda_for_solve(spec, X, n, q, draws, seed, standardized):
    p = X.shape[1]
    if spec == "bh":
        return lambda_bh(p, q)
    if spec == "gstar":
        return lambda_gaussian(p, n, q).sequence
    if spec == "mc":
        return lambda_monte_carlo(X, q, draws=draws, seed=seed, standardized=standardized).sequence
    if spec.startswith("file:"):
        lam = io.read_vector(spec[5:])
        if lam.size != p:
            raise io.InputError(f"{spec[5:]}: lambda has {lam.size} entries, design has {p} columns")
        return check_lambda(lam)
    if spec.startswith("const:"):
        try:
            v = float(spec[6:])
        except ValueError:
            raise io.InputError(f"bad constant lambda {spec!r}") from None
        return check_lambda(np.full(p, v))
    raise io.InputError(f"unknown lambda spec {spec!r}; use bh, gstar, mc, file:PATH or const:V")


def cmd_solve(args, manifest):
    X, _ = io.read_matrix(args.x)
    y = io.read_vector(args.y)
    manifest.add_input(args.x)
    manifest.add_input(args.y)
    if X.shape[0] != y.size:
        raise io.InputError(f"{args.x} has {X.shape[0]} rows but {args.y} has {y.size}")
    n, p = X.shape
    means = norms = None
    y_mean = 0.0
    if args.standardize:
        X, means, norms = standardize(X)
        y_mean = float(y.mean())
        y = y - y_mean
    lam = _lambda_for_solve(args.lambda_spec, X, n, args.q, args.draws, args.seed,
                            args.standardize)
    if args.lambda_spec.startswith("file:"):
        manifest.add_input(args.lambda_spec[5:])
    cfg = SolverConfig(max_iters=args.max_iters, tol=args.tol)
    out = {"lambda": args.lambda_spec, "n": n, "p": p, "standardized": args.standardize}
    if args.sigma == "scaled":
        res = scaled_slope(X, y, lam, config=cfg, center=False)
        beta = res.beta
        problem = SlopeProblem(X, y, res.sigma_hat * lam)
        sol = solve(problem, cfg, b0=beta)
        out.update(sigma_hat=res.sigma_hat, scaled_iterations=res.iterations,
                   scaled_converged=res.converged)
        converged = res.converged and sol.converged
    else:
        problem = SlopeProblem(X, y, args.sigma * lam)
        sol = solve(problem, cfg)
        converged = sol.converged
    beta = sol.beta
    out.update(beta=beta.tolist(), support=(sol.support + 1).tolist(),
               objective=sol.objective, dual_gap=sol.dual_gap, iterations=sol.iterations,
               converged=converged)
    if args.standardize:
        coef = beta / norms
        out.update(coef_original_scale=coef.tolist(),
                   intercept=y_mean - float(means @ coef))
    io.write_json(args.out, out)
    return [args.out], EXIT_OK if converged else EXIT_NONCONVERGED


# ----------------------------------------------------------------------
# lambda


def _grid_arg(value, p, n):
    if value is None:
        return None
    if "," in value:
        return [int(g) for g in value.split(",") if g.strip()]
    return default_grid(p, n, size=int(value))


def cmd_lambda(args, manifest):
    outputs = [args.out]
    meta = None
    if args.kind == "mc":
        if args.x is None:
            raise io.InputError("--kind mc needs --x")
        X, _ = io.read_matrix(args.x)
        manifest.add_input(args.x)
        n, p = X.shape
        mc = lambda_monte_carlo(X, args.q, draws=args.draws, grid=_grid_arg(args.grid, p, n),
                                seed=args.seed)
        lam = mc.sequence
        meta = {"kind": "mc", "k_star": mc.k_star, "q": args.q, "draws": args.draws,
                "seed": args.seed,
                "estimates": [{"index": e.index, "correction": e.correction,
                               "std_error": e.std_error} for e in mc.estimates]}
    else:
        if args.p is None:
            raise io.InputError(f"--kind {args.kind} needs --p")
        if args.p < 1:
            raise io.InputError("--p must be at least 1")
        if args.kind == "bh":
            lam = lambda_bh(args.p, args.q)
        elif args.kind == "gstar":
            if args.n is None:
                raise io.InputError("--kind gstar needs --n")
            g = lambda_gaussian(args.p, args.n, args.q)
            lam = g.sequence
            meta = {"kind": "gstar", "k_star": g.k_star, "p": args.p, "n": args.n, "q": args.q}
        else:
            lam = lambda_oscar(args.p, args.l1, args.l2)
    io.write_vector(args.out, lam, header="lambda")
    if meta is not None:
        side = _sidecar_path(args.out)
        io.write_json(side, meta)
        outputs.append(side)
    return outputs, EXIT_OK


# ----------------------------------------------------------------------
# prox


def _median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def cmd_prox(args, manifest):
    y = io.read_vector(args.y)
    lam = io.read_vector(args.lambda_file)
    manifest.add_input(args.y)
    manifest.add_input(args.lambda_file)
    if y.size != lam.size:
        raise io.InputError(f"y has {y.size} entries but lambda has {lam.size}")
    ws = ProxWorkspace(y.size)
    x = prox_sorted_l1(y, lam, workspace=ws)
    io.write_vector(args.out, x)
    if args.bench != "none":
        repeats = int(args.bench)
        if repeats < 1:
            raise io.InputError("--bench needs a positive repeat count")
        a = np.sort(np.abs(y))[::-1]
        t_norm = _median_time(
            lambda: prox_sorted_l1_sorted_nonneg(a, lam, workspace=ws, check=False), repeats)
        t_full = _median_time(lambda: prox_sorted_l1(y, lam, workspace=ws), repeats)
        print(f"p={y.size} repeats={repeats}")
        print(f"prox_time_after_normalization_median_s={t_norm:.6e}")
        print(f"total_prox_time_median_s={t_full:.6e}")
    return [args.out], EXIT_OK


# ----------------------------------------------------------------------
# simulate

_POS_INT = {"type": "integer", "minimum": 1}
_LEVEL = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}

SIM_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["p", "k_list", "replicates", "seed"],
    "properties": {
        "scenario": {"enum": ["orthogonal", "gaussian", "gaussian_design", "gwas"]},
        "n": {"type": "integer", "minimum": 3},
        "p": _POS_INT,
        "k_list": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
        "signal_magnitude": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "q": _LEVEL,
        "replicates": _POS_INT,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "sequence_kind": {"enum": ["bh", "gstar", "mc", "bonferroni"]},
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "sigma_mode": {"enum": ["known", "scaled"]},
        "error_dist": {"enum": ["gaussian", "laplace", "laplace_unit_var", "contaminated"]},
        "contamination_fraction": {"type": "number", "minimum": 0, "maximum": 1},
        "contamination_scale": {"type": "number", "exclusiveMinimum": 0},
        "methods": {"type": "array", "items": {"enum": ["lasso_bonf"]}},
        "alpha": {"type": ["number", "null"], "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "dominant": {"type": "boolean"},
        "mc_draws": _POS_INT,
        "solver_tol": {"type": "number", "minimum": 0},
        "max_scaled_iters": _POS_INT,
    },
}

ANOVA_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["p", "k", "replicates", "seed"],
    "properties": {
        "scenario": {"enum": ["anova"]},
        "p": {"type": "integer", "minimum": 2},
        "labs": {"type": "integer", "minimum": 2},
        "sigma_tau2": {"type": "number", "minimum": 0},
        "sigma_z2": {"type": "number", "exclusiveMinimum": 0},
        "k": {"type": "integer", "minimum": 0},
        "variance_mode": {"enum": ["known", "estimated"]},
        "signal": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "q": _LEVEL,
        "replicates": _POS_INT,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
    },
}


def _schema_error(exc):
    path = "/".join(str(p) for p in exc.absolute_path)
    if exc.validator in ("required", "additionalProperties"):
        return f"config: {exc.message}"
    return f"config field '{path or '<root>'}': {exc.message}"


def _canonical(scenario):
    return "gaussian_design" if scenario == "gaussian" else scenario


def _load_sim_config(args):
    if getattr(args, "config_data", None) is not None:
        return dict(args.config_data)
    try:
        with open(args.config) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise io.InputError(f"{args.config}:{exc.lineno}: invalid JSON ({exc.msg})") from None


def cmd_simulate(args, manifest):
    data = _load_sim_config(args)
    manifest.config["config_data"] = dict(data)
    scenario = _canonical(args.scenario)
    schema = ANOVA_SCHEMA if scenario == "anova" else SIM_SCHEMA
    err = jsonschema.exceptions.best_match(jsonschema.Draft202012Validator(schema).iter_errors(data))
    if err is not None:
        raise io.InputError(_schema_error(err))
    given = data.pop("scenario", None)
    if given is not None and _canonical(given) != scenario:
        raise io.InputError(f"config field 'scenario': {given!r} does not match --scenario")
    if args.seed is not None:
        data["seed"] = args.seed
    manifest.seed = data["seed"]
    os.makedirs(args.out, exist_ok=True)
    if scenario == "anova":
        q = data.pop("q", 0.1)
        reps = data.pop("replicates")
        seed = data.pop("seed")
        report = simlab.run_anova_testing(simlab.AnovaConfig(**data), q, reps, seed,
                                          n_jobs=args.jobs)
    else:
        if "n" not in data and scenario != "orthogonal":
            raise io.InputError("config: 'n' is a required property")
        report = simlab.run(simlab.SimConfig(scenario=scenario, **data), n_jobs=args.jobs)
    csv_path = os.path.join(args.out, "report.csv")
    json_path = os.path.join(args.out, "summary.json")
    report.to_csv(csv_path)
    with open(json_path, "w") as fh:
        fh.write(report.summary_json() + "\n")
    ok = all(r["converged"] for r in report.rows)
    return [csv_path, json_path], EXIT_OK if ok else EXIT_NONCONVERGED


# ----------------------------------------------------------------------
# rerun


def cmd_rerun(args, manifest):
    m = io.RunManifest.read(args.manifest)
    for path, digest in m.inputs.items():
        if not os.path.exists(path) or io.file_digest(path) != digest:
            raise io.InputError(f"input {path} is missing or changed since the recorded run")
    sub = build_parser().parse_args(m.argv)
    if m.subcommand == "simulate":
        sub.config_data = m.config.get("config_data")
    return _dispatch(sub, m.argv)


# ----------------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="slope", description="Sorted L-One Penalized Estimation tools.")
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = subs.add_parser("solve", help="fit SLOPE to a dataset")
    s.add_argument("--x", required=True, help="design matrix CSV (n rows, p columns)")
    s.add_argument("--y", required=True, help="response CSV (one column)")
    s.add_argument("--lambda", dest="lambda_spec", default="bh",
                   help="bh, gstar, mc, file:PATH or const:V (default bh)")
    s.add_argument("--q", type=float, default=0.1, help="target FDR level (default 0.1)")
    s.add_argument("--sigma", type=_sigma, default=1.0,
                   help="noise level, or 'scaled' to estimate it (default 1)")
    s.add_argument("--tol", type=float, default=1e-7, help="relative duality-gap tolerance")
    s.add_argument("--max-iters", type=int, default=20000)
    s.add_argument("--draws", type=int, default=1000, help="Monte Carlo draws for --lambda mc")
    s.add_argument("--seed", type=int, default=0, help="seed for --lambda mc")
    s.add_argument("--standardize", type=_on_off, default=True,
                   help="on: center y and center/unit-norm X columns (default); off: raw")
    s.add_argument("--out", required=True, help="output JSON path")

    lam = subs.add_parser("lambda", help="write a regularization sequence")
    lam.add_argument("--kind", required=True, choices=["bh", "gstar", "oscar", "mc"])
    lam.add_argument("--p", type=int)
    lam.add_argument("--n", type=int)
    lam.add_argument("--q", type=float, default=0.1)
    lam.add_argument("--l1", type=float, default=1.0, help="OSCAR l1 weight")
    lam.add_argument("--l2", type=float, default=0.0, help="OSCAR pairwise weight")
    lam.add_argument("--draws", type=int, default=1000)
    lam.add_argument("--grid", help="number of grid points or comma-separated indices")
    lam.add_argument("--x", help="design CSV (mc only)")
    lam.add_argument("--seed", type=int, default=0)
    lam.add_argument("--out", required=True, help="output CSV path")

    pr = subs.add_parser("prox", help="evaluate the sorted-l1 prox")
    pr.add_argument("--y", required=True)
    pr.add_argument("--lambda", dest="lambda_file", required=True)
    pr.add_argument("--bench", default="none", help="'none' or a repeat count")
    pr.add_argument("--out", required=True)

    sim = subs.add_parser("simulate", help="run a simulation study")
    sim.add_argument("--scenario", required=True,
                     choices=["orthogonal", "gaussian", "gaussian_design", "anova", "gwas"])
    sim.add_argument("--config", required=True, help="JSON configuration")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, help="override the config seed")
    sim.add_argument("--jobs", type=int, default=None,
                     help="worker processes (default: SLOPE_NUM_THREADS or 1)")

    rr = subs.add_parser("rerun", help="repeat a recorded run")
    rr.add_argument("manifest")
    return parser


_COMMANDS = {"solve": cmd_solve, "lambda": cmd_lambda, "prox": cmd_prox,
             "simulate": cmd_simulate}


def _dispatch(args, argv):
    if args.command == "rerun":
        return cmd_rerun(args, None)
    config = {k: v for k, v in vars(args).items() if k != "config_data"}
    manifest = io.RunManifest.start(args.command, argv, config, seed=getattr(args, "seed", None))
    outputs, code = _COMMANDS[args.command](args, manifest)
    manifest.finish(outputs)
    if args.command == "simulate":
        manifest.write(os.path.join(args.out, "manifest.json"))
    else:
        manifest.write(_manifest_path(args.out))
    return code


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args, argv)
    except SolverError as exc:
        print(f"slope: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (io.InputError, ValueError, OSError, np.linalg.LinAlgError,
            RankDeficientError, DegenerateFitError) as exc:
        print(f"slope: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
