"""Batch command-line interface.

Subcommands: regress (fit a max-affine model to a CSV), plan (run the ADP
driver on a benchmark problem), evaluate (roll out a saved cost-to-go stack),
baseline (reference policies), sample (uniform points from a polytope JSON).

Every command writes its outputs atomically, refuses to overwrite without
--force, and drops a <out>.manifest.json recording the resolved parameters,
config, seed, version, wall-clock duration and output digests.  Exit codes:
0 success, 1 usage error, 2 input error, 3 numeric failure.
"""

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time

from . import __version__
from .amap import AmapParams, estimate_to_dict, train
from .benchmarks import (BreweryConfig, EnergyConfig,
                         brewery_config_from_dict, brewery_config_to_dict,
                         brewery_deterministic_baseline, build_brewery_problem,
                         build_energy_problem, energy_config_from_dict,
                         energy_config_to_dict, make_heuristic_policy,
                         make_no_storage_policy)
from .fadp import evaluate_policy, load_stack, run_fadp, stack_to_dict
from .lp import LpError, LpNumericError, load_polytope
from .maxaffine import load_dataset
from .sampler import HitAndRunConfig, sample_uniform

CONFIG_DIR_ENV = "CVXADP_CONFIG_DIR"


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; our contract reserves 2 for
    # input errors, so route usage problems through UsageError instead
    def error(self, message):
        raise UsageError(message)


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".cvxadp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _check_overwrite(paths, force):
    if force:
        return
    for p in paths:
        if os.path.exists(p):
            raise InputError("refusing to overwrite %s (pass --force)" % p)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(command, out_path, params, config_doc, seed, outputs, t0):
    man = {
        "format": "cvxadp-manifest",
        "version": 1,
        "command": command,
        "parameters": params,
        "config": config_doc,
        "seed": seed,
        "software_version": __version__,
        "duration_sec": time.time() - t0,
        "outputs": {os.path.basename(p): _sha256(p) for p in outputs},
    }
    _atomic_write(out_path + ".manifest.json", json.dumps(man, indent=2) + "\n")


def _resolve_config_path(name):
    if os.path.exists(name):
        return name
    base = name if name.endswith(".json") else name + ".json"
    env_dir = os.environ.get(CONFIG_DIR_ENV)
    if env_dir:
        cand = os.path.join(env_dir, base)
        if os.path.exists(cand):
            return cand
    cand = os.path.join(os.path.dirname(__file__), "configs", base)
    if os.path.exists(cand):
        return cand
    raise InputError("config not found: %s" % name)


def _load_problem(problem, config_arg, horizon=None):
    """Returns (problem, config, config_doc) for a benchmark name."""
    doc = {}
    if config_arg is not None:
        path = _resolve_config_path(config_arg)
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError("cannot read config %s: %s" % (path, exc))
    try:
        if problem == "energy":
            config = energy_config_from_dict(doc) if doc else EnergyConfig()
            if horizon is not None:
                config = config.truncate(horizon)
            return build_energy_problem(config), config, energy_config_to_dict(config)
        if problem == "brewery":
            config = brewery_config_from_dict(doc) if doc else BreweryConfig()
            if horizon is not None:
                config = config.truncate(horizon)
            return build_brewery_problem(config), config, brewery_config_to_dict(config)
    except ValueError as exc:
        raise InputError("invalid config: %s" % exc)
    raise UsageError("unknown problem %r" % problem)


def _format_revenues(report, columns):
    if columns:
        lines = ["%d %s" % (i, repr(r))
                 for i, r in enumerate(report.episode_revenues)]
        lines.append("# mean %s std %s" % (repr(report.mean), repr(report.std)))
    else:
        lines = ["episode,revenue"]
        lines += ["%d,%s" % (i, repr(r))
                  for i, r in enumerate(report.episode_revenues)]
        lines.append("summary,%s,%s" % (repr(report.mean), repr(report.std)))
    return "\n".join(lines) + "\n"


def cmd_regress(args):
    try:
        data = load_dataset(args.data, header=args.header)
    except (OSError, ValueError) as exc:
        raise InputError("cannot load dataset %s: %s" % (args.data, exc))
    params = AmapParams(folds=args.folds, patience=args.patience, beta=args.beta,
                        min_cell_override=args.min_cell, seed=args.seed)
    _check_overwrite([args.out], args.force)
    t0 = time.time()
    est = train(data, params, threads=args.threads)
    _atomic_write(args.out, json.dumps(estimate_to_dict(est), indent=2) + "\n")
    _write_manifest("regress", args.out,
                    {"data": os.path.abspath(args.data), "header": args.header,
                     "folds": args.folds, "patience": args.patience,
                     "beta": args.beta, "min_cell": args.min_cell,
                     "threads": args.threads},
                    None, args.seed, [args.out], t0)
    print("wrote %s: K=%d final_train_risk=%s"
          % (args.out, est.model.K, repr(est.final_train_risk)))
    return 0


def cmd_plan(args):
    problem, config, config_doc = _load_problem(args.problem, args.config,
                                                args.horizon)
    _check_overwrite([args.out], args.force)
    t0 = time.time()
    stack, _bank = run_fadp(problem, args.n, args.m,
                            AmapParams(seed=args.seed), seed=args.seed,
                            threads=args.threads)
    _atomic_write(args.out, json.dumps(stack_to_dict(stack), indent=2) + "\n")
    _write_manifest("plan", args.out,
                    {"problem": args.problem, "n": args.n, "m": args.m,
                     "horizon": problem.horizon, "threads": args.threads},
                    config_doc, args.seed, [args.out], t0)
    print("wrote %s: %d stage models" % (args.out, stack.horizon))
    return 0


def cmd_evaluate(args):
    problem, config, config_doc = _load_problem(args.problem, args.config,
                                                args.horizon)
    try:
        stack = load_stack(args.stack)
    except (OSError, ValueError, KeyError) as exc:
        raise InputError("cannot load stack %s: %s" % (args.stack, exc))
    if stack.horizon != problem.horizon:
        raise InputError("stack horizon %d does not match problem horizon %d"
                         % (stack.horizon, problem.horizon))
    d = problem.decision_dims[1]
    if stack.estimates[0].model.d != d:
        raise InputError("stack dimension %d does not match problem dimension %d"
                         % (stack.estimates[0].model.d, d))
    _check_overwrite([args.out], args.force)
    t0 = time.time()
    report = evaluate_policy(problem, stack, args.episodes, seed=args.seed,
                             threads=args.threads)
    _atomic_write(args.out, _format_revenues(report, args.columns))
    _write_manifest("evaluate", args.out,
                    {"problem": args.problem, "stack": os.path.abspath(args.stack),
                     "episodes": args.episodes, "columns": args.columns,
                     "horizon": problem.horizon, "threads": args.threads},
                    config_doc, args.seed, [args.out], t0)
    print("wrote %s: mean=%s std=%s feasible=%.3f"
          % (args.out, repr(report.mean), repr(report.std),
             report.feasible_fraction))
    return 0


def cmd_baseline(args):
    pair = (args.problem, args.which)
    problem, config, config_doc = _load_problem(args.problem, args.config,
                                                args.horizon)
    _check_overwrite([args.out], args.force)
    t0 = time.time()
    if pair == ("energy", "heuristic"):
        policy = make_heuristic_policy(config)
    elif pair == ("energy", "nostorage"):
        policy = make_no_storage_policy(config)
    elif pair == ("brewery", "deterministic"):
        policy = None
    else:
        raise UsageError("baseline %r is not defined for problem %r"
                         % (args.which, args.problem))
    if policy is not None:
        report = evaluate_policy(problem, policy, args.episodes, seed=args.seed,
                                 threads=args.threads)
        text = _format_revenues(report, args.columns)
        summary = (report.mean, report.std)
    else:
        # open-loop plan scored on the deterministic problem: one row
        _plan, revenue = brewery_deterministic_baseline(config)
        if args.columns:
            text = "0 %s\n# mean %s std %s\n" % (repr(revenue), repr(revenue),
                                                 repr(0.0))
        else:
            text = ("episode,revenue\n0,%s\nsummary,%s,%s\n"
                    % (repr(revenue), repr(revenue), repr(0.0)))
        summary = (revenue, 0.0)
    _atomic_write(args.out, text)
    _write_manifest("baseline", args.out,
                    {"problem": args.problem, "which": args.which,
                     "episodes": args.episodes, "columns": args.columns,
                     "horizon": problem.horizon, "threads": args.threads},
                    config_doc, args.seed, [args.out], t0)
    print("wrote %s: mean=%s std=%s" % (args.out, repr(summary[0]),
                                        repr(summary[1])))
    return 0


def cmd_sample(args):
    try:
        region = load_polytope(args.polytope)
    except (OSError, ValueError, KeyError) as exc:
        raise InputError("cannot load polytope %s: %s" % (args.polytope, exc))
    _check_overwrite([args.out], args.force)
    t0 = time.time()
    pts, info = sample_uniform(region, args.count,
                               HitAndRunConfig(seed=args.seed))
    lines = [",".join(repr(float(v)) for v in row) for row in pts]
    _atomic_write(args.out, "\n".join(lines) + "\n")
    _write_manifest("sample", args.out,
                    {"polytope": os.path.abspath(args.polytope),
                     "count": args.count, "mode": info.mode, "dim": info.dim},
                    None, args.seed, [args.out], t0)
    print("wrote %s: %d points (mode=%s)" % (args.out, len(pts), info.mode))
    return 0


def _add_common(sp, episodes=None):
    sp.add_argument("--seed", type=int, default=0, help="master RNG seed")
    sp.add_argument("--out", required=True, help="output file")
    sp.add_argument("--threads", type=int, default=1,
                    help="worker threads (results identical for any value)")
    sp.add_argument("--force", action="store_true",
                    help="overwrite existing outputs")
    if episodes is not None:
        sp.add_argument("--episodes", type=int, default=episodes,
                        help="evaluation episodes (default %d)" % episodes)


def build_parser():
    p = _Parser(prog="cvxadp",
                description="Convex stochastic programming toolkit: max-affine "
                            "regression, LP, polytope sampling, approximate DP.")
    p.add_argument("--version", action="version", version="cvxadp " + __version__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("regress", help="fit a max-affine model to CSV data")
    sp.add_argument("--data", required=True, help="CSV: feature columns then target")
    sp.add_argument("--header", action="store_true", help="skip a CSV header row")
    sp.add_argument("--folds", type=int, default=10)
    sp.add_argument("--patience", type=int, default=5)
    sp.add_argument("--beta", type=float, default=1e-6)
    sp.add_argument("--min-cell", type=int, default=None,
                    help="override the minimum cell size")
    _add_common(sp)
    sp.set_defaults(func=cmd_regress)

    sp = sub.add_parser("plan", help="run the ADP driver on a benchmark")
    sp.add_argument("problem", choices=["energy", "brewery"])
    sp.add_argument("--config", default=None, help="config JSON (path or name)")
    sp.add_argument("--n", type=int, default=25, help="decision samples per stage")
    sp.add_argument("--m", type=int, default=10, help="disturbance draws per stage")
    sp.add_argument("--horizon", type=int, default=None,
                    help="truncate the problem horizon")
    _add_common(sp)
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("evaluate", help="greedy-evaluate a cost-to-go stack")
    sp.add_argument("problem", choices=["energy", "brewery"])
    sp.add_argument("--stack", required=True, help="stack JSON from 'plan'")
    sp.add_argument("--config", default=None)
    sp.add_argument("--horizon", type=int, default=None)
    sp.add_argument("--columns", action="store_true",
                    help="whitespace-delimited output for plotting")
    _add_common(sp, episodes=1000)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("baseline", help="run a reference policy")
    sp.add_argument("problem", choices=["energy", "brewery"])
    sp.add_argument("which", choices=["heuristic", "nostorage", "deterministic"])
    sp.add_argument("--config", default=None)
    sp.add_argument("--horizon", type=int, default=None)
    sp.add_argument("--columns", action="store_true")
    _add_common(sp, episodes=1000)
    sp.set_defaults(func=cmd_baseline)

    sp = sub.add_parser("sample", help="uniform samples from a polytope JSON")
    sp.add_argument("--polytope", required=True, help='JSON file {"Q": ..., "c": ...}')
    sp.add_argument("--count", type=int, default=1000)
    _add_common(sp)
    sp.set_defaults(func=cmd_sample)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return 1
    except InputError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return 2
    except LpNumericError as exc:
        print("numeric failure: %s" % exc, file=sys.stderr)
        return 3
    except LpError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return 2
    except ValueError as exc:
        # parameter validation from the library (bad --n, --folds, ...)
        print("usage error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
