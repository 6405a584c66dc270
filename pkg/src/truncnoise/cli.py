"""``truncnoise`` command line: optimize, evaluate, compare, verify, sample.

Exit codes
----------
0  success
2  invalid arguments or run configuration
3  training finished but the result collapsed (delta close to 1, mass at the center)
4  training diverged (non-finite loss or parameters)
5  malformed input file (noise or pair JSON)
6  bisection could not bracket the requested match
7  exact oracle exceeded its work budget
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

from . import __version__
from .compare import Scenario, match_baseline
from .config import load_run_config
from .buckets import BucketConfig
from .curves import REFERENCE_H, delta_curve
from .errors import BracketError, InvalidArgument, ResourceLimitError, SchemaError, TrainingError
from .grid import dumps_pmf, loads_pmf, sample_noise, sample_radial
from .learner import scenario_pair, train
from .oracle import DEFAULT_TERM_BUDGET, exact_deltas
from .verify import verify
from .worst_case import identity_pair, sensitivity_pair, subsampled_pair, swap

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_COLLAPSE = 3
EXIT_DIVERGED = 4
EXIT_MALFORMED = 5
EXIT_BRACKET = 6
EXIT_BUDGET = 7
THREADS_ENV = "TRUNCNOISE_THREADS"
ORACLE_MAX_SUPPORT = 20


def threads():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        raise InvalidArgument(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise InvalidArgument(f"{THREADS_ENV} must be at least 1")
    return value


def write_atomic(files):
    """Write ``{path: text}`` so that no target exists half-written.

    Everything goes to temporary files first; renames happen only after all
    writes succeeded.
    """
    staged = []
    try:
        for path, text in files.items():
            directory = os.path.dirname(os.path.abspath(path))
            os.makedirs(directory, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            staged.append((tmp, path))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, path in staged:
        os.replace(tmp, path)


def emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        write_atomic({out: text})


def read_noise(path):
    with open(path) as fh:
        return loads_pmf(fh.read())


def build_pair(pmf, args):
    if args.scenario == "sensitivity":
        return sensitivity_pair(pmf, args.s)
    if args.scenario == "dpsgd":
        return subsampled_pair(pmf, args.q, args.clip)
    return identity_pair(pmf)


# ---------------------------------------------------------------------------
# commands

def cmd_optimize(args):
    run = load_run_config(args.config)
    out_dir = args.out or run.output_dir
    result = train(run.train)
    pair = scenario_pair(result.pmf, run.train)
    curve = delta_curve(pair, run.report.n_list, run.report.eps_list, run.report.accountants, workers=threads())
    write_atomic({
        os.path.join(out_dir, "noise.json"): dumps_pmf(result.pmf),
        os.path.join(out_dir, "metrics.csv"): result.metrics_csv(),
        os.path.join(out_dir, "curve.csv"): curve.to_csv(),
    })
    summary = {"reference_delta": result.reference_delta, "collapsed": result.collapsed,
               "final_lx": float(result.trace["lx"][-1]), "wall_clock": result.wall_clock, "output_dir": out_dir}
    print(json.dumps(summary))
    return EXIT_COLLAPSE if result.collapsed else EXIT_OK


def cmd_evaluate(args):
    pmf = read_noise(args.noise)
    pair = build_pair(pmf, args)
    h = args.h if args.h is not None else REFERENCE_H
    # without --f the factor is chosen per n so the composed losses stay in range
    cfg = BucketConfig(h, args.f) if args.f is not None else None
    curve = delta_curve(pair, args.n, args.eps, args.accountants, cfg=cfg, workers=threads(), h=h)
    extra = None
    if args.oracle:
        if pair.support.size > ORACLE_MAX_SUPPORT:
            raise InvalidArgument(f"oracle columns need a support of at most {ORACLE_MAX_SUPPORT} points")
        exact = {}
        for n in sorted(set(args.n)):
            ab = exact_deltas(pair, n, args.eps, args.oracle_budget)
            ba = exact_deltas(swap(pair), n, args.eps, args.oracle_budget)
            for eps, x, y in zip(args.eps, ab, ba):
                exact[(n, eps)] = (max(x[0], y[0]), max(x[1], y[1]))
        extra = {"exact_adp": [exact[(r.n, r.eps)][0] for r in curve.rows],
                 "exact_pdp": [exact[(r.n, r.eps)][1] for r in curve.rows]}
    emit(curve.to_csv(extra), args.out)
    return EXIT_OK


def cmd_compare(args):
    pmf = read_noise(args.noise)
    scenario = Scenario("sensitivity", args.s)
    report = match_baseline(pmf, args.baseline, args.matching, args.eps, args.n, scenario, args.order)
    emit(json.dumps(report.to_dict(), indent=1) + "\n", args.out)
    return EXIT_OK


def cmd_verify(args):
    with open(args.noise) as fh:
        pmf = loads_pmf(fh.read(), validate=False)
    report = verify(pmf, args.s, args.eps)
    emit(json.dumps(report, indent=1) + "\n", args.out)
    return EXIT_OK


def cmd_sample(args):
    pmf = read_noise(args.noise)
    if args.dim == 1:
        values = sample_noise(pmf, args.seed, args.count)
        text = "".join(f"{v:.17g}\n" for v in values)
    else:
        values = sample_radial(pmf, args.dim, args.seed, args.count)
        text = "".join(",".join(f"{v:.17g}" for v in row) + "\n" for row in values)
    emit(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------

def _scenario_args(p, with_identity=False):
    choices = ["sensitivity", "dpsgd"] + (["identity"] if with_identity else [])
    p.add_argument("--scenario", choices=choices, default="sensitivity")
    p.add_argument("--s", type=float, default=1.0, help="sensitivity (shift) for the sensitivity scenario")
    p.add_argument("--q", type=float, default=0.1, help="sampling probability for dpsgd")
    p.add_argument("--clip", type=float, default=1.0, help="clipping bound for dpsgd")


def build_parser():
    parser = argparse.ArgumentParser(prog="truncnoise", description="Learn and evaluate truncated additive noise.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="train a noise distribution from a run file")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides output_dir in the run file)")
    p.set_defaults(func=cmd_optimize, input_error=EXIT_USAGE)

    p = sub.add_parser("evaluate", help="delta(eps) curve CSV for a noise file")
    p.add_argument("noise")
    _scenario_args(p, with_identity=True)
    p.add_argument("--n", type=int, nargs="+", default=[1])
    p.add_argument("--eps", type=float, nargs="+", default=[0.3])
    p.add_argument("--accountants", nargs="+", choices=["adp", "pdp", "ma"], default=["adp", "pdp", "ma"])
    p.add_argument("--h", type=int, help="bucket half count (default: reference resolution)")
    p.add_argument("--f", type=float, help="bucket factor (default: chosen to cover the loss range)")
    p.add_argument("--oracle", action="store_true", help="append exact oracle columns (small supports only)")
    p.add_argument("--oracle-budget", type=int, default=DEFAULT_TERM_BUDGET,
                   help="maximum number of products the exact composition may form")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate, input_error=EXIT_MALFORMED)

    p = sub.add_parser("compare", help="match a baseline by delta or utility and report the KL divergence")
    p.add_argument("noise")
    p.add_argument("--baseline", choices=["gaussian", "staircase"], default="gaussian")
    p.add_argument("--matching", choices=["delta", "utility"], default="delta")
    p.add_argument("--eps", type=float, default=0.3)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--order", type=int, choices=[1, 2], default=2, help="utility order")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare, input_error=EXIT_MALFORMED)

    p = sub.add_parser("verify", help="structure, normalization, shift invariance and soundness checks")
    p.add_argument("noise")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify, input_error=EXIT_MALFORMED)

    p = sub.add_parser("sample", help="draw noise samples")
    p.add_argument("noise")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample, input_error=EXIT_MALFORMED)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return args.input_error
    except InvalidArgument as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingError as exc:
        print(f"error: training diverged at {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except BracketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BRACKET
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
