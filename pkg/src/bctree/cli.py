"""Command-line interface: ``bctree <command> [options]``."""

import argparse
import sys

import numpy as np

from . import __version__
from ._validation import check_beta, check_random_state
from .baselines import baseline_reports
from .ctw import build_counts, map_tree, run_ctw
from .entropy import entropy_posterior
from .exceptions import BCTError, DomainError
from .inference import order_posterior, predictive
from .io import format_records, load_series, write_histogram, write_series
from .sampling import joint_blocks, sample_tree_batch
from .simulate import FIXTURES, fixture
from .trees import TimeSeries, format_context

FIGURES = ("fig2", "fig5", "fig6", "fig7a", "tables")


def _add_model_args(p, data=True):
    if data:
        p.add_argument("input", help="series file: whitespace-separated integer symbols")
        p.add_argument("--context-in-file", action="store_true",
                       help="the first DEPTH symbols of the file are the initial context")
    p.add_argument("--depth", type=int, default=10, help="maximum model depth (default 10)")
    p.add_argument("--beta", type=float, default=None,
                   help="prior hyperparameter (default 1 - 2^(1-m))")
    p.add_argument("--alphabet", type=int, default=None, help="alphabet size (default: inferred)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=("table", "records"), default="table")


def build_parser():
    parser = argparse.ArgumentParser(prog="bctree", description="Bayesian context tree inference")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("map", help="maximum a posteriori tree")
    _add_model_args(p)

    p = sub.add_parser("entropy", help="entropy-rate posterior and baselines")
    _add_model_args(p)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--level", type=float, default=0.95, help="credible level")
    p.add_argument("--k", type=int, nargs="+", default=[1, 2, 3, 4, 5], help="plug-in block lengths")
    p.add_argument("--histogram", help="write the histogram CSV here")
    p.add_argument("--n-jobs", type=int, default=1)

    p = sub.add_parser("predict", help="posterior predictive of the next symbols")
    _add_model_args(p)
    p.add_argument("--horizon", type=int, default=1)
    p.add_argument("--continuation", type=int, nargs="*", default=None,
                   help="symbols to feed after each step instead of drawing them")

    p = sub.add_parser("sample", help="draw trees from the posterior or the prior")
    p.add_argument("input", nargs="?", help="series file; omit with --prior")
    p.add_argument("--context-in-file", action="store_true")
    _add_model_args(p, data=False)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--prior", action="store_true", help="sample from the prior (no data)")
    p.add_argument("--params", action="store_true", help="also draw leaf parameters")
    p.add_argument("--depth-histogram", help="write the sampled-depth distribution here (CSV)")

    p = sub.add_parser("baselines", help="plug-in, LZ and CTW entropy estimates")
    _add_model_args(p)
    p.add_argument("--k", type=int, nargs="+", default=[1, 2, 3, 4, 5])

    p = sub.add_parser("simulate", help="export a series simulated from a reference chain")
    p.add_argument("fixture", choices=sorted(FIXTURES))
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--depth", type=int, default=10, help="context symbols written before the data")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", "-o", required=True)

    p = sub.add_parser("reproduce", help="desk-scale analogues of the reference experiments")
    p.add_argument("figure", choices=FIGURES)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--format", choices=("table", "records"), default="table")
    p.add_argument("--histogram", help="write histogram CSV here (fig5, fig7a)")
    return parser


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


def _load(args):
    series, notes = load_series(args.input, args.depth, args.alphabet, args.context_in_file)
    for n in notes:
        _warn(n)
    return series


def _emit(args, records, table):
    if args.format == "records":
        sys.stdout.write(format_records(records))
    else:
        sys.stdout.write("\n".join(table) + "\n" if table else "")


def _tree_field(tree):
    return ",".join(format_context(s, tree.m) for s in tree.sorted_leaves)


def _fit(series, args):
    counts = build_counts(series, args.depth)
    return counts, run_ctw(counts, check_beta(args.beta, series.m))


def cmd_map(args):
    series = _load(args)
    _, wt = _fit(series, args)
    tree, logpost = map_tree(wt)
    post = float(np.exp(logpost))
    records = [[("tree", _tree_field(tree)), ("depth", tree.depth), ("leaves", tree.n_leaves),
                ("log_posterior", logpost), ("posterior", post)]]
    table = [f"MAP tree: depth {tree.depth}, {tree.n_leaves} leaves"]
    table += tree.to_lines()
    table += [f"log posterior  {logpost:.6f}", f"posterior      {post:.6g}"]
    _emit(args, records, table)


def _summary_records(summary, label="bct"):
    rec = [("estimator", label), ("mean", summary.mean), ("sd", summary.sd),
           ("mode", summary.mode), ("ci_low", summary.credible_interval[0]),
           ("ci_high", summary.credible_interval[1]), ("level", summary.level),
           ("n_samples", summary.n_samples)]
    if summary.sd == 0:
        rec.append(("degenerate", 1))
    out = [rec]
    for i, c in enumerate(summary.components or [], 1):
        out.append([("estimator", label), ("component", i), ("weight", c.weight),
                    ("mean", c.mean), ("sd", c.sd)])
    return out


def _summary_table(summary, label="BCT posterior"):
    lo, hi = summary.credible_interval
    lines = [
        f"{label}: mean {summary.mean:.4f}  sd {summary.sd:.4f}  mode {summary.mode:.4f}",
        f"  {100 * summary.level:g}% interval [{lo:.4f}, {hi:.4f}] from {summary.n_samples} samples",
    ]
    if summary.sd == 0:
        lines.append("  (degenerate: all samples equal)")
    for i, c in enumerate(summary.components or [], 1):
        lines.append(f"  mode {i}: weight {c.weight:.3f}  mean {c.mean:.4f}  sd {c.sd:.4f}")
    return lines


def _baseline_records(reports):
    out = []
    for r in reports:
        rec = [("estimator", r.name), ("estimate", r.estimate)]
        rec += [(k, v) for k, v in sorted(r.params.items())]
        out.append(rec)
    return out


def _baseline_table(reports):
    return [f"{r.label:<14}{r.estimate:.4f}" for r in reports]


def cmd_entropy(args):
    series = _load(args)
    summary = entropy_posterior(series, args.samples, args.depth, args.beta, args.seed,
                                bins=args.bins, level=args.level, n_jobs=args.n_jobs)
    reports = baseline_reports(series, args.k, args.depth, args.beta)
    if args.histogram:
        write_histogram(args.histogram, summary.histogram_rows())
    records = _summary_records(summary) + _baseline_records(reports)
    table = ["entropy rate (nats/symbol)"] + _summary_table(summary) + _baseline_table(reports)
    _emit(args, records, table)


def cmd_predict(args):
    if args.horizon < 0:
        raise DomainError("horizon must be non-negative")
    series = _load(args)
    given = args.continuation or []
    if args.continuation is not None and len(given) < args.horizon - 1:
        raise DomainError(f"--continuation needs {args.horizon - 1} symbols for horizon {args.horizon}")
    rng = check_random_state(args.seed)
    m = series.m
    body = list(series.body)
    records, table = [], []
    for step in range(1, args.horizon + 1):
        current = TimeSeries(series.initial_context, np.asarray(body, dtype=np.int64), m)
        _, wt = _fit(current, args)
        dist = predictive(wt, current.recent_past(args.depth))
        p = dist.probabilities
        rec = [("step", step)] + [(f"p{a}", float(p[a])) for a in range(m)]
        table.append(f"step {step}: " + " ".join(f"{v:.6f}" for v in p))
        if step < args.horizon:
            nxt = int(given[step - 1]) if args.continuation is not None else int(rng.choice(m, p=p / p.sum()))
            if not 0 <= nxt < m:
                raise DomainError(f"continuation symbol {nxt} outside alphabet of size {m}")
            rec.append(("next", nxt))
            table[-1] += f"  -> {nxt}"
            body.append(nxt)
        records.append(rec)
    _emit(args, records, table)


def cmd_sample(args):
    if args.prior:
        m = args.alphabet or 2
        wt, counts = None, None
        beta = check_beta(args.beta, m)
    else:
        if not args.input:
            raise DomainError("sample needs an input file unless --prior is given")
        series = _load(args)
        counts, wt = _fit(series, args)
        m, beta = series.m, wt.beta
    kw = dict(m=m, depth=args.depth, beta=beta) if wt is None else {}
    records, table = [], []
    if args.params:
        blocks = joint_blocks(wt, counts, args.samples, args.seed, **kw)
        i = 0
        depths = []
        for block in blocks:
            for j in range(len(block)):
                tree, params = block.sample(j)
                depths.append(tree.depth)
                records.append([("sample", i), ("tree", _tree_field(tree))])
                table.append(f"{i}: {tree}")
                for s in tree.sorted_leaves:
                    theta = ",".join(repr(float(v)) for v in params[s])
                    records.append([("sample", i), ("leaf", format_context(s, m)), ("theta", theta)])
                    table.append(f"    {format_context(s, m)}: " + " ".join(f"{v:.4f}" for v in params[s]))
                i += 1
        depth_dist = np.bincount(depths, minlength=args.depth + 1) / len(depths)
    else:
        batch = sample_tree_batch(wt, args.samples, args.seed, **kw)
        for i, tree in enumerate(batch):
            records.append([("sample", i), ("tree", _tree_field(tree))])
            table.append(f"{i}: {tree}")
        depth_dist = order_posterior(batch, args.depth)
    if args.depth_histogram:
        lines = ["depth,frequency"] + [f"{d},{f!r}" for d, f in enumerate(map(float, depth_dist))]
        with open(args.depth_histogram, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    _emit(args, records, table)


def cmd_baselines(args):
    series = _load(args)
    reports = baseline_reports(series, args.k, args.depth, args.beta)
    _emit(args, _baseline_records(reports), _baseline_table(reports))


def cmd_simulate(args):
    fx = fixture(args.fixture)
    series = fx.generate(args.n, seed=args.seed, depth=args.depth)
    write_series(args.output, series)


def cmd_reproduce(args):
    from . import experiments

    records, table = experiments.run(args.figure, samples=args.samples, seed=args.seed,
                                     bins=args.bins, histogram=args.histogram)
    _emit(args, records, table)


COMMANDS = {
    "map": cmd_map,
    "entropy": cmd_entropy,
    "predict": cmd_predict,
    "sample": cmd_sample,
    "baselines": cmd_baselines,
    "simulate": cmd_simulate,
    "reproduce": cmd_reproduce,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (BCTError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
