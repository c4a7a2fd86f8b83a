"""Desk-scale versions of the reference experiments on the fixture chains."""

import numpy as np

from .baselines import baseline_reports
from .ctw import build_counts, map_tree, run_ctw
from .entropy import entropy_posterior, entropy_samples
from .inference import PosteriorSummary
from .io import write_histogram
from .sampling import joint_blocks, sample_tree_batch
from .simulate import fixture

DEPTH = 10


def _data(name, n, seed):
    fx = fixture(name)
    return fx, fx.generate(n, seed=seed, depth=DEPTH)


def _key(report):
    return f"plugin_k{report.params['k']}" if report.name == "plugin" else report.name


def _summary_lines(label, s):
    lo, hi = s.credible_interval
    out = [f"{label}: mean {s.mean:.4f} sd {s.sd:.4f} mode {s.mode:.4f} interval [{lo:.4f}, {hi:.4f}]"]
    for i, c in enumerate(s.components or [], 1):
        out.append(f"  mode {i}: weight {c.weight:.3f} mean {c.mean:.4f} sd {c.sd:.4f}")
    return out


def _summary_record(label, s):
    return [("figure_part", label), ("mean", s.mean), ("sd", s.sd), ("mode", s.mode),
            ("ci_low", s.credible_interval[0]), ("ci_high", s.credible_interval[1])]


def map_frequency(samples, seed):
    """MAP tree of ternary5 data (n=1000) and its running frequency among posterior samples."""
    _, x = _data("ternary5", 1000, seed)
    wt = run_ctw(build_counts(x, DEPTH))
    tree, logpost = map_tree(wt)
    batch = sample_tree_batch(wt, samples, seed)
    is_map = np.array([t == tree for t in batch.trees])
    running = np.cumsum(is_map[batch.index]) / np.arange(1, len(batch) + 1)
    checkpoints = [c for c in (10, 100, 1000, 10_000, 100_000) if c < samples] + [samples]
    records = [[("map_tree_leaves", tree.n_leaves), ("map_depth", tree.depth),
                ("map_posterior", float(np.exp(logpost)))]]
    records += [[("samples", c), ("map_frequency", float(running[c - 1]))] for c in checkpoints]
    table = [f"MAP tree {tree} with posterior {np.exp(logpost):.4f}"]
    table += [f"  after {c:>7} samples: frequency {running[c - 1]:.4f}" for c in checkpoints]
    return records, table


def entropy_figure(name, n, samples, seed, bins, histogram=None, prior=True):
    fx, x = _data(name, n, seed)
    post = entropy_posterior(x, samples, DEPTH, seed=seed, bins=bins)
    records, table = [], [f"{name}: true entropy rate {fx.entropy_rate}"]
    if prior:
        blocks = joint_blocks(None, None, samples, seed, m=fx.m, depth=DEPTH, beta=None)
        pri = PosteriorSummary.from_samples(entropy_samples(blocks), bins=bins)
        records.append(_summary_record("prior", pri))
        table += _summary_lines("prior", pri)
    records.append(_summary_record("posterior", post))
    table += _summary_lines("posterior", post)
    for i, c in enumerate(post.components or [], 1):
        records.append([("figure_part", "posterior"), ("component", i), ("weight", c.weight),
                        ("mean", c.mean), ("sd", c.sd)])
    if histogram:
        write_histogram(histogram, post.histogram_rows())
    return records, table


def convergence(samples, seed, sizes=(100, 300, 1000, 3000, 10_000)):
    """Estimates on growing prefixes of one ternary5 path."""
    fx, x = _data("ternary5", max(sizes), seed)
    records, table = [], [f"ternary5: true entropy rate {fx.entropy_rate}"]
    for n in sizes:
        prefix = type(x)(x.initial_context, x.body[:n], x.m)
        post = entropy_posterior(prefix, samples, DEPTH, seed=seed)
        reports = baseline_reports(prefix, ks=(5,), depth=DEPTH)
        rec = [("n", n), ("bct_mean", post.mean)] + [(_key(r), r.estimate) for r in reports]
        records.append(rec)
        table.append(f"n={n:>6}  bct {post.mean:.4f}  "
                     + "  ".join(f"{r.label} {r.estimate:.4f}" for r in reports))
    return records, table


def comparison_tables(samples, seed):
    sizes = {"ternary5": 1000, "binary3": 1000, "bimodal6": 1450}
    records, table = [], []
    for name, n in sizes.items():
        fx, x = _data(name, n, seed)
        post = entropy_posterior(x, samples, DEPTH, seed=seed)
        reports = baseline_reports(x, ks=(1, 2, 3, 4, 5), depth=DEPTH)
        records.append([("fixture", name), ("n", n), ("truth", fx.entropy_rate),
                        ("bct_mean", post.mean), ("bct_mode", post.mode)]
                       + [(_key(r), r.estimate) for r in reports])
        table.append(f"{name} (n={n}, true {fx.entropy_rate}): bct mean {post.mean:.4f}, "
                     + ", ".join(f"{r.label} {r.estimate:.4f}" for r in reports))
    return records, table


def run(figure, samples=100_000, seed=0, bins=100, histogram=None):
    if figure == "fig2":
        return map_frequency(samples, seed)
    if figure == "fig5":
        return entropy_figure("ternary5", 1000, samples, seed, bins, histogram)
    if figure == "fig6":
        return convergence(samples, seed)
    if figure == "fig7a":
        return entropy_figure("binary3", 1000, samples, seed, bins, histogram, prior=False)
    if figure == "tables":
        return comparison_tables(samples, seed)
    raise ValueError(f"unknown figure {figure!r}")
