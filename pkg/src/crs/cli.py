"""Command-line front end.

Every subcommand reads a JSON distribution spec (where one is needed),
runs the requested computation, and emits a single RFC-4180 CSV report —
to stdout, or to ``--out`` with companion PNG figures written alongside
(``--no-figures`` suppresses them).  All randomness flows from ``--seed``;
the same invocation produces byte-identical CSV.

Exit status: 0 on success, 1 when the verification suite reports a
failing check, 2 on usage or spec errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bounds as bnd
from . import coding
from .measures import (GENERATORS, SpecError, chi2_generator,
                       divergence_report, kl_generator, level_stats,
                       load_pair, survival_inverse)
from .samplers import (astar_depth_limited_batch, astar_global_batch,
                       rejection_sample_batch)
from .truncation import optimal_truncation, truncate
from .verify import empirical_law, rows_to_csv, run_acceptance

_METHODS = ("rejection", "rejection-budgeted", "astar", "astar-depth")


@dataclass(frozen=True)
class RunConfig:
    """Core inputs of a CLI run, checked before any computation starts."""

    subcommand: str
    spec: Path | None = None
    method: str | None = None
    k: int | None = None
    eps: float | None = None
    gamma: float | None = None
    f: str = "kl"
    n: int = 1000
    seed: int | None = None
    out: Path | None = None

    @staticmethod
    def from_args(args) -> "RunConfig":
        cfg = RunConfig(
            subcommand=args.subcommand,
            spec=getattr(args, "spec", None),
            method=getattr(args, "method", None),
            k=getattr(args, "k", None),
            eps=getattr(args, "eps", None),
            gamma=getattr(args, "gamma", None),
            f=getattr(args, "f", "kl"),
            n=getattr(args, "n", 1000),
            seed=getattr(args, "seed", None),
            out=getattr(args, "out", None))
        if cfg.n < 1:
            raise SpecError("n", f"need at least one run, got {cfg.n}")
        if cfg.k is not None and cfg.k < 1:
            raise SpecError("k", f"budget must be at least 1, got {cfg.k}")
        if cfg.method in ("astar-depth", "rejection-budgeted") and cfg.k is None:
            raise SpecError("k", f"--k is required for method {cfg.method}")
        if cfg.subcommand == "truncate":
            if (getattr(args, "cap", None) is None) == (cfg.eps is None):
                raise SpecError("cap", "give exactly one of --cap or --eps")
        if cfg.subcommand == "sample":
            if getattr(args, "cap", None) is not None and cfg.eps is not None:
                raise SpecError("cap", "--cap and --eps are mutually exclusive")
        return cfg


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if cell is None else
                         (repr(cell) if isinstance(cell, float) else cell)
                        for cell in row])
    return buf.getvalue()


def _emit(args, header, rows, figure_jobs=()) -> None:
    """Write the CSV to --out or stdout; render figures next to --out."""
    text = _csv_text(header, rows)
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, newline="")
    if not args.no_figures:
        for suffix, job in figure_jobs:
            job(out.with_name(f"{out.stem}_{suffix}.png"))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_report(args) -> int:
    pd = load_pair(args.spec)
    rows = []
    for gen in (kl_generator, chi2_generator):
        rep = divergence_report(pd, gen)
        rows.append(("divergence", f"{gen.name}-divergence", rep.f_divergence,
                     None, None, None, None, None))
    rep = divergence_report(pd)
    rows.append(("divergence", "kl-bits", rep.kl_bits,
                 None, None, None, None, None))
    rows.append(("divergence", "max-bits", rep.max_bits,
                 None, None, None, None, None))
    sup = pd.sup_ratio
    hi = 1.1 * sup if np.isfinite(sup) else 1.5 * survival_inverse(pd, 0.01)
    for h in np.linspace(0.0, hi, args.grid):
        st = level_stats(pd, float(h))
        rows.append(("level", None, None, float(h), st.tail_p, st.tail_q,
                     st.clipped_mean, st.survival))

    def fig_levels(path):
        from .figures import save_level_curves
        save_level_curves(pd, path)

    _emit(args,
          ("record", "name", "value", "h", "tail_p", "tail_q",
           "clipped_mean", "survival"),
          rows, [("levels", fig_levels)])
    return 0


def cmd_truncate(args) -> int:
    pd = load_pair(args.spec)
    tt = truncate(pd, args.cap) if args.cap is not None \
        else optimal_truncation(pd, args.eps)
    rows = [("summary", "cap", tt.cap, None, None, None, None),
            ("summary", "effective_sup", tt.effective_sup,
             None, None, None, None),
            ("summary", "clipped_mean", tt.clipped_mean,
             None, None, None, None)]
    if tt.tv_to_target is not None:
        rows.append(("summary", "tv_to_target", tt.tv_to_target,
                     None, None, None, None))
    figure_jobs = []
    if tt.masses is not None:
        for i in range(tt.base.alphabet_size):
            rows.append(("atom", None, None, i, float(tt.base.p[i]),
                         float(tt.base.q[i]), float(tt.masses[i])))

        def fig_bars(path):
            from .figures import save_truncation_bars
            save_truncation_bars(tt, path)

        figure_jobs.append(("masses", fig_bars))
    _emit(args,
          ("record", "name", "value", "symbol", "proposal", "target",
           "truncated"),
          rows, figure_jobs)
    return 0


def _run_sampler(args, target):
    if args.method == "astar":
        return astar_global_batch(target, args.n, seed=args.seed)
    if args.method == "astar-depth":
        return astar_depth_limited_batch(target, args.k, args.n,
                                         seed=args.seed)
    if args.method == "rejection":
        return rejection_sample_batch(target, args.n, seed=args.seed)
    return rejection_sample_batch(target, args.n, seed=args.seed,
                                  budget=args.k, fail_policy=args.policy)


def cmd_sample(args) -> int:
    pd = load_pair(args.spec)
    target = pd
    if args.cap is not None:
        target = truncate(pd, args.cap)
    elif args.eps is not None:
        target = optimal_truncation(pd, args.eps)
    batch = _run_sampler(args, target)

    rows = []
    finite = pd.kind == "finite"
    for j in range(batch.n_runs):
        value = int(batch.values[j]) if finite else float(batch.values[j])
        rows.append(("run", None, j, int(batch.indices[j]), value,
                     int(batch.examined[j]), None, None, None))
    figure_jobs = []
    if finite:
        reference = getattr(target, "masses", None)
        if reference is None:
            reference = target.q
        law = empirical_law(batch.values, reference)
        for s in range(reference.size):
            rows.append(("law", None, None, None, None, None, s,
                         float(law.masses[s]), float(reference[s])))
        rows.append(("summary", "tv_to_reference", None, None,
                     law.tv_to_reference, None, None, None, None))
        rows.append(("summary", "mc_tolerance", None, None, law.mc_tolerance,
                     None, None, None, None))

        def fig_law(path):
            from .figures import save_law_comparison
            save_law_comparison(law.masses, reference, path,
                                title=f"Empirical law, method {args.method}")

        figure_jobs.append(("law", fig_law))
    rows.append(("summary", "mean_examined", None, None,
                 float(batch.examined.mean()), None, None, None, None))
    rows.append(("summary", "mean_log2_index", None, None,
                 float(np.log2(batch.indices).mean()), None, None, None, None))

    def fig_hist(path):
        from .figures import save_index_histogram
        save_index_histogram(batch.indices, path)

    figure_jobs.append(("indices", fig_hist))
    _emit(args,
          ("record", "name", "run", "index", "value", "examined", "symbol",
           "empirical", "reference"),
          rows, figure_jobs)
    return 0


def cmd_code(args) -> int:
    pd = load_pair(args.spec)
    if args.method == "astar-depth":
        batch = astar_depth_limited_batch(pd, args.k, args.n, seed=args.seed)
    else:
        batch = astar_global_batch(pd, args.n, seed=args.seed)
    info = divergence_report(pd).kl_bits
    rep = coding.rate_report(batch.indices, info)
    coder = coding.ZetaCoder.for_information(info)
    ideal = coder.ideal_codelength(batch.indices)
    lengths = coding.codeword_length(batch.indices)
    rows = [("rate", field, float(getattr(rep, field)), None, None, None)
            for field in ("info_bits", "exponent", "log2_normalizer",
                          "entropy_bits", "mean_ideal_bits", "se_ideal_bits",
                          "mean_code_bits", "bound_exponent_form",
                          "bound_rate_bits", "bound_alt_bits",
                          "within_exponent_form", "within_rate_bound")]
    stream = "".join(coding.encode_index(int(n)) for n in batch.indices)
    rows.append(("stream", "total_bits", float(len(stream)),
                 None, None, None))
    rows.append(("stream", "bits_per_index",
                 float(len(stream)) / batch.n_runs, None, None, None))
    for j in range(batch.n_runs):
        rows.append(("codeword", None, None, int(batch.indices[j]),
                     float(ideal[j]), int(lengths[j])))

    def fig_scatter(path):
        from .figures import save_codelength_scatter
        save_codelength_scatter(batch.indices, ideal, lengths, path)

    _emit(args,
          ("record", "name", "value", "index", "ideal_bits", "code_bits"),
          rows, [("codelengths", fig_scatter)])
    return 0


def _bound_rows(args):
    gen = GENERATORS[args.f]
    reports = []
    if args.dkl is not None and args.eps is not None:
        reports.append(bnd.depth_limited_complexity(args.dkl, args.eps))
    if args.dkl is not None and args.k is not None:
        reports.append(bnd.index_tail_bound(args.dkl, args.k))
    if args.df is not None and args.eps is not None:
        reports.append(bnd.classic_rejection_complexity(args.df, gen, args.eps))
        reports.append(bnd.improved_rejection_complexity(args.df, gen,
                                                         args.eps, args.gamma))
    if args.l is not None and args.t is not None:
        acc = bnd.importance_epsilon(args.l, args.t, args.tail)
        params = {"l": args.l, "t": args.t, "tail": args.tail}
        reports.append(bnd.BoundReport("importance-epsilon", params,
                                       acc.epsilon))
        reports.append(bnd.BoundReport("importance-failure-prob", params,
                                       acc.failure_prob, unit="probability"))
        reports.append(bnd.BoundReport("importance-deviation-scale", params,
                                       acc.deviation_scale))
        reports.append(bnd.importance_mean_error_bound(args.l, args.t,
                                                       args.tail, 1.0))
    if args.l is not None and args.eps is not None:
        reports.append(bnd.BoundReport(
            "two-level-required-t", {"l": args.l, "eps": args.eps},
            bnd.two_level_required_t(args.l, args.eps)))
    return reports


def cmd_bounds(args) -> int:
    reports = _bound_rows(args)
    if not reports:
        raise SpecError("bounds", "no computable bound: give --dkl/--df with "
                                  "--eps or --k, or --l with --t or --eps")
    rows = []
    for rep in reports:
        params = ";".join(f"{k}={v}" for k, v in rep.params.items())
        rows.append(("bound", rep.name, params, rep.value, rep.ceiled,
                     rep.unit))
    figure_jobs = []
    if args.df is not None and args.eps is not None:
        gen = GENERATORS[args.f]

        def fig_curves(path):
            from .figures import save_complexity_curves
            save_complexity_curves(gen, args.eps, args.gamma, path)

        figure_jobs.append(("complexity", fig_curves))
    _emit(args, ("record", "name", "params", "value", "ceiled", "unit"),
          rows, figure_jobs)
    return 0


def cmd_verify(args) -> int:
    pd = load_pair(args.spec)
    rows = run_acceptance(pd, args.seed, threads=args.threads)
    text = rows_to_csv(rows)
    if args.out is None:
        sys.stdout.write(text)
    else:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, newline="")
        if not args.no_figures:
            from .figures import save_suite_margins
            save_suite_margins(rows, out.with_name(f"{out.stem}_margins.png"))
    failed = [r for r in rows if not r.passed]
    for r in rows:
        status = "pass" if r.passed else "FAIL"
        print(f"{status}  {r.test_id}: statistic {r.statistic!r} "
              f"vs bound {r.bound!r}", file=sys.stderr)
    if failed:
        print(f"{len(failed)} of {len(rows)} checks FAILED", file=sys.stderr)
        return 1
    print(f"all {len(rows)} checks passed", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(sub, *, spec=True, seed=False):
    if spec:
        sub.add_argument("--spec", required=True, type=Path,
                         help="JSON distribution-pair spec")
    sub.add_argument("--seed", type=int, required=seed, default=None,
                     help="master seed (required wherever randomness is used)")
    sub.add_argument("--out", type=Path, default=None,
                     help="CSV output path (default: stdout)")
    sub.add_argument("--no-figures", action="store_true",
                     help="skip PNG figures next to --out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crs",
        description="Channel-simulation samplers, truncation calculus, "
                    "index coding, and verification reports.")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    sub = subs.add_parser("report", help="divergences and level-set tables")
    _add_common(sub)
    sub.add_argument("--grid", type=int, default=50,
                     help="number of level-grid points")
    sub.set_defaults(func=cmd_report)

    sub = subs.add_parser("truncate", help="truncated-target table")
    _add_common(sub)
    sub.add_argument("--cap", type=float, default=None,
                     help="truncation cap on the ratio")
    sub.add_argument("--eps", type=float, default=None,
                     help="TV tolerance; picks the matching cap")
    sub.set_defaults(func=cmd_truncate)

    sub = subs.add_parser("sample", help="run a selection sampler")
    _add_common(sub, seed=True)
    sub.add_argument("--method", choices=_METHODS, required=True)
    sub.add_argument("--k", type=int, default=None,
                     help="proposal budget (budgeted methods)")
    sub.add_argument("--n", type=int, default=1000, help="number of runs")
    sub.add_argument("--policy", choices=("fresh-proposal", "first-index"),
                     default="fresh-proposal",
                     help="budget-exhausted policy for rejection-budgeted")
    sub.add_argument("--cap", type=float, default=None,
                     help="truncate the target at this cap before sampling")
    sub.add_argument("--eps", type=float, default=None,
                     help="truncate the target to this TV before sampling")
    sub.set_defaults(func=cmd_sample)

    sub = subs.add_parser("code", help="index coding rate report")
    _add_common(sub, seed=True)
    sub.add_argument("--method", choices=("astar", "astar-depth"),
                     default="astar")
    sub.add_argument("--k", type=int, default=None,
                     help="proposal budget for astar-depth")
    sub.add_argument("--n", type=int, default=1000, help="number of runs")
    sub.set_defaults(func=cmd_code)

    sub = subs.add_parser("bounds", help="closed-form bound reports")
    _add_common(sub, spec=False)
    sub.add_argument("--dkl", type=float, default=None,
                     help="relative entropy in bits")
    sub.add_argument("--df", type=float, default=None,
                     help="f-divergence value")
    sub.add_argument("--f", choices=tuple(GENERATORS), default="kl",
                     help="f-divergence generator")
    sub.add_argument("--eps", type=float, default=None, help="TV tolerance")
    sub.add_argument("--gamma", type=float, default=0.9,
                     help="tolerance split for the improved bound")
    sub.add_argument("--k", type=int, default=None, help="proposal budget")
    sub.add_argument("--l", type=float, default=None,
                     help="information scale in bits")
    sub.add_argument("--t", type=float, default=None,
                     help="excess-sample exponent in bits")
    sub.add_argument("--tail", type=float, default=0.0,
                     help="tail mass at the matching ratio level")
    sub.set_defaults(func=cmd_bounds)

    sub = subs.add_parser("verify", help="run the full acceptance suite")
    _add_common(sub, seed=True)
    sub.add_argument("--threads", type=int, default=None,
                     help="section parallelism (default: CRS_THREADS)")
    sub.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        RunConfig.from_args(args)
        return args.func(args)
    except SpecError as exc:
        print(f"error: {exc.field}: {exc.message}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
