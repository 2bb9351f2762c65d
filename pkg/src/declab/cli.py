"""Command-line interface: instance generation, DEC values, simulations, checks.

Every subcommand accepts ``--seed``, ``--out``, ``--format`` and
``--ct-convention``.  Results are tables (CSV with a header, or JSON lines)
written to ``--out`` or standard output.  Errors are reported on standard
error as one JSON object and a nonzero exit status.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .adversary import (
    CT_CONVENTIONS,
    DEFAULT_BUDGET,
    AdversaryError,
    HardPairReport,
    constant_runner,
    e2d_pac_runner,
    adversary_hard_pair_pac,
)
from .dec import (
    PROFILE_VARIANTS,
    DecValue,
    HullGrid,
    SolverError,
    bayesian_offset_dec,
    constrained_dec,
    dec_profile,
    hull_sup_dec,
    offset_dec,
)
from .e2d import BASELINES, BudgetError, RealizabilityError, run_baseline, run_pac, run_regret
from .io import (
    DEC_HEADER,
    PROFILE_HEADER,
    TABLE_FORMATS,
    ParseError,
    atomic_write_text,
    dec_row,
    dumps_class,
    format_table,
    load_class,
    profile_rows,
)
from .models import (
    FiniteModel,
    ModelClass,
    flat_bandit,
    make_mab_class,
    make_random_class,
    make_revealing_class,
    mixture_of,
)
from .verify import REGISTRY, VerificationReport, core_names, list_inequalities, make_union_counterexample, run_suite

EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3

VARIANTS = PROFILE_VARIANTS + ("bayesian-offset-regret",)
ALGORITHMS = ("pac", "regret") + BASELINES


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int = EXIT_USAGE) -> None:
        super().__init__(message)
        self.kind = kind
        self.code = code


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="root seed (default 0)")
    common.add_argument("--out", type=Path, default=None, help="output path (default: standard output)")
    common.add_argument("--format", choices=TABLE_FORMATS, default="csv", help="table format")
    common.add_argument(
        "--ct-convention",
        choices=CT_CONVENTIONS,
        default="proof",
        help="log factor used for the lower-bound radius (default proof)",
    )
    return common


def parse_range(text: str) -> list[int]:
    """``"a:b"`` gives ``a..b-1``; a single integer ``n`` gives ``0..n-1``."""
    try:
        if ":" in text:
            lo, hi = (int(x) for x in text.split(":", 1))
        else:
            lo, hi = 0, int(text)
    except ValueError as exc:
        raise CliError("usage", f"bad seed range {text!r}") from exc
    if hi <= lo:
        raise CliError("usage", f"empty seed range {text!r}")
    return list(range(lo, hi))


def parse_profile(text: str) -> tuple[str, np.ndarray]:
    """``"eps=a:b:n"`` or ``"gamma=a:b:n"`` as an evenly spaced grid of ``n`` points."""
    try:
        name, spec = text.split("=", 1)
        lo, hi, count = spec.split(":")
        grid = np.linspace(float(lo), float(hi), int(count))
    except ValueError as exc:
        raise CliError("usage", f"bad profile spec {text!r}; expected eps=lo:hi:n") from exc
    if name not in ("eps", "gamma") or len(grid) < 1:
        raise CliError("usage", f"bad profile spec {text!r}")
    return name, grid


def resolve_reference(model_class: ModelClass, spec: str) -> FiniteModel | str:
    """Turn a reference spec into a model, or ``"hull"``/``"proper"`` for suprema.

    Accepted forms: a member index, ``member:i``, ``flat`` or ``flat:mean``
    (bandit classes), ``mixture:w1,w2,...``, ``file:PATH`` (first model of an
    instance file), ``hull`` and ``proper``.
    """
    if spec in ("hull", "proper"):
        return spec
    try:
        if spec.isdigit() or spec.startswith("member:"):
            idx = int(spec.split(":", 1)[-1])
            return model_class[idx]
        if spec.startswith("flat"):
            mean = float(spec.split(":", 1)[1]) if ":" in spec else 0.5
            ref = flat_bandit(model_class.decision_count, mean)
            if not ref.same_spaces(model_class[0]):
                raise CliError("usage", "flat reference requires a Bernoulli bandit class")
            return ref
        if spec.startswith("mixture:"):
            weights = np.array([float(w) for w in spec.split(":", 1)[1].split(",")])
            if len(weights) != len(model_class) or np.any(weights < 0) or weights.sum() <= 0:
                raise CliError("usage", "mixture weights must be nonnegative, one per model")
            return mixture_of(model_class, weights / weights.sum())
        if spec.startswith("file:"):
            ref = load_class(spec.split(":", 1)[1])[0]
            if not ref.same_spaces(model_class[0]):
                raise CliError("usage", "reference file does not share the class spaces")
            return ref
    except (IndexError, ValueError) as exc:
        raise CliError("usage", f"bad reference spec {spec!r}: {exc}") from exc
    raise CliError("usage", f"unknown reference spec {spec!r}")


def _emit(args, text: str, path: Path | None = None) -> None:
    target = path if path is not None else args.out
    if target is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(target, text)


def _load(path: str) -> ModelClass:
    try:
        return load_class(path)
    except FileNotFoundError as exc:
        raise CliError("io", f"cannot read {path}") from exc


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.family == "mab":
        model_class = make_mab_class(args.gap, args.arms)
    elif args.family == "revealing":
        model_class = make_revealing_class(args.alpha, args.beta, args.arms)
    elif args.family == "random":
        model_class = make_random_class(args.seed, args.decisions, args.models, obs_count=args.obs)
    elif args.family == "union":
        model_class = make_union_counterexample(args.alpha, args.arms)
    else:
        model_class = ModelClass((flat_bandit(args.arms, args.mean),), ("flat",))
    _emit(args, dumps_class(model_class))
    return 0


# ---------------------------------------------------------------------------
# dec
# ---------------------------------------------------------------------------


def _single_dec(model_class, ref, variant, scale, include_ref) -> DecValue:
    if variant == "bayesian-offset-regret":
        return bayesian_offset_dec(model_class, ref, scale, include_ref)
    family, kind = variant.split("-", 1)
    if family == "offset":
        return offset_dec(model_class, ref, scale, kind, include_ref)
    return constrained_dec(model_class, ref, scale, kind, include_ref=include_ref)


def cmd_dec(args) -> int:
    model_class = _load(args.instance)
    ref = resolve_reference(model_class, args.ref)
    offset = args.variant.startswith(("offset", "bayesian"))
    scale = args.gamma if offset else args.eps
    if scale is None and not args.profile:
        raise CliError("usage", "--gamma is required for offset variants" if offset else "--eps is required")
    grid = HullGrid(resolution=args.hull_res, random_points=args.hull_random, seed=args.seed)
    rows = []
    if scale is not None:
        if ref == "hull":
            if offset:
                raise CliError("usage", "hull reference is supported for constrained variants only")
            found = hull_sup_dec(model_class, scale, args.variant.split("-", 1)[1], grid)
            dec = found.dec
            rows.append(dec_row(dec))
        elif ref == "proper":
            best = None
            for member in model_class:
                dec = _single_dec(model_class, member, args.variant, scale, args.include_ref)
                if best is None or dec.value > best.value:
                    best = dec
            rows.append(dec_row(best))
        else:
            rows.append(dec_row(_single_dec(model_class, ref, args.variant, scale, args.include_ref)))
        _emit(args, format_table(DEC_HEADER, rows, args.format))
    if args.profile:
        name, points = parse_profile(args.profile)
        if (name == "gamma") != offset or args.variant == "bayesian-offset-regret":
            raise CliError("usage", f"profile parameter {name} does not match variant {args.variant}")
        refspec = {"hull": "hull_sup", "proper": "proper_sup"}.get(ref, ref) if isinstance(ref, str) else ref
        profile = dec_profile(model_class, refspec, points, args.variant, grid)
        text = format_table(PROFILE_HEADER, profile_rows(profile), args.format)
        if args.profile_out is not None:
            atomic_write_text(args.profile_out, text)
        elif scale is None:
            _emit(args, text)
        else:
            sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

RUN_HEADER = ("algorithm", "horizon", "delta", "seed", "value", "radius", "dec_reference")
AGGREGATE_HEADER = ("algorithm", "horizon", "delta", "runs", "mean", "std", "q10", "q50", "q90", "max")


def _run_once(args, model_class, seed) -> list:
    if args.algorithm == "pac":
        res = run_pac(model_class, args.truth, args.horizon, args.delta, seed=seed, est_constant=args.est_constant)
        return [args.algorithm, args.horizon, args.delta, seed, res.risk, res.params.radius, res.chosen_dec]
    if args.algorithm == "regret":
        res = run_regret(
            model_class,
            args.truth,
            args.horizon,
            args.delta,
            c0=args.c0,
            c1=args.c1,
            seed=seed,
            est_constant=args.est_constant,
        )
        return [args.algorithm, args.horizon, args.delta, seed, res.regret, res.params.radii[-1], ""]
    res = run_baseline(model_class, args.truth, args.horizon, args.algorithm, seed=seed)
    return [args.algorithm, args.horizon, args.delta, seed, res.regret, "", ""]


def aggregate_row(algorithm: str, horizon: int, delta: float, values: Sequence[float]) -> list:
    v = np.asarray(values, dtype=float)
    q10, q50, q90 = np.quantile(v, [0.1, 0.5, 0.9])
    std = float(v.std(ddof=1)) if len(v) > 1 else 0.0
    return [algorithm, horizon, delta, len(v), float(v.mean()), std, float(q10), float(q50), float(q90), float(v.max())]


def cmd_simulate(args) -> int:
    model_class = _load(args.instance)
    if not 0.0 < args.delta < 1.0:
        raise CliError("usage", "--delta must lie in (0, 1)")
    if args.horizon < 1:
        raise CliError("usage", "--horizon must be positive")
    seeds = [args.seed + s for s in range(args.runs)] if args.seeds is None else parse_range(args.seeds)
    rows = [_run_once(args, model_class, s) for s in seeds]
    agg = [aggregate_row(args.algorithm, args.horizon, args.delta, [r[4] for r in rows])]
    runs_text = format_table(RUN_HEADER, rows, args.format)
    agg_text = format_table(AGGREGATE_HEADER, agg, args.format)
    if args.out is None:
        sys.stdout.write(runs_text)
        sys.stdout.write(agg_text)
    else:
        ext = "csv" if args.format == "csv" else "jsonl"
        args.out.mkdir(parents=True, exist_ok=True)
        atomic_write_text(args.out / f"runs.{ext}", runs_text)
        atomic_write_text(args.out / f"aggregate.{ext}", agg_text)
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

LIST_HEADER = ("name", "anchor", "core", "description")
SUMMARY_HEADER = ("name", "records", "seeds", "failures", "worst_margin", "not_applicable")


def cmd_verify(args) -> int:
    if args.list:
        rows = [[q.name, q.anchor, q.core, q.description] for q in list_inequalities()]
        _emit(args, format_table(LIST_HEADER, rows, args.format))
        return 0
    names = args.names
    if names == ["all"]:
        names = list(REGISTRY)
    unknown = [n for n in names if n not in REGISTRY]
    if unknown:
        raise CliError("usage", f"unknown inequality names: {', '.join(unknown)}")
    seeds = list(range(args.seed, args.seed + args.count))
    report = run_suite(names or core_names(), seeds)
    _emit(args, format_table(VerificationReport.HEADER, report.rows(), args.format))
    summary = report.summary()
    rows = [
        [n, s["records"], s["seeds"], s["failures"], s["worst_margin"], report.not_applicable.get(n, 0)]
        for n, s in summary.items()
    ]
    sys.stderr.write(format_table(SUMMARY_HEADER, rows, "csv"))
    return 0 if report.passed else EXIT_FAILURE


# ---------------------------------------------------------------------------
# adversary
# ---------------------------------------------------------------------------


def cmd_adversary(args) -> int:
    model_class = _load(args.instance)
    ref = resolve_reference(model_class, args.ref)
    if isinstance(ref, str):
        raise CliError("usage", "the adversary needs a concrete reference model")
    if args.learner == "constant":
        runner = constant_runner(args.arm, model_class.decision_count)
    else:
        runner = e2d_pac_runner(model_class, args.horizon, args.delta)
    first, second, report = adversary_hard_pair_pac(
        model_class,
        runner,
        ref,
        args.horizon,
        budget=args.budget,
        seed=args.seed,
        eps=args.eps,
        convention=args.ct_convention,
        risk_budget=args.risk_budget,
        require_conditioning=args.require_conditioning,
    )
    _emit(args, format_table(HardPairReport.HEADER, [report.row()], args.format))
    return 0


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="declab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"declab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="write a generated instance file")
    gen.add_argument("family", choices=("mab", "revealing", "random", "union", "flat"))
    gen.add_argument("--arms", type=int, default=2)
    gen.add_argument("--gap", type=float, default=0.3)
    gen.add_argument("--alpha", type=float, default=0.5)
    gen.add_argument("--beta", type=float, default=0.25)
    gen.add_argument("--mean", type=float, default=0.5)
    gen.add_argument("--decisions", type=int, default=3)
    gen.add_argument("--models", type=int, default=4)
    gen.add_argument("--obs", type=int, default=0)
    gen.set_defaults(func=cmd_gen)

    dec = sub.add_parser("dec", parents=[common], help="compute a DEC value or profile")
    dec.add_argument("instance")
    dec.add_argument("--variant", choices=VARIANTS, default="constrained-regret")
    dec.add_argument("--eps", type=float, default=None, help="radius for constrained variants")
    dec.add_argument("--gamma", type=float, default=None, help="scale for offset variants")
    dec.add_argument("--ref", default="member:0", help="reference: i, member:i, flat[:mean], mixture:w,..., file:PATH, hull, proper")
    dec.add_argument("--include-ref", action="store_true", help="add the reference to the adversary set")
    dec.add_argument("--hull-res", type=int, default=8, help="lattice resolution of the hull grid")
    dec.add_argument("--hull-random", type=int, default=64, help="random hull points")
    dec.add_argument("--profile", default=None, help="grid spec eps=lo:hi:n or gamma=lo:hi:n")
    dec.add_argument("--profile-out", type=Path, default=None)
    dec.set_defaults(func=cmd_dec)

    sim = sub.add_parser("simulate", parents=[common], help="run learners on an instance")
    sim.add_argument("instance")
    sim.add_argument("--algorithm", choices=ALGORITHMS, default="regret")
    sim.add_argument("--truth", type=int, default=0, help="index of the environment model")
    sim.add_argument("--horizon", type=int, default=1024)
    sim.add_argument("--delta", type=float, default=0.1)
    sim.add_argument("--runs", type=int, default=1, help="number of seeds starting at --seed")
    sim.add_argument("--seeds", default=None, help="explicit seed range a:b (overrides --runs)")
    sim.add_argument("--c0", type=float, default=20.0)
    sim.add_argument("--c1", type=float, default=128.0)
    sim.add_argument("--est-constant", type=float, default=1.0)
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", parents=[common], help="check the registered inequalities")
    ver.add_argument("names", nargs="*", help="inequality names, 'all', or none for the core suite")
    ver.add_argument("--list", action="store_true", help="print the registry and exit")
    ver.add_argument("--count", type=int, default=50, help="instances per inequality")
    ver.set_defaults(func=cmd_verify)

    adv = sub.add_parser("adversary", parents=[common], help="hard-pair construction against a PAC learner")
    adv.add_argument("instance")
    adv.add_argument("--learner", choices=("constant", "e2d-pac"), default="constant")
    adv.add_argument("--arm", type=int, default=0, help="decision played by the constant learner")
    adv.add_argument("--ref", default="flat")
    adv.add_argument("--horizon", type=int, default=50)
    adv.add_argument("--delta", type=float, default=0.1)
    adv.add_argument("--eps", type=float, default=None)
    adv.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    adv.add_argument("--risk-budget", type=int, default=None)
    adv.add_argument("--require-conditioning", action="store_true")
    adv.set_defaults(func=cmd_adversary)
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        return _fail(exc.kind, str(exc), exc.code)
    except ParseError as exc:
        return _fail("parse", str(exc), EXIT_USAGE)
    except (RealizabilityError, BudgetError, AdversaryError) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_USAGE)
    except SolverError as exc:
        return _fail("solver", str(exc), EXIT_SOLVER)
    except (ValueError, KeyError, IndexError) as exc:
        return _fail("usage", str(exc), EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
