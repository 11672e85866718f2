"""Command-line entry point: ``rotsqueeze {cf,orbit,verify,build}``.

Exit codes: 0 success, 2 bad input, 3 insufficient precision, 4 failed check
or infeasible spec, 5 search budget exhausted.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
import time
import warnings
from fractions import Fraction
from pathlib import Path

from . import __version__
from .cf import allow_huge_ints, convergents, parse_digits
from .errors import (
    BudgetExceeded,
    DigitError,
    ExprDomainError,
    ExprSyntaxError,
    InfeasibleSpec,
    InsufficientPrecision,
)
from .orbit import parse_x, series_at, verify_all_x_band, verify_qindex_identity
from .squeeze import (
    DEFAULT_HORIZON,
    SqueezeSpec,
    build_alpha,
    build_alpha_fast,
    build_alpha_slow,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PRECISION = 3
EXIT_CHECK = 4
EXIT_BUDGET = 5


class Manifest:
    def __init__(self, subcommand: str, params: dict):
        self.subcommand = subcommand
        self.params = params
        self.inputs: dict[str, str] = {}
        self.start = time.perf_counter()

    def add_input(self, path: Path):
        self.inputs[str(path)] = hashlib.sha256(path.read_bytes()).hexdigest()

    def to_json(self) -> dict:
        return {
            "tool": "rotsqueeze",
            "version": __version__,
            "subcommand": self.subcommand,
            "parameters": self.params,
            "inputs": self.inputs,
            "duration_s": round(time.perf_counter() - self.start, 6),
        }


def _emit_json(obj, out: str | None):
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _params(args) -> dict:
    skip = {"func", "command", "kind"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def cmd_cf(args) -> int:
    conv = convergents(parse_digits(args.digits))
    if args.json:
        _emit_json({
            "digits": args.digits.split(","),
            "convergents": [{"j": c.j, "p": str(c.p), "q": str(c.q)} for c in conv],
            "manifest": Manifest("cf", _params(args)).to_json(),
        }, None)
    elif args.csv:
        print("j,p,q")
        for c in conv:
            print(f"{c.j},{c.p},{c.q}")
    else:
        width = max(len(str(c.q)) for c in conv)
        print(f"{'j':>4}  {'p':>{width}}  {'q':>{width}}")
        for c in conv:
            print(f"{c.j:>4}  {c.p:>{width}}  {c.q:>{width}}")
    return EXIT_OK


def cmd_orbit(args) -> int:
    manifest = Manifest("orbit", _params(args))
    x = parse_x(args.x)
    if args.n < 0:
        raise ValueError("--n must be nonnegative")
    series = series_at(x, parse_digits(args.digits), args.n)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            series.to_csv(fh)
        meta = manifest.to_json()
        meta["depth_K"] = series.depth
        Path(args.out + ".manifest.json").write_text(json.dumps(meta, indent=2) + "\n")
    else:
        series.to_csv(sys.stdout)
    return EXIT_OK


def _x_values(args) -> list[Fraction]:
    xs = []
    if args.x_grid:
        xs += [Fraction(j, args.x_grid) for j in range(args.x_grid)]
    if args.x_random:
        rng = random.Random(args.seed)
        for _ in range(args.x_random):
            v = rng.randint(1, 1000)
            xs.append(Fraction(rng.randrange(v), v))
    if args.x:
        xs += [parse_x(t) for t in args.x]
    return xs or [Fraction(0)]


def cmd_verify(args) -> int:
    manifest = Manifest("verify", _params(args))
    digits = parse_digits(args.digits)
    if args.kind == "identity":
        report = verify_qindex_identity(digits, args.stage)
        out = {"check": "identity", **report.to_json(), "manifest": manifest.to_json()}
        _emit_json(out, args.out)
        return EXIT_OK if report.passed else EXIT_CHECK
    results = verify_all_x_band(digits, args.stage, _x_values(args), workers=args.workers)
    n_strict = sum(r.strict_pass for r in results)
    out = {
        "check": "band",
        "stage": args.stage,
        "weak_pass": all(r.weak_pass for r in results),
        "bridge_pass": all(r.bridge_pass is not False for r in results),
        "strict_pass_count": n_strict,
        "strict_pass_rate": n_strict / len(results),
        "results": [r.to_json() for r in results],
        "manifest": manifest.to_json(),
    }
    _emit_json(out, args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def _slack_table(result) -> str:
    lines = []
    if result.mode == "squeeze":
        lines.append(f"{'stage':>5} {'k':>12} {'m':>12} {'digits(q)':>9} {'slack1':>12} {'slack2':>12} k_window m_window")
        for c in result.certificates:
            lines.append(
                f"{c.stage:>5} {c.k:>12} {c.m:>12} {len(str(c.q_even)):>9} "
                f"{float(c.slack1):>12.4e} {float(c.slack2):>12.4e} "
                f"[{c.k_window[0]},{c.k_window[1]}] [{c.m_window[0]},{c.m_window[1]}]"
            )
    else:
        lines.append(f"{'stage':>5} {'k':>12} {'m':>12} {'digits(q)':>9} {'slack':>12}")
        for c in result.certificates:
            lines.append(f"{c.stage:>5} {c.k:>12} {c.m:>12} {len(str(c.q_even)):>9} {float(c.slack):>12.4e}")
    return "\n".join(lines)


def cmd_build(args) -> int:
    manifest = Manifest("build", _params(args))
    path = Path(args.config)
    manifest.add_input(path)
    try:
        config = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"config is not valid JSON: {exc}") from None
    spec = SqueezeSpec.from_json(config)
    if args.mode == "squeeze":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = build_alpha(spec, verify_horizon=args.verify_horizon)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    elif args.mode == "slow":
        result = build_alpha_slow(spec.cs, spec.stages, m_cap=spec.m_cap, N_schedule=spec.N_schedule)
    else:
        result = build_alpha_fast(spec.ds, spec.stages, k_cap=spec.k_cap, N_schedule=spec.N_schedule)
    artifact = result.to_json()
    if args.mode != "squeeze":
        artifact["spec"] = spec.to_json()
    artifact["manifest"] = manifest.to_json()
    table = _slack_table(result)
    if args.out:
        _emit_json(artifact, args.out)
        print(table)
    else:
        _emit_json(artifact, None)
        print(table, file=sys.stderr)
    failed = [r for r in result.identity_checks if not r.passed]
    if failed or (result.mode == "squeeze" and result.certificates and result.verified_upto and result.onset_n0 is None):
        print("verification failed on the orbit of 0", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="machine-readable output")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="seed for sampled x grids")

    parser = argparse.ArgumentParser(prog="rotsqueeze", parents=[common],
                                     description="Discrepancy sums of irrational rotations.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cf", parents=[common], help="convergent table")
    p.add_argument("--digits", required=True, help="comma-separated digits, e.g. 2,1,2,1")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_cf)

    p = sub.add_parser("orbit", parents=[common], help="a_n, b_n series as CSV")
    p.add_argument("--digits", required=True)
    p.add_argument("--x", default="0/1", help="starting point u/v in [0,1)")
    p.add_argument("--n", type=int, required=True, help="horizon N")
    p.add_argument("--out")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("verify", parents=[common], help="checkpoint identity or all-x band")
    p.add_argument("kind", choices=["identity", "band"])
    p.add_argument("--digits", required=True)
    p.add_argument("--stage", type=int, required=True)
    p.add_argument("--x-grid", type=int, default=0, help="use x = j/P for j = 0..P-1")
    p.add_argument("--x-random", type=int, default=0, help="add M random rationals (see --seed)")
    p.add_argument("--x", action="append", help="explicit x value u/v (repeatable)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("build", parents=[common], help="construct alpha from a squeeze config")
    p.add_argument("--config", required=True)
    p.add_argument("--mode", choices=["squeeze", "slow", "fast"], default="squeeze")
    p.add_argument("--out")
    p.add_argument("--verify-horizon", type=int, default=DEFAULT_HORIZON)
    p.set_defaults(func=cmd_build)
    return parser


def main(argv=None) -> int:
    allow_huge_ints()
    args = build_parser().parse_args(argv)
    args.json = getattr(args, "json", False)
    args.seed = getattr(args, "seed", 0)
    try:
        return args.func(args)
    except InsufficientPrecision as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except InfeasibleSpec as exc:
        print(f"error: infeasible spec: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.near_miss is not None:
            print(json.dumps({"near_miss": exc.near_miss.to_json()}, indent=2), file=sys.stderr)
        return EXIT_BUDGET
    except (DigitError, ExprSyntaxError, ExprDomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
