"""Acceptance criteria, one test each. Every test prints a PASS/FAIL line in the summary."""

import random
import time
from decimal import Decimal, localcontext
from fractions import Fraction

import mpmath
import numpy as np

from rotsqueeze.cf import DigitSequence, bracket, convergents, nested_value
from rotsqueeze.expr import eval_log, parse, pretty
from rotsqueeze.orbit import (
    max_certified_horizon,
    series_at,
    verify_all_x_band,
    verify_qindex_identity,
)
from rotsqueeze.squeeze import SLACK_FLOOR, SqueezeSpec, build_alpha, build_alpha_fast, build_alpha_slow

from oracles import cf_value, decimal_orbit_sides, interval_orbit, ref_ln, running_max

SPEC5 = SqueezeSpec(["n^0.2", "n^0.25"], ["n^0.8", "n^0.75"], N_schedule="i+1", eps_schedule="1/2^(i+1)", stages=6)

_built = {}


def built(name):
    """Constructed alphas are shared between criteria 5, 6 and 7."""
    if name not in _built:
        if name == "squeeze":
            _built[name] = build_alpha(SPEC5, verify_stages=2)
        elif name == "slow":
            _built[name] = build_alpha_slow(["log(n+2)"], 4)
        else:
            _built[name] = build_alpha_fast(["n^0.5"], 4)
    return _built[name]


def test_c1_convergents(record):
    rng = random.Random(1)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(1000):
        digits = [rng.randint(1, 20) for _ in range(rng.randint(1, 30))]
        conv = convergents(digits)
        p0, q0 = 0, 1
        for c in conv:
            bad += c.p * q0 - p0 * c.q != (-1) ** (c.j - 1)
            p0, q0 = c.p, c.q
        bad += not (conv[-1].value == nested_value(digits) == cf_value(digits))
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 5
    record("C1 convergents", ok, f"1000 lists, {bad} failures, {dt:.2f}s")
    assert ok


def test_c2_checkpoint_identity(record):
    rng = random.Random(2)
    t0 = time.perf_counter()
    failures, checks = [], 0
    for _ in range(25):
        pairs = [(rng.randint(1, 4), rng.randint(1, 4)) for _ in range(3)]
        # One extra pair so the orbit of 0 is certified through q_6.
        ds = DigitSequence.alternating(pairs + [(1, 1)])
        series = series_at(0, ds, ds.q(6))
        for i in (1, 2, 3):
            rep = verify_qindex_identity(ds, i, series)
            checks += 1
            if not rep.passed:
                failures.append((pairs, i, rep.to_json()))
    dt = time.perf_counter() - t0
    ok = not failures and dt < 120
    record("C2 checkpoint identity", ok, f"{checks} checks, {len(failures)} failures, {dt:.2f}s")
    assert ok, failures[:3]


def test_c3_all_x_weak_band(record):
    # [2,1]*4 alone cannot certify v = 101 through q_6; the periodic tail is appended.
    ds = DigitSequence((2, 1) * 8)
    xs = [Fraction(j, 101) for j in range(101)]
    t0 = time.perf_counter()
    summary, ok = [], True
    for stage in (2, 3):
        reps = verify_all_x_band(ds, stage, xs)
        weak = sum(r.weak_pass for r in reps)
        strict = sum(r.strict_pass for r in reps)
        bridge = all(r.bridge_pass is not False for r in reps)
        worst = min(reps, key=lambda r: r.min_b)
        summary.append(
            f"stage {stage}: weak {weak}/101, strict rate {strict / 101:.0%}, bridge {'ok' if bridge else 'FAIL'}, "
            f"worst x={worst.x} min_b={worst.min_b} K={worst.k_total}"
        )
        ok &= weak == len(reps)
    dt = time.perf_counter() - t0
    ok &= dt < 60
    record("C3 all-x weak band", ok, "; ".join(summary) + f"; {dt:.2f}s")
    assert ok, summary


def test_c4_oracle_equivalence(record):
    rng = random.Random(4)
    t0 = time.perf_counter()
    N = 10**4
    mismatches = guarded = 0
    for _ in range(20):
        v = rng.randint(1, 1000)
        x = Fraction(rng.randrange(v), v)
        digits = [rng.randint(1, 20) for _ in range(40)]
        series = series_at(x, digits, N)
        steps = np.diff(series.a).tolist()
        ref = decimal_orbit_sides(x, bracket(digits).midpoint, N)
        for s, r in zip(steps, ref):
            if r == 0:
                guarded += 1
            elif s != r:
                mismatches += 1
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and dt < 60
    record("C4 oracle equivalence", ok, f"20 configs x {N} points, {mismatches} mismatches, {guarded} guarded, {dt:.2f}s")
    assert ok


def test_c5_squeeze_end_to_end(record):
    t0 = time.perf_counter()
    res = built("squeeze")
    certs = res.certificates
    slacks_ok = len(certs) == 6 and all(c.slack1 > SLACK_FLOOR and c.slack2 > SLACK_FLOOR for c in certs)
    windows_ok = all(c.k_window[1] > c.k_window[0] or c.m_window[1] > c.m_window[0] for c in certs)
    ds = res.digits
    horizon = min(ds.q(4), 10**6)
    onset_ok = res.verified_upto == horizon and res.onset_n0 is not None
    # Independent recheck: exact interval orbit plus per-n log evaluation.
    brute_ok = False
    if onset_ok:
        b = running_max(interval_orbit(Fraction(0), list(ds.digits), horizon))
        c, d = SPEC5.c_at(1), SPEC5.d_at(1)
        good = [c.ln(n) < mpmath.log(b[n]) < d.ln(n) for n in range(res.onset_n0, horizon + 1)]
        prev_bad = res.onset_n0 == 1 or not (c.ln(res.onset_n0 - 1) < mpmath.log(max(b[res.onset_n0 - 1], 1)) < d.ln(res.onset_n0 - 1))
        brute_ok = all(good) and prev_bad
    dt = time.perf_counter() - t0
    ok = slacks_ok and windows_ok and onset_ok and brute_ok and dt < 300
    min_slack = min(min(float(c.slack1), float(c.slack2)) for c in certs)
    record(
        "C5 squeeze end-to-end",
        ok,
        f"ks={[c.k for c in certs]}, min slack {min_slack:.3e}, windows {'ok' if windows_ok else 'FAIL'}, "
        f"onset n0={res.onset_n0} through n={res.verified_upto}, brute force {'ok' if brute_ok else 'FAIL'}, {dt:.2f}s",
    )
    assert ok


def _ratio_ok(res, side):
    """ln(b/c) < -ln N (slow) or ln(d/b) < -ln N (fast) at each checkpoint, in 200-digit decimal."""
    K = 0
    for c in res.certificates:
        K += c.k
        with localcontext() as ctx:
            ctx.prec = 100
            ln_b = Decimal(1 + K).ln()
            ln_seq = ref_ln(parse(c.bound), c.q_even)
            ln_N = Decimal(c.stage).ln()  # N_i = i + 1 with 0-based i
            gap = (ln_b - ln_seq) if side == "slow" else (ln_seq - ln_b)
            if not gap < -ln_N:
                return False
    return True


def test_c6_one_sided_variants(record):
    t0 = time.perf_counter()
    slow, fast = built("slow"), built("fast")
    slow_ok = (
        len(slow.certificates) == 4
        and slow.digits.digits[0::2] == (2,) * 4
        and all(c.slack > 0 for c in slow.certificates)
        and _ratio_ok(slow, "slow")
    )
    fast_ok = (
        len(fast.certificates) == 4
        and fast.digits.digits[1::2] == (1,) * 4
        and all(c.slack > 0 for c in fast.certificates)
        and _ratio_ok(fast, "fast")
    )
    dt = time.perf_counter() - t0
    ok = slow_ok and fast_ok and dt < 120
    record("C6 one-sided variants", ok,
           f"slow digits {slow.digits.digits}, fast digits {fast.digits.digits}, {dt:.2f}s")
    assert ok


def test_c7_divergence(record):
    notes, ok = [], True
    for name in ("squeeze", "slow", "fast"):
        ds = built(name).digits.as_alternating()
        totals = np.cumsum(ds.ks()) + 1
        ok &= bool(np.all(np.diff(totals) > 0))
        limit = min(10**6, max_certified_horizon(ds, 1))
        stages = [i for i in range(1, ds.stages + 1) if ds.q(2 * i) <= limit]
        series = series_at(0, ds, ds.q(2 * stages[-1])) if stages else None
        orbit_ok = all(verify_qindex_identity(ds, i, series).passed for i in stages)
        ok &= orbit_ok
        notes.append(f"{name}: 1+K_i={totals.tolist()}, orbit-checked stages {stages}")
    record("C7 divergence", ok, "; ".join(notes))
    assert ok


CORPUS = [
    "n",
    "n^0.25",
    "log(n+2)",
    "log(log(n+16))*n^0.5",
    "(n+1)^0.75/log(n+3)",
    "2*n^0.3+7",
    "n^(1/3)",
    "log(n)^2*3+n^0.5",
    "n/2/n^0.1",
]


def test_c8_parser_evaluator(record):
    t0 = time.perf_counter()
    bad = []
    ns = [2, 10, 12345, 10**6, 10**50, 3**500, 10**999 + 1, 10**1000]
    for text in CORPUS:
        tree = parse(text)
        if parse(pretty(tree)) != tree:
            bad.append(("round trip", text))
        for n in ns:
            got = Decimal(mpmath.nstr(eval_log(tree, n), 60))
            if abs(got - ref_ln(tree, n)) >= Decimal("1e-20"):
                bad.append((text, n))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 10
    record("C8 parser/evaluator", ok, f"{len(CORPUS)} expressions x {len(ns)} arguments, {len(bad)} failures, {dt:.2f}s")
    assert ok, bad
