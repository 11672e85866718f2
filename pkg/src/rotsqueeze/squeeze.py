"""Greedy construction of alpha = [2k_1, m_1, 2k_2, m_2, ...] with squeezed b_n.

At x = 0 the running maximum satisfies b_{q_{2i-1}} = b_{q_{2i}} = 1 + k_1 + ... + k_i,
and q_{2i+1}, q_{2i+2} are affine in the next digits.  Stage by stage we pick
(k, m) so that, with S = 1 + K + k,

    S / c(q_{2i+2}) > N_i        (b pulled above the lower family)
    S / d(q_{2i+2}) < eps_i      (b held below the upper family)

Both conditions are compared in the log domain and certified with a slack
margin of ``SLACK_FLOOR``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Callable, Sequence

import mpmath
import numpy as np

from .cf import ALTERNATING, DigitSequence, allow_huge_ints, extend
from .errors import BudgetExceeded, InfeasibleSpec, VerificationHorizonTooSmall
from .expr import (
    DEFAULT_EPS,
    DEFAULT_N,
    WORK_DPS,
    ScheduleExpr,
    SequenceExpr,
    as_sequence,
    check_monotone,
    check_schedule,
    eval_log_array,
    ln_int,
    validate_family_order,
)
from .orbit import max_certified_horizon, series_at, verify_qindex_identity

SLACK_FLOOR = mpmath.mpf("1e-20")
SPEC_CHECKPOINTS = (10**3, 10**6, 10**12)
DEFAULT_HORIZON = 10**6
WINDOW_SPAN = 8


def _cap(value) -> int:
    if isinstance(value, int):
        return value
    return int(Decimal(str(value)))


def _fmt(x) -> str:
    return mpmath.nstr(x, 40, strip_zeros=False) if x is not None else None


@dataclass
class SqueezeSpec:
    cs: list
    ds: list
    N_schedule: ScheduleExpr = field(default_factory=lambda: ScheduleExpr.parse(DEFAULT_N))
    eps_schedule: ScheduleExpr = field(default_factory=lambda: ScheduleExpr.parse(DEFAULT_EPS))
    stages: int = 6
    k_cap: int = 10**9
    m_cap: int = 10**18

    def __post_init__(self):
        self.cs = [as_sequence(c) for c in self.cs]
        self.ds = [as_sequence(d) for d in self.ds]
        if isinstance(self.N_schedule, str):
            self.N_schedule = ScheduleExpr.parse(self.N_schedule)
        if isinstance(self.eps_schedule, str):
            self.eps_schedule = ScheduleExpr.parse(self.eps_schedule)
        self.k_cap = _cap(self.k_cap)
        self.m_cap = _cap(self.m_cap)
        if self.stages < 0:
            raise ValueError("stages must be nonnegative")

    @classmethod
    def from_json(cls, obj: dict) -> "SqueezeSpec":
        return cls(
            cs=list(obj.get("c", [])),
            ds=list(obj.get("d", [])),
            N_schedule=obj.get("N", DEFAULT_N),
            eps_schedule=obj.get("eps", DEFAULT_EPS),
            stages=int(obj.get("stages", 6)),
            k_cap=obj.get("k_cap", 10**9),
            m_cap=obj.get("m_cap", 10**18),
        )

    def to_json(self) -> dict:
        return {
            "c": [c.text for c in self.cs],
            "d": [d.text for d in self.ds],
            "N": self.N_schedule.text,
            "eps": self.eps_schedule.text,
            "stages": self.stages,
            "k_cap": str(self.k_cap),
            "m_cap": str(self.m_cap),
        }

    def c_at(self, i: int) -> SequenceExpr:
        """c^{(i+1)}, reusing the last member once the family runs out."""
        return self.cs[min(i, len(self.cs) - 1)]

    def d_at(self, i: int) -> SequenceExpr:
        return self.ds[min(i, len(self.ds) - 1)]

    def validate(self):
        report = validate_family_order(self.cs, self.ds, SPEC_CHECKPOINTS)
        problems = list(report.violations)
        for s in self.cs + self.ds:
            problems += check_monotone(s)
        problems += check_schedule(self.N_schedule, self.stages, "N")
        problems += check_schedule(self.eps_schedule, self.stages, "eps")
        report.violations = problems
        report.ok = not problems
        if problems:
            raise InfeasibleSpec("; ".join(problems[:3]), report)
        return report


@dataclass
class ConstructionState:
    digits: DigitSequence = field(default_factory=lambda: DigitSequence((), ALTERNATING))
    K_sum: int = 0

    @property
    def stage(self) -> int:
        return self.digits.stages

    def q_pair(self) -> tuple[int, int]:
        """(q_{2i}, q_{2i-1}) for the stages built so far."""
        i = self.stage
        return self.digits.q(2 * i), self.digits.q(2 * i - 1)

    def candidate_q(self, k: int, m: int) -> tuple[int, int]:
        q_even, q_prev = self.q_pair()
        q_odd = 2 * k * q_even + q_prev
        return q_odd, m * q_odd + q_even

    def advance(self, k: int, m: int) -> "ConstructionState":
        return ConstructionState(extend(self.digits, (2 * k, m)), self.K_sum + k)


@dataclass
class StageCertificate:
    stage: int
    k: int
    m: int
    q_odd: int
    q_even: int
    ln_b: mpmath.mpf
    ln_c: mpmath.mpf
    ln_d: mpmath.mpf
    ln_N: mpmath.mpf
    ln_eps: mpmath.mpf
    slack1: mpmath.mpf
    slack2: mpmath.mpf
    c: str = ""
    d: str = ""
    k_window: tuple[int, int] | None = None
    m_window: tuple[int, int] | None = None

    @property
    def admissible(self) -> bool:
        return self.slack1 > SLACK_FLOOR and self.slack2 > SLACK_FLOOR

    def to_json(self) -> dict:
        allow_huge_ints()
        out = {
            "stage": self.stage,
            "k": str(self.k),
            "m": str(self.m),
            "q_odd": str(self.q_odd),
            "q_even": str(self.q_even),
            "c": self.c,
            "d": self.d,
            "ln_b": _fmt(self.ln_b),
            "ln_c": _fmt(self.ln_c),
            "ln_d": _fmt(self.ln_d),
            "ln_N": _fmt(self.ln_N),
            "ln_eps": _fmt(self.ln_eps),
            "slack1": _fmt(self.slack1),
            "slack2": _fmt(self.slack2),
        }
        if self.k_window is not None:
            out["k_window"] = [str(v) for v in self.k_window]
            out["m_window"] = [str(v) for v in self.m_window]
        return out


def evaluate_pair(state: ConstructionState, spec: SqueezeSpec, k: int, m: int) -> StageCertificate:
    i = state.stage
    q_odd, q_even = state.candidate_q(k, m)
    c, d = spec.c_at(i), spec.d_at(i)
    with mpmath.workdps(WORK_DPS):
        ln_b = ln_int(1 + state.K_sum + k)
        ln_c = c.ln(q_even)
        ln_d = d.ln(q_even)
        ln_N = spec.N_schedule.ln(i)
        ln_eps = spec.eps_schedule.ln(i)
        slack1 = ln_b - ln_c - ln_N
        slack2 = ln_d + ln_eps - ln_b
    return StageCertificate(i + 1, k, m, q_odd, q_even, ln_b, ln_c, ln_d, ln_N, ln_eps,
                            slack1, slack2, c.text, d.text)


def _first_true(pred: Callable[[int], bool], cap: int, start: int = 1) -> int | None:
    """Smallest v in [start, cap] with pred(v), for pred monotone false -> true.

    Doubles until pred holds, then bisects the last doubling interval.
    """
    lo, hi = start - 1, start
    while not pred(hi):
        if hi >= cap:
            return None
        lo, hi = hi, min(2 * hi, cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _min_m(state, spec, k) -> tuple[int | None, StageCertificate]:
    certs = {}

    def upper_ok(m):
        certs[m] = evaluate_pair(state, spec, k, m)
        return certs[m].slack2 > SLACK_FLOOR

    m = _first_true(upper_ok, spec.m_cap)
    if m is None:
        return None, certs[max(certs)]
    return m, certs[m]


def choose_next_pair(state: ConstructionState, spec: SqueezeSpec) -> tuple[int, int, StageCertificate]:
    """Smallest admissible k, then smallest m for it.

    For fixed k the upper condition improves and the lower one worsens as m
    grows, so the minimal m meeting the upper condition decides whether k
    admits any m at all.  Across k the search doubles and then bisects, which
    assumes admissibility is monotone in k from the first success on.
    """
    if state.stage >= spec.stages:
        raise ValueError(f"state already has {state.stage} of {spec.stages} stages")
    tried: dict[int, tuple[int | None, StageCertificate]] = {}

    def ok(k):
        if k not in tried:
            tried[k] = _min_m(state, spec, k)
        m, cert = tried[k]
        return m is not None and cert.slack1 > SLACK_FLOOR

    k = _first_true(ok, spec.k_cap)
    if k is None:
        near = max((cert for _, cert in tried.values()), key=lambda c: min(c.slack1, c.slack2))
        raise BudgetExceeded(
            f"stage {state.stage + 1}: no admissible pair with k <= {spec.k_cap}, m <= {spec.m_cap}",
            near_miss=near,
        )
    m, cert = tried[k]
    cert.k_window, cert.m_window = robustness_window(state, spec, (k, m))
    return k, m, cert


def robustness_window(state, spec, pair, span: int = WINDOW_SPAN):
    """Widest [k, k+dk] x [m, m+dm] (dk, dm <= span) made entirely of admissible pairs.

    k is widened first, then m against the whole k range.
    """
    k, m = pair
    cache = {}

    def admissible(kk, mm):
        if (kk, mm) not in cache:
            cache[kk, mm] = evaluate_pair(state, spec, kk, mm).admissible
        return cache[kk, mm]

    dk = 0
    while dk < span and admissible(k + dk + 1, m):
        dk += 1
    dm = 0
    while dm < span and all(admissible(k + a, m + dm + 1) for a in range(dk + 1)):
        dm += 1
    return (k, k + dk), (m, m + dm)


@dataclass
class BuildResult:
    mode: str
    digits: DigitSequence
    certificates: list
    onset_n0: int | None = None
    verified_upto: int = 0
    identity_checks: list = field(default_factory=list)
    spec: dict | None = None

    def to_json(self) -> dict:
        allow_huge_ints()
        return {
            "mode": self.mode,
            "spec": self.spec,
            "digits": [str(d) for d in self.digits.digits],
            "stages": [c.to_json() for c in self.certificates],
            "onset_n0": None if self.onset_n0 is None else str(self.onset_n0),
            "verified_upto": str(self.verified_upto),
            "identity_checks": [r.to_json() for r in self.identity_checks],
        }


def squeeze_onset(series_b: np.ndarray, c: SequenceExpr, d: SequenceExpr) -> int | None:
    """Smallest n0 >= 1 with c_n < b_n < d_n for every n in [n0, len(b) - 1].

    None when the last index already fails.
    """
    N = len(series_b) - 1
    if N < 1:
        return None
    ns = np.arange(1, N + 1)
    b = series_b[1:]
    with np.errstate(divide="ignore"):
        ln_b = np.log(b.astype(np.float64))
    lc = eval_log_array(c.tree, ns)
    ld = eval_log_array(d.tree, ns)
    good = (lc < ln_b) & (ln_b < ld)
    close = (np.abs(lc - ln_b) < 1e-9) | (np.abs(ld - ln_b) < 1e-9)
    for idx in np.flatnonzero(close & (b > 0)):
        n = int(ns[idx])
        lb = ln_int(int(b[idx]))
        good[idx] = bool(c.ln(n) < lb < d.ln(n))
    bad = np.flatnonzero(~good)
    if not len(bad):
        return 1
    last = int(bad[-1]) + 1
    return None if last == N else last + 1


def _verified_checkpoints(digits: DigitSequence, stages: int, horizon: int) -> int:
    """Number of stages s whose q_{2s} fits in the horizon and can be certified.

    The final checkpoint q_{2L} never certifies: nothing past the last digit is known.
    """
    horizon = min(horizon, max_certified_horizon(digits, 1))
    s = 0
    while s < stages and digits.q(2 * (s + 1)) <= horizon:
        s += 1
    return s


def build_alpha(spec: SqueezeSpec, verify_horizon: int = DEFAULT_HORIZON,
                verify_stages: int | None = None) -> BuildResult:
    """Run the squeeze for ``spec.stages`` stages and check the result on the orbit of 0.

    The orbit is scanned up to the largest certifiable q_{2s} within ``verify_horizon``
    (capped at ``verify_stages`` stages when given); the onset n0 is reported
    against the last family members used.
    """
    spec.validate()
    state = ConstructionState()
    certs = []
    for _ in range(spec.stages):
        k, m, cert = choose_next_pair(state, spec)
        certs.append(cert)
        state = state.advance(k, m)
    result = BuildResult("squeeze", state.digits, certs, spec=spec.to_json())
    if spec.stages == 0:
        return result
    limit = spec.stages if verify_stages is None else min(verify_stages, spec.stages)
    s = _verified_checkpoints(state.digits, limit, verify_horizon)
    if s < 2:
        warnings.warn(
            f"only {s} stage(s) fit in verification horizon {verify_horizon}",
            VerificationHorizonTooSmall,
            stacklevel=2,
        )
    if s == 0:
        return result
    end = state.digits.q(2 * s)
    series = series_at(0, state.digits, end)
    result.verified_upto = end
    result.identity_checks = [verify_qindex_identity(state.digits, j, series) for j in range(1, s + 1)]
    last = spec.stages - 1
    result.onset_n0 = squeeze_onset(series.b, spec.c_at(last), spec.d_at(last))
    return result


@dataclass
class OneSidedCertificate:
    side: str  # "slow": b/c < 1/N;  "fast": d/b < 1/N
    stage: int
    k: int
    m: int
    q_odd: int
    q_even: int
    ln_b: mpmath.mpf
    ln_bound: mpmath.mpf
    ln_N: mpmath.mpf
    slack: mpmath.mpf
    bound: str = ""

    @property
    def admissible(self) -> bool:
        return self.slack > SLACK_FLOOR

    def to_json(self) -> dict:
        allow_huge_ints()
        return {
            "side": self.side,
            "stage": self.stage,
            "k": str(self.k),
            "m": str(self.m),
            "q_odd": str(self.q_odd),
            "q_even": str(self.q_even),
            "bound": self.bound,
            "ln_b": _fmt(self.ln_b),
            "ln_bound": _fmt(self.ln_bound),
            "ln_N": _fmt(self.ln_N),
            "slack": _fmt(self.slack),
        }


def _one_sided(side, state, seq, sched, k, m) -> OneSidedCertificate:
    i = state.stage
    q_odd, q_even = state.candidate_q(k, m)
    with mpmath.workdps(WORK_DPS):
        ln_b = ln_int(1 + state.K_sum + k)
        ln_bound = seq.ln(q_even)
        ln_N = sched.ln(i)
        if side == "slow":
            slack = ln_bound - ln_b - ln_N
        else:
            slack = ln_b - ln_bound - ln_N
    return OneSidedCertificate(side, i + 1, k, m, q_odd, q_even, ln_b, ln_bound, ln_N, slack, seq.text)


def _check_one_sided(seqs, stages, sched, side):
    if not seqs:
        raise InfeasibleSpec("need at least one sequence")
    problems = []
    for s in seqs:
        problems += check_monotone(s)
        lns = [s.ln(n) for n in SPEC_CHECKPOINTS]
        if side == "slow" and not all(b > a for a, b in zip(lns, lns[1:])):
            problems.append(f"{s.text}: not growing across checkpoints")
        if side == "fast":
            gaps = [ln_int(n) - v for n, v in zip(SPEC_CHECKPOINTS, lns)]
            if not all(b > a for a, b in zip(gaps, gaps[1:])):
                problems.append(f"{s.text}: d_n/n does not shrink across checkpoints")
    problems += check_schedule(sched, stages, "N")
    if problems:
        raise InfeasibleSpec("; ".join(problems[:3]))


def build_alpha_slow(cs: Sequence, stages: int, m_cap: int = 10**18,
                     N_schedule: str | ScheduleExpr = DEFAULT_N) -> BuildResult:
    """All k_j = 1, so b at the stage-j checkpoints is j + 1; each m_j is the
    smallest making b_{q_{2j}} / c^{(j)}_{q_{2j}} < 1/N."""
    cs = [as_sequence(c) for c in cs]
    sched = ScheduleExpr.parse(N_schedule) if isinstance(N_schedule, str) else N_schedule
    m_cap = _cap(m_cap)
    if stages == 0:
        return BuildResult("slow", DigitSequence((), ALTERNATING), [])
    _check_one_sided(cs, stages, sched, "slow")
    state = ConstructionState()
    certs = []
    for i in range(stages):
        seq = cs[min(i, len(cs) - 1)]
        seen = {}

        def ok(m):
            seen[m] = _one_sided("slow", state, seq, sched, 1, m)
            return seen[m].admissible

        m = _first_true(ok, m_cap)
        if m is None:
            raise BudgetExceeded(f"stage {i + 1}: m exceeds {m_cap}", near_miss=seen[max(seen)])
        certs.append(seen[m])
        state = state.advance(1, m)
    return BuildResult("slow", state.digits, certs)


def build_alpha_fast(ds: Sequence, stages: int, k_cap: int = 10**9,
                     N_schedule: str | ScheduleExpr = DEFAULT_N) -> BuildResult:
    """All m_j = 1; each k_j is the smallest making d^{(j)}_{q_{2j}} / b_{q_{2j}} < 1/N."""
    ds = [as_sequence(d) for d in ds]
    sched = ScheduleExpr.parse(N_schedule) if isinstance(N_schedule, str) else N_schedule
    k_cap = _cap(k_cap)
    if stages == 0:
        return BuildResult("fast", DigitSequence((), ALTERNATING), [])
    _check_one_sided(ds, stages, sched, "fast")
    state = ConstructionState()
    certs = []
    for i in range(stages):
        seq = ds[min(i, len(ds) - 1)]
        seen = {}

        def ok(k):
            seen[k] = _one_sided("fast", state, seq, sched, k, 1)
            return seen[k].admissible

        k = _first_true(ok, k_cap)
        if k is None:
            raise BudgetExceeded(f"stage {i + 1}: k exceeds {k_cap}", near_miss=seen[max(seen)])
        certs.append(seen[k])
        state = state.advance(k, 1)
    return BuildResult("fast", state.digits, certs)
