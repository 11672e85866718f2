"""Certified discrepancy sums for the rotation x -> x + alpha (mod 1).

alpha is known only through a digit prefix, so every comparison against 1/2
is decided for all completions at once.  With a convergent p_K/q_K and
theta = alpha - p_K/q_K we have |theta| < 1/(q_K q_{K+1}) and the sign of
theta is fixed by the parity of K.  The residue frac(x + n p_K/q_K) lives on
the grid (1/(v q_K))Z, so it sits at least 1/(2 v q_K) away from 0 and 1/2
unless it is exactly on one of them.  Picking K with q_{K+1} > 2 v N makes
the drift n |theta| smaller than that gap for every n <= N.
"""

from __future__ import annotations

import csv
import enum
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cf import DigitSequence, allow_huge_ints, as_digits
from .errors import InsufficientPrecision, NotEnoughStages


class Classification(enum.Enum):
    LOWER = "lower"  # [0, 1/2]
    UPPER = "upper"  # (1/2, 1)


def as_fraction(x) -> Fraction:
    if isinstance(x, str):
        x = Fraction(x.strip())
    x = Fraction(x)
    if not 0 <= x < 1:
        raise ValueError(f"x must lie in [0, 1), got {x}")
    return x


def parse_x(text: str) -> Fraction:
    """Parse ``u/v`` (or a bare integer) into an exact point of [0, 1)."""
    try:
        x = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"malformed rational {text!r}") from None
    return as_fraction(x)


def required_q(v: int, horizon: int) -> int:
    """Certification needs some q_{K+1} strictly above this."""
    return 2 * v * horizon


def select_depth(digits: DigitSequence, v: int, horizon: int) -> int:
    """Smallest K with q_{K+1} > 2 v N, K + 1 within the prefix."""
    need = required_q(v, horizon)
    for K in range(len(digits)):
        if digits.q(K + 1) > need:
            return K
    best = digits.q(len(digits)) if len(digits) else 0
    raise InsufficientPrecision(
        f"prefix of {len(digits)} digits cannot certify horizon {horizon} for denominator {v}: "
        f"need a convergent denominator q > {need}, largest available is {best}",
        required_q=need,
        best_q=best,
    )


def max_certified_horizon(digits: DigitSequence, v: int = 1) -> int:
    if not len(digits):
        return 0
    return (digits.q(len(digits)) - 1) // (2 * v)


def _decide(R: int, D: int, n: int, theta_positive: bool) -> bool:
    """True for Lower.  R/D is frac(x + n p_K/q_K)."""
    twice = 2 * R
    if n == 0:
        return twice <= D
    if R == 0:
        return theta_positive
    if twice == D:
        return not theta_positive
    return twice < D


def classify_point(x, n: int, digits) -> Classification:
    x = as_fraction(x)
    ds = as_digits(digits)
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return Classification.LOWER if x <= Fraction(1, 2) else Classification.UPPER
    u, v = x.numerator, x.denominator
    K = select_depth(ds, v, n)
    pK, qK, qK1 = ds.p(K), ds.q(K), ds.q(K + 1)
    D = v * qK
    R = (u * qK + n * pK * v) % D
    r = Fraction(R, D)
    drift = Fraction(n, qK * qK1)
    # Boundaries 0, 1/2, 1 must stay outside [r - drift, r + drift] unless hit exactly.
    for edge in (Fraction(0), Fraction(1, 2), Fraction(1)):
        if r != edge and abs(r - edge) <= drift:
            raise InsufficientPrecision(
                f"orbit point {n} is not separated from {edge}", required_q=required_q(v, n)
            )
    lower = _decide(R, D, n, K % 2 == 0)
    return Classification.LOWER if lower else Classification.UPPER


@dataclass(frozen=True)
class OrbitConfig:
    x: Fraction
    digits: DigitSequence
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "x", as_fraction(self.x))
        object.__setattr__(self, "digits", as_digits(self.digits))
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")


@dataclass
class DiscrepancySeries:
    a: np.ndarray
    b: np.ndarray
    config: OrbitConfig
    depth: int = field(default=0)

    def to_csv(self, fh=None) -> str | None:
        """Write ``n,a_n,b_n`` rows; returns the text when no handle is given."""
        out = fh if fh is not None else io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["n", "a_n", "b_n"])
        for n, (an, bn) in enumerate(zip(self.a.tolist(), self.b.tolist())):
            w.writerow([n, an, bn])
        if fh is None:
            return out.getvalue()
        return None


def _steps(x: Fraction, ds: DigitSequence, N: int, K: int) -> np.ndarray:
    u, v = x.numerator, x.denominator
    pK, qK = ds.p(K), ds.q(K)
    D = v * qK
    step = (pK * v) % D
    R = (u * qK) % D
    theta_positive = K % 2 == 0
    out = np.empty(N, dtype=np.int8)
    half = D // 2
    for n in range(N):
        if n and (R == 0 or 2 * R == D):
            lower = _decide(R, D, n, theta_positive)
        else:
            lower = R <= half
        out[n] = 1 if lower else -1
        R += step
        if R >= D:
            R -= D
    return out


def discrepancy_series(config: OrbitConfig) -> DiscrepancySeries:
    """a_n = #{i < n : Lower} - #{i < n : Upper};  b_n = max_{k <= n} |a_k|."""
    N = config.horizon
    ds = config.digits
    x = config.x
    if N == 0:
        K = 0
        a = np.zeros(1, dtype=np.int64)
    else:
        K = select_depth(ds, x.denominator, N)
        a = np.zeros(N + 1, dtype=np.int64)
        np.cumsum(_steps(x, ds, N, K), out=a[1:])
    b = np.maximum.accumulate(np.abs(a))
    return DiscrepancySeries(a, b, config, K)


def series_at(x, digits, horizon: int) -> DiscrepancySeries:
    return discrepancy_series(OrbitConfig(as_fraction(x), as_digits(digits), horizon))


def _stage_indices(ds: DigitSequence, stage: int) -> tuple[int, int]:
    if stage < 1:
        raise NotEnoughStages("stage index starts at 1")
    if stage > ds.stages:
        raise NotEnoughStages(f"stage {stage} requested but digits cover {ds.stages} stages")
    return ds.q(2 * stage - 1), ds.q(2 * stage)


def _k_total(ds: DigitSequence, stage: int) -> int:
    return sum(ds.ks()[:stage])


@dataclass
class IdentityReport:
    stage: int
    expected: int
    q_odd: int
    q_even: int
    observed_at_q_odd: int
    observed_at_q_even: int
    passed: bool

    def to_json(self) -> dict:
        allow_huge_ints()
        return {
            "stage": self.stage,
            "expected": str(self.expected),
            "q_odd": str(self.q_odd),
            "q_even": str(self.q_even),
            "observed_at_q_odd": str(self.observed_at_q_odd),
            "observed_at_q_even": str(self.observed_at_q_even),
            "pass": self.passed,
        }


def verify_qindex_identity(digits, stage: int, series: DiscrepancySeries | None = None) -> IdentityReport:
    """Check b at q_{2i-1} and q_{2i} against 1 + k_1 + ... + k_i for x = 0.

    A precomputed x = 0 series long enough to reach q_{2i} may be passed to
    avoid rescanning when several stages are checked.
    """
    ds = as_digits(digits).as_alternating()
    q_odd, q_even = _stage_indices(ds, stage)
    if series is None or len(series.b) <= q_even or series.config.x != 0:
        series = series_at(0, ds, q_even)
    expected = 1 + _k_total(ds, stage)
    at_odd = int(series.b[q_odd])
    at_even = int(series.b[q_even])
    return IdentityReport(stage, expected, q_odd, q_even, at_odd, at_even,
                          at_odd == expected and at_even == expected)


@dataclass
class BandReport:
    x: Fraction
    stage: int
    k_total: int
    min_b: int
    max_b: int
    weak_pass: bool
    strict_pass: bool
    strict_rate: float
    bridge_checked: bool = False
    bridge_max: int | None = None
    bridge_pass: bool | None = None

    @property
    def passed(self) -> bool:
        return self.weak_pass and self.bridge_pass is not False

    def to_json(self) -> dict:
        return {
            "x": f"{self.x.numerator}/{self.x.denominator}",
            "stage": self.stage,
            "k_total": str(self.k_total),
            "min_b": str(self.min_b),
            "max_b": str(self.max_b),
            "weak_pass": self.weak_pass,
            "strict_pass": self.strict_pass,
            "strict_rate": self.strict_rate,
            "bridge_checked": self.bridge_checked,
            "bridge_max": None if self.bridge_max is None else str(self.bridge_max),
            "bridge_pass": self.bridge_pass,
        }


def _band_one(args) -> BandReport:
    x, ds, stage = args
    q_odd, q_even = _stage_indices(ds, stage)
    K_i = _k_total(ds, stage)
    horizon = q_even
    bridge = stage < ds.stages
    if bridge:
        q_next = ds.q(2 * stage + 1)
        if q_next <= max_certified_horizon(ds, x.denominator):
            horizon = q_next
        else:
            bridge = False
    series = series_at(x, ds, horizon)
    window = series.b[q_odd:q_even + 1]
    lo, hi = int(window.min()), int(window.max())
    strict_hits = int(np.count_nonzero(window == K_i + 1))
    report = BandReport(
        x=x,
        stage=stage,
        k_total=K_i,
        min_b=lo,
        max_b=hi,
        weak_pass=K_i <= lo and hi <= K_i + 2,
        strict_pass=strict_hits == len(window),
        strict_rate=strict_hits / len(window),
    )
    if bridge:
        bmax = int(series.b[q_even:horizon + 1].max())
        report.bridge_checked = True
        report.bridge_max = bmax
        report.bridge_pass = bmax <= 1 + _k_total(ds, stage + 1)
    return report


def verify_all_x_band(digits, stage: int, xs, workers: int = 1) -> list[BandReport]:
    """Scan n in [q_{2i-1}, q_{2i}] for each x and compare b_n to K_i = k_1 + ... + k_i.

    ``weak_pass`` asserts K_i <= b_n <= K_i + 2; ``strict_pass`` records whether
    b_n == K_i + 1 throughout.  When the prefix reaches q_{2i+1} and the scan can
    be certified that far, the bridge bound b_n <= 1 + K_{i+1} on
    [q_{2i}, q_{2i+1}] is checked as well.
    """
    ds = as_digits(digits).as_alternating()
    _stage_indices(ds, stage)
    xs = [as_fraction(x) for x in xs]
    if not xs:
        return []
    # Fail fast on precision before fanning out.
    select_depth(ds, max(x.denominator for x in xs), ds.q(2 * stage))
    jobs = [(x, ds, stage) for x in xs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_band_one, jobs))
    return [_band_one(j) for j in jobs]
