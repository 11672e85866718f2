"""Exact continued-fraction arithmetic for numbers in (0, 1).

Values are written ``[n1, n2, ...] = 1/(n1 + 1/(n2 + ...))``.  Convergents use
the seeds p_0 = 0, q_0 = 1, p_{-1} = 1, q_{-1} = 0, so convergents with odd
index lie above the limit and those with even index lie below it.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import (
    EmptyDigits,
    NonPositiveDigit,
    NotAlternating,
    PrefixTooShort,
    StructureViolation,
)

PLAIN = "plain"
ALTERNATING = "alternating"


def allow_huge_ints():
    # Convergent denominators routinely pass the default int<->str digit limit.
    if hasattr(sys, "set_int_max_str_digits"):
        sys.set_int_max_str_digits(0)


@dataclass(frozen=True)
class Convergent:
    j: int
    p: int
    q: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


def _check_digits(digits: Sequence[int]):
    for pos, d in enumerate(digits, start=1):
        if not isinstance(d, int) or isinstance(d, bool):
            raise NonPositiveDigit(f"digit {pos} is not an integer: {d!r}")
        if d < 1:
            raise NonPositiveDigit(f"digit {pos} must be >= 1, got {d}")


def _check_alternating(digits: Sequence[int], offset: int = 0):
    for pos, d in enumerate(digits, start=offset + 1):
        if pos % 2 == 1 and (d % 2 or d < 2):
            raise StructureViolation(
                f"digit {pos} must be an even number >= 2 in an alternating sequence, got {d}"
            )


def _extend_convergents(prev: list[Convergent], digits: Sequence[int], start: int) -> list[Convergent]:
    out = list(prev)
    if out:
        p1, q1 = out[-1].p, out[-1].q
        if len(out) > 1:
            p2, q2 = out[-2].p, out[-2].q
        else:
            p2, q2 = 0, 1
    else:
        p1, q1, p2, q2 = 0, 1, 1, 0
    for j, n in enumerate(digits, start=start + 1):
        p1, p2 = n * p1 + p2, p1
        q1, q2 = n * q1 + q2, q1
        out.append(Convergent(j, p1, q1))
    return out


@dataclass(frozen=True)
class DigitSequence:
    """Finite prefix of continued-fraction digits.

    With ``structure_tag == "alternating"`` the digits follow the pattern
    ``[2k_1, m_1, 2k_2, m_2, ...]``: even length, odd positions even.
    """

    digits: tuple[int, ...]
    structure_tag: str = PLAIN
    _conv: list = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        digits = tuple(self.digits)
        object.__setattr__(self, "digits", digits)
        _check_digits(digits)
        if self.structure_tag not in (PLAIN, ALTERNATING):
            raise ValueError(f"unknown structure tag {self.structure_tag!r}")
        if self.structure_tag == ALTERNATING:
            if len(digits) % 2:
                raise StructureViolation("alternating sequences have even length")
            _check_alternating(digits)
        if self._conv is None:
            object.__setattr__(self, "_conv", _extend_convergents([], digits, 0))

    @classmethod
    def alternating(cls, pairs: Iterable[tuple[int, int]]) -> "DigitSequence":
        """Build ``[2k_1, m_1, 2k_2, m_2, ...]`` from (k, m) pairs."""
        out = []
        for k, m in pairs:
            out += [2 * k, m]
        return cls(tuple(out), ALTERNATING)

    def __len__(self):
        return len(self.digits)

    @property
    def is_alternating(self) -> bool:
        return self.structure_tag == ALTERNATING

    @property
    def stages(self) -> int:
        """Number of complete (2k, m) pairs."""
        return len(self.digits) // 2

    def ks(self) -> list[int]:
        return [d // 2 for d in self.digits[0::2]]

    def ms(self) -> list[int]:
        return list(self.digits[1::2])

    def q(self, j: int) -> int:
        """Denominator q_j, with q_0 = 1 and q_{-1} = 0."""
        if j == 0:
            return 1
        if j == -1:
            return 0
        return self._conv[j - 1].q

    def p(self, j: int) -> int:
        if j == 0:
            return 0
        if j == -1:
            return 1
        return self._conv[j - 1].p

    def as_alternating(self) -> "DigitSequence":
        """Re-tag as alternating, raising NotAlternating if the digits do not fit."""
        if self.is_alternating:
            return self
        try:
            return DigitSequence(self.digits, ALTERNATING, self._conv)
        except StructureViolation as exc:
            raise NotAlternating(str(exc)) from None


def as_digits(digits) -> DigitSequence:
    if isinstance(digits, DigitSequence):
        return digits
    return DigitSequence(tuple(digits))


def convergents(digits) -> list[Convergent]:
    ds = as_digits(digits)
    if not ds.digits:
        raise EmptyDigits("digit sequence is empty")
    return list(ds._conv)


def nested_value(digits: Sequence[int]) -> Fraction:
    """Exact value of the finite continued fraction, evaluated bottom-up."""
    if not digits:
        raise EmptyDigits("digit sequence is empty")
    acc = Fraction(0)
    for d in reversed(digits):
        acc = 1 / (d + acc)
    return acc


@dataclass(frozen=True)
class AlphaBracket:
    """Open interval (lo, hi) containing every infinite completion of a prefix.

    ``depth`` is K where the endpoints are the convergents K and K + 1.
    """

    lo: Fraction
    hi: Fraction
    depth: int

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, value) -> bool:
        return self.lo < value < self.hi


def bracket(digits) -> AlphaBracket:
    ds = as_digits(digits)
    L = len(ds)
    if L < 2:
        raise PrefixTooShort(f"need at least 2 digits for a bracket, got {L}")
    a = Fraction(ds.p(L - 1), ds.q(L - 1))
    b = Fraction(ds.p(L), ds.q(L))
    lo, hi = (a, b) if a < b else (b, a)
    return AlphaBracket(lo, hi, L - 1)


def extend(digits, more: Sequence[int]) -> DigitSequence:
    ds = as_digits(digits)
    more = tuple(more)
    _check_digits(more)
    if not more:
        return ds
    if ds.is_alternating:
        if (len(ds) + len(more)) % 2:
            raise StructureViolation("alternating sequences have even length")
        _check_alternating(more, offset=len(ds))
    conv = _extend_convergents(ds._conv, more, len(ds))
    return DigitSequence(ds.digits + more, ds.structure_tag, conv)


def parse_digits(text: str) -> DigitSequence:
    """Parse a comma-separated digit list such as ``"2,1,2,1"``."""
    parts = [t.strip() for t in text.split(",")]
    if parts == [""]:
        raise EmptyDigits("digit sequence is empty")
    try:
        digits = [int(t) for t in parts]
    except ValueError:
        raise NonPositiveDigit(f"malformed digit list {text!r}") from None
    return DigitSequence(tuple(digits))


def digits_to_json(ds: DigitSequence) -> list[str]:
    allow_huge_ints()
    return [str(d) for d in ds.digits]


def digits_from_json(items, structure_tag: str = PLAIN) -> DigitSequence:
    allow_huge_ints()
    return DigitSequence(tuple(int(s) for s in items), structure_tag)
