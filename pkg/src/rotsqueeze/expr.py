"""Growth-sequence expressions evaluated in the log domain.

Grammar, loosest binding first::

    sum  := prod ('+' prod)*
    prod := pow (('*' | '/') pow)*
    pow  := atom ('^' atom)?
    atom := VAR | NUMBER | 'log' '(' sum ')' | '(' sum ')'

There is no subtraction and every constant must be positive, so any
expression without ``log`` is positive for positive arguments.  Sequence
expressions use the variable ``n`` and need a variable-free exponent;
schedules use ``i`` and may put the variable in the exponent, as in
``1/2^(i+1)``.

Arguments can be integers with thousands of digits, so evaluation returns
ln(value) as an mpmath float at ``WORK_DPS`` digits.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .errors import (
    EmptyFamily,
    ExprDomainError,
    ExprSyntaxError,
    NegativeOrZeroConstant,
    NonConstantExponent,
)

LOG_DPS = 64
WORK_DPS = LOG_DPS + 6

# Alias for documentation: ln of a positive sequence value.
LogValue = mpmath.mpf


class Expr:
    __slots__ = ()

    def has_var(self) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class Var(Expr):
    name: str = "n"

    def has_var(self):
        return True


@dataclass(frozen=True)
class Const(Expr):
    text: str

    def has_var(self):
        return False


@dataclass(frozen=True)
class Sum(Expr):
    left: Expr
    right: Expr

    def has_var(self):
        return self.left.has_var() or self.right.has_var()


@dataclass(frozen=True)
class Prod(Expr):
    left: Expr
    right: Expr

    def has_var(self):
        return self.left.has_var() or self.right.has_var()


@dataclass(frozen=True)
class Quot(Expr):
    left: Expr
    right: Expr

    def has_var(self):
        return self.left.has_var() or self.right.has_var()


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: Expr

    def has_var(self):
        return self.base.has_var() or self.exponent.has_var()


@dataclass(frozen=True)
class Log(Expr):
    arg: Expr

    def has_var(self):
        return self.arg.has_var()


_TOKEN = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>[-+*/^()])"
)


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, var: str, var_exponent: bool):
        self.tokens = _tokenize(text)
        self.i = 0
        self.var = var
        self.var_exponent = var_exponent

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value or kind == "end":
            raise ExprSyntaxError(f"expected {value!r}", pos)

    def parse(self) -> Expr:
        node = self.sum()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", pos)
        return node

    def sum(self):
        node = self.prod()
        while self.peek()[1] == "+" and self.peek()[0] == "op":
            self.take()
            node = Sum(node, self.prod())
        return node

    def prod(self):
        node = self.pow()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            rhs = self.pow()
            node = Prod(node, rhs) if op == "*" else Quot(node, rhs)
        return node

    def pow(self):
        node = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            pos = self.peek()[2]
            exponent = self.atom()
            if exponent.has_var() and not self.var_exponent:
                raise NonConstantExponent("exponent must be constant", pos)
            node = Pow(node, exponent)
        return node

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            if mpmath.mpf(text) <= 0:
                raise NegativeOrZeroConstant(f"constant {text} must be positive", pos)
            return Const(text)
        if kind == "name":
            if text == self.var:
                return Var(self.var)
            if text == "log":
                self.expect("(")
                inner = self.sum()
                self.expect(")")
                return Log(inner)
            raise ExprSyntaxError(f"unknown name {text!r}", pos)
        if kind == "op" and text == "(":
            inner = self.sum()
            self.expect(")")
            return inner
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", pos)
        raise ExprSyntaxError(f"unexpected {text!r}", pos)


def parse(text: str, var: str = "n", var_exponent: bool = False) -> Expr:
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    if not text.isascii():
        raise ExprSyntaxError("expression must be ASCII", 0)
    return _Parser(text, var, var_exponent).parse()


_PREC = {Sum: 1, Prod: 2, Quot: 2, Pow: 3}


def pretty(node: Expr) -> str:
    """Render with the fewest parentheses the grammar needs."""
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Const):
        return node.text
    if isinstance(node, Log):
        return f"log({pretty(node.arg)})"
    if isinstance(node, Pow):
        base = pretty(node.base)
        if type(node.base) in _PREC:
            base = f"({base})"
        exp = pretty(node.exponent)
        if type(node.exponent) in _PREC:
            exp = f"({exp})"
        return f"{base}^{exp}"
    prec = _PREC[type(node)]
    op = {Sum: "+", Prod: "*", Quot: "/"}[type(node)]
    left = pretty(node.left)
    if _PREC.get(type(node.left), 9) < prec:
        left = f"({left})"
    right = pretty(node.right)
    # Operators are left-associative: a same-level right child needs parentheses.
    if _PREC.get(type(node.right), 9) <= prec:
        right = f"({right})"
    return f"{left}{op}{right}"


def _ln(node: Expr, ln_arg):
    # A zero subterm (e.g. log(1)) is carried as -inf.
    if isinstance(node, Var):
        return ln_arg
    if isinstance(node, Const):
        return mpmath.log(mpmath.mpf(node.text))
    if isinstance(node, Sum):
        a, b = _ln(node.left, ln_arg), _ln(node.right, ln_arg)
        hi, lo = (a, b) if a >= b else (b, a)
        if lo == mpmath.ninf:
            return hi
        return hi + mpmath.log1p(mpmath.exp(lo - hi))
    if isinstance(node, Prod):
        a, b = _ln(node.left, ln_arg), _ln(node.right, ln_arg)
        return mpmath.ninf if mpmath.ninf in (a, b) else a + b
    if isinstance(node, Quot):
        a, b = _ln(node.left, ln_arg), _ln(node.right, ln_arg)
        if b == mpmath.ninf:
            raise ExprDomainError(f"division by zero in {pretty(node)}")
        return a - b
    if isinstance(node, Pow):
        base = _ln(node.base, ln_arg)
        if base == mpmath.ninf:
            return base
        return mpmath.exp(_ln(node.exponent, ln_arg)) * base
    if isinstance(node, Log):
        inner = _ln(node.arg, ln_arg)
        if inner < 0:
            raise ExprDomainError(f"log({pretty(node.arg)}) is negative")
        return mpmath.log(inner) if inner > 0 else mpmath.ninf
    raise TypeError(f"not an expression node: {node!r}")


def ln_int(n: int):
    """Natural log of a positive integer of any size, at the working precision."""
    if n < 1:
        raise ExprDomainError(f"argument must be >= 1, got {n}")
    with mpmath.workdps(WORK_DPS):
        return mpmath.log(mpmath.mpf(n))


def eval_log(expr: Expr, n: int):
    """ln(expr(n)) for a positive integer n."""
    with mpmath.workdps(WORK_DPS):
        out = _ln(expr, ln_int(n))
        if out == mpmath.ninf:
            raise ExprDomainError(f"{pretty(expr)} is zero at n={n}")
        return +out


def eval_log_at(expr: Expr, ln_arg):
    """ln(expr) where the argument is given by its logarithm."""
    with mpmath.workdps(WORK_DPS):
        out = _ln(expr, mpmath.mpf(ln_arg))
        if out == mpmath.ninf:
            raise ExprDomainError(f"{pretty(expr)} is zero")
        return +out


def eval_real(expr: Expr, value):
    """Plain evaluation for small arguments (schedules), value may be 0."""
    with mpmath.workdps(WORK_DPS):
        return _real(expr, mpmath.mpf(value))


def _real(node, x):
    if isinstance(node, Var):
        return x
    if isinstance(node, Const):
        return mpmath.mpf(node.text)
    if isinstance(node, Sum):
        return _real(node.left, x) + _real(node.right, x)
    if isinstance(node, Prod):
        return _real(node.left, x) * _real(node.right, x)
    if isinstance(node, Quot):
        den = _real(node.right, x)
        if den == 0:
            raise ExprDomainError("division by zero")
        return _real(node.left, x) / den
    if isinstance(node, Pow):
        base = _real(node.base, x)
        if base < 0:
            raise ExprDomainError("power of a negative base")
        return mpmath.power(base, _real(node.exponent, x))
    if isinstance(node, Log):
        inner = _real(node.arg, x)
        if inner < 1:
            raise ExprDomainError("log of a value below 1")
        return mpmath.log(inner)
    raise TypeError(f"not an expression node: {node!r}")


@dataclass(frozen=True)
class SequenceExpr:
    """A parsed growth sequence such as ``n^0.25`` or ``log(n+2)``."""

    text: str
    tree: Expr

    @classmethod
    def parse(cls, text: str) -> "SequenceExpr":
        return cls(text, parse(text, "n"))

    def ln(self, n: int):
        return eval_log(self.tree, n)

    def __str__(self):
        return self.text


def as_sequence(e) -> SequenceExpr:
    return e if isinstance(e, SequenceExpr) else SequenceExpr.parse(e)


@dataclass(frozen=True)
class ScheduleExpr:
    """Stage schedule in the variable ``i`` (N_i or eps_i)."""

    text: str
    tree: Expr

    @classmethod
    def parse(cls, text: str) -> "ScheduleExpr":
        return cls(text, parse(text, "i", var_exponent=True))

    def value(self, i: int):
        v = eval_real(self.tree, i)
        if not v > 0:
            raise ExprDomainError(f"schedule {self.text!r} is not positive at i={i}")
        return v

    def ln(self, i: int):
        with mpmath.workdps(WORK_DPS):
            return mpmath.log(self.value(i))

    def __str__(self):
        return self.text


DEFAULT_N = "i+1"
DEFAULT_EPS = "1/2^(i+1)"


def check_schedule(sched: ScheduleExpr, stages: int, kind: str) -> list[str]:
    """Sample i = 0..stages; ``kind`` is "N" (nondecreasing, growing) or "eps"."""
    vals = [sched.value(i) for i in range(stages + 1)]
    problems = []
    for i in range(len(vals) - 1):
        if kind == "N" and vals[i + 1] < vals[i]:
            problems.append(f"N schedule decreases at i={i + 1}")
        if kind == "eps" and vals[i + 1] > vals[i]:
            problems.append(f"eps schedule increases at i={i + 1}")
    if len(vals) > 1:
        if kind == "N" and not vals[-1] > vals[0]:
            problems.append("N schedule does not grow on the sampled stages")
        if kind == "eps" and not vals[-1] < vals[0]:
            problems.append("eps schedule does not shrink on the sampled stages")
    return problems


MONOTONE_SAMPLES = tuple(2**e for e in range(65))


def check_monotone(seq: SequenceExpr, samples: Iterable[int] = MONOTONE_SAMPLES) -> list[str]:
    """Values must be defined and nondecreasing at the sampled arguments."""
    problems = []
    prev = None
    for n in samples:
        try:
            cur = seq.ln(n)
        except ExprDomainError as exc:
            problems.append(f"{seq.text}: undefined at n={n}: {exc}")
            continue
        if prev is not None and cur < prev:
            problems.append(f"{seq.text}: decreases at n={n}")
        prev = cur
    return problems


@dataclass
class OrderReport:
    ok: bool
    violations: list[str]
    # ln values at each checkpoint, in chain order 1 < c1 < ... < d1 < n.
    table: list[tuple[int, list]]


def validate_family_order(cs: Sequence, ds: Sequence, checkpoints: Sequence[int]) -> OrderReport:
    """Check 1 < c1 < c2 < ... < d2 < d1 < n at finite checkpoints.

    Besides the ordering at every checkpoint, the log-gap between neighbours
    in the chain must widen from one checkpoint to the next, a finite
    stand-in for each ratio tending to 0.
    """
    if not cs or not ds:
        raise EmptyFamily("both the lower (c) and upper (d) families need at least one sequence")
    checkpoints = list(checkpoints)
    if not checkpoints:
        raise ValueError("need at least one checkpoint")
    if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ValueError("checkpoints must be increasing")
    cs = [as_sequence(c) for c in cs]
    ds = [as_sequence(d) for d in ds]
    names = ["1"] + [c.text for c in cs] + [d.text for d in reversed(ds)] + ["n"]
    violations = []
    table = []
    for n in checkpoints:
        row = [mpmath.mpf(0)]
        for s in cs + list(reversed(ds)):
            try:
                row.append(s.ln(n))
            except ExprDomainError as exc:
                violations.append(f"n={n}: {s.text} undefined ({exc})")
                row.append(mpmath.mpf("nan"))
        row.append(ln_int(n))
        table.append((n, row))
        for j in range(len(row) - 1):
            if not row[j] < row[j + 1]:
                violations.append(f"n={n}: {names[j]} < {names[j + 1]} fails")
    for (n0, r0), (n1, r1) in zip(table, table[1:]):
        for j in range(len(r0) - 1):
            g0, g1 = r0[j + 1] - r0[j], r1[j + 1] - r1[j]
            if not g1 > g0:
                violations.append(
                    f"log-gap {names[j]} -> {names[j + 1]} does not widen between n={n0} and n={n1}"
                )
    return OrderReport(not violations, violations, table)


def _ln_array(node: Expr, ln_arg: np.ndarray) -> np.ndarray:
    if isinstance(node, Var):
        return ln_arg
    if isinstance(node, Const):
        return np.full_like(ln_arg, float(mpmath.log(mpmath.mpf(node.text))))
    if isinstance(node, Sum):
        with np.errstate(invalid="ignore"):
            return np.logaddexp(_ln_array(node.left, ln_arg), _ln_array(node.right, ln_arg))
    if isinstance(node, Prod):
        return _ln_array(node.left, ln_arg) + _ln_array(node.right, ln_arg)
    if isinstance(node, Quot):
        den = _ln_array(node.right, ln_arg)
        return np.where(np.isneginf(den), np.nan, _ln_array(node.left, ln_arg) - den)
    if isinstance(node, Pow):
        return np.exp(_ln_array(node.exponent, ln_arg)) * _ln_array(node.base, ln_arg)
    if isinstance(node, Log):
        inner = _ln_array(node.arg, ln_arg)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(inner >= 0, np.log(np.where(inner >= 0, inner, 1.0)), np.nan)
    raise TypeError(f"not an expression node: {node!r}")


def eval_log_array(expr: Expr, ns: np.ndarray) -> np.ndarray:
    """Double-precision ln(expr(n)) over an array of moderate n; NaN where undefined.

    Only a screen: callers re-check near-ties with :func:`eval_log`.
    """
    return _ln_array(expr, np.log(np.asarray(ns, dtype=np.float64)))
