"""
Numerical kernel
Precision contexts, truncated Taylor jets, g-series, dense ODE output and the
shared primitives (Airy functions, root finding, quadrature) the solver
modules are built on.
"""

import bisect
import logging
import math
import os
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, List, Optional, Sequence, Tuple

import mpmath
from mpmath.calculus.optimization import Anderson, Illinois
from mpmath.ctx_mp_python import _mpc

logger = logging.getLogger(__name__)

# === CONFIG ===
DEFAULT_DIGITS = int(os.getenv("QLM_DIGITS", "34"))
HIGH_DIGITS = int(os.getenv("QLM_HIGH_DIGITS", "50"))
MIN_DIGITS = 16
MAX_TAYLOR_ORDER = 64
MAX_ODE_STEPS = int(os.getenv("QLM_MAX_ODE_STEPS", "20000"))
ROOT_MAX_STEPS = 200

# Pole switching thresholds: |y| > Y_SWITCH moves to w = 1/y, |w| > W_SWITCH_BACK returns to y.
Y_SWITCH = 10
W_SWITCH_BACK = 1


# === ERRORS ===

class QlmError(Exception):
    """Base class for every error raised by the solver."""


class ConfigError(QlmError):
    """Invalid user input: unknown model, bad parameter, bad precision."""


class NumericalError(QlmError):
    """A well-posed request that the numerics could not answer."""


class ZeroConstantTerm(NumericalError):
    pass


class AnchorMismatch(NumericalError):
    pass


class ContextMismatch(NumericalError):
    pass


class PrecisionLoss(NumericalError):
    pass


class StepUnderflow(NumericalError):
    def __init__(self, message: str, z: Any = None):
        super().__init__(message)
        self.z = z


class ToleranceUnreachable(NumericalError):
    pass


class NoSignChange(NumericalError):
    pass


class MaxIterations(NumericalError):
    pass


class InterpolationOutOfSpan(NumericalError):
    pass


class JetOrderExhausted(NumericalError):
    pass


class SeriesInversionFailure(NumericalError):
    pass


class NodeOfChi(NumericalError):
    pass


# === PRECISION ===

class PrecisionContext:
    """A fixed working precision of `digits` decimal digits.

    Each context owns a private mpmath context, so two computations at
    different precisions never share global state.
    """

    def __init__(self, digits: int = DEFAULT_DIGITS):
        if int(digits) < MIN_DIGITS:
            raise ConfigError(f"precision must be at least {MIN_DIGITS} digits, got {digits}")
        self.digits = int(digits)
        self.mp = mpmath.MPContext()
        self.mp.dps = self.digits

    def __repr__(self) -> str:
        return f"PrecisionContext(digits={self.digits})"

    def mpf(self, x: Any):
        return self.mp.mpf(x)

    def mpc(self, re: Any, im: Any = 0):
        return self.mp.mpc(re, im)

    def convert(self, x: Any):
        return self.mp.convert(x)

    def parse(self, text: str):
        """Parse a decimal string at full precision."""
        try:
            return self.mp.mpf(str(text).strip())
        except (ValueError, TypeError) as e:
            raise ConfigError(f"not a decimal number: {text!r}") from e

    @property
    def eps(self):
        return self.mp.mpf(10) ** (-self.digits)

    @property
    def min_tol(self):
        return 10 * self.mp.mpf(10) ** (1 - self.digits)

    def nstr(self, x: Any, digits: Optional[int] = None) -> str:
        return self.mp.nstr(x, digits or self.digits)

    def check_tol(self, tol: Any):
        tol = self.mpf(tol)
        if tol < self.min_tol:
            raise ToleranceUnreachable(
                f"tolerance {self.nstr(tol, 5)} is below what {self.digits} digits can deliver"
            )
        return tol

    def same(self, other: "PrecisionContext"):
        if other is not self:
            raise ContextMismatch(f"mixing {self!r} with {other!r}")


def is_real(x: Any) -> bool:
    return not isinstance(x, (_mpc, complex))


# === JETS ===

class JetOp(str, Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    DIV = "div"
    SQRT = "sqrt"
    EXP = "exp"
    LOG = "log"
    POW = "pow"


class Jet:
    """Truncated Taylor polynomial c_0 + c_1 (x - anchor) + ... + c_M (x - anchor)^M.

    Binary operations between jets of different orders truncate to the lower
    order, so the result never claims more information than its inputs carry.
    """

    __slots__ = ("ctx", "anchor", "coeffs")

    def __init__(self, ctx: PrecisionContext, anchor: Any, coeffs: Sequence[Any]):
        if not coeffs:
            raise JetOrderExhausted("a jet needs at least one coefficient")
        self.ctx = ctx
        self.anchor = anchor
        self.coeffs = tuple(coeffs)

    # --- construction ---

    @classmethod
    def constant(cls, ctx: PrecisionContext, anchor: Any, value: Any, order: int) -> "Jet":
        zero = ctx.mpf(0)
        return cls(ctx, anchor, [ctx.convert(value)] + [zero] * order)

    @classmethod
    def variable(cls, ctx: PrecisionContext, anchor: Any, order: int) -> "Jet":
        """The identity function x expanded about the anchor."""
        anchor = ctx.convert(anchor)
        coeffs = [anchor] + [ctx.mpf(1)] + [ctx.mpf(0)] * (order - 1)
        return cls(ctx, anchor, coeffs[: order + 1])

    @classmethod
    def zeros(cls, ctx: PrecisionContext, anchor: Any, order: int) -> "Jet":
        return cls(ctx, anchor, [ctx.mpf(0)] * (order + 1))

    # --- inspection ---

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def value(self):
        return self.coeffs[0]

    def __getitem__(self, i: int):
        return self.coeffs[i]

    def __len__(self) -> int:
        return len(self.coeffs)

    def __repr__(self) -> str:
        shown = ", ".join(self.ctx.nstr(c, 8) for c in self.coeffs[:4])
        more = ", ..." if self.order > 3 else ""
        return f"Jet(anchor={self.ctx.nstr(self.anchor, 8)}, order={self.order}, [{shown}{more}])"

    def is_zero(self) -> bool:
        return all(not c for c in self.coeffs)

    # --- helpers ---

    def _like(self, coeffs: Sequence[Any]) -> "Jet":
        return Jet(self.ctx, self.anchor, coeffs)

    def _coerce(self, other: Any) -> "Jet":
        if isinstance(other, Jet):
            self.ctx.same(other.ctx)
            if other.anchor != self.anchor:
                raise AnchorMismatch(
                    f"jets anchored at {self.ctx.nstr(self.anchor, 10)} and {self.ctx.nstr(other.anchor, 10)}"
                )
            return other
        return Jet.constant(self.ctx, self.anchor, other, self.order)

    def truncate(self, order: int) -> "Jet":
        if order < 0:
            raise JetOrderExhausted(f"cannot truncate a jet to order {order}")
        if order >= self.order:
            return self
        return self._like(self.coeffs[: order + 1])

    def pad(self, order: int) -> "Jet":
        if order <= self.order:
            return self.truncate(order)
        return self._like(list(self.coeffs) + [self.ctx.mpf(0)] * (order - self.order))

    # --- ring operations ---

    def __add__(self, other: Any) -> "Jet":
        other = self._coerce(other)
        m = min(self.order, other.order)
        return self._like([self.coeffs[i] + other.coeffs[i] for i in range(m + 1)])

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return self._like([-c for c in self.coeffs])

    def __sub__(self, other: Any) -> "Jet":
        other = self._coerce(other)
        m = min(self.order, other.order)
        return self._like([self.coeffs[i] - other.coeffs[i] for i in range(m + 1)])

    def __rsub__(self, other: Any) -> "Jet":
        return self._coerce(other) - self

    def __mul__(self, other: Any) -> "Jet":
        if not isinstance(other, Jet):
            value = self.ctx.convert(other)
            return self._like([c * value for c in self.coeffs])
        other = self._coerce(other)
        m = min(self.order, other.order)
        a, b = self.coeffs, other.coeffs
        fdot = self.ctx.mp.fdot
        return self._like([fdot(a[: n + 1], b[n::-1]) for n in range(m + 1)])

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "Jet":
        if not isinstance(other, Jet):
            value = self.ctx.convert(other)
            if not value:
                raise ZeroConstantTerm("division by zero scalar")
            return self._like([c / value for c in self.coeffs])
        return self * other.reciprocal()

    def __rtruediv__(self, other: Any) -> "Jet":
        return self._coerce(other) * self.reciprocal()

    def reciprocal(self) -> "Jet":
        b = self.coeffs
        if not b[0]:
            raise ZeroConstantTerm("reciprocal of a jet with zero constant term")
        fdot = self.ctx.mp.fdot
        inv0 = 1 / b[0]
        c = [inv0]
        for n in range(1, len(b)):
            c.append(-fdot(b[1 : n + 1], c[n - 1 :: -1]) * inv0)
        return self._like(c)

    def __pow__(self, exponent: Any) -> "Jet":
        if isinstance(exponent, int):
            if exponent < 0:
                return (self ** (-exponent)).reciprocal()
            result = Jet.constant(self.ctx, self.anchor, 1, self.order)
            base = self
            while exponent:
                if exponent & 1:
                    result = result * base
                exponent >>= 1
                if exponent:
                    base = base * base
            return result
        return self.power(exponent)

    def power(self, alpha: Any) -> "Jet":
        """Real or rational power via a p' = alpha a' p."""
        a = self.coeffs
        if not a[0]:
            raise ZeroConstantTerm("non-integer power of a jet with zero constant term")
        mp = self.ctx.mp
        alpha = mp.convert(alpha)
        p = [mp.power(a[0], alpha)]
        for n in range(1, len(a)):
            s = mp.fsum((alpha * k - (n - k)) * a[k] * p[n - k] for k in range(1, n + 1))
            p.append(s / (n * a[0]))
        return self._like(p)

    def sqrt(self) -> "Jet":
        a = self.coeffs
        if not a[0]:
            raise ZeroConstantTerm("sqrt of a jet with zero constant term")
        mp = self.ctx.mp
        s = [mp.sqrt(a[0])]
        two_s0 = 2 * s[0]
        for n in range(1, len(a)):
            cross = mp.fdot(s[1:n], s[n - 1 : 0 : -1]) if n > 1 else 0
            s.append((a[n] - cross) / two_s0)
        return self._like(s)

    def exp(self) -> "Jet":
        a = self.coeffs
        mp = self.ctx.mp
        e = [mp.exp(a[0])]
        for n in range(1, len(a)):
            e.append(mp.fsum(k * a[k] * e[n - k] for k in range(1, n + 1)) / n)
        return self._like(e)

    def log(self) -> "Jet":
        a = self.coeffs
        if not a[0]:
            raise ZeroConstantTerm("log of a jet with zero constant term")
        mp = self.ctx.mp
        out = [mp.log(a[0])]
        for n in range(1, len(a)):
            s = n * a[n] - mp.fsum(k * out[k] * a[n - k] for k in range(1, n))
            out.append(s / (n * a[0]))
        return self._like(out)

    # --- calculus ---

    def derivative(self) -> "Jet":
        if self.order == 0:
            raise JetOrderExhausted("derivative of an order-0 jet")
        return self._like([k * self.coeffs[k] for k in range(1, len(self.coeffs))])

    def integral(self, constant: Any = 0) -> "Jet":
        """Antiderivative vanishing at the anchor plus `constant`; raises the order by one."""
        out = [self.ctx.convert(constant)]
        out.extend(c / (k + 1) for k, c in enumerate(self.coeffs))
        return self._like(out)

    def evaluate(self, x: Any):
        h = x - self.anchor
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * h + c
        return acc

    def shift(self, new_anchor: Any) -> "Jet":
        """Re-expand the polynomial about another point (exact for the truncated polynomial)."""
        return Jet(self.ctx, new_anchor, taylor_shift(self.ctx, self.coeffs, new_anchor - self.anchor))

    def rescale(self, factor: Any) -> "Jet":
        """Jet in x about x0 to the same function of u = factor·x about factor·x0."""
        inv = 1 / self.ctx.convert(factor)
        scale = self.ctx.mpf(1)
        out = []
        for c in self.coeffs:
            out.append(c * scale)
            scale *= inv
        return Jet(self.ctx, self.anchor * factor, out)

    def map_coeffs(self, fn: Callable[[Any], Any]) -> "Jet":
        return self._like([fn(c) for c in self.coeffs])


def taylor_shift(ctx: PrecisionContext, coeffs: Sequence[Any], h: Any) -> List[Any]:
    """Coefficients of p(x + h) given those of p(x), by repeated synthetic division."""
    out = list(coeffs)
    n = len(out)
    if not h:
        return out
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            out[j] = out[j] + h * out[j + 1]
    return out


def jet_ops(a: Jet, b: Any, op: JetOp) -> Jet:
    """Apply a ring or elementary operation to jets.

    Args:
        a: left operand
        b: right operand (jet or scalar) for binary ops, the exponent for pow,
           ignored for unary ops
        op: operation name

    Returns:
        The truncated Taylor expansion of the composite function.
    """
    op = JetOp(op)
    if isinstance(b, Jet) and op in (JetOp.ADD, JetOp.SUB, JetOp.MUL, JetOp.DIV):
        a._coerce(b)
    if op == JetOp.ADD:
        return a + b
    if op == JetOp.SUB:
        return a - b
    if op == JetOp.MUL:
        return a * b
    if op == JetOp.DIV:
        return a / b
    if op == JetOp.SQRT:
        return a.sqrt()
    if op == JetOp.EXP:
        return a.exp()
    if op == JetOp.LOG:
        return a.log()
    return a ** b


# === G-SERIES ===

class GSeries:
    """Series Σ_{m=0..N} g^m Y_m whose coefficients are jets in r.

    Depth bookkeeping: coefficient m is kept at jet order base_order - m, since
    every power of g in these expansions comes with one r-derivative.
    """

    __slots__ = ("ctx", "base_order", "coeffs")

    def __init__(self, ctx: PrecisionContext, base_order: int, coeffs: Sequence[Jet]):
        if base_order < len(coeffs) - 1:
            raise JetOrderExhausted(
                f"g-series of order {len(coeffs) - 1} needs jets of order >= {len(coeffs) - 1}, got {base_order}"
            )
        for m, c in enumerate(coeffs):
            if c.order < base_order - m:
                raise JetOrderExhausted(
                    f"g-coefficient {m} carries jet order {c.order}, needs {base_order - m}"
                )
        self.ctx = ctx
        self.base_order = base_order
        self.coeffs = tuple(c.truncate(base_order - m) for m, c in enumerate(coeffs))

    @classmethod
    def constant(cls, jet: Jet, order: int) -> "GSeries":
        zero = Jet.zeros(jet.ctx, jet.anchor, jet.order)
        return cls(jet.ctx, jet.order, [jet] + [zero] * order)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def anchor(self):
        return self.coeffs[0].anchor

    def values(self) -> List[Any]:
        """The coefficient functions Y_m evaluated at the anchor."""
        return [c.value for c in self.coeffs]

    def _check(self, other: "GSeries"):
        self.ctx.same(other.ctx)
        if other.anchor != self.anchor:
            raise AnchorMismatch("g-series anchored at different points")

    def _depth(self, other: "GSeries") -> Tuple[int, int]:
        return min(self.order, other.order), min(self.base_order, other.base_order)

    def __add__(self, other: "GSeries") -> "GSeries":
        self._check(other)
        n, base = self._depth(other)
        return GSeries(self.ctx, base, [self.coeffs[m] + other.coeffs[m] for m in range(n + 1)])

    def __sub__(self, other: "GSeries") -> "GSeries":
        return self + (-other)

    def __neg__(self) -> "GSeries":
        return GSeries(self.ctx, self.base_order, [-c for c in self.coeffs])

    def scale(self, value: Any) -> "GSeries":
        return GSeries(self.ctx, self.base_order, [c * value for c in self.coeffs])

    def __mul__(self, other: Any) -> "GSeries":
        if not isinstance(other, GSeries):
            return self.scale(other)
        self._check(other)
        n, base = self._depth(other)
        out = []
        for m in range(n + 1):
            keep = base - m
            acc = None
            for i in range(m + 1):
                term = self.coeffs[i].truncate(keep) * other.coeffs[m - i].truncate(keep)
                acc = term if acc is None else acc + term
            out.append(acc)
        return GSeries(self.ctx, base, out)

    __rmul__ = __mul__

    def inverse(self) -> "GSeries":
        lead = self.coeffs[0]
        if not lead.value:
            raise SeriesInversionFailure("leading g-coefficient vanishes at the anchor")
        inv0 = lead.reciprocal()
        out = [inv0]
        for m in range(1, self.order + 1):
            keep = self.base_order - m
            acc = None
            for i in range(1, m + 1):
                term = self.coeffs[i].truncate(keep) * out[m - i].truncate(keep)
                acc = term if acc is None else acc + term
            out.append(-(inv0.truncate(keep) * acc))
        return GSeries(self.ctx, self.base_order, out)

    def __truediv__(self, other: "GSeries") -> "GSeries":
        return self * other.inverse()

    def dz(self) -> "GSeries":
        """d/dz = g·d/dr: shifts up one g-order and differentiates in r."""
        zero = Jet.zeros(self.ctx, self.anchor, self.base_order)
        out = [zero]
        for m in range(1, self.order + 1):
            out.append(self.coeffs[m - 1].derivative())
        return GSeries(self.ctx, self.base_order, out)

    def truncate(self, order: int) -> "GSeries":
        return GSeries(self.ctx, self.base_order, self.coeffs[: order + 1])


# === DENSE OUTPUT ===

@dataclass(frozen=True)
class PathSegment:
    """One Taylor step: polynomial about `anchor`, valid on [lo, hi]."""

    lo: Any
    hi: Any
    anchor: Any
    coeffs: Tuple[Any, ...]
    inverted: bool = False

    def evaluate(self, z: Any):
        h = z - self.anchor
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * h + c
        return acc

    def derivative(self, z: Any):
        h = z - self.anchor
        n = len(self.coeffs)
        acc = (n - 1) * self.coeffs[-1]
        for k in range(n - 2, 0, -1):
            acc = acc * h + k * self.coeffs[k]
        return acc

    def jet(self, ctx: PrecisionContext, at: Any, order: Optional[int] = None) -> Jet:
        coeffs = taylor_shift(ctx, self.coeffs, at - self.anchor)
        if order is not None:
            coeffs = (list(coeffs) + [ctx.mpf(0)] * order)[: order + 1]
        return Jet(ctx, at, coeffs)


class DensePath:
    """Piecewise-polynomial dense output over a span.

    On inverted segments the stored variable is w = 1/y; `evaluate` always
    returns y, `evaluate_raw` returns the stored variable.
    """

    def __init__(self, ctx: PrecisionContext, segments: Sequence[PathSegment], tol: Any):
        if not segments:
            raise InterpolationOutOfSpan("a dense path needs at least one segment")
        self.ctx = ctx
        self.tol = tol
        self.segments: Tuple[PathSegment, ...] = tuple(sorted(segments, key=lambda s: s.lo))
        self._los = [s.lo for s in self.segments]
        for left, right in zip(self.segments, self.segments[1:]):
            if left.hi != right.lo:
                raise InterpolationOutOfSpan("path segments do not tile the span")

    @property
    def span(self) -> Tuple[Any, Any]:
        return self.segments[0].lo, self.segments[-1].hi

    @property
    def breakpoints(self) -> List[Any]:
        return self._los + [self.segments[-1].hi]

    def pole_intervals(self) -> List[Tuple[Any, Any]]:
        return [(s.lo, s.hi) for s in self.segments if s.inverted]

    def is_real(self) -> bool:
        return all(is_real(c) for s in self.segments for c in s.coeffs)

    def segment_for(self, z: Any, direction: int = 0) -> PathSegment:
        """Segment containing z; at a breakpoint, the one lying in `direction`."""
        lo, hi = self.span
        slack = self.tol * (1 + abs(lo) + abs(hi))
        if z < lo - slack or z > hi + slack:
            raise InterpolationOutOfSpan(
                f"z = {self.ctx.nstr(z, 12)} outside [{self.ctx.nstr(lo, 12)}, {self.ctx.nstr(hi, 12)}]"
            )
        i = bisect.bisect_right(self._los, z) - 1
        i = max(0, min(i, len(self.segments) - 1))
        if direction < 0 and i > 0 and z == self.segments[i].lo:
            i -= 1
        return self.segments[i]

    def evaluate_raw(self, z: Any, direction: int = 0) -> Tuple[Any, bool]:
        seg = self.segment_for(z, direction)
        return seg.evaluate(z), seg.inverted

    def evaluate(self, z: Any, direction: int = 0):
        value, inverted = self.evaluate_raw(z, direction)
        if not inverted:
            return value
        if not value:
            raise NodeOfChi(f"y has a pole at z = {self.ctx.nstr(z, 12)}")
        return 1 / value

    __call__ = evaluate

    def derivative(self, z: Any, direction: int = 0):
        """Derivative of the stored variable."""
        return self.segment_for(z, direction).derivative(z)

    def jet_at(self, z: Any, order: int, direction: int = 0) -> Tuple[Jet, bool]:
        seg = self.segment_for(z, direction)
        return seg.jet(self.ctx, z, order), seg.inverted

    def sample_grid(self, per_segment: int = 3) -> List[Any]:
        """Breakpoints plus interior points of every segment."""
        points = []
        for seg in self.segments:
            width = seg.hi - seg.lo
            for k in range(per_segment):
                points.append(seg.lo + width * k / per_segment)
        points.append(self.segments[-1].hi)
        return points


# === ODE ENGINE ===

@dataclass(frozen=True)
class RiccatiCoefficients:
    """Jets of a, b, c in v' = a + b v + c v²; None stands for zero.

    `inverted` tells whether v is y (False) or w = 1/y (True).
    """

    a: Optional[Jet]
    b: Optional[Jet]
    c: Optional[Jet]
    inverted: bool = False

    def flipped(self) -> "RiccatiCoefficients":
        neg = lambda j: None if j is None else -j
        return RiccatiCoefficients(neg(self.c), neg(self.b), neg(self.a), not self.inverted)

    def for_variable(self, inverted: bool) -> "RiccatiCoefficients":
        return self if inverted == self.inverted else self.flipped()


class RiccatiField:
    """y' = a(z) + b(z) y + c(z) y² with coefficient jets supplied per anchor.

    Args:
        coefficients: callable (anchor, order, direction) -> RiccatiCoefficients
        breakpoints: points the integrator must step onto exactly (mesh reuse)
        switchable: allow the pole switch to w = 1/y
    """

    def __init__(
        self,
        coefficients: Callable[[Any, int, int], RiccatiCoefficients],
        breakpoints: Sequence[Any] = (),
        switchable: bool = True,
    ):
        self.coefficients = coefficients
        self.breakpoints = sorted(breakpoints)
        self.switchable = switchable

    def next_breakpoint(self, z: Any, direction: int) -> Optional[Any]:
        if not self.breakpoints:
            return None
        if direction > 0:
            i = bisect.bisect_right(self.breakpoints, z)
            return self.breakpoints[i] if i < len(self.breakpoints) else None
        i = bisect.bisect_left(self.breakpoints, z) - 1
        return self.breakpoints[i] if i >= 0 else None


def taylor_order(ctx: PrecisionContext, tol: Any) -> int:
    """Order of the Taylor steps for a tolerance: about half of ln(1/tol)."""
    digits = -float(ctx.mp.log10(tol))
    order = int(math.ceil(digits * math.log(10) / 2)) + 1
    return max(8, min(MAX_TAYLOR_ORDER, order))


def step_radius(ctx: PrecisionContext, coeffs: Sequence[Any], tol_abs: Any) -> Optional[Any]:
    """Step from the decay of the last two Taylor coefficients; None if both vanish."""
    radius = None
    n = len(coeffs) - 1
    for j in (n - 1, n):
        c = abs(coeffs[j])
        if j > 0 and c:
            r = ctx.mp.root(tol_abs / c, j)
            radius = r if radius is None else min(radius, r)
    if radius is None:
        return None
    return radius * ctx.mpf("0.9")


def riccati_taylor(ctx: PrecisionContext, v0: Any, coeffs: RiccatiCoefficients, order: int) -> List[Any]:
    """Taylor coefficients of v' = a + b v + c v² from the coefficient jets (O(M²))."""
    fdot = ctx.mp.fdot
    a, b, c = coeffs.a, coeffs.b, coeffs.c
    v = [v0]
    sq: List[Any] = []
    zero = ctx.mpf(0)
    for n in range(order):
        s = a.coeffs[n] if a is not None else zero
        if b is not None:
            s += fdot(b.coeffs[: n + 1], v[::-1])
        if c is not None:
            sq.append(fdot(v, v[::-1]))
            s += fdot(c.coeffs[: n + 1], sq[::-1])
        v.append(s / (n + 1))
    return v


def generic_taylor(
    ctx: PrecisionContext, field: Callable[[Jet, Jet], Any], z0: Any, v0: Any, order: int
) -> List[Any]:
    """Taylor coefficients of v' = field(z, v) by order raising on jets."""
    v = [v0]
    for n in range(order):
        zj = Jet.variable(ctx, z0, n)
        vj = Jet(ctx, z0, v)
        rate = field(zj, vj)
        coeff = rate.coeffs[n] if isinstance(rate, Jet) else (ctx.convert(rate) if n == 0 else ctx.mpf(0))
        v.append(coeff / (n + 1))
    return v


def ode_solve(
    field: Any,
    init: Any,
    span: Tuple[Any, Any],
    tol: Any,
    ctx: PrecisionContext,
    order: Optional[int] = None,
    max_steps: int = MAX_ODE_STEPS,
) -> DensePath:
    """Integrate v' = field from span[0] to span[1] with Taylor steps and dense output.

    Args:
        field: a RiccatiField, or a callable (z_jet, v_jet) -> jet written with
               jet arithmetic
        init: value at span[0]
        span: (start, end); end may lie left of start
        tol: local tolerance, scaled by (1 + |v|)
        ctx: precision context
        order: Taylor order (default from tol)
        max_steps: step budget before StepUnderflow

    Returns:
        DensePath over the span
    """
    tol = ctx.check_tol(tol)
    start, end = ctx.convert(span[0]), ctx.convert(span[1])
    if start == end:
        raise InterpolationOutOfSpan("empty integration span")
    direction = 1 if end > start else -1
    order = order or taylor_order(ctx, tol)
    riccati = isinstance(field, RiccatiField)
    switchable = riccati and field.switchable

    z = start
    value = ctx.convert(init)
    inverted = False
    if switchable and abs(value) > Y_SWITCH:
        inverted, value = True, 1 / value

    min_step = ctx.mpf(10) ** (2 - ctx.digits)
    segments: List[PathSegment] = []
    switches = 0
    while (end - z) * direction > 0:
        if len(segments) >= max_steps:
            raise StepUnderflow(f"step budget of {max_steps} exhausted at z = {ctx.nstr(z, 15)}", z)
        if riccati:
            coeffs = field.coefficients(z, order, direction).for_variable(inverted)
            taylor = riccati_taylor(ctx, value, coeffs, order)
        else:
            taylor = generic_taylor(ctx, field, z, value, order)

        remaining = abs(end - z)
        target = end
        h = remaining
        radius = step_radius(ctx, taylor, tol * (1 + abs(value)))
        if radius is not None and radius < h:
            h = radius
            target = None
        if riccati:
            stop = field.next_breakpoint(z, direction)
            if stop is not None and abs(stop - z) <= h:
                h = abs(stop - z)
                target = stop
        if target is None and h < min_step * max(1, abs(z)):
            raise StepUnderflow(f"step size underflow near z = {ctx.nstr(z, 15)}", z)

        z_new = target if target is not None else z + direction * h
        seg = PathSegment(
            lo=min(z, z_new), hi=max(z, z_new), anchor=z, coeffs=tuple(taylor), inverted=inverted
        )
        segments.append(seg)
        value = seg.evaluate(z_new)
        z = z_new
        if not ctx.mp.isfinite(value):
            raise StepUnderflow(f"solution left the representable range at z = {ctx.nstr(z, 15)}", z)

        if switchable:
            if not inverted and abs(value) > Y_SWITCH:
                inverted, value = True, 1 / value
                switches += 1
            elif inverted and abs(value) > W_SWITCH_BACK:
                inverted, value = False, 1 / value
                switches += 1

    logger.debug(f"ode_solve: {len(segments)} steps of order {order}, {switches} pole switches")
    return DensePath(ctx, segments, tol)


# === ROOT FINDING AND QUADRATURE ===

def _sign(x: Any) -> int:
    return (x > 0) - (x < 0)


def root_find(
    f: Callable[[Any], Any],
    bracket: Tuple[Any, Any],
    tol: Any,
    ctx: PrecisionContext,
    max_steps: int = ROOT_MAX_STEPS,
):
    """Bracketed root with superlinear acceleration (Anderson-Bjorck, Illinois fallback).

    Args:
        f: real function, continuous on the bracket
        bracket: (lo, hi) with f(lo)·f(hi) < 0
        tol: bracket-width tolerance (relative to max(1, |x|))
        ctx: precision context

    Returns:
        The root estimate.
    """
    lo, hi = ctx.convert(bracket[0]), ctx.convert(bracket[1])
    flo, fhi = f(lo), f(hi)
    if not flo:
        return lo
    if not fhi:
        return hi
    if _sign(flo) == _sign(fhi):
        raise NoSignChange(
            f"no sign change on [{ctx.nstr(lo, 12)}, {ctx.nstr(hi, 12)}]: "
            f"f = {ctx.nstr(flo, 5)}, {ctx.nstr(fhi, 5)}"
        )
    tol = ctx.mpf(tol)
    ftol = ctx.eps
    for solver in (Anderson, Illinois):
        steps = 0
        x = (lo + hi) / 2
        for x, width in solver(ctx.mp, f, (lo, hi), tol=ftol, verbose=False):
            steps += 1
            if width <= tol * max(1, abs(x)):
                return x
            if steps >= max_steps:
                break
        else:
            return x
        logger.warning(f"⚠️ {solver.__name__} did not converge in {max_steps} steps, trying the next solver")
    raise MaxIterations(f"root not isolated to {ctx.nstr(tol, 5)} within {max_steps} steps")


class Singularity(str, Enum):
    NONE = "none"
    LEFT = "left"
    RIGHT = "right"
    BOTH = "both"


def quad(
    f: Callable[[Any], Any],
    a: Any,
    b: Any,
    tol: Any,
    ctx: PrecisionContext,
    singular: Singularity = Singularity.NONE,
    exponent: Any = "-0.5",
):
    """Adaptive tanh-sinh quadrature with declared endpoint singularities.

    A declared singularity |x - e|^exponent (exponent > -1) is removed by the
    substitution x = e ± u^m with m = 1/(1 + exponent).

    Returns:
        The integral (real or complex).
    """
    mp = ctx.mp
    a, b = ctx.convert(a), ctx.convert(b)
    tol = ctx.mpf(tol)
    singular = Singularity(singular)
    exponent = ctx.convert(exponent)
    if exponent <= -1:
        raise ConfigError("endpoint exponent must exceed -1")
    if a == b:
        return ctx.mpf(0)
    if a > b:
        flipped = {Singularity.LEFT: Singularity.RIGHT, Singularity.RIGHT: Singularity.LEFT}
        return -quad(f, b, a, tol, ctx, flipped.get(singular, singular), exponent)
    if singular == Singularity.BOTH:
        mid = (a + b) / 2
        return quad(f, a, mid, tol, ctx, Singularity.LEFT, exponent) + quad(
            f, mid, b, tol, ctx, Singularity.RIGHT, exponent
        )

    m = 1 / (1 + exponent)
    if singular == Singularity.LEFT:
        width = mp.power(b - a, 1 / m)
        g = lambda u: f(a + mp.power(u, m)) * m * mp.power(u, m - 1)
        lo, hi = ctx.mpf(0), width
    elif singular == Singularity.RIGHT:
        width = mp.power(b - a, 1 / m)
        g = lambda u: f(b - mp.power(u, m)) * m * mp.power(u, m - 1)
        lo, hi = ctx.mpf(0), width
    else:
        g, lo, hi = f, a, b

    value, err = mp.quad(g, [lo, hi], error=True)
    if err > tol * (1 + abs(value)):
        value, err = mp.quad(g, [lo, hi], error=True, maxdegree=mp.dps // 3 + 10)
    if err > tol * (1 + abs(value)):
        raise ToleranceUnreachable(
            f"quadrature error estimate {mp.nstr(err, 5)} above tolerance {mp.nstr(tol, 5)}"
        )
    return value


# === AIRY ===

def airy_switch_point(ctx: PrecisionContext):
    """|x| beyond which the asymptotic series meets the working precision."""
    zeta = (ctx.digits + 8) * ctx.mp.ln10 / 2
    return ctx.mp.power(3 * zeta / 2, ctx.mpf(2) / 3)


def _airy_maclaurin(ctx: PrecisionContext, x: Any):
    mp = ctx.mp
    loss = float(4 * mp.power(abs(x), 1.5) / (3 * mp.ln10))
    guard = int(loss) + 10
    if guard > 3 * ctx.digits:
        raise PrecisionLoss(f"Maclaurin series for Ai({mp.nstr(x, 8)}) would need {guard} guard digits")
    with mp.extradps(guard):
        x = mp.convert(x)
        c1 = 1 / (mp.power(3, mp.mpf(2) / 3) * mp.gamma(mp.mpf(2) / 3))
        c2 = 1 / (mp.power(3, mp.mpf(1) / 3) * mp.gamma(mp.mpf(1) / 3))
        x3 = x ** 3
        f_term, g_term = mp.mpf(1), x
        f_sum, g_sum = f_term, g_term
        df_term, dg_term = x * x / 2, mp.mpf(1)
        df_sum, dg_sum = df_term, dg_term
        threshold = mp.mpf(10) ** (-(ctx.digits + guard))
        k = 0
        while True:
            f_term = f_term * x3 / ((3 * k + 2) * (3 * k + 3))
            g_term = g_term * x3 / ((3 * k + 3) * (3 * k + 4))
            df_term = df_term * x3 / ((3 * k + 3) * (3 * k + 5))
            dg_term = dg_term * x3 / ((3 * k + 1) * (3 * k + 3))
            f_sum += f_term
            g_sum += g_term
            df_sum += df_term
            dg_sum += dg_term
            k += 1
            scale = max(abs(f_sum), abs(g_sum), abs(df_sum), abs(dg_sum), 1)
            if max(abs(f_term), abs(g_term), abs(df_term), abs(dg_term)) < threshold * scale and k > 2:
                break
        ai = c1 * f_sum - c2 * g_sum
        aip = c1 * df_sum - c2 * dg_sum
    return +ai, +aip


def _airy_asymptotic(ctx: PrecisionContext, x: Any):
    mp = ctx.mp
    target = mp.mpf(10) ** (-(ctx.digits + 2))
    with mp.extradps(10):
        ax = abs(mp.convert(x))
        zeta = 2 * mp.power(ax, mp.mpf(3) / 2) / 3
        us: List[Any] = [mp.mpf(1)]
        vs: List[Any] = [mp.mpf(1)]
        k = 1
        while True:
            u = us[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k)
            term = abs(u) / zeta ** k
            if term > abs(us[-1]) / zeta ** (k - 1):
                raise PrecisionLoss(f"asymptotic Airy series diverges before reaching tolerance at x = {mp.nstr(x, 8)}")
            us.append(u)
            vs.append(-u * (6 * k + 1) / (6 * k - 1))
            k += 1
            if term < target:
                break
        if x > 0:
            su = mp.fsum((-1) ** j * us[j] / zeta ** j for j in range(len(us)))
            sv = mp.fsum((-1) ** j * vs[j] / zeta ** j for j in range(len(vs)))
            pre = mp.exp(-zeta) / (2 * mp.sqrt(mp.pi))
            ai = pre * su / mp.root(ax, 4)
            aip = -pre * sv * mp.root(ax, 4)
        else:
            def alternating(coeffs: List[Any], parity: int):
                return mp.fsum(
                    (-1) ** (j // 2) * coeffs[j] / zeta ** j for j in range(parity, len(coeffs), 2)
                )

            phase = zeta - mp.pi / 4
            c, s = mp.cos(phase), mp.sin(phase)
            ai = (c * alternating(us, 0) + s * alternating(us, 1)) / (mp.sqrt(mp.pi) * mp.root(ax, 4))
            aip = mp.root(ax, 4) * (s * alternating(vs, 0) - c * alternating(vs, 1)) / mp.sqrt(mp.pi)
    return +ai, +aip


def airy(x: Any, ctx: PrecisionContext) -> Tuple[Any, Any]:
    """Ai(x) and Ai'(x) at the working precision.

    Maclaurin series with guard digits for |x| up to the switch point, the
    asymptotic expansion beyond it.
    """
    x = ctx.convert(x)
    if not ctx.mp.isfinite(x):
        raise PrecisionLoss("Airy function of a non-finite argument")
    if abs(x) > airy_switch_point(ctx):
        return _airy_asymptotic(ctx, x)
    return _airy_maclaurin(ctx, x)


def airy_jet(sigma: Jet, ai: Any = None, aip: Any = None) -> Tuple[Jet, Jet]:
    """Jets of Ai(σ(x)) and Ai'(σ(x)) from the Airy equation (u' = v σ', v' = σ u σ')."""
    ctx = sigma.ctx
    if ai is None or aip is None:
        ai, aip = airy(sigma.value, ctx)
    fdot = ctx.mp.fdot
    order = sigma.order
    if order == 0:
        return Jet(ctx, sigma.anchor, [ai]), Jet(ctx, sigma.anchor, [aip])
    dsig = sigma.derivative().coeffs
    p = (sigma.truncate(order - 1) * sigma.derivative()).coeffs
    u, v = [ai], [aip]
    for n in range(order):
        u.append(fdot(v, dsig[n::-1]) / (n + 1))
        v.append(fdot(u[: n + 1], p[n::-1]) / (n + 1))
    return Jet(ctx, sigma.anchor, u), Jet(ctx, sigma.anchor, v)
