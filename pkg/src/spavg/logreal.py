"""Signed reals stored as (sign, natural log of magnitude)."""

from __future__ import annotations

import math
from functools import total_ordering

_NEG_INF = -math.inf


@total_ordering
class LogReal:
    """A real number ``sign * exp(logmag)`` that does not overflow for huge magnitudes.

    Zero is ``sign == 0`` with ``logmag == -inf``. Addition uses log-sum-exp,
    so cancellation between nearly equal magnitudes loses relative accuracy
    exactly as it would in floating point.
    """

    __slots__ = ("sign", "logmag")

    def __init__(self, sign: int, logmag: float):
        if sign == 0 or logmag == _NEG_INF:
            sign, logmag = 0, _NEG_INF
        elif sign not in (-1, 1):
            raise ValueError("sign must be -1, 0 or 1")
        if math.isnan(logmag) or logmag == math.inf:
            raise OverflowError("log-magnitude must be finite")
        self.sign = sign
        self.logmag = float(logmag)

    @classmethod
    def from_float(cls, v: float) -> "LogReal":
        v = float(v)
        if math.isnan(v) or math.isinf(v):
            raise ValueError(f"cannot represent {v}")
        if v == 0.0:
            return cls(0, _NEG_INF)
        return cls(1 if v > 0 else -1, math.log(abs(v)))

    @classmethod
    def exp(cls, a) -> "LogReal":
        """``e**a`` for a float or LogReal exponent (the exponent itself must fit a float)."""
        if isinstance(a, LogReal):
            a = a.to_float()
            if math.isinf(a):
                raise OverflowError("exponent beyond double range")
        return cls(1, float(a))

    @staticmethod
    def _coerce(v) -> "LogReal":
        return v if isinstance(v, LogReal) else LogReal.from_float(v)

    def to_float(self) -> float:
        if self.sign == 0:
            return 0.0
        try:
            return self.sign * math.exp(self.logmag)
        except OverflowError:
            return self.sign * math.inf

    __float__ = to_float

    def log(self) -> float:
        if self.sign <= 0:
            raise ValueError("log of a non-positive LogReal")
        return self.logmag

    def __neg__(self):
        return LogReal(-self.sign, self.logmag)

    def __abs__(self):
        return LogReal(abs(self.sign), self.logmag)

    def __mul__(self, other):
        o = self._coerce(other)
        if self.sign == 0 or o.sign == 0:
            return LogReal(0, _NEG_INF)
        return LogReal(self.sign * o.sign, self.logmag + o.logmag)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.sign == 0:
            raise ZeroDivisionError("LogReal division by zero")
        if self.sign == 0:
            return LogReal(0, _NEG_INF)
        return LogReal(self.sign * o.sign, self.logmag - o.logmag)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, p: float):
        if self.sign < 0:
            raise ValueError("power of a negative LogReal")
        if self.sign == 0:
            if p <= 0:
                raise ZeroDivisionError("0 to a non-positive power")
            return LogReal(0, _NEG_INF)
        return LogReal(1, self.logmag * float(p))

    def __add__(self, other):
        o = self._coerce(other)
        if self.sign == 0:
            return o
        if o.sign == 0:
            return self
        a, b = (self, o) if self.logmag >= o.logmag else (o, self)
        d = b.logmag - a.logmag
        if a.sign == b.sign:
            return LogReal(a.sign, a.logmag + math.log1p(math.exp(d)))
        if d == 0.0:
            return LogReal(0, _NEG_INF)
        return LogReal(a.sign, a.logmag + math.log1p(-math.exp(d)))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def _key(self):
        # total order: sign first, then magnitude direction by sign
        return (self.sign, self.logmag * self.sign if self.sign else 0.0)

    def __eq__(self, other):
        try:
            o = self._coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.sign == o.sign and (self.sign == 0 or self.logmag == o.logmag)

    def __lt__(self, other):
        o = self._coerce(other)
        return self._key() < o._key()

    def __hash__(self):
        return hash((self.sign, self.logmag))

    def __repr__(self):
        if self.sign == 0:
            return "LogReal(0)"
        return f"LogReal({'-' if self.sign < 0 else ''}exp({self.logmag!r}))"
