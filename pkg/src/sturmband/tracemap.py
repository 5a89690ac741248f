"""Trace-map evaluation.

``t_(k,p)(x) = tr M_{k-1}(x) M_k(x)^p`` is never formed from the q_k-site
matrix product.  Instead the triple

    u = t_(k,0) = tr M_{k-1},   v = t_(k+1,0) = tr M_k,   w = t_(k,1)

is pushed through the renormalisation ``M_{k+1} = M_{k-1} M_k^{a_{k+1}}``
with Chebyshev polynomials, carrying x-derivatives alongside.  The hot path
lives in :mod:`sturmband.kernel`; the generic functions here work on floats
or mpfr values and serve the audits and tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import gmpy2

from . import kernel
from .cfrac import ContinuedFraction
from .errors import ConfigError, CouplingTooSmall, DomainViolation, InvalidLabel
from .hp import digits, mp

DEFAULT_PRECISION = 192
MIN_COUPLING = 20


@dataclass(frozen=True)
class SpectralParams:
    V: object
    precision_bits: int = DEFAULT_PRECISION

    def __post_init__(self):
        if self.precision_bits < 64:
            raise ConfigError(f"precision_bits must be >= 64, got {self.precision_bits}")
        try:
            V = mp(self.V, self.precision_bits)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad coupling {self.V!r}") from exc
        if not gmpy2.is_finite(V) or V <= 0:
            raise ConfigError(f"coupling must be positive, got {self.V!r}")
        object.__setattr__(self, "V", V)

    @property
    def digits(self) -> int:
        return digits(self.precision_bits)

    def require_band_regime(self):
        if self.V <= MIN_COUPLING:
            raise CouplingTooSmall(f"V = {float(self.V):g} must exceed {MIN_COUPLING}")

    def with_precision(self, bits: int) -> "SpectralParams":
        return SpectralParams(self.V, bits)


class ChebyshevEval(NamedTuple):
    p: int
    value: object
    derivative: object


def chebyshev(p: int, t) -> ChebyshevEval:
    """S_p(t) and S_p'(t) from S_0 = 0, S_1 = 1, S_{p+1} = t S_p - S_{p-1}.

    ``p = -1`` is allowed (S_{-1} = -1).
    """
    if p < -1:
        raise ValueError("p must be >= -1")
    if p == -1:
        return ChebyshevEval(-1, -1 + 0 * t, 0 * t)
    s_prev, s = -1 + 0 * t, 0 * t
    d_prev, d = 0 * t, 0 * t
    for _ in range(p):
        s_prev, s = s, t * s - s_prev
        d_prev, d = d, s_prev + t * d - d_prev
    return ChebyshevEval(p, s, d)


@dataclass(frozen=True)
class TraceState:
    k: int
    x: object
    u: object
    v: object
    w: object
    du: object
    dv: object
    dw: object


def seed(x, V) -> TraceState:
    """Level-0 state: u = t_(0,0) = 2, v = t_(1,0) = x, w = t_(0,1) = x - V."""
    one = 1 + 0 * x
    return TraceState(0, x, 2 * one, x, x - V, 0 * one, one, one)


def advance(state: TraceState, a: int) -> TraceState:
    """Renormalise one level with quotient ``a = a_{k+1}``.

    Cayley-Hamilton gives M^n = S_n(tr M) M - S_{n-1}(tr M) I, so
    v' = w S_a(v) - u S_{a-1}(v) and w' = w S_{a+1}(v) - u S_a(v).
    """
    if a < 1:
        raise ValueError("quotient must be >= 1")
    u, v, w = state.u, state.v, state.w
    du, dv, dw = state.du, state.dv, state.dw
    s_a1 = chebyshev(a - 1, v)
    s_a = chebyshev(a, v)
    s_b = chebyshev(a + 1, v)
    nv = w * s_a.value - u * s_a1.value
    ndv = dw * s_a.value + w * s_a.derivative * dv - du * s_a1.value - u * s_a1.derivative * dv
    nw = w * s_b.value - u * s_a.value
    ndw = dw * s_b.value + w * s_b.derivative * dv - du * s_a.value - u * s_a.derivative * dv
    return TraceState(state.k + 1, state.x, v, nv, nw, dv, ndv, ndw)


def state_at(cf: ContinuedFraction, k: int, x, V) -> TraceState:
    st = seed(x, V)
    for i in range(1, k + 1):
        st = advance(st, cf.quotient(i))
    return st


def fricke(x, y, z):
    """Fricke character x^2 + y^2 + z^2 - xyz - 4."""
    return x * x + y * y + z * z - x * y * z - 4


class ZBranch(NamedTuple):
    value: object
    z1: object
    z2: object


def z_branch(x, y, V, sign: int) -> ZBranch:
    """Solve fricke(x, y, z) = V^2 for z on the ``sign`` branch, with partials."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if abs(x) > 2 or abs(y) > 2:
        raise DomainViolation(f"z branch needs |x|, |y| <= 2, got ({float(x):.6g}, {float(y):.6g})")
    disc = 4 * V * V + (4 - x * x) * (4 - y * y)
    root = gmpy2.sqrt(disc) if isinstance(disc, type(gmpy2.mpfr(0))) else disc ** 0.5
    value = x * y / 2 + sign * root / 2
    z1 = y / 2 - sign * x * (4 - y * y) / (2 * root)
    z2 = x / 2 - sign * y * (4 - x * x) / (2 * root)
    return ZBranch(value, z1, z2)


class Evaluator:
    """Trace evaluation for a fixed frequency and coupling, backed by the kernel."""

    def __init__(self, cf: ContinuedFraction, params: SpectralParams):
        self.cf = cf
        self.params = params
        self.prec = params.precision_bits
        self.V = params.V
        self._qs: tuple[int, ...] = ()

    def quotients(self, n: int) -> tuple[int, ...]:
        if len(self._qs) < n:
            self._qs = self.cf.quotients(max(n, 2 * len(self._qs)) if self.cf.period else n)
        return self._qs[:n]

    def resolve(self, level: int, power: int) -> tuple[int, int]:
        """Rewrite p = -1 labels through t_(k,-1) = t_(k-1, a_k - 1)."""
        if power < -1 or level < 0:
            raise InvalidLabel(f"invalid trace label ({level}, {power})")
        while power == -1 and level >= 1:
            level, power = level - 1, self.cf.quotient(level) - 1
        return level, power

    def _qs_for(self, level: int, power: int):
        need = level if power >= 1 else max(level - 1, 0)
        return self.quotients(need)

    def trace(self, level: int, power: int, x):
        level, power = self.resolve(level, power)
        if power == -1:
            # level 0: tr M_{-1} M_0^{-1} = x + V
            with gmpy2.context(gmpy2.get_context(), precision=self.prec):
                xm = mp(x, self.prec)
                return xm + self.V, mp(1, self.prec)
        return kernel.trace(self._qs_for(level, power), level, power, mp(x, self.prec), self.V, self.prec)

    def trace_many(self, level: int, power: int, xs):
        level, power = self.resolve(level, power)
        if power == -1:
            return [self.trace(0, -1, x) for x in xs]
        xs = [mp(x, self.prec) for x in xs]
        return kernel.trace_many(self._qs_for(level, power), level, power, xs, self.V, self.prec)

    def solve(self, level: int, power: int, target, lo, hi, tol):
        """x in [lo, hi] with t_(level,power)(x) = target; needs a sign change."""
        level, power = self.resolve(level, power)
        if power == -1:
            return mp(target, self.prec) - self.V
        return kernel.solve(
            self._qs_for(level, power), level, power,
            mp(target, self.prec), mp(lo, self.prec), mp(hi, self.prec),
            self.V, self.prec, mp(tol, self.prec), 4 * self.prec + 200,
        )

    def triple(self, level: int, x):
        """(u, v, w) = (t_(k,0), t_(k+1,0), t_(k,1)) at ``x``."""
        u = self.trace(level, 0, x)[0]
        v = self.trace(level + 1, 0, x)[0]
        w = self.trace(level, 1, x)[0]
        return u, v, w


def trace_at(cf: ContinuedFraction, params: SpectralParams, k: int, p: int, x):
    """(t_(k,p)(x), d/dx t_(k,p)(x)) for k >= 0, p >= -1."""
    return Evaluator(cf, params).trace(k, p, x)
