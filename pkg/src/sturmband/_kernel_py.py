"""Pure-Python trace kernel on gmpy2.

Mirrors ``_kernel.pyx`` operation for operation, so both backends round
identically (MPFR, round-to-nearest) and return bit-identical values.
Inputs and outputs are ``gmpy2.mpfr``; callers pass quotients
``(a_1, ..., a_level)``.
"""

import gmpy2
from gmpy2 import mpfr

from .errors import PrecisionExhausted

BACKEND = "python"


def _state(qs, nsteps, x, V):
    """Trace triple (u, v, w) and x-derivatives after ``nsteps`` renormalisations."""
    u = mpfr(2)
    v = mpfr(x)
    w = x - V
    du = mpfr(0)
    dv = mpfr(1)
    dw = mpfr(1)
    for i in range(nsteps):
        a = qs[i]
        if a == 1:
            nv = w
            ndv = dw
            nw = w * v - u
            ndw = dw * v + w * dv - du
        else:
            sa1, sa, sb, dsa1, dsa, dsb = _cheb3(a, v)
            nv = w * sa - u * sa1
            ndv = dw * sa + w * (dsa * dv) - (du * sa1 + u * (dsa1 * dv))
            nw = w * sb - u * sa
            ndw = dw * sb + w * (dsb * dv) - (du * sa + u * (dsa * dv))
        u, du = v, dv
        v, dv = nv, ndv
        w, dw = nw, ndw
    return u, v, w, du, dv, dw


def _cheb3(a, v):
    """S_{a-1}, S_a, S_{a+1} at v and their derivatives (a >= 1)."""
    sm = mpfr(-1)
    s0 = mpfr(0)
    dsm = mpfr(0)
    ds0 = mpfr(0)
    s1 = ds1 = None
    # a + 1 steps take (S_-1, S_0) to (S_a, S_a+1)
    prev2 = prev2d = None
    for _ in range(a + 1):
        s1 = v * s0 - sm
        ds1 = s0 + v * ds0 - dsm
        prev2, prev2d = sm, dsm
        sm, dsm = s0, ds0
        s0, ds0 = s1, ds1
    # after the loop: prev2 = S_{a-1}, sm = S_a, s0 = S_{a+1}
    return prev2, sm, s0, prev2d, dsm, ds0


def _cheb2(p, v):
    """S_{p-1}, S_p at v and derivatives (p >= 1)."""
    sm = mpfr(-1)
    s0 = mpfr(0)
    dsm = mpfr(0)
    ds0 = mpfr(0)
    for _ in range(p):
        s1 = v * s0 - sm
        ds1 = s0 + v * ds0 - dsm
        sm, dsm = s0, ds0
        s0, ds0 = s1, ds1
    return sm, s0, dsm, ds0


def _eval(qs, level, power, x, V):
    if power == 0:
        if level == 0:
            return mpfr(2), mpfr(0)
        _, v, _, _, dv, _ = _state(qs, level - 1, x, V)
        return v, dv
    u, v, w, du, dv, dw = _state(qs, level, x, V)
    if power == 1:
        return w, dw
    sp1, sp, dsp1, dsp = _cheb2(power, v)
    t = w * sp - u * sp1
    dt = dw * sp + w * (dsp * dv) - (du * sp1 + u * (dsp1 * dv))
    return t, dt


def trace(qs, level, power, x, V, prec):
    """Return (t_(level,power)(x), derivative) for power >= 0."""
    with gmpy2.context(gmpy2.get_context(), precision=prec):
        return _eval(qs, level, power, mpfr(x, prec), mpfr(V, prec))


def trace_many(qs, level, power, xs, V, prec):
    with gmpy2.context(gmpy2.get_context(), precision=prec):
        Vm = mpfr(V, prec)
        return [_eval(qs, level, power, mpfr(x, prec), Vm) for x in xs]


def solve(qs, level, power, target, lo, hi, V, prec, tol, maxit):
    """Root of t_(level,power)(x) = target in [lo, hi] by safeguarded Newton.

    The caller guarantees a sign change of ``t - target`` over the bracket.
    Newton steps that leave the bracket, or fail to halve the previous step,
    are replaced by bisection.  Returns the final iterate.
    """
    with gmpy2.context(gmpy2.get_context(), precision=prec):
        V = mpfr(V, prec)
        target = mpfr(target, prec)
        tol = mpfr(tol, prec)
        a = mpfr(lo, prec)
        b = mpfr(hi, prec)
        fa = _eval(qs, level, power, a, V)[0] - target
        fb = _eval(qs, level, power, b, V)[0] - target
        if fa == 0:
            return a
        if fb == 0:
            return b
        # orient so that f(a) < 0 < f(b)
        if fa > 0:
            a, b = b, a
        x = (a + b) / 2
        step_old = abs(b - a)
        step = step_old
        for _ in range(maxit):
            t, dt = _eval(qs, level, power, x, V)
            f = t - target
            if f == 0:
                return x
            if f < 0:
                a = x
            else:
                b = x
            if abs(b - a) < tol:
                return x
            use_newton = dt != 0
            if use_newton:
                xn = x - f / dt
                inside = (xn - a) * (xn - b) < 0
                use_newton = inside and abs(2 * f) < abs(step_old * dt)
            step_old = step
            if use_newton:
                step = abs(xn - x)
            else:
                xn = (a + b) / 2
                step = abs(xn - x)
            if step < tol:
                return xn
            if xn == x:
                return x
            x = xn
        raise PrecisionExhausted(f"root solve did not reach tolerance {float(tol):.3g} in {maxit} iterations")
