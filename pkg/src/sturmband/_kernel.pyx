# cython: language_level=3
"""MPFR trace kernel.

Same algorithms and operation order as ``_kernel_py``; values cross the
boundary as exact hexadecimal strings so results are bit-identical to the
pure-Python backend.
"""

from libc.stdlib cimport malloc, free

import gmpy2

from .errors import PrecisionExhausted

BACKEND = "mpfr"


cdef extern from "mpfr.h" nogil:
    ctypedef struct __mpfr_struct:
        pass
    ctypedef __mpfr_struct mpfr_t[1]
    ctypedef __mpfr_struct *mpfr_ptr
    ctypedef const __mpfr_struct *mpfr_srcptr
    ctypedef long mpfr_prec_t
    ctypedef enum mpfr_rnd_t:
        MPFR_RNDN
    void mpfr_init2(mpfr_ptr, mpfr_prec_t)
    void mpfr_clear(mpfr_ptr)
    int mpfr_set(mpfr_ptr, mpfr_srcptr, mpfr_rnd_t)
    int mpfr_set_si(mpfr_ptr, long, mpfr_rnd_t)
    int mpfr_set_str(mpfr_ptr, const char *, int, mpfr_rnd_t)
    int mpfr_add(mpfr_ptr, mpfr_srcptr, mpfr_srcptr, mpfr_rnd_t)
    int mpfr_sub(mpfr_ptr, mpfr_srcptr, mpfr_srcptr, mpfr_rnd_t)
    int mpfr_mul(mpfr_ptr, mpfr_srcptr, mpfr_srcptr, mpfr_rnd_t)
    int mpfr_div(mpfr_ptr, mpfr_srcptr, mpfr_srcptr, mpfr_rnd_t)
    int mpfr_mul_2ui(mpfr_ptr, mpfr_srcptr, unsigned long, mpfr_rnd_t)
    int mpfr_div_2ui(mpfr_ptr, mpfr_srcptr, unsigned long, mpfr_rnd_t)
    int mpfr_abs(mpfr_ptr, mpfr_srcptr, mpfr_rnd_t)
    int mpfr_cmp(mpfr_srcptr, mpfr_srcptr)
    int mpfr_sgn(mpfr_srcptr)
    int mpfr_zero_p(mpfr_srcptr)
    int mpfr_equal_p(mpfr_srcptr, mpfr_srcptr)
    void mpfr_swap(mpfr_ptr, mpfr_ptr)
    int mpfr_asprintf(char **, const char *, ...)
    void mpfr_free_str(char *)


# Work registers for one evaluation.
cdef struct Regs:
    mpfr_t u, v, w, du, dv, dw
    mpfr_t nv, ndv, nw, ndw
    mpfr_t sm, s0, s1, dsm, ds0, ds1, p2, p2d
    mpfr_t t1, t2, t3, t4
    mpfr_t t, dt


cdef void regs_init(Regs *r, mpfr_prec_t prec) nogil:
    mpfr_init2(r.u, prec); mpfr_init2(r.v, prec); mpfr_init2(r.w, prec)
    mpfr_init2(r.du, prec); mpfr_init2(r.dv, prec); mpfr_init2(r.dw, prec)
    mpfr_init2(r.nv, prec); mpfr_init2(r.ndv, prec); mpfr_init2(r.nw, prec); mpfr_init2(r.ndw, prec)
    mpfr_init2(r.sm, prec); mpfr_init2(r.s0, prec); mpfr_init2(r.s1, prec)
    mpfr_init2(r.dsm, prec); mpfr_init2(r.ds0, prec); mpfr_init2(r.ds1, prec)
    mpfr_init2(r.p2, prec); mpfr_init2(r.p2d, prec)
    mpfr_init2(r.t1, prec); mpfr_init2(r.t2, prec); mpfr_init2(r.t3, prec); mpfr_init2(r.t4, prec)
    mpfr_init2(r.t, prec); mpfr_init2(r.dt, prec)


cdef void regs_clear(Regs *r) nogil:
    mpfr_clear(r.u); mpfr_clear(r.v); mpfr_clear(r.w)
    mpfr_clear(r.du); mpfr_clear(r.dv); mpfr_clear(r.dw)
    mpfr_clear(r.nv); mpfr_clear(r.ndv); mpfr_clear(r.nw); mpfr_clear(r.ndw)
    mpfr_clear(r.sm); mpfr_clear(r.s0); mpfr_clear(r.s1)
    mpfr_clear(r.dsm); mpfr_clear(r.ds0); mpfr_clear(r.ds1)
    mpfr_clear(r.p2); mpfr_clear(r.p2d)
    mpfr_clear(r.t1); mpfr_clear(r.t2); mpfr_clear(r.t3); mpfr_clear(r.t4)
    mpfr_clear(r.t); mpfr_clear(r.dt)


cdef void cheb_steps(Regs *r, long n, mpfr_srcptr v) nogil:
    # (sm, s0) = (S_-1, S_0) advanced n steps; p2 keeps the value before sm.
    mpfr_set_si(r.sm, -1, MPFR_RNDN)
    mpfr_set_si(r.s0, 0, MPFR_RNDN)
    mpfr_set_si(r.dsm, 0, MPFR_RNDN)
    mpfr_set_si(r.ds0, 0, MPFR_RNDN)
    cdef long i
    for i in range(n):
        # s1 = v*s0 - sm
        mpfr_mul(r.t1, v, r.s0, MPFR_RNDN)
        mpfr_sub(r.s1, r.t1, r.sm, MPFR_RNDN)
        # ds1 = s0 + v*ds0 - dsm
        mpfr_mul(r.t1, v, r.ds0, MPFR_RNDN)
        mpfr_add(r.t2, r.s0, r.t1, MPFR_RNDN)
        mpfr_sub(r.ds1, r.t2, r.dsm, MPFR_RNDN)
        mpfr_set(r.p2, r.sm, MPFR_RNDN)
        mpfr_set(r.p2d, r.dsm, MPFR_RNDN)
        mpfr_set(r.sm, r.s0, MPFR_RNDN)
        mpfr_set(r.dsm, r.ds0, MPFR_RNDN)
        mpfr_set(r.s0, r.s1, MPFR_RNDN)
        mpfr_set(r.ds0, r.ds1, MPFR_RNDN)


cdef void combine(Regs *r, mpfr_ptr out, mpfr_ptr dout,
                  mpfr_srcptr sa1, mpfr_srcptr sa, mpfr_srcptr dsa1, mpfr_srcptr dsa) nogil:
    # out = w*sa - u*sa1
    mpfr_mul(r.t1, r.w, sa, MPFR_RNDN)
    mpfr_mul(r.t2, r.u, sa1, MPFR_RNDN)
    mpfr_sub(out, r.t1, r.t2, MPFR_RNDN)
    # dout = dw*sa + w*(dsa*dv) - (du*sa1 + u*(dsa1*dv))
    mpfr_mul(r.t1, r.dw, sa, MPFR_RNDN)
    mpfr_mul(r.t2, dsa, r.dv, MPFR_RNDN)
    mpfr_mul(r.t2, r.w, r.t2, MPFR_RNDN)
    mpfr_add(r.t1, r.t1, r.t2, MPFR_RNDN)
    mpfr_mul(r.t3, r.du, sa1, MPFR_RNDN)
    mpfr_mul(r.t4, dsa1, r.dv, MPFR_RNDN)
    mpfr_mul(r.t4, r.u, r.t4, MPFR_RNDN)
    mpfr_add(r.t3, r.t3, r.t4, MPFR_RNDN)
    mpfr_sub(dout, r.t1, r.t3, MPFR_RNDN)


cdef void run_state(Regs *r, const long *qs, long nsteps, mpfr_srcptr x, mpfr_srcptr V) nogil:
    mpfr_set_si(r.u, 2, MPFR_RNDN)
    mpfr_set(r.v, x, MPFR_RNDN)
    mpfr_sub(r.w, x, V, MPFR_RNDN)
    mpfr_set_si(r.du, 0, MPFR_RNDN)
    mpfr_set_si(r.dv, 1, MPFR_RNDN)
    mpfr_set_si(r.dw, 1, MPFR_RNDN)
    cdef long i, a
    for i in range(nsteps):
        a = qs[i]
        if a == 1:
            mpfr_set(r.nv, r.w, MPFR_RNDN)
            mpfr_set(r.ndv, r.dw, MPFR_RNDN)
            # nw = w*v - u
            mpfr_mul(r.t1, r.w, r.v, MPFR_RNDN)
            mpfr_sub(r.nw, r.t1, r.u, MPFR_RNDN)
            # ndw = dw*v + w*dv - du
            mpfr_mul(r.t1, r.dw, r.v, MPFR_RNDN)
            mpfr_mul(r.t2, r.w, r.dv, MPFR_RNDN)
            mpfr_add(r.t1, r.t1, r.t2, MPFR_RNDN)
            mpfr_sub(r.ndw, r.t1, r.du, MPFR_RNDN)
        else:
            # after a+1 steps: p2 = S_{a-1}, sm = S_a, s0 = S_{a+1}
            cheb_steps(r, a + 1, r.v)
            combine(r, r.nv, r.ndv, r.p2, r.sm, r.p2d, r.dsm)
            combine(r, r.nw, r.ndw, r.sm, r.s0, r.dsm, r.ds0)
        mpfr_swap(r.u, r.v)
        mpfr_swap(r.du, r.dv)
        mpfr_swap(r.v, r.nv)
        mpfr_swap(r.dv, r.ndv)
        mpfr_swap(r.w, r.nw)
        mpfr_swap(r.dw, r.ndw)


cdef void evaluate(Regs *r, const long *qs, long level, long power, mpfr_srcptr x, mpfr_srcptr V) nogil:
    """Leaves t_(level,power)(x) in r.t and its derivative in r.dt."""
    if power == 0:
        if level == 0:
            mpfr_set_si(r.t, 2, MPFR_RNDN)
            mpfr_set_si(r.dt, 0, MPFR_RNDN)
            return
        run_state(r, qs, level - 1, x, V)
        mpfr_set(r.t, r.v, MPFR_RNDN)
        mpfr_set(r.dt, r.dv, MPFR_RNDN)
        return
    run_state(r, qs, level, x, V)
    if power == 1:
        mpfr_set(r.t, r.w, MPFR_RNDN)
        mpfr_set(r.dt, r.dw, MPFR_RNDN)
        return
    # after p steps: sm = S_{p-1}, s0 = S_p
    cheb_steps(r, power, r.v)
    combine(r, r.t, r.dt, r.sm, r.s0, r.dsm, r.ds0)


cdef class _Buf:
    """Owns a C copy of the quotient list."""
    cdef long *qs
    cdef long n

    def __cinit__(self, qs):
        self.n = len(qs)
        self.qs = <long *> malloc(max(self.n, 1) * sizeof(long))
        if self.qs == NULL:
            raise MemoryError()
        for i in range(self.n):
            self.qs[i] = qs[i]

    def __dealloc__(self):
        if self.qs != NULL:
            free(self.qs)


cdef void load(mpfr_ptr dst, obj) except *:
    cdef bytes s = format(obj, "a").encode("ascii")
    if mpfr_set_str(dst, s, 16, MPFR_RNDN) != 0:
        raise ValueError(f"cannot load {obj!r}")


cdef object emit(mpfr_srcptr src, long prec):
    cdef char *buf = NULL
    mpfr_asprintf(&buf, "%Ra", src)
    try:
        s = (<bytes> buf).decode("ascii")
    finally:
        mpfr_free_str(buf)
    return gmpy2.mpfr(s, prec, 16)


def _check_level(qs, level, power):
    need = level if power >= 1 else max(level - 1, 0)
    if len(qs) < need:
        raise ValueError(f"need {need} quotients, got {len(qs)}")
    if power < 0:
        raise ValueError("kernel handles power >= 0 only")


def trace(qs, long level, long power, x, V, long prec):
    """Return (t_(level,power)(x), derivative) for power >= 0."""
    _check_level(qs, level, power)
    cdef _Buf buf = _Buf(qs)
    cdef Regs r
    cdef mpfr_t xm, Vm
    regs_init(&r, prec)
    mpfr_init2(xm, prec)
    mpfr_init2(Vm, prec)
    try:
        load(xm, x)
        load(Vm, V)
        with nogil:
            evaluate(&r, buf.qs, level, power, xm, Vm)
        return emit(r.t, prec), emit(r.dt, prec)
    finally:
        mpfr_clear(xm)
        mpfr_clear(Vm)
        regs_clear(&r)


def trace_many(qs, long level, long power, xs, V, long prec):
    _check_level(qs, level, power)
    cdef _Buf buf = _Buf(qs)
    cdef Regs r
    cdef mpfr_t xm, Vm
    regs_init(&r, prec)
    mpfr_init2(xm, prec)
    mpfr_init2(Vm, prec)
    out = []
    try:
        load(Vm, V)
        for x in xs:
            load(xm, x)
            with nogil:
                evaluate(&r, buf.qs, level, power, xm, Vm)
            out.append((emit(r.t, prec), emit(r.dt, prec)))
        return out
    finally:
        mpfr_clear(xm)
        mpfr_clear(Vm)
        regs_clear(&r)


cdef int solve_c(Regs *r, const long *qs, long level, long power,
                 mpfr_srcptr target, mpfr_ptr a, mpfr_ptr b, mpfr_srcptr V,
                 mpfr_srcptr tol, long maxit, mpfr_ptr x, mpfr_prec_t prec) nogil:
    """Safeguarded Newton; result in x.  Returns 0 on success, 1 if maxit hit."""
    cdef mpfr_t f, fa, xn, step, step_old, tmp, tmp2
    cdef int status = 1
    cdef long it
    cdef bint use_newton
    mpfr_init2(f, prec); mpfr_init2(fa, prec); mpfr_init2(xn, prec)
    mpfr_init2(step, prec); mpfr_init2(step_old, prec); mpfr_init2(tmp, prec); mpfr_init2(tmp2, prec)

    evaluate(r, qs, level, power, a, V)
    mpfr_sub(fa, r.t, target, MPFR_RNDN)
    evaluate(r, qs, level, power, b, V)
    mpfr_sub(f, r.t, target, MPFR_RNDN)
    if mpfr_zero_p(fa):
        mpfr_set(x, a, MPFR_RNDN)
        status = 0
    elif mpfr_zero_p(f):
        mpfr_set(x, b, MPFR_RNDN)
        status = 0
    else:
        if mpfr_sgn(fa) > 0:
            mpfr_swap(a, b)
        mpfr_add(x, a, b, MPFR_RNDN)
        mpfr_div_2ui(x, x, 1, MPFR_RNDN)
        mpfr_sub(step_old, b, a, MPFR_RNDN)
        mpfr_abs(step_old, step_old, MPFR_RNDN)
        mpfr_set(step, step_old, MPFR_RNDN)
        for it in range(maxit):
            evaluate(r, qs, level, power, x, V)
            mpfr_sub(f, r.t, target, MPFR_RNDN)
            if mpfr_zero_p(f):
                status = 0
                break
            if mpfr_sgn(f) < 0:
                mpfr_set(a, x, MPFR_RNDN)
            else:
                mpfr_set(b, x, MPFR_RNDN)
            mpfr_sub(tmp, b, a, MPFR_RNDN)
            mpfr_abs(tmp, tmp, MPFR_RNDN)
            if mpfr_cmp(tmp, tol) < 0:
                status = 0
                break
            use_newton = not mpfr_zero_p(r.dt)
            if use_newton:
                mpfr_div(tmp, f, r.dt, MPFR_RNDN)
                mpfr_sub(xn, x, tmp, MPFR_RNDN)
                # inside: (xn - a) * (xn - b) < 0
                mpfr_sub(tmp, xn, a, MPFR_RNDN)
                mpfr_sub(tmp2, xn, b, MPFR_RNDN)
                mpfr_mul(tmp, tmp, tmp2, MPFR_RNDN)
                use_newton = mpfr_sgn(tmp) < 0
                if use_newton:
                    # abs(2*f) < abs(step_old*dt)
                    mpfr_mul_2ui(tmp, f, 1, MPFR_RNDN)
                    mpfr_abs(tmp, tmp, MPFR_RNDN)
                    mpfr_mul(tmp2, step_old, r.dt, MPFR_RNDN)
                    mpfr_abs(tmp2, tmp2, MPFR_RNDN)
                    use_newton = mpfr_cmp(tmp, tmp2) < 0
            mpfr_set(step_old, step, MPFR_RNDN)
            if not use_newton:
                mpfr_add(xn, a, b, MPFR_RNDN)
                mpfr_div_2ui(xn, xn, 1, MPFR_RNDN)
            mpfr_sub(step, xn, x, MPFR_RNDN)
            mpfr_abs(step, step, MPFR_RNDN)
            if mpfr_cmp(step, tol) < 0:
                mpfr_set(x, xn, MPFR_RNDN)
                status = 0
                break
            if mpfr_equal_p(xn, x):
                status = 0
                break
            mpfr_set(x, xn, MPFR_RNDN)

    mpfr_clear(f); mpfr_clear(fa); mpfr_clear(xn)
    mpfr_clear(step); mpfr_clear(step_old); mpfr_clear(tmp); mpfr_clear(tmp2)
    return status


def solve(qs, long level, long power, target, lo, hi, V, long prec, tol, long maxit):
    """Root of t_(level,power)(x) = target in [lo, hi] by safeguarded Newton."""
    _check_level(qs, level, power)
    cdef _Buf buf = _Buf(qs)
    cdef Regs r
    cdef mpfr_t tm, am, bm, Vm, tolm, xm
    cdef int status
    regs_init(&r, prec)
    mpfr_init2(tm, prec); mpfr_init2(am, prec); mpfr_init2(bm, prec)
    mpfr_init2(Vm, prec); mpfr_init2(tolm, prec); mpfr_init2(xm, prec)
    try:
        load(tm, target)
        load(am, lo)
        load(bm, hi)
        load(Vm, V)
        load(tolm, tol)
        with nogil:
            status = solve_c(&r, buf.qs, level, power, tm, am, bm, Vm, tolm, maxit, xm, prec)
        if status != 0:
            raise PrecisionExhausted(
                f"root solve did not reach tolerance {float(tol):.3g} in {maxit} iterations")
        return emit(xm, prec)
    finally:
        mpfr_clear(tm); mpfr_clear(am); mpfr_clear(bm)
        mpfr_clear(Vm); mpfr_clear(tolm); mpfr_clear(xm)
        regs_clear(&r)
