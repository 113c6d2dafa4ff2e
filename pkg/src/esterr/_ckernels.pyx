# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Semantics mirror ``esterr._pykernels`` exactly."""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt, INFINITY
from libc.stdint cimport uint64_t

cnp.import_array()

cdef int AS_OPTIMAL = 0
cdef int AS_MAX_ITER = 1
cdef int AS_UNBOUNDED = 2
cdef int AS_RANK_DEFICIENT = 3


cdef inline uint64_t _mix(uint64_t x) nogil:
    cdef uint64_t z = x + <uint64_t>0x9E3779B97F4A7C15ULL
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


def splitmix64(uint64_t x):
    return _mix(x)


def derive_seed(uint64_t master, uint64_t point, uint64_t sample):
    return _mix(_mix(_mix(master) ^ point) ^ sample)


def derive_seeds(uint64_t master, uint64_t point, Py_ssize_t n):
    out = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef uint64_t base = _mix(_mix(master) ^ point)
    cdef Py_ssize_t s
    for s in range(n):
        o[s] = _mix(base ^ <uint64_t>s)
    return out


cdef Py_ssize_t _lu_inplace(double[:, ::1] m, Py_ssize_t n, Py_ssize_t[::1] piv,
                            double rel_tol) nogil:
    cdef Py_ssize_t i, j, k, p
    cdef double amax = 0.0, v, tol, pk, f
    for i in range(n):
        for j in range(n):
            v = fabs(m[i, j])
            if v > amax:
                amax = v
    tol = rel_tol * amax
    for k in range(n):
        p = k
        v = fabs(m[k, k])
        for i in range(k + 1, n):
            if fabs(m[i, k]) > v:
                v = fabs(m[i, k])
                p = i
        piv[k] = p
        if v <= tol:
            return k
        if p != k:
            for j in range(n):
                f = m[k, j]
                m[k, j] = m[p, j]
                m[p, j] = f
        pk = m[k, k]
        for i in range(k + 1, n):
            m[i, k] /= pk
        for i in range(k + 1, n):
            f = m[i, k]
            if f != 0.0:
                for j in range(k + 1, n):
                    m[i, j] -= f * m[k, j]
    return -1


cdef void _lu_solve_inplace(double[:, ::1] lu, Py_ssize_t n, Py_ssize_t[::1] piv,
                            double[::1] x) nogil:
    cdef Py_ssize_t i, k, p
    cdef double f, s
    for k in range(n):
        p = piv[k]
        if p != k:
            f = x[k]
            x[k] = x[p]
            x[p] = f
    for k in range(n):
        f = x[k]
        for i in range(k + 1, n):
            x[i] -= lu[i, k] * f
    for k in range(n - 1, -1, -1):
        s = x[k]
        for i in range(k + 1, n):
            s -= lu[k, i] * x[i]
        x[k] = s / lu[k, k]


cdef void _null_vector(double[:, ::1] lu, Py_ssize_t n, Py_ssize_t k, double[::1] x) nogil:
    cdef Py_ssize_t i, j
    cdef double s
    for i in range(n):
        x[i] = 0.0
    x[k] = 1.0
    for i in range(k - 1, -1, -1):
        s = 0.0
        for j in range(i + 1, k + 1):
            s += lu[i, j] * x[j]
        x[i] = -s / lu[i, i]


def lu_factor(matrix, double rel_tol):
    lu = np.array(matrix, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = lu.shape[0]
    piv = np.arange(n, dtype=np.intp)
    cdef double[:, ::1] m = lu
    cdef Py_ssize_t[::1] pv = piv
    cdef Py_ssize_t k
    if n == 0:
        return lu, piv, -1
    with nogil:
        k = _lu_inplace(m, n, pv, rel_tol)
    return lu, piv, k


def lu_solve(lu, piv, rhs):
    cdef double[:, ::1] m = np.ascontiguousarray(lu, dtype=np.float64)
    cdef Py_ssize_t[::1] pv = np.ascontiguousarray(piv, dtype=np.intp)
    x = np.array(rhs, dtype=np.float64, copy=True)
    cdef double[::1] xv = x
    cdef Py_ssize_t n = x.shape[0]
    with nogil:
        _lu_solve_inplace(m, n, pv, xv)
    return x


def lu_null_vector(lu, Py_ssize_t k):
    cdef double[:, ::1] m = np.ascontiguousarray(lu, dtype=np.float64)
    cdef Py_ssize_t n = m.shape[0]
    x = np.zeros(n)
    cdef double[::1] xv = x
    _null_vector(m, n, k, xv)
    return x


def nonneg_active_set(hess, h, a, b, w, working, Py_ssize_t max_iter,
                      double piv_tol, double step_tol, double mu_tol):
    cdef double[:, ::1] G = np.ascontiguousarray(hess, dtype=np.float64)
    cdef double[::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef double[:, ::1] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] wv = w
    cdef cnp.int8_t[::1] work = working
    cdef Py_ssize_t n = wv.shape[0]
    cdef Py_ssize_t kc = A.shape[0]
    cdef Py_ssize_t dim = n + kc

    kkt_buf = np.zeros((dim, dim))
    cdef double[:, ::1] M = kkt_buf
    cdef Py_ssize_t[::1] piv = np.zeros(dim, dtype=np.intp)
    cdef double[::1] sol = np.zeros(dim)
    cdef double[::1] g = np.zeros(n)
    cdef Py_ssize_t[::1] free = np.zeros(n, dtype=np.intp)
    lam_arr = np.zeros(kc)
    cdef double[::1] lam = lam_arr

    cdef Py_ssize_t it, i, j, r, c, nf, msize, ksing, block, jmin
    cdef double s, alpha, ratio, slope, pmax, wmax, gmax, mu, mumin
    cdef bint has_neg
    cdef int status = AS_MAX_ITER
    cdef Py_ssize_t iters = max_iter

    with nogil:
        for it in range(max_iter):
            nf = 0
            for i in range(n):
                if work[i] == 0:
                    free[nf] = i
                    nf += 1
            gmax = 0.0
            for i in range(n):
                s = hv[i]
                for j in range(n):
                    s += G[i, j] * wv[j]
                g[i] = s
                if fabs(s) > gmax:
                    gmax = fabs(s)
            msize = nf + kc
            for r in range(nf):
                for c in range(nf):
                    M[r, c] = G[free[r], free[c]]
                for c in range(kc):
                    M[r, nf + c] = A[c, free[r]]
                    M[nf + c, r] = A[c, free[r]]
            for r in range(kc):
                for c in range(kc):
                    M[nf + r, nf + c] = 0.0
            for r in range(nf):
                sol[r] = -g[free[r]]
            for r in range(kc):
                sol[nf + r] = 0.0
            ksing = _lu_inplace(M, msize, piv, piv_tol)
            if ksing >= 0:
                if ksing >= nf:
                    status = AS_RANK_DEFICIENT
                    iters = it
                    break
                _null_vector(M, msize, ksing, sol)
                slope = 0.0
                for r in range(nf):
                    slope += g[free[r]] * sol[r]
                if slope > 0.0:
                    for r in range(nf):
                        sol[r] = -sol[r]
                has_neg = False
                for r in range(nf):
                    if sol[r] < 0.0:
                        has_neg = True
                if not has_neg:
                    for r in range(nf):
                        sol[r] = -sol[r]
                    for r in range(nf):
                        if sol[r] < 0.0:
                            has_neg = True
                    if not has_neg:
                        status = AS_UNBOUNDED
                        iters = it
                        break
                alpha = INFINITY
                block = -1
                for r in range(nf):
                    if sol[r] < 0.0:
                        ratio = -wv[free[r]] / sol[r]
                        if ratio < alpha:
                            alpha = ratio
                            block = r
                for r in range(nf):
                    wv[free[r]] += alpha * sol[r]
                wv[free[block]] = 0.0
                work[free[block]] = 1
                continue
            _lu_solve_inplace(M, msize, piv, sol)
            for r in range(kc):
                lam[r] = sol[nf + r]
            pmax = 0.0
            for r in range(nf):
                if fabs(sol[r]) > pmax:
                    pmax = fabs(sol[r])
            wmax = 1.0
            for i in range(n):
                if fabs(wv[i]) > wmax:
                    wmax = fabs(wv[i])
            if pmax <= step_tol * wmax:
                for r in range(nf):
                    wv[free[r]] += sol[r]
                if nf == n:
                    status = AS_OPTIMAL
                    iters = it + 1
                    break
                gmax = 0.0
                for i in range(n):
                    s = hv[i]
                    for j in range(n):
                        s += G[i, j] * wv[j]
                    g[i] = s
                    if fabs(s) > gmax:
                        gmax = fabs(s)
                jmin = -1
                mumin = INFINITY
                for i in range(n):
                    if work[i] != 0:
                        mu = g[i]
                        for c in range(kc):
                            mu += A[c, i] * lam[c]
                        if mu < mumin:
                            mumin = mu
                            jmin = i
                if mumin >= -mu_tol * (1.0 + gmax):
                    status = AS_OPTIMAL
                    iters = it + 1
                    break
                work[jmin] = 0
                continue
            alpha = 1.0
            block = -1
            for r in range(nf):
                if sol[r] < 0.0:
                    ratio = -wv[free[r]] / sol[r]
                    if ratio < alpha:
                        alpha = ratio
                        block = r
            for r in range(nf):
                wv[free[r]] += alpha * sol[r]
            if block >= 0:
                wv[free[block]] = 0.0
                work[free[block]] = 1
    return lam_arr, iters, status


def garch_ccc(z, omega, arch, garch):
    cdef double[:, ::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[::1] om = np.ascontiguousarray(omega, dtype=np.float64)
    cdef double[::1] aa = np.ascontiguousarray(arch, dtype=np.float64)
    cdef double[::1] bb = np.ascontiguousarray(garch, dtype=np.float64)
    cdef Py_ssize_t n = zv.shape[0], T = zv.shape[1], i, t
    out = np.empty((n, T))
    cdef double[:, ::1] x = out
    cdef double var, xt
    with nogil:
        for i in range(n):
            var = om[i] / (1.0 - aa[i] - bb[i])
            for t in range(T):
                xt = sqrt(var) * zv[i, t]
                x[i, t] = xt
                var = om[i] + aa[i] * xt * xt + bb[i] * var
    return out


def gram_compensated(x, y=None):
    cdef bint sym = y is None
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] yv = xv if sym else np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], m = yv.shape[0], T = xv.shape[1]
    cdef Py_ssize_t i, j, t, j0
    out = np.zeros((n, m))
    cdef double[:, ::1] o = out
    cdef double s, comp, term, tmp
    with nogil:
        for i in range(n):
            j0 = i if sym else 0
            for j in range(j0, m):
                s = 0.0
                comp = 0.0
                for t in range(T):
                    term = xv[i, t] * yv[j, t]
                    tmp = s + term
                    if fabs(s) >= fabs(term):
                        comp += (s - tmp) + term
                    else:
                        comp += (term - tmp) + s
                    s = tmp
                o[i, j] = (s + comp) / T
                if sym:
                    o[j, i] = o[i, j]
    return out
