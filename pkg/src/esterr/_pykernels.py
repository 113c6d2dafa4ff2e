"""Pure-Python (numpy) implementations of the hot kernels.

Every function here has a compiled twin in ``_ckernels.pyx`` with the same
signature and the same pivoting / tie-breaking rules, so both backends take
identical decisions and agree to rounding error.
"""
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MUL1 = 0xBF58476D1CE4E5B9
MIX_MUL2 = 0x94D049BB133111EB

# Status codes returned by nonneg_active_set.
AS_OPTIMAL = 0
AS_MAX_ITER = 1
AS_UNBOUNDED = 2
AS_RANK_DEFICIENT = 3


def splitmix64(x):
    """One SplitMix64 step: advance ``x`` by the golden gamma and finalize."""
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * MIX_MUL1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MUL2) & MASK64
    return z ^ (z >> 31)


def derive_seed(master, point, sample):
    return splitmix64(splitmix64(splitmix64(master) ^ point) ^ sample)


def derive_seeds(master, point, n):
    base = splitmix64(splitmix64(master) ^ point)
    return np.array([splitmix64(base ^ s) for s in range(n)], dtype=np.uint64)


def lu_factor(matrix, rel_tol):
    """Gaussian elimination with partial pivoting.

    Returns ``(lu, piv, k)``. ``piv[j]`` is the row swapped with row ``j``
    (LAPACK convention). ``k`` is the first column whose pivot magnitude is
    at or below ``rel_tol * max|matrix|``, or -1 when the matrix is
    numerically nonsingular. Elimination stops at column ``k``, so the
    leading ``k`` rows of ``lu`` still hold a valid partial factorization.
    """
    lu = np.array(matrix, dtype=np.float64, copy=True)
    n = lu.shape[0]
    piv = np.arange(n, dtype=np.intp)
    if n == 0:
        return lu, piv, -1
    tol = rel_tol * np.abs(lu).max()
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        piv[k] = p
        if abs(lu[p, k]) <= tol:
            return lu, piv, k
        if p != k:
            lu[[k, p]] = lu[[p, k]]
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, piv, -1


def lu_solve(lu, piv, rhs):
    x = np.array(rhs, dtype=np.float64, copy=True)
    n = x.shape[0]
    for k in range(n):
        p = piv[k]
        if p != k:
            x[k], x[p] = x[p], x[k]
    for k in range(n):
        x[k + 1:] -= lu[k + 1:, k] * x[k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - lu[k, k + 1:] @ x[k + 1:]) / lu[k, k]
    return x


def lu_null_vector(lu, k):
    """Null vector from a factorization that stopped at column ``k``.

    Sets ``x[k] = 1``, ``x[k+1:] = 0`` and back-substitutes the leading
    ``k`` rows of U, so column ``k`` is expressed through columns ``0..k-1``.
    """
    n = lu.shape[0]
    x = np.zeros(n)
    x[k] = 1.0
    for i in range(k - 1, -1, -1):
        x[i] = -(lu[i, i + 1:k + 1] @ x[i + 1:k + 1]) / lu[i, i]
    return x


def nonneg_active_set(hess, h, a, b, w, working, max_iter, piv_tol, step_tol, mu_tol):
    """Primal active-set loop for ``min 1/2 w'Gw + h'w, Aw = b, w >= 0``.

    ``w`` must be feasible and ``working`` (1 = clamped at zero) must leave
    the free columns of ``A`` with full row rank. Both are updated in place.
    Returns ``(lam, iterations, status)`` where ``lam`` are the equality
    multipliers in the convention ``G w + h + A' lam - mu = 0``.
    """
    n = w.shape[0]
    kc = a.shape[0]
    lam = np.zeros(kc)
    for it in range(max_iter):
        free = np.flatnonzero(working == 0)
        nf = free.shape[0]
        g = hess @ w + h
        m = np.zeros((nf + kc, nf + kc))
        m[:nf, :nf] = hess[np.ix_(free, free)]
        m[:nf, nf:] = a[:, free].T
        m[nf:, :nf] = a[:, free]
        rhs = np.zeros(nf + kc)
        rhs[:nf] = -g[free]
        lu, piv, ksing = lu_factor(m, piv_tol)
        if ksing >= 0:
            if ksing >= nf:
                return lam, it, AS_RANK_DEFICIENT
            # Zero-curvature direction inside the working face.
            p = lu_null_vector(lu, ksing)[:nf]
            if g[free] @ p > 0.0:
                p = -p
            if not np.any(p < 0.0):
                p = -p
                if not np.any(p < 0.0):
                    return lam, it, AS_UNBOUNDED
            alpha = np.inf
            block = -1
            for j in range(nf):
                if p[j] < 0.0:
                    ratio = -w[free[j]] / p[j]
                    if ratio < alpha:
                        alpha = ratio
                        block = j
            w[free] += alpha * p
            w[free[block]] = 0.0
            working[free[block]] = 1
            continue
        sol = lu_solve(lu, piv, rhs)
        p = sol[:nf]
        lam = sol[nf:]
        scale = max(1.0, float(np.abs(w).max()))
        if np.abs(p).max(initial=0.0) <= step_tol * scale:
            w[free] += p
            fixed = np.flatnonzero(working)
            if fixed.shape[0] == 0:
                return lam, it + 1, AS_OPTIMAL
            g = hess @ w + h
            mu = g[fixed] + a[:, fixed].T @ lam
            j = int(np.argmin(mu))
            if mu[j] >= -mu_tol * (1.0 + float(np.abs(g).max())):
                return lam, it + 1, AS_OPTIMAL
            working[fixed[j]] = 0
            continue
        alpha = 1.0
        block = -1
        for j in range(nf):
            if p[j] < 0.0:
                ratio = -w[free[j]] / p[j]
                if ratio < alpha:
                    alpha = ratio
                    block = j
        w[free] += alpha * p
        if block >= 0:
            w[free[block]] = 0.0
            working[free[block]] = 1
    return lam, max_iter, AS_MAX_ITER


def garch_ccc(z, omega, arch, garch):
    """GARCH(1,1) filter applied row-wise to standardized shocks ``z``.

    The recursion starts from the unconditional variance of each asset.
    """
    n, t_total = z.shape
    x = np.empty_like(z, dtype=np.float64)
    var = omega / (1.0 - arch - garch)
    for t in range(t_total):
        xt = np.sqrt(var) * z[:, t]
        x[:, t] = xt
        var = omega + arch * xt * xt + garch * var
    return x


_BLOCK = 4096


def gram_compensated(x, y=None):
    """``x @ y.T / T`` with compensated accumulation across time blocks.

    Within a block of at most 4096 columns products are reduced by numpy's
    pairwise summation; block partial sums are combined with Neumaier
    summation.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    yy = x if y is None else np.ascontiguousarray(y, dtype=np.float64)
    t_len = x.shape[1]
    total = np.zeros((x.shape[0], yy.shape[0]))
    comp = np.zeros_like(total)
    for start in range(0, t_len, _BLOCK):
        xb = x[:, start:start + _BLOCK]
        yb = yy[:, start:start + _BLOCK]
        part = np.empty_like(total)
        for i in range(xb.shape[0]):
            part[i] = (xb[i] * yb).sum(axis=1)
        s = total + part
        big = np.abs(total) >= np.abs(part)
        comp += np.where(big, (total - s) + part, (part - s) + total)
        total = s
    out = (total + comp) / t_len
    if y is None:
        out = 0.5 * (out + out.T)
    return out
