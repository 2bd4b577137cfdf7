"""Dense kernels for the small symmetric matrices this package produces.

Everything here is 2x2 to 4x4: Gram matrices of the linearized regressions,
second-moment pencils, Gauss-Newton normal matrices, and Fisher information.
Eigenvalues come from a closed form (2x2) or cyclic Jacobi sweeps with a
deterministic rotation order, so results are bit-stable for fixed inputs.

The generalized eigenvalue routine deliberately avoids forming Q^{-1}:
zero-noise data makes Q exactly singular, and the pencil reduction through a
Cholesky factor of S returns the correct +infinity sentinel in that limit
instead of blowing up.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import IllConditionedError, InvalidScatterError

MAX_SIZE = 4
COND_LIMIT = 1e12
# Smallest pencil eigenvalue below this (relative to the largest) means
# "Q singular to working precision".
PENCIL_SINGULAR_REL = 1e-12
_JACOBI_REL_TOL = 1e-14
_MAX_SWEEPS = 100


def _as_symmetric(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if a.shape[0] > MAX_SIZE:
        raise ValueError(f"{name} exceeds the {MAX_SIZE}x{MAX_SIZE} kernel size")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    scale = np.abs(a).max()
    if np.abs(a - a.T).max() > 1e-8 * max(1.0, scale):
        raise ValueError(f"{name} is not symmetric")
    return 0.5 * (a + a.T)


def _eig2(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form eigendecomposition of a symmetric 2x2 matrix."""
    p, q, r = a[0, 0], a[0, 1], a[1, 1]
    half_sum = 0.5 * (p + r)
    half_diff = 0.5 * (p - r)
    rad = math.hypot(half_diff, q)
    # The root nearer zero suffers cancellation in half_sum -/+ rad; recover
    # it from the determinant (the product of the roots) instead.
    if half_sum >= 0.0:
        big = half_sum + rad
    else:
        big = half_sum - rad
    if big == 0.0:
        w = np.array([0.0, 0.0])
    else:
        det = p * r - q * q
        small = det / big
        w = np.array(sorted([small, big]))
    if abs(q) <= 1e-30 * max(1.0, abs(p), abs(r)):
        if p <= r:
            return w, np.eye(2)
        return w, np.array([[0.0, 1.0], [1.0, 0.0]])
    # Eigenvector for the larger eigenvalue: (p - w1) x + q y = 0.
    v1 = np.array([q, w[1] - p])
    v1 /= math.hypot(v1[0], v1[1])
    v = np.column_stack([np.array([-v1[1], v1[0]]), v1])
    return w, v


def _jacobi(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition for 3x3 / 4x4 symmetric matrices."""
    a = a.copy()
    m = a.shape[0]
    v = np.eye(m)
    norm = math.sqrt(float((a * a).sum()))
    if norm == 0.0:
        return np.zeros(m), v
    for _ in range(_MAX_SWEEPS):
        off = 0.0
        for p in range(m - 1):
            for q in range(p + 1, m):
                off += 2.0 * a[p, q] * a[p, q]
        if math.sqrt(off) <= _JACOBI_REL_TOL * norm:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                a[:, [p, q]] = a[:, [p, q]] @ rot
                a[[p, q], :] = rot.T @ a[[p, q], :]
                a[p, q] = 0.0
                a[q, p] = 0.0
                v[:, [p, q]] = v[:, [p, q]] @ rot
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def sym_eig(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix."""
    a = _as_symmetric(a, "matrix")
    m = a.shape[0]
    if m == 1:
        return a[0].copy(), np.eye(1)
    if m == 2:
        return _eig2(a)
    return _jacobi(a)


def sym_eigvals(a) -> np.ndarray:
    """Eigenvalues only, ascending."""
    return sym_eig(a)[0]


def cond_sym(a) -> float:
    """Condition estimate: ratio of extreme absolute eigenvalues."""
    w = np.abs(sym_eigvals(a))
    wmax = w.max()
    wmin = w.min()
    if wmax == 0.0:
        return math.inf
    return math.inf if wmin == 0.0 else float(wmax / wmin)


def solve_spd(a, b) -> np.ndarray:
    """Solve A x = b for symmetric positive definite A (size <= 4).

    Raises :class:`IllConditionedError` carrying the condition estimate when
    A is singular, indefinite, or has condition number above ``COND_LIMIT``.
    One step of iterative refinement pins the residual to the float64 floor,
    about eps * ||A|| * ||x||; relative to ||b|| that is eps for consistent
    systems with moderate solutions and eps * cond(A) in the worst case (no
    double-precision solver can do better).
    """
    w, v = sym_eig(a)
    b = np.asarray(b, dtype=float)
    wmin, wmax = w[0], w[-1]
    if wmax <= 0.0 or wmin <= 0.0:
        raise IllConditionedError(
            "matrix is singular or not positive definite", cond=math.inf
        )
    cond = float(wmax / wmin)
    if cond > COND_LIMIT:
        raise IllConditionedError(
            f"condition number {cond:.3e} exceeds limit {COND_LIMIT:.0e}", cond=cond
        )
    a = 0.5 * (np.asarray(a, dtype=float) + np.asarray(a, dtype=float).T)
    x = v @ ((v.T @ b) / w)
    x = x + v @ ((v.T @ (b - a @ x)) / w)
    return x


def _cholesky_lower(s: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a positive definite matrix, or InvalidScatterError."""
    m = s.shape[0]
    low = np.zeros_like(s)
    for j in range(m):
        d = s[j, j] - np.dot(low[j, :j], low[j, :j])
        if d <= 0.0 or not math.isfinite(d):
            raise InvalidScatterError("scatter matrix is not positive definite")
        low[j, j] = math.sqrt(d)
        for i in range(j + 1, m):
            low[i, j] = (s[i, j] - np.dot(low[i, :j], low[j, :j])) / low[j, j]
    return low


def _forward_solve(low: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve L X = RHS for lower-triangular L; RHS may have multiple columns."""
    m = low.shape[0]
    x = np.array(rhs, dtype=float, copy=True)
    for i in range(m):
        x[i] -= low[i, :i] @ x[:i]
        x[i] /= low[i, i]
    return x


def max_gen_eigenvalue(q, s) -> float:
    """Largest eigenvalue of Q^{-1} S for symmetric Q (PSD) and PD S.

    Computed as 1 / mu_min where mu are the eigenvalues of L^{-1} Q L^{-T}
    with S = L L^T, i.e. the pencil Q x = mu S x.  Returns ``math.inf`` when
    Q is singular to working precision (mu_min below
    ``PENCIL_SINGULAR_REL`` relative to mu_max), which downstream variance
    estimators map to a zero noise-variance estimate.
    """
    q = _as_symmetric(q, "Q")
    s = _as_symmetric(s, "S")
    if q.shape != s.shape:
        raise ValueError("Q and S must have the same shape")
    low = _cholesky_lower(s)
    half = _forward_solve(low, q)
    b = _forward_solve(low, half.T).T
    mu = sym_eigvals(0.5 * (b + b.T))
    mu_min, mu_max = float(mu[0]), float(mu[-1])
    if mu_max <= 0.0:
        return math.inf
    if mu_min <= PENCIL_SINGULAR_REL * mu_max:
        return math.inf
    return 1.0 / mu_min
