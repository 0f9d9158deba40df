"""Dense kernels: thin QR, Givens rotations, QR rank-one updating,
triangular least squares solves, linearly constrained least squares and SVD.

All factorizations are returned as read-only arrays wrapped in frozen
dataclasses, so they can be cached and shared freely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (ConvergenceError, DimensionError, RankDeficientError,
                     SingularMatrixError)

TOL_FACTORIZATION = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass
class FlopCounter:
    """Accumulates floating point operation counts for instrumented kernels."""

    flops: int = 0

    def add(self, n):
        self.flops += int(n)


@dataclass(frozen=True)
class ThinQr:
    """QR factors of an m x n matrix.

    ``q`` is either m x n with orthonormal columns (thin form) or m x m
    orthogonal (full form). ``r`` is always n x n upper triangular with a
    nonnegative diagonal.
    """

    q: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", _frozen(self.q))
        object.__setattr__(self, "r", _frozen(self.r))
        m, k = self.q.shape
        n = self.r.shape[1]
        if self.r.shape != (n, n) or k not in (n, m):
            raise DimensionError(f"inconsistent QR shapes q{self.q.shape} r{self.r.shape}")

    @property
    def m(self):
        return self.q.shape[0]

    @property
    def n(self):
        return self.r.shape[1]

    @property
    def full(self):
        return self.q.shape[1] == self.m and self.m > self.n

    @property
    def q_thin(self):
        return self.q[:, :self.n]

    def product(self):
        return self.q_thin @ self.r


@dataclass(frozen=True)
class GivensRotation:
    """Plane rotation acting on coordinates ``i`` and ``j``.

    As a left multiplication it maps ``(x_i, x_j)`` to
    ``(c x_i + s x_j, -s x_i + c x_j)``.
    """

    i: int
    j: int
    c: float
    s: float

    @classmethod
    def zeroing(cls, i, j, a, b):
        """Rotation on (i, j) that sends (a, b) to (r, 0) with r = hypot(a, b)."""
        if b == 0.0:
            return cls(i, j, 1.0, 0.0)
        r = math.hypot(a, b)
        return cls(i, j, a / r, b / r)

    def apply(self, x, cols=slice(None)):
        """Rotate rows i, j of ``x`` in place (entries of a vector if 1-D)."""
        xi = x[self.i, cols].copy() if x.ndim > 1 else x[self.i]
        xj = x[self.j, cols] if x.ndim > 1 else x[self.j]
        if x.ndim > 1:
            x[self.i, cols] = self.c * xi + self.s * xj
            x[self.j, cols] = -self.s * xi + self.c * xj
        else:
            x[self.i], x[self.j] = self.c * xi + self.s * xj, -self.s * xi + self.c * xj
        return x

    def apply_transpose(self, x, cols=slice(None)):
        GivensRotation(self.i, self.j, self.c, -self.s).apply(x, cols)
        return x

    def apply_right_transpose(self, q):
        """In-place ``q <- q G^T`` (rotate columns i and j)."""
        qi = q[:, self.i].copy()
        qj = q[:, self.j]
        q[:, self.i] = self.c * qi + self.s * qj
        q[:, self.j] = -self.s * qi + self.c * qj
        return q


def _fix_signs(q, r):
    """Flip rows of r / columns of q so that diag(r) >= 0."""
    n = r.shape[1]
    d = np.where(np.diag(r[:n, :n]) < 0, -1.0, 1.0)
    r[:n] *= d[:, None]
    q[:, :n] *= d
    return q, r


def qr_factor(M, full=False):
    """Householder QR factorization of an m x n matrix with m >= n.

    Parameters
    ----------
    M : (m, n) array_like
    full : bool
        Return an m x m orthogonal ``q`` instead of the thin m x n one.

    Returns
    -------
    ThinQr
        Factors with ``r`` upper triangular, nonnegative diagonal and exact
        zeros below the diagonal.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionError("qr_factor expects a 2-D matrix")
    m, n = M.shape
    if m < n:
        raise DimensionError(f"qr_factor needs m >= n, got {m} x {n}")
    q, r = np.linalg.qr(M, mode="complete" if full else "reduced")
    r = np.triu(r[:n, :n])
    q, r = _fix_signs(np.array(q), r)
    return ThinQr(q, r)


def qr_rank_one_update(qr, u, v, counter=None):
    """QR factors of ``A + u v^T`` from the factors of ``A``.

    Uses the Givens procedure: with ``w = Q^T u`` a sweep of rotations
    reduces ``w`` to a multiple of ``e_1`` and turns ``R`` into an upper
    Hessenberg matrix, the rank-one term is added to the first row, and a
    second sweep restores triangular form.

    A thin ``q`` is extended by one column, the normalized component of
    ``u`` orthogonal to ``Range(Q)``, so the rotations act on n + 1
    coordinates and the cost is O(mn + n^2). A full (m x m) ``q`` is
    rotated on all m coordinates, which costs O(m^2).

    Parameters
    ----------
    qr : ThinQr
        Factors of A.
    u : (m,) array_like
    v : (n,) array_like
    counter : FlopCounter, optional
        Receives the number of floating point operations performed.

    Returns
    -------
    ThinQr
        Factors of ``A + u v^T`` in the same form (thin or full) as ``qr``.
    """
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    m, n = qr.m, qr.n
    if u.shape != (m,) or v.shape != (n,):
        raise DimensionError(f"update vectors must have shapes ({m},), ({n},)")
    flops = 0
    k = qr.q.shape[1]

    if k == m:
        qe = np.array(qr.q)
        we = qe.T @ u
        flops += 2 * m * m
    else:
        q = qr.q
        w = q.T @ u
        res = u - q @ w
        # one step of reorthogonalization keeps the extra column orthogonal
        dw = q.T @ res
        w += dw
        res -= q @ dw
        flops += 8 * m * n
        rho = float(np.linalg.norm(res))
        flops += 2 * m
        if rho > 64 * np.finfo(float).eps * max(float(np.linalg.norm(u)), 1.0):
            extra = res / rho
        else:
            rho = 0.0
            extra = _orthogonal_complement_vector(q)
        qe = np.empty((m, n + 1))
        qe[:, :n] = q
        qe[:, n] = extra
        we = np.append(w, rho)
    p = qe.shape[1]
    re = np.zeros((p, n))
    re[:n] = qr.r

    # first sweep: rotations on (i, i+1), bottom up, annihilate we[i+1]
    for i in range(p - 2, -1, -1):
        g = GivensRotation.zeroing(i, i + 1, we[i], we[i + 1])
        we[i], we[i + 1] = math.hypot(we[i], we[i + 1]), 0.0
        flops += 6
        if g.s == 0.0:
            continue
        if i < n:
            g.apply(re, slice(i, n))
            flops += 6 * (n - i)
        g.apply_right_transpose(qe)
        flops += 6 * m
    re[0] += we[0] * v
    flops += 2 * n

    # second sweep: restore upper triangular form of the Hessenberg matrix
    for i in range(min(n, p - 1)):
        g = GivensRotation.zeroing(i, i + 1, re[i, i], re[i + 1, i])
        flops += 6
        if g.s == 0.0:
            continue
        g.apply(re, slice(i, n))
        re[i + 1, i] = 0.0
        g.apply_right_transpose(qe)
        flops += 6 * (n - i) + 6 * m

    r1 = np.triu(re[:n])
    q1 = qe[:, :k]
    q1, r1 = _fix_signs(np.array(q1), r1)
    if counter is not None:
        counter.add(flops)
    return ThinQr(q1, r1)


def _orthogonal_complement_vector(q):
    m = q.shape[0]
    j = int(np.argmin(np.einsum("ij,ij->i", q, q)))
    e = np.zeros(m)
    e[j] = 1.0
    for _ in range(2):
        e -= q @ (q.T @ e)
    return e / np.linalg.norm(e)


def _check_diagonal(r):
    d = np.abs(np.diag(r))
    if d.size == 0:
        return
    tol = max(r.shape) * np.finfo(float).eps * max(float(d.max()), np.finfo(float).tiny)
    bad = np.flatnonzero(d <= tol)
    if bad.size:
        raise SingularMatrixError(int(bad[0]), float(d[bad[0]]))


def ls_solve(qr, rhs):
    """Least squares solution of ``M x ~ rhs`` given ``qr`` = QR of M."""
    rhs = np.asarray(rhs, dtype=float).ravel()
    if rhs.shape != (qr.m,):
        raise DimensionError(f"rhs must have length {qr.m}")
    _check_diagonal(qr.r)
    return solve_triangular(qr.r, qr.q_thin.T @ rhs, lower=False)


def normal_solve(qr, rhs):
    """Solve ``(M^T M) x = rhs`` as two triangular solves with R."""
    _check_diagonal(qr.r)
    y = solve_triangular(qr.r, rhs, trans="T", lower=False)
    return solve_triangular(qr.r, y, lower=False)


@dataclass(frozen=True)
class ConstrainedLsResult:
    x_bar: np.ndarray
    lam: float
    projector_applied: bool
    x_ls: np.ndarray = field(repr=False, default=None)
    w: np.ndarray = field(repr=False, default=None)


def constrained_ls_solve(matrix, rhs, v):
    """Minimize ``||M x - rhs||`` subject to ``v^T x = 0``.

    The minimizer is the unconstrained solution pushed onto the hyperplane
    ``<v>^perp`` along ``w = (M^T M)^{-1} v`` (an oblique projection)::

        x_bar = x_ls - (v^T x_ls / v^T w) w

    ``w`` is formed with two triangular solves against R.
    ``lam = v^T x_ls / v^T w`` is the Lagrange multiplier of the KKT system
    ``M^T M x_bar + lam v = M^T rhs``.

    Parameters
    ----------
    matrix : ThinQr or (m, n) array_like
        Full column rank matrix, or its QR factors.
    rhs : (m,) array_like
    v : (n,) array_like
        Nonzero constraint normal.
    """
    qr = matrix if isinstance(matrix, ThinQr) else qr_factor(matrix)
    v = np.asarray(v, dtype=float).ravel()
    if v.shape != (qr.n,):
        raise DimensionError(f"constraint vector must have length {qr.n}")
    if not np.any(v):
        raise DimensionError("constraint vector v must be nonzero")
    try:
        x_ls = ls_solve(qr, rhs)
        w = normal_solve(qr, v)
    except SingularMatrixError as exc:
        raise RankDeficientError(f"matrix is rank deficient (column {exc.index})") from exc
    lam = float(v @ x_ls) / float(v @ w)
    x_bar = x_ls - lam * w
    return ConstrainedLsResult(x_bar, lam, lam != 0.0, x_ls, w)


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``M = u diag(sigma) v^T`` with descending ``sigma``."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        for name in ("u", "sigma", "v"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    def reconstruct(self):
        return (self.u * self.sigma) @ self.v.T


def svd_factor(M):
    """Thin singular value decomposition of a real matrix (LAPACK gesdd)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionError("svd_factor expects a 2-D matrix")
    if not np.all(np.isfinite(M)):
        raise DimensionError("svd_factor needs finite entries")
    try:
        u, s, vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"SVD did not converge: {exc}") from exc
    return SvdFactors(u, s, vt.T)
