"""Backward error functional of a TLS problem and the quantities built on it.

For data ``(A, b)`` and a candidate ``x``::

    mu(x)  = (1 + x'x)^(-1/2)
    f(x)   = mu(x) (A x - b)                  eta(x) = ||f(x)||
    J(x)   = mu(x) A - mu(x)^3 (A x - b) x'

``eta(x)`` is the smallest Frobenius norm of a perturbation ``(E|f)`` that
makes ``x`` an exact solution of ``(A + E) x = b + f``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DimensionError, HemisphereViolationError, StepDegenerateError
from .linalg import ThinQr, ls_solve, qr_factor

EPS_ALPHA = 1e-12
EPS_HEMISPHERE = 1e-14
TOL_RESIDUAL = 1e-10


@dataclass(frozen=True, eq=False)
class ProblemData:
    """The pair (A, b) and the augmented matrix C = (A | b)."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        if b.ndim == 2 and 1 in b.shape:
            b = b.ravel()
        if a.ndim != 2 or b.ndim != 1:
            raise DimensionError("A must be a matrix and b a vector")
        m, n = a.shape
        if b.shape[0] != m:
            raise DimensionError(f"b has length {b.shape[0]}, A has {m} rows")
        if not (m >= n >= 1):
            raise DimensionError(f"need m >= n >= 1, got m={m}, n={n}")
        c = np.column_stack([a, b])
        for arr in (a, b, c):
            arr.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def m(self):
        return self.a.shape[0]

    @property
    def n(self):
        return self.a.shape[1]

    @cached_property
    def qr_a(self) -> ThinQr:
        return qr_factor(self.a)

    @cached_property
    def qr_c(self) -> ThinQr:
        """QR of C; needs m >= n + 1."""
        return qr_factor(self.c)

    def pinv_c(self, vec):
        """``C^+ vec`` for full column rank C."""
        return ls_solve(self.qr_c, vec)


def mu(x):
    x = np.asarray(x, dtype=float)
    return 1.0 / np.sqrt(1.0 + x @ x)


@dataclass(frozen=True, eq=False)
class VariationalPoint:
    x: np.ndarray
    mu: float
    residual: np.ndarray
    f: np.ndarray
    eta: float
    jac: np.ndarray = field(repr=False)
    grad_norm: float


def evaluate(problem, x):
    """All the variational quantities at ``x``."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape != (problem.n,):
        raise DimensionError(f"x must have length {problem.n}")
    m_ = float(mu(x))
    r = problem.a @ x - problem.b
    f = m_ * r
    jac = m_ * problem.a - (m_ ** 3) * np.outer(r, x)
    return VariationalPoint(x=x, mu=m_, residual=r, f=f, eta=float(np.linalg.norm(f)),
                            jac=jac, grad_norm=float(np.linalg.norm(jac.T @ f)))


@dataclass(frozen=True, eq=False)
class BackwardPerturbation:
    """Rank-one perturbation ``(E_bar | f_bar) = -r y^T / y^T y`` with
    ``y = (x, -1)`` and ``r = A x - b``. Only the two factors are stored."""

    r: np.ndarray
    y: np.ndarray

    @property
    def scale(self):
        return 1.0 / float(self.y @ self.y)

    @property
    def e_bar(self):
        return -self.scale * np.outer(self.r, self.y[:-1])

    @property
    def f_bar(self):
        return self.scale * self.r

    @property
    def matrix(self):
        return -self.scale * np.outer(self.r, self.y)

    @property
    def frob_norm(self):
        return float(np.linalg.norm(self.r) / np.linalg.norm(self.y))


def backward_certificate(problem, x):
    """Smallest perturbation making ``x`` an exact solution of the perturbed system."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape != (problem.n,):
        raise DimensionError(f"x must have length {problem.n}")
    return BackwardPerturbation(problem.a @ x - problem.b, np.append(x, -1.0))


@dataclass(frozen=True)
class StepComputation:
    h: np.ndarray
    theta: float
    tau: float
    alpha: float


def retraction_step(point, h, eps_alpha=EPS_ALPHA):
    """Step length ``1 / (1 - mu^2 x'h)``.

    With it, ``f(x + alpha h)`` is a scalar multiple of the Gauss-Newton
    point ``f(x) + J(x) h``. Raises StepDegenerateError when the
    denominator is within ``eps_alpha`` of zero.
    """
    den = 1.0 - point.mu ** 2 * float(point.x @ h)
    if abs(den) <= eps_alpha:
        raise StepDegenerateError(den)
    return 1.0 / den


def theta_tau(point, h):
    """Coefficients with ``f(x + h) = tau (f(x) + theta J(x) h)``."""
    h = np.asarray(h, dtype=float)
    s = 1.0 + point.mu ** 2 * float(point.x @ h)
    theta = 1.0 / s if s != 0.0 else np.inf
    tau = float(mu(point.x + h)) / point.mu * s
    return theta, tau


def gauss_newton_decomposition(point, h, eps_alpha=EPS_ALPHA):
    h = np.asarray(h, dtype=float).ravel()
    theta, tau = theta_tau(point, h)
    return StepComputation(h, theta, tau, retraction_step(point, h, eps_alpha))


def lift_to_x(problem, f_point, eps_hemisphere=EPS_HEMISPHERE):
    """Recover ``x`` from a point ``f(x)`` of the ellipsoid.

    ``y = C^+ f`` is a unit vector proportional to ``(x, -1)``, hence
    ``x = -y[:n] / y[n]``.
    """
    y = problem.pinv_c(f_point)
    if y[-1] >= -eps_hemisphere:
        raise HemisphereViolationError(float(y[-1]))
    return -y[:-1] / y[-1]
