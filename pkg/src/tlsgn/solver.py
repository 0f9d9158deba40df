"""Gauss-Newton iteration for ``min_x eta(x)``.

Each step solves the linear least squares problem ``min_h ||J_k h + f_k||``.
Because ``J_k = mu_k (A + u_k x_k^T)`` with ``u_k = -mu_k f_k``, its QR
factors are obtained from those of A by a rank-one update, so after the
initial factorization every iteration costs O(mn + n^2).

Two step rules are available: the unit step (``basic``) and the step
``alpha_k = 1 / (1 - mu_k^2 x_k'h_k)`` (``optimal``), which maps
``f(x_{k+1})`` onto the ray through ``f_k + J_k h_k``. The latter makes
``eta(x_k)`` decrease monotonically.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .errors import RankDeficientError, SingularMatrixError, StepDegenerateError
from .linalg import ls_solve, qr_factor, qr_rank_one_update
from .variational import evaluate, retraction_step, theta_tau

log = logging.getLogger(__name__)


class StepMode(str, Enum):
    BASIC = "basic"
    OPTIMAL = "optimal"


class SubproblemMode(str, Enum):
    FRESH_QR = "fresh_qr"
    RANK_ONE_UPDATE = "rank_one_update"


class Status(str, Enum):
    CONVERGED = "converged"
    MAXIT_REACHED = "maxit_reached"
    STAGNATED_ROUNDING = "stagnated_rounding"
    STEP_DEGENERATE = "step_degenerate"


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rule and variant selection.

    ``epsilon`` is the absolute threshold on ``||J_k^T f_k||``. When it is
    None the threshold is ``rel_epsilon * sigma_1(C)**2``, which is
    invariant under scaling of the data.

    The eta guard stops the iteration when ``eta`` grows by more than
    ``guard_rtol * sigma_1(C)``, a rounding-level slack. ``eta_guard=None``
    enables it for the optimal step only.
    """

    epsilon: float | None = None
    rel_epsilon: float = 1e-14
    maxit: int = 200
    step_mode: StepMode = StepMode.OPTIMAL
    subproblem_mode: SubproblemMode = SubproblemMode.RANK_ONE_UPDATE
    eta_guard: bool | None = None
    guard_rtol: float = 16 * np.finfo(float).eps
    halvings: int = 20

    def __post_init__(self):
        object.__setattr__(self, "step_mode", StepMode(self.step_mode))
        object.__setattr__(self, "subproblem_mode", SubproblemMode(self.subproblem_mode))
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.maxit < 1:
            raise ValueError("maxit must be at least 1")

    @property
    def guard(self):
        if self.eta_guard is None:
            return self.step_mode is StepMode.OPTIMAL
        return self.eta_guard


CSV_COLUMNS = ("k", "eta", "grad_norm", "alpha", "step_norm", "ellipsoid_residual",
               "orthogonality_residual", "tau", "fallback")


@dataclass
class IterationRecord:
    """State at iterate k and the step taken from it (NaN for the last one)."""

    k: int
    eta: float
    grad_norm: float
    alpha: float = math.nan
    step_norm: float = math.nan
    ellipsoid_residual: float = math.nan
    orthogonality_residual: float = math.nan
    tau: float = math.nan
    fallback: bool = False
    decomposition_residual: float = math.nan
    jh_norm: float = math.nan


@dataclass
class IterationTrace:
    epsilon: float
    sigma_1: float = 1.0
    records: list = field(default_factory=list)
    xs: list = field(default_factory=list)
    fs: list = field(default_factory=list)
    rejected: IterationRecord | None = None

    def __len__(self):
        return len(self.records)

    @property
    def etas(self):
        return np.array([r.eta for r in self.records])

    @property
    def has_fallback(self):
        return any(r.fallback for r in self.records)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for rec in self.records:
                row = asdict(rec)
                writer.writerow([rec.k] + [f"{row[c]:.17g}" for c in CSV_COLUMNS[1:-1]]
                                + [int(rec.fallback)])


def read_trace_csv(path):
    """Read a trace CSV back into a list of IterationRecord."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {c: float(row[c]) for c in CSV_COLUMNS[1:-1]}
            out.append(IterationRecord(k=int(row["k"]), fallback=bool(int(row["fallback"])), **kw))
    return out


@dataclass(frozen=True, eq=False)
class SolveResult:
    x_hat: np.ndarray
    eta_final: float
    status: Status
    trace: IterationTrace
    iterations: int
    grad_norm_final: float = math.nan


def subproblem_solve(point, mode, qr_a=None):
    """Gauss-Newton step ``h = argmin ||J h + f||`` at ``point``.

    In ``rank_one_update`` mode ``qr_a`` (the QR factors of A) is updated
    to the factors of ``A + u x^T`` with ``u = -mu f``, so that
    ``J = mu Q1 R1`` and ``h = -R1^{-1} Q1^T f / mu``.
    """
    mode = SubproblemMode(mode)
    if not np.any(point.f):
        return np.zeros_like(point.x)
    try:
        if mode is SubproblemMode.FRESH_QR:
            return ls_solve(qr_factor(point.jac), -point.f)
        if qr_a is None:
            raise ValueError("rank_one_update mode needs the QR factors of A")
        qr_j = qr_rank_one_update(qr_a, -point.mu * point.f, point.x)
        return ls_solve(qr_j, -point.f / point.mu)
    except SingularMatrixError as exc:
        raise RankDeficientError(f"jacobian is rank deficient (column {exc.index})") from exc


def termination_check(trace, config):
    """Status implied by the trace so far, or None to keep iterating."""
    recs = trace.records
    last = recs[-1]
    if config.guard and len(recs) >= 2 and last.eta > recs[-2].eta + config.guard_rtol * trace.sigma_1:
        return Status.STAGNATED_ROUNDING
    eps = config.epsilon if config.epsilon is not None else trace.epsilon
    if last.grad_norm < eps:
        return Status.CONVERGED
    if len(recs) - 1 >= config.maxit:
        return Status.MAXIT_REACHED
    return None


def _ellipsoid_residual(problem, f):
    try:
        y = problem.pinv_c(f)
    except (SingularMatrixError, ValueError):
        return math.nan
    return abs(float(y @ y) - 1.0)


def _take_step(pt, h, problem, config):
    """Returns (alpha, new point or None, fallback flag)."""
    x = pt.x
    if config.step_mode is StepMode.BASIC:
        return 1.0, evaluate(problem, x + h), False
    try:
        alpha = retraction_step(pt, h)
        return alpha, evaluate(problem, x + alpha * h), False
    except StepDegenerateError as exc:
        log.info("degenerate step length (%s), falling back", exc)
    alpha = 1.0
    for _ in range(config.halvings + 1):
        new = evaluate(problem, x + alpha * h)
        if new.eta < pt.eta:
            return alpha, new, True
        alpha *= 0.5
    return alpha, None, True


def solve(problem, config=None, x0=None):
    """Approximate the TLS solution by the Gauss-Newton iteration, started
    by default at the ordinary least squares solution.

    Parameters
    ----------
    problem : ProblemData
    config : SolverConfig, optional
    x0 : array_like, optional
        Starting point; the least squares solution when omitted.

    Returns
    -------
    SolveResult
    """
    config = config or SolverConfig()
    try:
        qr_a = problem.qr_a
        x = ls_solve(qr_a, problem.b) if x0 is None else np.asarray(x0, dtype=float).ravel()
    except SingularMatrixError as exc:
        raise RankDeficientError(f"A is rank deficient (column {exc.index})") from exc
    sigma_1 = float(np.linalg.norm(problem.c, 2))
    eps = config.epsilon if config.epsilon is not None else config.rel_epsilon * sigma_1 ** 2

    trace = IterationTrace(epsilon=eps, sigma_1=sigma_1)
    pt = evaluate(problem, x)
    trace.records.append(IterationRecord(0, pt.eta, pt.grad_norm,
                                         ellipsoid_residual=_ellipsoid_residual(problem, pt.f)))
    trace.xs.append(pt.x)
    trace.fs.append(pt.f)
    status = termination_check(trace, config)
    while status is None:
        h = subproblem_solve(pt, config.subproblem_mode, qr_a)
        alpha, new, fallback = _take_step(pt, h, problem, config)
        rec = trace.records[-1]
        rec.fallback = fallback
        if new is None:
            status = Status.STEP_DEGENERATE
            break
        step = alpha * h
        jh = pt.jac @ h
        theta, tau = theta_tau(pt, step)
        pred = tau * (pt.f + theta * (pt.jac @ step))
        nf, njh = float(np.linalg.norm(new.f)), float(np.linalg.norm(jh))
        rec.alpha = alpha
        rec.step_norm = float(np.linalg.norm(step))
        rec.tau = tau
        rec.jh_norm = njh
        rec.orthogonality_residual = (abs(float(new.f @ jh)) / (nf * njh)) if nf * njh > 0 else 0.0
        rec.decomposition_residual = float(np.linalg.norm(new.f - pred)) / max(pt.eta, 1e-300)
        trace.records.append(IterationRecord(rec.k + 1, new.eta, new.grad_norm,
                                             ellipsoid_residual=_ellipsoid_residual(problem, new.f)))
        trace.xs.append(new.x)
        trace.fs.append(new.f)
        log.debug("k=%d eta=%.17g grad=%.3e alpha=%.6g", rec.k + 1, new.eta, new.grad_norm, alpha)
        status = termination_check(trace, config)
        if status is Status.STAGNATED_ROUNDING:
            trace.rejected = trace.records.pop()
            trace.xs.pop()
            trace.fs.pop()
            last = trace.records[-1]
            for name in ("alpha", "step_norm", "orthogonality_residual", "tau",
                         "decomposition_residual", "jh_norm"):
                setattr(last, name, math.nan)
            break
        pt = new

    last = trace.records[-1]
    log.info("GN-TLS %s after %d iterations, eta=%.17g", status.value, last.k, last.eta)
    return SolveResult(trace.xs[-1], last.eta, status, trace, last.k, last.grad_norm)
