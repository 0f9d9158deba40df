"""Inverse power iteration on ``C^T C`` and its geometric counterpart.

The optimal-step Gauss-Newton iteration moves ``f_k = C s_k`` (with
``s_k`` a unit vector) to the retraction onto the ellipsoid
``{C s : ||s|| = 1}`` of the minimum norm point of the tangent space at
``f_k``. That point is ``f_k + C w_k`` where ``w_k`` minimizes
``||f_k + C w||`` subject to ``s_k' w = 0``, and the whole step collapses to

    s_{k+1} = (C^T C)^{-1} s_k / ||(C^T C)^{-1} s_k||.

Both routes are implemented here so they can be checked against each
other and against the solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, RankDeficientError, SingularMatrixError, TraceIncompatibleError
from .linalg import constrained_ls_solve, ls_solve, normal_solve
from .solver import IterationRecord, IterationTrace, SolveResult, Status
from .variational import evaluate

RATE_WINDOW = (1e-16, 1e-2)
FLOOR_FACTOR = 50.0


@dataclass(frozen=True, eq=False)
class PowerState:
    s: np.ndarray
    f: np.ndarray
    beta: float
    k: int
    w: np.ndarray | None = None


@dataclass(frozen=True)
class RateReport:
    rho: float
    fitted_rate_f: float
    fitted_rate_eta: float
    points_f: int
    points_eta: int


def initial_state(problem, s0):
    s0 = np.asarray(s0, dtype=float).ravel()
    s0 = s0 / np.linalg.norm(s0)
    return PowerState(s0, problem.c @ s0, math.nan, 0)


def _normal_solve(problem, s):
    try:
        return normal_solve(problem.qr_c, s)
    except SingularMatrixError as exc:
        raise RankDeficientError(f"C is rank deficient (column {exc.index})") from exc


def power_step(problem, s, k=0):
    """One normalized inverse power step ``s -> (C^T C)^{-1} s``, normalized."""
    t = _normal_solve(problem, np.asarray(s, dtype=float))
    beta = 1.0 / float(np.linalg.norm(t))
    s1 = beta * t
    return PowerState(s1, problem.c @ s1, beta, k + 1)


def ellipsoid_step_explicit(problem, s, k=0):
    """The same step taken geometrically: tangent-space minimization, then retraction."""
    s = np.asarray(s, dtype=float)
    f = problem.c @ s
    try:
        res = constrained_ls_solve(problem.qr_c, -f, s)
    except SingularMatrixError as exc:
        raise RankDeficientError(str(exc)) from exc
    w = res.x_bar
    z = f + problem.c @ w
    # C^+ z = s + w since C has full column rank
    y = s + w
    ny = float(np.linalg.norm(y))
    return PowerState(y / ny, z / ny, 1.0 / float(np.linalg.norm(res.w)), k + 1, w)


def power_iterate(problem, s0, steps, explicit=False):
    step = ellipsoid_step_explicit if explicit else power_step
    states = [initial_state(problem, s0)]
    for _ in range(steps):
        states.append(step(problem, states[-1].s, states[-1].k))
    return states


def _f_sequence(gn):
    if isinstance(gn, SolveResult):
        gn = gn.trace
    if isinstance(gn, IterationTrace):
        if gn.has_fallback:
            raise TraceIncompatibleError("trace contains fallback steps")
        return [np.asarray(f) for f in gn.fs]
    return [np.asarray(f, dtype=float) for f in gn]


def check_equivalence(gn, problem):
    """Largest distance between the solver's ``f_k`` and the power iterates
    ``C s_k`` started from ``s_0 = C^+ f_0``.

    ``gn`` is a SolveResult, an IterationTrace (optimal step, no fallback)
    or a plain sequence of residual vectors ``f_k``.
    """
    fs = _f_sequence(gn)
    if not fs:
        raise TraceIncompatibleError("empty trace")
    if not np.any(fs[0]):
        return max(float(np.linalg.norm(f)) for f in fs)
    try:
        s0 = problem.pinv_c(fs[0])
    except SingularMatrixError as exc:
        # consistent data: C is singular and the solver stops at step 0
        if len(fs) == 1:
            return 0.0
        raise RankDeficientError(f"C is rank deficient (column {exc.index})") from exc
    states = power_iterate(problem, s0, len(fs) - 1)
    return max(float(np.linalg.norm(f - st.f)) for f, st in zip(fs, states))


def fit_rate(dev, window=RATE_WINDOW, min_points=2, tail=2, floor_factor=FLOOR_FACTOR):
    """Geometric rate of a sequence of deviations.

    The rate is ``exp`` of the least squares slope of ``log dev_k`` over
    the last ``tail`` indices (all of them when ``tail`` is None) whose
    deviation lies in the window and precedes the first value below it.
    The lower edge of the window is raised to ``floor_factor * min(dev)``
    so that points at the rounding floor never enter the fit. Early points
    are left out by ``tail`` since they carry the transient of the other
    singular directions.
    """
    dev = np.asarray(dev, dtype=float)
    if dev.size == 0:
        raise InsufficientDataError("empty sequence")
    lo = max(window[0], floor_factor * float(dev.min()))
    hi = window[1]
    ks = []
    for k, d in enumerate(dev):
        if d < lo:
            break
        if d <= hi:
            ks.append(k)
    if tail is not None:
        ks = ks[-tail:]
    if len(ks) < max(min_points, 2):
        raise InsufficientDataError(f"only {len(ks)} points in the fitting window")
    ks = np.array(ks)
    slope = np.polyfit(ks, np.log(dev[ks]), 1)[0]
    return float(np.exp(slope)), len(ks)


def measure_rates(seq, bundle, window=RATE_WINDOW, min_points=2, tail=2):
    """Observed contraction factors of ``||f_k - sigma u||`` and
    ``| ||f_k|| - sigma |`` to be compared with ``rho`` and ``rho^2``,
    where ``rho = (sigma_{n+1} / sigma_n)^2`` and ``sigma = sigma_{n+1}``.

    ``seq`` holds PowerState objects or residual vectors, typically the
    ``fs`` of a solver trace run down to the rounding floor. Deviations
    are measured relative to ``sigma_1``.
    """
    fs = [st.f if isinstance(st, PowerState) else np.asarray(st, dtype=float) for st in seq]
    sq, sq1, s1 = bundle.sigma_np1, bundle.sigma_n, bundle.sigma_1
    if not sq1 - sq > 1e-12 * s1 or sq <= 0:
        raise InsufficientDataError("no spectral gap below sigma_n; rate undefined")
    u = bundle.u_last if float(bundle.u_last @ fs[0]) > 0 else -bundle.u_last
    target = sq * u
    dev_f = [float(np.linalg.norm(f - target)) / s1 for f in fs]
    dev_eta = [abs(float(np.linalg.norm(f)) - sq) / s1 for f in fs]
    rate_f, nf = fit_rate(dev_f, window, min_points, tail)
    rate_eta, ne = fit_rate(dev_eta, window, min_points, tail)
    return RateReport((sq / sq1) ** 2, rate_f, rate_eta, nf, ne)


def solve_power(problem, tol=1e-14, maxit=200):
    """TLS solution by inverse power iteration from ``s_0 = C^+ f(x_LS)``.

    Stops when consecutive unit vectors differ by at most
    ``tol * sqrt(n + 1)`` and maps ``s = (y, y_last)`` back to
    ``x = -y / y_last``.
    """
    try:
        x0 = ls_solve(problem.qr_a, problem.b)
    except SingularMatrixError as exc:
        raise RankDeficientError(f"A is rank deficient (column {exc.index})") from exc
    pt = evaluate(problem, x0)
    trace = IterationTrace(epsilon=tol)
    trace.records.append(IterationRecord(0, pt.eta, pt.grad_norm))
    trace.xs.append(pt.x)
    trace.fs.append(pt.f)
    if not np.any(pt.f):
        return SolveResult(pt.x, pt.eta, Status.CONVERGED, trace, 0, pt.grad_norm)
    state = initial_state(problem, problem.pinv_c(pt.f))
    status = Status.MAXIT_REACHED
    thresh = tol * math.sqrt(problem.n + 1)
    for _ in range(maxit):
        new = power_step(problem, state.s, state.k)
        pt = evaluate(problem, -new.s[:-1] / new.s[-1])
        trace.records.append(IterationRecord(new.k, pt.eta, pt.grad_norm))
        trace.xs.append(pt.x)
        trace.fs.append(pt.f)
        done = np.linalg.norm(new.s - state.s) <= thresh
        state = new
        if done:
            status = Status.CONVERGED
            break
    return SolveResult(pt.x, pt.eta, status, trace, state.k, pt.grad_norm)
