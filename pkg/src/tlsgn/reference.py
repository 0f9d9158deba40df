"""Classical SVD solution of the TLS problem and its well-posedness test."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NotWellPosedError
from .linalg import SvdFactors, svd_factor
from .variational import evaluate

log = logging.getLogger(__name__)

TOL_GAMMA = 1e-12
TOL_GAP = 1e-12


class Verdict(str, Enum):
    UNIQUE = "unique"
    NON_GENERIC = "non_generic"
    DEGENERATE_GAP = "degenerate_gap"


@dataclass(frozen=True)
class WellPosedness:
    gamma_nonzero: bool
    gamma_margin: float
    gap: float
    verdict: Verdict
    sigma_prime_n: float
    sigma_np1: float = 0.0

    @property
    def unique(self):
        return self.verdict is Verdict.UNIQUE

    @property
    def cross_check(self):
        """Smallest singular value of A exceeds the smallest one of C."""
        return self.sigma_prime_n > self.sigma_np1


@dataclass(frozen=True, eq=False)
class SvdBundle:
    """SVD of C with the last right singular vector split as ``(v_hat, gamma)``.

    The orientation of the last singular pair is chosen so that
    ``gamma <= 0``; with it ``C v_last = sigma_np1 u_last`` and, for a well
    posed problem, ``f(x_TLS) = sigma_np1 u_last``.
    """

    svd: SvdFactors
    v_last: np.ndarray
    u_last: np.ndarray
    sigma_prime_n: float

    @property
    def sigma(self):
        return self.svd.sigma

    @property
    def sigma_1(self):
        return float(self.svd.sigma[0])

    @property
    def sigma_n(self):
        return float(self.svd.sigma[-2])

    @property
    def sigma_np1(self):
        return float(self.svd.sigma[-1])

    @property
    def v_hat(self):
        return self.v_last[:-1]

    @property
    def gamma(self):
        return float(self.v_last[-1])


def analyze(problem, tol_gamma=TOL_GAMMA, tol_gap=TOL_GAP):
    """SVD of C = (A | b) and the uniqueness verdict.

    The problem has a unique solution iff ``gamma != 0`` and
    ``sigma_n != sigma_{n+1}``. A tie between the two smallest singular
    values is reported first, since it makes ``v_last`` (and so ``gamma``)
    ill defined.

    Returns
    -------
    (SvdBundle, WellPosedness)
    """
    svd = svd_factor(problem.c)
    q = problem.n + 1
    if svd.sigma.shape[0] < q:
        # m == n: C is wide and its (n+1)-th singular value is zero
        v_full = np.linalg.svd(problem.c)[2].T
        sigma = np.append(svd.sigma, 0.0)
        u = np.column_stack([svd.u, np.zeros(problem.m)])
        svd = SvdFactors(u, sigma, v_full)
    v_last = np.array(svd.v[:, -1])
    u_last = np.array(svd.u[:, -1])
    if v_last[-1] > 0:
        v_last, u_last = -v_last, -u_last
    sigma_prime_n = float(np.linalg.svd(problem.a, compute_uv=False)[-1])

    sigma = svd.sigma
    gap = float(sigma[-2] - sigma[-1])
    margin = abs(float(v_last[-1]))
    gamma_ok = margin > tol_gamma * float(np.linalg.norm(v_last))
    if not gap > tol_gap * float(sigma[0]):
        verdict = Verdict.DEGENERATE_GAP
    elif not gamma_ok:
        verdict = Verdict.NON_GENERIC
    else:
        verdict = Verdict.UNIQUE
    wp = WellPosedness(gamma_ok, margin, gap, verdict, sigma_prime_n, float(sigma[-1]))
    if wp.unique and not wp.cross_check:
        log.warning("verdict unique but sigma'_n=%.3e <= sigma_n+1=%.3e",
                    sigma_prime_n, sigma[-1])
    return SvdBundle(svd, v_last, u_last, sigma_prime_n), wp


def solve_tls_svd(problem, bundle=None, wellposedness=None):
    """TLS solution ``x = -v_hat / gamma`` and its backward error.

    Raises NotWellPosedError when the verdict is not ``unique``.
    """
    if bundle is None or wellposedness is None:
        bundle, wellposedness = analyze(problem)
    if not wellposedness.unique:
        raise NotWellPosedError(wellposedness)
    x = -bundle.v_hat / bundle.gamma
    return x, evaluate(problem, x).eta
