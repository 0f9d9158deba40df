"""Synthetic TLS problems whose augmented matrix has a prescribed spectrum."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ResampleLimitError
from .variational import ProblemData

MAX_RESAMPLE = 100


@dataclass(frozen=True)
class SpectrumSpec:
    m: int
    n: int
    sigmas: tuple
    seed: int = 0
    ensure_generic: bool = True

    def __post_init__(self):
        sig = tuple(float(s) for s in self.sigmas)
        object.__setattr__(self, "sigmas", sig)
        if self.n < 1 or self.m < self.n + 1:
            raise DimensionError(f"need m >= n + 1 >= 2, got m={self.m}, n={self.n}")
        if len(sig) != self.n + 1:
            raise DimensionError(f"need {self.n + 1} singular values, got {len(sig)}")
        if min(sig) <= 0:
            raise ValueError("singular values must be positive")
        d = np.diff(sig)
        if np.any(d > 0) or (self.ensure_generic and np.any(d >= 0)):
            raise ValueError("singular values must be descending (strictly when ensure_generic)")


def haar_orthogonal(rng, m, k):
    """m x k matrix with orthonormal columns, Haar distributed."""
    q, r = np.linalg.qr(rng.standard_normal((m, k)))
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def gapped_spectrum(n, gap, top=10.0, rng=None, sub_gap=1.0):
    """Descending spectrum with ``sigma_n = 1`` and ``sigma_{n+1} = 1 / gap``.

    ``sigma_1 .. sigma_{n-1}`` lie in ``[sub_gap, top]``: geometrically
    spaced, or log-uniform when ``rng`` is given. A ``sub_gap`` well above
    1 separates ``sigma_n`` from the rest of the spectrum, so iterations
    reach their asymptotic rate after one or two steps.
    """
    if gap <= 1:
        raise ValueError("gap must exceed 1")
    if not 1.0 <= sub_gap < top:
        raise ValueError("need 1 <= sub_gap < top")
    if n == 1:
        head = np.ones(1)
    elif rng is None:
        head = np.append(np.geomspace(top, sub_gap, n)[:-1] if sub_gap > 1 else
                         np.geomspace(top, 1.0, n)[:-1], 1.0)
    else:
        lo = np.log(sub_gap)
        head = np.append(np.sort(np.exp(rng.uniform(lo, np.log(top), n - 1)))[::-1], 1.0)
    return tuple(np.append(head, 1.0 / gap))


def generate(spec):
    """Draw ``C = U diag(sigmas) V^T`` and split it into ``(A, b)``.

    With ``ensure_generic``, V is redrawn until its last row-last column
    entry satisfies ``|gamma| >= 0.1 / sqrt(n + 1)``.
    """
    rng = np.random.default_rng(spec.seed)
    q = spec.n + 1
    u = haar_orthogonal(rng, spec.m, q)
    margin = 0.1 / np.sqrt(q)
    for _ in range(MAX_RESAMPLE):
        v = haar_orthogonal(rng, q, q)
        if not spec.ensure_generic or abs(v[-1, -1]) >= margin:
            break
    else:
        raise ResampleLimitError(f"no generic V after {MAX_RESAMPLE} draws")
    c = (u * np.asarray(spec.sigmas)) @ v.T
    return ProblemData(c[:, :spec.n], c[:, spec.n])


def parse_gen(text):
    """Parse ``"m=100,n=10,gap=4,seed=1"`` into a SpectrumSpec.

    Optional keys: ``top`` (sigma_1), ``sub_gap`` and ``random=1`` for a
    random rather than geometric leading spectrum (see gapped_spectrum).
    """
    fields = {}
    for item in filter(None, (t.strip() for t in text.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"malformed generator field {item!r}")
        fields[key.strip()] = value.strip()
    unknown = set(fields) - {"m", "n", "gap", "seed", "top", "sub_gap", "random"}
    if unknown:
        raise ValueError(f"unknown generator fields: {sorted(unknown)}")
    missing = {"m", "n"} - set(fields)
    if missing:
        raise ValueError(f"missing generator fields: {sorted(missing)}")
    m, n = int(fields["m"]), int(fields["n"])
    seed = int(fields.get("seed", 0))
    gap = float(fields.get("gap", 2.0))
    top = float(fields.get("top", 10.0))
    sub_gap = float(fields.get("sub_gap", 1.0))
    rng = np.random.default_rng(seed) if fields.get("random") in ("1", "true") else None
    return SpectrumSpec(m, n, gapped_spectrum(n, gap, top, rng, sub_gap), seed)
