"""Total least squares by Gauss-Newton iteration on the backward error."""
from .errors import (ConvergenceError, DimensionError, HemisphereViolationError, InsufficientDataError,
                     NotWellPosedError, RankDeficientError, ResampleLimitError, SingularMatrixError,
                     StepDegenerateError, TLSError, TraceIncompatibleError)
from .linalg import (FlopCounter, ThinQr, constrained_ls_solve, ls_solve, qr_factor, qr_rank_one_update,
                     svd_factor)
from .power import check_equivalence, ellipsoid_step_explicit, measure_rates, power_step, solve_power
from .probgen import SpectrumSpec, generate, gapped_spectrum
from .reference import Verdict, analyze, solve_tls_svd
from .solver import SolverConfig, SolveResult, Status, StepMode, SubproblemMode, solve
from .variational import ProblemData, backward_certificate, evaluate, lift_to_x, retraction_step, theta_tau

__version__ = "0.1.0"
