"""Simulation and certification toolkit for finite- and fixed-time convergent control."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BlowUpError,
    FtkitError,
    LadderError,
    MarginUndefinedError,
    NotHurwitzError,
    NumericalError,
    ReferenceLookupError,
    ValidationError,
)
from .laws import (  # noqa: E402
    DifferentiatorConfig,
    ExponentLadder,
    GainScheme,
    bb_control,
    binomial_gains,
    differentiator_rhs,
    exponent_ladder,
    fixed_time_margin,
    mu_margin,
)
from .numkit import (  # noqa: E402
    LyapunovCertificate,
    certify,
    companion_from_gains,
    solve_lyapunov,
    sym_extreme_eigen,
)
from .sim import (  # noqa: E402
    ConvergenceCriterion,
    ConvergenceReport,
    Signal,
    SimConfig,
    Trajectory,
    detect_convergence,
    integrate,
    simulate_closed_loop,
    simulate_differentiator,
)
