"""Nonlocal horizontal gradients and BBM-type energies on step-2 Carnot groups."""
from .groups import GroupSpec, dilate, euclidean, heisenberg, inverse, load_group, multiply, step2
from .norms import NormSpec, euclidean_norm, gauge_norm, koranyi, lq_norm
from .mollifiers import Profile, ball_family, ball_profile, fractional_family, fractional_profile, kernel_K
from .fields import ScalarField, ball_indicator, bump, poly_cutoff, smooth_ball
from .functionals import (
    NonlocalContext,
    V_eps,
    V_tilde_eps,
    I_eps_p,
    I_star_eps_p,
    bbm_limit_constant,
    convolve_gradient,
    energy_summary,
    taylor_remainder,
)
from .kernels import active_backend, available_backends

__version__ = "0.1.0"
