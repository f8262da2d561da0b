"""Explicit stabilized multirate integrators (RKC, mRKC, emRKC) for the monodomain model."""
from .cheb import cheb_T, get_stages, rkc_coeffs, rkc_iteration, stability_phi, stability_poly
from .errors import CgNotConverged, ConfigError, NumericalAbort
from .kernels import BACKEND
from .multirate import SplitRhs, emrkc_step, mrkc_step, rkc_step
from .spectral import estimate_spectral_radius

__version__ = "0.1.0"
