"""Backend selection for the hot kernels.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy implementations in ``_pykernels`` are used. Setting the environment
variable ``EMRKC_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _pykernels

python_backend = _pykernels
compiled_backend = None

if not os.environ.get("EMRKC_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if backend is compiled_backend else "python"

rkc_combine = backend.rkc_combine
axpy = backend.axpy
diffusion_1d = backend.diffusion_1d
diffusion_2d = backend.diffusion_2d
diffusion_3d = backend.diffusion_3d
hh_rates = backend.hh_rates
hh_lambda_zinf = backend.hh_lambda_zinf
hh_current = backend.hh_current
exp_relax = backend.exp_relax
hh_exex_step = backend.hh_exex_step
