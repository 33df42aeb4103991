"""Harmonizable mixture kernels with closed-form spectral representations.

Non-stationary covariance functions built as mixtures of modulated locally
stationary Gaussian kernels, together with

* closed-form generalized spectral densities and Wigner distributions,
* brute-force Fourier quadrature oracles that validate the closed forms,
* inter-domain sparse GP inference with variational Fourier features
  (inducing frequencies), for regression and probit classification,
* gradient-based training (Adam + natural gradients) and a kernel-recovery
  loop, every gradient guarded by a finite-difference checker.

All differentiable numerics run on jax in float64; parameter objects are
immutable snapshots safe for concurrent evaluation.
"""

import jax

# Double precision everywhere; the spectral closed forms and bound
# inequalities are validated at tolerances far below float32 resolution.
jax.config.update("jax_enable_x64", True)

from . import linalg  # noqa: E402
from . import kernels  # noqa: E402
from . import spectral  # noqa: E402
from . import inference  # noqa: E402
from . import optim  # noqa: E402
from . import datasets  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "linalg",
    "kernels",
    "spectral",
    "inference",
    "optim",
    "datasets",
    "__version__",
]
