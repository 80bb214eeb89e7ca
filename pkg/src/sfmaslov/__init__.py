"""
sfmaslov: spectral flow, Maslov indices and finite-rank parametrices for
paths of symmetric matrices, built on the linear symplectic algebra of
S(H) = H x H.
"""

import os as _os

# SPECFLOW_THREADS caps BLAS parallelism; it must be set before numpy loads.
_threads = _os.environ.get("SPECFLOW_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

try:
    from importlib.metadata import PackageNotFoundError, version as _version

    __version__ = _version("artifact")
except PackageNotFoundError:  # pragma: no cover - source checkout
    __version__ = "0.1.0"

from ._tol import DEFAULT as DEFAULT_TOLERANCES, Tolerances  # noqa: E402
from .exceptions import *  # noqa: E402,F401,F403
from .grassmann import (  # noqa: E402
    LagrangianPath,
    hormander_index,
    hormander_index_via_path,
    maslov_loop_index,
    relative_maslov_index,
    suspend_triple,
    transversal_to_pair,
    triple_signature,
)
from .spectral import (  # noqa: E402
    OperatorPath,
    crossing_form,
    eigenvalue_tracking_oracle,
    morse_index,
    relative_morse_index,
    singular_set,
    spectral_flow_crossings,
    spectral_flow_maslov,
    spectral_flow_morse,
)
from .parametrix import invert_single, parametrix_path, transversal_path  # noqa: E402
from .bifurcate import (  # noqa: E402
    VariationalFamily,
    branch_verify,
    counting_bound,
    detect_candidates,
    discretize_sturm_liouville,
)
