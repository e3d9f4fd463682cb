"""Mellin-transform solution of the Laplace equation in a cracked plane.

The thread cap in CRACK_THREADS is applied to the BLAS/OpenMP pools before
numpy is first imported.
"""
import os as _os

_threads = _os.environ.get("CRACK_THREADS")
if _threads and _threads.isdigit() and int(_threads) > 0:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .solver import SolutionBundle, SolverParams, solve  # noqa: E402,F401
from .sources import SourceTerm, load_sampled, make_gamma_pair, zero_source  # noqa: E402,F401
