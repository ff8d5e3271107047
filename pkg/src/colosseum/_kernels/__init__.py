"""Hot numeric kernels.

Inner loops that dominate rollout and simulation time live here as
numba-compiled functions.  Setting ``COLOSSEUM_NO_NUMBA=1`` before import
selects the uncompiled pure-Python/numpy path instead (slower, identical
results); ``benchmarks/bench_kernels.py`` compares the two.
"""

from colosseum._kernels.jit import NUMBA_ENABLED, maybe_jit

__all__ = ["NUMBA_ENABLED", "maybe_jit"]
