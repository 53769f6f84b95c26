"""Occupancy-update kernels: compiled core with a pure-Python fallback.

The discrete-time birth-death occupancy loop dominates simulation runtime,
so it is implemented twice with identical semantics: a Cython extension and
a numpy/Python fallback. Both consume the same numpy Generator stream draw
for draw, so results are bitwise identical regardless of backend. Selection
happens at import; set OECTLINK_NO_EXT=1 to force the fallback.

Shared conventions (see _occupancy_py for the reference implementation):
  - per-step event probabilities p_on = 1-exp(-k_on_eff c dt),
    p_off = 1-exp(-k_off dt)
  - binomial draws are exact below EXACT_TRIALS_THRESHOLD trials and use a
    matched-moment normal approximation (rounded, clamped) at or above it
  - zero-trial or zero-probability draws consume no stream values
  - window sums accumulate the occupancy entering each of the last w steps
    (left-Riemann convention on the dt grid)
"""

import os

from . import _occupancy_py

EXACT_TRIALS_THRESHOLD = _occupancy_py.EXACT_TRIALS_THRESHOLD

if os.environ.get("OECTLINK_NO_EXT"):
    _impl = _occupancy_py
    BACKEND = "python"
else:
    try:
        from . import _occupancy_cy as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _occupancy_py
        BACKEND = "python"

occupancy_window_sums = _impl.occupancy_window_sums
occupancy_symbol = _impl.occupancy_symbol
occupancy_trajectory = _impl.occupancy_trajectory
mean_occupancy_window_sums = _impl.mean_occupancy_window_sums
mean_occupancy_symbol = _impl.mean_occupancy_symbol
