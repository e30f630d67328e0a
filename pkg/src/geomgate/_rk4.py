"""Compiled fixed-step RK4 kernel for linear systems ``dy/dt = A(t) y``."""

import numba
import numpy as np


@numba.njit(cache=True)
def rk4_linear(grid, mid, dt, y):
    """Advance ``y`` through ``len(mid)`` steps.

    ``grid[k]`` is the generator at the left end of step ``k`` (``grid`` has
    one more entry than ``mid``), ``mid[k]`` at its midpoint. ``y`` is
    ``(m, r)``: ``r`` independent columns propagated together.
    """
    half = 0.5 * dt
    for k in range(mid.shape[0]):
        a0 = grid[k]
        am = mid[k]
        a1 = grid[k + 1]
        k1 = a0 @ y
        k2 = am @ (y + half * k1)
        k3 = am @ (y + half * k2)
        k4 = a1 @ (y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def warmup():
    z = np.zeros((2, 1, 1), dtype=np.complex128)
    rk4_linear(z, z[:1], 0.1, np.ones((1, 1), dtype=np.complex128))
