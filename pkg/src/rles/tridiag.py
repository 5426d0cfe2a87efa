"""Batched tridiagonal solves along the last axis.

The factorization is computed once and reused, which suits the
time-independent wall-normal operators of the solver.  Internally the
system index is moved to the front so each elimination sweep touches one
contiguous row of all pencils.
"""

import numpy as np


class TridiagonalSolver:
    """Thomas algorithm for many independent systems.

    ``lower``, ``diag`` and ``upper`` broadcast to a common shape
    ``(..., n)``; ``lower[..., 0]`` and ``upper[..., -1]`` are ignored.
    No pivoting is done, so the systems should be diagonally dominant.
    """

    def __init__(self, lower, diag, upper):
        lower, diag, upper = np.broadcast_arrays(lower, diag, upper)
        n = diag.shape[-1]
        lo = np.moveaxis(lower, -1, 0)
        di = np.moveaxis(diag, -1, 0)
        up = np.moveaxis(upper, -1, 0)
        cp = np.empty(di.shape, dtype=np.result_type(di, 1.0))
        inv = np.empty_like(cp)
        denom = di[0]
        inv[0] = 1.0 / denom
        cp[0] = up[0] * inv[0]
        for i in range(1, n):
            denom = di[i] - lo[i] * cp[i - 1]
            inv[i] = 1.0 / denom
            cp[i] = up[i] * inv[i]
        if not np.all(np.isfinite(inv)):
            raise ArithmeticError("singular tridiagonal system")
        self.n = n
        self._lo = np.ascontiguousarray(lo)
        self._cp = cp
        self._inv = inv

    def solve(self, rhs):
        """Solve for right-hand sides of shape ``(..., n)``."""
        r = np.moveaxis(np.asarray(rhs), -1, 0)
        out_shape = np.broadcast_shapes(r.shape, self._inv.shape)
        x = np.empty(out_shape, dtype=np.result_type(r, self._inv))
        x[0] = r[0] * self._inv[0]
        for i in range(1, self.n):
            x[i] = (r[i] - self._lo[i] * x[i - 1]) * self._inv[i]
        for i in range(self.n - 2, -1, -1):
            x[i] -= self._cp[i] * x[i + 1]
        return np.moveaxis(x, 0, -1)
