"""Gaussian filter, its Taylor and Pade approximants, and the smoothing solve.

With ``x = delta**2 |k|**2 / (4 gamma)`` the Gaussian transfer function is
``exp(-x)``.  The gradient model follows from its first-order Taylor
polynomial ``1 - x``; the rational model from the (0, 1) Pade approximant
``1 / (1 + x)``, whose inverse is the Helmholtz operator
``I - delta**2 / (4 gamma) * Laplacian``.
"""

from dataclasses import dataclass
import math

import numpy as np
import scipy.fft

from .errors import ConfigurationError
from .fields import ScalarField, d2dy2_interior, fft_workers
from .tridiag import TridiagonalSolver

KINDS = ("gaussian", "taylor", "pade")


@dataclass(frozen=True)
class FilterParams:
    """Gaussian shape parameter and filter width.

    ``delta`` is a scalar for periodic boxes or a length-``Ny`` profile in
    the channel.
    """

    gamma: float = 6.0
    delta: object = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigurationError("gamma", f"must be positive, got {self.gamma}")
        if np.any(np.asarray(self.delta) < 0):
            raise ConfigurationError("delta", "must be non-negative")

    @property
    def coefficient(self):
        """``delta**2 / (4 gamma)``, broadcastable along y."""
        return np.asarray(self.delta, dtype=float) ** 2 / (4.0 * self.gamma)


def transfer_function(kind, k2, params):
    """Transfer function of the requested ``kind`` at squared wavenumber ``k2``."""
    x = params.coefficient * np.asarray(k2, dtype=float)
    if kind == "gaussian":
        return np.exp(-x)
    if kind == "taylor":
        return 1.0 - x
    if kind == "pade":
        return 1.0 / (1.0 + x)
    raise ValueError(f"unknown transfer function kind {kind!r}; expected one of {KINDS}")


def transfer_curves(x_max=4.0, points=201):
    """Rows ``(x, gaussian, taylor, pade)`` over ``0 <= x <= x_max``."""
    x = np.linspace(0.0, x_max, points)
    return np.column_stack([x, np.exp(-x), 1.0 - x, 1.0 / (1.0 + x)])


def _box_k2(grid):
    """Full |k|^2 on a periodic box in the (kx, kz, ky) spectral layout."""
    return grid.k2_xz + grid.ky[None, None, :] ** 2


def gaussian_kernel_matrix(grid, delta, gamma):
    """Row-normalized Gaussian convolution matrix along y for the channel.

    Row ``i`` uses the width at ``y[i]``, truncated at four standard
    deviations; weights include the nodal quadrature and are rescaled to
    unit sum next to the walls.
    """
    y = grid.y
    delta = np.broadcast_to(np.asarray(delta, dtype=float), y.shape)
    sigma = delta / math.sqrt(2.0 * gamma)
    dist = y[None, :] - y[:, None]
    arg = np.full(dist.shape, np.inf)
    pos = sigma > 0
    arg[pos] = dist[pos] / sigma[pos, None]
    np.fill_diagonal(arg, 0.0)
    kernel = np.exp(-0.5 * arg**2) * grid.weights[None, :]
    kernel[np.abs(arg) > 4.0] = 0.0
    return kernel / kernel.sum(axis=1, keepdims=True)


def apply_gaussian_filter(field, params):
    """Gaussian-filter ``field``; returns a field in the input's representation."""
    grid = field.grid
    f_hat = field.to_spectral().data
    c = params.coefficient
    if grid.periodic_y:
        g_hat = scipy.fft.fft(f_hat, axis=-1, workers=fft_workers())
        g_hat *= np.exp(-c * _box_k2(grid))
        f_hat = scipy.fft.ifft(g_hat, axis=-1, workers=fft_workers())
    else:
        f_hat = f_hat * np.exp(-c * grid.k2_xz)
        kernel = gaussian_kernel_matrix(grid, params.delta, params.gamma)
        f_hat = f_hat @ kernel.T
    out = ScalarField(grid, f_hat, spectral=True)
    return out if field.spectral else out.to_physical()


class HelmholtzOperator:
    """Factorized ``(I - c(y) Laplacian)`` with homogeneous Dirichlet walls.

    ``c(y) = delta(y)**2 / (4 gamma)`` multiplies the Laplacian pointwise.
    On a periodic box the inverse is applied exactly in Fourier space.
    """

    def __init__(self, grid, params):
        self.grid = grid
        self.params = params
        c = np.broadcast_to(params.coefficient, (grid.Ny,)).astype(float)
        if grid.periodic_y:
            self._symbol = 1.0 / (1.0 + c * _box_k2(grid))
            return
        ci = c[1:-1]
        lo, di, up = grid.second_derivative_stencil
        diag = 1.0 + ci * grid.k2_xz - ci * di
        self._solver = TridiagonalSolver(-ci * lo, diag, -ci * up)

    def solve_hat(self, rhs_hat):
        """Apply the inverse to spectral (x, z) data of shape ``(Nx//2+1, Nz, Ny)``."""
        if self.grid.periodic_y:
            g = scipy.fft.fft(rhs_hat, axis=-1, workers=fft_workers())
            return scipy.fft.ifft(g * self._symbol, axis=-1, workers=fft_workers())
        out = np.zeros(np.broadcast_shapes(rhs_hat.shape, self.grid.spectral_shape), dtype=complex)
        out[..., 1:-1] = self._solver.solve(rhs_hat[..., 1:-1])
        return out

    def apply_hat(self, f_hat):
        """The forward operator at interior nodes (walls returned as zero)."""
        out = np.zeros_like(f_hat)
        c = np.broadcast_to(self.params.coefficient, (self.grid.Ny,))[1:-1]
        out[..., 1:-1] = (f_hat[..., 1:-1] * (1.0 + c * self.grid.k2_xz)
                          - c * d2dy2_interior(self.grid, f_hat))
        return out


def helmholtz_inverse(rhs, params, grid=None):
    """Solve ``(I - delta**2/(4 gamma) Laplacian) f = rhs`` for ``f``.

    The channel solve is a tridiagonal system per (kx, kz) pencil with
    ``f = 0`` at both walls.  Returns a spectral field.
    """
    grid = grid if grid is not None else rhs.grid
    op = HelmholtzOperator(grid, params)
    return ScalarField(grid, op.solve_hat(rhs.to_spectral().data), spectral=True)
