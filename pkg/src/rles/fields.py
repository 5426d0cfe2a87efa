"""Field containers and the differential operators acting on them.

x and z derivatives are spectral; y derivatives are second-order finite
differences on the stretched channel grid (spectral on a periodic box).
Transforms use ``norm="forward"`` so a spectral coefficient is the amplitude
of its mode and the (0, 0) coefficient is the plane average.
"""

from dataclasses import dataclass
import os

import numpy as np
import scipy.fft

from .errors import RepresentationError

SYMMETRIC_INDICES = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


def fft_workers():
    """Worker count for transforms, capped by the ``RLES_THREADS`` variable."""
    value = os.environ.get("RLES_THREADS")
    if value:
        return max(1, int(value))
    return 1


def forward(grid, a):
    """Physical ``(Nx, Nz, Ny)`` -> spectral ``(Nx//2+1, Nz, Ny)``."""
    return scipy.fft.rfftn(a, axes=(1, 0), norm="forward", workers=fft_workers())


def inverse(grid, a_hat):
    """Spectral ``(Nx//2+1, Nz, Ny)`` -> physical ``(Nx, Nz, Ny)``."""
    return scipy.fft.irfftn(a_hat, s=(grid.Nz, grid.Nx), axes=(1, 0), norm="forward",
                            workers=fft_workers())


def layout_weights(grid):
    """Multiplicity of each rfft column (1 for the mean and Nyquist, else 2)."""
    c = np.full(grid.Nx // 2 + 1, 2.0)
    c[0] = 1.0
    c[-1] = 1.0
    return c[:, None, None]


def ddx_hat(grid, a_hat):
    return 1j * grid.kx_d[:, None, None] * a_hat


def ddz_hat(grid, a_hat):
    return 1j * grid.kz_d[None, :, None] * a_hat


def ddy(grid, a):
    """d/dy along the last axis; works on physical or spectral (x, z) data."""
    if grid.periodic_y:
        a_hat = scipy.fft.fft(a, axis=-1, workers=fft_workers())
        out = scipy.fft.ifft(1j * grid.ky_d * a_hat, axis=-1, workers=fft_workers())
        return out.real if np.isrealobj(a) else out
    lo, di, up = grid.first_derivative_stencil
    out = np.empty_like(a)
    out[..., 1:-1] = lo[1:-1] * a[..., :-2] + up[1:-1] * a[..., 2:]
    out[..., 0] = lo[0] * a[..., 0] + di[0] * a[..., 1] + up[0] * a[..., 2]
    out[..., -1] = lo[-1] * a[..., -3] + di[-1] * a[..., -2] + up[-1] * a[..., -1]
    return out


def d2dy2_interior(grid, a):
    """Second derivative at interior channel nodes, shape ``(..., Ny-2)``."""
    lo, di, up = grid.second_derivative_stencil
    return lo * a[..., :-2] + di * a[..., 1:-1] + up * a[..., 2:]


class ScalarField:
    """A scalar on the grid in physical or spectral (x, z) representation."""

    __slots__ = ("grid", "data", "spectral")

    def __init__(self, grid, data, spectral=False):
        expected = grid.spectral_shape if spectral else grid.shape
        data = np.asarray(data)
        if data.shape != tuple(expected):
            kind = "spectral" if spectral else "physical"
            raise RepresentationError(f"{kind} data must have shape {expected}, got {data.shape}")
        if not spectral and np.iscomplexobj(data):
            raise RepresentationError("physical data must be real")
        self.grid = grid
        self.data = data
        self.spectral = spectral

    @classmethod
    def zeros(cls, grid, spectral=False):
        if spectral:
            return cls(grid, np.zeros(grid.spectral_shape, dtype=complex), True)
        return cls(grid, np.zeros(grid.shape))

    def to_spectral(self):
        if self.spectral:
            return self
        return ScalarField(self.grid, forward(self.grid, self.data), spectral=True)

    def to_physical(self):
        if not self.spectral:
            return self
        return ScalarField(self.grid, inverse(self.grid, self.data), spectral=False)

    def copy(self):
        return ScalarField(self.grid, self.data.copy(), self.spectral)

    def __repr__(self):
        kind = "spectral" if self.spectral else "physical"
        return f"ScalarField({kind}, shape={self.data.shape})"


@dataclass
class VelocityField:
    """Streamwise, wall-normal and spanwise velocity components."""

    u: ScalarField
    v: ScalarField
    w: ScalarField

    @classmethod
    def from_arrays(cls, grid, u, v, w, spectral=False):
        return cls(ScalarField(grid, u, spectral), ScalarField(grid, v, spectral),
                   ScalarField(grid, w, spectral))

    @classmethod
    def zeros(cls, grid, spectral=False):
        return cls(*(ScalarField.zeros(grid, spectral) for _ in range(3)))

    @property
    def grid(self):
        return self.u.grid

    @property
    def components(self):
        return (self.u, self.v, self.w)

    def arrays(self):
        return tuple(c.data for c in self.components)

    def to_spectral(self):
        return VelocityField(*(c.to_spectral() for c in self.components))

    def to_physical(self):
        return VelocityField(*(c.to_physical() for c in self.components))

    def copy(self):
        return VelocityField(*(c.copy() for c in self.components))


class SymmetricTensorField:
    """Symmetric rank-2 tensor stored as its six independent components."""

    def __init__(self, components):
        missing = [ij for ij in SYMMETRIC_INDICES if ij not in components]
        if missing:
            raise KeyError(f"missing tensor components {missing}")
        self._c = {ij: components[ij] for ij in SYMMETRIC_INDICES}

    @classmethod
    def from_arrays(cls, grid, arrays, spectral=False):
        """``arrays`` maps each of the six (i, j) with i <= j to an ndarray."""
        return cls({ij: ScalarField(grid, arrays[ij], spectral) for ij in SYMMETRIC_INDICES})

    @classmethod
    def zeros(cls, grid):
        return cls({ij: ScalarField.zeros(grid) for ij in SYMMETRIC_INDICES})

    def __getitem__(self, ij):
        i, j = ij
        return self._c[(i, j) if i <= j else (j, i)]

    def items(self):
        return self._c.items()

    @property
    def grid(self):
        return self._c[(0, 0)].grid

    def to_physical(self):
        return SymmetricTensorField({ij: c.to_physical() for ij, c in self._c.items()})

    def to_spectral(self):
        return SymmetricTensorField({ij: c.to_spectral() for ij, c in self._c.items()})

    def as_matrix(self):
        """Physical components as a ``(3, 3, Nx, Nz, Ny)`` array."""
        phys = self.to_physical()
        return np.array([[phys[i, j].data for j in range(3)] for i in range(3)])

    def norms(self):
        """Euclidean norm of each physical component."""
        phys = self.to_physical()
        return {ij: float(np.linalg.norm(c.data)) for ij, c in phys.items()}


def gradient_from_arrays(grid, phys, hats):
    """Gradient from matching physical and spectral component arrays."""
    g = np.empty((3, 3) + tuple(grid.shape))
    for i in range(3):
        g[i, 0] = inverse(grid, ddx_hat(grid, hats[i]))
        g[i, 1] = ddy(grid, phys[i])
        g[i, 2] = inverse(grid, ddz_hat(grid, hats[i]))
    return g


def gradient_tensor(vel):
    """Velocity gradient ``g[i, l] = d u_i / d x_l`` as a physical ndarray.

    Shape is ``(3, 3, Nx, Nz, Ny)``.
    """
    phys = [c.to_physical().data for c in vel.components]
    hats = [c.to_spectral().data for c in vel.components]
    return gradient_from_arrays(vel.grid, phys, hats)


def divergence_hat(grid, u_hat, v_hat, w_hat):
    return ddx_hat(grid, u_hat) + ddy(grid, v_hat) + ddz_hat(grid, w_hat)


def divergence(vel):
    """Discrete divergence with the same operators as :func:`gradient_tensor`."""
    grid = vel.grid
    u_hat, v_hat, w_hat = (c.to_spectral().data for c in vel.components)
    return ScalarField(grid, inverse(grid, divergence_hat(grid, u_hat, v_hat, w_hat)))


def relative_divergence(vel):
    """``max|div u| / max|u|`` (lengths in half-widths)."""
    phys = vel.to_physical()
    scale = max(np.abs(a).max() for a in phys.arrays())
    if scale == 0.0:
        return 0.0
    return float(np.abs(divergence(vel).data).max() / scale)


def dealias(field):
    """Zero the modes removed by the 2/3 rule.  Input must be spectral."""
    if not field.spectral:
        raise RepresentationError("dealias requires a spectral field")
    return ScalarField(field.grid, field.data * field.grid.dealias_mask, spectral=True)


def kinetic_energy(vel):
    """Volume-averaged kinetic energy ``<u_i u_i> / 2`` with nodal y weights."""
    grid = vel.grid
    wy = grid.weights / grid.weights.sum()
    total = 0.0
    for a in vel.to_physical().arrays():
        total += np.sum(np.mean(a * a, axis=(0, 1)) * wy)
    return 0.5 * total
