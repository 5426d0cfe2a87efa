"""Channel discretization: Fourier in x and z, stretched finite differences in y.

Arrays on the grid are stored with shape ``(Nx, Nz, Ny)`` so that each
wall-normal pencil is contiguous in memory.  The spectral (x, z) layout is
``(Nx//2 + 1, Nz, Ny)``: a real-to-complex transform along x followed by a
complex transform along z.
"""

from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np

from .errors import ConfigurationError

DELTA_FLOOR = 1e-8


@dataclass(frozen=True)
class GridConfig:
    """Domain size and resolution.  Lengths are in channel half-widths."""

    Lx: float = 4.0 * math.pi
    Lz: float = 4.0 * math.pi / 3.0
    Nx: int = 36
    Ny: int = 37
    Nz: int = 36
    stretch_beta: float = 2.2

    def __post_init__(self):
        for name in ("Nx", "Nz"):
            n = getattr(self, name)
            if int(n) != n or n < 8 or n % 2:
                raise ConfigurationError(name, f"must be an even integer >= 8, got {n}")
        if int(self.Ny) != self.Ny or self.Ny < 9 or self.Ny % 2 == 0:
            raise ConfigurationError("Ny", f"must be an odd integer >= 9, got {self.Ny}")
        for name in ("Lx", "Lz"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(name, f"must be positive, got {getattr(self, name)}")
        if not self.stretch_beta > 0:
            raise ConfigurationError("stretch_beta", f"must be positive, got {self.stretch_beta}")

    @property
    def Ly(self):
        return 2.0


def _fourier_wavenumbers(n, length):
    """Real-to-complex and full wavenumber tables for ``n`` points on ``length``."""
    k_half = 2.0 * math.pi / length * np.arange(n // 2 + 1)
    k_full = 2.0 * math.pi / length * np.fft.fftfreq(n, d=1.0 / n)
    return k_half, k_full


def _without_nyquist(k, n):
    k = k.copy()
    k[n // 2] = 0.0
    return k


class _PeriodicXZ:
    """Shared Fourier machinery of the x and z directions."""

    Nx: int
    Nz: int
    Lx: float
    Lz: float

    def _init_xz(self):
        self.x = self.Lx * np.arange(self.Nx) / self.Nx
        self.z = self.Lz * np.arange(self.Nz) / self.Nz
        self.kx, _ = _fourier_wavenumbers(self.Nx, self.Lx)
        _, self.kz = _fourier_wavenumbers(self.Nz, self.Lz)
        # derivative wavenumbers: the Nyquist mode has no real-valued derivative
        self.kx_d = _without_nyquist(self.kx, self.Nx)
        self.kz_d = _without_nyquist(self.kz, self.Nz)
        self.mx = np.arange(self.Nx // 2 + 1)
        self.mz = np.rint(np.fft.fftfreq(self.Nz, d=1.0 / self.Nz)).astype(int)

    @property
    def shape(self):
        return (self.Nx, self.Nz, self.Ny)

    @property
    def spectral_shape(self):
        return (self.Nx // 2 + 1, self.Nz, self.Ny)

    @property
    def dx(self):
        return self.Lx / self.Nx

    @property
    def dz(self):
        return self.Lz / self.Nz

    @cached_property
    def k2_xz(self):
        """|k|^2 over the (kx, kz) plane, shape ``(Nx//2+1, Nz, 1)``."""
        return (self.kx[:, None] ** 2 + self.kz[None, :] ** 2)[:, :, None]

    @cached_property
    def dealias_mask(self):
        """Boolean mask of retained (kx, kz) modes under the 2/3 rule."""
        keep_x = 3 * np.abs(self.mx) <= self.Nx
        keep_z = 3 * np.abs(self.mz) <= self.Nz
        return (keep_x[:, None] & keep_z[None, :])[:, :, None]

    @property
    def top_mode_x(self):
        return self.Nx // 3

    @property
    def top_mode_z(self):
        return self.Nz // 3


class ChannelGrid(_PeriodicXZ):
    """Channel geometry with walls at ``y = -1`` and ``y = +1``.

    Attributes
    ----------
    y : (Ny,) wall-normal coordinates, tanh-stretched toward both walls
    dy : (Ny-1,) cell widths
    kx, kz : Fourier wavenumbers (rfft and fft layouts)
    delta : (Ny,) filter-width profile
    """

    periodic_y = False

    def __init__(self, config):
        self.config = config
        self.Nx, self.Ny, self.Nz = config.Nx, config.Ny, config.Nz
        self.Lx, self.Lz = config.Lx, config.Lz
        self.Ly = 2.0
        self._init_xz()

        self.s = np.linspace(-1.0, 1.0, self.Ny)
        self.s = 0.5 * (self.s - self.s[::-1])
        beta = config.stretch_beta
        y = np.tanh(beta * self.s) / math.tanh(beta)
        y = 0.5 * (y - y[::-1])
        y[0], y[-1] = -1.0, 1.0
        self.y = y
        self.dy = np.diff(y)
        self.center = self.Ny // 2
        self.delta = filter_width_profile(self)
        for name in ("y", "s", "dy", "delta", "x", "z", "kx", "kz", "kx_d", "kz_d"):
            getattr(self, name).flags.writeable = False

    def __repr__(self):
        c = self.config
        return f"ChannelGrid({c.Nx}x{c.Ny}x{c.Nz}, Lx={c.Lx:.4g}, Lz={c.Lz:.4g}, beta={c.stretch_beta})"

    @cached_property
    def weights(self):
        """Nodal quadrature weights in y.

        Interior weights are half the distance between neighbours, which makes
        the central first difference skew-adjoint for functions that vanish
        at the walls.  They sum to 2.
        """
        w = np.empty(self.Ny)
        w[1:-1] = 0.5 * (self.y[2:] - self.y[:-2])
        w[0] = 0.5 * self.dy[0]
        w[-1] = 0.5 * self.dy[-1]
        return w

    @cached_property
    def bulk_weights(self):
        """Composite Simpson weights normalized to unit sum (exact for quadratics)."""
        w = np.zeros(self.Ny)
        for j in range(0, self.Ny - 2, 2):
            h0, h1 = self.dy[j], self.dy[j + 1]
            hs = h0 + h1
            w[j] += hs / 6.0 * (2.0 - h1 / h0)
            w[j + 1] += hs**3 / (6.0 * h0 * h1)
            w[j + 2] += hs / 6.0 * (2.0 - h0 / h1)
        return w / w.sum()

    @cached_property
    def first_derivative_stencil(self):
        """Three-point weights ``(a, b, c)`` per node for d/dy.

        Interior node j uses ``a*f[j-1] + b*f[j] + c*f[j+1]`` with the
        central difference over ``y[j+1] - y[j-1]``.  The wall rows hold
        second-order one-sided weights for ``f[0], f[1], f[2]`` and
        ``f[-3], f[-2], f[-1]`` respectively.
        """
        y = self.y
        n = self.Ny
        a = np.zeros(n)
        b = np.zeros(n)
        c = np.zeros(n)
        span = y[2:] - y[:-2]
        a[1:-1] = -1.0 / span
        c[1:-1] = 1.0 / span
        a[0], b[0], c[0] = one_sided_weights(y[0], y[1], y[2])
        # at the top wall the stencil runs f[-3], f[-2], f[-1]
        w3, w2, w1 = one_sided_weights(y[-1], y[-2], y[-3])
        a[-1], b[-1], c[-1] = w1, w2, w3
        return a, b, c

    @cached_property
    def second_derivative_stencil(self):
        """Three-point weights for d2/dy2 at interior nodes (exact for quadratics)."""
        h0 = self.dy[:-1]
        h1 = self.dy[1:]
        a = 2.0 / (h0 * (h0 + h1))
        b = -2.0 / (h0 * h1)
        c = 2.0 / (h1 * (h0 + h1))
        return a, b, c


def one_sided_weights(y0, y1, y2):
    """Weights of f(y0), f(y1), f(y2) for f'(y0) from the quadratic interpolant."""
    d1 = y1 - y0
    d2 = y2 - y0
    w1 = d2 / (d1 * (d2 - d1))
    w2 = -d1 / (d2 * (d2 - d1))
    return -(w1 + w2), w1, w2


class PeriodicBox(_PeriodicXZ):
    """Triply periodic cube of side ``length`` with ``n`` points per direction.

    Uses the same ``(x, z, y)`` array layout as the channel; y is Fourier too.
    """

    periodic_y = True

    def __init__(self, n, length=2.0 * math.pi):
        if int(n) != n or n < 8 or n % 2:
            raise ConfigurationError("n", f"must be an even integer >= 8, got {n}")
        self.Nx = self.Ny = self.Nz = int(n)
        self.Lx = self.Ly = self.Lz = float(length)
        self._init_xz()
        self.y = self.Ly * np.arange(self.Ny) / self.Ny
        _, self.ky = _fourier_wavenumbers(self.Ny, self.Ly)
        self.ky_d = _without_nyquist(self.ky, self.Ny)

    def __repr__(self):
        return f"PeriodicBox(n={self.Nx}, length={self.Lx:.4g})"

    @property
    def h(self):
        return self.Lx / self.Nx

    @cached_property
    def weights(self):
        return np.full(self.Ny, self.Ly / self.Ny)


def build_grid(config):
    """Construct the channel grid described by ``config``."""
    if not isinstance(config, GridConfig):
        config = GridConfig(**config)
    return ChannelGrid(config)


def filter_width_profile(grid):
    """Filter width ``delta(y) = (dx * dz * dy(y))**(1/3)``.

    ``dy(y) = 2 h_c cos(pi y / 2)`` vanishes at the walls and equals twice the
    centreline cell width ``h_c`` on the centreline.  Wall values are floored
    at ``DELTA_FLOOR``.
    """
    h_c = grid.y[grid.center + 1] - grid.y[grid.center]
    dy_eff = 2.0 * h_c * np.cos(0.5 * math.pi * grid.y)
    dy_eff[0] = dy_eff[-1] = 0.0
    delta = np.cbrt(grid.dx * grid.dz * dy_eff)
    return np.maximum(delta, DELTA_FLOOR)
