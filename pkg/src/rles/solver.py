"""Fractional-step time integration of the filtered channel equations.

One step: explicit skew-symmetric convection plus subfilter forcing
(Adams-Bashforth 2, Euler on the first step), Crank-Nicolson viscous solve
per (kx, kz) pencil, exact discrete projection, constant-mass-flux
correction, and damping of the highest retained Fourier mode.

Velocities are in units of the reference velocity, lengths in channel
half-widths, and ``nu = 1 / re``.
"""

from dataclasses import dataclass, field, replace
from functools import lru_cache
import math

import numpy as np

from .errors import ConfigurationError, SolverDivergenceError
from .fields import (VelocityField, ScalarField, d2dy2_interior, divergence_hat, forward,
                     gradient_from_arrays, inverse)
from .grid import GridConfig, build_grid
from .sgs import SgsConfig, SubgridModel, sgs_force_hat
from .tridiag import TridiagonalSolver

NAN_CHECK_INTERVAL = 100


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run.

    ``u_m`` is the target bulk velocity; ``None`` disables forcing and the
    mass-flux controller.  ``re = inf`` gives inviscid flow.
    """

    dt: float = 2e-4
    n_steps: int = 100
    u_m: float = 15.63
    re: float = 180.0
    sgs: SgsConfig = field(default_factory=SgsConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    stabilizer_alpha: float = 0.0
    seed: int = 0
    perturbation: float = 0.0
    transient_steps: int = 0
    checkpoint_every: int = 0
    dealias: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("run.dt", f"must be positive, got {self.dt}")
        if not 0.0 <= self.stabilizer_alpha <= 0.05:
            raise ConfigurationError("run.stabilizer_alpha", f"must lie in [0, 0.05], got {self.stabilizer_alpha}")
        if not self.re > 0:
            raise ConfigurationError("run.re", f"must be positive, got {self.re}")
        if self.n_steps < 0:
            raise ConfigurationError("run.n_steps", f"must be non-negative, got {self.n_steps}")
        if self.perturbation < 0:
            raise ConfigurationError("run.perturbation", f"must be non-negative, got {self.perturbation}")
        if self.transient_steps < 0 or self.checkpoint_every < 0:
            raise ConfigurationError("run.transient_steps", "step counts must be non-negative")

    @property
    def nu(self):
        return 0.0 if math.isinf(self.re) else 1.0 / self.re


@dataclass
class SolverState:
    """Velocity (physical space) plus the bookkeeping needed to continue.

    ``dpdx`` is the mean driving pressure gradient stored as the positive
    body force ``-dP/dx``.  ``history`` holds the previous explicit
    right-hand side (spectral) for Adams-Bashforth; ``None`` before the
    first step.
    """

    vel: VelocityField
    dpdx: float = 0.0
    t: float = 0.0
    step: int = 0
    nu: float = 0.0
    history: tuple = None

    def copy(self):
        hist = None if self.history is None else tuple(h.copy() for h in self.history)
        return replace(self, vel=self.vel.copy(), history=hist)


def bulk_velocity(grid, u):
    """Volume-averaged streamwise velocity of a physical array."""
    return float(np.dot(np.mean(u, axis=(0, 1)), grid.bulk_weights))


def _bulk_hat(grid, u_hat):
    return float(np.dot(u_hat[0, 0].real, grid.bulk_weights))


class Projector:
    """Exact discrete projection onto divergence-free fields.

    For every (kx, kz) pencil the correction is the weighted least-squares
    one: ``u <- u - W^-1 D^H lam`` with ``(D W^-1 D^H) lam = D u``, where D
    is the discrete divergence at all Ny nodes acting on interior velocity
    values and W holds the nodal y weights.  Pencils with no resolved
    horizontal wavenumber only admit ``v = 0``.
    """

    def __init__(self, grid):
        self.grid = grid
        n = grid.Ny
        lo, di, up = grid.first_derivative_stencil
        d = np.zeros((n, n))
        for j in range(1, n - 1):
            d[j, j - 1] = lo[j]
            d[j, j + 1] = up[j]
        d[0, :3] = lo[0], di[0], up[0]
        d[-1, -3:] = lo[-1], di[-1], up[-1]
        self.d_int = d[:, 1:-1]
        self.w_int = grid.weights[1:-1]
        winv = 1.0 / self.w_int
        b = (self.d_int * winv) @ self.d_int.T
        m = np.zeros(n)
        m[1:-1] = winv
        k2 = grid.kx_d[:, None] ** 2 + grid.kz_d[None, :] ** 2
        self.resolved = k2 > 0
        a = k2[self.resolved][:, None, None] * np.diag(m) + b
        # symmetric diagonal scaling keeps the explicit inverse well conditioned
        s = 1.0 / np.sqrt(np.einsum("pii->pi", a))
        a_inv = np.linalg.inv(a * s[:, :, None] * s[:, None, :])
        self.a_inv = a_inv * s[:, :, None] * s[:, None, :]

    def project_hat(self, u_hat, v_hat, w_hat):
        """Project spectral components in place; returns the pressure-like potential."""
        grid = self.grid
        rhs = divergence_hat(grid, u_hat, v_hat, w_hat)[self.resolved]
        lam_r = np.empty_like(rhs)
        lam_r.real = np.einsum("pij,pj->pi", self.a_inv, rhs.real)
        lam_r.imag = np.einsum("pij,pj->pi", self.a_inv, rhs.imag)
        lam = np.zeros(grid.spectral_shape, dtype=complex)
        lam[self.resolved] = lam_r
        li = lam[..., 1:-1] / self.w_int
        u_hat[..., 1:-1] += 1j * grid.kx_d[:, None, None] * li
        w_hat[..., 1:-1] += 1j * grid.kz_d[None, :, None] * li
        v_hat[..., 1:-1] -= (lam @ self.d_int) / self.w_int
        v_hat[~self.resolved] = 0.0
        return -lam / grid.weights


@lru_cache(maxsize=8)
def projector_for(grid):
    return Projector(grid)


def pressure_projection(vel):
    """Divergence-free part of ``vel`` and the scalar potential removed from it.

    Returns ``(VelocityField, ScalarField)``; the potential is spectral and
    its gradient (in the discrete sense of the projection) was subtracted.
    """
    grid = vel.grid
    hats = [c.to_spectral().data.copy() for c in vel.components]
    for h in hats:
        h[..., 0] = 0.0
        h[..., -1] = 0.0
    phi = projector_for(grid).project_hat(*hats)
    out = VelocityField.from_arrays(grid, *hats, spectral=True)
    return out.to_physical(), ScalarField(grid, phi, spectral=True)


def mode_filter_factors(grid, alpha, top_x=None, top_z=None):
    """Multipliers damping the highest retained x and z modes by ``1 - alpha``."""
    top_x = grid.top_mode_x if top_x is None else top_x
    top_z = grid.top_mode_z if top_z is None else top_z
    fx = np.where(grid.mx == top_x, 1.0 - alpha, 1.0)
    fz = np.where(np.abs(grid.mz) == top_z, 1.0 - alpha, 1.0)
    return (fx[:, None] * fz[None, :])[:, :, None]


def stabilizing_mode_filter(vel, alpha, top_x=None, top_z=None):
    """Scale the highest retained Fourier mode in x and in z by ``1 - alpha``."""
    if not 0.0 <= alpha <= 0.05:
        raise ConfigurationError("stabilizer_alpha", f"must lie in [0, 0.05], got {alpha}")
    if alpha == 0.0:
        return vel
    grid = vel.grid
    factors = mode_filter_factors(grid, alpha, top_x, top_z)
    was_spectral = vel.u.spectral
    hats = [c.to_spectral().data * factors for c in vel.components]
    out = VelocityField.from_arrays(grid, *hats, spectral=True)
    return out if was_spectral else out.to_physical()


def laminar_profile(grid, u_m):
    return 1.5 * u_m * (1.0 - grid.y**2)


def initial_condition(grid, u_m, amplitude=0.0, seed=0, max_mode=4, dealias=True):
    """Poiseuille flow plus a divergence-free random perturbation.

    The perturbation occupies low (kx, kz) modes with smooth wall-normal
    profiles vanishing at the walls; its volume rms is ``amplitude * u_m``.
    The same seed always gives the same field.
    """
    if amplitude < 0:
        raise ConfigurationError("perturbation", f"must be non-negative, got {amplitude}")
    base = np.broadcast_to(laminar_profile(grid, u_m), grid.shape).copy()
    zero = np.zeros(grid.shape)
    if amplitude == 0.0:
        return VelocityField.from_arrays(grid, base, zero, zero.copy())

    rng = np.random.default_rng(seed)
    lim_x = min(max_mode, grid.top_mode_x if dealias else grid.Nx // 2 - 1)
    lim_z = min(max_mode, grid.top_mode_z if dealias else grid.Nz // 2 - 1)
    keep = (grid.mx[:, None] <= lim_x) & (np.abs(grid.mz)[None, :] <= lim_z)
    keep[0, 0] = False
    n_prof = 6
    eta = 0.5 * (grid.y + 1.0)
    profiles = np.array([np.sin((q + 1) * math.pi * eta) for q in range(n_prof)])
    profiles *= 1.0 - grid.y**2
    hats = []
    for _ in range(3):
        coef = rng.standard_normal(grid.spectral_shape[:2] + (n_prof, 2))
        coef = (coef[..., 0] + 1j * coef[..., 1]) * keep[:, :, None]
        h = np.einsum("xzq,qy->xzy", coef, profiles)
        hats.append(forward(grid, inverse(grid, h)))
    projector_for(grid).project_hat(*hats)
    pert = [inverse(grid, h) for h in hats]
    wy = grid.weights / grid.weights.sum()
    rms = math.sqrt(sum(np.sum(np.mean(p * p, axis=(0, 1)) * wy) for p in pert) / 3.0)
    scale = amplitude * u_m / rms
    u, v, w = (p * scale for p in pert)
    return VelocityField.from_arrays(grid, base + u, v, w)


class ChannelSolver:
    """Time stepper bound to one run configuration.

    All wall-normal operators are time independent and factorized once.
    """

    def __init__(self, config, grid=None):
        self.config = config
        self.grid = grid if grid is not None else build_grid(config.grid)
        self.nu = config.nu
        self.dt = config.dt
        self.model = SubgridModel(config.sgs, self.grid)
        self.projector = projector_for(self.grid)
        g = self.grid
        self._mask = g.dealias_mask if config.dealias else None
        if config.dealias:
            top_x, top_z = g.top_mode_x, g.top_mode_z
        else:
            top_x, top_z = g.Nx // 2 - 1, g.Nz // 2 - 1
        self._mode_factors = (mode_filter_factors(g, config.stabilizer_alpha, top_x, top_z)
                              if config.stabilizer_alpha > 0 else None)

        alpha = 0.5 * self.nu * self.dt
        lo, di, up = g.second_derivative_stencil
        self._alpha = alpha
        self._viscous = TridiagonalSolver(-alpha * lo, 1.0 + alpha * g.k2_xz - alpha * di,
                                          -alpha * up)
        self._viscous_mean = TridiagonalSolver(-alpha * lo, 1.0 - alpha * di, -alpha * up)
        # response of one implicit step to a unit uniform streamwise force
        self._unit_response = np.zeros(g.Ny)
        self._unit_response[1:-1] = self._viscous_mean.solve(np.full(g.Ny - 2, self.dt))
        self.last_tau12_mean = np.zeros(g.Ny)
        self.max_u_history = []

    def initial_state(self):
        cfg = self.config
        u_m = cfg.u_m if cfg.u_m is not None else 0.0
        vel = initial_condition(self.grid, u_m, cfg.perturbation, cfg.seed, dealias=cfg.dealias)
        return self.state_from_velocity(vel)

    def state_from_velocity(self, vel, t=0.0, step=0):
        cfg = self.config
        dpdx = 3.0 * self.nu * cfg.u_m if cfg.u_m is not None else 0.0
        return SolverState(vel=vel.to_physical(), dpdx=dpdx, t=t, step=step, nu=self.nu)

    # -- pieces of one step ---------------------------------------------------

    def explicit_rhs(self, phys, hats):
        """Spectral ``-(skew-symmetric convection) - div(tau)`` for each component."""
        g = self.grid
        grad = gradient_from_arrays(g, phys, hats)
        flux = {}
        for i, j in ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)):
            flux[(i, j)] = forward(g, 0.5 * phys[i] * phys[j])
        tau = self.model.stress(VelocityField.from_arrays(g, *phys), grad) if self.model.active else None
        if tau is not None:
            tau_hat = tau.to_spectral()
            for ij, c in tau_hat.items():
                flux[ij] = flux[ij] + c.data
            self.last_tau12_mean = tau_hat[0, 1].data[0, 0].real.copy()
        rhs = sgs_force_hat(g, flux)
        for i in range(3):
            adv = phys[0] * grad[i, 0] + phys[1] * grad[i, 1] + phys[2] * grad[i, 2]
            rhs[i] = rhs[i] - forward(g, 0.5 * adv)
            if self._mask is not None:
                rhs[i] = rhs[i] * self._mask
        return rhs

    def viscous_solve(self, hat, explicit):
        """Crank-Nicolson update of one component given its explicit increment."""
        g = self.grid
        rhs = hat[..., 1:-1] + explicit[..., 1:-1]
        if self._alpha:
            rhs = rhs + self._alpha * (d2dy2_interior(g, hat) - g.k2_xz * hat[..., 1:-1])
        out = np.zeros_like(hat)
        out[..., 1:-1] = self._viscous.solve(rhs)
        return out

    def mass_flux_correction(self, u_hat, target):
        """Add the implicit response to a uniform force so the bulk velocity is ``target``.

        Modifies ``u_hat`` in place and returns the force increment.
        """
        resp = self._unit_response
        correction = (target - _bulk_hat(self.grid, u_hat)) / float(np.dot(resp, self.grid.bulk_weights))
        u_hat[0, 0] += correction * resp
        return correction

    def mass_flux_controller(self, state, u_m=None):
        """Return a copy of ``state`` whose bulk velocity equals ``u_m``."""
        target = self.config.u_m if u_m is None else u_m
        u_hat = state.vel.u.to_spectral().data.copy()
        correction = self.mass_flux_correction(u_hat, target)
        vel = VelocityField(ScalarField(self.grid, inverse(self.grid, u_hat)),
                            state.vel.v.copy(), state.vel.w.copy())
        return replace(state, vel=vel, dpdx=state.dpdx + correction)

    # -- stepping -------------------------------------------------------------

    def step(self, state):
        """Advance ``state`` by one time step and return the new state."""
        g = self.grid
        cfg = self.config
        dt = self.dt
        phys = [c.data for c in state.vel.to_physical().components]
        hats = [forward(g, a) for a in phys]
        rhs = self.explicit_rhs(phys, hats)
        if state.history is None:
            incr = [dt * r for r in rhs]
        else:
            incr = [dt * (1.5 * r - 0.5 * h) for r, h in zip(rhs, state.history)]
        forcing = cfg.u_m is not None
        if forcing:
            incr[0][0, 0, 1:-1] += dt * state.dpdx
        new = [self.viscous_solve(h, inc) for h, inc in zip(hats, incr)]
        self.projector.project_hat(*new)
        dpdx = state.dpdx
        if forcing:
            dpdx += self.mass_flux_correction(new[0], cfg.u_m)
        if self._mode_factors is not None:
            new = [h * self._mode_factors for h in new]
        vel = VelocityField.from_arrays(g, *(inverse(g, h) for h in new))
        step = state.step + 1
        out = SolverState(vel=vel, dpdx=dpdx, t=state.t + dt, step=step, nu=self.nu,
                          history=tuple(rhs))
        if step % NAN_CHECK_INTERVAL == 0:
            self.check_finite(out)
        return out

    def check_finite(self, state):
        arrays = state.vel.arrays()
        peak = max(float(np.max(np.abs(a))) for a in arrays)
        self.max_u_history.append((state.step, peak))
        if not (math.isfinite(peak) and math.isfinite(state.dpdx)):
            raise SolverDivergenceError(state.step, self.max_u_history)

    def advance(self, state, n_steps, callback=None):
        """Take ``n_steps`` steps, calling ``callback(state)`` after each."""
        for _ in range(n_steps):
            state = self.step(state)
            if callback is not None:
                callback(state)
        return state
