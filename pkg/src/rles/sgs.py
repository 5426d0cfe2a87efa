"""Subfilter-stress closures: none, Smagorinsky, gradient and rational (RLES).

All models return the full stress tensor, trace included; the isotropic
part is absorbed by the pressure.  Index 0, 1, 2 is x, y, z throughout.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .fields import (SYMMETRIC_INDICES, ScalarField, SymmetricTensorField, VelocityField,
                     ddx_hat, ddy, ddz_hat, gradient_tensor, inverse)
from .filters import FilterParams, HelmholtzOperator

MODELS = ("none", "smagorinsky", "gradient", "rles")


@dataclass(frozen=True)
class SgsConfig:
    model: str = "none"
    cs: float = 0.1
    filter: FilterParams = field(default_factory=FilterParams)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigurationError("sgs.model", f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.model == "smagorinsky" and not self.cs > 0:
            raise ConfigurationError("sgs.cs", f"must be positive for smagorinsky, got {self.cs}")


def _grad(vel, grad):
    return gradient_tensor(vel) if grad is None else grad


def _delta_sq(delta):
    return np.asarray(delta, dtype=float) ** 2


def strain_rate(vel, grad=None):
    """Resolved strain rate ``S = (grad u + grad u^T) / 2`` and ``|S| = sqrt(2 S:S)``."""
    g = _grad(vel, grad)
    grid = vel.grid
    comps = {}
    ss = np.zeros(grid.shape)
    for i, j in SYMMETRIC_INDICES:
        s = 0.5 * (g[i, j] + g[j, i])
        comps[(i, j)] = ScalarField(grid, s)
        ss += s * s if i == j else 2.0 * s * s
    return SymmetricTensorField(comps), ScalarField(grid, np.sqrt(2.0 * ss))


def tau_gradient(vel, delta, gamma=6.0, grad=None):
    """Gradient model ``tau_ij = delta**2 / (2 gamma) * sum_l du_i/dx_l du_j/dx_l``."""
    g = _grad(vel, grad)
    coef = _delta_sq(delta) / (2.0 * gamma)
    comps = {(i, j): coef * np.einsum("l...,l...->...", g[i], g[j]) for i, j in SYMMETRIC_INDICES}
    return SymmetricTensorField.from_arrays(vel.grid, comps)


def tau_rles(vel, delta, grid=None, gamma=6.0, grad=None, operator=None):
    """Rational model: the gradient-model stress smoothed by the Helmholtz inverse.

    Returns the tensor in spectral (x, z) representation.  ``operator`` may
    carry a prefactored :class:`HelmholtzOperator` for repeated use.
    """
    grid = grid if grid is not None else vel.grid
    if operator is None:
        operator = HelmholtzOperator(grid, FilterParams(gamma, delta))
    tau_g = tau_gradient(vel, delta, gamma, grad)
    comps = {ij: ScalarField(grid, operator.solve_hat(c.to_spectral().data), spectral=True)
             for ij, c in tau_g.items()}
    return SymmetricTensorField(comps)


def tau_smagorinsky(vel, delta, cs=0.1, grad=None):
    """Eddy-viscosity stress ``tau_ij = -(cs delta)**2 |S| S_ij``."""
    s, mag = strain_rate(vel, grad)
    coef = -(cs**2) * _delta_sq(delta) * mag.data
    return SymmetricTensorField.from_arrays(
        vel.grid, {ij: coef * c.data for ij, c in s.items()})


def sgs_force_hat(grid, tau_hat):
    """Spectral ``F_i = -d tau_ij / d x_j``; ``tau_hat`` maps (i, j) to arrays."""
    def t(i, j):
        return tau_hat[(i, j) if i <= j else (j, i)]

    return [-(ddx_hat(grid, t(i, 0)) + ddy(grid, t(i, 1)) + ddz_hat(grid, t(i, 2)))
            for i in range(3)]


def sgs_force(tau):
    """Momentum forcing ``-div tau`` as a physical velocity-shaped field."""
    grid = tau.grid
    spec = tau.to_spectral()
    tau_hat = {ij: c.data for ij, c in spec.items()}
    return VelocityField.from_arrays(grid, *(inverse(grid, f) for f in sgs_force_hat(grid, tau_hat)))


class SubgridModel:
    """A configured closure bound to a grid and filter-width profile."""

    def __init__(self, config, grid, delta=None):
        self.config = config
        self.grid = grid
        self.delta = grid.delta if delta is None else delta
        self.gamma = config.filter.gamma
        self._helmholtz = None
        if config.model == "rles":
            self._helmholtz = HelmholtzOperator(grid, FilterParams(self.gamma, self.delta))

    @property
    def active(self):
        return self.config.model != "none"

    def stress(self, vel, grad=None):
        """The modeled stress, or ``None`` for the no-model case."""
        model = self.config.model
        if model == "none":
            return None
        if model == "gradient":
            return tau_gradient(vel, self.delta, self.gamma, grad)
        if model == "rles":
            return tau_rles(vel, self.delta, self.grid, self.gamma, grad, self._helmholtz)
        return tau_smagorinsky(vel, self.delta, self.config.cs, grad)
