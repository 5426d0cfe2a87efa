import math
from dataclasses import replace

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st

from rles.errors import ConfigurationError, SolverDivergenceError
from rles.fields import VelocityField, divergence, forward, inverse, relative_divergence
from rles.grid import GridConfig, build_grid
from rles.sgs import SgsConfig
from rles.solver import (ChannelSolver, RunConfig, bulk_velocity, initial_condition, laminar_profile,
                         pressure_projection, projector_for, stabilizing_mode_filter)

SMALL = GridConfig(Lx=2 * math.pi, Lz=math.pi, Nx=16, Ny=17, Nz=16)


def _run_config(**kw):
    base = dict(dt=1e-3, re=100.0, u_m=1.0, grid=SMALL)
    base.update(kw)
    return RunConfig(**base)


def _reflect(vel):
    u, v, w = vel.to_physical().arrays()
    return u[..., ::-1], -v[..., ::-1], w[..., ::-1]


def test_unperturbed_initial_condition_is_poiseuille(small_grid):
    vel = initial_condition(small_grid, 15.63)
    npt.assert_array_equal(vel.u.data[3, 5], laminar_profile(small_grid, 15.63))
    npt.assert_allclose(bulk_velocity(small_grid, vel.u.data), 15.63, rtol=1e-12)
    assert not vel.v.data.any() and not vel.w.data.any()


@pytest.mark.parametrize("seed", [0, 7])
def test_perturbed_initial_condition(small_grid, seed):
    vel = initial_condition(small_grid, 1.0, 0.1, seed)
    assert relative_divergence(vel) < 1e-8
    for a in vel.arrays():
        npt.assert_array_equal(a[..., [0, -1]], 0.0)
    again = initial_condition(small_grid, 1.0, 0.1, seed)
    for a, b in zip(vel.arrays(), again.arrays()):
        assert a.tobytes() == b.tobytes()
    npt.assert_allclose(bulk_velocity(small_grid, vel.u.data), 1.0, rtol=1e-12)


def test_negative_amplitude_rejected(small_grid):
    with pytest.raises(ConfigurationError):
        initial_condition(small_grid, 1.0, -0.1)


def _random_walled(grid, rng):
    comps = []
    for _ in range(3):
        a = rng.standard_normal(grid.shape)
        a[..., [0, -1]] = 0.0
        comps.append(a)
    return VelocityField.from_arrays(grid, *comps)


def test_projection_reduces_divergence_and_is_idempotent(small_grid, rng):
    vel = _random_walled(small_grid, rng)
    before = np.abs(divergence(vel).data).max()
    out, phi = pressure_projection(vel)
    after = np.abs(divergence(out).data).max()
    assert after <= 1e-6 * before
    assert relative_divergence(out) < 1e-8
    again, _ = pressure_projection(out)
    for a, b in zip(out.arrays(), again.arrays()):
        npt.assert_allclose(b, a, atol=1e-10)
    assert phi.spectral


def test_projection_annihilates_discrete_gradients(small_grid, rng):
    g = small_grid
    proj = projector_for(g)
    mu = forward(g, rng.standard_normal(g.shape))
    w = g.weights[1:-1]
    u = np.zeros(g.spectral_shape, dtype=complex)
    v = np.zeros_like(u)
    wz = np.zeros_like(u)
    u[..., 1:-1] = 1j * g.kx_d[:, None, None] * mu[..., 1:-1] / w
    wz[..., 1:-1] = 1j * g.kz_d[None, :, None] * mu[..., 1:-1] / w
    v[..., 1:-1] = -(mu @ proj.d_int) / w
    v[~proj.resolved] = 0.0
    u[~proj.resolved] = 0.0
    wz[~proj.resolved] = 0.0
    scale = max(np.abs(a).max() for a in (u, v, wz))
    proj.project_hat(u, v, wz)
    for a in (u, v, wz):
        assert np.abs(a).max() <= 1e-8 * scale


def test_laminar_step_is_steady():
    cfg = _run_config(grid=GridConfig(Lx=2 * math.pi, Lz=math.pi, Nx=16, Ny=33, Nz=16))
    solver = ChannelSolver(cfg)
    s0 = solver.initial_state()
    npt.assert_allclose(s0.dpdx, 3 * cfg.u_m / cfg.re)
    s1 = solver.step(s0)
    for a, b in zip(s0.vel.arrays(), s1.vel.arrays()):
        assert np.abs(a - b).max() < 1e-10


def test_mass_flux_controller_sets_bulk():
    grid = build_grid(SMALL)
    cfg = _run_config(u_m=15.63)
    solver = ChannelSolver(cfg, grid)
    vel = initial_condition(grid, 15.0)
    state = solver.state_from_velocity(vel)
    out = solver.mass_flux_controller(state)
    npt.assert_allclose(bulk_velocity(grid, out.vel.u.data), 15.63, rtol=1e-12)
    npt.assert_array_equal(out.vel.u.data[..., [0, -1]], 0.0)
    again = solver.mass_flux_controller(out)
    # already on target: the force increment is zero up to rounding
    assert abs(again.dpdx - out.dpdx) < 1e-12 * abs(out.dpdx - state.dpdx)
    out395 = solver.mass_flux_controller(state, u_m=17.54)
    npt.assert_allclose(bulk_velocity(grid, out395.vel.u.data), 17.54, rtol=1e-12)


def test_mode_filter(small_grid, rng):
    g = small_grid
    vel = _random_walled(g, rng)
    assert stabilizing_mode_filter(vel, 0.0) is vel
    top = np.zeros(g.spectral_shape, dtype=complex)
    top[g.top_mode_x, 0, 3] = 1.0
    f = VelocityField.from_arrays(g, top, top.copy(), top.copy(), spectral=True)
    out = stabilizing_mode_filter(f, 0.05)
    npt.assert_allclose(out.u.data[g.top_mode_x, 0, 3], 0.95, rtol=1e-15)
    low = np.zeros(g.spectral_shape, dtype=complex)
    low[1, 2, 4] = 0.5 - 0.25j
    f = VelocityField.from_arrays(g, low, low.copy(), low.copy(), spectral=True)
    out = stabilizing_mode_filter(f, 0.05)
    assert out.u.data.tobytes() == low.tobytes()
    with pytest.raises(ConfigurationError):
        stabilizing_mode_filter(f, 0.06)


def test_step_invariants_and_determinism():
    cfg = _run_config(perturbation=0.2, sgs=SgsConfig(model="rles"), stabilizer_alpha=0.02, seed=3)
    a = ChannelSolver(cfg)
    b = ChannelSolver(cfg)
    sa = a.initial_state()
    sb = b.initial_state()
    for _ in range(5):
        sa = a.step(sa)
        sb = b.step(sb)
        for x in sa.vel.arrays():
            assert np.abs(x[..., [0, -1]]).max() < 1e-12
        npt.assert_allclose(bulk_velocity(a.grid, sa.vel.u.data), cfg.u_m, rtol=1e-12)
        assert relative_divergence(sa.vel) < 1e-8
    for x, y in zip(sa.vel.arrays(), sb.vel.arrays()):
        assert x.tobytes() == y.tobytes()
    assert sa.dpdx == sb.dpdx


@pytest.mark.parametrize("model", ["none", "rles", "gradient", "smagorinsky"])
def test_reflection_symmetry_preserved(model):
    cfg = _run_config(re=180.0, u_m=15.63, dt=2e-4, sgs=SgsConfig(model=model), stabilizer_alpha=0.02)
    solver = ChannelSolver(cfg)
    vel = initial_condition(solver.grid, cfg.u_m, 0.1, 11)
    u, v, w = vel.arrays()
    ru, rv, rw = _reflect(vel)
    sym = VelocityField.from_arrays(solver.grid, 0.5 * (u + ru), 0.5 * (v + rv), 0.5 * (w + rw))
    sym, _ = pressure_projection(sym)
    state = solver.state_from_velocity(sym)
    state = solver.mass_flux_controller(state)
    state = solver.advance(state, 100)
    u, v, w = state.vel.arrays()
    ru, rv, rw = _reflect(state.vel)
    for a, b in ((u, ru), (v, rv), (w, rw)):
        assert np.abs(a - b).max() < 1e-10


def test_nan_guard_reports_history():
    cfg = _run_config()
    solver = ChannelSolver(cfg)
    state = solver.initial_state()
    state = solver.advance(state, 99)
    state.vel.u.data[2, 2, 2] = np.nan
    with pytest.raises(SolverDivergenceError) as exc:
        solver.step(state)
    assert exc.value.step == 100
    assert exc.value.max_u_history[-1][0] == 100


@pytest.mark.parametrize("kw", [{"dt": 0.0}, {"stabilizer_alpha": 0.1}, {"re": -1.0}, {"n_steps": -1}])
def test_run_config_validation(kw):
    with pytest.raises(ConfigurationError):
        _run_config(**kw)


def test_inviscid_config_has_zero_viscosity():
    assert _run_config(re=math.inf).nu == 0.0
