"""A-priori model tests on synthetic periodic turbulence.

The exact subfilter stress of a known field is compared with the model
predictions built from the filtered field.  All work happens on a triply
periodic box where Gaussian filtering is exact in Fourier space; quadratic
products are formed on a 3/2-padded grid and truncated back.
"""

import math

import numpy as np
import scipy.fft

from .errors import ConfigurationError, UndefinedCorrelationError
from .fields import SYMMETRIC_INDICES, ScalarField, SymmetricTensorField, VelocityField, fft_workers
from .filters import FilterParams, apply_gaussian_filter
from .grid import PeriodicBox
from .sgs import tau_gradient, tau_rles, tau_smagorinsky

APRIORI_MODELS = ("gradient", "rles", "smagorinsky")


def _full_k(n, length):
    return 2.0 * math.pi / length * np.fft.fftfreq(n, d=1.0 / n)


def synthesize_field(n, slope=-5.0 / 3.0, seed=0, k_plateau=2.0, cutoff=None, length=2.0 * math.pi):
    """Random solenoidal box field with ``E(k) ~ k**slope``.

    The spectrum is flat below ``k_plateau`` and zero above ``cutoff``
    (default ``n // 3``, so the field is free of aliasing under the 2/3
    rule).  A common factor scales the field to unit rms per component
    (averaged over the three components), which keeps it solenoidal.

    Returns
    -------
    VelocityField in physical representation on a :class:`PeriodicBox`.
    """
    if int(n) != n or n < 16 or (int(n) & (int(n) - 1)):
        raise ConfigurationError("n", f"must be a power of two >= 16, got {n}")
    n = int(n)
    grid = PeriodicBox(n, length)
    cutoff = n // 3 if cutoff is None else cutoff
    rng = np.random.default_rng(seed)

    k1 = _full_k(n, length)
    kx, kz, ky = np.meshgrid(k1, k1, k1, indexing="ij")
    kvec = (kx, ky, kz)
    kmag = np.sqrt(kx**2 + ky**2 + kz**2)
    unit = kmag * length / (2.0 * math.pi)  # integer shell index scale

    energy = np.where(unit < k_plateau, 1.0, (np.maximum(unit, k_plateau) / k_plateau) ** slope)
    energy[(unit == 0) | (unit > cutoff)] = 0.0
    # white noise has a flat 3-D spectrum; shells grow like k^2
    amp = np.sqrt(energy) / np.where(unit > 0, unit, 1.0)

    noise = [scipy.fft.fftn(rng.standard_normal((n, n, n)), norm="forward", workers=fft_workers())
             for _ in range(3)]
    hats = [amp * a for a in noise]
    k2 = np.where(kmag > 0, kmag**2, 1.0)
    kdotu = sum(kvec[i] * hats[i] for i in range(3))
    hats = [hats[i] - kvec[i] * kdotu / k2 for i in range(3)]
    # array order is (x, z, y) while kvec is (x, y, z)
    comps = [scipy.fft.ifftn(h, norm="forward", workers=fft_workers()).real for h in hats]
    rms = math.sqrt(sum(np.mean(c * c) for c in comps) / 3.0)
    comps = [c / rms for c in comps]
    return VelocityField.from_arrays(grid, *comps)


def _kept_modes(n):
    """Positions of the non-Nyquist modes of an ``n`` grid, and their signed index."""
    half = n // 2
    pos = np.r_[0:half, n - half + 1:n]
    signed = np.r_[0:half, -half + 1:0]
    return pos, signed


def pad(a, m):
    """Spectrally interpolate a periodic ``(n, n, n)`` array onto ``(m, m, m)``."""
    n = a.shape[0]
    a_hat = scipy.fft.fftn(a, norm="forward", workers=fft_workers())
    pos, signed = _kept_modes(n)
    dest = np.mod(signed, m)
    out = np.zeros((m, m, m), dtype=complex)
    out[np.ix_(dest, dest, dest)] = a_hat[np.ix_(pos, pos, pos)]
    return scipy.fft.ifftn(out, norm="forward", workers=fft_workers()).real


def truncate(a, n):
    """Inverse of :func:`pad`: keep the modes representable on an ``n`` grid."""
    m = a.shape[0]
    a_hat = scipy.fft.fftn(a, norm="forward", workers=fft_workers())
    pos, signed = _kept_modes(n)
    src = np.mod(signed, m)
    out = np.zeros((n, n, n), dtype=complex)
    out[np.ix_(pos, pos, pos)] = a_hat[np.ix_(src, src, src)]
    return scipy.fft.ifftn(out, norm="forward", workers=fft_workers()).real


def _padded_box(grid):
    m = 3 * grid.Nx // 2
    if m % 2:
        raise ConfigurationError("n", f"3/2 padding needs n divisible by 4, got {grid.Nx}")
    return PeriodicBox(m, grid.Lx)


def _check_box(vel):
    grid = vel.grid
    if not getattr(grid, "periodic_y", False):
        raise ConfigurationError("grid", "a-priori tests need a periodic box field")
    return grid


def filtered_padded(vel, params):
    """Filtered velocity on the 3/2-padded box (physical arrays) and that box."""
    grid = _check_box(vel)
    big = _padded_box(grid)
    phys = [pad(c.to_physical().data, big.Nx) for c in vel.components]
    return [apply_gaussian_filter(ScalarField(big, p), params).data for p in phys], phys, big


def exact_subfilter_stress(vel, params):
    """``tau_ij = filter(u_i u_j) - filter(u_i) filter(u_j)`` on the input box."""
    grid = vel.grid
    ubar, u, big = filtered_padded(vel, params)
    comps = {}
    for i, j in SYMMETRIC_INDICES:
        prod = apply_gaussian_filter(ScalarField(big, u[i] * u[j]), params).data
        comps[(i, j)] = truncate(prod - ubar[i] * ubar[j], grid.Nx)
    return SymmetricTensorField.from_arrays(grid, comps)


def model_stress(vel, params, model="gradient", cs=0.1):
    """Model prediction from the filtered field, evaluated on the padded box."""
    grid = vel.grid
    ubar, _, big = filtered_padded(vel, params)
    vbar = VelocityField.from_arrays(big, *ubar)
    delta = float(params.delta)
    if model == "gradient":
        tau = tau_gradient(vbar, delta, params.gamma)
    elif model == "rles":
        tau = tau_rles(vbar, delta, big, params.gamma).to_physical()
    elif model == "smagorinsky":
        tau = tau_smagorinsky(vbar, delta, cs)
    else:
        raise ConfigurationError("model", f"unknown model {model!r}; expected one of {APRIORI_MODELS}")
    return SymmetricTensorField.from_arrays(
        grid, {ij: truncate(c.data, grid.Nx) for ij, c in tau.items()})


def _centered(tensor):
    phys = tensor.to_physical()
    return {ij: c.data.ravel() - c.data.mean() for ij, c in phys.items()}


def _pearson(a, b):
    return float(np.dot(a, b) / math.sqrt(np.dot(a, a) * np.dot(b, b)))


def correlation(exact, model):
    """Pearson correlation per component and pooled over all six components.

    Returns a dict keyed by ``(i, j)`` plus ``"pooled"``.
    """
    if exact.grid.shape != model.grid.shape:
        raise ConfigurationError("grid", "tensors live on different grids")
    a = _centered(exact)
    b = _centered(model)
    out = {}
    for ij in SYMMETRIC_INDICES:
        for name, arr in (("exact", a[ij]), ("model", b[ij])):
            if not np.dot(arr, arr) > 0:
                raise UndefinedCorrelationError(f"{name} tau_{ij[0] + 1}{ij[1] + 1}")
        out[ij] = _pearson(a[ij], b[ij])
    out["pooled"] = _pearson(np.concatenate([a[ij] for ij in SYMMETRIC_INDICES]),
                             np.concatenate([b[ij] for ij in SYMMETRIC_INDICES]))
    return out


def tensor_norm(tensor):
    """Frobenius norm over all nine entries and all grid points."""
    total = 0.0
    for (i, j), c in tensor.to_physical().items():
        total += (1.0 if i == j else 2.0) * float(np.sum(c.data**2))
    return math.sqrt(total)


def tensor_difference(a, b):
    grid = a.grid
    pa, pb = a.to_physical(), b.to_physical()
    return SymmetricTensorField.from_arrays(grid, {ij: pa[ij].data - pb[ij].data for ij in SYMMETRIC_INDICES})


def observed_orders(h, err):
    """Local convergence orders ``log(e_k / e_{k+1}) / log(h_k / h_{k+1})``."""
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    return np.log(err[:-1] / err[1:]) / np.log(h[:-1] / h[1:])


def convergence_table(vel, deltas, gamma=6.0):
    """Small-delta consistency of the gradient and rational models.

    Rows are ``(delta, |tau - tau_grad| / |tau|, |tau_rles - tau_grad| / |tau_grad|)``.
    """
    rows = []
    for d in deltas:
        params = FilterParams(gamma, float(d))
        exact = exact_subfilter_stress(vel, params)
        grad = model_stress(vel, params, "gradient")
        rles = model_stress(vel, params, "rles")
        rows.append((float(d),
                     tensor_norm(tensor_difference(exact, grad)) / tensor_norm(exact),
                     tensor_norm(tensor_difference(rles, grad)) / tensor_norm(grad)))
    return np.array(rows)


def apriori_report(n=32, delta_over_h=4.0, models=APRIORI_MODELS, seed=0, gamma=6.0,
                   slope=-5.0 / 3.0, cs=0.1):
    """Correlations and norms of each model against the exact stress.

    Returns ``(vel, rows)`` where each row is a dict with the model name,
    per-component and pooled correlations and the model's tensor norm.
    """
    vel = synthesize_field(n, slope, seed)
    h = vel.grid.h
    params = FilterParams(gamma, delta_over_h * h)
    exact = exact_subfilter_stress(vel, params)
    rows = [{"model": "exact", "norm": tensor_norm(exact)}]
    for model in models:
        tau = model_stress(vel, params, model, cs)
        row = {"model": model, "norm": tensor_norm(tau)}
        row.update(correlation(exact, tau))
        rows.append(row)
    return vel, rows
