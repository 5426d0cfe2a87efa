"""Time- and plane-averaged channel statistics in wall units.

Samples are plane (xz) averages accumulated with compensated summation so
long runs do not lose precision and sample order does not matter.  Under
the channel reflection ``y -> -y, v -> -v`` the profiles of u, w and the
normal stresses are even, while v, <u'v'> and the model shear stress are odd.
"""

import csv
from dataclasses import dataclass
import math
import warnings

import numpy as np

from .errors import ConfigurationError, EmptyStatisticsError
from .grid import one_sided_weights

QUANTITIES = ("u", "v", "w", "uu", "vv", "ww", "uv", "tau12")
COVARIANCES = ("uu", "vv", "ww", "uv")
PARITY = {"u": 1, "v": -1, "w": 1, "uu": 1, "vv": 1, "ww": 1, "uv": -1, "tau12": -1}
PROFILE_COLUMNS = ("y", "y_plus", "U_plus", "uv_plus", "urms_plus", "vrms_plus",
                   "wrms_plus", "total_shear")


class CompensatedSum:
    """Element-wise Neumaier summation."""

    def __init__(self, shape=()):
        self.total = np.zeros(shape)
        self.comp = np.zeros(shape)

    def add(self, x):
        t = self.total + x
        big = np.abs(self.total) >= np.abs(x)
        self.comp += np.where(big, (self.total - t) + x, (x - t) + self.total)
        self.total = t

    @property
    def value(self):
        return self.total + self.comp


class FlowStatistics:
    """Running sums of plane-averaged moments for one channel grid.

    Besides the raw plane averages, each snapshot contributes its
    within-plane covariances and a Welford update of the plane means, so
    the fluctuation moments are obtained without the cancellation of
    ``<uu> - <u>**2`` and reported variances are never negative.
    """

    def __init__(self, y):
        self.y = np.asarray(y, dtype=float).copy()
        self.n_samples = 0
        self.sums = {q: CompensatedSum(self.y.shape) for q in QUANTITIES}
        self.plane_cov = {q: CompensatedSum(self.y.shape) for q in COVARIANCES}
        self.running_mean = {c: np.zeros(self.y.shape) for c in "uvw"}
        self.comoment = {q: np.zeros(self.y.shape) for q in COVARIANCES}
        self.dpdx_sum = CompensatedSum()
        self.t0 = None
        self.t1 = None

    @property
    def ny(self):
        return len(self.y)

    def accumulate(self, vel, tau12=None, dpdx=None, t=None):
        """Add one velocity snapshot (and optionally the model shear stress)."""
        u, v, w = (c.to_physical().data for c in vel.components)
        if u.shape[-1] != self.ny or not np.array_equal(vel.grid.y, self.y):
            raise ConfigurationError("grid", f"snapshot grid (Ny={u.shape[-1]}) does not match statistics (Ny={self.ny})")
        comps = {"u": u, "v": v, "w": w}
        mean = {c: a.mean(axis=(0, 1)) for c, a in comps.items()}
        fluct = {c: a - mean[c] for c, a in comps.items()}
        plane = {
            "u": mean["u"], "v": mean["v"], "w": mean["w"],
            "uu": (u * u).mean(axis=(0, 1)),
            "vv": (v * v).mean(axis=(0, 1)),
            "ww": (w * w).mean(axis=(0, 1)),
            "uv": (u * v).mean(axis=(0, 1)),
            "tau12": np.zeros(self.ny) if tau12 is None else np.asarray(tau12, dtype=float),
        }
        for q in QUANTITIES:
            self.sums[q].add(plane[q])
        for q in COVARIANCES:
            self.plane_cov[q].add((fluct[q[0]] * fluct[q[1]]).mean(axis=(0, 1)))

        # Welford update of the temporal moments of the plane means
        n = self.n_samples + 1
        delta = {c: mean[c] - self.running_mean[c] for c in "uvw"}
        for c in "uvw":
            self.running_mean[c] = self.running_mean[c] + delta[c] / n
        for q in COVARIANCES:
            self.comoment[q] = self.comoment[q] + delta[q[0]] * (mean[q[1]] - self.running_mean[q[1]])

        if dpdx is not None:
            self.dpdx_sum.add(float(dpdx))
        if t is not None:
            self.t0 = t if self.t0 is None else self.t0
            self.t1 = t
        self.n_samples = n
        return self

    def means(self):
        """Time averages of the raw plane-averaged moments."""
        if self.n_samples == 0:
            raise EmptyStatisticsError("no samples accumulated")
        return {q: self.sums[q].value / self.n_samples for q in QUANTITIES}

    def fluctuation_moments(self):
        """``<u'u'>, <v'v'>, <w'w'>, <u'v'>`` about the time-and-plane mean."""
        if self.n_samples == 0:
            raise EmptyStatisticsError("no samples accumulated")
        n = self.n_samples
        return {q: self.plane_cov[q].value / n + self.comoment[q] / n for q in COVARIANCES}

    def state_arrays(self):
        """Arrays needed to resume accumulation bit-for-bit (for checkpoints)."""
        out = {}
        for q in QUANTITIES:
            out[f"{q}.total"] = self.sums[q].total
            out[f"{q}.comp"] = self.sums[q].comp
        for q in COVARIANCES:
            out[f"cov_{q}.total"] = self.plane_cov[q].total
            out[f"cov_{q}.comp"] = self.plane_cov[q].comp
            out[f"comoment_{q}"] = self.comoment[q]
        for c in "uvw":
            out[f"mean_{c}"] = self.running_mean[c]
        out["dpdx.total"] = np.atleast_1d(self.dpdx_sum.total)
        out["dpdx.comp"] = np.atleast_1d(self.dpdx_sum.comp)
        return out

    def restore_arrays(self, arrays, n_samples, t0=None, t1=None):
        def arr(key):
            return np.array(arrays[key], dtype=float)

        for q in QUANTITIES:
            self.sums[q].total = arr(f"{q}.total")
            self.sums[q].comp = arr(f"{q}.comp")
        for q in COVARIANCES:
            self.plane_cov[q].total = arr(f"cov_{q}.total")
            self.plane_cov[q].comp = arr(f"cov_{q}.comp")
            self.comoment[q] = arr(f"comoment_{q}")
        for c in "uvw":
            self.running_mean[c] = arr(f"mean_{c}")
        self.dpdx_sum.total = np.array(arrays["dpdx.total"][0])
        self.dpdx_sum.comp = np.array(arrays["dpdx.comp"][0])
        self.n_samples = int(n_samples)
        self.t0, self.t1 = t0, t1


def symmetrize_halves(profile, parity):
    """Average the two channel halves; ``parity`` is +1 (even) or -1 (odd)."""
    profile = np.asarray(profile, dtype=float)
    if parity == 1:
        return 0.5 * (profile + profile[::-1])
    if parity == -1:
        return 0.5 * (profile - profile[::-1])
    raise ValueError(f"parity must be +1 or -1, got {parity}")


def wall_slopes(y, u):
    """One-sided second-order du/dy at the lower and upper walls."""
    a0, a1, a2 = one_sided_weights(y[0], y[1], y[2])
    b0, b1, b2 = one_sided_weights(y[-1], y[-2], y[-3])
    return a0 * u[0] + a1 * u[1] + a2 * u[2], b0 * u[-1] + b1 * u[-2] + b2 * u[-3]


def compute_u_tau(y, mean_u, nu):
    """Friction velocity and friction Reynolds number ``(u_tau, Re_tau)``.

    The wall shear is the signed average over both walls, so a flow
    reversed at one wall reduces it.
    """
    lower, upper = wall_slopes(y, mean_u)
    tau_w = 0.5 * (lower - upper)
    u_tau = math.sqrt(nu * abs(tau_w))
    return u_tau, reynolds_tau(u_tau, nu)


def reynolds_tau(u_tau, nu, half_width=1.0):
    return u_tau * half_width / nu


def to_wall_units(y, mean_u, u_tau, nu):
    """``(y_plus, U_plus)`` with ``y_plus`` measured from the nearest wall."""
    return (1.0 - np.abs(y)) * u_tau / nu, np.asarray(mean_u) / u_tau


def from_wall_units(y_plus, u_plus, u_tau, nu):
    """Distance from the wall and velocity from their wall-unit values."""
    return np.asarray(y_plus) * nu / u_tau, np.asarray(u_plus) * u_tau


def _ddy_profile(y, f):
    """Three-point derivative on the stretched grid, exact for quadratics."""
    return np.gradient(f, y, edge_order=2)


def shear_stress_balance(y, mean_u, uv, nu, tau12=None):
    """Total shear stress and its deviation from a straight line.

    ``total = nu dU/dy - <u'v'> - <tau_12>``.  The residual is the largest
    distance from the line through the two wall values, relative to the
    mean wall shear; a statistically steady channel gives a residual near 0.
    """
    y = np.asarray(y, dtype=float)
    total = nu * _ddy_profile(y, np.asarray(mean_u, dtype=float)) - np.asarray(uv, dtype=float)
    if tau12 is not None:
        total = total - np.asarray(tau12, dtype=float)
    line = total[0] + (total[-1] - total[0]) * (y - y[0]) / (y[-1] - y[0])
    wall = 0.5 * (abs(total[0]) + abs(total[-1]))
    dev = float(np.max(np.abs(total - line)))
    residual = dev / wall if wall > 0 else (0.0 if dev == 0 else math.inf)
    return total, residual


@dataclass
class ProfileReport:
    """Finalized (symmetrized) profiles, raw and in wall units."""

    y: np.ndarray
    mean: dict
    uu: np.ndarray
    vv: np.ndarray
    ww: np.ndarray
    uv: np.ndarray
    tau12: np.ndarray
    nu: float
    u_tau: float
    re_tau: float
    u_tau_lower: float
    u_tau_upper: float
    flow_reversal: bool
    total_shear: np.ndarray
    shear_residual: float
    n_samples: int
    mean_dpdx: float = float("nan")

    @property
    def urms(self):
        return np.sqrt(np.maximum(self.uu, 0.0))

    @property
    def vrms(self):
        return np.sqrt(np.maximum(self.vv, 0.0))

    @property
    def wrms(self):
        return np.sqrt(np.maximum(self.ww, 0.0))

    def wall_unit_table(self):
        """Rows from the lower wall up to the centreline, in ``PROFILE_COLUMNS`` order."""
        half = slice(0, len(self.y) // 2 + 1)
        ut = self.u_tau
        y_plus, u_plus = to_wall_units(self.y, self.mean["u"], ut, self.nu)
        cols = [self.y, y_plus, u_plus, self.uv / ut**2, self.urms / ut, self.vrms / ut,
                self.wrms / ut, self.total_shear / ut**2]
        return np.column_stack([c[half] for c in cols])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(PROFILE_COLUMNS)
            for row in self.wall_unit_table():
                writer.writerow([repr(float(x)) for x in row])

    def write_shear_balance_csv(self, path):
        viscous = self.nu * _ddy_profile(self.y, self.mean["u"])
        line = self.total_shear[0] + (self.total_shear[-1] - self.total_shear[0]) * (self.y + 1.0) / 2.0
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("y", "viscous", "reynolds", "model", "total", "linear_fit"))
            for row in zip(self.y, viscous, -self.uv, -self.tau12, self.total_shear, line):
                writer.writerow([repr(float(x)) for x in row])


def finalize(stats, nu):
    """Turn accumulated sums into a :class:`ProfileReport`."""
    m = stats.means()
    y = stats.y
    raw = {"u": m["u"], "v": m["v"], "w": m["w"], "tau12": m["tau12"]}
    raw.update(stats.fluctuation_moments())
    sym = {q: symmetrize_halves(raw[q], PARITY[q]) for q in raw}

    # per-wall diagnostics come from the unsymmetrized profile
    lower, upper = wall_slopes(y, raw["u"])
    reversed_flow = lower * (-upper) < 0
    if reversed_flow:
        warnings.warn("wall shear changes sign between walls (flow reversal)", RuntimeWarning)
    u_tau, re_tau = compute_u_tau(y, sym["u"], nu)
    total, residual = shear_stress_balance(y, sym["u"], sym["uv"], nu, sym["tau12"])
    n = stats.n_samples
    mean_dpdx = float(stats.dpdx_sum.value) / n if stats.dpdx_sum.value != 0 else float("nan")
    return ProfileReport(
        y=y.copy(), mean={q: sym[q] for q in ("u", "v", "w")},
        uu=sym["uu"], vv=sym["vv"], ww=sym["ww"], uv=sym["uv"], tau12=sym["tau12"],
        nu=nu, u_tau=u_tau, re_tau=re_tau,
        u_tau_lower=math.sqrt(nu * abs(lower)), u_tau_upper=math.sqrt(nu * abs(upper)),
        flow_reversal=bool(reversed_flow), total_shear=total, shear_residual=residual,
        n_samples=n, mean_dpdx=mean_dpdx,
    )
