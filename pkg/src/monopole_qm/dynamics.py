"""Coupled mean and second-moment equations of motion, and their integration.

The moment equations are truncated at second order (first order in hbar).
For the linear monopole field ``Bz = mu z`` they are bilinear in means and
moments; for a constant field they reduce to a constant-coefficient linear
system.  Both cases go through one code path: the Lorentz coupling
``c = e Bz(<z>)`` multiplies moments, and the gradient coupling ``g = e dBz/dz``
multiplies the products of means and z-correlations that appear only for a
non-uniform field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    N_MEAN,
    N_STATE,
    ConstantZ,
    LinearZ,
    MomentState,
    Params,
    energy,
)
from .errors import NumericalError

# Moment slots, see core.MOMENT_NAMES.
XX, XY, XZ, XPX, XPY, XPZ = range(6)
YY, YZ, YPX, YPY, YPZ = range(6, 11)
ZZ, ZPX, ZPY, ZPZ = range(11, 15)
PXPX, PXPY, PXPZ, PYPY, PYPZ, PZPZ = range(15, 21)

# D(q_i q_j) slot for position indices i, j.
_QQ = ((XX, XY, XZ), (XY, YY, YZ), (XZ, YZ, ZZ))
# D(p_k q_i) slot, indexed [k][i].
_PQ = ((XPX, YPX, ZPX), (XPY, YPY, ZPY), (XPZ, YPZ, ZPZ))
# D(p_k p_i) slot, indexed [k][i].
_PP = ((PXPX, PXPY, PXPZ), (PXPY, PYPY, PYPZ), (PXPZ, PYPZ, PZPZ))


def _couplings(params: Params, z: float) -> tuple[float, float]:
    f = params.field
    e = params.charge
    if isinstance(f, LinearZ):
        return e * f.mu * z, e * f.mu
    if isinstance(f, ConstantZ):
        return e * f.b0, 0.0
    raise TypeError(f"unsupported field model {f!r}")


def _mean_rhs(y, params: Params) -> list:
    m = params.mass
    mw2 = m * params.omega ** 2
    c, g = _couplings(params, y[2])
    px, py, pz = y[3], y[4], y[5]
    # <z p_y> and <z p_x> pick up their correlations only through the gradient.
    fx = (c * py + g * y[N_MEAN + ZPY]) / m
    fy = -(c * px + g * y[N_MEAN + ZPX]) / m
    return [px / m, py / m, pz / m, fx, fy, -mw2 * y[2]]


def _moment_rhs(y, params: Params) -> list:
    m = params.mass
    m2w2 = (m * params.omega) ** 2
    q = y[:3]
    px, py = y[3], y[4]
    c, g = _couplings(params, y[2])
    d = y[N_MEAN:]
    out = [0.0] * 21

    # position block: m d/dt D(q_i q_j) = D(p_i q_j) + D(p_j q_i)
    for i in range(3):
        for j in range(i, 3):
            out[_QQ[i][j]] = d[_PQ[i][j]] + d[_PQ[j][i]]

    # position-momentum block
    for i in range(3):
        out[_PQ[0][i]] = d[_PP[0][i]] + c * d[_PQ[1][i]] - g * q[i] * d[ZPY]
        out[_PQ[1][i]] = d[_PP[1][i]] - c * d[_PQ[0][i]] + g * q[i] * d[ZPX]
        out[_PQ[2][i]] = d[_PP[2][i]] - m2w2 * d[_QQ[i][2]]

    # momentum covariances
    out[PXPY] = -c * (d[PXPX] - d[PYPY]) + g * (px * d[ZPX] - py * d[ZPY])
    out[PYPZ] = -c * d[PXPZ] - g * px * d[ZPZ] - m2w2 * d[ZPY]
    out[PXPZ] = c * d[PYPZ] + g * py * d[ZPZ] - m2w2 * d[ZPX]

    # momentum fluctuations; the asymmetric (2, 1) / (1, 2) weights are intentional
    out[PXPX] = 2 * c * d[PXPY] + 2 * g * (2 * py * d[ZPX] + px * d[ZPY])
    out[PYPY] = -2 * c * d[PXPY] - 2 * g * (py * d[ZPX] + 2 * px * d[ZPY])
    out[PZPZ] = -2 * m2w2 * d[ZPZ]

    return [v / m for v in out]


def rhs(y, params: Params) -> np.ndarray:
    """Time derivative of the flat 27-vector ``mean (+) moments``."""
    yl = y.tolist() if isinstance(y, np.ndarray) else list(y)
    return np.array(_mean_rhs(yl, params) + _moment_rhs(yl, params))


def mean_rhs(state: MomentState, params: Params) -> np.ndarray:
    return np.array(_mean_rhs(state.as_vector().tolist(), params))


def moment_rhs(state: MomentState, params: Params) -> np.ndarray:
    return np.array(_moment_rhs(state.as_vector().tolist(), params))


# -- monitors -------------------------------------------------------------------


def uncertainty_measures(state: MomentState, params: Params) -> dict:
    """Slack in the (z, pz) and (px, py) uncertainty relations.

    Non-negative values mean the relation holds; zero means saturation.
    ``<B>`` is exact for the linear field because B is linear in z.
    """
    d = state.moments
    hbar = params.hbar
    b = params.bz(float(state.mean[2]))
    zpz = d[ZZ] * d[PZPZ] - d[ZPZ] ** 2 - hbar * hbar / 4
    pxpy = d[PXPX] * d[PYPY] - d[PXPY] ** 2 - 0.25 * (params.charge * hbar * b) ** 2
    return {"zpz": float(zpz), "pxpy": float(pxpy)}


def _monitor_row(y, params):
    s = MomentState.from_vector(y)
    u = uncertainty_measures(s, params)
    return (energy(s, params), u["zpz"], u["pxpy"])


# -- integration ----------------------------------------------------------------


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator settings.

    ``dt_min`` and ``dt_max`` default to ``1e-12 * t_end`` and ``t_end / 100``.
    ``dt`` is the fixed step for ``rk4_fixed`` and the optional first trial
    step for ``rk45_adaptive``.
    """

    t_end: float
    method: str = "rk45_adaptive"
    dt: Optional[float] = None
    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    dt_min: Optional[float] = None
    dt_max: Optional[float] = None

    def __post_init__(self):
        if self.method not in ("rk4_fixed", "rk45_adaptive"):
            raise ValueError(f"unknown integrator method {self.method!r}")
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise ValueError("t_end must be finite and >= 0")
        if self.method == "rk4_fixed" and not (self.dt is not None and self.dt > 0):
            raise ValueError("rk4_fixed requires dt > 0")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be > 0")
        if self.dt_min is not None and not self.dt_min > 0:
            raise ValueError("dt_min must be > 0")
        if self.dt_max is not None and not self.dt_max > 0:
            raise ValueError("dt_max must be > 0")
        if self.step_bounds()[0] > self.step_bounds()[1]:
            raise ValueError("dt_min must not exceed dt_max")

    def step_bounds(self) -> tuple[float, float]:
        lo = self.dt_min if self.dt_min is not None else 1e-12 * self.t_end
        hi = self.dt_max if self.dt_max is not None else self.t_end / 100
        return lo, hi


class Trajectory:
    """Accepted samples of an integration.

    ``values`` is an ``(n, 27)`` array of flat states; ``monitors`` is an
    ``(n, 3)`` array with columns energy, zpz and pxpy uncertainty slack.
    """

    MONITORS = ("energy", "zpz_uncertainty", "pxpy_uncertainty")

    def __init__(self, times, values, monitors):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float).reshape(len(self.times), N_STATE)
        self.monitors = np.asarray(monitors, dtype=float).reshape(len(self.times), 3)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def states(self) -> list[MomentState]:
        return [MomentState.from_vector(v) for v in self.values]

    @property
    def final(self) -> MomentState:
        return MomentState.from_vector(self.values[-1])

    @property
    def energy(self) -> np.ndarray:
        return self.monitors[:, 0]


def _check_finite(k, t, y):
    if not np.all(np.isfinite(k)):
        raise NumericalError(f"non-finite right-hand side at t={t!r}", t=t,
                             state=MomentState.from_vector(y))


def _rk4(y, params, dt, t=0.0):
    k1 = rhs(y, params)
    _check_finite(k1, t, y)
    k2 = rhs(y + 0.5 * dt * k1, params)
    k3 = rhs(y + 0.5 * dt * k2, params)
    k4 = rhs(y + dt * k3, params)
    y_new = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    _check_finite(y_new, t, y)
    return y_new


def step_rk4(state: MomentState, params: Params, dt: float) -> MomentState:
    """One classical fourth-order Runge-Kutta step of the 27-dim system."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    return MomentState.from_vector(_rk4(state.as_vector(), params, dt))


# Dormand-Prince 5(4) tableau.
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = np.array((35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0))
_DP_B4 = np.array((5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                   187 / 2100, 1 / 40))
_DP_E = _DP_B5 - _DP_B4


def _dopri_step(y, k1, params, dt):
    ks = [k1]
    for a_row in _DP_A[1:]:
        yi = y.copy()
        for a, k in zip(a_row, ks):
            if a:
                yi += dt * a * k
        ks.append(rhs(yi, params))
    k = np.array(ks)
    y5 = y + dt * (_DP_B5 @ k)
    err = dt * (_DP_E @ k)
    return y5, err, ks[-1]


def evolve(initial: MomentState, params: Params, cfg: IntegratorConfig) -> Trajectory:
    """Integrate from t = 0 to ``cfg.t_end``; monitors on every accepted step.

    The adaptive method propagates the fifth-order solution and accepts a step
    when the scaled max-norm error is at most one.  A rejected step is retried
    at half the size; an accepted step with error below 1/64 doubles the next
    trial step.  Dropping below ``dt_min`` raises :class:`NumericalError`
    carrying the partial trajectory.
    """
    y = initial.as_vector()
    times = [0.0]
    values = [y]
    monitors = [_monitor_row(y, params)]

    def accept(t, y_new):
        times.append(t)
        values.append(y_new)
        monitors.append(_monitor_row(y_new, params))

    if cfg.t_end > 0:
        run = _run_rk4 if cfg.method == "rk4_fixed" else _run_dopri
        try:
            run(y, params, cfg, accept)
        except NumericalError as exc:
            if exc.trajectory is None:
                exc.trajectory = Trajectory(times, values, monitors)
            raise
    return Trajectory(times, values, monitors)


def _run_rk4(y, params, cfg, accept):
    t_end = cfg.t_end
    n = max(1, math.ceil(t_end / cfg.dt - 1e-9))
    t = 0.0
    for i in range(1, n + 1):
        t_next = t_end if i == n else i * cfg.dt
        y = _rk4(y, params, t_next - t, t)
        t = t_next
        accept(t, y)


def _run_dopri(y, params, cfg, accept):
    t_end = cfg.t_end
    dt_min, dt_max = cfg.step_bounds()
    dt = min(cfg.dt or dt_max, dt_max)
    t = 0.0
    k1 = rhs(y, params)
    _check_finite(k1, t, y)
    while t < t_end:
        h = min(dt, t_end - t)
        last = h == t_end - t
        y_new, err, k_last = _dopri_step(y, k1, params, h)
        if np.all(np.isfinite(y_new)) and np.all(np.isfinite(k_last)):
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            ratio = float(np.max(np.abs(err) / scale))
        else:
            ratio = math.inf
        if ratio <= 1.0:
            t = t_end if last else t + h
            y, k1 = y_new, k_last
            accept(t, y)
            if ratio < 1 / 64 and h == dt:
                dt = min(2 * dt, dt_max)
        else:
            dt = h / 2
            if dt < dt_min:
                raise NumericalError(
                    f"step size underflow below dt_min={dt_min!r} at t={t!r}",
                    t=t, state=MomentState.from_vector(y),
                )
