"""Independent references for checking the integrators.

For a constant field the mean and moment equations are linear with constant
coefficients, so ``y(t) = expm(A t) y(0)`` solves them exactly.  The matrix
exponential here is a self-contained scaling-and-squaring evaluation of the
degree-13 diagonal Pade approximant (Higham, SIAM J. Matrix Anal. Appl. 26,
2005), independent of the Runge-Kutta code paths.
"""

from __future__ import annotations

import math

import numpy as np

from .core import N_STATE, ConstantZ, MomentState, Params
from .dynamics import rhs
from .errors import NotLinearError, NumericalError

_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


def build_linear_system(params: Params) -> np.ndarray:
    """Generator ``A`` with ``dy/dt = A y`` for the 27-dim constant-field system.

    Columns are the right-hand side evaluated on unit vectors; the system is
    exactly linear, so this is not a linearization.
    """
    if not isinstance(params.field, ConstantZ):
        raise NotLinearError(
            "the monopole field couples <z> to the moments bilinearly; "
            "only ConstantZ has a constant linear generator"
        )
    eye = np.eye(N_STATE)
    return np.column_stack([rhs(eye[k], params) for k in range(N_STATE)])


def _pade13(a):
    n = a.shape[0]
    b = _PADE13
    ident = np.eye(n)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
    return np.linalg.solve(v - u, v + u)


def matrix_exponential(a, t: float = 1.0) -> np.ndarray:
    """``exp(a t)`` by scaling and squaring."""
    a = np.asarray(a, dtype=float) * t
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix_exponential needs a square matrix")
    if not np.all(np.isfinite(a)):
        raise NumericalError("matrix_exponential: non-finite input")
    norm = np.linalg.norm(a, 1)
    if norm == 0:
        return np.eye(a.shape[0])
    s = 0
    if norm > _THETA13:
        s = max(0, math.ceil(math.log2(norm / _THETA13)))
        a = a / 2.0 ** s
    with np.errstate(over="raise", invalid="raise"):
        try:
            r = _pade13(a)
            for _ in range(s):
                r = r @ r
        except FloatingPointError as exc:
            raise NumericalError(f"matrix_exponential overflow: {exc}") from None
    if not np.all(np.isfinite(r)):
        raise NumericalError("matrix_exponential overflow")
    return r


def propagate(state: MomentState, params: Params, times) -> np.ndarray:
    """Exact constant-field solution at each of ``times``; shape ``(len(times), 27)``."""
    a = build_linear_system(params)
    y0 = state.as_vector()
    return np.array([matrix_exponential(a, t) @ y0 for t in times])


def _classical_rhs(s, params: Params):
    m = params.mass
    ebz = params.charge * params.bz(s[2])
    px, py, pz = s[3], s[4], s[5]
    return np.array([px / m, py / m, pz / m,
                     ebz * py / m, -ebz * px / m,
                     -m * params.omega ** 2 * s[2]])


def classical_trajectory(init_means, params: Params, t_end: float, dt: float) -> np.ndarray:
    """RK4 solution of ``m q'' = e q' x B(q) - m w^2 z e_z`` in first-order form.

    Returns an ``(n + 1, 6)`` array of ``(q, p)`` samples with
    ``n = ceil(t_end / dt)`` equal steps ending exactly at ``t_end``.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    n = max(1, math.ceil(t_end / dt - 1e-9)) if t_end > 0 else 0
    h = t_end / n if n else 0.0
    s = np.asarray(init_means, dtype=float).copy()
    out = [s]
    for _ in range(n):
        k1 = _classical_rhs(s, params)
        k2 = _classical_rhs(s + 0.5 * h * k1, params)
        k3 = _classical_rhs(s + 0.5 * h * k2, params)
        k4 = _classical_rhs(s + h * k3, params)
        s = s + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(s)):
            raise NumericalError("classical trajectory became non-finite")
        out.append(s)
    return np.array(out)


def max_relative_error(values, reference) -> float:
    """Largest per-sample norm-wise relative error ``|y - y_ref|_inf / |y_ref|_inf``.

    A sample whose reference is exactly zero is compared in absolute terms.
    """
    values = np.asarray(values)
    reference = np.asarray(reference)
    err = np.max(np.abs(values - reference), axis=1)
    scale = np.max(np.abs(reference), axis=1)
    scale[scale == 0] = 1.0
    return float(np.max(err / scale))
