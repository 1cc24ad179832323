"""Effective potential along z and its analysis.

At vanishing momentum means the Hamiltonian expectation in the saturated
stationary state is

    V(z) = m w^2 z^2 / 2 + hbar |e B(z)| / (2 m) + hbar w / 2

in corrected mode.  Original mode keeps the sign of ``e B(z)``, which for
``B = mu z`` turns the field term into a linear potential and moves the
minimum to ``-e mu hbar / (2 m^2 w^2)``.  With the absolute value the
potential stays even in z and acquires a kink at the origin instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ConstantZ, LinearZ, Params
from .errors import DegeneratePointError, DegenerateTrapError, MonopoleError
from .stationary import SaturationMode


def _require_trap(params: Params):
    if not params.omega > 0:
        raise DegenerateTrapError("omega = 0: no confining trap, the effective potential has no minimum")


def _field_term(z, params: Params, mode: SaturationMode):
    f = params.field
    eb = params.charge * f.mu * z if isinstance(f, LinearZ) else params.charge * f.b0
    return abs(eb) if mode is SaturationMode.CORRECTED else eb


def veff(z: float, params: Params, mode=SaturationMode.CORRECTED) -> float:
    mode = SaturationMode(mode)
    _require_trap(params)
    m, w, hbar = params.mass, params.omega, params.hbar
    return (0.5 * m * w * w * (z * z)
            + 0.5 * hbar * _field_term(z, params, mode) / m
            + 0.5 * hbar * w)


def scan_grid(z_min: float, z_max: float, n: int) -> np.ndarray:
    """Uniform grid including both endpoints.

    Node ``i`` is ``(z_min (n-1-i) + z_max i) / (n-1)``, so a symmetric interval
    gives a grid that is exactly symmetric in floating point.
    """
    if not z_min < z_max:
        raise ValueError("z_min must be < z_max")
    if n < 2:
        raise ValueError("n must be >= 2")
    i = np.arange(n, dtype=float)
    return (z_min * (n - 1 - i) + z_max * i) / (n - 1)


def veff_values(z: np.ndarray, params: Params, mode=SaturationMode.CORRECTED) -> np.ndarray:
    """Vectorized :func:`veff` with identical floating-point operations."""
    mode = SaturationMode(mode)
    _require_trap(params)
    m, w, hbar = params.mass, params.omega, params.hbar
    z = np.asarray(z, dtype=float)
    if isinstance(params.field, LinearZ):
        eb = params.charge * params.field.mu * z
    else:
        eb = np.full_like(z, params.charge * params.field.b0)
    if mode is SaturationMode.CORRECTED:
        eb = np.abs(eb)
    return 0.5 * m * w * w * (z * z) + 0.5 * hbar * eb / m + 0.5 * hbar * w


def veff_scan(params: Params, mode, z_min: float, z_max: float, n: int) -> np.ndarray:
    """``(n, 2)`` table of ``(z, V(z))``."""
    z = scan_grid(z_min, z_max, n)
    return np.column_stack([z, veff_values(z, params, mode)])


def minimum(params: Params, mode=SaturationMode.CORRECTED) -> dict:
    """Analytic location and value of the minimum."""
    mode = SaturationMode(mode)
    _require_trap(params)
    m, w, hbar, e = params.mass, params.omega, params.hbar, params.charge
    f = params.field
    if isinstance(f, LinearZ) and mode is SaturationMode.ORIGINAL:
        z_star = -e * f.mu * hbar / (2 * m * m * w * w)
    else:
        z_star = 0.0
    return {"z_star": z_star, "V_star": veff(z_star, params, mode)}


def kink_jump(params: Params) -> float:
    """``V'(0+) - V'(0-)`` of the corrected potential; zero for a constant field."""
    if isinstance(params.field, ConstantZ):
        return 0.0
    return params.hbar * abs(params.charge * params.field.mu) / params.mass


def effective_force(z: float, params: Params, mode=SaturationMode.CORRECTED) -> float:
    """``-dV/dz``; undefined at the kink in corrected mode."""
    mode = SaturationMode(mode)
    _require_trap(params)
    m, w, hbar = params.mass, params.omega, params.hbar
    f = params.field
    harmonic = -m * w * w * z
    if isinstance(f, ConstantZ) or f.mu == 0:
        return harmonic
    emu = params.charge * f.mu
    if mode is SaturationMode.ORIGINAL:
        return harmonic - emu * hbar / (2 * m)
    if z == 0:
        raise DegeneratePointError("the corrected potential has a kink at z = 0; the force is undefined there")
    return harmonic - math.copysign(1.0, z) * abs(emu) * hbar / (2 * m)


def completed_square_report(params: Params) -> dict:
    """Shift of the original-mode minimum and the dropped hbar^2 constant.

    Writing ``m w^2 z^2/2 + hbar e mu z/(2m)`` as ``m w^2 (z - shift)^2 / 2``
    leaves behind ``-e^2 mu^2 hbar^2 / (8 m^3 w^2)``; its magnitude is reported
    as ``residual_hbar2_term`` and is not part of V.
    """
    _require_trap(params)
    if not isinstance(params.field, LinearZ):
        raise MonopoleError("the completed-square form needs the monopole field LinearZ")
    m, w, hbar, e, mu = params.mass, params.omega, params.hbar, params.charge, params.field.mu
    return {
        "shift": -e * mu * hbar / (2 * m * m * w * w),
        "residual_hbar2_term": (e * mu * hbar) ** 2 / (8 * m ** 3 * w * w),
    }


@dataclass
class VeffReport:
    mode: SaturationMode
    samples: np.ndarray
    minimum_z: float
    minimum_V: float
    kink: Optional[dict] = None
    force_const: Optional[float] = None
    shift_delta_z: Optional[float] = None

    def summary(self) -> dict:
        """JSON-ready fields, samples excluded."""
        return {
            "mode": self.mode.value,
            "minimum_z": self.minimum_z,
            "minimum_V": self.minimum_V,
            "kink": self.kink,
            "force_const": self.force_const,
            "shift_delta_z": self.shift_delta_z,
        }


def veff_report(params: Params, mode, z_min: float, z_max: float, n: int) -> VeffReport:
    mode = SaturationMode(mode)
    samples = veff_scan(params, mode, z_min, z_max, n)
    mn = minimum(params, mode)
    report = VeffReport(mode, samples, mn["z_star"], mn["V_star"])
    if isinstance(params.field, LinearZ) and params.field.mu != 0:
        if mode is SaturationMode.CORRECTED:
            report.kink = {"location": 0.0, "derivative_jump": kink_jump(params)}
        else:
            report.force_const = -params.charge * params.field.mu * params.hbar / (2 * params.mass)
            report.shift_delta_z = completed_square_report(params)["shift"]
    return report
