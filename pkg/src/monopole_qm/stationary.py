"""Zeroth adiabatic order: stationary second moments at frozen means.

Setting every moment time derivative to zero leaves a linear algebraic
system.  Its solution forces all z-correlations, the momentum cross
covariances and the in-plane position-momentum diagonals to vanish, fixes
``D(pz^2) = m^2 w^2 D(z^2)`` and ``D(px^2) = D(py^2)``, and ties the in-plane
cross correlations to the momentum spread through ``c = e Bz(<z>)``::

    D(x py) = -D(px^2) / c,    D(y px) = +D(px^2) / c

What remains free is an overall momentum spread, ``D(z^2)``, and the
transverse position spreads.  Saturating the two uncertainty relations fixes
the first two; the transverse spreads are set to the smallest values that
keep the ``(x, py)`` and ``(y, px)`` blocks positive semidefinite.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import N_MOMENTS, ConstantZ, LinearZ, MomentState, Params, moment_offset
from .dynamics import moment_rhs
from .errors import (
    DegenerateFieldError,
    DegeneratePointError,
    DegenerateTrapError,
    ModeDomainError,
)


class SaturationMode(str, enum.Enum):
    """``corrected`` saturates with ``|<B>|``; ``original`` keeps the sign of ``<B>``."""

    CORRECTED = "corrected"
    ORIGINAL = "original"


FORCED_ZERO = (
    "xpx", "ypy", "zpz",
    "zpx", "zpy", "xpz", "ypz",
    "pxpz", "pypz",
    "xz", "yz",
    "pxpy",
)


@dataclass(frozen=True)
class AdiabaticConstraints:
    """Consequences of the stationary moment equations at fixed means.

    ``lorentz`` is ``e Bz(<z>)``; ``pz2_per_z2`` is ``m^2 w^2``.
    """

    mean: tuple
    lorentz: float
    pz2_per_z2: float
    forced_zero: tuple = FORCED_ZERO

    @property
    def xpy_per_px2(self) -> float:
        return -1.0 / self.lorentz

    @property
    def ypx_per_px2(self) -> float:
        return 1.0 / self.lorentz

    def complete(self, px2, z2, x2, y2, xy=0.0) -> MomentState:
        """Fill the free moments and return the full state."""
        d = np.zeros(N_MOMENTS)

        def put(a, b, v):
            d[moment_offset(a, b)] = v

        put("px", "px", px2)
        put("py", "py", px2)
        put("x", "py", -px2 / self.lorentz)
        put("y", "px", px2 / self.lorentz)
        put("z", "z", z2)
        put("pz", "pz", self.pz2_per_z2 * z2)
        put("x", "x", x2)
        put("y", "y", y2)
        put("x", "y", xy)
        return MomentState(self.mean, d)


def adiabatic_constraints(means, params: Params) -> AdiabaticConstraints:
    """Solve the stationary moment equations as far as they determine the state.

    Raises :class:`DegeneratePointError` at ``<z> = 0`` for the monopole field
    and :class:`DegenerateFieldError` when the field vanishes identically.
    """
    means = tuple(float(v) for v in means)
    if len(means) != 6:
        raise ValueError("means must have 6 entries")
    f = params.field
    if isinstance(f, LinearZ):
        if f.mu == 0:
            raise DegenerateFieldError("monopole density mu = 0: the field vanishes everywhere")
        if means[2] == 0:
            raise DegeneratePointError(
                "<z> = 0 is the kink of the effective potential: the field vanishes there "
                "and the stationary cross correlations are undefined"
            )
    elif isinstance(f, ConstantZ) and f.b0 == 0:
        raise DegenerateFieldError("constant field b0 = 0: no Lorentz coupling")
    lorentz = params.charge * params.bz(means[2])
    return AdiabaticConstraints(means, lorentz, (params.mass * params.omega) ** 2)


def saturate(means, params: Params, mode=SaturationMode.CORRECTED,
             transverse: Optional[tuple] = None) -> MomentState:
    """Stationary state with both uncertainty relations saturated.

    ``D(px^2) = D(py^2) = hbar |e <B>| / 2`` (signed ``e <B>`` in original mode),
    ``D(z^2) = hbar / (2 m w)`` and ``D(pz^2) = hbar m w / 2``.  The transverse
    spreads default to ``D(x^2) = D(y^2) = hbar / (2 |e <B>|)``, ``D(xy) = 0``;
    pass ``transverse=(x2, y2, xy)`` to override.
    """
    mode = SaturationMode(mode)
    if params.omega == 0:
        raise DegenerateTrapError("omega = 0: the trap has no ground state, z-sector saturation undefined")
    cons = adiabatic_constraints(means, params)
    hbar, m, w = params.hbar, params.mass, params.omega
    c = cons.lorentz
    if mode is SaturationMode.CORRECTED:
        px2 = 0.5 * hbar * abs(c)
    else:
        if c < 0:
            raise ModeDomainError(
                f"original mode with e<B> = {c!r} < 0 gives a negative momentum variance"
            )
        px2 = 0.5 * hbar * c
    z2 = hbar / (2 * m * w)
    if transverse is None:
        x2 = y2 = hbar / (2 * abs(c))
        xy = 0.0
    else:
        x2, y2, xy = transverse
    return cons.complete(px2, z2, x2, y2, xy)


def residual(state: MomentState, params: Params) -> float:
    """Max-norm of the moment time derivatives; zero at a stationary point."""
    return float(np.max(np.abs(moment_rhs(state, params))))
