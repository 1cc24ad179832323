"""Physical parameters, field models and the second-order moment state.

Canonical variable order is ``(x, y, z, px, py, pz)``.  Second-order moments
are stored once per unordered pair ``a <= b`` in lexicographic order, giving
21 slots::

    xx xy xz xpx xpy xpz yy yz ypx ypy ypz zz zpx zpy zpz
    pxpx pxpy pxpz pypy pypz pzpz

A moment is the symmetrized covariance
``D(ab) = <(ab + ba)/2> - <a><b>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Union

import numpy as np

VARIABLES = ("x", "y", "z", "px", "py", "pz")
AXES = ("x", "y", "z")
N_MEAN = 6
N_MOMENTS = 21
N_STATE = N_MEAN + N_MOMENTS

_PAIRS = tuple((i, j) for i in range(N_MEAN) for j in range(i, N_MEAN))
_OFFSET = {}
for _k, (_i, _j) in enumerate(_PAIRS):
    _OFFSET[_i, _j] = _k
    _OFFSET[_j, _i] = _k
del _k, _i, _j


def _name(i, j):
    a, b = VARIABLES[i], VARIABLES[j]
    return a + "2" if i == j else a + b


# Column labels used in serialized output: dx2, dxy, ..., dpz2.
MOMENT_NAMES = tuple("d" + _name(i, j) for i, j in _PAIRS)


def variable_index(v) -> int:
    """Map a variable name (``"x"``..``"pz"``) or integer index to 0..5."""
    if isinstance(v, str):
        try:
            return VARIABLES.index(v)
        except ValueError:
            raise KeyError(f"unknown variable {v!r}") from None
    i = int(v)
    if not 0 <= i < N_MEAN:
        raise KeyError(f"variable index {v} out of range")
    return i


def axis_index(a) -> int:
    if isinstance(a, str):
        try:
            return AXES.index(a)
        except ValueError:
            raise KeyError(f"unknown axis {a!r}") from None
    i = int(a)
    if not 0 <= i < 3:
        raise KeyError(f"axis index {a} out of range")
    return i


def moment_offset(a, b) -> int:
    """Flat offset of D(ab) in the 21-slot layout; symmetric in its arguments."""
    return _OFFSET[variable_index(a), variable_index(b)]


def moment_pair(offset: int) -> tuple[int, int]:
    """Inverse of :func:`moment_offset`; returns ``(i, j)`` with ``i <= j``."""
    return _PAIRS[offset]


# -- field models -----------------------------------------------------------


@dataclass(frozen=True)
class ConstantZ:
    """Uniform field ``B = (0, 0, b0)``; divergence free."""

    b0: float

    def bz(self, z):
        return self.b0

    def gradient(self):
        return np.zeros((3, 3))


@dataclass(frozen=True)
class LinearZ:
    """Monopole-density field ``B = (0, 0, mu * z)`` with ``div B = mu``."""

    mu: float

    def bz(self, z):
        return self.mu * z

    def gradient(self):
        g = np.zeros((3, 3))
        g[2, 2] = self.mu
        return g


FieldModel = Union[ConstantZ, LinearZ]


def field_eval(field: FieldModel, position) -> np.ndarray:
    """Magnetic field vector at ``position``."""
    return np.array([0.0, 0.0, field.bz(float(position[2]))])


def divergence(field: FieldModel) -> float:
    """Magnetic charge density; position independent for both models."""
    return float(np.trace(field.gradient()))


# -- parameters ---------------------------------------------------------------


@dataclass(frozen=True)
class Params:
    """Particle, trap and field parameters in one consistent unit system.

    ``charge > 0`` is the tested convention.  Negative charges are accepted;
    saturation then uses ``|e B|`` so variances stay non-negative.
    """

    mass: float = 1.0
    charge: float = 1.0
    omega: float = 1.0
    hbar: float = 1.0
    field: FieldModel = dc_field(default_factory=lambda: LinearZ(1.0))

    def __post_init__(self):
        for name in ("mass", "charge", "omega", "hbar"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not self.mass > 0:
            raise ValueError(f"mass must be > 0, got {self.mass}")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be > 0, got {self.hbar}")
        if not self.omega >= 0:
            raise ValueError(f"omega must be >= 0, got {self.omega}")
        if not isinstance(self.field, (ConstantZ, LinearZ)):
            raise TypeError("field must be ConstantZ or LinearZ")

    def bz(self, z: float) -> float:
        return self.field.bz(z)


# -- algebraic diagnostics ----------------------------------------------------


def levi_civita(i, j, k) -> int:
    i, j, k = axis_index(i), axis_index(j), axis_index(k)
    return (i - j) * (j - k) * (k - i) // 2


def momentum_commutator_coefficient(field: FieldModel, j, k, position, charge=1.0) -> float:
    """Real ``C`` with ``[p_j, p_k] = i hbar C`` at ``position``.

    ``C = e * sum_l eps_{jkl} B^l(position)``.
    """
    b = field_eval(field, position)
    return charge * sum(levi_civita(j, k, l) * b[l] for l in range(3))


def jacobiator(params: Params) -> float:
    """Cyclic sum ``[[px,py],pz] + [[py,pz],px] + [[pz,px],py]``.

    Each nested term is ``[i hbar C_jk(q), p_l] = i hbar * i hbar * d_l C_jk``,
    so the sum is ``-hbar^2 * sum_cyc e eps_{jkm} d_l B^m = -e hbar^2 div B``.
    """
    grad = params.field.gradient()  # grad[l, m] = d_l B^m
    total = 0.0
    for j, k, l in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        dc = params.charge * sum(levi_civita(j, k, m) * grad[l, m] for m in range(3))
        total += dc
    if total == 0.0:
        return 0.0
    return -params.hbar ** 2 * total


# -- state ----------------------------------------------------------------------


def _frozen(a, n, what):
    arr = np.array(a, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise ValueError(f"{what} must have {n} entries, got {arr.size}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MomentState:
    """Means of the six canonical variables plus their 21 second moments."""

    mean: np.ndarray
    moments: np.ndarray
    check: bool = dc_field(default=True, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "mean", _frozen(self.mean, N_MEAN, "mean"))
        object.__setattr__(self, "moments", _frozen(self.moments, N_MOMENTS, "moments"))
        if self.check:
            if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.moments))):
                raise ValueError("state contains non-finite values")
            for i in range(N_MEAN):
                if self.moments[_OFFSET[i, i]] < 0:
                    raise ValueError(f"negative variance D({_name(i, i)})")

    @classmethod
    def classical(cls, mean) -> "MomentState":
        """Point state: all second moments zero."""
        return cls(mean, np.zeros(N_MOMENTS))

    @classmethod
    def from_vector(cls, y, check=False) -> "MomentState":
        y = np.asarray(y, dtype=float)
        return cls(y[:N_MEAN], y[N_MEAN:], check=check)

    @classmethod
    def from_matrix(cls, mean, cov, check=True) -> "MomentState":
        cov = np.asarray(cov, dtype=float)
        return cls(mean, [cov[i, j] for i, j in _PAIRS], check=check)

    def moment(self, a, b) -> float:
        return float(self.moments[moment_offset(a, b)])

    def matrix(self) -> np.ndarray:
        """Symmetric 6x6 second-moment matrix."""
        m = np.empty((N_MEAN, N_MEAN))
        for k, (i, j) in enumerate(_PAIRS):
            m[i, j] = m[j, i] = self.moments[k]
        return m

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.mean, self.moments])

    def __eq__(self, other):
        if not isinstance(other, MomentState):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.moments, other.moments)


def energy(state: MomentState, params: Params) -> float:
    """Expectation value of the Hamiltonian at second order."""
    m, w = params.mass, params.omega
    px, py, pz = state.mean[3:]
    z = state.mean[2]
    d = state.moments
    kinetic = px * px + py * py + pz * pz + d[15] + d[18] + d[20]
    return kinetic / (2 * m) + 0.5 * m * w * w * (z * z + d[11])
