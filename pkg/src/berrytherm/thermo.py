"""Physical constants, thermal squeeze parameters, and thermal states.

The thermal weight of Fock level n at temperature T is
tanh^{2n}(r_T)/cosh^2(r_T) with tanh r_T = exp(-hbar*omega / (2 k_B T)); the
same squeeze parameter describes the state seen by a uniformly accelerated
observer at the corresponding Unruh temperature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fockspace import DensityMatrix, FockDims

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "ThermalStateSpec",
    "unruh_temperature",
    "squeeze_from_temperature",
    "temperature_from_squeeze",
    "thermal_weights",
    "thermal_density_matrix",
]

TAIL_TARGET = 1e-12


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA values; immutable."""

    hbar: float = 1.054571817e-34   # J s
    k_B: float = 1.380649e-23       # J / K
    c: float = 2.99792458e8         # m / s


CONSTANTS = PhysicalConstants()


def unruh_temperature(accel: float) -> float:
    """Unruh temperature T_U = hbar a / (2 pi c k_B) in kelvin; linear in a."""
    if accel <= 0.0:
        raise ValueError(f"acceleration must be positive, got {accel}")
    return CONSTANTS.hbar * accel / (2.0 * np.pi * CONSTANTS.c * CONSTANTS.k_B)


def boltzmann_exponent(omega: float, temperature: float) -> float:
    """hbar*omega / (k_B T)."""
    if omega <= 0.0:
        raise ValueError(f"mode frequency must be positive, got {omega}")
    if temperature <= 0.0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    return CONSTANTS.hbar * omega / (CONSTANTS.k_B * temperature)


def squeeze_from_temperature(omega: float, temperature: float) -> "ThermalSqueeze":
    """r_T with tanh r_T = exp(-hbar omega / 2 k_B T).

    arctanh(e^{-y}) is evaluated as (log1p(e^{-y}) - log(-expm1(-y)))/2, which
    keeps full precision in the high-temperature regime where e^{-y} -> 1.
    """
    from .geomphase import ThermalSqueeze  # local import to avoid a cycle

    y = 0.5 * boltzmann_exponent(omega, temperature)
    r = 0.5 * (math.log1p(math.exp(-y)) - math.log(-math.expm1(-y)))
    return ThermalSqueeze(r=float(r), origin=f"thermal(omega={omega:g}, T={temperature:g})")


def temperature_from_squeeze(omega: float, r) -> float:
    """Inverse of squeeze_from_temperature: T = hbar omega / (-2 k_B ln tanh r).

    r = 0 is the T = 0 boundary and is returned as exactly 0.0.
    """
    rv = float(getattr(r, "r", r))
    if rv < 0.0:
        raise ValueError(f"squeeze parameter must be >= 0, got {rv}")
    if omega <= 0.0:
        raise ValueError(f"mode frequency must be positive, got {omega}")
    if rv == 0.0:
        return 0.0
    # ln tanh r = log1p(-e^{-2r}) - log1p(e^{-2r}), stable at both ends
    x = math.exp(-2.0 * rv)
    log_tanh = math.log1p(-x) - math.log1p(x)
    if log_tanh >= 0.0:
        raise ValueError("tanh r must stay below 1")
    return CONSTANTS.hbar * omega / (-2.0 * CONSTANTS.k_B * log_tanh)


def thermal_weights(r: float, n_max: int) -> tuple[np.ndarray, float]:
    """Geometric weights tanh^{2n}r / cosh^2 r for n = 0..n_max and the exact
    tail sum tanh^{2(n_max+1)} r."""
    q = np.tanh(r) ** 2
    n = np.arange(n_max + 1)
    if q == 0.0:
        w = np.zeros(n_max + 1)
        w[0] = 1.0
        return w, 0.0
    w = (1.0 - q) * q ** n
    tail = float(q ** (n_max + 1))
    return w, tail


def required_levels(r: float, tail_target: float = TAIL_TARGET) -> int:
    """Smallest n_max with geometric tail tanh^{2(n_max+1)} r < tail_target."""
    q = np.tanh(r) ** 2
    if q == 0.0:
        return 0
    n = int(np.ceil(np.log(tail_target) / np.log(q))) - 1
    return max(n, 0)


@dataclass(frozen=True)
class ThermalStateSpec:
    """Single-mode thermal state at (omega, temperature), truncated at n_max."""

    omega: float
    temperature: float
    n_max: int

    @property
    def r_T(self) -> float:
        return float(np.arctanh(np.exp(-0.5 * boltzmann_exponent(self.omega, self.temperature))))

    @property
    def tail(self) -> float:
        return float(np.tanh(self.r_T) ** (2 * (self.n_max + 1)))

    @classmethod
    def for_tail(cls, omega: float, temperature: float, tail_target: float = TAIL_TARGET):
        r = squeeze_from_temperature(omega, temperature).r
        return cls(omega, temperature, required_levels(r, tail_target))


def thermal_density_matrix(spec: ThermalStateSpec, dims: FockDims, mode: str = "field") -> DensityMatrix:
    """Diagonal thermal state on one mode, ground state on the other.

    Trace is 1 - tanh^{2(n_max+1)} r exactly; the deficit is surfaced on the
    returned DensityMatrix, never silently renormalized.  Refuses if the
    truncation tail misses the 1e-12 target or n_max does not fit the cutoff.
    """
    n_levels = dims.n_field if mode == "field" else dims.n_det
    if mode not in ("field", "detector"):
        raise ValueError(f"unknown mode {mode!r}")
    if spec.n_max >= n_levels:
        raise ValueError(f"n_max={spec.n_max} does not fit below the cutoff {n_levels}")
    if spec.tail >= TAIL_TARGET:
        raise ValueError(
            f"truncation tail {spec.tail:.3e} >= {TAIL_TARGET:g}; "
            f"need n_max >= {required_levels(spec.r_T)}"
        )
    w, tail = thermal_weights(spec.r_T, spec.n_max)
    diag_mode = np.zeros(n_levels)
    diag_mode[: spec.n_max + 1] = w
    ground = np.zeros(dims.n_det if mode == "field" else dims.n_field)
    ground[0] = 1.0
    if mode == "field":
        diag = np.kron(diag_mode, ground)
    else:
        diag = np.kron(ground, diag_mode)
    return DensityMatrix(dims, np.diag(diag.astype(complex)), trace_deficit=tail)
