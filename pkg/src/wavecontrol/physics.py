"""
Closed-form linear water-wave physics.

Time convention: every complex amplitude multiplies ``exp(+j*omega*t)``.
With that convention the factor ``exp(+j*k*x)`` travels towards -x and an
outgoing wave at a truncation line with outward normal ``n`` satisfies
``d(phi)/dn + j*k*phi = 0``. Flipping the convention flips the sign of every
imaginary coupling term; do not mix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BuoyancyImbalance, NonConvergence

__all__ = [
    "RHO_WATER",
    "GRAVITY",
    "WaveEnvironment",
    "RigidBody2D",
    "solve_dispersion",
    "incident_potential",
    "incident_gradient",
    "incident_normal_derivative",
    "radiation_coefficient",
    "body_matrices",
]

RHO_WATER = 1030.0
GRAVITY = 9.81


def solve_dispersion(omega: float, depth: float, g: float = GRAVITY,
                     max_iter: int = 200) -> float:
    """Positive root ``k`` of ``omega**2 = g*k*tanh(k*depth)``.

    Newton iteration from the deep-water guess ``omega**2/g``, falling back
    to bisection whenever a Newton step leaves the current bracket.
    """
    if not (omega > 0 and depth > 0 and g > 0):
        raise ValueError("omega, depth and g must be positive")
    w2 = omega * omega

    def f(k):
        return w2 - g * k * math.tanh(k * depth)

    lo, hi = 1e-12, 10.0 * w2 / g + 10.0 / depth
    k = min(max(w2 / g, lo), hi)
    for _ in range(max_iter):
        fk = f(k)
        if abs(fk) <= 1e-15 * w2:
            return k
        if fk > 0:
            lo = k
        else:
            hi = k
        th = math.tanh(k * depth)
        # d/dk of g*k*tanh(k*h); sech^2 written via tanh to avoid cosh overflow
        dfk = -g * (th + k * depth * (1.0 - th * th))
        k_new = k - fk / dfk
        if not lo < k_new < hi:
            k_new = 0.5 * (lo + hi)
        if abs(k_new - k) <= 4e-16 * k:
            k = k_new
            if abs(f(k)) <= 1e-13 * w2:
                return k
        k = k_new
    if abs(f(k)) <= 1e-13 * w2:
        return k
    raise NonConvergence(f"dispersion root not found for omega={omega}, depth={depth}")


@dataclass(frozen=True)
class WaveEnvironment:
    """Monochromatic incident wave over constant depth.

    ``direction`` is the sign in the phase factor ``exp(j*direction*k*x)``;
    under the ``exp(+j*omega*t)`` convention ``direction=+1`` travels
    towards -x.
    """

    omega: float
    depth: float = 2.5
    amplitude: float = 1.0
    rho: float = RHO_WATER
    g: float = GRAVITY
    direction: int = 1
    k: float = field(init=False)

    def __post_init__(self):
        if not (self.rho > 0 and self.g > 0 and self.omega > 0 and self.depth > 0):
            raise ValueError("rho, g, omega and depth must be positive")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")
        object.__setattr__(self, "k", solve_dispersion(self.omega, self.depth, self.g))

    @classmethod
    def from_period(cls, period: float, **kw) -> "WaveEnvironment":
        if not period > 0:
            raise ValueError("period must be positive")
        return cls(omega=2 * math.pi / period, **kw)

    @property
    def wavelength(self) -> float:
        return 2 * math.pi / self.k

    def with_amplitude(self, amplitude: float) -> "WaveEnvironment":
        return WaveEnvironment(self.omega, self.depth, amplitude, self.rho, self.g,
                               self.direction)


def _depth_profiles(k, h0, z):
    """cosh(k(z+h0))/cosh(k h0) and sinh(k(z+h0))/cosh(k h0), overflow-safe."""
    a = np.exp(-2.0 * k * (np.asarray(z) + h0))
    b = math.exp(-2.0 * k * h0)
    e = np.exp(k * np.asarray(z))
    return e * (1.0 + a) / (1.0 + b), e * (1.0 - a) / (1.0 + b)


def incident_potential(env: WaveEnvironment, x, z):
    """Complex incident potential [m^2/s] at points ``(x, z)``."""
    ch, _ = _depth_profiles(env.k, env.depth, z)
    phase = np.exp(1j * env.direction * env.k * np.asarray(x))
    return 1j * (env.g * env.amplitude / env.omega) * ch * phase


def incident_gradient(env: WaveEnvironment, x, z):
    """Analytic ``(d/dx, d/dz)`` of :func:`incident_potential`."""
    ch, sh = _depth_profiles(env.k, env.depth, z)
    c = 1j * (env.g * env.amplitude / env.omega) * np.exp(
        1j * env.direction * env.k * np.asarray(x))
    return 1j * env.direction * env.k * c * ch, env.k * c * sh


def incident_normal_derivative(env: WaveEnvironment, x, z, n):
    n = np.asarray(n, dtype=float)
    px, pz = incident_gradient(env, x, z)
    return px * n[..., 0] + pz * n[..., 1]


def radiation_coefficient(env: WaveEnvironment) -> complex:
    """First-order absorbing coefficient on straight vertical truncation lines."""
    return 1j * env.k


@dataclass(frozen=True)
class RigidBody2D:
    """Floating circular section, per unit length; DOFs (surge, heave, roll).

    Roll ``theta`` is counter-clockwise in the x-z plane, so a point at
    offset ``(dx, dz)`` from ``ref_point`` moves by ``theta*(-dz, dx)``.
    """

    density: float
    radius: float
    ref_point: tuple[float, float] = (0.0, 0.0)
    center: tuple[float, float] = (0.0, 0.0)

    @property
    def mass(self) -> float:
        return self.density * math.pi * self.radius ** 2


def body_matrices(body: RigidBody2D, rho: float = RHO_WATER, g: float = GRAVITY,
                  rtol: float = 1e-9):
    """Mass and hydrostatic stiffness matrices (3x3) of a half-submerged circle.

    Raises
    ------
    BuoyancyImbalance
        If the body weight does not balance the displaced half-disk.
    """
    r = body.radius
    m = body.mass
    displaced = rho * math.pi * r * r / 2
    if abs(m - displaced) > rtol * displaced:
        raise BuoyancyImbalance(
            f"body mass {m:.6g} kg/m != displaced water mass {displaced:.6g} kg/m")
    xg, zg = body.ref_point
    xc, zc = body.center
    dx, dz = xc - xg, zc - zg
    J = m * (r * r / 2 + dx * dx + dz * dz)
    M = np.array([
        [m, 0.0, -m * dz],
        [0.0, m, m * dx],
        [-m * dz, m * dx, J],
    ])
    # waterline [xc - r, xc + r]: width, first and second moments about G
    a, b = xc - r - xg, xc + r - xg
    width = b - a
    I1 = (b * b - a * a) / 2
    I2 = (b ** 3 - a ** 3) / 3
    # first vertical moment of the submerged half disk about G
    IzV = (math.pi * r * r / 2) * (zc - 4 * r / (3 * math.pi) - zg)
    K = rho * g * np.array([
        [0.0, 0.0, 0.0],
        [0.0, width, I1],
        [0.0, I1, I2 + IzV],
    ])
    # exact cancellation for the centred circle; strip roundoff
    K[np.abs(K) < 1e-12 * rho * g * r ** 3] = 0.0
    return M, K
