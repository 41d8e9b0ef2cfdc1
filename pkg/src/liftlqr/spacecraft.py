"""Representative periodic spacecraft attitude models.

Linearized rigid-body attitude about the local-vertical/local-horizontal frame
of a circular orbit, with gravity-gradient stiffness, sampled ``p`` times per
orbit by zero-order hold. Magnetic torquers produce ``tau = m x b(t)``, with
the geomagnetic field ``b(t)`` taken from a tilted-dipole model that is
periodic in the orbit. Because the orbit dynamics are time-invariant, every
``A_k`` is the same matrix; only the magnetic columns of ``B_k`` vary.

States are nondimensional so that the Riccati problems stay well scaled:
attitude angles (rad), body rates divided by the orbital rate, and (for the
wheel model) wheel momenta divided by ``J_i * orbital_rate``. Inputs are
normalized by the actuator scale (``dipole_scale`` in A m^2, ``wheel_torque_scale``
in N m), so unit weights are a sensible default.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import GenerationFailed, NonConvergence
from .model import PeriodicSystem, converged_periodic_riccati

__all__ = [
    "SpacecraftParams",
    "field_in_orbit_frame",
    "gen_magnetic_attitude",
    "gen_wheels_magnetic",
]


@dataclass(frozen=True)
class SpacecraftParams:
    p: int = 100
    inertia: tuple = (20.0, 25.0, 15.0)   # kg m^2, roll/pitch/yaw principal axes
    inclination: float = np.radians(87.0)  # rad
    orbital_rate: float = 0.0011          # rad/s
    field_strength: float = 2.5e-5        # T, dipole field magnitude at the equator
    dipole_scale: float = 0.2             # A m^2 per unit input
    wheel_torque_scale: float = 3e-6      # N m per unit input
    state_weight: float = 1.0
    input_weight: float = 1.0
    check: bool = True

    @property
    def sample_time(self) -> float:
        return 2.0 * np.pi / self.orbital_rate / self.p


def _skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def field_in_orbit_frame(t, params: SpacecraftParams) -> np.ndarray:
    """Tilted-dipole field at orbit time ``t`` (s), in the orbit frame (T)."""
    s, c = np.sin(params.inclination), np.cos(params.inclination)
    wt = params.orbital_rate * t
    return params.field_strength * np.array([np.cos(wt) * s, -c, 2.0 * np.sin(wt) * s])


def _attitude_matrix(params: SpacecraftParams) -> np.ndarray:
    J1, J2, J3 = params.inertia
    w0 = params.orbital_rate
    A = np.zeros((6, 6))
    A[:3, 3:] = w0 * np.eye(3)
    A[3, 0] = -4.0 * w0 * (J2 - J3) / J1
    A[3, 5] = w0 * (J1 - J2 + J3) / J1
    A[4, 1] = -3.0 * w0 * (J1 - J3) / J2
    A[5, 2] = -w0 * (J2 - J1) / J3
    A[5, 3] = -w0 * (J1 - J2 + J3) / J3
    return A


def _zoh(Ac, dt):
    """``(expm(Ac dt), int_0^dt expm(Ac s) ds)``."""
    n = Ac.shape[0]
    E = sla.expm(np.block([[Ac, np.eye(n)], [np.zeros((n, 2 * n))]]) * dt)
    return E[:n, :n], E[:n, n:]


def _magnetic_input(t, params: SpacecraftParams) -> np.ndarray:
    # body-rate rows of d(omega/w0)/dt per unit normalized dipole
    b = field_in_orbit_frame(t, params)
    J = np.asarray(params.inertia, dtype=float)
    return (_skew(b).T / J[:, None]) * (params.dipole_scale / params.orbital_rate)


def _finish(A, B, params: SpacecraftParams) -> PeriodicSystem:
    p, n, m = B.shape
    Q = np.repeat((params.state_weight * np.eye(n))[None], p, axis=0)
    R = np.repeat((params.input_weight * np.eye(m))[None], p, axis=0)
    sys = PeriodicSystem(np.repeat(A[None], p, axis=0), B, Q, R)
    if params.check:
        try:
            converged_periodic_riccati(sys, tol=1e-10, max_periods=20_000)
        except NonConvergence as exc:
            raise GenerationFailed(f"finite-horizon oracle did not converge: {exc}") from exc
    return sys


def gen_magnetic_attitude(params: SpacecraftParams | None = None, **overrides) -> PeriodicSystem:
    """Attitude control with three magnetic torquers only (n=6, m=3)."""
    params = _params(params, overrides)
    if params.p < 2:
        raise ValueError("p must be at least 2")
    dt = params.sample_time
    Ac = _attitude_matrix(params)
    A, Gam = _zoh(Ac, dt)
    B = np.empty((params.p, 6, 3))
    for k in range(params.p):
        Bc = np.zeros((6, 3))
        Bc[3:] = _magnetic_input(k * dt, params)
        B[k] = Gam @ Bc
    return _finish(A, B, params)


def gen_wheels_magnetic(params: SpacecraftParams | None = None, **overrides) -> PeriodicSystem:
    """Attitude plus wheel-momentum management (n=9, m=6).

    Inputs are three wheel torques (phase-constant columns) followed by three
    magnetic dipoles (periodic columns). A wheel torque accelerates its wheel
    and reacts on the body with opposite sign.
    """
    params = _params(params, overrides)
    if params.p < 2:
        raise ValueError("p must be at least 2")
    dt = params.sample_time
    w0 = params.orbital_rate
    J = np.asarray(params.inertia, dtype=float)
    Ac = np.zeros((9, 9))
    Ac[:6, :6] = _attitude_matrix(params)
    A, Gam = _zoh(Ac, dt)
    wheel = np.zeros((9, 3))
    wheel[3:6] = -np.diag(params.wheel_torque_scale / (J * w0))
    wheel[6:9] = np.diag(params.wheel_torque_scale / (J * w0))
    B = np.empty((params.p, 9, 6))
    for k in range(params.p):
        Bc = np.zeros((9, 6))
        Bc[:, :3] = wheel
        Bc[3:6, 3:] = _magnetic_input(k * dt, params)
        B[k] = Gam @ Bc
    return _finish(A, B, params)


def _params(params, overrides):
    if params is None:
        params = SpacecraftParams()
    if overrides:
        params = SpacecraftParams(**{**params.__dict__, **overrides})
    return params
