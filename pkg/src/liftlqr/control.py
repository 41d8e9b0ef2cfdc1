"""Controllers from Riccati solutions and closed-loop comparisons."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dpare import PeriodicRiccatiSolution
from .errors import DimensionMismatch
from .lifted_dare import LiftedRiccatiSolution
from .linalg import pd_factor, pd_solve, spectral_radius, symmetrize
from .model import PeriodicSystem, Trajectory, _accumulate_cost, monodromy, simulate

__all__ = [
    "PeriodicGains",
    "LiftedController",
    "ControllerComparison",
    "gains_from_periodic",
    "controller_from_lifted",
    "controls_from_lifted",
    "simulate_lifted",
    "closed_loop_monodromy",
    "lifted_closed_loop",
    "default_periods",
    "periods_to_decay",
    "compare_controllers",
    "gain_perturbation_probe",
]


@dataclass(frozen=True)
class PeriodicGains:
    K: np.ndarray  # (p, m, n); u_k = -K[k % p] x_k

    @property
    def p(self) -> int:
        return self.K.shape[0]


@dataclass(frozen=True)
class LiftedController:
    """Receding-period controller: the state at each period start gives the whole period's inputs."""

    Kbar_active: np.ndarray  # (pm, n)
    p: int
    n: int
    m: int

    def __post_init__(self):
        if self.Kbar_active.shape != (self.p * self.m, self.n):
            raise DimensionMismatch(
                f"Kbar_active has shape {self.Kbar_active.shape}, expected {(self.p * self.m, self.n)}"
            )


def gains_from_periodic(sys: PeriodicSystem, sol: PeriodicRiccatiSolution | np.ndarray) -> PeriodicGains:
    """``K_k = (R_k + B_k' P+ B_k)^{-1} B_k' P+ A_k`` with ``P+`` the successor-phase solution."""
    P = np.asarray(getattr(sol, "P", sol))
    K = np.empty((sys.p, sys.m, sys.n))
    for k in range(sys.p):
        Pn = P[(k + 1) % sys.p]
        B = sys.B[k]
        S = symmetrize(sys.R[k] + B.T @ Pn @ B)
        c = pd_factor(S, f"innovation matrix at phase {k}")
        K[k] = pd_solve(c, B.T @ Pn @ sys.A[k])
    return PeriodicGains(K)


def controller_from_lifted(sys: PeriodicSystem, sol: LiftedRiccatiSolution) -> LiftedController:
    return LiftedController(np.asarray(sol.Kbar_active), sys.p, sys.n, sys.m)


def controls_from_lifted(ctrl: LiftedController, x_period_start) -> np.ndarray:
    """``ubar = -Kbar_active x`` split into ``p`` inputs of size ``m``."""
    x = np.asarray(x_period_start, dtype=float)
    return -(ctrl.Kbar_active @ x).reshape(ctrl.p, ctrl.m)


def simulate_lifted(sys: PeriodicSystem, ctrl: LiftedController, x0, periods: int) -> Trajectory:
    """Closed loop under the lifted controller, starting at a period boundary (time 0)."""
    p, n, m = sys.p, sys.n, sys.m
    steps = periods * p
    states = np.empty((steps + 1, n))
    us = np.empty((steps, m))
    x = np.asarray(x0, dtype=float)
    states[0] = x
    for K in range(periods):
        block = controls_from_lifted(ctrl, x)
        for j in range(p):
            t = K * p + j
            us[t] = block[j]
            x = sys.A[j] @ x + sys.B[j] @ block[j]
            states[t + 1] = x
    return Trajectory(states, us, _accumulate_cost(sys, states, us, 0), 0)


def closed_loop_monodromy(sys: PeriodicSystem, gains: PeriodicGains):
    """Return ``(prod_k (A_k - B_k K_k), spectral radius)`` over one period."""
    K = np.asarray(getattr(gains, "K", gains))
    M = monodromy([sys.A[k] - sys.B[k] @ K[k] for k in range(sys.p)])
    return M, spectral_radius(M)


def lifted_closed_loop(sys: PeriodicSystem, ctrl: LiftedController):
    """Period map ``x -> x_next`` under the lifted controller and its spectral radius."""
    M = np.eye(sys.n)
    Kb = ctrl.Kbar_active.reshape(sys.p, sys.m, sys.n)
    # with u_j = -Kb[j] x0 the state after j steps stays linear in x0
    for j in range(sys.p):
        M = sys.A[j] @ M - sys.B[j] @ Kb[j]
    return M, spectral_radius(M)


def periods_to_decay(period_map, x0, cap: int = 100) -> int:
    """Periods for ``||x||`` to fall below ``1e-8 ||x0||`` under ``period_map``, at most ``cap``."""
    x0 = np.asarray(x0, dtype=float)
    norm0 = np.linalg.norm(x0)
    if norm0 == 0.0:
        return 1
    x = x0
    for k in range(1, cap + 1):
        x = period_map @ x
        if np.linalg.norm(x) < 1e-8 * norm0:
            return k
    return cap


def default_periods(sys: PeriodicSystem, gains: PeriodicGains, x0, cap: int = 100) -> int:
    return periods_to_decay(closed_loop_monodromy(sys, gains)[0], x0, cap)


@dataclass(frozen=True)
class ControllerComparison:
    max_state_dev: float
    max_control_dev: float
    cost_a: float
    cost_b: float
    state_scale: float
    control_scale: float
    periods: int

    @property
    def rel_state_dev(self) -> float:
        return self.max_state_dev / self.state_scale if self.state_scale else self.max_state_dev

    @property
    def rel_control_dev(self) -> float:
        return self.max_control_dev / self.control_scale if self.control_scale else self.max_control_dev

    @property
    def rel_cost_dev(self) -> float:
        scale = max(abs(self.cost_a), abs(self.cost_b))
        return abs(self.cost_a - self.cost_b) / scale if scale else 0.0

    def equivalent(self, tol: float = 1e-7) -> bool:
        return max(self.rel_state_dev, self.rel_control_dev, self.rel_cost_dev) <= tol


def compare_controllers(
    sys: PeriodicSystem, gains: PeriodicGains, ctrl: LiftedController, x0, periods: int | None = None
) -> ControllerComparison:
    """Simulate periodic-gain and lifted closed loops from ``x0`` and compare."""
    if periods is None:
        periods = default_periods(sys, gains, x0)
    a = simulate(sys, x0, periods * sys.p, gains=gains)
    b = simulate_lifted(sys, ctrl, x0, periods)
    return ControllerComparison(
        max_state_dev=float(np.max(np.linalg.norm(a.states - b.states, axis=1))),
        max_control_dev=float(np.max(np.linalg.norm(a.controls - b.controls, axis=1))) if len(a.controls) else 0.0,
        cost_a=a.cost,
        cost_b=b.cost,
        state_scale=float(np.max(np.linalg.norm(a.states, axis=1))),
        control_scale=float(np.max(np.linalg.norm(a.controls, axis=1))) if len(a.controls) else 0.0,
        periods=periods,
    )


def gain_perturbation_probe(
    sys: PeriodicSystem, gains: PeriodicGains, x0, periods: int = 50, rel: float = 0.01
) -> float:
    """Largest relative cost decrease over all single-entry ``+-rel`` gain perturbations.

    Returns ``max((J0 - J) / J0)`` over perturbed gains; a non-positive value
    means no perturbation improved the simulated cost.
    """
    steps = periods * sys.p
    base = simulate(sys, x0, steps, gains=gains).cost
    K0 = np.asarray(gains.K)
    worst = -np.inf
    for idx in np.ndindex(K0.shape):
        if K0[idx] == 0.0:
            continue
        for sign in (1.0, -1.0):
            K = K0.copy()
            K[idx] *= 1.0 + sign * rel
            cost = simulate(sys, x0, steps, gains=K).cost
            worst = max(worst, (base - cost) / base)
    return float(worst)
