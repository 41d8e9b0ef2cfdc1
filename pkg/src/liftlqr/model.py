"""Discrete-time p-periodic systems with quadratic cost.

The system is ``x[k+1] = A[k] x[k] + B[k] u[k]`` with ``A[k] = A[k+p]`` etc.,
and the stage cost at time ``k`` is ``0.5 * (x[k]' Q[k] x[k] + u[k]' R[k] u[k])``.
Time indices are always reduced modulo ``p``.

Phase convention used throughout the package: the Riccati matrix ``P[k]``
returned for phase ``k`` is the cost-to-go of a state observed at a time
``t`` with ``t % p == k`` (infinite-horizon cost ``0.5 * x' P[k] x``). The
optimal feedback at phase ``k`` therefore uses the successor matrix
``P[(k + 1) % p]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DimensionMismatch,
    GenerationFailed,
    NonConvergence,
    SingularInnovation,
    ValidationError,
)
from .linalg import asymmetry_norm, spectral_radius, symmetrize

__all__ = [
    "PeriodicSystem",
    "ValidationIssue",
    "ValidationReport",
    "Trajectory",
    "validate",
    "step",
    "simulate",
    "riccati_step",
    "finite_horizon_riccati",
    "converged_periodic_riccati",
    "random_stabilizable",
    "monodromy",
]


def _stack(mats, name, p=None):
    arr = np.asarray(mats, dtype=float)
    if arr.ndim == 2 and p is None:
        arr = arr[None]
    if arr.ndim != 3:
        raise DimensionMismatch(f"{name} must be a sequence of 2-D matrices, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PeriodicSystem:
    """The p-periodic quadruple ``{A_k, B_k, Q_k, R_k}``.

    Each field is stored as a read-only array of shape ``(p, rows, cols)``.
    """

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        A = _stack(self.A, "A")
        p, n, n2 = A.shape
        if n != n2:
            raise DimensionMismatch(f"A_k must be square, got {n}x{n2}")
        B = _stack(self.B, "B")
        Q = _stack(self.Q, "Q")
        R = _stack(self.R, "R")
        m = B.shape[2]
        for name, arr, shape in (("B", B, (p, n, m)), ("Q", Q, (p, n, n)), ("R", R, (p, m, m))):
            if arr.shape != shape:
                raise DimensionMismatch(f"{name} has shape {arr.shape}, expected {shape}")
        if p < 1:
            raise DimensionMismatch("period must be at least 1")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)

    @property
    def p(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.B.shape[2]

    def phase(self, k: int) -> int:
        return k % self.p

    def has_diagonal_weights(self) -> bool:
        def diag(arr):
            return not np.any(arr - arr * np.eye(arr.shape[1])[None])

        return diag(self.Q) and diag(self.R)

    def is_phase_constant(self, *names: str) -> bool:
        """True when every listed field (default A and Q) is identical across phases."""
        names = names or ("A", "Q")
        return all(np.array_equal(getattr(self, f), np.broadcast_to(getattr(self, f)[0], getattr(self, f).shape))
                   for f in names)

    def shifted(self, shift: int) -> "PeriodicSystem":
        """The same system with phase ``k`` relabelled ``k - shift``."""
        idx = [(k + shift) % self.p for k in range(self.p)]
        return PeriodicSystem(self.A[idx], self.B[idx], self.Q[idx], self.R[idx])


@dataclass(frozen=True)
class ValidationIssue:
    kind: str
    matrix: str
    phase: int
    value: float

    def __str__(self):
        return f"{self.matrix} at phase {self.phase}: {self.kind} (measured {self.value:.3e})"


@dataclass
class ValidationReport:
    issues: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def raise_if_failed(self):
        if self.issues:
            raise ValidationError(self)

    def __str__(self):
        if self.ok:
            return "pass"
        return "; ".join(str(i) for i in self.issues)


def validate(sys: PeriodicSystem) -> ValidationReport:
    """Check symmetry/definiteness of the weights at every phase.

    ``Q_k`` must be symmetric PSD and ``R_k`` symmetric PD. Offending phases
    are reported with the measured asymmetry or minimum eigenvalue.
    """
    report = ValidationReport()
    for k in range(sys.p):
        for name, M, strict in (("Q", sys.Q[k], False), ("R", sys.R[k], True)):
            asym = asymmetry_norm(M)
            if asym > 1e-10:
                report.issues.append(ValidationIssue("not symmetric", name, k, asym))
                continue
            scale = np.linalg.norm(M, 2)
            lam = float(np.linalg.eigvalsh(symmetrize(M)).min()) if M.size else 1.0
            if strict:
                if not (lam > 0.0 and lam >= 1e-12 * scale):
                    report.issues.append(ValidationIssue("not positive definite", name, k, lam))
            elif lam < -1e-10 * scale:
                report.issues.append(ValidationIssue("not positive semidefinite", name, k, lam))
    return report


def step(sys: PeriodicSystem, k: int, x, u) -> np.ndarray:
    """One transition ``A_{k mod p} x + B_{k mod p} u``."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (sys.n,) or u.shape != (sys.m,):
        raise DimensionMismatch(f"expected x of shape ({sys.n},) and u of shape ({sys.m},), "
                                f"got {x.shape} and {u.shape}")
    j = k % sys.p
    return sys.A[j] @ x + sys.B[j] @ u


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray
    controls: np.ndarray
    cost: float
    start: int = 0

    def recompute_cost(self, sys: PeriodicSystem) -> float:
        return _accumulate_cost(sys, self.states, self.controls, self.start)


def _accumulate_cost(sys, states, controls, start):
    cost = 0.0
    for i, u in enumerate(controls):
        j = (start + i) % sys.p
        x = states[i]
        cost += 0.5 * (x @ sys.Q[j] @ x + u @ sys.R[j] @ u)
    return float(cost)


def simulate(
    sys: PeriodicSystem,
    x0,
    steps: Optional[int] = None,
    *,
    controls=None,
    gains=None,
    start: int = 0,
) -> Trajectory:
    """Simulate from ``x0`` at time ``start`` under an open-loop control
    sequence or under periodic state feedback ``u = -K[k mod p] x``.

    Exactly one of ``controls`` (shape ``(steps, m)``) and ``gains`` (shape
    ``(p, m, n)`` or a :class:`~liftlqr.control.PeriodicGains`) must be given.
    """
    if (controls is None) == (gains is None):
        raise ValueError("give exactly one of controls= or gains=")
    x = np.asarray(x0, dtype=float)
    if x.shape != (sys.n,):
        raise DimensionMismatch(f"x0 must have shape ({sys.n},), got {x.shape}")
    if controls is not None:
        controls = np.asarray(controls, dtype=float).reshape(-1, sys.m)
        if steps is None:
            steps = controls.shape[0]
        if controls.shape[0] < steps:
            raise DimensionMismatch(f"{controls.shape[0]} controls supplied for {steps} steps")
    else:
        K = np.asarray(getattr(gains, "K", gains), dtype=float)
        if K.shape != (sys.p, sys.m, sys.n):
            raise DimensionMismatch(f"gains must have shape {(sys.p, sys.m, sys.n)}, got {K.shape}")
        if steps is None:
            raise ValueError("steps is required for feedback simulation")
    states = np.empty((steps + 1, sys.n))
    us = np.empty((steps, sys.m))
    states[0] = x
    for i in range(steps):
        t = start + i
        u = controls[i] if controls is not None else -(K[t % sys.p] @ x)
        us[i] = u
        x = step(sys, t, x, u)
        states[i + 1] = x
    return Trajectory(states, us, _accumulate_cost(sys, states, us, start), start)


def riccati_step(sys: PeriodicSystem, k: int, P_next) -> np.ndarray:
    """Backward Riccati map: cost-to-go at phase ``k`` from the one at ``k+1``."""
    j = k % sys.p
    A, B = sys.A[j], sys.B[j]
    PA = P_next @ A
    PB = P_next @ B
    S = sys.R[j] + B.T @ PB
    try:
        c = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation(f"R_{j} + B_{j}' P B_{j} is not positive definite") from exc
    L = np.linalg.solve(c, B.T @ PA)
    return symmetrize(sys.Q[j] + A.T @ PA - L.T @ L)


def finite_horizon_riccati(sys: PeriodicSystem, terminal, horizon: int) -> np.ndarray:
    """Backward dynamic-programming recursion over ``horizon`` steps.

    Returns an array of shape ``(horizon + 1, n, n)`` whose entry ``t`` is the
    cost-to-go at time ``t`` (phase ``t % p``); entry ``horizon`` is ``terminal``.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    terminal = np.asarray(terminal, dtype=float)
    if terminal.shape != (sys.n, sys.n):
        raise DimensionMismatch(f"terminal must be {sys.n}x{sys.n}")
    out = np.empty((horizon + 1, sys.n, sys.n))
    out[horizon] = symmetrize(terminal)
    for t in range(horizon - 1, -1, -1):
        out[t] = riccati_step(sys, t, out[t + 1])
    return out


def converged_periodic_riccati(
    sys: PeriodicSystem, tol: float = 1e-10, max_periods: int = 200_000, return_periods: bool = False
):
    """Iterate the Riccati recursion backward from zero, one period at a time,
    until every phase changes by at most ``tol`` (relative) over a period.

    This is the reference value all steady-state solvers are checked against.
    Returns an array ``(p, n, n)`` indexed by phase.
    """
    p, n = sys.p, sys.n
    P = np.zeros((n, n))
    prev = None
    for period in range(1, max_periods + 1):
        cur = np.empty((p, n, n))
        for k in range(p - 1, -1, -1):
            P = riccati_step(sys, k, P)
            cur[k] = P
        if prev is not None:
            change = max(np.linalg.norm(cur[k] - prev[k]) / max(1.0, np.linalg.norm(cur[k])) for k in range(p))
            if change <= tol:
                return (cur, period) if return_periods else cur
        prev = cur
    raise NonConvergence(f"finite-horizon recursion did not converge in {max_periods} periods")


def monodromy(mats) -> np.ndarray:
    """Ordered product ``M[p-1] @ ... @ M[0]``."""
    out = np.eye(mats[0].shape[0])
    for M in mats:
        out = M @ out
    return out


def random_stabilizable(
    p: int, n: int, m: int, seed: int, dense_weights: bool = False, max_tries: int = 50
) -> PeriodicSystem:
    """Seeded random periodic system for testing.

    Every ``A_k`` has singular values at least 0.05, the open-loop monodromy
    has spectral radius at most 1.5, and the weights are positive diagonal
    (or dense SPD with ``dense_weights=True``).
    """
    if min(p, n, m) < 1:
        raise ValueError("p, n, m must all be >= 1")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        A = np.empty((p, n, n))
        for k in range(p):
            U, _ = np.linalg.qr(rng.standard_normal((n, n)))
            V, _ = np.linalg.qr(rng.standard_normal((n, n)))
            A[k] = U @ np.diag(rng.uniform(0.3, 1.3, n)) @ V.T
        rho = spectral_radius(monodromy(A))
        if rho > 1.5:
            A *= (1.5 / rho) ** (1.0 / p) * 0.98
        svmin = min(np.linalg.svd(a, compute_uv=False).min() for a in A)
        if svmin < 0.05 or spectral_radius(monodromy(A)) > 1.5:
            continue
        B = rng.standard_normal((p, n, m))
        if dense_weights:
            Q = np.empty((p, n, n))
            R = np.empty((p, m, m))
            for k in range(p):
                G = rng.standard_normal((n, n))
                Q[k] = symmetrize(G @ G.T / n + 0.1 * np.eye(n))
                H = rng.standard_normal((m, m))
                R[k] = symmetrize(H @ H.T / m + 0.2 * np.eye(m))
        else:
            Q = np.stack([np.diag(rng.uniform(0.2, 2.0, n)) for _ in range(p)])
            R = np.stack([np.diag(rng.uniform(0.2, 2.0, m)) for _ in range(p)])
        sys = PeriodicSystem(A, B, Q, R)
        if validate(sys).ok:
            return sys
    raise GenerationFailed(f"no admissible system after {max_tries} tries (p={p}, n={n}, m={m}, seed={seed})")
