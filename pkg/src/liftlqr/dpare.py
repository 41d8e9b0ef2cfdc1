"""Classical solvers for the discrete-time periodic algebraic Riccati equation.

Both solvers build, for every phase ``k``, the one-period transition of the
state/costate pair ``z_k = [x_k; y_k]`` from the per-phase factors

    E_k = [[I, B_k R_k^{-1} B_k'], [0, A_k']],    F_k = [[A_k, 0], [-Q_k, I]],

which satisfy ``E_k z_{k+1} = F_k z_k``, and read ``P_k`` off a stable invariant
subspace spanned by ``[I; P_k]``:

* ``solve_hench_laub`` orders the forward product ``Pi_k`` (``z_{k+p} = Pi_k z_k``)
  with the eigenvalues inside the unit circle leading;
* ``solve_yang`` orders the backward product ``Gamma_k = Pi_k^{-1}``
  (``z_k = Gamma_k z_{k+p}``) with the eigenvalues outside the unit circle leading.

``P_k`` is the cost-to-go at phase ``k`` (see :mod:`liftlqr.model`).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import (
    IllConditionedSubspace,
    NoStabilizingSolution,
    SingularMatrix,
    SingularStateMatrix,
)
from .linalg import (
    CONDITION_LIMIT,
    DEFAULT_MARGIN,
    SpectralRegion,
    order_schur,
    pd_factor,
    pd_solve,
    solve_left,
    solve_right,
    symmetrize,
)
from .model import PeriodicSystem, validate

__all__ = [
    "HamiltonianFactors",
    "PeriodicRiccatiSolution",
    "build_factors",
    "build_pi",
    "build_gamma",
    "dpare_residuals",
    "solve_hench_laub",
    "solve_yang",
]


@dataclass(frozen=True)
class HamiltonianFactors:
    E: np.ndarray  # (p, 2n, 2n)
    F: np.ndarray  # (p, 2n, 2n)


@dataclass(frozen=True)
class PeriodicRiccatiSolution:
    P: np.ndarray          # (p, n, n), indexed by phase
    residuals: np.ndarray  # (p,)
    solver_tag: str
    info: dict = field(default_factory=dict)

    @property
    def residual_max(self) -> float:
        return float(np.max(self.residuals))


def build_factors(sys: PeriodicSystem) -> HamiltonianFactors:
    p, n = sys.p, sys.n
    E = np.zeros((p, 2 * n, 2 * n))
    F = np.zeros((p, 2 * n, 2 * n))
    eye = np.eye(n)
    for k in range(p):
        B = sys.B[k]
        G = symmetrize(B @ pd_solve(pd_factor(sys.R[k], f"R_{k}"), B.T))
        E[k, :n, :n] = eye
        E[k, :n, n:] = G
        E[k, n:, n:] = sys.A[k].T
        F[k, :n, :n] = sys.A[k]
        F[k, n:, :n] = -sys.Q[k]
        F[k, n:, n:] = eye
    return HamiltonianFactors(E, F)


def _check_state_matrices(sys: PeriodicSystem, limit=CONDITION_LIMIT):
    for j in range(sys.p):
        try:
            solve_left(sys.A[j], np.eye(sys.n), limit)
        except SingularMatrix as exc:
            raise SingularStateMatrix(j, exc.condition) from None


def build_pi(sys: PeriodicSystem, k: int, factors: HamiltonianFactors | None = None) -> np.ndarray:
    """``Pi_k = E_{k+p-1}^{-1} F_{k+p-1} ... E_k^{-1} F_k``, one solve per factor."""
    if factors is None:
        _check_state_matrices(sys)
        factors = build_factors(sys)
    p = sys.p
    M = np.eye(2 * sys.n)
    for i in range(k, k + p):
        j = i % p
        M = np.linalg.solve(factors.E[j], factors.F[j] @ M)
    return M


def build_gamma(
    sys: PeriodicSystem,
    k: int,
    factors: HamiltonianFactors | None = None,
    fast: bool | None = None,
) -> np.ndarray:
    """``Gamma_k = F_k^{-1} E_k ... F_{k+p-1}^{-1} E_{k+p-1}``.

    With ``fast=True`` (default when ``A`` and ``Q`` are phase-constant) the
    constant ``F`` is factored once and the factorization reused for every
    phase; otherwise each ``F_j`` is factored in turn.
    """
    if factors is None:
        _check_state_matrices(sys)
        factors = build_factors(sys)
    if fast is None:
        fast = sys.is_phase_constant("A", "Q")
    p = sys.p
    M = np.eye(2 * sys.n)
    shared = sla.lu_factor(factors.F[0], check_finite=False) if fast else None
    for i in range(k + p - 1, k - 1, -1):
        j = i % p
        lu = shared if fast else sla.lu_factor(factors.F[j], check_finite=False)
        M = sla.lu_solve(lu, factors.E[j] @ M, check_finite=False)
    return M


def dpare_residuals(sys: PeriodicSystem, P) -> np.ndarray:
    """Relative residual of every phase equation, ``||res_k|| / (1 + ||P_k||)``.

    ``res_k = A' P+ A - P_k - A' P+ B (R + B' P+ B)^{-1} B' P+ A + Q`` with
    ``P+ = P[(k+1) % p]``.
    """
    p = sys.p
    out = np.empty(p)
    for k in range(p):
        A, B, Pn = sys.A[k], sys.B[k], P[(k + 1) % p]
        PA = Pn @ A
        S = sys.R[k] + B.T @ Pn @ B
        BPA = B.T @ PA
        res = A.T @ PA - P[k] - BPA.T @ np.linalg.solve(S, BPA) + sys.Q[k]
        out[k] = np.linalg.norm(res, 2) / (1.0 + np.linalg.norm(P[k], 2))
    return out


def _subspace_solution(M, region, n):
    form = order_schur(M, region)
    if form.leading_count != n:
        raise NoStabilizingSolution(
            f"{form.leading_count} eigenvalues in the {region.kind.value} region, expected {n}"
        )
    U = form.orthogonal
    try:
        X = solve_right(U[:n, :n], U[n:, :n])
    except SingularMatrix as exc:
        raise IllConditionedSubspace("leading basis block is singular", exc.condition) from None
    return symmetrize(X)


def _solve(sys, build, region, tag, info):
    validate(sys).raise_if_failed()
    _check_state_matrices(sys)
    factors = build_factors(sys)
    P = np.empty((sys.p, sys.n, sys.n))
    for k in range(sys.p):
        P[k] = _subspace_solution(build(sys, k, factors), region, sys.n)
    return PeriodicRiccatiSolution(P, dpare_residuals(sys, P), tag, info)


def solve_hench_laub(sys: PeriodicSystem, margin: float = DEFAULT_MARGIN) -> PeriodicRiccatiSolution:
    """Per-phase ordered Schur of ``Pi_k`` (stable eigenvalues first), ``P_k = T21 T11^{-1}``."""
    return _solve(sys, build_pi, SpectralRegion.inside(margin), "hench_laub", {})


def solve_yang(
    sys: PeriodicSystem, margin: float = DEFAULT_MARGIN, fast: bool | None = None
) -> PeriodicRiccatiSolution:
    """Per-phase ordered Schur of ``Gamma_k`` (anti-stable eigenvalues first), ``P_k = W21 W11^{-1}``."""
    if fast is None:
        fast = sys.is_phase_constant("A", "Q")

    def build(s, k, factors):
        return build_gamma(s, k, factors, fast=fast)

    return _solve(sys, build, SpectralRegion.outside(margin), "yang", {"fast_path": bool(fast)})
