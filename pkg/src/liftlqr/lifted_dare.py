"""Riccati solution of the lifted system through one n-dimensional DARE.

Because the lifted state matrix has ``(p-1) n`` zero leading columns, the
stabilizing solution of the ``pn``-dimensional lifted DARE is block diagonal,
``Pbar = diag(Qbar1, Phat)``, where ``Phat`` solves the cross-term DARE

    Ahat' P Ahat - P - (Ahat' P Bhat + Shat)(Bhat' P Bhat + Rhat)^{-1}(Bhat' P Ahat + Shat') + Qhat = 0

with ``Ahat = Abar2``, ``Bhat = Bbar2``, ``Qhat = Qbar2 + Abar1' Qbar1 Abar1``,
``Rhat = Rbar + Bbar1' Qbar1 Bbar1`` and ``Shat = Abar1' Qbar1 Bbar1``.

Steps: :func:`lift` -> :func:`reduce` -> :func:`solve_reduced` -> block
solution, composed in :func:`algorithm_3_1`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    DoublingDivergence,
    IllConditionedSubspace,
    NoStabilizingSolution,
    NonDiagonalWeights,
    SingularMatrix,
)
from .lifting import LiftedSystem, assemble_full, lift
from .linalg import (
    CONDITION_LIMIT,
    DEFAULT_MARGIN,
    SpectralRegion,
    checked_lu,
    order_schur,
    pd_factor,
    pd_solve,
    solve_right,
    symmetrize,
)
from .model import PeriodicSystem

__all__ = [
    "ReducedProblem",
    "LiftedRiccatiSolution",
    "BlockStructureReport",
    "reduce",
    "eliminate_cross",
    "reduced_residual",
    "cross_eliminated_residual",
    "doubling_dare",
    "solve_reduced",
    "algorithm_3_1",
    "lifted_gain",
    "dense_lifted_gain",
    "materialize_pbar",
    "verify_block_structure",
    "flop_estimate",
]


@dataclass(frozen=True)
class ReducedProblem:
    Ahat: np.ndarray  # (n, n)
    Bhat: np.ndarray  # (n, pm)
    Qhat: np.ndarray  # (n, n)
    Rhat: np.ndarray  # (pm, pm)
    Shat: np.ndarray  # (n, pm)


@dataclass(frozen=True)
class LiftedRiccatiSolution:
    """``Pbar = diag(Qbar1, Phat)`` kept in factored form."""

    Phat: np.ndarray
    qbar1_blocks: np.ndarray
    Kbar_active: np.ndarray  # (pm, n)
    residual: float
    method: str  # "schur" or "doubling"
    iterations: int = 0

    @property
    def p(self) -> int:
        return self.qbar1_blocks.shape[0] + 1


def reduce(lifted: LiftedSystem, mode: str = "auto") -> ReducedProblem:
    """Form ``(Ahat, Bhat, Qhat, Rhat, Shat)`` from the lifted blocks.

    ``mode="structured"`` requires diagonal weights and scales the rows of
    ``Abar1``/``Bbar1`` by the square roots of ``diag(Qbar1)`` before taking
    Gram products. ``mode="dense"`` applies the block-diagonal ``Qbar1`` block by
    block and accepts any symmetric weights. ``"auto"`` picks structured when
    the weights are diagonal.
    """
    if mode == "auto":
        mode = "structured" if lifted.base.has_diagonal_weights() else "dense"
    p, n, m = lifted.p, lifted.n, lifted.m
    A1, B1 = lifted.Abar1, lifted.Bbar1
    if mode == "structured":
        if not lifted.base.has_diagonal_weights():
            raise NonDiagonalWeights("structured reduction needs diagonal Q_k and R_k")
        w = np.sqrt(lifted.qbar1_diagonal())
        QA = w[:, None] * A1
        QB = w[:, None] * B1
        Qhat = QA.T @ QA
        Qhat[np.diag_indices(n)] += np.diag(lifted.Qbar2)
        Rhat = QB.T @ QB
        Rhat[np.diag_indices(p * m)] += lifted.rbar_diagonal()
        Shat = QA.T @ QB
    elif mode == "dense":
        blocks = lifted.qbar1_blocks
        WA = np.einsum("kij,kjl->kil", blocks, A1.reshape(p - 1, n, n)).reshape((p - 1) * n, n)
        WB = np.einsum("kij,kjl->kil", blocks, B1.reshape(p - 1, n, p * m)).reshape((p - 1) * n, p * m)
        Qhat = lifted.Qbar2 + A1.T @ WA
        Rhat = lifted.Rbar + B1.T @ WB
        Shat = A1.T @ WB
    else:
        raise ValueError(f"unknown reduction mode {mode!r}")
    return ReducedProblem(lifted.Abar2.copy(), lifted.Bbar2.copy(), symmetrize(Qhat), symmetrize(Rhat), Shat)


def _eliminate(rp: ReducedProblem):
    """Cross-term elimination sharing one Cholesky factorization of ``Rhat``.

    Returns ``(Atilde, Qtilde, G)`` with ``G = Bhat Rhat^{-1} Bhat'``.
    """
    n = rp.Ahat.shape[0]
    c = pd_factor(rp.Rhat, "Rhat")
    X = pd_solve(c, np.hstack([rp.Bhat.T, rp.Shat.T]))  # Rhat^{-1} [Bhat' Shat']
    RinvBt, RinvSt = X[:, :n], X[:, n:]
    Atilde = rp.Ahat - rp.Bhat @ RinvSt
    Qtilde = symmetrize(rp.Qhat - rp.Shat @ RinvSt)
    G = symmetrize(rp.Bhat @ RinvBt)
    return Atilde, Qtilde, G


def eliminate_cross(rp: ReducedProblem):
    """``Atilde = Ahat - Bhat Rhat^{-1} Shat'`` and ``Qtilde = Qhat - Shat Rhat^{-1} Shat'``."""
    Atilde, Qtilde, _ = _eliminate(rp)
    return Atilde, Qtilde


def reduced_residual(rp: ReducedProblem, P) -> float:
    """``||res|| / (1 + ||P||)`` for the cross-term DARE in its original form."""
    A, B = rp.Ahat, rp.Bhat
    L = A.T @ P @ B + rp.Shat
    S = B.T @ P @ B + rp.Rhat
    res = A.T @ P @ A - P - L @ np.linalg.solve(S, L.T) + rp.Qhat
    return float(np.linalg.norm(res, 2) / (1.0 + np.linalg.norm(P, 2)))


def cross_eliminated_residual(rp: ReducedProblem, P) -> float:
    """Same residual evaluated through ``(Atilde, Bhat, Qtilde, Rhat)``."""
    At, Qt = eliminate_cross(rp)
    B = rp.Bhat
    L = At.T @ P @ B
    S = B.T @ P @ B + rp.Rhat
    res = At.T @ P @ At - P - L @ np.linalg.solve(S, L.T) + Qt
    return float(np.linalg.norm(res, 2) / (1.0 + np.linalg.norm(P, 2)))


def doubling_dare(A, G, H, tol: float = 1e-12, max_iter: int = 200):
    """Structure-preserving doubling for ``X = A' X (I + G X)^{-1} A + H``.

    Converges quadratically to the stabilizing solution when ``(A, G)`` is
    stabilizable and ``(H, A)`` detectable; ``A`` may be singular.

    Returns
    -------
    X, iterations
    """
    A = np.array(A, dtype=float)
    G = symmetrize(G)
    H = symmetrize(H)
    eye = np.eye(A.shape[0])
    for it in range(1, max_iter + 1):
        W = eye + G @ H
        try:
            lu = sla.lu_factor(W, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise DoublingDivergence(f"I + G H singular at iteration {it}") from exc
        WA = sla.lu_solve(lu, A, check_finite=False)
        WG = sla.lu_solve(lu, G, check_finite=False)
        H_new = symmetrize(H + A.T @ H @ WA)
        G = symmetrize(G + A @ WG @ A.T)
        A = A @ WA
        if not (np.all(np.isfinite(H_new)) and np.all(np.isfinite(G)) and np.all(np.isfinite(A))):
            raise DoublingDivergence(f"non-finite iterate at iteration {it}")
        change = np.linalg.norm(H_new - H) / max(np.linalg.norm(H_new), np.finfo(float).tiny)
        H = H_new
        if change <= tol or not np.any(A):
            return H, it
    raise DoublingDivergence(f"no convergence within {max_iter} iterations")


def _gain(rp: ReducedProblem, Phat) -> np.ndarray:
    B = rp.Bhat
    S = symmetrize(rp.Rhat + B.T @ Phat @ B)
    try:
        c = pd_factor(S, "Rhat + Bhat' Phat Bhat")
    except SingularMatrix as exc:
        raise SingularMatrix("innovation matrix is singular", exc.condition) from None
    return pd_solve(c, B.T @ Phat @ rp.Ahat + rp.Shat.T)


def solve_reduced(
    rp: ReducedProblem,
    margin: float = DEFAULT_MARGIN,
    method: str = "auto",
    qbar1_blocks=None,
) -> LiftedRiccatiSolution:
    """Stabilizing solution ``Phat`` of the cross-term DARE.

    The Schur path forms ``Z = F^{-1} E`` for the pencil built from
    ``(Atilde, G, Qtilde)``, orders its anti-stable eigenvalues first and
    returns ``W21 W11^{-1}``. When ``Atilde`` is singular to working precision
    (or ``method="doubling"``) the doubling iteration is used instead.
    """
    if method not in ("auto", "schur", "doubling"):
        raise ValueError(f"unknown method {method!r}")
    n = rp.Ahat.shape[0]
    Atilde, Qtilde, G = _eliminate(rp)
    lu_piv = None
    if method != "doubling":
        try:
            lu_piv = checked_lu(Atilde, "Atilde", CONDITION_LIMIT)
        except SingularMatrix:
            if method == "schur":
                raise
    iterations = 0
    if lu_piv is not None:
        X1 = sla.lu_solve(lu_piv, np.hstack([np.eye(n), G]), check_finite=False)
        Ainv, AinvG = X1[:, :n], X1[:, n:]
        Z = np.block([[Ainv, AinvG], [Qtilde @ Ainv, Atilde.T + Qtilde @ AinvG]])
        form = order_schur(Z, SpectralRegion.outside(margin))
        if form.leading_count != n:
            raise NoStabilizingSolution(f"{form.leading_count} anti-stable eigenvalues, expected {n}")
        W = form.orthogonal
        try:
            Phat = symmetrize(solve_right(W[:n, :n], W[n:, :n]))
        except SingularMatrix as exc:
            raise IllConditionedSubspace("W11 is singular", exc.condition) from None
        used = "schur"
    else:
        Phat, iterations = doubling_dare(Atilde, G, Qtilde)
        used = "doubling"
    if qbar1_blocks is None:
        qbar1_blocks = np.zeros((0, n, n))
    return LiftedRiccatiSolution(
        Phat=Phat,
        qbar1_blocks=np.asarray(qbar1_blocks),
        Kbar_active=_gain(rp, Phat),
        residual=reduced_residual(rp, Phat),
        method=used,
        iterations=iterations,
    )


def algorithm_3_1(
    sys: PeriodicSystem,
    margin: float = DEFAULT_MARGIN,
    mode: str = "auto",
    method: str = "auto",
    weight_order: str = "aligned",
) -> LiftedRiccatiSolution:
    """Lift, reduce, solve the n-dimensional DARE, return ``diag(Qbar1, Phat)``."""
    lifted = lift(sys, weight_order=weight_order)
    rp = reduce(lifted, mode)
    return solve_reduced(rp, margin=margin, method=method, qbar1_blocks=lifted.qbar1_blocks)


def lifted_gain(lifted: LiftedSystem, sol: LiftedRiccatiSolution) -> np.ndarray:
    """Active column block of ``Kbar = (Rbar + Bbar' Pbar Bbar)^{-1} Bbar' Pbar Abar``.

    Uses ``Bbar' Pbar Abar = Bbar1' Qbar1 Abar1 + Bbar2' Phat Abar2`` (nonzero
    columns only) and ``Rbar + Bbar' Pbar Bbar = Rhat + Bhat' Phat Bhat``.
    """
    rp = reduce(lifted)
    return _gain(rp, sol.Phat)


def materialize_pbar(sol: LiftedRiccatiSolution) -> np.ndarray:
    """Dense ``pn x pn`` ``Pbar``; for tests and small instances only."""
    if sol.qbar1_blocks.shape[0] == 0:
        return np.array(sol.Phat)
    return sla.block_diag(*sol.qbar1_blocks, sol.Phat)


def dense_lifted_gain(lifted: LiftedSystem, Pbar) -> np.ndarray:
    """Full ``pm x pn`` gain from assembled matrices (reference computation)."""
    Abar, Bbar, _, Rbar = assemble_full(lifted)
    S = Rbar + Bbar.T @ Pbar @ Bbar
    return np.linalg.solve(S, Bbar.T @ Pbar @ Abar)


@dataclass(frozen=True)
class BlockStructureReport:
    offdiag: float          # ||Pbar12||
    p11_dev: float          # ||Pbar11 - Qbar1|| / ||Qbar1||
    p22_dev: float          # ||Pbar22 - Phat|| / ||Phat||
    iterations: int
    Pbar: np.ndarray

    def ok(self, tol: float = 1e-7) -> bool:
        return self.offdiag <= tol and self.p11_dev <= tol and self.p22_dev <= tol


def verify_block_structure(lifted: LiftedSystem, sol: LiftedRiccatiSolution) -> BlockStructureReport:
    """Solve the full lifted DARE by doubling and compare with ``diag(Qbar1, Phat)``."""
    p, n = lifted.p, lifted.n
    if p * n > 60:
        raise ValueError(f"full lifted check limited to pn <= 60, got {p * n}")
    Abar, Bbar, Qbar, Rbar = assemble_full(lifted)
    G = Bbar @ np.linalg.solve(Rbar, Bbar.T)
    Pbar, its = doubling_dare(Abar, G, Qbar)
    cut = (p - 1) * n
    Q1 = lifted.Qbar1
    q1n = np.linalg.norm(Q1, 2) if cut else 1.0
    return BlockStructureReport(
        offdiag=float(np.linalg.norm(Pbar[:cut, cut:], 2)) if cut else 0.0,
        p11_dev=float(np.linalg.norm(Pbar[:cut, :cut] - Q1, 2) / q1n) if cut else 0.0,
        p22_dev=float(np.linalg.norm(Pbar[cut:, cut:] - sol.Phat, 2) / np.linalg.norm(sol.Phat, 2)),
        iterations=its,
        Pbar=Pbar,
    )


def flop_estimate(p: int, n: int, m: int, method: str = "direct") -> dict:
    """Leading-order flop counts for forming ``Qhat, Rhat, Shat`` and inverting ``Rhat``.

    ``method`` is ``"direct"`` (dense products with ``Qbar1``) or
    ``"structured"`` (row scaling by ``sqrt(diag(Qbar1))`` then Gram products).
    """
    if min(p, n, m) < 1:
        raise ValueError("p, n, m must be >= 1")
    q = p - 1
    if method == "direct":
        counts = {
            "Qhat": 2 * q**2 * n**3 + 2 * q * n**3 + n**2,
            "Rhat": 2 * p * q**2 * n**2 * m + 2 * p**2 * q * n * m**2 + p**2 * m**2,
            "Shat": 2 * q**2 * n**3 + 2 * q * n**3,
        }
    elif method == "structured":
        counts = {
            "Qhat": q * n + q * n**2 + 2 * q**2 * n**3 + n,
            "Rhat": p * q * n * m + 2 * p**2 * q * n * m**2 + p * m,
            "Shat": 2 * q * p * n**2 * m,
        }
    else:
        raise ValueError(f"unknown method {method!r}")
    counts["Rhat_inv"] = p**3 * m**3
    counts = {k: float(v) for k, v in counts.items()}
    counts["total"] = sum(counts.values())
    return counts
