"""Lifting of a p-periodic system to a time-invariant system with p-step macro time.

The lifted state at macro time ``K`` stacks one full period of states,
``xbar_K = [x_{pK-p+1}; ...; x_{pK}]`` (block ``j`` holds ``x_{pK-p+1+j}``),
and the lifted input stacks ``ubar_K = [u_{pK}; ...; u_{pK+p-1}]``. Consecutive
lifted states share no component. The initial lifted state is
``[0; ...; 0; x_0]``. One macro step reads only the last block of ``xbar_K``,
so the lifted state matrix

    Abar = [0 | Abar1]
           [0 | Abar2]

has ``(p-1) n`` identically zero leading columns. It is never formed here
unless :func:`assemble_full` is called explicitly.

Weight ordering
---------------
Block ``j`` of ``xbar_{K+1}`` is ``x_{pK+j+1}``, which the periodic cost weights
with ``Q_{(j+1) mod p}``. The default ``weight_order="aligned"`` therefore uses
``Qbar = diag(Q_1, ..., Q_{p-1}, Q_0)``, which makes the lifted cost identical
to the periodic one and ``Phat`` the phase-0 cost-to-go. ``weight_order="natural"``
uses ``diag(Q_0, ..., Q_{p-1})`` instead; the two coincide when ``Q`` is
phase-constant, and otherwise the ``"natural"`` variant solves the periodic
problem whose state weights are delayed by one sample.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch
from .model import PeriodicSystem, step, validate

__all__ = [
    "LiftedSystem",
    "LiftedState",
    "lift",
    "assemble_full",
    "embed_initial",
    "lifted_step",
    "equivalence_check",
]

WEIGHT_ORDERS = ("aligned", "natural")


@dataclass(frozen=True)
class LiftedSystem:
    base: PeriodicSystem
    Abar1: np.ndarray        # ((p-1)n, n)
    Abar2: np.ndarray        # (n, n), the monodromy A_{p-1}...A_0
    Bbar1: np.ndarray        # ((p-1)n, pm), block lower triangular
    Bbar2: np.ndarray        # (n, pm)
    qbar1_blocks: np.ndarray  # (p-1, n, n)
    Qbar2: np.ndarray        # (n, n)
    rbar_blocks: np.ndarray  # (p, m, m)
    weight_order: str = "aligned"

    @property
    def p(self) -> int:
        return self.base.p

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def m(self) -> int:
        return self.base.m

    @property
    def Qbar1(self) -> np.ndarray:
        """Dense block-diagonal ``Qbar1`` (built on demand)."""
        if self.p == 1:
            return np.zeros((0, 0))
        return sla.block_diag(*self.qbar1_blocks)

    @property
    def Rbar(self) -> np.ndarray:
        return sla.block_diag(*self.rbar_blocks)

    def qbar1_diagonal(self) -> np.ndarray:
        """Diagonal of ``Qbar1`` as a flat vector of length ``(p-1) n``."""
        return np.diagonal(self.qbar1_blocks, axis1=1, axis2=2).reshape(-1)

    def rbar_diagonal(self) -> np.ndarray:
        return np.diagonal(self.rbar_blocks, axis1=1, axis2=2).reshape(-1)


@dataclass(frozen=True)
class LiftedState:
    K: int
    blocks: np.ndarray  # (p, n)

    @property
    def vector(self) -> np.ndarray:
        return self.blocks.reshape(-1)

    @property
    def last(self) -> np.ndarray:
        return self.blocks[-1]


def lift(sys: PeriodicSystem, weight_order: str = "aligned", check: bool = True) -> LiftedSystem:
    """Build the factored lifted blocks of ``sys``.

    Partial products ``A_i ... A_0`` are accumulated in one forward pass and
    row ``i`` of ``Bbar`` is ``A_i`` times row ``i-1`` with ``B_i`` appended on
    the block diagonal.
    """
    if weight_order not in WEIGHT_ORDERS:
        raise ValueError(f"weight_order must be one of {WEIGHT_ORDERS}")
    if check:
        validate(sys).raise_if_failed()
    p, n, m = sys.p, sys.n, sys.m
    Afull = np.empty((p * n, n))
    Bfull = np.zeros((p * n, p * m))
    M = np.eye(n)
    for i in range(p):
        M = sys.A[i] @ M
        Afull[i * n:(i + 1) * n] = M
        rows = slice(i * n, (i + 1) * n)
        if i:
            Bfull[rows, : i * m] = sys.A[i] @ Bfull[(i - 1) * n:i * n, : i * m]
        Bfull[rows, i * m:(i + 1) * m] = sys.B[i]
    cut = (p - 1) * n
    if weight_order == "aligned":
        qblocks = np.concatenate([sys.Q[1:], sys.Q[:1]])
    else:
        qblocks = np.asarray(sys.Q)
    return LiftedSystem(
        base=sys,
        Abar1=Afull[:cut],
        Abar2=Afull[cut:],
        Bbar1=Bfull[:cut],
        Bbar2=Bfull[cut:],
        qbar1_blocks=np.array(qblocks[: p - 1]).reshape(p - 1, n, n),
        Qbar2=np.array(qblocks[p - 1]),
        rbar_blocks=np.array(sys.R),
        weight_order=weight_order,
    )


def assemble_full(lifted: LiftedSystem):
    """Dense ``(Abar, Bbar, Qbar, Rbar)`` of sizes pn x pn, pn x pm, pn x pn, pm x pm."""
    p, n = lifted.p, lifted.n
    Abar = np.zeros((p * n, p * n))
    Abar[:, (p - 1) * n:] = np.vstack([lifted.Abar1, lifted.Abar2])
    Bbar = np.vstack([lifted.Bbar1, lifted.Bbar2])
    Qbar = sla.block_diag(lifted.Qbar1, lifted.Qbar2) if p > 1 else np.array(lifted.Qbar2)
    return Abar, Bbar, Qbar, lifted.Rbar


def embed_initial(x0, p: int) -> LiftedState:
    """``xbar_0 = [0; ...; 0; x0]``."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    blocks = np.zeros((p, x0.size))
    blocks[-1] = x0
    return LiftedState(0, blocks)


def lifted_step(lifted: LiftedSystem, xbar: LiftedState, ubar) -> LiftedState:
    """One macro step ``Abar xbar + Bbar ubar`` using only the last block of ``xbar``."""
    p, n, m = lifted.p, lifted.n, lifted.m
    ubar = np.asarray(ubar, dtype=float).reshape(-1)
    if xbar.blocks.shape != (p, n) or ubar.shape != (p * m,):
        raise DimensionMismatch(
            f"expected lifted state ({p}, {n}) and input ({p * m},), got {xbar.blocks.shape} and {ubar.shape}"
        )
    x = xbar.blocks[-1]
    head = lifted.Abar1 @ x + lifted.Bbar1 @ ubar
    tail = lifted.Abar2 @ x + lifted.Bbar2 @ ubar
    return LiftedState(xbar.K + 1, np.concatenate([head, tail]).reshape(p, n))


def equivalence_check(sys: PeriodicSystem, lifted: LiftedSystem, x0, controls) -> float:
    """Maximum state deviation between periodic and lifted simulation.

    ``controls`` has ``N p`` rows; the periodic system is stepped ``N p`` times
    and the lifted one ``N`` times, and states are compared at every aligned
    time index ``1 .. N p``.
    """
    p, m = sys.p, sys.m
    controls = np.asarray(controls, dtype=float).reshape(-1, m)
    if controls.shape[0] % p:
        raise DimensionMismatch(f"control length {controls.shape[0]} is not a multiple of p={p}")
    x = np.asarray(x0, dtype=float)
    xbar = embed_initial(x, p)
    worst = 0.0
    for K in range(controls.shape[0] // p):
        ubar = controls[K * p:(K + 1) * p]
        xbar = lifted_step(lifted, xbar, ubar.reshape(-1))
        for j in range(p):
            t = K * p + j
            x = step(sys, t, x, controls[t])
            worst = max(worst, float(np.linalg.norm(x - xbar.blocks[j])))
    return worst
