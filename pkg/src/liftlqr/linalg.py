"""Dense real matrix kernel: Schur forms, ordered invariant subspaces and solves.

Everything here is a thin, checked layer over LAPACK. The ordered Schur form
is obtained from an unordered real Schur form by LAPACK ``dtrsen``, which
moves the selected 1x1/2x2 diagonal blocks to the top by orthogonal swaps of
adjacent blocks (and rejects a swap that would destroy the similarity).
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import NonConvergence, SingularMatrix, UnitCircleEigenvalue

DEFAULT_MARGIN = 1e-9
CONDITION_LIMIT = 1e12

__all__ = [
    "DEFAULT_MARGIN",
    "CONDITION_LIMIT",
    "Region",
    "SpectralRegion",
    "OrderedSchurForm",
    "as_matrix",
    "real_schur",
    "schur_eigenvalues",
    "order_schur",
    "condition_estimate",
    "solve_right",
    "spectral_radius",
    "asymmetry_norm",
    "symmetrize",
]


class Region(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class SpectralRegion:
    """Selection region for eigenvalues relative to the unit circle.

    Eigenvalues with ``1 - margin <= |z| <= 1 + margin`` belong to neither
    region and make any classification fail.
    """

    kind: Region
    margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        if not self.margin >= 0.0:
            raise ValueError(f"margin must be non-negative, got {self.margin}")

    @classmethod
    def inside(cls, margin: float = DEFAULT_MARGIN) -> "SpectralRegion":
        return cls(Region.INSIDE, margin)

    @classmethod
    def outside(cls, margin: float = DEFAULT_MARGIN) -> "SpectralRegion":
        return cls(Region.OUTSIDE, margin)

    def classify(self, eigenvalues) -> np.ndarray:
        """Boolean mask of eigenvalues in the region; raises on unclassifiable ones."""
        mod = np.abs(np.asarray(eigenvalues))
        ambiguous = (mod >= 1.0 - self.margin) & (mod <= 1.0 + self.margin)
        if np.any(ambiguous):
            idx = int(np.argmax(ambiguous))
            raise UnitCircleEigenvalue(complex(np.asarray(eigenvalues)[idx]), self.margin)
        if self.kind is Region.INSIDE:
            return mod < 1.0 - self.margin
        return mod > 1.0 + self.margin


@dataclass(frozen=True)
class OrderedSchurForm:
    """``M = orthogonal @ quasi_triangular @ orthogonal.T`` with the selected
    eigenvalues in the leading ``leading_count`` diagonal positions."""

    orthogonal: np.ndarray
    quasi_triangular: np.ndarray
    leading_count: int

    @property
    def leading_basis(self) -> np.ndarray:
        """Orthonormal basis of the selected invariant subspace."""
        return self.orthogonal[:, : self.leading_count]

    def eigenvalues(self) -> np.ndarray:
        return schur_eigenvalues(self.quasi_triangular)


def as_matrix(M, name: str = "matrix", square: bool = False) -> np.ndarray:
    """Coerce to a 2-D float array and reject non-finite entries."""
    arr = np.asarray(M, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def real_schur(M):
    """Real Schur decomposition ``M = Z T Z^T`` with ``T`` quasi upper triangular.

    Returns
    -------
    Z, T
    """
    M = as_matrix(M, "M", square=True)
    if M.shape[0] == 0:
        return np.eye(0), np.zeros((0, 0))
    try:
        T, Z = sla.schur(M, output="real")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NonConvergence(f"real Schur iteration failed: {exc}") from exc
    return Z, T


def schur_eigenvalues(T) -> np.ndarray:
    """Eigenvalues read off the 1x1/2x2 diagonal blocks of a quasi-triangular ``T``.

    Position ``i`` of the result is the eigenvalue attached to row ``i``, so a
    2x2 block contributes its conjugate pair in two consecutive slots.
    """
    T = np.asarray(T, dtype=float)
    n = T.shape[0]
    out = np.empty(n, dtype=complex)
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            out[i : i + 2] = np.linalg.eigvals(T[i : i + 2, i : i + 2])
            i += 2
        else:
            out[i] = T[i, i]
            i += 1
    return out


def order_schur(M, region: SpectralRegion) -> OrderedSchurForm:
    """Ordered real Schur form with the eigenvalues in ``region`` leading.

    Raises
    ------
    UnitCircleEigenvalue
        Some eigenvalue falls in the annulus ``[1 - margin, 1 + margin]``.
    NonConvergence
        The Schur iteration failed or a block swap was rejected.
    """
    Z, T = real_schur(M)
    n = T.shape[0]
    if n == 0:
        return OrderedSchurForm(Z, T, 0)
    select = region.classify(schur_eigenvalues(T))
    count = int(select.sum())
    if 0 < count < n:
        Ts, Zs, _, _, m, _, _, info = lapack.dtrsen(
            select.astype(np.int32), T, Z, job="N"
        )
        if info != 0:
            raise NonConvergence(f"dtrsen rejected a block swap (info={info})")
        T, Z = Ts, Zs
        if m != count:
            raise NonConvergence(f"reordering moved {m} eigenvalues, expected {count}")
        # a swap perturbs eigenvalues at rounding level; make sure none crossed over
        after = region.classify(schur_eigenvalues(T))
        if not (after[:count].all() and not after[count:].any()):
            raise NonConvergence("eigenvalue classification changed during reordering")
    return OrderedSchurForm(Z, T, count)


def condition_estimate(lu_piv, anorm: float) -> float:
    """1-norm condition estimate from an LU factorization (LAPACK ``dgecon``)."""
    lu, _ = lu_piv
    if lu.shape[0] == 0:
        return 1.0
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or rcond <= 0.0:
        return np.inf
    return 1.0 / rcond


def checked_lu(A, what: str, limit: float):
    anorm = float(np.linalg.norm(A, 1))
    with warnings.catch_warnings():
        # exact singularity is reported through the condition estimate below
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu_piv = sla.lu_factor(A, check_finite=False)
    cond = condition_estimate(lu_piv, anorm)
    if not cond < limit:
        raise SingularMatrix(f"{what} is singular to working precision", cond)
    return lu_piv


def solve_right(A, B, limit: float = CONDITION_LIMIT) -> np.ndarray:
    """Solve ``X @ A = B`` for ``X`` without forming ``inv(A)``.

    Raises
    ------
    SingularMatrix
        If the 1-norm condition estimate of ``A`` reaches ``limit``.
    """
    A = as_matrix(A, "A", square=True)
    B = as_matrix(B, "B")
    if B.shape[1] != A.shape[0]:
        raise ValueError(f"shape mismatch: X @ A with A {A.shape} cannot equal B {B.shape}")
    lu_piv = checked_lu(A, "A", limit)
    # X A = B  <=>  A^T X^T = B^T
    return sla.lu_solve(lu_piv, B.T, trans=1, check_finite=False).T


def solve_left(A, B, limit: float = CONDITION_LIMIT) -> np.ndarray:
    """Solve ``A @ X = B`` with the same singularity guard as :func:`solve_right`."""
    A = as_matrix(A, "A", square=True)
    lu_piv = checked_lu(A, "A", limit)
    return sla.lu_solve(lu_piv, np.asarray(B, dtype=float), check_finite=False)


def spectral_radius(M) -> float:
    M = as_matrix(M, "M", square=True)
    if M.shape[0] == 0:
        return 0.0
    try:
        return float(np.max(np.abs(np.linalg.eigvals(M))))
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(str(exc)) from exc


def asymmetry_norm(M) -> float:
    """``||M - M^T||_F / max(1, ||M||_F)``."""
    M = np.asarray(M, dtype=float)
    return float(np.linalg.norm(M - M.T) / max(1.0, np.linalg.norm(M)))


def symmetrize(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def pd_factor(M, what: str = "matrix"):
    """Cholesky factor of a symmetric positive definite matrix.

    Raises :class:`SingularMatrix` when the factorization breaks down.
    """
    try:
        return sla.cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(f"{what} is not positive definite: {exc}") from exc


def pd_solve(factor, B) -> np.ndarray:
    return sla.cho_solve(factor, B, check_finite=False)
