"""Dense complex tensor kernel: contraction, SVD splitting, operator Schmidt."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericalError

DEFAULT_RANK_TOL = 1e-10


def as_tensor(a) -> np.ndarray:
    """Return ``a`` as a complex128 array, rejecting non-finite entries."""
    arr = np.asarray(a, dtype=np.complex128)
    if not np.all(np.isfinite(arr)):
        raise DimensionError("tensor has non-finite entries")
    return arr


def contract(a, axes_a, b, axes_b) -> np.ndarray:
    """Sum over paired axes of ``a`` and ``b``.

    The result carries the free axes of ``a`` followed by those of ``b``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    axes_a = list(axes_a)
    axes_b = list(axes_b)
    if len(axes_a) != len(axes_b):
        raise DimensionError("axis lists have different lengths")
    for x, y in zip(axes_a, axes_b):
        if a.shape[x] != b.shape[y]:
            raise DimensionError(
                f"extent mismatch: axis {x} of a has {a.shape[x]}, axis {y} of b has {b.shape[y]}"
            )
    return np.tensordot(a, b, axes=(axes_a, axes_b))


@dataclass(frozen=True)
class SvdResult:
    left_isometry: np.ndarray
    singular_values: np.ndarray
    right_factor: np.ndarray
    numerical_rank: int

    def truncated(self) -> "SvdResult":
        r = self.numerical_rank
        return SvdResult(
            self.left_isometry[:, :r],
            self.singular_values[:r],
            self.right_factor[:r, :],
            r,
        )

    def reconstruct(self) -> np.ndarray:
        return (self.left_isometry * self.singular_values) @ self.right_factor


def rank_threshold(s: np.ndarray, shape: tuple[int, int], rank_tol: float) -> float:
    smax = float(s[0]) if len(s) else 0.0
    return rank_tol * smax * max(shape)


def numerical_rank(s: np.ndarray, shape: tuple[int, int], rank_tol: float = DEFAULT_RANK_TOL) -> int:
    if len(s) == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rank_threshold(s, shape, rank_tol)))


def svd_split(m, rank_tol: float = DEFAULT_RANK_TOL) -> SvdResult:
    """Thin SVD ``m = X diag(s) Y`` with a numerical rank estimate."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.size == 0:
        raise DimensionError("svd_split expects a nonempty matrix")
    try:
        x, s, y = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(str(exc)) from exc
    return SvdResult(x, s, y, numerical_rank(s, m.shape, rank_tol))


def realign(u, dims: tuple[int, int]) -> np.ndarray:
    """Reshuffle ``u[(ao,bo),(ai,bi)]`` into ``R[(ao,ai),(bo,bi)]``."""
    u = np.asarray(u)
    da, db = dims
    n = da * db
    if u.shape != (n, n):
        raise DimensionError(f"operator of shape {u.shape} does not factor as {da}x{db}")
    t = u.reshape(da, db, da, db).transpose(0, 2, 1, 3)
    return t.reshape(da * da, db * db)


@dataclass(frozen=True)
class SchmidtResult:
    values: np.ndarray
    a_ops: list
    b_ops: list

    @property
    def rank(self) -> int:
        return numerical_rank(self.values, (len(self.values), len(self.values)))


def operator_schmidt(u, dims: tuple[int, int]) -> SchmidtResult:
    """Operator Schmidt decomposition ``u = sum_k s_k A_k (x) B_k``.

    ``A_k`` and ``B_k`` have unit Frobenius norm; ``s`` is nonincreasing.
    """
    da, db = dims
    r = realign(u, dims)
    x, s, y = np.linalg.svd(r, full_matrices=False)
    a_ops = [x[:, k].reshape(da, da) for k in range(len(s))]
    b_ops = [y[k, :].reshape(db, db) for k in range(len(s))]
    return SchmidtResult(s, a_ops, b_ops)
