"""Choi-Jamiolkowski states of unitaries, local compression and phase-unitary detection.

The CJ state of ``U`` on ``N`` sites is ``sum U[i, j] |i>|j>`` regrouped so that
each site carries the pair ``(out, in)`` with the output index first. Sites are
ordered most significant first, as in the dense operator; all per-site lists
(isometries, local unitaries, dims) are in ascending site order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.stats import unitary_group

from .errors import ArgumentError, DimensionError
from .mpo import MpoChain, mps_to_operator, operator_to_sitewise
from .tensor import DEFAULT_RANK_TOL, numerical_rank

TWO_PI = 2 * np.pi


def _kron_all(ops) -> np.ndarray:
    return reduce(np.kron, ops, np.ones((1, 1), dtype=np.complex128))


def _check_square(u, site_dims) -> tuple[np.ndarray, list[int]]:
    u = np.asarray(u, dtype=np.complex128)
    dims = [int(d) for d in site_dims]
    if not dims or any(d < 1 for d in dims):
        raise ArgumentError("site dimensions must be positive")
    total = int(np.prod(dims))
    if u.shape != (total, total):
        raise DimensionError(f"expected a {total}x{total} matrix, got {u.shape}")
    return u, dims


def cj_vectorize(u, site_dims) -> np.ndarray:
    """Unnormalized CJ state with per-site ``(out, in)`` pairs, site N first."""
    u, dims = _check_square(u, site_dims)
    return operator_to_sitewise(u, dims, dims)


def cj_unvectorize(state, site_dims) -> np.ndarray:
    dims = [int(d) for d in site_dims]
    return mps_to_operator(state, dims, dims)


@dataclass
class LmeCompression:
    """``|U> = (V_N (x) ... (x) V_1) |core>`` with isometries ``V_k: d'_k -> d_k^2``."""

    isometries: list
    core: np.ndarray
    site_dims: list

    def __post_init__(self):
        self.isometries = [np.asarray(v, dtype=np.complex128) for v in self.isometries]
        self.core = np.asarray(self.core, dtype=np.complex128).reshape(-1)
        if len(self.isometries) != len(self.site_dims):
            raise DimensionError("need one isometry per site")
        for v, d in zip(self.isometries, self.site_dims):
            if v.ndim != 2 or v.shape[0] != d * d:
                raise DimensionError(f"isometry for a site of dimension {d} must have {d * d} rows")
        if self.core.size != int(np.prod(self.dims)):
            raise DimensionError("core size must be the product of the compressed dimensions")

    @property
    def dims(self) -> list[int]:
        return [v.shape[1] for v in self.isometries]

    def isometry_residual(self) -> float:
        return max(float(np.linalg.norm(v.conj().T @ v - np.eye(v.shape[1]))) for v in self.isometries)

    def reconstruct(self) -> np.ndarray:
        t = self.core.reshape(list(reversed(self.dims)))
        n = len(self.dims)
        for k, v in enumerate(self.isometries):
            ax = n - 1 - k
            t = np.moveaxis(np.tensordot(v, t, axes=([1], [ax])), 0, ax)
        return t.reshape(-1)

    def operator(self) -> np.ndarray:
        return cj_unvectorize(self.reconstruct(), self.site_dims)


def lme_compress(u, site_dims, rank_tol: float = DEFAULT_RANK_TOL) -> LmeCompression:
    """Compress each site of ``|U>`` onto the support of its single-site marginal."""
    u, dims = _check_square(u, site_dims)
    if np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])) > 1e-8:
        warnings.warn("input is not unitary within 1e-8; compressing anyway", stacklevel=2)
    n = len(dims)
    psi = cj_vectorize(u, dims).reshape([d * d for d in reversed(dims)])
    isos = []
    for k in range(n):
        ax = n - 1 - k
        m = np.moveaxis(psi, ax, 0).reshape(dims[k] ** 2, -1)
        x, s, _ = np.linalg.svd(m, full_matrices=False)
        r = max(numerical_rank(s, m.shape, rank_tol), 1)
        isos.append(x[:, :r])
    core = psi
    for k, v in enumerate(isos):
        ax = n - 1 - k
        core = np.moveaxis(np.tensordot(v.conj().T, core, axes=([1], [ax])), 0, ax)
    return LmeCompression(isos, core.reshape(-1), dims)


@dataclass
class LmeReport:
    passed: bool
    residual: float
    kraus_bound: list


def verify_lme(comp: LmeCompression, tol: float = 1e-10) -> LmeReport:
    """Input-side marginal of the normalized CJ state against ``1 / d^N``.

    ``kraus_bound`` lists, per site, the number of Kraus operators ``<i|_out V_k``
    of the induced local channel (at most ``d_k``).
    """
    x = comp.operator()
    nrm = np.linalg.norm(x)
    if nrm == 0:
        return LmeReport(False, float("inf"), [])
    rho_in = (x.conj().T @ x).T / nrm**2
    dim = x.shape[1]
    res = float(np.linalg.norm(rho_in - np.eye(dim) / dim))
    bound = [d for d in comp.site_dims]
    return LmeReport(res <= tol, res, bound)


def delta_isometry(d: int) -> np.ndarray:
    """``|i> -> |i i>``."""
    v = np.zeros((d * d, d), dtype=np.complex128)
    for i in range(d):
        v[i * d + i, i] = 1.0
    return v


@dataclass
class PhaseTable:
    """Phases ``theta`` for product labels, label ``(i_N, ..., i_1)`` most significant first."""

    theta: np.ndarray
    n: int
    d: int = 2

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        if th.size != self.d**self.n:
            raise DimensionError(f"need {self.d ** self.n} phases, got {th.size}")
        if not np.all(np.isfinite(th)):
            raise ArgumentError("phases must be finite")
        th = np.mod(th, TWO_PI)
        th[np.isclose(th, TWO_PI, atol=1e-12)] = 0.0
        self.theta = th

    def labels(self) -> list[str]:
        return ["".join(str(c) for c in np.unravel_index(k, (self.d,) * self.n)) for k in range(self.theta.size)]

    def pairs(self) -> list[tuple[str, float]]:
        return list(zip(self.labels(), self.theta.tolist()))

    @classmethod
    def from_pairs(cls, pairs, d: int = 2) -> "PhaseTable":
        pairs = list(pairs)
        if not pairs:
            raise ArgumentError("empty phase table")
        n = len(pairs[0][0])
        th = np.full(d**n, np.nan)
        for label, val in pairs:
            if len(label) != n or any(not c.isdigit() or int(c) >= d for c in label):
                raise ArgumentError(f"bad label {label!r}")
            th[int(np.ravel_multi_index(tuple(int(c) for c in label), (d,) * n))] = float(val)
        if np.isnan(th).any():
            raise ArgumentError("phase table is missing labels")
        return cls(th, n, d)


def phase_unitary(table: PhaseTable) -> np.ndarray:
    return np.diag(np.exp(1j * table.theta))


def phase_state(table: PhaseTable) -> np.ndarray:
    return np.exp(1j * table.theta)


def verify_lu_witness(u, local_pre, local_post, table: PhaseTable, tol: float = 1e-8) -> bool:
    """True iff ``(x post) u (x pre)`` equals ``diag(exp(i theta))`` entrywise within ``tol``."""
    u = np.asarray(u, dtype=np.complex128)
    if len(local_pre) != table.n or len(local_post) != table.n:
        raise DimensionError("need one local unitary per site")
    post = _kron_all(list(reversed(local_post)))
    pre = _kron_all(list(reversed(local_pre)))
    if post.shape[1] != u.shape[0] or pre.shape[0] != u.shape[1]:
        raise DimensionError("local unitaries do not match the operator")
    return bool(np.max(np.abs(post @ u @ pre - phase_unitary(table))) <= tol)


def random_phase_unitary(n: int, rng, scramble: bool = True) -> tuple[np.ndarray, PhaseTable]:
    """A random qubit phase unitary, optionally hidden behind random local unitaries.

    Returns ``(u, table)`` with ``u = (x W_k) diag(exp(i theta)) (x W'_k)``.
    """
    table = PhaseTable(rng.uniform(0, TWO_PI, size=2**n), n)
    u = phase_unitary(table)
    if scramble:
        left = _kron_all([unitary_group.rvs(2, random_state=rng) for _ in range(n)])
        right = _kron_all([unitary_group.rvs(2, random_state=rng) for _ in range(n)])
        u = left @ u @ right
    return u, table


@dataclass
class PhaseDetection:
    """``verdict`` is one of ``"phase_form"``, ``"not_lme2"`` or ``"extraction_failed"``."""

    verdict: str
    dims: list
    local_pre: list | None = None
    local_post: list | None = None
    table: PhaseTable | None = None
    residual: float | None = None
    notes: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.verdict == "phase_form"


def _rank_one_members(m1: np.ndarray, m2: np.ndarray) -> list[np.ndarray]:
    """Rank-one matrices in ``span{m1, m2}`` (2x2), from ``det(x m1 + y m2) = 0``."""
    a = np.linalg.det(m1)
    b = np.linalg.det(m2)
    c = np.linalg.det(m1 + m2) - a - b
    scale = max(abs(a), abs(b), abs(c), 1e-300)
    out = []
    if abs(a) <= 1e-12 * scale:
        out.append(m1)
        if abs(c) > 1e-12 * scale:
            out.append(m1 * (-b / c) + m2)
    else:
        for x in np.roots([a, c, b]):
            out.append(x * m1 + m2)
    return out


def _factor(r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``r ~ x y^T`` with unit vectors and the largest entry of each made real positive."""
    u, s, vh = np.linalg.svd(r)
    x, y = u[:, 0], vh[0]
    x = x * np.exp(-1j * np.angle(x[np.argmax(np.abs(x))]))
    y = y * np.exp(-1j * np.angle(y[np.argmax(np.abs(y))]))
    return x, y


def _site_witness(v: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray] | None:
    """Return ``(pre, post)`` for one site from its marginal support ``v``."""
    mats = [v[:, k].reshape(d, d) for k in range(v.shape[1])]
    if len(mats) == 1:
        m = mats[0] * np.sqrt(d) / np.linalg.norm(mats[0])
        return np.eye(d, dtype=np.complex128), m.conj().T
    if len(mats) != 2 or d != 2:
        return None
    cands = _rank_one_members(*mats)
    if len(cands) != 2:
        return None
    (x0, y0), (x1, y1) = _factor(cands[0]), _factor(cands[1])
    if abs(np.vdot(x0, x1)) > 1e-6 or abs(np.vdot(y0.conj(), y1.conj())) > 1e-6:
        return None
    a = np.column_stack([x0, x1])
    b = np.vstack([y0, y1])
    if abs(a[0, 1]) ** 2 + abs(a[1, 0]) ** 2 > abs(a[0, 0]) ** 2 + abs(a[1, 1]) ** 2:
        a, b = a[:, ::-1], b[::-1]
    return b.conj().T, a.conj().T


def detect_phase_form(u, tol: float = 1e-8, rank_tol: float = DEFAULT_RANK_TOL) -> PhaseDetection:
    """Decide whether a qubit unitary has all compressed dims at most 2 and, if so,
    try to exhibit local unitaries that bring it to a diagonal phase unitary.

    For each site the two product vectors ``x_i (x) y_i`` inside the marginal
    support give the local bases; a site with a one-dimensional support is a
    local unitary that is simply undone.
    """
    u = np.asarray(u, dtype=np.complex128)
    n = int(round(np.log2(u.shape[0]))) if u.ndim == 2 and u.shape[0] > 0 else 0
    if u.ndim != 2 or u.shape[0] != u.shape[1] or 2**n != u.shape[0] or n < 1:
        raise ArgumentError("detect_phase_form needs a square matrix on qubits")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        comp = lme_compress(u, [2] * n, rank_tol)
    dims = comp.dims
    if any(d > 2 for d in dims):
        return PhaseDetection("not_lme2", dims)
    pres, posts = [], []
    for k, v in enumerate(comp.isometries, start=1):
        w = _site_witness(v, 2)
        if w is None:
            return PhaseDetection("extraction_failed", dims, notes=[f"site {k}: no orthogonal product basis"])
        pres.append(w[0])
        posts.append(w[1])
    rot = _kron_all(list(reversed(posts))) @ u @ _kron_all(list(reversed(pres)))
    diag = np.diag(rot)
    off = rot - np.diag(diag)
    residual = float(max(np.max(np.abs(off)), np.max(np.abs(np.abs(diag) - 1))))
    if residual > tol:
        return PhaseDetection("extraction_failed", dims, residual=residual, notes=["rotated operator is not a phase unitary"])
    table = PhaseTable(np.angle(diag), n)
    return PhaseDetection("phase_form", dims, pres, posts, table, residual)


@dataclass
class ChainCompression:
    isometries: list
    core: MpoChain


def compress_chain(chain: MpoChain, rank_tol: float = DEFAULT_RANK_TOL) -> ChainCompression:
    """Per-tensor compression of an MPO's fused physical legs.

    Site ``k`` of the core is ``V_k^dag A_k`` on a physical leg of size ``d'_k``
    (input leg of size one); the bond dimensions are unchanged.
    """
    isos, sites = [], []
    for s in chain.sites:
        m = s.data.reshape(s.d_out * s.d_in, s.D_left * s.D_right)
        x, sv, _ = np.linalg.svd(m, full_matrices=False)
        r = max(numerical_rank(sv, m.shape, rank_tol), 1)
        v = x[:, :r]
        isos.append(v)
        sites.append((v.conj().T @ m).reshape(r, 1, s.D_left, s.D_right))
    return ChainCompression(isos, MpoChain(tuple(sites), chain.boundary))
