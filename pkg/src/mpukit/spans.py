"""Orthonormal bases of matrix subspaces over the real or complex field."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import DimensionError

DEP_TOL = 1e-8
ABS_FLOOR = 1e-10


class SpanBasis:
    """Incrementally grown orthonormal basis of a span of equally shaped matrices.

    With ``real=True`` the span is taken over the reals: a complex vector ``v``
    is embedded as ``[Re v, Im v]``. A candidate is dependent when its residual
    after projection is at most ``dep_tol * |candidate|`` or at most ``abs_floor``.
    """

    def __init__(self, shape, real: bool = False, dep_tol: float = DEP_TOL, abs_floor: float = ABS_FLOOR):
        self.shape = tuple(shape)
        self.real = real
        self.dep_tol = dep_tol
        self.abs_floor = abs_floor
        self._n = int(np.prod(self.shape))
        width = 2 * self._n if real else self._n
        self._q = np.zeros((0, width), dtype=np.float64 if real else np.complex128)
        self._raw: list[np.ndarray] = []

    @property
    def ambient_dim(self) -> int:
        return self._n

    @property
    def dim(self) -> int:
        return self._q.shape[0]

    def __len__(self) -> int:
        return self.dim

    def _embed(self, m) -> np.ndarray:
        m = np.asarray(m, dtype=np.complex128)
        if m.shape != self.shape:
            raise DimensionError(f"expected shape {self.shape}, got {m.shape}")
        v = m.reshape(-1)
        if self.real:
            return np.concatenate([v.real, v.imag])
        return v.copy()

    def _unembed(self, v) -> np.ndarray:
        if self.real:
            v = v[: self._n] + 1j * v[self._n :]
        return np.asarray(v, dtype=np.complex128).reshape(self.shape)

    def _residual(self, v: np.ndarray) -> np.ndarray:
        q = self._q
        if q.shape[0] == 0:
            return v
        for _ in range(2):
            v = v - q.T @ (q.conj() @ v)
        return v

    def add(self, m) -> bool:
        """Add ``m`` to the span; return True if the span grew."""
        v = self._embed(m)
        nv = np.linalg.norm(v)
        if nv <= self.abs_floor:
            return False
        r = self._residual(v)
        nr = np.linalg.norm(r)
        if nr <= self.dep_tol * nv or nr <= self.abs_floor:
            return False
        self._q = np.vstack([self._q, (r / nr)[None, :]])
        self._raw.append(np.asarray(m, dtype=np.complex128) / nv)
        return True

    def extend(self, ms: Iterable) -> int:
        return sum(self.add(m) for m in ms)

    def residual_norm(self, m) -> float:
        return float(np.linalg.norm(self._residual(self._embed(m))))

    def contains(self, m, tol: float = DEP_TOL) -> bool:
        v = self._embed(m)
        nv = np.linalg.norm(v)
        return np.linalg.norm(self._residual(v)) <= tol * max(nv, 1.0)

    def generators(self) -> list[np.ndarray]:
        return [self._unembed(v) for v in self._q]

    def accepted(self) -> list[np.ndarray]:
        """The accepted candidates themselves, scaled to unit norm.

        They span the same space as :meth:`generators` but carry no
        Gram-Schmidt amplification, which matters when spans are propagated
        through many linear maps.
        """
        return [x.copy() for x in self._raw]

    def matrix(self) -> np.ndarray:
        """Basis vectors as rows of the embedded representation."""
        return self._q.copy()

    def copy(self) -> "SpanBasis":
        other = SpanBasis(self.shape, self.real, self.dep_tol, self.abs_floor)
        other._q = self._q.copy()
        other._raw = [x.copy() for x in self._raw]
        return other


def span_from_batch(
    ms: Iterable, shape, real: bool = False, dep_tol: float = DEP_TOL, abs_floor: float = ABS_FLOOR
) -> SpanBasis:
    """Span of a batch of candidates via one SVD of the normalized stack.

    Candidates at or below ``abs_floor`` (or ``dep_tol`` times the largest
    candidate norm) count as zero. The rank keeps singular values above
    ``dep_tol`` times the largest one. Unlike repeated Gram-Schmidt this does
    not amplify rounding errors when candidates are nearly parallel.
    """
    out = SpanBasis(shape, real, dep_tol, abs_floor)
    vecs = [out._embed(m) for m in ms]
    norms = np.array([np.linalg.norm(v) for v in vecs])
    if not vecs or norms.max() <= abs_floor:
        return out
    floor = max(abs_floor, dep_tol * norms.max())
    keep = [v / n for v, n in zip(vecs, norms) if n > floor]
    _, sv, vh = np.linalg.svd(np.array(keep), full_matrices=False)
    r = int(np.sum(sv > dep_tol * sv[0]))
    out._q = vh[:r]
    out._raw = [out._unembed(v) for v in out._q]
    return out


def span_of(ms: Iterable, shape=None, real: bool = False, **kw) -> SpanBasis:
    ms = list(ms)
    if shape is None:
        if not ms:
            raise DimensionError("cannot infer shape of an empty span")
        shape = np.shape(ms[0])
    s = SpanBasis(shape, real=real, **kw)
    s.extend(ms)
    return s


def span_distance(a: SpanBasis, b: SpanBasis) -> float:
    """Largest residual of a unit vector of one span projected on the other."""
    worst = 0.0
    for x, y in ((a, b), (b, a)):
        for g in x.generators():
            worst = max(worst, y.residual_norm(g) / max(np.linalg.norm(g), 1e-300))
    return worst
