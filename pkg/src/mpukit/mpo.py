"""Matrix-product operator data model.

Index conventions used throughout the package:

* A site tensor is stored as ``data[i, j, m, n]`` where ``i`` is the physical
  output, ``j`` the physical input, ``m`` the left bond and ``n`` the right bond.
  For fixed ``(i, j)`` the slice ``data[i, j]`` is a ``D_left x D_right`` matrix.
* ``chain.sites[0]`` is site 1, the rightmost tensor and the least significant
  tensor factor. The operator is ``sum Tr(b A_N ... A_1) |i_N..i_1><j_N..j_1|``.
* ``Open(left, right)`` stands for ``b = |right><left|``. ``left`` is given by
  its components (no conjugation is applied) and is contracted with the left
  bond of the last site; ``right`` is contracted with the right bond of site 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence, Union

import numpy as np

from .errors import ArgumentError, DimensionError, ResourceCapError
from .tensor import as_tensor

DEFAULT_MAX_DIM = 4096


@dataclass(frozen=True, eq=False)
class SiteTensor:
    data: np.ndarray

    def __post_init__(self):
        arr = as_tensor(self.data)
        if arr.ndim != 4:
            raise DimensionError(f"site tensor must have 4 axes, got {arr.ndim}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def d_out(self) -> int:
        return self.data.shape[0]

    @property
    def d_in(self) -> int:
        return self.data.shape[1]

    @property
    def D_left(self) -> int:
        return self.data.shape[2]

    @property
    def D_right(self) -> int:
        return self.data.shape[3]

    def matrix(self, i: int, j: int) -> np.ndarray:
        return self.data[i, j]

    def scaled(self, c: complex) -> "SiteTensor":
        return SiteTensor(self.data * c)


@dataclass(frozen=True, eq=False)
class Open:
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "left", as_tensor(self.left).reshape(-1))
        object.__setattr__(self, "right", as_tensor(self.right).reshape(-1))

    def matrix(self) -> np.ndarray:
        return np.outer(self.right, self.left)


@dataclass(frozen=True)
class Periodic:
    pass


@dataclass(frozen=True, eq=False)
class General:
    b: np.ndarray

    def __post_init__(self):
        b = as_tensor(self.b)
        if b.ndim != 2:
            raise DimensionError("general boundary must be a matrix")
        object.__setattr__(self, "b", b)

    def matrix(self) -> np.ndarray:
        return self.b


Boundary = Union[Open, Periodic, General]


def trivial_boundary() -> Open:
    return Open(np.ones(1), np.ones(1))


@dataclass(frozen=True, eq=False)
class MpoChain:
    sites: tuple
    boundary: Boundary = field(default_factory=trivial_boundary)

    def __post_init__(self):
        sites = tuple(s if isinstance(s, SiteTensor) else SiteTensor(s) for s in self.sites)
        if not sites:
            raise DimensionError("chain must have at least one site")
        for k in range(len(sites) - 1):
            if sites[k].D_left != sites[k + 1].D_right:
                raise DimensionError(
                    f"bond mismatch between site {k + 1} (D_left={sites[k].D_left}) "
                    f"and site {k + 2} (D_right={sites[k + 1].D_right})"
                )
        object.__setattr__(self, "sites", sites)
        d0, dn = sites[0].D_right, sites[-1].D_left
        bd = self.boundary
        if isinstance(bd, Open):
            if bd.left.shape[0] != dn or bd.right.shape[0] != d0:
                raise DimensionError(
                    f"open boundary vectors of length ({bd.left.shape[0]}, {bd.right.shape[0]}) "
                    f"do not match end bonds ({dn}, {d0})"
                )
        elif isinstance(bd, Periodic):
            if d0 != dn:
                raise DimensionError("periodic boundary needs equal end bond dimensions")
        elif isinstance(bd, General):
            if bd.b.shape != (d0, dn):
                raise DimensionError(f"boundary matrix shape {bd.b.shape} != ({d0}, {dn})")
        else:
            raise ArgumentError(f"unknown boundary {bd!r}")

    def __len__(self) -> int:
        return len(self.sites)

    @property
    def n(self) -> int:
        return len(self.sites)

    @property
    def out_dims(self) -> list[int]:
        return [s.d_out for s in self.sites]

    @property
    def in_dims(self) -> list[int]:
        return [s.d_in for s in self.sites]

    @property
    def bond_dims(self) -> list[int]:
        """``[D_0, D_1, ..., D_N]``."""
        return [self.sites[0].D_right] + [s.D_left for s in self.sites]

    def boundary_matrix(self) -> np.ndarray:
        bd = self.boundary
        if isinstance(bd, Periodic):
            return np.eye(self.sites[0].D_right, dtype=np.complex128)
        return bd.matrix()


def _prod(xs: Sequence[int]) -> int:
    return reduce(lambda a, b: a * b, xs, 1)


def _check_cap(chain: MpoChain, max_dim: int) -> None:
    dout, din = _prod(chain.out_dims), _prod(chain.in_dims)
    if max(dout, din) > max_dim:
        raise ResourceCapError(
            f"dense operator of size {dout}x{din} exceeds the cap {max_dim}"
        )


def _rank_one_terms(chain: MpoChain) -> list[tuple[np.ndarray, np.ndarray]]:
    bd = chain.boundary
    if isinstance(bd, Open):
        return [(bd.right, bd.left)]
    b = chain.boundary_matrix()
    x, s, y = np.linalg.svd(b)
    keep = s > 1e-15 * max(s[0], 1e-300) if len(s) else []
    return [(x[:, k] * s[k], y[k, :]) for k in range(len(s)) if keep[k]]


def materialize(chain: MpoChain, max_dim: int = DEFAULT_MAX_DIM) -> np.ndarray:
    """Dense matrix of the chain, rows indexed by ``i_N..i_1``."""
    _check_cap(chain, max_dim)
    dout, din = _prod(chain.out_dims), _prod(chain.in_dims)
    out = np.zeros((dout, din), dtype=np.complex128)
    sites = [s.data for s in chain.sites]
    for r, l in _rank_one_terms(chain):
        acc = r.reshape(1, 1, -1)
        for a in sites[:-1]:
            acc = np.einsum("ijmx,IJx->iIjJm", a, acc)
            acc = acc.reshape(acc.shape[0] * acc.shape[1], acc.shape[2] * acc.shape[3], -1)
        last = np.einsum("m,ijmx->ijx", l, sites[-1])
        term = np.einsum("ijx,IJx->iIjJ", last, acc)
        out += term.reshape(dout, din)
    return out


def absorb_boundary(chain: MpoChain) -> MpoChain:
    """Equivalent chain with trivial end bonds and ``Open([1], [1])``."""
    chain = general_to_open(chain)
    bd = chain.boundary
    sites = [s.data for s in chain.sites]
    sites[0] = np.einsum("ijmn,n->ijm", sites[0], bd.right)[..., None]
    sites[-1] = np.einsum("m,ijmn->ijn", bd.left, sites[-1])[:, :, None, :]
    return MpoChain(tuple(sites), trivial_boundary())


def general_to_open(chain: MpoChain) -> MpoChain:
    """Rewrite a general or periodic boundary as an open one.

    Sites become ``1_{D0} (x) A_k`` and the boundary vectors are the maximally
    entangled pair with ``b`` folded into the left end.
    """
    if isinstance(chain.boundary, Open):
        return chain
    b = chain.boundary_matrix()
    d0 = chain.sites[0].D_right
    eye = np.eye(d0)
    sites = []
    for s in chain.sites:
        a = np.einsum("ac,ijmn->ijamcn", eye, s.data)
        sh = a.shape
        sites.append(a.reshape(sh[0], sh[1], sh[2] * sh[3], sh[4] * sh[5]))
    left = b.reshape(-1)
    right = eye.reshape(-1)
    return MpoChain(tuple(sites), Open(left, right))


def block(chain: MpoChain, q: int) -> MpoChain:
    """Fuse consecutive groups of ``q`` sites into single sites."""
    if q < 1 or chain.n % q:
        raise ArgumentError(f"cannot block {chain.n} sites in groups of {q}")
    if q == 1:
        return chain
    new = []
    for g in range(0, chain.n, q):
        acc = chain.sites[g].data
        for s in chain.sites[g + 1 : g + q]:
            t = np.einsum("ijmx,IJxn->iIjJmn", s.data, acc)
            sh = t.shape
            acc = t.reshape(sh[0] * sh[1], sh[2] * sh[3], sh[4], sh[5])
        new.append(acc)
    return MpoChain(tuple(new), chain.boundary)


def vectorize_to_mps(chain: MpoChain) -> MpoChain:
    """Fuse each site's (out, in) pair into a single physical leg, out first."""
    sites = []
    for s in chain.sites:
        sites.append(s.data.reshape(s.d_out * s.d_in, 1, s.D_left, s.D_right))
    return MpoChain(tuple(sites), chain.boundary)


def mps_to_operator(vec, out_dims: Sequence[int], in_dims: Sequence[int]) -> np.ndarray:
    """Undo the site-wise (out, in) fusion of :func:`vectorize_to_mps`."""
    n = len(out_dims)
    shape = []
    for k in reversed(range(n)):
        shape += [out_dims[k], in_dims[k]]
    t = np.asarray(vec).reshape(shape)
    perm = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    return t.transpose(perm).reshape(_prod(out_dims), _prod(in_dims))


def operator_to_sitewise(u, out_dims: Sequence[int], in_dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`mps_to_operator`: regroup indices as (out_N, in_N, ..., out_1, in_1)."""
    n = len(out_dims)
    t = np.asarray(u).reshape(list(reversed(out_dims)) + list(reversed(in_dims)))
    perm = []
    for k in range(n):
        perm += [k, n + k]
    return t.transpose(perm).reshape(-1)


def reverse_chain(chain: MpoChain) -> MpoChain:
    """Mirror the chain: site order reversed, physical legs swapped, bonds transposed.

    Materializes to ``P U^T P`` with ``P`` the site-reversal permutation.
    """
    sites = tuple(s.data.transpose(1, 0, 3, 2) for s in reversed(chain.sites))
    bd = chain.boundary
    if isinstance(bd, Open):
        new_bd: Boundary = Open(bd.right, bd.left)
    elif isinstance(bd, Periodic):
        new_bd = bd
    else:
        new_bd = General(bd.b.T)
    return MpoChain(sites, new_bd)


def site_reversal(dims: Sequence[int]) -> np.ndarray:
    """Permutation matrix reversing the tensor-factor order of ``dims`` (site order)."""
    n = len(dims)
    total = _prod(dims)
    idx = np.arange(total).reshape(list(reversed(dims)))
    perm = idx.transpose(list(reversed(range(n)))).reshape(-1)
    p = np.zeros((total, total))
    p[np.arange(total), perm] = 1.0
    return p


@dataclass(frozen=True)
class DenseVerdict:
    passed: bool
    residual: float
    threshold: float
    square: bool


def dense_unitarity_oracle(
    chain: MpoChain, tol: float = 1e-10, max_dim: int = DEFAULT_MAX_DIM
) -> DenseVerdict:
    """Brute-force ``||U^dag U - 1||_F`` test; passes iff residual <= tol*sqrt(dim)."""
    u = materialize(chain, max_dim=max_dim)
    square = u.shape[0] == u.shape[1]
    res = float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[1])))
    thr = tol * np.sqrt(u.shape[1])
    return DenseVerdict(square and res <= thr, res, thr, square)


def identity_chain(n: int, d: int = 2) -> MpoChain:
    site = np.eye(d, dtype=np.complex128).reshape(d, d, 1, 1)
    return MpoChain(tuple(site for _ in range(n)))


def product_chain(ops: Sequence[np.ndarray]) -> MpoChain:
    """D = 1 chain of single-site operators, ``ops[0]`` on site 1."""
    return MpoChain(tuple(np.asarray(o).reshape(*np.shape(o), 1, 1) for o in ops))


def gauge_transform(chain: MpoChain, gauges: Sequence[np.ndarray]) -> MpoChain:
    """Insert ``X_k X_k^{-1}`` on each internal bond ``k = 1..N-1``.

    Site ``k + 1`` becomes ``A_{k+1} X_k`` and site ``k`` becomes ``X_k^{-1} A_k``;
    the operator is unchanged.
    """
    if len(gauges) != chain.n - 1:
        raise DimensionError(f"need {chain.n - 1} gauge matrices")
    sites = [s.data for s in chain.sites]
    for k, x in enumerate(gauges):
        x = as_tensor(x)
        dk = sites[k].shape[2]
        if x.shape != (dk, dk):
            raise DimensionError(f"gauge {k + 1} must be {dk}x{dk}")
        sites[k + 1] = np.einsum("ijmx,xn->ijmn", sites[k + 1], x)
        sites[k] = np.einsum("mx,ijxn->ijmn", np.linalg.inv(x), sites[k])
    return MpoChain(tuple(sites), chain.boundary)
