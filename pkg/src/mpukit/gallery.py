"""Constructors for the worked MPU examples used as the test corpus."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from .errors import ArgumentError, DimensionError
from .mpo import MpoChain, Open, SiteTensor, absorb_boundary
from .uniform import UniformMpu, rg_fixed_point_tensor
from .unitarity import check_canonical_form, check_unitarity_recursive

HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.diag([1.0, -1.0]).astype(np.complex128)


def haar_unitary(d: int, rng=None) -> np.ndarray:
    return unitary_group.rvs(d, random_state=rng) if d > 1 else np.exp(2j * np.pi * np.random.default_rng(rng).random()) * np.ones((1, 1))


def _is_unitary(v: np.ndarray, tol: float) -> bool:
    v = np.asarray(v)
    return v.ndim == 2 and v.shape[0] == v.shape[1] and np.linalg.norm(v.conj().T @ v - np.eye(v.shape[0])) <= tol


def mcz_tensor() -> np.ndarray:
    a = np.zeros((2, 2, 2, 2), dtype=np.complex128)
    a[1, 1] = np.eye(2)
    a[0, 0] = np.diag([1.0, 0.0])
    return a


def multi_control_z(n: int) -> MpoChain:
    """Bond-dimension-2 chain for ``1 - 2|1..1><1..1|`` on ``n`` qubits."""
    if n < 2:
        raise ArgumentError("multi-control Z needs n >= 2")
    a = mcz_tensor()
    return MpoChain(tuple(a for _ in range(n)), Open(np.array([1.0, 1.0]), np.array([1.0, -2.0])))


def multi_control_z_dense(n: int) -> np.ndarray:
    u = np.eye(2**n, dtype=np.complex128)
    u[-1, -1] = -1.0
    return u


def subspace_product_unitary(v, d: int | None = None, tol: float = 1e-10) -> UniformMpu:
    """Uniform MPU acting as ``v`` on ``span{|i..i>}`` and as the identity elsewhere.

    Bond index 0 carries the identity term, then the diagonal pairs ``(i, i)``,
    then the off-diagonal pairs ``(i, j)`` in lexicographic order.
    """
    v = np.asarray(v, dtype=np.complex128)
    if d is None:
        d = v.shape[0]
    if v.shape != (d, d) or not _is_unitary(v, tol):
        raise ArgumentError("v must be a d x d unitary")
    pairs = [(i, i) for i in range(d)] + [(i, j) for i in range(d) for j in range(d) if i != j]
    D = len(pairs) + 1
    a = np.zeros((d, d, D, D), dtype=np.complex128)
    b = np.zeros((D, D), dtype=np.complex128)
    for p in range(d):
        a[p, p, 0, 0] = 1.0
    b[0, 0] = 1.0
    for k, (i, j) in enumerate(pairs, start=1):
        a[i, j, k, k] = 1.0
        b[k, k] = v[i, j] - (1.0 if i == j else 0.0)
    return UniformMpu(SiteTensor(a), b)


def _gate_tensor(u: np.ndarray, d: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (d * d, d * d):
        raise DimensionError(f"expected a {d * d}x{d * d} two-qudit gate, got {u.shape}")
    return u.reshape(d, d, d, d)


def staircase(u_list: Sequence[np.ndarray], v_list: Sequence[np.ndarray] | None = None) -> MpoChain:
    """Staircase circuit as an MPO on ``N + 1`` qudits.

    Gate ``U_k`` (``u_list[k-1]``) acts on qudits ``(k+1, k)`` with qudit ``k+1``
    as the more significant factor; the circuit is ``U_N ... U_1``. With
    ``v_list = [V_2, ..., V_N]`` a second floor ``V_2 ... V_N`` (``V_N`` first)
    is applied before the ``U`` layer on the same qudit pairs.
    """
    n = len(u_list)
    if n == 0:
        raise ArgumentError("need at least one gate")
    d = int(round(np.sqrt(np.shape(u_list[0])[0])))
    us = [_gate_tensor(u, d) for u in u_list]
    if v_list is None:
        return _one_floor(us, d)
    if len(v_list) != n - 1 or n < 2:
        raise ArgumentError("two-floor staircase needs N >= 2 and N - 1 lower gates")
    vs = [None] + [_gate_tensor(v, d) for v in v_list]
    return _two_floor(us, vs, d)


def _one_floor(us, d: int) -> MpoChain:
    n = len(us)
    if n == 1:
        return MpoChain((us[0].reshape(d * d, d * d, 1, 1),))
    sites = []
    # gate index order: (left_out, right_out, left_in, right_in)
    a1 = us[0].transpose(1, 2, 3, 0).reshape(d, d * d, d, 1)
    sites.append(a1)
    for u in us[1:-1]:
        sites.append(u.transpose(1, 2, 0, 3))
    an = us[-1].reshape(d * d, d, 1, d)
    sites.append(an)
    return MpoChain(tuple(sites))


def _two_floor(us, vs, d: int) -> MpoChain:
    n = len(us)
    sites = []
    # A_1[i, j, (a, b), 0] = U_1[(a, i), (b, j)]
    a1 = us[0].transpose(1, 3, 0, 2).reshape(d, d, d * d, 1)
    sites.append(a1)
    for k in range(1, n - 1):
        u, v = us[k], vs[k]
        # A[i, j, (a, b), (c, e)] = sum_x U[(a, i), (x, c)] V[(x, e), (b, j)]
        t = np.einsum("aixc,xebj->ijabce", u, v)
        sites.append(t.reshape(d, d, d * d, d * d))
    u, v = us[-1], vs[-1]
    # A_N[(o_l, o_r), (j_l, j_r), 0, (c, e)] = sum_x U[(o_l, o_r), (x, c)] V[(x, e), (j_l, j_r)]
    t = np.einsum("opxc,xejk->opjkce", u, v)
    sites.append(t.reshape(d * d, d * d, 1, d * d))
    return MpoChain(tuple(sites))


def staircase_converse_detect(chain: MpoChain, tol: float = 1e-10) -> list[np.ndarray] | None:
    """Read off staircase gates from a canonical chain whose cuts carry maximally
    mixed states and full traceless spans.

    Gate ``k`` is site ``k`` reshaped with rows (left bond, output) and columns
    (input, right bond). Returns ``None`` unless every gate is unitary.
    """
    if not check_canonical_form(chain, tol).passed:
        return None
    ab = absorb_boundary(chain)
    rep = check_unitarity_recursive(ab, tol)
    if not rep.passed:
        return None
    for k, (rho, dim) in enumerate(zip(rep.rhos[:-1], rep.span_dims[:-1]), start=1):
        dk = rho.shape[0]
        if np.linalg.norm(rho - np.eye(dk) / dk) > 1e-8 or dim != dk * dk - 1:
            return None
    gates = []
    for s in ab.sites:
        g = s.data.transpose(2, 0, 1, 3).reshape(s.D_left * s.d_out, s.d_in * s.D_right)
        if not _is_unitary(g, 1e-8):
            return None
        gates.append(g)
    return gates


def control_x_tensor() -> np.ndarray:
    """``A^{ij}_{mn} = delta_{m,i} delta_{i, j xor n}``."""
    a = np.zeros((2, 2, 2, 2), dtype=np.complex128)
    for i in range(2):
        for j in range(2):
            for n in range(2):
                if i == (j ^ n):
                    a[i, j, i, n] = 1.0
    return a


def control_x_staircase() -> UniformMpu:
    """Cascade of CNOTs, each controlled by its right neighbour (the less significant qubit)."""
    b = np.outer([1.0, 0.0], [1.0, 1.0])
    return UniformMpu(SiteTensor(control_x_tensor()), b)


def rg_subspace_unitary(rho_list, v, tol: float = 1e-10) -> UniformMpu:
    """Uniform MPU ``1 + sum (v_st - delta_st) |Psi_s><Psi_t|`` over periodic
    fixed-point MPS built from mutually orthogonal density matrices."""
    v = np.asarray(v, dtype=np.complex128)
    r = len(rho_list)
    if v.shape != (r, r) or not _is_unitary(v, tol):
        raise ArgumentError("v must be an r x r unitary")
    sq = []
    for rho in rho_list:
        w, x = np.linalg.eigh(np.asarray(rho, dtype=np.complex128))
        sq.append((x * np.sqrt(np.clip(w, 0, None))) @ x.conj().T)
    for s in range(r):
        for t in range(s + 1, r):
            if abs(np.trace(sq[s] @ sq[t])) > tol:
                raise ArgumentError(f"Tr(sqrt(rho_{s}) sqrt(rho_{t})) is not zero")
    tensors = [rg_fixed_point_tensor(rho, tol=tol, compress=True).data[:, 0] for rho in rho_list]
    dphys = tensors[0].shape[0]
    if any(t.shape[0] != dphys for t in tensors):
        raise DimensionError("all density matrices must act on the same space")
    ks = [t.shape[1] for t in tensors]
    K = sum(ks)
    sector = np.repeat(np.arange(r), ks)
    big = np.zeros((dphys, K, K), dtype=np.complex128)
    o = 0
    for t, k in zip(tensors, ks):
        big[:, o : o + k, o : o + k] = t
        o += k
    D = K * K + 1
    a = np.zeros((dphys, dphys, D, D), dtype=np.complex128)
    a[:, :, 0, 0] = np.eye(dphys)
    pair = np.einsum("pam,qbn->pqabmn", big, big.conj()).reshape(dphys, dphys, K * K, K * K)
    a[:, :, 1:, 1:] = pair
    b = np.zeros((D, D), dtype=np.complex128)
    b[0, 0] = 1.0
    vm = v - np.eye(r)
    for al in range(K):
        for be in range(K):
            idx = 1 + al * K + be
            b[idx, idx] = vm[sector[al], sector[be]]
    return UniformMpu(SiteTensor(a), b)


def rg_state(rho, n: int) -> np.ndarray:
    """Periodic fixed-point MPS on ``n`` sites as a dense vector."""
    t = rg_fixed_point_tensor(rho, compress=True).data[:, 0]
    dphys, k, _ = t.shape
    acc = np.broadcast_to(np.eye(k), (1, k, k)).astype(np.complex128)
    for _ in range(n):
        acc = np.einsum("pmx,Pxn->pPmn", t, acc).reshape(-1, k, k)
    return np.einsum("pmm->p", acc)
