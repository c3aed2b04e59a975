"""Phase unitaries generated by deterministic weighted finite automata.

The automaton reads the computational basis label from the most significant
site (site N) to site 1. At site ``k`` it is in state ``i`` (``0 <= i < D_k``),
reads the symbol ``j``, accumulates the phase ``theta[k][i, j]`` and moves to
state ``f[k][i, j]`` (``0 <= f < D_{k-1}``). ``D_0 = D_N = 1``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DimensionError
from .mpo import MpoChain


@dataclass(frozen=True, eq=False)
class AutomatonSpec:
    """``transitions[k-1]`` and ``phases[k-1]`` have shape ``(D_k, d)`` for site ``k``."""

    transitions: tuple
    phases: tuple

    def __post_init__(self):
        tr = tuple(np.asarray(t, dtype=np.int64) for t in self.transitions)
        ph = tuple(np.asarray(p, dtype=np.float64) for p in self.phases)
        if not tr or len(tr) != len(ph):
            raise ArgumentError("need one transition and one phase table per site")
        d = tr[0].shape[1]
        for k, (t, p) in enumerate(zip(tr, ph)):
            if t.ndim != 2 or t.shape != p.shape or t.shape[1] != d:
                raise DimensionError(f"site {k + 1}: tables must share shape (D_k, {d})")
            if not np.all(np.isfinite(p)):
                raise ArgumentError(f"site {k + 1}: non-finite phase")
        if tr[-1].shape[0] != 1:
            raise ArgumentError("the last site must have a single state (D_N = 1)")
        bonds = [1] + [t.shape[0] for t in tr[:-1]]
        for k, t in enumerate(tr):
            if t.min() < 0 or t.max() >= bonds[k]:
                raise ArgumentError(f"site {k + 1}: transition outside 0..{bonds[k] - 1}")
        object.__setattr__(self, "transitions", tr)
        object.__setattr__(self, "phases", ph)

    @property
    def n(self) -> int:
        return len(self.transitions)

    @property
    def d(self) -> int:
        return self.transitions[0].shape[1]

    @property
    def bond_dims(self) -> list[int]:
        """``[D_0, ..., D_N]``."""
        return [1] + [t.shape[0] for t in self.transitions]


def run_automaton(spec: AutomatonSpec, symbols) -> float:
    """Total phase for the label ``symbols = (j_N, ..., j_1)``."""
    state, total = 0, 0.0
    for k in reversed(range(spec.n)):
        j = symbols[spec.n - 1 - k]
        total += spec.phases[k][state, j]
        state = int(spec.transitions[k][state, j])
    return total


def phase_table(spec: AutomatonSpec) -> np.ndarray:
    """Phases for all labels, ordered with site N most significant."""
    return np.array([run_automaton(spec, s) for s in itertools.product(range(spec.d), repeat=spec.n)])


def automaton_mps(spec: AutomatonSpec) -> MpoChain:
    """MPS with tensors ``A^j_{il} = delta_{l, f_ij} exp(i theta_ij)`` (physical input of size 1)."""
    sites = []
    for k, (t, p) in enumerate(zip(spec.transitions, spec.phases)):
        dk, d = t.shape
        dprev = spec.bond_dims[k]
        a = np.zeros((d, 1, dk, dprev), dtype=np.complex128)
        for i in range(dk):
            for j in range(d):
                a[j, 0, i, t[i, j]] = np.exp(1j * p[i, j])
        sites.append(a)
    return MpoChain(tuple(sites))


def automaton_mpo(spec: AutomatonSpec) -> MpoChain:
    """The diagonal MPU with the same tensors placed on the diagonal of the physical legs."""
    sites = []
    for s in automaton_mps(spec).sites:
        d = s.d_out
        a = np.zeros((d, d, s.D_left, s.D_right), dtype=np.complex128)
        for j in range(d):
            a[j, j] = s.data[j, 0]
        sites.append(a)
    return MpoChain(tuple(sites))


def automaton_mpu(spec: AutomatonSpec) -> np.ndarray:
    return np.diag(np.exp(1j * phase_table(spec)))


def mcz_automaton(n: int) -> AutomatonSpec:
    """Two-state automaton that remembers whether every symbol read so far was 1."""
    if n < 2:
        raise ArgumentError("n >= 2")
    tr, ph = [], []
    tr.append(np.zeros((2, 2), dtype=int))
    p1 = np.zeros((2, 2))
    p1[1, 1] = np.pi
    ph.append(p1)
    for _ in range(n - 2):
        tr.append(np.array([[0, 0], [0, 1]]))
        ph.append(np.zeros((2, 2)))
    tr.append(np.array([[0, 1]]))
    ph.append(np.zeros((1, 2)))
    return AutomatonSpec(tuple(tr), tuple(ph))


def random_automaton(n: int, rng, d: int = 2, max_bond: int = 3) -> AutomatonSpec:
    bonds = [1] + [int(rng.integers(1, max_bond + 1)) for _ in range(n - 1)] + [1]
    tr, ph = [], []
    for k in range(1, n + 1):
        tr.append(rng.integers(0, bonds[k - 1], size=(bonds[k], d)))
        ph.append(rng.uniform(0, 2 * np.pi, size=(bonds[k], d)))
    return AutomatonSpec(tuple(tr), tuple(ph))


def automaton_circuit_simulate(spec: AutomatonSpec, state, return_full: bool = False):
    """Apply the phase unitary through an ancilla circuit.

    One ancilla of dimension ``D_k`` sits on each internal bond ``k = 1..N-1``.
    The forward sweep ``V_N, ..., V_1`` writes the automaton state into the
    ancillas (``|l> -> |l + f>``) while accumulating phases; the backward sweep
    ``U_2, ..., U_N`` uncomputes them (``|l> -> |l - f>``). Returns the system
    state and the norm of the component with some ancilla away from ``|0>``.
    """
    n, d = spec.n, spec.d
    psi = np.asarray(state, dtype=np.complex128)
    if psi.shape != (d**n,):
        raise DimensionError(f"state must have {d ** n} entries")
    bonds = spec.bond_dims
    anc_dims = bonds[1:n]
    full = np.zeros((d,) * n + tuple(anc_dims), dtype=np.complex128)
    full[(Ellipsis,) + (0,) * len(anc_dims)] = psi.reshape((d,) * n)

    def qubit_axis(k):
        return n - k

    def anc_axis(k):
        return n + k - 1

    def apply(k, sign, with_phase):
        ctrl = anc_axis(k) if k < n else None
        tgt = anc_axis(k - 1) if k > 1 else None
        t, p = spec.transitions[k - 1], spec.phases[k - 1]
        out = np.zeros_like(full)
        for i in range(t.shape[0]):
            for j in range(d):
                idx = [slice(None)] * full.ndim
                idx[qubit_axis(k)] = j
                if ctrl is not None:
                    idx[ctrl] = i
                idx = tuple(idx)
                blk = full[idx]
                if tgt is not None:
                    ax = tgt - sum(1 for a in (qubit_axis(k), ctrl) if a is not None and a < tgt)
                    blk = np.roll(blk, sign * int(t[i, j]), axis=ax)
                if with_phase:
                    blk = blk * np.exp(1j * p[i, j])
                out[idx] = blk
        return out

    for k in range(n, 0, -1):
        full = apply(k, +1, True)
    for k in range(2, n + 1):
        full = apply(k, -1, False)
    sys = full[(Ellipsis,) + (0,) * len(anc_dims)].reshape(-1)
    rest = full.copy()
    rest[(Ellipsis,) + (0,) * len(anc_dims)] = 0.0
    leak = float(np.linalg.norm(rest))
    if return_full:
        return sys, leak, full
    return sys, leak
