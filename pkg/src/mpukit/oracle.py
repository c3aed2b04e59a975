"""Brute-force ground truth and a harness that cross-checks bond-space verdicts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .automaton import automaton_mpo, random_automaton
from .errors import ArgumentError, DimensionError, ResourceCapError
from .gallery import (
    control_x_staircase,
    haar_unitary,
    multi_control_z,
    rg_subspace_unitary,
    staircase,
    subspace_product_unitary,
)
from .mpo import (
    DEFAULT_MAX_DIM,
    MpoChain,
    Open,
    block,
    dense_unitarity_oracle,
    identity_chain,
    product_chain,
    reverse_chain,
)
from .unitarity import (
    DEFAULT_MAX_STRINGS,
    DEFAULT_TOL,
    check_lemma1_exhaustive,
    check_unitarity_recursive,
    to_canonical_form,
)

DEFAULT_SEED = 20240917
CHECKS = ("recursive", "lemma1")


@dataclass(frozen=True)
class OracleConfig:
    max_total_dim: int = DEFAULT_MAX_DIM
    tol: float = DEFAULT_TOL
    max_strings: int = DEFAULT_MAX_STRINGS
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.max_total_dim < 1 or self.max_strings < 1:
            raise ArgumentError("caps must be positive")
        if not self.tol > 0:
            raise ArgumentError("tolerance must be positive")


def circuit_product(
    placements: Sequence[tuple[np.ndarray, Sequence[int]]],
    n_wires: int,
    dims: int | Sequence[int] = 2,
    max_dim: int = DEFAULT_MAX_DIM,
) -> np.ndarray:
    """Dense product of embedded gates, applied in list order (first entry acts first).

    Wires are numbered ``1..n_wires`` from the least significant factor. In a
    placement ``(gate, (w_a, w_b, ...))`` the gate's first tensor factor acts on
    wire ``w_a``.
    """
    dims = [dims] * n_wires if isinstance(dims, (int, np.integer)) else list(dims)
    if len(dims) != n_wires:
        raise DimensionError("need one dimension per wire")
    total = int(np.prod(dims))
    if total > max_dim:
        raise ResourceCapError(f"circuit dimension {total} exceeds the cap {max_dim}")
    # axes ordered most significant first: wire w sits at axis n_wires - w
    shape = [dims[w - 1] for w in range(n_wires, 0, -1)]
    op = np.eye(total, dtype=np.complex128).reshape(shape + [total])
    for gate, wires in placements:
        wires = list(wires)
        if len(set(wires)) != len(wires) or not all(1 <= w <= n_wires for w in wires):
            raise ArgumentError(f"invalid wires {wires}")
        axes = [n_wires - w for w in wires]
        gdims = [dims[w - 1] for w in wires]
        g = np.asarray(gate, dtype=np.complex128)
        k = int(np.prod(gdims))
        if g.shape != (k, k):
            raise DimensionError(f"gate of shape {g.shape} does not fit wires {wires}")
        g = g.reshape(gdims + gdims)
        nw = len(wires)
        op = np.tensordot(g, op, axes=(list(range(nw, 2 * nw)), axes))
        op = np.moveaxis(op, list(range(nw)), axes)
    return op.reshape(total, total)


def staircase_circuit(u_list, v_list=None, d: int = 2) -> np.ndarray:
    """Dense oracle for :func:`mpukit.gallery.staircase`."""
    n = len(u_list)
    placements = []
    if v_list is not None:
        for k in range(n, 1, -1):
            placements.append((v_list[k - 2], (k + 1, k)))
    for k in range(1, n + 1):
        placements.append((u_list[k - 1], (k + 1, k)))
    return circuit_product(placements, n + 1, d)


@dataclass
class CrossReport:
    verdicts: dict
    dense_passed: bool | None
    dense_residual: float | None
    agree: bool
    disagreements: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    seed: int = DEFAULT_SEED

    @property
    def passed(self) -> bool:
        vals = list(self.verdicts.values())
        return self.agree and bool(vals) and all(vals)


def cross_validate(chain: MpoChain, checks: Sequence[str] = CHECKS, config: OracleConfig | None = None) -> CrossReport:
    """Run bond-space checks and the dense oracle; flag any mismatch.

    The dense tolerance is ``10 * tol * sqrt(dim)``.
    """
    config = config or OracleConfig()
    verdicts, skipped = {}, []
    for name in checks:
        if name == "recursive":
            verdicts[name] = bool(check_unitarity_recursive(chain, config.tol).passed)
        elif name == "lemma1":
            try:
                verdicts[name] = bool(check_lemma1_exhaustive(chain, config.tol, config.max_strings).passed)
            except ResourceCapError:
                skipped.append(name)
        else:
            raise ArgumentError(f"unknown check {name!r}")
    dense_ok = dense_res = None
    try:
        dv = dense_unitarity_oracle(chain, tol=10 * config.tol, max_dim=config.max_total_dim)
        dense_ok, dense_res = bool(dv.passed), dv.residual
    except ResourceCapError:
        skipped.append("dense")
    dis = []
    if dense_ok is not None:
        dis = [name for name, v in verdicts.items() if v != dense_ok]
    vals = set(verdicts.values())
    if len(vals) > 1:
        dis = sorted(set(dis) | set(verdicts))
    return CrossReport(verdicts, dense_ok, dense_res, not dis, dis, skipped, config.seed)


@dataclass(frozen=True)
class CorpusEntry:
    family: str
    n: int
    chain: MpoChain
    unitary: bool


def corrupt(chain: MpoChain, eps: float = 1e-3, site: int = 0) -> MpoChain:
    """Add ``eps`` to the first entry of one site tensor."""
    sites = [s.data.copy() for s in chain.sites]
    sites[site][(0,) * 4] += eps
    return MpoChain(tuple(sites), chain.boundary)


def _random_mpo(n: int, rng, d: int = 2, bond: int = 2) -> MpoChain:
    bonds = [1] + [bond] * (n - 1) + [1]
    sites = []
    for k in range(n):
        shape = (d, d, bonds[k + 1], bonds[k])
        sites.append(rng.normal(size=shape) + 1j * rng.normal(size=shape))
    return MpoChain(tuple(sites))


def gallery_corpus(seed: int = DEFAULT_SEED, n_max: int = 8) -> Iterator[CorpusEntry]:
    """Unitary and non-unitary chains used for oracle sweeps.

    Every family is generated for ``2 <= N <= n_max`` where the dense operator
    fits under the default cap.
    """
    rng = np.random.default_rng(seed)
    d4 = rg_subspace_unitary([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], haar_unitary(2, rng))
    sp = subspace_product_unitary(haar_unitary(2, rng))
    cx = control_x_staircase()
    for n in range(2, n_max + 1):
        yield CorpusEntry("multi_control_z", n, multi_control_z(n), True)
        yield CorpusEntry("identity", n, identity_chain(n), True)
        yield CorpusEntry("product", n, product_chain([haar_unitary(2, rng) for _ in range(n)]), True)
        yield CorpusEntry("staircase", n, staircase([haar_unitary(4, rng) for _ in range(n - 1)]), True)
        if n >= 3:
            us = [haar_unitary(4, rng) for _ in range(n - 1)]
            vs = [haar_unitary(4, rng) for _ in range(n - 2)]
            yield CorpusEntry("staircase_two_floor", n, staircase(us, vs), True)
        yield CorpusEntry("control_x", n, cx.chain(n), True)
        yield CorpusEntry("subspace_product", n, sp.chain(n), True)
        if 4**n <= DEFAULT_MAX_DIM:
            yield CorpusEntry("rg_subspace", n, d4.chain(n), True)
        yield CorpusEntry("automaton", n, automaton_mpo(random_automaton(n, rng)), True)
        yield CorpusEntry("canonical_mcz", n, to_canonical_form(multi_control_z(n)), True)
        if n % 2 == 0:
            yield CorpusEntry("blocked_mcz", n, block(multi_control_z(n), 2), True)
        yield CorpusEntry(
            "reversed_staircase", n, reverse_chain(staircase([haar_unitary(4, rng) for _ in range(n - 1)])), True
        )
        yield CorpusEntry("corrupted_mcz", n, corrupt(multi_control_z(n)), False)
        yield CorpusEntry("random_mpo", n, _random_mpo(n, rng), False)
        bad_bd = Open(np.array([1.0, 1.0]), np.array([1.0, -1.0]))
        yield CorpusEntry("mcz_wrong_boundary", n, MpoChain(multi_control_z(n).sites, bad_bd), False)
        yield CorpusEntry("corrupted_staircase", n, corrupt(staircase([haar_unitary(4, rng) for _ in range(n - 1)]), 1e-3, -1), False)
