"""Uniform bulk tensors with a boundary matrix: unitarity for all N, translation
invariance, and the semi-simple block structure of the transfer span."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, ConditioningError, DimensionError, NumericalError, PreconditionError
from .mpo import DEFAULT_MAX_DIM, DenseVerdict, General, MpoChain, SiteTensor, dense_unitarity_oracle, materialize
from .spans import SpanBasis, span_distance, span_from_batch, span_of
from .unitarity import local_es_decomposition, physical_blocks

DEFAULT_SEED = 0xA11CE
DEFAULT_Q_MAX = 4


@dataclass(frozen=True, eq=False)
class UniformMpu:
    bulk: SiteTensor
    b: np.ndarray

    def __post_init__(self):
        bulk = self.bulk if isinstance(self.bulk, SiteTensor) else SiteTensor(self.bulk)
        b = np.asarray(self.b, dtype=np.complex128)
        if bulk.D_left != bulk.D_right:
            raise DimensionError("uniform bulk tensor needs square bonds")
        if b.shape != (bulk.D_left, bulk.D_left):
            raise DimensionError(f"boundary matrix shape {b.shape} does not match D={bulk.D_left}")
        if not np.all(np.isfinite(b)):
            raise DimensionError("boundary matrix has non-finite entries")
        object.__setattr__(self, "bulk", bulk)
        object.__setattr__(self, "b", b)

    @classmethod
    def periodic(cls, bulk) -> "UniformMpu":
        bulk = bulk if isinstance(bulk, SiteTensor) else SiteTensor(bulk)
        return cls(bulk, np.eye(bulk.D_left))

    @property
    def D(self) -> int:
        return self.bulk.D_left

    @property
    def d(self) -> int:
        return self.bulk.d_in

    @property
    def B(self) -> np.ndarray:
        return np.kron(self.b.conj(), self.b)

    @property
    def is_periodic(self) -> bool:
        return bool(np.allclose(self.b, np.eye(self.D), atol=1e-12))

    def chain(self, n: int) -> MpoChain:
        return MpoChain(tuple(self.bulk for _ in range(n)), General(self.b))

    def materialize(self, n: int, max_dim: int = DEFAULT_MAX_DIM) -> np.ndarray:
        return materialize(self.chain(n), max_dim=max_dim)

    def matrices(self) -> list[np.ndarray]:
        a = self.bulk.data
        return [a[i, j] for i in range(a.shape[0]) for j in range(a.shape[1])]


def block_uniform(u: UniformMpu, q: int) -> UniformMpu:
    """Fuse ``q`` copies of the bulk tensor; the boundary matrix is unchanged."""
    if q < 1:
        raise ArgumentError("q must be positive")
    acc = u.bulk.data
    for _ in range(q - 1):
        t = np.einsum("ijmx,IJxn->iIjJmn", u.bulk.data, acc)
        sh = t.shape
        acc = t.reshape(sh[0] * sh[1], sh[2] * sh[3], sh[4], sh[5])
    return UniformMpu(SiteTensor(acc), u.b)


def transfer_span(site: SiteTensor) -> SpanBasis:
    """Complex span of ``{E, S_j}``, i.e. of all physical blocks ``M_ab``."""
    m = physical_blocks(site)
    return span_of([m[a, b] for a in range(m.shape[0]) for b in range(m.shape[1])])


@dataclass
class AlgebraSpan:
    basis: SpanBasis
    closure_depth: int
    stabilized: bool

    @property
    def dim(self) -> int:
        return self.basis.dim

    def elements(self) -> list[np.ndarray]:
        return self.basis.generators()

    def closure_residual(self) -> float:
        els = self.elements()
        worst = 0.0
        for x in els:
            for y in els:
                worst = max(worst, self.basis.residual_norm(x @ y))
        return worst


def generate_algebra(generators, cap: int | None = None) -> AlgebraSpan:
    """Span of all words in ``generators``, grown by word length until stable."""
    gens = [np.asarray(g, dtype=np.complex128) for g in generators]
    if not gens:
        raise ArgumentError("need at least one generator")
    shape = gens[0].shape
    if len(shape) != 2 or shape[0] != shape[1] or any(g.shape != shape for g in gens):
        raise DimensionError("generators must be square matrices of equal size")
    if cap is None:
        cap = shape[0] ** 2
    span = SpanBasis(shape)
    layer = []
    for g in gens:
        if span.add(g):
            layer.append(span.generators()[-1])
    depth = 1 if layer else 0
    while layer and depth < cap:
        nxt = []
        for g in gens:
            for x in layer:
                if span.add(g @ x):
                    nxt.append(span.generators()[-1])
        if nxt:
            depth += 1
        layer = nxt
    return AlgebraSpan(span, depth, not layer)


@dataclass
class TranslationReport:
    passed: bool
    witness: tuple | None
    value: complex
    incomplete: bool


def check_translation_invariance(u: UniformMpu, tol: float = 1e-10) -> TranslationReport:
    """``Tr(b [X, Y]) = 0`` for all X, Y in the algebra generated by the bulk matrices."""
    alg = generate_algebra(u.matrices())
    els = alg.elements()
    best, best_val = None, 0.0
    for x in els:
        bx = u.b @ x
        for y in els:
            val = np.trace(bx @ y) - np.trace(u.b @ y @ x)
            if abs(val) > abs(best_val):
                best, best_val = (x, y), val
    passed = abs(best_val) <= tol
    return TranslationReport(passed, None if passed else best, complex(best_val), not alg.stabilized)


@dataclass
class UniformVerdict:
    n: int
    passed: bool
    e_value: complex
    s_residual: float
    span_dim: int
    dense: DenseVerdict | None = None

    @property
    def agree(self) -> bool | None:
        return None if self.dense is None else self.dense.passed == self.passed


def check_uniform_unitarity(
    u: UniformMpu,
    n_range,
    tol: float = 1e-10,
    max_dim: int = DEFAULT_MAX_DIM,
    dense: bool = True,
) -> list[UniformVerdict]:
    """Per-N test of ``Tr(B E^N) = 1`` and ``Tr(B w) = 0`` for words with an ``S_j``.

    The word span is grown recursively from the left. When ``dense`` is set and
    the operator fits under ``max_dim`` the dense oracle runs alongside.
    """
    n_range = sorted(set(int(n) for n in n_range))
    if not n_range or n_range[0] < 1:
        raise ArgumentError("n_range must contain positive integers")
    fam = local_es_decomposition(u.bulk)
    B = u.B
    dd = u.D * u.D
    pi = np.eye(dd, dtype=np.complex128)
    words = SpanBasis((dd, dd))
    out = []
    for n in range(1, n_range[-1] + 1):
        gens = words.generators()
        cands = [fam.E @ x for x in gens]
        for sj in fam.S:
            cands.append(sj @ pi)
            cands.extend(sj @ x for x in gens)
        words = span_from_batch(cands, (dd, dd))
        pi = fam.E @ pi
        if n not in n_range:
            continue
        ev = complex(np.sum(B.T * pi))
        sres = max([abs(np.sum(B.T * w)) for w in words.generators()], default=0.0)
        passed = abs(ev - 1) <= tol and sres <= tol
        dv = None
        if dense and u.d ** n <= max_dim:
            dv = dense_unitarity_oracle(u.chain(n), tol=10 * tol, max_dim=max_dim)
        out.append(UniformVerdict(n, passed, ev, float(sres), words.dim, dv))
    return out


def _null_space(m: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal null-space columns using the Gram matrix eigenbasis."""
    g = m.conj().T @ m
    w, v = np.linalg.eigh(g)
    scale = max(w[-1], 1.0) if len(w) else 1.0
    return v[:, w <= tol * scale]


def _commutant_dense(mats, tol: float) -> list[np.ndarray]:
    p = mats[0].shape[0]
    eye = np.eye(p)
    g = np.zeros((p * p, p * p), dtype=np.complex128)
    for m in mats:
        l = np.kron(m, eye) - np.kron(eye, m.T)
        g += l.conj().T @ l
    w, v = np.linalg.eigh(g)
    scale = max(w[-1], 1.0)
    return [v[:, k].reshape(p, p) for k in np.flatnonzero(w <= tol * scale)]


def commutant(mats, tol: float = 1e-10, rng=None) -> list[np.ndarray]:
    """Basis of ``{X : [X, M] = 0 for all M}``.

    Any such ``X`` commutes with a generic combination ``x`` of the ``M``; when
    ``x`` is diagonalizable, ``X`` is block diagonal over the eigenvalue clusters
    of ``x``, which shrinks the unknowns from ``p^2`` to the sum of squared
    cluster sizes. Falls back to the dense Kronecker system otherwise.
    """
    mats = [np.asarray(m, dtype=np.complex128) for m in mats]
    p = mats[0].shape[0]
    rng = np.random.default_rng(DEFAULT_SEED) if rng is None else rng
    x = sum((rng.normal() + 1j * rng.normal()) * m for m in mats)
    vals, vecs = np.linalg.eig(x)
    if np.linalg.cond(vecs) > 1e8:
        if p > 40:
            raise NumericalError("generic algebra element is not diagonalizable")
        return _commutant_dense(mats, tol)
    vinv = np.linalg.inv(vecs)
    scale_v = max(1.0, float(np.max(np.abs(vals))))
    unknowns = [(i, j) for grp in _cluster(vals, 1e-6 * scale_v) for i in grp for j in grp]
    rot = [vinv @ m @ vecs for m in mats]
    gram = np.zeros((len(unknowns), len(unknowns)), dtype=np.complex128)
    for mp in rot:
        cols = np.zeros((p, p, len(unknowns)), dtype=np.complex128)
        for u, (i, j) in enumerate(unknowns):
            cols[:, j, u] += mp[:, i]
            cols[i, :, u] -= mp[j, :]
        l = cols.reshape(p * p, -1)
        gram += l.conj().T @ l
    w, v = np.linalg.eigh(gram)
    scale = max(w[-1], 1.0)
    out = []
    for k in np.flatnonzero(w <= tol * scale):
        y = np.zeros((p, p), dtype=np.complex128)
        for u, (i, j) in enumerate(unknowns):
            y[i, j] = v[u, k]
        xk = vecs @ y @ vinv
        out.append(xk / np.linalg.norm(xk))
    return out


def _cluster(vals: np.ndarray, tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for k in np.argsort(vals.real + 1e-3 * vals.imag):
        for grp in groups:
            if abs(vals[grp[0]] - vals[k]) <= tol:
                grp.append(int(k))
                break
        else:
            groups.append([int(k)])
    return groups


def _split_irreducible(mats, rng, tol: float, depth: int = 0) -> tuple[np.ndarray, list[int]]:
    """Return ``G`` and block sizes with ``G^-1 M G`` block diagonal and each block irreducible."""
    p = mats[0].shape[0]
    if p == 1:
        return np.eye(1, dtype=np.complex128), [1]
    comm = commutant(mats, tol, rng)
    if len(comm) <= 1:
        return np.eye(p, dtype=np.complex128), [p]
    if depth > 4 * p:
        raise NumericalError("irreducible splitting did not terminate")
    c = sum((rng.normal() + 1j * rng.normal()) * x for x in comm)
    c = c / np.linalg.norm(c)
    vals = np.linalg.eigvals(c)
    groups = _cluster(vals, 1e-6)
    if len(groups) == 1:
        raise NumericalError("commutant element has a single eigenvalue; representation is not semi-simple")
    cols = []
    for grp in groups:
        mu = np.mean(vals[grp])
        ns = _null_space(c - mu * np.eye(p), 1e-12)
        if ns.shape[1] != len(grp):
            raise NumericalError("commutant element is not diagonalizable")
        cols.append(ns)
    g = np.hstack(cols)
    ginv = np.linalg.inv(g)
    out_cols, sizes = [], []
    start = 0
    for ns in cols:
        r = ns.shape[1]
        sub = [(ginv @ m @ g)[start : start + r, start : start + r] for m in mats]
        g_sub, s_sub = _split_irreducible(sub, rng, tol, depth + 1)
        out_cols.append(ns @ g_sub)
        sizes += s_sub
        start += r
    return np.hstack(out_cols), sizes


@dataclass
class BlockClass:
    """Sub-blocks carrying the same representation up to a scalar ``lambdas[k]``."""

    d: int
    lambdas: list
    offsets: list

    @property
    def m(self) -> int:
        return len(self.lambdas)


@dataclass
class SemiSimpleDecomposition:
    G: np.ndarray
    classes: list
    zero_block_size: int
    condition_number: float
    block_injective: bool
    span_dim: int
    block_residual: float = 0.0

    @property
    def dims(self) -> list[int]:
        return [c.d for c in self.classes]

    @property
    def multiplicities(self) -> list[int]:
        return [c.m for c in self.classes]

    def conjugate(self, m: np.ndarray) -> np.ndarray:
        return np.linalg.solve(self.G, m @ self.G)


@dataclass
class SemiSimpleFailure:
    reason: str
    radical: list = field(default_factory=list)
    invariant_chain: list = field(default_factory=list)


def _as_matrices(span) -> list[np.ndarray]:
    if isinstance(span, AlgebraSpan):
        return span.elements()
    if isinstance(span, SpanBasis):
        return span.generators()
    return span_of([np.asarray(m, dtype=np.complex128) for m in span]).generators()


def _radical(els: list[np.ndarray], tol: float) -> list[np.ndarray]:
    n = len(els)
    t = np.array([[np.trace(els[a] @ els[b]) for b in range(n)] for a in range(n)])
    w, v = np.linalg.eigh(t.conj().T @ t)
    scale = max(w[-1], 1.0)
    null = v[:, w <= tol * scale]
    return [sum(c[a] * els[a] for a in range(n)) for c in null.T]


def _column_space(ms: list[np.ndarray], tol: float = 1e-9) -> np.ndarray:
    if not ms:
        return np.zeros((0, 0))
    x, s, _ = np.linalg.svd(np.hstack(ms), full_matrices=False)
    return x[:, s > tol * max(s[0], 1e-300)]


def _range_compression(gens: list[np.ndarray]) -> tuple[np.ndarray, int]:
    """Basis ``[range | joint kernel]`` when the two are complementary.

    In that basis every element is zero outside its leading ``r x r`` block. A
    semi-simple algebra always splits this way; otherwise the identity is
    returned and nothing is compressed.
    """
    p = gens[0].shape[0]
    rng_cols = _column_space(gens)
    _, sv, vh = np.linalg.svd(np.vstack(gens), full_matrices=False)
    r = rng_cols.shape[1]
    keep = int(np.sum(sv > 1e-9 * max(sv[0], 1e-300)))
    ker = vh[keep:].conj().T
    if r == p or r + ker.shape[1] != p:
        return np.eye(p, dtype=np.complex128), p
    g0 = np.hstack([rng_cols, ker])
    if np.linalg.cond(g0) > 1e8:
        return np.eye(p, dtype=np.complex128), p
    return g0, r


def semisimple_decompose(span, seed: int = DEFAULT_SEED, tol: float = 1e-10, max_cond: float = 1e8):
    """Decompose the representation spanned by ``span`` into irreducible blocks.

    A nonzero radical of the generated algebra (elements orthogonal to the whole
    algebra under the trace form) certifies that no similarity makes the span
    block diagonal with irreducible blocks; the failure carries the radical and
    the chain of invariant subspaces ``range(Rad^k)``.
    """
    gens_full = _as_matrices(span)
    if not gens_full:
        raise ArgumentError("empty span")
    p_full = gens_full[0].shape[0]
    g0, r = _range_compression(gens_full)
    g0inv = np.linalg.inv(g0)
    gens = [(g0inv @ m @ g0)[:r, :r] for m in gens_full]
    p = r

    def lift(x):
        big = np.zeros((p_full, p_full), dtype=np.complex128)
        big[:r, :r] = x
        return g0 @ big @ g0inv

    alg = generate_algebra(gens)
    rad = _radical(alg.elements(), 1e-16)
    if rad:
        chain, power = [], list(rad)
        for _ in range(p):
            cs = _column_space(power)
            if cs.shape[1] == 0:
                break
            chain.append(cs)
            power = [r @ x for r in rad for x in power]
            power = [x for x in power if np.linalg.norm(x) > 1e-9] or []
        rad = [lift(x) for x in rad]
        chain = [_column_space([g0[:, :r] @ c]) for c in chain]
        return SemiSimpleFailure("algebra has a nonzero radical: the span is not semi-simple", rad, chain)
    rng = np.random.default_rng(seed)
    g, sizes = _split_irreducible(gens, rng, tol)
    ginv = np.linalg.inv(g)
    conj = [ginv @ m @ g for m in gens]
    offs = np.concatenate([[0], np.cumsum(sizes)])
    blocks = [(int(offs[k]), int(sizes[k])) for k in range(len(sizes))]

    def restrict(k, m):
        o, s = blocks[k]
        return m[o : o + s, o : o + s]

    zero, live = [], []
    for k in range(len(blocks)):
        if max(np.linalg.norm(restrict(k, m)) for m in conj) <= 1e-9:
            zero.append(k)
        else:
            live.append(k)
    pis = {k: np.stack([restrict(k, m).reshape(-1) for m in conj], axis=1) for k in live}
    ranks = {k: np.linalg.matrix_rank(pis[k], tol=1e-8) for k in live}
    injective = all(ranks[k] == blocks[k][1] ** 2 for k in live)
    cols = {k: g[:, blocks[k][0] : blocks[k][0] + blocks[k][1]] for k in range(len(blocks))}
    classes_raw: list[list[tuple[int, complex]]] = []
    if injective:
        x0 = sum((rng.normal() + 1j * rng.normal()) * m for m in conj)
        assigned: set[int] = set()
        for k in live:
            if k in assigned:
                continue
            grp = [(k, 1.0 + 0j)]
            assigned.add(k)
            for k2 in live:
                if k2 in assigned or blocks[k2][1] != blocks[k][1]:
                    continue
                stacked = np.vstack([pis[k], pis[k2]])
                if np.linalg.matrix_rank(stacked, tol=1e-8) != ranks[k]:
                    continue
                lam, t = _intertwine(k, k2, conj, restrict, x0)
                cols[k2] = cols[k2] @ t
                grp.append((k2, lam))
                assigned.add(k2)
            classes_raw.append(grp)
    else:
        classes_raw = [[(k, 1.0 + 0j)] for k in live]
    classes_sorted = []
    for grp in classes_raw:
        lams = np.array([lam for _, lam in grp])
        big = lams[np.argmax(np.abs(lams))]
        lams = lams / big
        order = sorted(range(len(grp)), key=lambda i: (-round(abs(lams[i]), 9), round(lams[i].real, 9), round(lams[i].imag, 9)))
        classes_sorted.append(([grp[i][0] for i in order], [complex(lams[i]) for i in order]))
    classes_sorted.sort(
        key=lambda c: (
            blocks[c[0][0]][1],
            len(c[0]),
            tuple((-round(abs(l), 9), round(l.real, 9), round(l.imag, 9)) for l in c[1]),
        )
    )
    new_cols, classes, off = [], [], 0
    for ks, lams in classes_sorted:
        d = blocks[ks[0]][1]
        offsets = []
        for k in ks:
            new_cols.append(cols[k])
            offsets.append(off)
            off += d
        classes.append(BlockClass(d, lams, offsets))
    for k in zero:
        new_cols.append(cols[k])
    inner = np.eye(p_full, dtype=np.complex128)
    inner[:r, :r] = np.hstack(new_cols)
    G = g0 @ inner
    cond = float(np.linalg.cond(G))
    if cond > max_cond:
        raise ConditioningError(f"similarity transform has condition number {cond:.3g}")
    zero_size = sum(blocks[k][1] for k in zero) + (p_full - r)
    dec = SemiSimpleDecomposition(G, classes, zero_size, cond, injective, len(gens))
    dec.block_residual = _block_residual(dec, gens_full)
    return dec


def _intertwine(k, k2, conj, restrict, x0):
    """Find ``lam, T`` with ``pi_k2(y) T = lam T pi_k(y)`` for all ``y``."""
    a0, b0 = restrict(k, x0), restrict(k2, x0)
    d = a0.shape[0]
    a0i, b0i = np.linalg.inv(a0), np.linalg.inv(b0)
    eye = np.eye(d)
    rows = []
    for m in conj:
        na = a0i @ restrict(k, m)
        nb = b0i @ restrict(k2, m)
        rows.append(np.kron(nb, eye) - np.kron(eye, na.T))
    ns = _null_space(np.vstack(rows), 1e-12)
    if ns.shape[1] != 1:
        raise NumericalError(f"expected a one-dimensional intertwiner space, found {ns.shape[1]}")
    t = ns[:, 0].reshape(d, d)
    lhs = t @ a0
    lam = complex(np.vdot(lhs, b0 @ t) / np.vdot(lhs, lhs))
    res = max(np.linalg.norm(restrict(k2, m) @ t - lam * t @ restrict(k, m)) for m in conj)
    if res > 1e-7 * max(1.0, max(np.linalg.norm(m) for m in conj)):
        raise NumericalError("blocks share a kernel but are not related by a scaled similarity")
    return lam, t


def _block_residual(dec: SemiSimpleDecomposition, gens) -> float:
    """Largest off-block entry, plus deviation from the scaled-copy structure."""
    worst = 0.0
    mask = np.ones(dec.G.shape, dtype=bool)
    for c in dec.classes:
        for o in c.offsets:
            mask[o : o + c.d, o : o + c.d] = False
    for m in gens:
        mc = dec.conjugate(m)
        if mask.any():
            worst = max(worst, float(np.max(np.abs(mc[mask]))))
        if dec.block_injective:
            for c in dec.classes:
                o0 = c.offsets[0]
                ref = mc[o0 : o0 + c.d, o0 : o0 + c.d]
                for lam, o in zip(c.lambdas, c.offsets):
                    blk = mc[o : o + c.d, o : o + c.d]
                    worst = max(worst, float(np.max(np.abs(blk * c.lambdas[0] - lam * ref))))
    return worst


def decompose_blocked(u: UniformMpu, q_max: int = DEFAULT_Q_MAX, seed: int = DEFAULT_SEED):
    """Block ``q = 1, 2, 4, ...`` until the transfer span is block-injective and
    satisfies ``SE = ES`` inside ``S^2``. Returns ``(q, blocked, decomposition)``."""
    q = 1
    last = None
    while q <= q_max:
        bu = block_uniform(u, q)
        fam = local_es_decomposition(bu.bulk)
        dec = semisimple_decompose(span_of(fam.operators), seed=seed)
        last = (q, bu, dec)
        if isinstance(dec, SemiSimpleFailure):
            return last
        if dec.block_injective and max(_prop4_spans(fam)) <= 1e-8:
            return last
        q *= 2
    return last


def _prop4_spans(fam) -> tuple[float, float]:
    """Return (distance between SE and ES, worst residual of SE outside S^2)."""
    S = [s for s in fam.S]
    if not S or max(np.linalg.norm(s) for s in S) <= 1e-12:
        return 0.0, 0.0
    shape = fam.E.shape
    S = span_of(S, shape=shape).generators()
    se = span_of([s @ fam.E for s in S], shape=shape)
    es = span_of([fam.E @ s for s in S], shape=shape)
    s2 = span_of([a @ b for a in S for b in S], shape=shape)
    dist = span_distance(se, es)
    incl = max([s2.residual_norm(g) for g in se.generators()], default=0.0)
    return dist, incl


@dataclass
class BlockGroup:
    kind: str
    d: int
    value: complex
    size: int
    b_sum_norm: float
    b_nonzero: bool

    @property
    def ok(self) -> bool:
        return self.b_sum_norm <= 1e-8 and (self.size >= 2 or not self.b_nonzero)


@dataclass
class StructureReport:
    passed: bool
    q: int
    b_identity: complex
    Q_E: list
    Q_S: list
    B_Q: list
    groups: list
    residuals: dict
    n_max: int


def verify_semisimple_structure(
    dec: SemiSimpleDecomposition, E, S, B, n_max: int | None = None, tol: float = 1e-8
) -> StructureReport:
    """Check the block structure forced on a semi-simple MPU by unitarity.

    Blocks where every ``S_j`` vanishes and ``E = 1`` form the identity part
    (its size is ``q``). The remaining blocks are grouped by equal scalar
    (``E`` value for ``S = 0`` blocks, class proportionality constant
    otherwise); each group with nonzero boundary content must have at least two
    members and boundary blocks summing to zero.
    """
    if not isinstance(dec, SemiSimpleDecomposition) or not dec.block_injective:
        raise PreconditionError("structure verification needs a block-injective decomposition")
    S = list(S)
    Ec = dec.conjugate(np.asarray(E))
    Sc = [dec.conjugate(np.asarray(s)) for s in S]
    Bc = dec.conjugate(np.asarray(B))
    fam_like = type("F", (), {"E": np.asarray(E), "S": S})
    se_es, se_s2 = _prop4_spans(fam_like)
    q = 0
    b_id = 0.0 + 0j
    qe, qs, bq = [], [], []
    groups: list[BlockGroup] = []
    identity_cols = []
    for c in dec.classes:
        d = c.d
        entries = []
        for lam, o in zip(c.lambdas, c.offsets):
            sl = slice(o, o + d)
            e_blk = Ec[sl, sl]
            s_zero = all(np.linalg.norm(s[sl, sl]) <= tol for s in Sc)
            entries.append((lam, o, sl, e_blk, s_zero))
        ref_lam, ref_o = c.lambdas[0], c.offsets[0]
        e_ref = Ec[ref_o : ref_o + d, ref_o : ref_o + d]
        scale = np.trace(e_ref) / (d * ref_lam) if abs(np.trace(e_ref)) > tol else 1.0
        pending: list[tuple[complex, int, np.ndarray, str]] = []
        for lam, o, sl, e_blk, s_zero in entries:
            if s_zero and d == 1 and abs(e_blk[0, 0] - 1) <= tol:
                q += 1
                b_id += Bc[sl, sl][0, 0]
                identity_cols.append(o)
                continue
            qe.append(e_blk)
            qs.append([s[sl, sl] for s in Sc])
            bq.append(Bc[sl, sl])
            if s_zero and d == 1:
                pending.append((complex(e_blk[0, 0]), d, Bc[sl, sl], "dephasing"))
            else:
                pending.append((complex(lam * scale), d, Bc[sl, sl], "coupled"))
        used = [False] * len(pending)
        for i, (val, d_i, b_i, kind) in enumerate(pending):
            if used[i]:
                continue
            tot, size, nz = np.zeros_like(b_i), 0, False
            for k2 in range(i, len(pending)):
                v2, _, b2, kind2 = pending[k2]
                if not used[k2] and kind2 == kind and abs(v2 - val) <= 1e-8 * max(1.0, abs(val)):
                    used[k2] = True
                    tot = tot + b2
                    size += 1
                    nz = nz or np.linalg.norm(b2) > tol
            groups.append(BlockGroup(kind, d_i, val, size, float(np.linalg.norm(tot)), bool(nz)))
    n_distinct = max([len({round(abs(g.value), 8) for g in groups if g.d == c.d}) for c in dec.classes] + [1])
    span_dim = span_of(S, shape=np.shape(E)).dim if S else 0
    if n_max is None:
        n_max = n_distinct + span_dim
    mask = np.ones(Ec.shape[0], dtype=bool)
    mask[identity_cols] = False
    E_Q = Ec[np.ix_(mask, mask)]
    B_Q = Bc[np.ix_(mask, mask)]
    pow_res, pw = 0.0, np.eye(E_Q.shape[0])
    for _ in range(n_max):
        pw = E_Q @ pw
        pow_res = max(pow_res, abs(np.sum(B_Q.T * pw)))
    word_res = _word_functionals(Ec, Sc, Bc, n_max)
    residuals = {
        "trace_B_identity": abs(b_id - 1),
        "SE_equals_ES": se_es,
        "SE_in_S2": se_s2,
        "B_Q_E_powers": float(pow_res),
        "word_functionals": word_res,
        "block_structure": dec.block_residual,
        "groups": max([g.b_sum_norm for g in groups], default=0.0),
    }
    passed = (
        q >= 1
        and residuals["trace_B_identity"] <= tol
        and se_es <= tol
        and se_s2 <= tol
        and pow_res <= tol
        and word_res <= tol
        and all(g.ok for g in groups)
    )
    return StructureReport(passed, q, complex(b_id), qe, qs, bq, groups, residuals, n_max)


def _word_functionals(Ec, Sc, Bc, n_max: int) -> float:
    """Worst of ``|Tr(B E^n) - 1|`` and ``|Tr(B w)|`` over words with an ``S_j``, ``n <= n_max``."""
    dd = Ec.shape[0]
    pi = np.eye(dd, dtype=np.complex128)
    words = SpanBasis((dd, dd))
    worst = 0.0
    for _ in range(n_max):
        gens = words.generators()
        cands = [Ec @ x for x in gens]
        for s in Sc:
            cands.append(s @ pi)
            cands.extend(s @ x for x in gens)
        words = span_from_batch(cands, (dd, dd))
        pi = Ec @ pi
        worst = max(worst, abs(np.sum(Bc.T * pi) - 1))
        for w in words.generators():
            worst = max(worst, abs(np.sum(Bc.T * w)))
    return float(worst)


@dataclass
class Factorization:
    v: np.ndarray
    theta: float
    q: int
    residuals: dict


@dataclass
class NonFactorizing:
    witness: tuple | None
    reason: str


def check_factorization(u: UniformMpu, n_range, tol: float = 1e-10, q_max: int = DEFAULT_Q_MAX, max_dim: int = DEFAULT_MAX_DIM):
    """Extract ``U_N = exp(i theta N) V^(x)N`` from a periodic uniform MPU when the
    traceless transfer part vanishes after blocking, otherwise return a witness
    word ``Tr(S_j^n) != 0``."""
    if not u.is_periodic:
        raise ArgumentError("factorization needs a periodic boundary")
    q = 1
    while q <= q_max:
        bu = block_uniform(u, q)
        fam = local_es_decomposition(bu.bulk)
        if max([np.linalg.norm(s) for s in fam.S], default=0.0) <= tol:
            v = bu.materialize(1, max_dim=max_dim)
            vv = v.conj().T @ v
            if np.linalg.norm(vv - vv[0, 0] * np.eye(v.shape[0])) > 1e-8 or abs(vv[0, 0]) < 1e-12:
                return NonFactorizing(None, "single block is not proportional to a unitary")
            scale = np.sqrt(vv[0, 0].real)
            v = v / scale
            res = {}
            for n in n_range:
                if n % q:
                    continue
                un = u.materialize(n, max_dim=max_dim)
                ref = v
                for _ in range(n // q - 1):
                    ref = np.kron(ref, v)
                res[n] = float(np.linalg.norm(un - scale ** (n // q) * ref))
            worst = max(res.values(), default=0.0)
            if worst > max(tol, 1e-8) * v.shape[0] ** (max(n_range) / q):
                return NonFactorizing(None, f"V^(x)N does not reproduce U_N (residual {worst:.3g})")
            theta = 0.0
            return Factorization(v, theta, q, res)
        q *= 2
    fam = local_es_decomposition(u.bulk)
    for n in n_range:
        for j, s in enumerate(fam.S, start=1):
            val = np.trace(np.linalg.matrix_power(s, n))
            if abs(val) > tol:
                return NonFactorizing((j, n, complex(val)), "Tr(S_j^n) does not vanish")
    return NonFactorizing(None, "traceless part does not vanish after blocking")


def rg_fixed_point_tensor(rho, tol: float = 1e-10, compress: bool = False) -> SiteTensor:
    """MPS tensor ``B^{(p1,p2)}_{mn} = (sqrt rho)_{p1 m} delta_{p2 n}``.

    The physical leg is the pair ``(p1, p2)``. With ``compress`` the bond is
    restricted to the support of ``rho``.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ArgumentError("rho must be a square matrix")
    if np.linalg.norm(rho - rho.conj().T) > tol:
        raise ArgumentError("rho is not Hermitian")
    w, v = np.linalg.eigh(rho)
    if w[0] < -tol:
        raise ArgumentError("rho is not positive semidefinite")
    if abs(np.sum(w) - 1) > tol:
        raise ArgumentError("rho does not have unit trace")
    w = np.clip(w, 0.0, None)
    sq = (v * np.sqrt(w)) @ v.conj().T
    dim = rho.shape[0]
    sup = v[:, w > tol] if compress else np.eye(dim)
    left = sq @ sup
    data = np.einsum("pa,qc->pqac", left, sup.conj())
    k = sup.shape[1]
    return SiteTensor(data.reshape(dim * dim, 1, k, k))
