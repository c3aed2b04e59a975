"""Bond-space unitarity analysis for nonuniform MPOs.

Vectorization convention: a vector on the doubled bond ``C^D (x) C^D`` carries
the index pair ``(a, b)`` with ``a`` from the conjugated copy. The associated
operator is ``X[b, a] = v[a, b]`` (see :func:`vec_to_op`), which makes the
transferred states positive semidefinite in the usual sense.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DegenerateInputError, DimensionError, PreconditionError, ResourceCapError
from .mpo import DEFAULT_MAX_DIM, MpoChain, Open, SiteTensor, absorb_boundary, general_to_open, trivial_boundary
from .spans import SpanBasis, span_from_batch
from .tensor import DEFAULT_RANK_TOL, numerical_rank, svd_split

DEFAULT_TOL = 1e-10
DEFAULT_MAX_STRINGS = 4096


def vec_to_op(v, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim).T


def op_to_vec(x) -> np.ndarray:
    return np.asarray(x).T.reshape(-1)


@dataclass(frozen=True, eq=False)
class HermitianBasis:
    """Identity plus generalized Gell-Mann matrices with ``Tr(s_i s_j) = d delta_ij``."""

    d: int
    matrices: tuple

    def __len__(self) -> int:
        return len(self.matrices)


@lru_cache(maxsize=None)
def hermitian_basis(d: int) -> HermitianBasis:
    """For ``d = 2`` this is ``(1, X, Y, Z)``."""
    mats = [np.eye(d, dtype=np.complex128)]
    scale = np.sqrt(d / 2.0)
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=np.complex128)
            sym[j, k] = sym[k, j] = 1.0
            anti = np.zeros((d, d), dtype=np.complex128)
            anti[j, k] = -1j
            anti[k, j] = 1j
            mats += [scale * sym, scale * anti]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        mats.append(scale * np.sqrt(2.0 / (l * (l + 1))) * np.diag(diag).astype(np.complex128))
    for m in mats:
        m.setflags(write=False)
    return HermitianBasis(d, tuple(mats))


@dataclass(frozen=True, eq=False)
class TransferFamily:
    E: np.ndarray
    S: tuple

    @property
    def operators(self) -> list[np.ndarray]:
        return [self.E, *self.S]


def physical_blocks(site: SiteTensor) -> np.ndarray:
    """``M[a, b] = sum_i conj(A^{ia}) (x) A^{ib}`` as an array (d_in, d_in, Dl^2, Dr^2)."""
    a = site.data
    m = np.einsum("iamn,ibpq->abmpnq", a.conj(), a)
    d, dl, dr = site.d_in, site.D_left, site.D_right
    return m.reshape(d, d, dl * dl, dr * dr)


def local_es_decomposition(site: SiteTensor, basis: HermitianBasis | None = None) -> TransferFamily:
    """Split the doubled site into ``E = Tr(M)/d`` and ``S_j = Tr(sigma_j M)/d``."""
    if basis is None:
        basis = hermitian_basis(site.d_in)
    if basis.d != site.d_in:
        raise DimensionError(f"basis of dimension {basis.d} for a site with d_in={site.d_in}")
    m = physical_blocks(site)
    sig = np.stack(basis.matrices)
    ops = np.einsum("sba,ab...->s...", sig, m) / basis.d
    return TransferFamily(ops[0], tuple(ops[1:]))


def _total_dims_match(chain: MpoChain) -> bool:
    return int(np.prod(chain.out_dims)) == int(np.prod(chain.in_dims))


@dataclass
class Lemma1Report:
    passed: bool
    violating: tuple | None = None
    value: complex | None = None
    reason: str = ""


def check_lemma1_exhaustive(
    chain: MpoChain, tol: float = DEFAULT_TOL, max_strings: int = DEFAULT_MAX_STRINGS
) -> Lemma1Report:
    """Evaluate every string product ``S_{j_N} ... S_{j_1}`` on the absorbed chain.

    Strings are reported as ``(j_N, ..., j_1)`` and scanned in lexicographic order.
    """
    count = int(np.prod([d * d for d in chain.in_dims]))
    if count > max_strings:
        raise ResourceCapError(
            f"{count} strings exceed the cap {max_strings}; use check_unitarity_recursive"
        )
    if not _total_dims_match(chain):
        return Lemma1Report(False, reason="total input and output dimensions differ")
    sites = absorb_boundary(chain).sites
    vals = np.ones(1, dtype=np.complex128)
    for s in sites:
        ops = np.stack(local_es_decomposition(s).operators)
        vals = np.einsum("smn,...n->s...m", ops, vals)
    vals = vals.reshape(-1)
    target = np.zeros_like(vals)
    target[0] = 1.0
    bad = np.flatnonzero(np.abs(vals - target) > tol)
    if bad.size:
        shape = [d * d for d in reversed(chain.in_dims)]
        idx = tuple(int(x) for x in np.unravel_index(bad[0], shape))
        return Lemma1Report(False, idx, complex(vals[bad[0]]), "string condition violated")
    return Lemma1Report(True)


@dataclass
class RecursionState:
    rhos: list = field(default_factory=list)
    spans: list = field(default_factory=list)

    @property
    def span_dims(self) -> list[int]:
        return [s.dim for s in self.spans]


def _recurse(sites, tol: float) -> RecursionState:
    """Propagate ``rho^(k)`` and the real span ``S^(k)`` along sites with D_0 = 1."""
    if sites[0].D_right != 1:
        raise DimensionError("recursion expects a trivial right bond on site 1")
    rho = np.ones(1, dtype=np.complex128)
    span = SpanBasis((1,), real=True, abs_floor=tol)
    st = RecursionState()
    for s in sites:
        fam = local_es_decomposition(s)
        gens = span.generators()
        cands = [fam.E @ x for x in gens]
        for sj in fam.S:
            cands.append(sj @ rho)
            cands.extend(sj @ x for x in gens)
        new = span_from_batch(cands, (s.D_left**2,), real=True, abs_floor=tol)
        rho = fam.E @ rho
        span = new
        st.rhos.append(vec_to_op(rho, s.D_left))
        st.spans.append(span)
    return st


@dataclass
class RecursiveReport:
    passed: bool
    rhos: list
    span_dims: list
    spans: list
    rho_final: complex
    failed_at: int | None
    bond_dims: list
    reason: str = ""

    def rho_eigenvalues(self) -> list[list[float]]:
        return [sorted(np.linalg.eigvalsh((r + r.conj().T) / 2).tolist()) for r in self.rhos]


def check_unitarity_recursive(chain: MpoChain, tol: float = DEFAULT_TOL) -> RecursiveReport:
    """Recursive bond-space unitarity test.

    Passes iff ``|rho^(N) - 1| <= tol``, the final span is empty and the total
    input and output dimensions agree. ``failed_at`` is the first site ``k``
    (1-based) whose left bond is trivial while ``S^(k)`` is nonzero, or ``N``.
    """
    ab = absorb_boundary(chain)
    st = _recurse(ab.sites, tol)
    rho_n = complex(st.rhos[-1].reshape(-1)[0])
    bonds = ab.bond_dims
    ok_rho = abs(rho_n - 1.0) <= tol
    ok_span = st.spans[-1].dim == 0
    square = _total_dims_match(chain)
    passed = ok_rho and ok_span and square
    failed_at = None
    reason = ""
    if not passed:
        failed_at = chain.n
        for k, s in enumerate(st.spans, start=1):
            if bonds[k] == 1 and s.dim > 0:
                failed_at = k
                break
        if not square:
            reason = "total input and output dimensions differ"
        elif not ok_span:
            reason = "traceless span does not vanish"
        else:
            reason = f"rho^(N) = {rho_n:.6g} != 1"
    return RecursiveReport(passed, st.rhos, st.span_dims, st.spans, rho_n, failed_at, bonds, reason)


def canonical_residual(site: SiteTensor) -> float:
    a = site.data
    g = np.einsum("ijmn,ijmp->np", a.conj(), a) / site.d_in
    return float(np.linalg.norm(g - np.eye(site.D_right)))


@dataclass
class CanonicalReport:
    passed: bool
    residuals: list
    first_failure: int | None


def check_canonical_form(chain: MpoChain, tol: float = DEFAULT_TOL) -> CanonicalReport:
    """Per-site residual ``|(1/d) sum A^dag A - 1|_F`` on the boundary-absorbed chain."""
    ab = absorb_boundary(chain)
    res = [canonical_residual(s) for s in ab.sites]
    bad = [k for k, r in enumerate(res, start=1) if r > tol]
    return CanonicalReport(not bad, res, bad[0] if bad else None)


def to_canonical_form(chain: MpoChain, rank_tol: float = DEFAULT_RANK_TOL) -> MpoChain:
    """Gauge the chain into canonical form by an SVD sweep from site N down to site 1.

    The leftover scalar has its phase spread equally over the sites; its modulus
    (exactly 1 for an MPU) is kept on the left boundary vector.
    """
    sites = absorb_boundary(chain).sites
    carry = np.ones((1, 1), dtype=np.complex128)
    new = []
    for s in reversed(sites):
        t = np.einsum("am,ijmn->aijn", carry, s.data)
        a, i, j, n = t.shape
        res = svd_split(t.reshape(a * i * j, n), rank_tol)
        if res.numerical_rank == 0:
            raise DegenerateInputError("chain is numerically zero")
        res = res.truncated()
        r = res.numerical_rank
        x = res.left_isometry.reshape(a, i, j, r).transpose(1, 2, 0, 3)
        new.append(x * np.sqrt(j))
        carry = res.singular_values[:, None] * res.right_factor
    new.reverse()
    c = complex(carry[0, 0])
    f = c / np.prod([np.sqrt(s.shape[1]) for s in new])
    phase = np.exp(1j * np.angle(f) / len(new))
    sites_out = tuple(s * phase for s in new)
    return MpoChain(sites_out, Open(np.array([abs(f)]), np.ones(1)))


def isometry_sequence(
    chain: MpoChain, tol: float = DEFAULT_TOL, max_dim: int = DEFAULT_MAX_DIM, strict: bool = False
) -> list[float]:
    """Residuals ``|V_k^dag V_k - 1|_F`` for the partial contractions ``V_k = A_k ... A_1``.

    Stops at the first ``k`` whose dense ``V_k`` exceeds ``max_dim`` (raises if ``strict``).
    """
    sites = absorb_boundary(chain).sites
    res = []
    acc = np.ones((1, 1, 1), dtype=np.complex128)
    for k, s in enumerate(sites, start=1):
        rows = acc.shape[0] * s.d_out * s.D_left
        cols = acc.shape[1] * s.d_in
        if max(rows, cols) > max_dim:
            if strict:
                raise ResourceCapError(f"V_{k} of size {rows}x{cols} exceeds the cap {max_dim}")
            break
        t = np.einsum("ijmx,IJx->iIjJm", s.data, acc)
        acc = t.reshape(t.shape[0] * t.shape[1], t.shape[2] * t.shape[3], t.shape[4])
        v = acc.transpose(2, 0, 1).reshape(-1, acc.shape[1])
        res.append(float(np.linalg.norm(v.conj().T @ v - np.eye(v.shape[1]))))
    return res


def eq17_map(site: SiteTensor, x: np.ndarray) -> np.ndarray:
    """``P(X)_{j'j} = sum conj(A^{ij'}_{mn}) A^{ij}_{mn'} X[n', n]`` for an operator ``X``."""
    a = site.data
    return np.einsum("iamn,ibmp,pn->ab", a.conj(), a, x)


@dataclass
class Prop1Report:
    passed: bool
    eq17_rho: list
    eq17_span: list
    traces: list
    min_eigs: list
    hermitian: list
    traceless: list
    isometry: list


def check_prop1_conditions(
    chain: MpoChain, tol: float = DEFAULT_TOL, max_dim: int = DEFAULT_MAX_DIM
) -> Prop1Report:
    """Verify the state/channel conditions satisfied by a canonical MPU at every cut."""
    if not check_canonical_form(chain, tol).passed:
        raise PreconditionError("chain is not in canonical form")
    sites = absorb_boundary(chain).sites
    st = _recurse(sites, tol)
    rho_prev = np.ones((1, 1), dtype=np.complex128)
    gens_prev: list = []
    eq_rho, eq_span, traces, mins, herm, trl = [], [], [], [], [], []
    for k, s in enumerate(sites):
        p = eq17_map(s, rho_prev)
        eq_rho.append(float(np.linalg.norm(p - np.eye(s.d_in))))
        worst = 0.0
        for g in gens_prev:
            worst = max(worst, float(np.linalg.norm(eq17_map(s, g))))
        eq_span.append(worst)
        rho = st.rhos[k]
        traces.append(complex(np.trace(rho)))
        mins.append(float(np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2))))
        gens = [vec_to_op(g, s.D_left) for g in st.spans[k].generators()]
        herm.append(max([float(np.linalg.norm(g - g.conj().T)) for g in gens], default=0.0))
        trl.append(max([abs(np.trace(g)) for g in gens], default=0.0))
        rho_prev, gens_prev = rho, gens
    iso = isometry_sequence(chain, tol, max_dim)
    passed = (
        all(r <= tol for r in eq_rho)
        and all(r <= tol for r in eq_span)
        and all(abs(t - 1) <= tol for t in traces)
        and all(m >= -tol for m in mins)
        and all(h <= tol for h in herm)
        and all(t <= tol for t in trl)
        and all(r <= tol for r in iso)
    )
    return Prop1Report(passed, eq_rho, eq_span, traces, mins, herm, trl, iso)


@dataclass(frozen=True, eq=False)
class ChannelData:
    choi: np.ndarray
    kraus: tuple
    kraus_rank: int
    d_out: int
    d_in: int

    def apply(self, x: np.ndarray) -> np.ndarray:
        return sum(k @ x @ k.conj().T for k in self.kraus)


def split_chain(chain: MpoChain, k: int) -> tuple[MpoChain | None, MpoChain]:
    """Split an open chain into sites ``1..k`` and ``k+1..N``.

    The prefix keeps the right boundary vector and the completion the left one;
    the vectors placed on the cut are placeholders and are never used.
    """
    chain = general_to_open(chain)
    bd = chain.boundary
    if not 0 <= k < chain.n:
        raise DimensionError(f"cut {k} outside 0..{chain.n - 1}")
    dk = chain.sites[k].D_right
    comp = MpoChain(chain.sites[k:], Open(bd.left, np.ones(dk)))
    if k == 0:
        return None, comp
    pre = MpoChain(chain.sites[:k], Open(np.ones(dk), bd.right))
    return pre, comp


def _completion_tensor(completion: MpoChain) -> np.ndarray:
    comp = general_to_open(completion)
    bd = comp.boundary
    acc = np.einsum("m,ijmn->ijn", bd.left, comp.sites[-1].data)
    for s in reversed(comp.sites[:-1]):
        t = np.einsum("ijx,IJxn->iIjJn", acc, s.data)
        acc = t.reshape(t.shape[0] * t.shape[1], t.shape[2] * t.shape[3], t.shape[4])
    return acc


def channel_from_completion(completion: MpoChain, tol: float = DEFAULT_TOL) -> ChannelData:
    """Channel from bond operators at the cut to operators on the completion's input.

    ``T(X) = sum_i K_i X K_i^dag`` with ``K_i[j, n] = A~^{ij}_n / sqrt(d')``. It is
    trace preserving exactly when the completion satisfies the canonical condition.
    """
    a = _completion_tensor(completion)
    d_out, d_in, dk = a.shape
    g = np.einsum("ijn,ijp->np", a.conj(), a) / d_in
    if np.linalg.norm(g - np.eye(dk)) > max(tol, 1e-8):
        raise PreconditionError("completion violates left trace preservation")
    kraus = tuple(a[i] / np.sqrt(d_in) for i in range(d_out))
    choi = np.zeros((d_in * dk, d_in * dk), dtype=np.complex128)
    for k in kraus:
        v = k.reshape(-1)
        choi += np.outer(v, v.conj())
    w = np.linalg.eigvalsh(choi)[::-1]
    rank = int(np.count_nonzero(w > max(tol, DEFAULT_RANK_TOL * max(w[0], 0.0) * len(w))))
    return ChannelData(choi, kraus, rank, d_out, d_in)


@dataclass
class ExtensionReport:
    passed: bool
    rho_residual: float
    span_residual: float
    kraus_rank: int
    d_prime: int
    concatenated_passed: bool

    @property
    def agree(self) -> bool:
        return self.passed == self.concatenated_passed


def verify_extension(prefix: MpoChain | None, completion: MpoChain, tol: float = DEFAULT_TOL) -> ExtensionReport:
    """Check that ``completion`` extends ``prefix`` to an MPU via its channel.

    Both parts must have equal total input and output dimension.
    """
    for part, name in ((prefix, "prefix"), (completion, "completion")):
        if part is not None and not _total_dims_match(part):
            raise PreconditionError(f"{name} has unequal input and output dimension")
    cbd = general_to_open(completion).boundary
    if prefix is None:
        dk = completion.sites[0].D_right
        if dk != 1:
            raise DimensionError("an empty prefix needs a completion with trivial right bond")
        rho = np.ones((1, 1), dtype=np.complex128)
        gens: list = []
        pre_sites: tuple = ()
        right = np.ones(1)
    else:
        pbd = general_to_open(prefix).boundary
        pre_open = general_to_open(prefix)
        if pre_open.sites[-1].D_left != completion.sites[0].D_right:
            raise DimensionError("prefix and completion bonds do not match")
        first = np.einsum("ijmn,n->ijm", pre_open.sites[0].data, pbd.right)[..., None]
        sites = [SiteTensor(first)] + list(pre_open.sites[1:])
        st = _recurse(sites, tol)
        rho = st.rhos[-1]
        dk = sites[-1].D_left
        gens = [vec_to_op(g, dk) for g in st.spans[-1].generators()]
        pre_sites = pre_open.sites
        right = pbd.right
    ch = channel_from_completion(completion, tol)
    dp = ch.d_in
    rho_res = float(np.linalg.norm(ch.apply(rho) - np.eye(dp) / dp))
    span_res = max([float(np.linalg.norm(ch.apply(g))) for g in gens], default=0.0)
    passed = rho_res <= tol and span_res <= tol and ch.kraus_rank == dp
    comp_open = general_to_open(completion)
    full = MpoChain(tuple(pre_sites) + tuple(comp_open.sites), Open(cbd.left, right))
    conc = check_unitarity_recursive(full, tol).passed
    return ExtensionReport(passed, rho_res, span_res, ch.kraus_rank, dp, conc)


def string_span(chain: MpoChain, k: int, tol: float = DEFAULT_TOL) -> SpanBasis:
    """Direct (non-recursive) span of all length-``k`` strings with at least one ``S_j``."""
    sites = absorb_boundary(chain).sites[:k]
    fams = [np.stack(local_es_decomposition(s).operators) for s in sites]
    out = SpanBasis((sites[-1].D_left ** 2,), real=True, abs_floor=tol)
    for js in itertools.product(*[range(f.shape[0]) for f in fams]):
        if not any(js):
            continue
        v = np.ones(1, dtype=np.complex128)
        for f, j in zip(fams, js):
            v = f[j] @ v
        out.add(v)
    return out


__all__ = [
    "HermitianBasis",
    "TransferFamily",
    "ChannelData",
    "hermitian_basis",
    "local_es_decomposition",
    "physical_blocks",
    "check_lemma1_exhaustive",
    "check_unitarity_recursive",
    "check_canonical_form",
    "to_canonical_form",
    "check_prop1_conditions",
    "isometry_sequence",
    "channel_from_completion",
    "verify_extension",
    "split_chain",
    "string_span",
    "vec_to_op",
    "op_to_vec",
    "trivial_boundary",
    "numerical_rank",
]
