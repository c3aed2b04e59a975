"""Command-line front end.

Exit status: 0 all checks pass, 1 a check failed, 2 usage or parse error,
3 a resource cap was hit.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .automaton import automaton_mpo, random_automaton
from .errors import MpuError, PreconditionError, ResourceCapError
from .gallery import (
    control_x_staircase,
    haar_unitary,
    multi_control_z,
    rg_subspace_unitary,
    staircase,
    subspace_product_unitary,
)
from .io import (
    ParseError,
    automaton_from_doc,
    chain_from_doc,
    chain_to_doc,
    doc_kind,
    dumps,
    gates_from_doc,
    loads,
    matrix_from_doc,
    phase_table_to_doc,
    uniform_from_doc,
    uniform_to_doc,
)
from .lme import detect_phase_form, lme_compress, verify_lme
from .mpo import MpoChain, materialize
from .obstruction import prop3_schmidt_gap
from .oracle import OracleConfig, cross_validate, gallery_corpus
from .tensor import DEFAULT_RANK_TOL
from .uniform import (
    SemiSimpleDecomposition,
    check_translation_invariance,
    check_uniform_unitarity,
    decompose_blocked,
    verify_semisimple_structure,
)
from .unitarity import (
    DEFAULT_TOL,
    check_canonical_form,
    check_prop1_conditions,
    check_unitarity_recursive,
    local_es_decomposition,
    to_canonical_form,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3
DEFAULT_SEED = 1234
DEFAULT_MAX_ORACLE_N = 12


class UsageError(MpuError, ValueError):
    pass


@dataclass
class CliConfig:
    command: str
    inputs: list = field(default_factory=list)
    tol: float = DEFAULT_TOL
    rank_tol: float = DEFAULT_RANK_TOL
    max_oracle_n: int = DEFAULT_MAX_ORACLE_N
    seed: int = DEFAULT_SEED
    format: str = "text"
    oracle: bool = False
    options: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not (self.tol > 0 and self.rank_tol > 0):
            raise UsageError("--tol and --rank-tol must be positive")
        if self.max_oracle_n < 0:
            raise UsageError("--max-oracle-n must be non-negative")
        if self.format not in ("text", "structured"):
            raise UsageError("--format must be text or structured")


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (complex, np.complexfloating)):
        x = complex(x)
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, np.ndarray):
        return [_num(v) for v in x.tolist()] if x.ndim else _num(x.item())
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _num(v) for k, v in x.items()}
    return x


def _read(path: str, stdin) -> tuple[dict, str]:
    if path == "-":
        return loads(stdin.read(), "<stdin>"), "<stdin>"
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    return loads(text, path), path


def _load_chain(cfg: CliConfig, stdin) -> MpoChain:
    doc, src = _read(cfg.inputs[0] if cfg.inputs else "-", stdin)
    kind = doc_kind(doc)
    if kind == "chain":
        return chain_from_doc(doc, src)
    if kind == "automaton":
        return automaton_mpo(automaton_from_doc(doc, src))
    raise ParseError(f"{src}: expected a chain document, got kind {kind!r}")


def _report(cfg: CliConfig, passed: bool, body: dict) -> dict:
    return {
        "tool": "mpukit",
        "version": __version__,
        "command": cfg.command,
        "seed": cfg.seed,
        "tol": cfg.tol,
        "rank_tol": cfg.rank_tol,
        "passed": bool(passed),
        **_num(body),
    }


def _oracle_block(cfg: CliConfig, chain: MpoChain) -> dict:
    if chain.n > cfg.max_oracle_n:
        return {"skipped": f"N = {chain.n} exceeds --max-oracle-n {cfg.max_oracle_n}"}
    r = cross_validate(chain, config=OracleConfig(tol=cfg.tol, seed=cfg.seed))
    return {
        "verdicts": r.verdicts,
        "dense_passed": r.dense_passed,
        "dense_residual": r.dense_residual,
        "agree": r.agree,
        "disagreements": r.disagreements,
        "skipped": r.skipped,
    }


def cmd_check(cfg: CliConfig, stdin, stdout) -> tuple[int, dict]:
    chain = _load_chain(cfg, stdin)
    rec = check_unitarity_recursive(chain, cfg.tol)
    can = check_canonical_form(chain, cfg.tol)
    body = {
        "n": chain.n,
        "bond_dims": chain.bond_dims,
        "unitary": rec.passed,
        "reason": rec.reason,
        "failed_at": rec.failed_at,
        "rho_final": rec.rho_final,
        "span_dims": rec.span_dims,
        "rho_eigenvalues": rec.rho_eigenvalues(),
        "canonical": {"passed": can.passed, "residuals": can.residuals, "first_failure": can.first_failure},
    }
    passed = rec.passed
    if can.passed:
        try:
            p1 = check_prop1_conditions(chain, cfg.tol)
            body["prop1"] = {"passed": p1.passed, "min_eigs": p1.min_eigs, "isometry": p1.isometry}
            passed = passed and p1.passed
        except (PreconditionError, ResourceCapError) as exc:
            body["prop1"] = {"skipped": str(exc)}
    else:
        body["prop1"] = {"skipped": "chain is not in canonical form"}
    if cfg.oracle:
        ob = _oracle_block(cfg, chain)
        body["oracle"] = ob
        passed = passed and ob.get("agree", True)
    return (EXIT_OK if passed else EXIT_FAIL), _report(cfg, passed, body)


def cmd_canon(cfg: CliConfig, stdin, stdout) -> tuple[int, dict]:
    chain = _load_chain(cfg, stdin)
    out = to_canonical_form(chain, cfg.rank_tol)
    return EXIT_OK, chain_to_doc(out)


def cmd_uniform(cfg: CliConfig, stdin, stdout) -> tuple[int, dict]:
    doc, src = _read(cfg.inputs[0] if cfg.inputs else "-", stdin)
    if doc_kind(doc) != "uniform":
        raise ParseError(f"{src}: expected a uniform document")
    u, nr = uniform_from_doc(doc, src)
    nr = cfg.options.get("n_range") or nr or list(range(2, 7))
    verdicts = check_uniform_unitarity(u, nr, cfg.tol, dense=cfg.oracle)
    unitary = all(v.passed for v in verdicts)
    ti = check_translation_invariance(u, cfg.tol)
    q, bu, dec = decompose_blocked(u, seed=cfg.seed)
    body = {
        "unitarity": {
            "passed": unitary,
            "per_n": [
                {"n": v.n, "passed": v.passed, "e_value": v.e_value, "s_residual": v.s_residual, "dense_agree": v.agree}
                for v in verdicts
            ],
        },
        "translation_invariant": ti.passed,
        "blocking": q,
    }
    passed = unitary
    if cfg.oracle:
        passed = passed and all(v.agree in (None, True) for v in verdicts)
    if isinstance(dec, SemiSimpleDecomposition):
        body["semisimple"] = {
            "passed": True,
            "dims": dec.dims,
            "multiplicities": dec.multiplicities,
            "lambdas": [c.lambdas for c in dec.classes],
            "block_injective": dec.block_injective,
            "zero_block_size": dec.zero_block_size,
        }
        if dec.block_injective and unitary:
            fam = local_es_decomposition(bu.bulk)
            st = verify_semisimple_structure(dec, fam.E, fam.S, bu.B)
            body["structure"] = {"passed": st.passed, "q": st.q, "b_identity": st.b_identity, "residuals": st.residuals}
            passed = passed and st.passed
    else:
        body["semisimple"] = {"passed": False, "reason": dec.reason, "radical_dim": len(dec.radical)}
    return (EXIT_OK if passed else EXIT_FAIL), _report(cfg, passed, body)


def cmd_lme(cfg: CliConfig, stdin, stdout) -> tuple[int, dict]:
    doc, src = _read(cfg.inputs[0] if cfg.inputs else "-", stdin)
    kind = doc_kind(doc)
    if kind == "matrix":
        u = matrix_from_doc(doc, src)
        dims = cfg.options.get("site_dims")
        if dims is None:
            n = int(round(np.log2(u.shape[0])))
            if 2**n != u.shape[0]:
                raise UsageError("--site-dims is required for non-qubit matrices")
            dims = [2] * n
    elif kind in ("chain", "automaton"):
        chain = chain_from_doc(doc, src) if kind == "chain" else automaton_mpo(automaton_from_doc(doc, src))
        u = materialize(chain)
        dims = cfg.options.get("site_dims") or list(chain.in_dims)
    else:
        raise ParseError(f"{src}: expected a matrix or chain document")
    comp = lme_compress(u, dims, cfg.rank_tol)
    rep = verify_lme(comp, max(cfg.tol, 1e-9))
    body = {"site_dims": dims, "compressed_dims": comp.dims, "lme": rep.passed, "lme_residual": rep.residual}
    if all(d == 2 for d in dims):
        det = detect_phase_form(u, tol=max(cfg.tol, 1e-8), rank_tol=cfg.rank_tol)
        body["phase_form"] = {"verdict": det.verdict, "residual": det.residual}
        if det.table is not None:
            body["phase_form"]["table"] = phase_table_to_doc(det.table)["entries"]
    return (EXIT_OK if rep.passed else EXIT_FAIL), _report(cfg, rep.passed, body)


def cmd_schmidt(cfg: CliConfig, stdin, stdout) -> tuple[int, dict]:
    doc, src = _read(cfg.inputs[0] if cfg.inputs else "-", stdin)
    kind = doc_kind(doc)
    if kind == "matrix":
        u = matrix_from_doc(doc, src)
        dims = cfg.options.get("site_dims")
        if dims is None:
            n = int(round(np.log2(u.shape[0])))
            if 2**n != u.shape[0]:
                raise UsageError("--site-dims is required for non-qubit matrices")
            dims = [2] * n
        out_dims = in_dims = dims
    elif kind in ("chain", "automaton"):
        chain = chain_from_doc(doc, src) if kind == "chain" else automaton_mpo(automaton_from_doc(doc, src))
        u = materialize(chain)
        out_dims, in_dims = chain.out_dims, chain.in_dims
    else:
        raise ParseError(f"{src}: expected a matrix or chain document")
    if int(np.prod(out_dims)) != u.shape[0] or int(np.prod(in_dims)) != u.shape[1]:
        raise UsageError(f"site dimensions do not match an operator of shape {u.shape}")
    n = len(in_dims)
    cut = cfg.options.get("cut")
    if cut is None:
        cut = n // 2
    if not 1 <= cut < n:
        raise UsageError(f"--cut must lie in 1..{n - 1}")
    # sites[:cut] are the least significant factors
    lo_out, lo_in = int(np.prod(out_dims[:cut])), int(np.prod(in_dims[:cut]))
    hi_out, hi_in = u.shape[0] // lo_out, u.shape[1] // lo_in
    r = u.reshape(hi_out, lo_out, hi_in, lo_in).transpose(0, 2, 1, 3).reshape(hi_out * hi_in, lo_out * lo_in)
    vals = np.linalg.svd(r, compute_uv=False)
    rank = int(np.sum(vals > cfg.rank_tol * max(vals[0], 1e-300)))
    body = {"cut": cut, "dims": [[hi_out, hi_in], [lo_out, lo_in]], "values": vals, "rank": rank}
    return EXIT_OK, _report(cfg, True, body)


def cmd_gallery(cfg: CliConfig, stdin, stdout) -> tuple[int, dict]:
    name = cfg.options["name"]
    n = cfg.options.get("n") or 3
    rng = np.random.default_rng(cfg.seed)
    if name == "mcz":
        return EXIT_OK, chain_to_doc(multi_control_z(n))
    if name == "staircase":
        if cfg.options.get("gates"):
            doc, src = _read(cfg.options["gates"], stdin)
            gates, lower = gates_from_doc(doc, src)
        else:
            gates = [haar_unitary(4, rng) for _ in range(n)]
            lower = None
        return EXIT_OK, chain_to_doc(staircase(gates, lower))
    if name == "automaton":
        if cfg.options.get("spec"):
            doc, src = _read(cfg.options["spec"], stdin)
            spec = automaton_from_doc(doc, src)
        else:
            spec = random_automaton(n, rng)
        return EXIT_OK, chain_to_doc(automaton_mpo(spec))
    if name == "cx":
        return EXIT_OK, uniform_to_doc(control_x_staircase(), [2, max(n, 2)])
    if name == "subspace":
        return EXIT_OK, uniform_to_doc(subspace_product_unitary(haar_unitary(2, rng)), [2, max(n, 2)])
    if name == "rg":
        u = rg_subspace_unitary([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], haar_unitary(2, rng))
        return EXIT_OK, uniform_to_doc(u, [2, max(n, 2)])
    if name == "prop3":
        tu = cfg.options.get("theta_u", np.pi / 8)
        tv = cfg.options.get("theta_v", np.pi / 16)
        g = prop3_schmidt_gap(tu, tv)
        body = {
            "theta_u": tu,
            "theta_v": tv,
            "spectrum": g.target,
            "closed_form": g.closed_form,
            "closed_form_error": g.closed_form_error,
            "gap": g.gap,
        }
        passed = g.closed_form_error <= 1e-9 and g.gap > 1e-8
        return (EXIT_OK if passed else EXIT_FAIL), _report(cfg, passed, body)
    raise UsageError(f"unknown gallery entry {name!r}")


def cmd_oracle(cfg: CliConfig, stdin, stdout) -> tuple[int, dict]:
    oc = OracleConfig(tol=cfg.tol, seed=cfg.seed)
    if cfg.options.get("corpus"):
        rows, bad = [], 0
        for e in gallery_corpus(cfg.seed, n_max=min(cfg.max_oracle_n, 8)):
            r = cross_validate(e.chain, config=oc)
            ok = r.agree and r.dense_passed == e.unitary
            bad += not ok
            rows.append({"family": e.family, "n": e.n, "expected": e.unitary, "verdicts": r.verdicts, "dense": r.dense_passed, "agree": r.agree})
        body = {"entries": len(rows), "failures": bad, "results": rows}
        return (EXIT_OK if bad == 0 else EXIT_FAIL), _report(cfg, bad == 0, body)
    chain = _load_chain(cfg, stdin)
    if chain.n > cfg.max_oracle_n:
        raise ResourceCapError(f"N = {chain.n} exceeds --max-oracle-n {cfg.max_oracle_n}")
    r = cross_validate(chain, config=oc)
    if "dense" in r.skipped:
        raise ResourceCapError("dense operator exceeds the oracle cap")
    body = {
        "verdicts": r.verdicts,
        "dense_passed": r.dense_passed,
        "dense_residual": r.dense_residual,
        "agree": r.agree,
        "disagreements": r.disagreements,
        "skipped": r.skipped,
    }
    passed = r.passed and r.dense_passed
    return (EXIT_OK if passed else EXIT_FAIL), _report(cfg, passed, body)


COMMANDS = {
    "check": cmd_check,
    "canon": cmd_canon,
    "uniform": cmd_uniform,
    "lme": cmd_lme,
    "schmidt": cmd_schmidt,
    "gallery": cmd_gallery,
    "oracle": cmd_oracle,
}


def _site_dims(text: str) -> list[int]:
    try:
        dims = [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers") from None
    if not dims or any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError("site dimensions must be positive")
    return dims


def _n_range(text: str) -> list[int]:
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected N_MIN:N_MAX") from None
    if not 1 <= lo <= hi:
        raise argparse.ArgumentTypeError("need 1 <= N_MIN <= N_MAX")
    return list(range(lo, hi + 1))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL)
    common.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    common.add_argument("--max-oracle-n", type=int, default=DEFAULT_MAX_ORACLE_N)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--format", choices=("text", "structured"), default="text")
    common.add_argument("--oracle", choices=("on", "off"), default="off")
    common.add_argument("-o", "--output", default=None, help="write to this file instead of stdout")

    p = argparse.ArgumentParser(prog="mpukit", description="Matrix-product unitary toolkit")
    p.add_argument("--version", action="version", version=f"mpukit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    for name, hlp in (
        ("check", "recursive unitarity, canonical form and channel conditions"),
        ("canon", "rewrite a chain in canonical form"),
        ("oracle", "cross-validate bond-space and dense verdicts"),
    ):
        sp = sub.add_parser(name, parents=[common], help=hlp)
        sp.add_argument("input", nargs="?", default="-")
        if name == "oracle":
            sp.add_argument("--corpus", action="store_true", help="sweep the built-in corpus")

    sp = sub.add_parser("uniform", parents=[common], help="uniform MPU analysis")
    sp.add_argument("input", nargs="?", default="-")
    sp.add_argument("--n-range", type=_n_range, default=None)

    for name, hlp in (("lme", "local compression and phase-form detection"), ("schmidt", "operator Schmidt values across a cut")):
        sp = sub.add_parser(name, parents=[common], help=hlp)
        sp.add_argument("input", nargs="?", default="-")
        sp.add_argument("--site-dims", type=_site_dims, default=None)
        if name == "schmidt":
            sp.add_argument("--cut", type=int, default=None, help="number of least significant sites on the right of the cut")

    sp = sub.add_parser("gallery", parents=[common], help="emit a named example")
    sp.add_argument("name", choices=("mcz", "staircase", "automaton", "cx", "subspace", "rg", "prop3"))
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--gates", default=None)
    sp.add_argument("--spec", default=None)
    sp.add_argument("--theta-u", type=float, default=None)
    sp.add_argument("--theta-v", type=float, default=None)
    return p


def _config_from_args(a: argparse.Namespace) -> CliConfig:
    opts = {}
    for key in ("corpus", "n_range", "site_dims", "cut", "name", "n", "gates", "spec", "theta_u", "theta_v"):
        if hasattr(a, key) and getattr(a, key) is not None:
            opts[key] = getattr(a, key)
    inputs = [a.input] if getattr(a, "input", None) is not None else []
    cfg = CliConfig(a.command, inputs, a.tol, a.rank_tol, a.max_oracle_n, a.seed, a.format, a.oracle == "on", opts)
    cfg.validate()
    return cfg


def _render_text(doc: dict) -> str:
    if doc.get("kind") in ("chain", "uniform"):
        return dumps(doc)
    lines = []

    def walk(prefix, v):
        if isinstance(v, dict):
            for k, x in v.items():
                walk(f"{prefix}{k}." if prefix or k else k, x)
        else:
            lines.append(f"{prefix.rstrip('.')}: {json.dumps(v)}")

    for k, v in doc.items():
        walk(f"{k}.", v)
    return "\n".join(lines)


def run(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = _config_from_args(args)
        code, doc = COMMANDS[cfg.command](cfg, stdin, stdout)
    except (ParseError, UsageError) as exc:
        print(f"mpukit: error: {exc}", file=stderr)
        return EXIT_USAGE
    except ResourceCapError as exc:
        print(f"mpukit: resource cap: {exc}", file=stderr)
        return EXIT_CAP
    except MpuError as exc:
        print(f"mpukit: error: {exc}", file=stderr)
        return EXIT_USAGE
    text = dumps(doc) if (cfg.format == "structured" or doc.get("kind") in ("chain", "uniform")) else _render_text(doc)
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        stdout.write(text + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
