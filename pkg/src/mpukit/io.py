"""JSON documents for chains, uniform MPUs, automata, gate lists, phase tables and matrices.

Complex numbers are ``[re, im]`` pairs. Every document is an object with a
``kind`` field; chain documents may omit it.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .automaton import AutomatonSpec
from .errors import MpuError
from .lme import PhaseTable
from .mpo import General, MpoChain, Open, Periodic, SiteTensor
from .uniform import UniformMpu


class ParseError(MpuError, ValueError):
    """Malformed input; the message names the offending line or field."""


def encode_complex(a) -> Any:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [encode_complex(x) for x in a]


def decode_complex(obj, path: str, ndim: int | None = None) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: expected nested [re, im] pairs ({exc})") from None
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise ParseError(f"{path}: innermost entries must be [re, im] pairs")
    out = arr[..., 0] + 1j * arr[..., 1]
    if ndim is not None and out.ndim != ndim:
        raise ParseError(f"{path}: expected {ndim} complex axes, got {out.ndim}")
    if not np.all(np.isfinite(out)):
        raise ParseError(f"{path}: non-finite entry")
    return out


def loads(text: str, source: str = "<input>") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, (dict, list)):
        raise ParseError(f"{source}: top level must be an object")
    return doc


def _field(doc: dict, name: str, path: str):
    if not isinstance(doc, dict) or name not in doc:
        raise ParseError(f"{path}: missing field {name!r}")
    return doc[name]


def site_to_doc(s: SiteTensor) -> dict:
    return {
        "d_out": s.d_out,
        "d_in": s.d_in,
        "D_left": s.D_left,
        "D_right": s.D_right,
        "data": encode_complex(s.data),
    }


def site_from_doc(doc: dict, path: str) -> SiteTensor:
    data = decode_complex(_field(doc, "data", path), f"{path}.data", 4)
    for k, name in enumerate(("d_out", "d_in", "D_left", "D_right")):
        if name in doc and int(doc[name]) != data.shape[k]:
            raise ParseError(f"{path}.{name}: declared {doc[name]} but data has {data.shape[k]}")
    return SiteTensor(data)


def boundary_to_doc(bd) -> dict:
    if isinstance(bd, Open):
        return {"type": "open", "left": encode_complex(bd.left), "right": encode_complex(bd.right)}
    if isinstance(bd, Periodic):
        return {"type": "periodic"}
    return {"type": "general", "matrix": encode_complex(bd.b)}


def boundary_from_doc(doc: dict, path: str):
    kind = _field(doc, "type", path)
    if kind == "open":
        return Open(
            decode_complex(_field(doc, "left", path), f"{path}.left", 1),
            decode_complex(_field(doc, "right", path), f"{path}.right", 1),
        )
    if kind == "periodic":
        return Periodic()
    if kind == "general":
        return General(decode_complex(_field(doc, "matrix", path), f"{path}.matrix", 2))
    raise ParseError(f"{path}.type: unknown boundary type {kind!r}")


def chain_to_doc(chain: MpoChain) -> dict:
    return {
        "kind": "chain",
        "sites": [site_to_doc(s) for s in chain.sites],
        "boundary": boundary_to_doc(chain.boundary),
    }


def chain_from_doc(doc: dict, path: str = "chain") -> MpoChain:
    sites = _field(doc, "sites", path)
    if not isinstance(sites, list) or not sites:
        raise ParseError(f"{path}.sites: expected a non-empty list")
    parsed = [site_from_doc(s, f"{path}.sites[{k}]") for k, s in enumerate(sites)]
    bd = boundary_from_doc(doc["boundary"], f"{path}.boundary") if "boundary" in doc else Open(np.ones(1), np.ones(1))
    try:
        return MpoChain(tuple(parsed), bd)
    except MpuError as exc:
        raise ParseError(f"{path}: {exc}") from None


def uniform_to_doc(u: UniformMpu, n_range=None) -> dict:
    doc = {"kind": "uniform", "tensor": site_to_doc(u.bulk), "boundary": {"type": "general", "matrix": encode_complex(u.b)}}
    if n_range is not None:
        doc["n_range"] = [int(min(n_range)), int(max(n_range))]
    return doc


def uniform_from_doc(doc: dict, path: str = "uniform") -> tuple[UniformMpu, list[int] | None]:
    site = site_from_doc(_field(doc, "tensor", path), f"{path}.tensor")
    bd = boundary_from_doc(_field(doc, "boundary", path), f"{path}.boundary")
    if isinstance(bd, Open):
        b = np.outer(bd.right, bd.left)
    elif isinstance(bd, Periodic):
        b = np.eye(site.D_left)
    else:
        b = bd.b
    try:
        u = UniformMpu(site, b)
    except MpuError as exc:
        raise ParseError(f"{path}: {exc}") from None
    nr = doc.get("n_range")
    if nr is not None:
        if not (isinstance(nr, list) and len(nr) == 2 and all(isinstance(x, int) for x in nr) and 1 <= nr[0] <= nr[1]):
            raise ParseError(f"{path}.n_range: expected [n_min, n_max] with 1 <= n_min <= n_max")
        nr = list(range(nr[0], nr[1] + 1))
    return u, nr


def automaton_to_doc(spec: AutomatonSpec) -> dict:
    return {
        "kind": "automaton",
        "transitions": [t.tolist() for t in spec.transitions],
        "phases": [p.tolist() for p in spec.phases],
    }


def automaton_from_doc(doc: dict, path: str = "automaton") -> AutomatonSpec:
    tr = _field(doc, "transitions", path)
    ph = _field(doc, "phases", path)
    try:
        return AutomatonSpec(tuple(np.asarray(t) for t in tr), tuple(np.asarray(p) for p in ph))
    except (MpuError, ValueError, TypeError) as exc:
        raise ParseError(f"{path}: {exc}") from None


def gates_from_doc(doc: dict, path: str = "gates") -> tuple[list[np.ndarray], list[np.ndarray] | None]:
    g = _field(doc, "gates", path)
    if not isinstance(g, list) or not g:
        raise ParseError(f"{path}.gates: expected a non-empty list of matrices")
    gates = [decode_complex(x, f"{path}.gates[{k}]", 2) for k, x in enumerate(g)]
    lower = doc.get("lower")
    if lower is not None:
        lower = [decode_complex(x, f"{path}.lower[{k}]", 2) for k, x in enumerate(lower)]
    return gates, lower


def gates_to_doc(gates, lower=None) -> dict:
    doc = {"kind": "gates", "gates": [encode_complex(g) for g in gates]}
    if lower is not None:
        doc["lower"] = [encode_complex(g) for g in lower]
    return doc


def phase_table_to_doc(t: PhaseTable) -> dict:
    return {"kind": "phase_table", "d": t.d, "entries": [[lab, th] for lab, th in t.pairs()]}


def phase_table_from_doc(doc: dict, path: str = "phase_table") -> PhaseTable:
    entries = _field(doc, "entries", path)
    try:
        return PhaseTable.from_pairs([(str(a), float(b)) for a, b in entries], int(doc.get("d", 2)))
    except (MpuError, ValueError, TypeError) as exc:
        raise ParseError(f"{path}.entries: {exc}") from None


def matrix_from_doc(doc, path: str = "matrix") -> np.ndarray:
    """A raw matrix is a list of rows of ``[re, im]`` pairs, bare or under ``matrix``."""
    if isinstance(doc, dict):
        doc = _field(doc, "matrix", path)
        path = f"{path}.matrix"
    return decode_complex(doc, path, 2)


def matrix_to_doc(m) -> dict:
    return {"kind": "matrix", "matrix": encode_complex(m)}


def doc_kind(doc) -> str:
    if isinstance(doc, list):
        return "matrix"
    if "kind" in doc:
        return str(doc["kind"])
    if "sites" in doc:
        return "chain"
    if "tensor" in doc:
        return "uniform"
    raise ParseError("document: cannot determine kind (no 'kind', 'sites' or 'tensor' field)")


def dumps(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=False)
