"""CLI pipelines shared by the golden-file tests and ``scripts/regen_golden.py``."""

from __future__ import annotations

import io
import json
import math
from pathlib import Path

from mpukit.cli import run
from mpukit.gallery import multi_control_z
from mpukit.io import chain_to_doc, dumps
from mpukit.oracle import corrupt

GOLDEN_DIR = Path(__file__).parent / "golden"
S = ["--format", "structured"]


def corrupted_mcz() -> str:
    return dumps(chain_to_doc(corrupt(multi_control_z(4))))


# each case is a pipeline; a step is an argv list or a callable producing stdin text
CASES = {
    "check_mcz": [["gallery", "mcz", "--n", "3"], ["check", *S]],
    "check_mcz_oracle": [["gallery", "mcz", "--n", "4"], ["check", "--oracle", "on", *S]],
    "check_mcz_canonical": [["gallery", "mcz", "--n", "5"], ["canon"], ["check", *S]],
    "check_corrupted_mcz": [corrupted_mcz, ["check", *S]],
    "check_staircase": [["gallery", "staircase", "--n", "3", "--seed", "11"], ["canon"], ["check", *S]],
    "check_automaton": [["gallery", "automaton", "--n", "4", "--seed", "5"], ["check", *S]],
    "uniform_control_x": [["gallery", "cx", "--n", "5"], ["uniform", *S]],
    "uniform_subspace": [["gallery", "subspace", "--n", "5", "--seed", "3"], ["uniform", "--oracle", "on", *S]],
    "uniform_rg": [["gallery", "rg", "--n", "4", "--seed", "4"], ["uniform", *S]],
    "lme_mcz": [["gallery", "mcz", "--n", "3"], ["lme", *S]],
    "lme_staircase": [["gallery", "staircase", "--n", "2", "--seed", "2"], ["lme", *S]],
    "schmidt_mcz": [["gallery", "mcz", "--n", "4"], ["schmidt", "--cut", "2", *S]],
    "oracle_staircase": [["gallery", "staircase", "--n", "3", "--seed", "8"], ["oracle", *S]],
    "oracle_corrupted": [corrupted_mcz, ["oracle", *S]],
    "gallery_prop3": [["gallery", "prop3", *S]],
}


def run_pipeline(steps) -> tuple[int, str, str]:
    """Run the steps, piping stdout to the next stdin; intermediate steps must exit 0."""
    text = ""
    code, err = 0, ""
    for k, step in enumerate(steps):
        if callable(step):
            text = step()
            continue
        out, errs = io.StringIO(), io.StringIO()
        code = run(list(step), stdin=io.StringIO(text), stdout=out, stderr=errs)
        err = errs.getvalue()
        if k < len(steps) - 1 and code != 0:
            raise RuntimeError(f"step {step} exited {code}: {err}")
        text = out.getvalue()
    return code, text, err


def render_case(name: str) -> dict:
    code, text, _ = run_pipeline(CASES[name])
    return {"exit": code, "report": json.loads(text)}


def compare(got, want, path: str = "", rtol: float = 1e-7, atol: float = 1e-9) -> list[str]:
    """Structural equality with numeric tolerance; returns the list of mismatches."""
    if isinstance(want, dict):
        if not isinstance(got, dict) or set(got) != set(want):
            return [f"{path}: keys {sorted(got) if isinstance(got, dict) else got!r} != {sorted(want)}"]
        out = []
        for k in want:
            out += compare(got[k], want[k], f"{path}.{k}", rtol, atol)
        return out
    if isinstance(want, list):
        if not isinstance(got, list) or len(got) != len(want):
            return [f"{path}: length mismatch"]
        out = []
        for i, (g, w) in enumerate(zip(got, want)):
            out += compare(g, w, f"{path}[{i}]", rtol, atol)
        return out
    if isinstance(want, bool) or want is None or isinstance(want, str):
        return [] if got == want else [f"{path}: {got!r} != {want!r}"]
    if isinstance(want, (int, float)) and isinstance(got, (int, float)) and not isinstance(got, bool):
        return [] if math.isclose(got, want, rel_tol=rtol, abs_tol=atol) else [f"{path}: {got} != {want}"]
    return [f"{path}: {got!r} != {want!r}"]
