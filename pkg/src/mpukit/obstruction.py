"""Operator Schmidt spectra of a three-qubit staircase that no single
nearest-neighbour gate can reproduce."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .tensor import operator_schmidt, realign

_I = np.eye(2, dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_Z = np.diag([1.0, -1.0]).astype(np.complex128)
XX, YY, ZZ = np.kron(_X, _X), np.kron(_Y, _Y), np.kron(_Z, _Z)
CNOT = np.kron(np.diag([1.0, 0.0]), _I) + np.kron(np.diag([0.0, 1.0]), _X)

GRID_POINTS = 48
REFINE_ITERS = 200
REFINE_STARTS = 8


def canonical_gate(c1, c2, c3) -> np.ndarray:
    """``exp(i (c1 XX + c2 YY + c3 ZZ))``; accepts broadcastable arrays of angles."""
    c1, c2, c3 = np.broadcast_arrays(*(np.asarray(c, dtype=np.float64) for c in (c1, c2, c3)))
    eye = np.eye(4)
    out = None
    for c, p in ((c1, XX), (c2, YY), (c3, ZZ)):
        f = np.cos(c)[..., None, None] * eye + 1j * np.sin(c)[..., None, None] * p
        out = f if out is None else out @ f
    return out


def swap_like_gate(theta: float) -> np.ndarray:
    return canonical_gate(np.pi / 4, np.pi / 4, theta)


def left_circuit(theta_u: float, theta_v: float) -> np.ndarray:
    """``(1 (x) U) (CNOT (x) 1) (1 (x) V)`` on qubits 1, 2, 3 (qubit 1 most significant)."""
    u, v = swap_like_gate(theta_u), swap_like_gate(theta_v)
    return np.kron(_I, u) @ np.kron(CNOT, _I) @ np.kron(_I, v)


def closed_form_spectrum(theta_u: float, theta_v: float) -> np.ndarray:
    tp, tm = theta_u + theta_v, theta_u - theta_v
    vals = 2 * np.abs([np.cos(tp), np.sin(tp), np.cos(tm), np.sin(tm)])
    return np.sort(vals)[::-1]


def _normalize(s: np.ndarray) -> np.ndarray:
    s = np.sort(np.abs(s), axis=-1)[..., ::-1]
    return s / np.linalg.norm(s, axis=-1, keepdims=True)


def gate_spectra(c1, c2, c3) -> np.ndarray:
    """Operator Schmidt values of canonical gates, batched over the angle arrays."""
    g = canonical_gate(c1, c2, c3)
    shape = g.shape[:-2]
    r = g.reshape(-1, 2, 2, 2, 2).transpose(0, 1, 3, 2, 4).reshape(-1, 4, 4)
    s = np.linalg.svd(r, compute_uv=False)
    return s.reshape(shape + (4,))


def spectrum_distance(target: np.ndarray, c) -> float:
    s = gate_spectra(c[0], c[1], c[2])
    return float(np.linalg.norm(_normalize(s) - _normalize(target)))


@dataclass
class GapResult:
    target: np.ndarray
    closed_form: np.ndarray
    closed_form_error: float
    grid_min: float
    gap: float
    best_angles: np.ndarray


def prop3_schmidt_gap(
    theta_u: float,
    theta_v: float,
    grid_points: int = GRID_POINTS,
    refine_iters: int = REFINE_ITERS,
    refine_starts: int = REFINE_STARTS,
) -> GapResult:
    """Distance from the left-circuit spectrum to the closest single-gate spectrum.

    Angles are scanned on a uniform grid over ``[0, pi/2]^3`` and the best
    ``refine_starts`` grid points are polished with Nelder-Mead.
    """
    w = left_circuit(theta_u, theta_v)
    target = operator_schmidt(w, (4, 2)).values
    cf = closed_form_spectrum(theta_u, theta_v)
    err = float(np.max(np.abs(np.sort(target)[::-1] - cf)))
    tn = _normalize(target)
    axis = np.linspace(0.0, np.pi / 2, grid_points)
    c1, c2, c3 = np.meshgrid(axis, axis, axis, indexing="ij")
    s = gate_spectra(c1, c2, c3)
    dist = np.linalg.norm(_normalize(s) - tn, axis=-1).reshape(-1)
    order = np.argsort(dist)[:refine_starts]
    grid_min = float(dist[order[0]])
    best, best_x = grid_min, np.array([c1.reshape(-1)[order[0]], c2.reshape(-1)[order[0]], c3.reshape(-1)[order[0]]])
    for k in order:
        x0 = np.array([c1.reshape(-1)[k], c2.reshape(-1)[k], c3.reshape(-1)[k]])
        res = minimize(
            lambda c: spectrum_distance(target, c),
            x0,
            method="Nelder-Mead",
            options={"maxiter": refine_iters, "xatol": 1e-12, "fatol": 1e-14},
        )
        if res.fun < best:
            best, best_x = float(res.fun), res.x
    return GapResult(target, cf, err, grid_min, best, best_x)


__all__ = [
    "canonical_gate",
    "left_circuit",
    "closed_form_spectrum",
    "gate_spectra",
    "prop3_schmidt_gap",
    "realign",
]
