"""Normal/abnormal/degenerate classification and reduction to canonical form.

A normal state is brought to Bloch data ``[[1, 0], [a, diag(s)]]`` by the
local filter V = rho_B^{-1/2} on Bob followed by an SVD of the filtered
correlation matrix. The critical radius is invariant under both steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qstate import (
    BlochTensor,
    DensityMatrix,
    bloch_tensor,
    reduced_states,
)

PURITY_TOL = 1e-10
DEGENERACY_TOL = 1e-10
EIG_FLOOR = 1e-12

SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=float
)


class AbnormalStateError(ValueError):
    """Canonicalization was asked for an abnormal state; use abnormal_radius."""


@dataclass(frozen=True)
class NormalityClass:
    tag: str  # "Normal", "Abnormal", "Degenerate"
    purity_gap: float  # 1 - max eigenvalue of rho_B
    min_singular: float | None  # min singular value of the filtered T (Normal track)

    @property
    def is_normal(self) -> bool:
        return self.tag == "Normal"


@dataclass(frozen=True)
class CanonicalTransform:
    """Record sufficient to replay the reduction on the input state."""

    v_filter: np.ndarray  # Bob filter rho_B^{-1/2}
    norm: float  # trace of the filtered, unnormalized state
    left: np.ndarray  # orthogonal L from T1 = L diag(s) R
    right: np.ndarray  # orthogonal R


@dataclass(frozen=True)
class CanonicalState:
    a: np.ndarray  # Alice Bloch vector after reduction
    s: np.ndarray  # singular values of the reduced T, descending, >= 0
    transform: CanonicalTransform

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(3).copy()
        s = np.asarray(self.s, dtype=float).reshape(3).copy()
        a.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "s", s)

    @property
    def min_singular(self) -> float:
        return float(self.s[-1])


def _filtered_bloch(rho: DensityMatrix) -> tuple[np.ndarray, np.ndarray, CanonicalTransform]:
    """Apply the Bob-side filter rho_B^{-1/2} and return (a1, T1, transform stub)."""
    _, rho_b = reduced_states(rho)
    evals, evecs = np.linalg.eigh(rho_b)
    evals = np.maximum(evals, EIG_FLOOR)
    v = evecs @ np.diag(evals ** -0.5) @ evecs.conj().T
    big_v = np.kron(np.eye(2), v)
    m = big_v @ rho.matrix @ big_v.conj().T
    norm = float(np.trace(m).real)
    rho1 = DensityMatrix(m / norm, improper=True)
    th1 = bloch_tensor(rho1)
    stub = CanonicalTransform(v_filter=v, norm=norm, left=np.eye(3), right=np.eye(3))
    return th1.a, th1.T, stub


def classify(rho: DensityMatrix) -> NormalityClass:
    """Normal / Abnormal / Degenerate with diagnostics.

    Abnormal means Bob's marginal is pure; Degenerate means the canonical
    correlation matrix loses rank (such states are separable).
    """
    _, rho_b = reduced_states(rho)
    gap = float(1.0 - np.linalg.eigvalsh(rho_b)[-1])
    if gap < PURITY_TOL:
        return NormalityClass(tag="Abnormal", purity_gap=gap, min_singular=None)
    _, t1, _ = _filtered_bloch(rho)
    smin = float(np.linalg.svd(t1, compute_uv=False)[-1])
    tag = "Degenerate" if smin < DEGENERACY_TOL else "Normal"
    return NormalityClass(tag=tag, purity_gap=gap, min_singular=smin)


def canonicalize(rho: DensityMatrix) -> CanonicalState:
    """Reduce a normal state to (a, diag(s)) with s descending and nonnegative.

    Sign freedom in the SVD is absorbed into the orthogonal factors, which is
    legitimate because the critical radius is invariant under local time
    reversals (improper rotations of the Bloch tensor).
    """
    cls = classify(rho)
    if cls.tag == "Abnormal":
        raise AbnormalStateError(
            "state is abnormal (Bob's marginal is pure); use abnormal_radius"
        )
    a1, t1, stub = _filtered_bloch(rho)
    left, s, right = np.linalg.svd(t1)
    a = left.T @ a1
    transform = CanonicalTransform(
        v_filter=stub.v_filter, norm=stub.norm, left=left, right=right
    )
    return CanonicalState(a=a, s=s, transform=transform)


def replay_transform(rho: DensityMatrix, tr: CanonicalTransform) -> BlochTensor:
    """Apply a recorded reduction to a state; on the original input this
    reproduces the canonical Bloch tensor."""
    big_v = np.kron(np.eye(2), tr.v_filter)
    m = big_v @ rho.matrix @ big_v.conj().T
    th = bloch_tensor(DensityMatrix(m / np.trace(m).real, improper=True))
    a = tr.left.T @ th.a
    b = tr.right @ th.b
    t = tr.left.T @ th.T @ tr.right.T
    return BlochTensor(a=a, b=b, T=t)


def abnormal_radius(rho: DensityMatrix) -> float:
    """Exact critical radius for abnormal states.

    1/||a|| for products (T = a b^T; +inf when a = 0), 0 otherwise.
    """
    cls = classify(rho)
    if cls.tag != "Abnormal":
        raise ValueError("abnormal_radius requires an abnormal state")
    th = bloch_tensor(rho)
    if np.max(np.abs(th.T - np.outer(th.a, th.b))) > 1e-9:
        return 0.0
    na = float(np.linalg.norm(th.a))
    return math.inf if na < 1e-14 else 1.0 / na


def swap_parties(rho: DensityMatrix) -> DensityMatrix:
    """Exchange Alice and Bob: Bloch data (a, b, T) -> (b, a, T^T)."""
    return DensityMatrix(SWAP @ rho.matrix @ SWAP, improper=rho.improper)


def filtered_bloch(rho: DensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Alice's Bloch vector and the correlation matrix after Bob's filter."""
    a1, t1, _ = _filtered_bloch(rho)
    return a1, t1
