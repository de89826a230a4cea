"""Two-qubit states: density matrices, Bloch tensors, named families, PPT test.

Conventions fixed once for the whole package: Pauli basis order is
(identity, x, y, z) and a single-qubit operator with coordinates x_i is
X = (1/2) * sum_i x_i sigma_i, so that x_i = Tr(X sigma_i).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = -1e-10

SIGMA = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

# 16 two-qubit basis operators sigma_i (x) sigma_j, indexed [i, j].
SIGMA2 = np.einsum("iab,jcd->ijacbd", SIGMA, SIGMA).reshape(4, 4, 4, 4)


class StateValidationError(ValueError):
    """A density matrix or family parameter violates its invariants."""


@dataclass(frozen=True)
class DensityMatrix:
    """4x4 Hermitian unit-trace matrix; positivity optional via `improper`."""

    entries: np.ndarray
    improper: bool = False

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (4, 4):
            raise StateValidationError(f"expected a 4x4 matrix, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise StateValidationError("matrix is not Hermitian (tolerance 1e-12)")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
            raise StateValidationError("matrix does not have unit trace (tolerance 1e-12)")
        if not self.improper:
            lo = np.linalg.eigvalsh(m)[0]
            if lo < POSITIVITY_TOL:
                raise StateValidationError(
                    f"least eigenvalue {lo:.3e} below tolerance {POSITIVITY_TOL}; "
                    "pass improper=True to admit it deliberately"
                )
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def matrix(self) -> np.ndarray:
        return self.entries


@dataclass(frozen=True)
class BlochTensor:
    """Bloch data (a, b, T) of a two-qubit state.

    The full 4x4 tensor is [[1, b^T], [a, T]] with entries
    Theta_ij = Tr[rho (sigma_i x sigma_j)].
    """

    a: np.ndarray
    b: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(3).copy()
        b = np.asarray(self.b, dtype=float).reshape(3).copy()
        T = np.asarray(self.T, dtype=float).reshape(3, 3).copy()
        for arr in (a, b, T):
            arr.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "T", T)

    def full(self) -> np.ndarray:
        theta = np.empty((4, 4))
        theta[0, 0] = 1.0
        theta[0, 1:] = self.b
        theta[1:, 0] = self.a
        theta[1:, 1:] = self.T
        return theta

    @classmethod
    def from_full(cls, theta: np.ndarray) -> "BlochTensor":
        theta = np.asarray(theta, dtype=float)
        return cls(a=theta[1:, 0], b=theta[0, 1:], T=theta[1:, 1:])


def bloch_tensor(rho: DensityMatrix) -> BlochTensor:
    """Pauli expansion coefficients Theta_ij = Tr[rho (sigma_i x sigma_j)]."""
    theta = np.real(np.einsum("ab,ijba->ij", rho.matrix, SIGMA2))
    return BlochTensor.from_full(theta)


def density_from_bloch(theta: BlochTensor, improper: bool | None = None) -> DensityMatrix:
    """Inverse Pauli expansion. Positivity is not enforced here.

    With improper=None the matrix is admitted as improper automatically when
    it has a negative eigenvalue below tolerance.
    """
    full = theta.full()
    m = 0.25 * np.einsum("ij,ijab->ab", full, SIGMA2)
    if improper is None:
        improper = bool(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] < POSITIVITY_TOL)
    return DensityMatrix(m, improper=improper)


def reduced_states(rho: DensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Partial traces (rho_A, rho_B) as plain 2x2 arrays."""
    m = rho.matrix.reshape(2, 2, 2, 2)
    rho_a = np.einsum("ajbj->ab", m)
    rho_b = np.einsum("iaib->ab", m)
    return rho_a, rho_b


def partial_transpose(rho: DensityMatrix) -> np.ndarray:
    m = rho.matrix.reshape(2, 2, 2, 2)
    return np.einsum("iajb->ibja", m).reshape(4, 4)


def ppt_min_eigenvalue(rho: DensityMatrix) -> float:
    """Least eigenvalue of the partial transpose on B; negative iff entangled."""
    return float(np.linalg.eigvalsh(partial_transpose(rho))[0])


def _ket(amplitudes) -> np.ndarray:
    v = np.asarray(amplitudes, dtype=complex)
    return v / np.linalg.norm(v)


def singlet() -> DensityMatrix:
    psi = _ket([0, 1, -1, 0])
    return DensityMatrix(np.outer(psi, psi.conj()))


def maximally_mixed() -> DensityMatrix:
    return DensityMatrix(np.eye(4) / 4)


def werner(w: float) -> DensityMatrix:
    """Bloch data a = b = 0, T = diag(-w, -w, -w)."""
    if not 0.0 <= w <= 1.0:
        raise StateValidationError(f"werner parameter w={w} outside [0, 1]")
    return density_from_bloch(
        BlochTensor(a=np.zeros(3), b=np.zeros(3), T=-w * np.eye(3)), improper=False
    )


def theta_state(theta: float, alpha: float) -> DensityMatrix:
    """alpha |theta><theta| + (1-alpha) rho_A (x) I/2 with
    |theta> = cos(theta/2)|00> + sin(theta/2)|11>."""
    if not 0.0 <= theta <= np.pi / 4:
        raise StateValidationError(f"theta={theta} outside [0, pi/4]")
    if not 0.0 <= alpha <= 1.0:
        raise StateValidationError(f"alpha={alpha} outside [0, 1]")
    psi = np.zeros(4, dtype=complex)
    psi[0] = np.cos(theta / 2)
    psi[3] = np.sin(theta / 2)
    pure = np.outer(psi, psi.conj())
    rho_a = np.array([[np.cos(theta / 2) ** 2, 0], [0, np.sin(theta / 2) ** 2]])
    noise = np.kron(rho_a, np.eye(2) / 2)
    return DensityMatrix(alpha * pure + (1 - alpha) * noise)


def noise_mix(rho: DensityMatrix, alpha: float) -> DensityMatrix:
    """alpha rho + (1-alpha) (I_A/2) (x) rho_B: the exact-scaling noise line.

    Preserves Bob's marginal; Alice's Bloch vector scales by alpha.
    """
    if not 0.0 <= alpha <= 1.0:
        raise StateValidationError(f"alpha={alpha} outside [0, 1]")
    _, rho_b = reduced_states(rho)
    mixed = alpha * rho.matrix + (1 - alpha) * np.kron(np.eye(2) / 2, rho_b)
    return DensityMatrix(mixed, improper=rho.improper)


def random_state(seed: int, rank: int = 4) -> DensityMatrix:
    """Ginibre-ensemble random state: G G^dag / Tr, G complex 4 x rank.

    PCG64 seeded by a 64-bit integer, so draws are portable across platforms.
    """
    if not 1 <= rank <= 4:
        raise StateValidationError(f"rank={rank} outside 1..4")
    rng = np.random.Generator(np.random.PCG64(seed))
    g = rng.standard_normal((4, rank)) + 1j * rng.standard_normal((4, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_pure_entangled(seed: int, min_schmidt: float = 0.05) -> DensityMatrix:
    """Random pure state, redrawn until the lesser Schmidt weight exceeds a floor."""
    rng = np.random.Generator(np.random.PCG64(seed))
    while True:
        psi = _ket(rng.standard_normal(4) + 1j * rng.standard_normal(4))
        rho = DensityMatrix(np.outer(psi, psi.conj()))
        rho_b = reduced_states(rho)[1]
        if np.linalg.eigvalsh(rho_b)[0] > min_schmidt:
            return rho


@dataclass(frozen=True)
class StateFamily:
    """Tagged description of the named state families."""

    tag: str
    params: dict = field(default_factory=dict)


def make_family(family: StateFamily) -> DensityMatrix:
    tag, p = family.tag, family.params
    if tag == "werner":
        return werner(p["w"])
    if tag == "tstate":
        s = np.array([p["s1"], p["s2"], p["s3"]], dtype=float)
        return density_from_bloch(BlochTensor(np.zeros(3), np.zeros(3), np.diag(s)))
    if tag == "theta":
        return theta_state(p["theta"], p["alpha"])
    if tag == "noise_mix":
        return noise_mix(make_family(p["base"]), p["alpha"])
    if tag == "random":
        return random_state(p["seed"], p.get("rank", 4))
    if tag == "singlet":
        return singlet()
    raise StateValidationError(f"unknown state family tag {tag!r}")


# ---------------------------------------------------------------------------
# State file format (JSON): exactly one of "density" / "bloch" / "family".

def state_to_json(rho: DensityMatrix) -> str:
    m = rho.matrix
    return json.dumps({"density": {"re": m.real.tolist(), "im": m.imag.tolist()}})


def state_from_json(text: str) -> DensityMatrix:
    doc = json.loads(text)
    keys = [k for k in ("density", "bloch", "family") if k in doc]
    if len(keys) != 1:
        raise StateValidationError(
            "state document must contain exactly one of 'density', 'bloch', 'family'"
        )
    key = keys[0]
    if key == "density":
        re = np.array(doc["density"]["re"], dtype=float)
        im = np.array(doc["density"].get("im", np.zeros_like(re)), dtype=float)
        m = re + 1j * im
        improper = bool(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] < POSITIVITY_TOL)
        return DensityMatrix(m, improper=improper)
    if key == "bloch":
        d = doc["bloch"]
        t = d["T"]
        T = np.eye(3) * float(t) if np.isscalar(t) else np.array(t, dtype=float)
        return density_from_bloch(BlochTensor(a=d["a"], b=d["b"], T=T))
    d = dict(doc["family"])
    tag = d.pop("tag")
    if tag == "noise_mix" and isinstance(d.get("base"), dict):
        base = dict(d["base"])
        d["base"] = StateFamily(tag=base.pop("tag"), params=base)
    return make_family(StateFamily(tag=tag, params=d))
