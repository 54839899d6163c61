"""Projective 2-designs on a single qudit.

A family of ``K`` rank-1 projectors ``Pi_a`` is a projective 2-design when
its frame potential ``sum_ab |Tr[Pi_a Pi_b]|^2`` attains the Haar value
``2 K^2 / (d (d + 1))``.  Such a family reproduces the ensemble average of
a Haar-random projective measurement,

    (d / K) sum_a Pi_a rho Pi_a = (rho + I ⊗ Tr_j[rho]) / (d + 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._tolerances import get_tolerances
from .exceptions import DesignError, DimensionMismatchError
from .linalg import DensityMatrix, _ptrace, embed_local, operator_norm


def frame_potential(projectors: np.ndarray) -> float:
    gram = np.einsum("aij,bji->ab", projectors, projectors)
    return float(np.sum(np.abs(gram) ** 2))


def _validate(projectors: np.ndarray) -> None:
    tol = get_tolerances()
    if projectors.ndim != 3 or projectors.shape[1] != projectors.shape[2] or len(projectors) == 0:
        raise DesignError(f"expected a non-empty stack of square matrices, got shape {projectors.shape}")
    k, d, _ = projectors.shape
    for a, p in enumerate(projectors):
        if operator_norm(p - p.conj().T) > tol.design:
            raise DesignError(f"projector invariant failed: element {a} is not Hermitian")
        if operator_norm(p @ p - p) > tol.design:
            raise DesignError(f"projector invariant failed: element {a} is not idempotent")
        if abs(np.trace(p) - 1) > tol.design:
            raise DesignError(f"projector invariant failed: element {a} does not have unit trace")
    if operator_norm(projectors.sum(0) / k - np.eye(d) / d) > tol.design:
        raise DesignError("1-design invariant failed: average projector differs from I/d")
    target = 2 * k * k / (d * (d + 1))
    fp = frame_potential(projectors)
    if abs(fp - target) > tol.frame_potential:
        raise DesignError(f"2-design invariant failed: frame potential {fp:.12g} != {target:.12g}")


@dataclass(frozen=True)
class ProjectiveDesign:
    """Validated rank-1 projector family.  ``labels`` name the elements."""

    projectors: np.ndarray = field(repr=False)
    labels: tuple[str, ...] = ()
    name: str = "custom"

    def __post_init__(self):
        projectors = np.array(self.projectors, dtype=complex)
        _validate(projectors)
        projectors.setflags(write=False)
        object.__setattr__(self, "projectors", projectors)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(a) for a in range(len(projectors))))

    @property
    def d(self) -> int:
        return self.projectors.shape[1]

    @property
    def cardinality(self) -> int:
        return self.projectors.shape[0]

    def frame_potential(self) -> float:
        return frame_potential(self.projectors)


def _projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def qubit_six_state() -> ProjectiveDesign:
    """Eigenprojectors ``(I ± sigma_mu) / 2`` of the three Pauli matrices."""
    s = 1 / np.sqrt(2)
    vecs = {
        "z+": [1, 0],
        "z-": [0, 1],
        "x+": [s, s],
        "x-": [s, -s],
        "y+": [s, 1j * s],
        "y-": [s, -1j * s],
    }
    return ProjectiveDesign(np.array([_projector(v) for v in vecs.values()]), tuple(vecs), "six-state")


def mub_vectors(d: int) -> np.ndarray:
    """``(d + 1, d, d)`` array: ``[b, k]`` is the k-th vector of basis ``b``."""
    omega = np.exp(2j * np.pi / d)
    n = np.arange(d)
    bases = [np.eye(d, dtype=complex)]
    for b in range(d):
        bases.append(np.array([omega ** ((b * n * n + k * n) % d) / np.sqrt(d) for k in range(d)]))
    return np.array(bases)


def _is_prime(d: int) -> bool:
    from sympy import isprime

    return bool(isprime(int(d)))


def mub_design(d: int) -> ProjectiveDesign:
    """Complete set of ``d + 1`` mutually unbiased bases for prime ``d``.

    For ``d = 2`` the three Pauli eigenbases are returned (the six-state design).
    """
    if not _is_prime(d):
        raise DesignError(
            f"no built-in design for d={d}: MUB construction is only available for prime dimension; "
            "supply a custom design"
        )
    if d == 2:
        return qubit_six_state()
    vecs = mub_vectors(d)
    projs = np.array([_projector(v) for basis in vecs for v in basis])
    labels = tuple(f"b{b}k{k}" for b in range(d + 1) for k in range(d))
    return ProjectiveDesign(projs, labels, f"mub-{d}")


def custom_design(projectors, labels=()) -> ProjectiveDesign:
    """Validate a user-supplied projector family; raises naming the failed invariant."""
    return ProjectiveDesign(np.asarray(projectors, dtype=complex), tuple(labels), "custom")


def design_for(d: int) -> ProjectiveDesign:
    """Shipped design for dimension ``d`` (six-state for qubits, MUBs for odd primes)."""
    return qubit_six_state() if d == 2 else mub_design(d)


def verify_two_design_channel(design: ProjectiveDesign, rho, party: int = 0) -> float:
    """Operator-norm residual of the measure-and-average identity at ``party``."""
    if isinstance(rho, DensityMatrix):
        mat, dims = rho.mat, rho.dims
    else:
        mat = np.asarray(rho, dtype=complex)
        dims = (mat.shape[0],)
    if dims[party] != design.d:
        raise DimensionMismatchError(f"design of dimension {design.d} cannot act on party {party} of dimension {dims[party]}")
    d, k = design.d, design.cardinality
    lhs = np.zeros_like(mat)
    for p in design.projectors:
        big = embed_local(p, party, dims)
        lhs += big @ mat @ big
    lhs *= d / k
    others = [j for j in range(len(dims)) if j != party]
    if others:
        reduced = _ptrace(mat, dims, others)
        left = int(np.prod(dims[:party]))
        right = int(np.prod(dims[party + 1:]))
        # I_party ⊗ Tr_party[rho], reassembled in party order
        t = np.multiply.outer(np.eye(d), reduced.reshape(left, right, left, right))
        rest = t.transpose(2, 0, 3, 4, 1, 5).reshape(mat.shape)
    else:
        rest = np.eye(d) * np.trace(mat)
    rhs = (mat + rest) / (d + 1)
    return operator_norm(lhs - rhs)
