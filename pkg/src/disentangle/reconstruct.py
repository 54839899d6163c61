"""State reconstruction from local projective 2-designs.

Any state on ``H_0 ⊗ ... ⊗ H_{N-1}`` can be written as

    rho = sum_alpha P_alpha ⊗_j h_j(alpha_j),
    h_j(a) = (d_j + 1) Pi_j(a) - I,
    P_alpha = prod_j (d_j / K_j) * Tr[(⊗_j Pi_j(alpha_j)) rho] >= 0,

which holds for entangled inputs as well.  Weights are computed by
contracting one party at a time, so the cost is linear in ``prod_j K_j``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from ._tolerances import get_tolerances
from .designs import ProjectiveDesign
from .exceptions import DesignError, DimensionMismatchError, EnumerationGuardError
from .linalg import DensityMatrix, PartitionSpec, operator_norm

ENUMERATION_GUARD = 10**6


@dataclass(frozen=True)
class SignedLocalOperator:
    """``(d + 1) Pi_alpha - I``: unit trace, operator norm ``d``."""

    op: np.ndarray
    party: int
    alpha: int


def signed_ops(design: ProjectiveDesign, party: int = 0) -> list[SignedLocalOperator]:
    d = design.d
    return [
        SignedLocalOperator((d + 1) * p - np.eye(d), party, a)
        for a, p in enumerate(design.projectors)
    ]


def signed_stack(design: ProjectiveDesign) -> np.ndarray:
    d = design.d
    return (d + 1) * design.projectors - np.eye(d)


def _check_designs(dims: Sequence[int], designs: Sequence[ProjectiveDesign]) -> None:
    if len(designs) != len(dims):
        raise DimensionMismatchError(f"{len(designs)} designs for {len(dims)} parties")
    for j, (d, des) in enumerate(zip(dims, designs)):
        if des.d != d:
            raise DimensionMismatchError(f"design for party {j} has dimension {des.d}, party has {d}")


def n_terms(designs: Sequence[ProjectiveDesign]) -> int:
    return int(np.prod([des.cardinality for des in designs], dtype=object))


def _guard(designs, guard: int) -> None:
    n = n_terms(designs)
    if n > guard:
        raise EnumerationGuardError(
            f"{n} multi-indices exceed the enumeration guard {guard}; "
            "use iter_weights() to stream, or certify per party with certified_separability_time()"
        )


def _overlaps(mat: np.ndarray, dims: Sequence[int], projector_stacks: Sequence[np.ndarray]) -> np.ndarray:
    """``out[a_0, ..., a_{N-1}] = Tr[(⊗_j Pi_j(a_j)) mat]``."""
    n = len(dims)
    t = mat.reshape(tuple(dims) * 2)
    for j in range(n):
        remaining = n - j
        # current axes: kets j.., bras j.., then contracted indices 0..j-1
        t = np.moveaxis(t, (0, remaining), (-2, -1))
        t = np.einsum("...ab,kba->...k", t, projector_stacks[j], optimize=True)
    return t


def _check_weights(w: np.ndarray) -> np.ndarray:
    tol = get_tolerances()
    w_min = float(w.min())
    if w_min < -tol.weight_negativity:
        idx = np.unravel_index(int(np.argmin(w)), w.shape)
        raise DesignError(
            f"negative weight {w_min:.3e} at multi-index {tuple(int(i) for i in idx)} "
            f"(sum {w.sum():.15g}, {int(np.sum(w < -tol.weight_negativity))} negative entries); "
            "the design or the input state is broken"
        )
    return w


def weights(rho: DensityMatrix, designs: Sequence[ProjectiveDesign], *, guard: int = ENUMERATION_GUARD) -> np.ndarray:
    """Weight table ``P[alpha_0, ..., alpha_{N-1}]`` (non-negative, sums to one)."""
    _check_designs(rho.dims, designs)
    _guard(designs, guard)
    scale = np.prod([des.d / des.cardinality for des in designs])
    w = scale * _overlaps(rho.mat, rho.dims, [des.projectors for des in designs]).real
    return _check_weights(w)


def iter_weights(rho: DensityMatrix, designs: Sequence[ProjectiveDesign]) -> Iterator[tuple[tuple[int, ...], float]]:
    """Stream ``(alpha, P_alpha)`` pairs one leading index at a time."""
    _check_designs(rho.dims, designs)
    dims = rho.dims
    scale = np.prod([des.d / des.cardinality for des in designs])
    first = designs[0].projectors
    if len(dims) == 1:
        for a, p in enumerate(first):
            yield (a,), float(scale * np.trace(p @ rho.mat).real)
        return
    rest_dim = rho.dim // dims[0]
    t = rho.mat.reshape(dims[0], rest_dim, dims[0], rest_dim)
    for a0, p in enumerate(first):
        block = np.einsum("xayb,yx->ab", t, p)
        w = scale * _overlaps(block, dims[1:], [des.projectors for des in designs[1:]]).real
        _check_weights(w)
        for idx in np.ndindex(w.shape):
            yield (a0,) + idx, float(w[idx])


def expand(weights_table: np.ndarray, factor_stacks: Sequence[np.ndarray]) -> np.ndarray:
    """``sum_alpha W[alpha] ⊗_j F_j[alpha_j]`` as a dense matrix."""
    t = np.asarray(weights_table, dtype=complex)
    for f in factor_stacks:
        t = np.einsum("k...,kab->...ab", t, f, optimize=True)
    n = len(factor_stacks)
    order = [2 * j for j in range(n)] + [2 * j + 1 for j in range(n)]
    dim = int(np.prod([f.shape[1] for f in factor_stacks]))
    return t.transpose(order).reshape(dim, dim)


def reconstruct_state(rho: DensityMatrix, designs: Sequence[ProjectiveDesign], *, guard: int = ENUMERATION_GUARD) -> np.ndarray:
    """Resynthesize ``rho`` from its weights and signed local operators."""
    w = weights(rho, designs, guard=guard)
    return expand(w, [signed_stack(des) for des in designs])


def reconstruction_residual(rho: DensityMatrix, designs: Sequence[ProjectiveDesign], **kw) -> float:
    return operator_norm(reconstruct_state(rho, designs, **kw) - rho.mat)


@dataclass(frozen=True)
class SeparableDecomposition:
    """``sum_alpha P_alpha ⊗_j rho_j(alpha_j)`` with explicit local factors."""

    weights: np.ndarray
    local_factors: tuple[np.ndarray, ...]
    spec: PartitionSpec
    t: int | None = None

    @property
    def n_terms(self) -> int:
        return int(self.weights.size)

    def resynthesize(self) -> np.ndarray:
        return expand(self.weights, self.local_factors)

    def min_factor_eigenvalue(self) -> float:
        return float(min(np.linalg.eigvalsh(f).min() for f in self.local_factors))

    def check(self, target=None, atol: float = 1e-8) -> "SeparableDecomposition":
        """Raise ``ValueError`` if any decomposition invariant fails."""
        tol = get_tolerances()
        if self.weights.min() < -tol.weight_negativity:
            raise ValueError(f"negative weight {self.weights.min():.3e}")
        if abs(self.weights.sum() - 1) > tol.weight_sum:
            raise ValueError(f"weights sum to {self.weights.sum():.15g}")
        for j, f in enumerate(self.local_factors):
            for a, m in enumerate(f):
                try:
                    DensityMatrix(m)
                except ValueError as exc:
                    raise ValueError(f"factor ({j}, {a}) is not a density matrix: {exc}") from None
        if target is not None:
            target = target.mat if isinstance(target, DensityMatrix) else np.asarray(target)
            res = operator_norm(self.resynthesize() - target)
            if res > atol:
                raise ValueError(f"resynthesis residual {res:.3e} exceeds {atol:.1e}")
        return self

    def iter_terms(self) -> Iterator[tuple[tuple[int, ...], float, tuple[np.ndarray, ...]]]:
        for idx in np.ndindex(self.weights.shape):
            yield idx, float(self.weights[idx]), tuple(f[a] for f, a in zip(self.local_factors, idx))


class StreamingDecomposition:
    """Lazy decomposition for inputs whose multi-index set exceeds the guard."""

    def __init__(self, rho: DensityMatrix, designs, local_factors, t=None):
        self._rho = rho
        self._designs = tuple(designs)
        self.local_factors = tuple(local_factors)
        self.spec = rho.spec
        self.t = t

    @property
    def n_terms(self) -> int:
        return n_terms(self._designs)

    def iter_terms(self):
        for idx, w in iter_weights(self._rho, self._designs):
            yield idx, w, tuple(f[a] for f, a in zip(self.local_factors, idx))


def weights_to_csv(table: np.ndarray, fh=None) -> str:
    """CSV with columns ``alpha_1..alpha_N, weight``; returns the text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"alpha_{j + 1}" for j in range(table.ndim)] + ["weight"])
    for idx in np.ndindex(table.shape):
        writer.writerow(list(idx) + [repr(float(table[idx]))])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text
