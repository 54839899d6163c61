"""Dense complex linear algebra on small multipartite Hilbert spaces.

Conventions
-----------
* Parties are indexed from 0.  The tensor product is row-major with
  party 0 as the slowest index, i.e. ``kron(A0, A1, ...)``.
* Plain ``numpy.ndarray`` objects (``complex128``) serve as the general
  complex matrix type.  :class:`DensityMatrix` attaches a
  :class:`PartitionSpec` and enforces the state invariants.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, NamedTuple, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ._random import make_rng
from ._tolerances import get_tolerances
from .exceptions import DimensionMismatchError, InvalidStateError

MAX_TOTAL_DIM = 4096


@dataclass(frozen=True)
class PartitionSpec:
    """Local dimensions ``(d_0, ..., d_{N-1})`` of an N-party system."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 1:
            raise ValueError("a partition needs at least one party")
        if any(d < 2 for d in dims):
            raise ValueError(f"every local dimension must be >= 2, got {dims}")
        total = int(np.prod(dims))
        if total > MAX_TOTAL_DIM:
            raise ValueError(f"global dimension {total} exceeds the supported maximum {MAX_TOTAL_DIM}")
        object.__setattr__(self, "dims", dims)

    @property
    def n_parties(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def max_dim(self) -> int:
        return max(self.dims)

    def flat_index(self, multi_index: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(multi_index), self.dims))

    def multi_index(self, flat: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(flat, self.dims))

    def sub(self, parties: Iterable[int]) -> "PartitionSpec":
        return PartitionSpec(tuple(self.dims[j] for j in sorted(parties)))

    def check_party(self, j: int) -> int:
        if not 0 <= j < self.n_parties:
            raise IndexError(f"party index {j} out of range for {self.n_parties} parties")
        return j


def as_spec(dims) -> PartitionSpec:
    if isinstance(dims, PartitionSpec):
        return dims
    if isinstance(dims, (int, np.integer)):
        return PartitionSpec((int(dims),))
    return PartitionSpec(tuple(dims))


def _herm_defect(m: np.ndarray) -> float:
    diff = m - m.conj().T
    fro = np.linalg.norm(diff)
    if fro == 0.0 or m.shape[0] > 256:
        # Frobenius norm bounds the operator norm from above.
        return float(fro)
    return float(np.linalg.norm(diff, 2))


class DensityMatrix:
    """Hermitian, unit-trace, positive semi-definite operator.

    Parameters
    ----------
    mat : array_like
        Square complex matrix of size ``spec.total_dim``.
    dims : PartitionSpec, int or sequence of int, optional
        Party layout; defaults to a single party of the full dimension.
    validate : bool
        Check the invariants (costs one Hermitian eigensolve).
    """

    __slots__ = ("_mat", "_spec")

    def __init__(self, mat, dims=None, *, validate: bool = True):
        mat = np.array(mat, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidStateError(f"density matrix must be square, got shape {mat.shape}")
        spec = as_spec(mat.shape[0] if dims is None else dims)
        if spec.total_dim != mat.shape[0]:
            raise DimensionMismatchError(f"matrix of size {mat.shape[0]} does not match dims {spec.dims}")
        mat.setflags(write=False)
        self._mat = mat
        self._spec = spec
        if validate:
            self.check()

    @property
    def mat(self) -> np.ndarray:
        return self._mat

    @property
    def spec(self) -> PartitionSpec:
        return self._spec

    @property
    def dims(self) -> tuple[int, ...]:
        return self._spec.dims

    @property
    def dim(self) -> int:
        return self._spec.total_dim

    def check(self) -> "DensityMatrix":
        tol = get_tolerances()
        defect = _herm_defect(self._mat)
        if defect > tol.hermitian:
            raise InvalidStateError(f"not Hermitian (defect {defect:.3e})")
        tr = np.trace(self._mat)
        if abs(tr - 1) > tol.trace:
            raise InvalidStateError(f"trace {tr.real:.15g} differs from 1")
        w_min = np.linalg.eigvalsh(self._mat)[0]
        if w_min < -tol.psd:
            raise InvalidStateError(f"not positive semi-definite (min eigenvalue {w_min:.3e})")
        return self

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self._mat)

    def purity(self) -> float:
        return float(np.real(np.vdot(self._mat, self._mat)))

    def with_dims(self, dims) -> "DensityMatrix":
        return DensityMatrix(self._mat, dims, validate=False)

    def __array__(self, dtype=None, copy=None):
        return self._mat if dtype is None else self._mat.astype(dtype)

    def __repr__(self):
        return f"DensityMatrix(dims={self.dims})"


def density(mat, dims=None) -> DensityMatrix:
    """Build a state from a matrix that is only approximately Hermitian/normalized."""
    mat = np.asarray(mat, dtype=complex)
    mat = 0.5 * (mat + mat.conj().T)
    return DensityMatrix(mat / np.trace(mat).real, dims, validate=False)


def pure_state(psi, dims=None) -> DensityMatrix:
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    return DensityMatrix(np.outer(psi, psi.conj()), dims, validate=False)


def maximally_mixed(dims) -> DensityMatrix:
    spec = as_spec(dims)
    return DensityMatrix(np.eye(spec.total_dim) / spec.total_dim, spec, validate=False)


def _as_array(m) -> np.ndarray:
    if isinstance(m, DensityMatrix):
        return m.mat
    return np.asarray(m, dtype=complex)


def kron(*ops) -> np.ndarray:
    """Kronecker product, party 0 slowest."""
    return reduce(np.kron, [_as_array(o) for o in ops])


def _ptrace(mat: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    n = len(dims)
    keep = sorted(set(keep))
    trace_out = [j for j in range(n) if j not in keep]
    t = mat.reshape(tuple(dims) * 2)
    # trace the highest index first so remaining axis positions stay valid
    for k, j in enumerate(sorted(trace_out, reverse=True)):
        remaining = n - k
        t = np.trace(t, axis1=j, axis2=j + remaining)
    d_keep = int(np.prod([dims[j] for j in keep]))
    return t.reshape(d_keep, d_keep)


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on the parties in ``keep``."""
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("cannot trace out everything")
    for j in keep:
        rho.spec.check_party(j)
    red = _ptrace(rho.mat, rho.dims, keep)
    return DensityMatrix(red, rho.spec.sub(keep), validate=False)


def partial_transpose(rho, parties: Iterable[int], dims=None) -> np.ndarray:
    """Transpose the tensor indices of ``parties`` only."""
    mat = _as_array(rho)
    dims = rho.dims if isinstance(rho, DensityMatrix) else as_spec(dims).dims
    n = len(dims)
    perm = list(range(2 * n))
    for j in set(parties):
        if not 0 <= j < n:
            raise IndexError(f"party index {j} out of range for {n} parties")
        perm[j], perm[n + j] = n + j, j
    t = mat.reshape(tuple(dims) * 2).transpose(perm)
    return t.reshape(mat.shape)


def hermitian_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors of a Hermitian matrix."""
    m = _as_array(m)
    defect = _herm_defect(m)
    if defect > get_tolerances().hermitian_input:
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e})")
    return sla.eigh(0.5 * (m + m.conj().T))


class GeneralEig(NamedTuple):
    eigenvalues: np.ndarray
    right: np.ndarray | None
    left: np.ndarray | None
    diagonalizable: bool


def block_triangular_eigvals(m: np.ndarray) -> np.ndarray:
    """Eigenvalues via a permutation to block upper-triangular form.

    The strongly connected components of the sparsity graph give the
    diagonal blocks; the permutation is an exact similarity, so 1x1 blocks
    contribute their diagonal entry without rounding.  Larger blocks fall
    back to a complex Schur form.
    """
    m = np.asarray(m, dtype=complex)
    scale = np.abs(m).max() if m.size else 0.0
    pattern = np.abs(m) > get_tolerances().structural_zero * scale
    n_comp, labels = connected_components(sp.csr_matrix(pattern), directed=True, connection="strong")
    out = []
    for c in range(n_comp):
        idx = np.flatnonzero(labels == c)
        block = m[np.ix_(idx, idx)] * pattern[np.ix_(idx, idx)]
        if len(idx) == 1:
            out.append(block[0, 0])
        else:
            t, _ = sla.schur(block, output="complex")
            out.extend(np.diag(t))
    return np.asarray(out, dtype=complex)


def _sort_desc_modulus(w: np.ndarray) -> np.ndarray:
    # ties broken by argument so the order is reproducible
    return np.lexsort((-np.angle(np.round(w, 12)), -np.round(np.abs(w), 12)))


def _has_parallel_cluster(w: np.ndarray, vr: np.ndarray, eps: float) -> bool:
    """True if some near-degenerate eigenvalue cluster has nearly parallel eigenvectors.

    An exact 2x2 Jordan block comes back from LAPACK as two eigenvalues split
    by ~sqrt(machine eps) with an eigenvector condition number around 1e7,
    which a pure condition-number test can miss.
    """
    scale = max(1.0, float(np.abs(w).max()))
    seen = np.zeros(len(w), dtype=bool)
    for k in range(len(w)):
        if seen[k]:
            continue
        members = np.flatnonzero(np.abs(w - w[k]) <= eps * scale)
        seen[members] = True
        if len(members) > 1:
            cols = vr[:, members] / np.linalg.norm(vr[:, members], axis=0)
            if np.linalg.svd(cols, compute_uv=False)[-1] < eps:
                return True
    return False


def general_eig(m) -> GeneralEig:
    """Eigen-decomposition of a possibly non-normal square matrix.

    Eigenvalues come back sorted by descending modulus.  When the matrix of
    right eigenvectors has condition number at most the configured limit
    (1e8 by default), and no cluster of nearly equal eigenvalues has nearly
    parallel eigenvectors, the result is flagged diagonalizable and ``left`` holds
    the dual basis, ``left[:, j].conj() @ right[:, k] == delta_jk``.
    Otherwise only the eigenvalues are returned, computed through an exact
    block-triangular permutation rather than from the unstable eigenvectors.
    """
    m = _as_array(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"general_eig needs a square matrix, got {m.shape}")
    w, vr = sla.eig(m)
    order = _sort_desc_modulus(w)
    w, vr = w[order], vr[:, order]
    tol = get_tolerances()
    cond = np.linalg.cond(vr)
    if np.isfinite(cond) and cond <= tol.eigvec_condition and not _has_parallel_cluster(w, vr, tol.defective_cluster):
        left = np.linalg.inv(vr).conj().T
        return GeneralEig(w, vr, left, True)
    w = block_triangular_eigvals(m)
    return GeneralEig(w[_sort_desc_modulus(w)], None, None, False)


def operator_norm(m) -> float:
    """Largest singular value."""
    m = _as_array(m)
    if m.shape[0] == m.shape[1] and not np.any(m - m.conj().T):
        return float(np.abs(np.linalg.eigvalsh(m)).max())
    return float(np.linalg.norm(m, 2))


def trace_norm(m) -> float:
    """Sum of singular values."""
    return float(np.linalg.svd(_as_array(m), compute_uv=False).sum())


def embed_local(op, j: int, spec) -> np.ndarray:
    """``I ⊗ ... ⊗ op ⊗ ... ⊗ I`` with ``op`` acting on party ``j``."""
    spec = as_spec(spec)
    spec.check_party(j)
    op = _as_array(op)
    if op.shape != (spec.dims[j], spec.dims[j]):
        raise DimensionMismatchError(f"operator of shape {op.shape} cannot act on party {j} of dimension {spec.dims[j]}")
    left = int(np.prod(spec.dims[:j]))
    right = int(np.prod(spec.dims[j + 1:]))
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def random_pure_state(d, seed) -> DensityMatrix:
    """Haar-random pure state (normalized complex Gaussian vector)."""
    spec = as_spec(d)
    rng = make_rng(seed)
    psi = rng.standard_normal(spec.total_dim) + 1j * rng.standard_normal(spec.total_dim)
    return pure_state(psi, spec)


def random_density(d, rank: int | None = None, seed=None) -> DensityMatrix:
    """Mixed state ``G G† / Tr`` with ``G`` a ``dim x rank`` complex Gaussian."""
    spec = as_spec(d)
    dim = spec.total_dim
    rank = dim if rank is None else int(rank)
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must lie in [1, {dim}], got {rank}")
    rng = make_rng(seed)
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    return density(g @ g.conj().T, spec)


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + np.swapaxes(m, -1, -2).conj())


def min_eigenvalues(ops: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of each Hermitian matrix in a ``(..., d, d)`` stack."""
    return np.linalg.eigvalsh(hermitize(ops))[..., 0]


def operator_norms(ops: np.ndarray) -> np.ndarray:
    """Operator norms of a stack of Hermitian matrices."""
    return np.abs(np.linalg.eigvalsh(hermitize(ops))).max(axis=-1)
