"""Quantum channels: construction, iteration and spectral analysis.

Operators are vectorized column-wise, ``vec(|i><j|) = |j> ⊗ |i>``, so a
channel with Kraus operators ``K_k`` has superoperator
``S = sum_k conj(K_k) ⊗ K_k`` and ``vec(E(X)) = S @ vec(X)``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np
import scipy.linalg as sla

from ._random import make_rng
from ._tolerances import get_tolerances
from .exceptions import (
    DimensionMismatchError,
    NoDampingGapError,
    NonUniqueFixedPointError,
    NotDiagonalizableError,
    RankDeficientSteadyStateError,
)
from .linalg import (
    DensityMatrix,
    PartitionSpec,
    as_spec,
    general_eig,
    hermitize,
    operator_norm,
    operator_norms,
    random_pure_state,
)


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    x = np.asarray(x)
    return np.swapaxes(x, -1, -2).reshape(x.shape[:-2] + (-1,))


def unvec(v: np.ndarray, d: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if d is None:
        d = math.isqrt(v.shape[-1])
    return np.swapaxes(v.reshape(v.shape[:-1] + (d, d)), -1, -2)


def pauli_basis(d: int) -> np.ndarray:
    """``d**2`` generalized Pauli (Weyl) operators ``X^a Z^b``, identity first.

    For qubits the Hermitian Paulis ``I, X, Y, Z`` are returned instead,
    whose entries are exact in floating point.
    """
    if d == 2:
        return np.array([[[1, 0], [0, 1]], [[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)
    omega = np.exp(2j * np.pi / d)
    shift = np.roll(np.eye(d), 1, axis=0)
    clock = np.diag(omega ** np.arange(d))
    ops = []
    for a in range(d):
        for b in range(d):
            ops.append(np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b))
    return np.array(ops, dtype=complex)


class KrausChannel:
    """Completely positive trace-preserving map ``X -> sum_k K_k X K_k†``."""

    __slots__ = ("_kraus", "_dim")

    def __init__(self, kraus_ops, *, validate: bool = True):
        kraus = np.array(kraus_ops, dtype=complex)
        if kraus.ndim == 2:
            kraus = kraus[None]
        if kraus.ndim != 3 or kraus.shape[1] != kraus.shape[2]:
            raise DimensionMismatchError(f"expected a stack of square Kraus operators, got shape {kraus.shape}")
        kraus.setflags(write=False)
        self._kraus = kraus
        self._dim = kraus.shape[1]
        if validate:
            defect = self.completeness_defect()
            if defect > get_tolerances().kraus_completeness:
                raise ValueError(f"Kraus operators are not trace preserving (defect {defect:.3e})")

    @property
    def kraus_ops(self) -> np.ndarray:
        return self._kraus

    @property
    def dim(self) -> int:
        return self._dim

    def __len__(self):
        return len(self._kraus)

    def completeness_defect(self) -> float:
        s = np.einsum("kba,kbc->ac", self._kraus.conj(), self._kraus)
        return operator_norm(s - np.eye(self._dim))

    def apply_operator(self, x: np.ndarray) -> np.ndarray:
        """Act on a matrix or a ``(..., d, d)`` stack of matrices."""
        x = np.asarray(x)
        if x.shape[-2:] != (self._dim, self._dim):
            raise DimensionMismatchError(f"channel of dimension {self._dim} cannot act on shape {x.shape}")
        return np.einsum("kab,...bc,kdc->...ad", self._kraus, x, self._kraus.conj(), optimize=True)

    def __call__(self, rho: DensityMatrix) -> DensityMatrix:
        return apply(self, rho)

    def superoperator(self) -> "Superoperator":
        return Superoperator(np.einsum("kab,kcd->kacbd", self._kraus.conj(), self._kraus).sum(0).reshape(self._dim**2, self._dim**2), self._dim)

    def __repr__(self):
        return f"KrausChannel(dim={self._dim}, n_kraus={len(self._kraus)})"


@dataclass(frozen=True)
class Superoperator:
    """``d² x d²`` matrix acting on column-vectorized operators."""

    mat: np.ndarray
    dim: int

    def apply(self, x: np.ndarray) -> np.ndarray:
        return unvec(self.mat @ vec(np.asarray(x, dtype=complex)), self.dim)

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.mat @ other.mat, self.dim)

    def power(self, t: int) -> "Superoperator":
        return Superoperator(np.linalg.matrix_power(self.mat, int(t)), self.dim)

    def choi(self) -> np.ndarray:
        """Choi matrix ``sum_ij |i><j| ⊗ E(|i><j|)`` (input factor first)."""
        d = self.dim
        # mat[(b, a), (j, i)] = <a|E(|i><j|)|b>
        t = self.mat.reshape(d, d, d, d)  # indices b, a, j, i
        return t.transpose(3, 1, 2, 0).reshape(d * d, d * d)

    def to_kraus(self) -> KrausChannel:
        d = self.dim
        w, v = np.linalg.eigh(hermitize(self.choi()))
        keep = w > 1e-14 * max(w.max(), 1.0)
        # Choi eigenvector v[(i, a)] -> Kraus K[a, i]
        ops = [np.sqrt(wk) * vk.reshape(d, d).T for wk, vk in zip(w[keep], v[:, keep].T)]
        return KrausChannel(ops)


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel(np.eye(d)[None])


def unitary_channel(u) -> KrausChannel:
    return KrausChannel(np.asarray(u, dtype=complex)[None])


def amplitude_damping(gamma: float) -> KrausChannel:
    """Qubit decay towards ``|0><0|``; its fixed point is pure."""
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]])
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]])
    return KrausChannel([k0, k1])


def replacer_channel(sigma) -> KrausChannel:
    """``X -> sigma Tr[X]``: every input is replaced by ``sigma``."""
    sigma = np.asarray(sigma, dtype=complex)
    d = sigma.shape[0]
    w, v = np.linalg.eigh(hermitize(sigma))
    ops = [np.sqrt(max(wk, 0.0)) * np.outer(v[:, k], np.eye(d)[i]) for k, wk in enumerate(w) for i in range(d) if wk > 0]
    return KrausChannel(ops)


def depolarizing(d: int, p: float) -> KrausChannel:
    """``rho -> p rho + (1 - p) Tr[rho] I / d`` realized with Weyl Kraus operators."""
    if d < 2:
        raise ValueError("dimension must be >= 2")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing parameter must lie in [0, 1], got {p}")
    basis = pauli_basis(d)
    weights = np.full(d * d, (1.0 - p) / d**2)
    weights[0] += p
    ops = [np.sqrt(w) * b for w, b in zip(weights, basis) if w > 0]
    return KrausChannel(ops)


def random_channel(d: int, num_kraus: int, seed) -> KrausChannel:
    """Channel from a Haar-random isometry ``C^d -> C^(d*num_kraus)``."""
    if num_kraus < 1:
        raise ValueError("num_kraus must be >= 1")
    rng = make_rng(seed)
    g = rng.standard_normal((d * num_kraus, d)) + 1j * rng.standard_normal((d * num_kraus, d))
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return KrausChannel(q.reshape(num_kraus, d, d))


def compose(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    """``a ∘ b`` (``b`` acts first)."""
    if a.dim != b.dim:
        raise DimensionMismatchError("cannot compose channels of different dimension")
    ops = np.einsum("iab,jbc->ijac", a.kraus_ops, b.kraus_ops).reshape(-1, a.dim, a.dim)
    return KrausChannel(ops, validate=False)


def power(ch: KrausChannel, t: int) -> KrausChannel:
    """``t``-fold composition.

    Kraus products are kept while their number stays at most ``d**4``;
    beyond that the superoperator is raised to the power by repeated
    squaring and converted back through its Choi matrix.
    """
    t = int(t)
    if t < 0:
        raise ValueError("power must be non-negative")
    if t == 0:
        return identity_channel(ch.dim)
    if len(ch) ** t <= ch.dim**4:
        out = ch
        for _ in range(t - 1):
            out = compose(ch, out)
        return out
    return ch.superoperator().power(t).to_kraus()


def _apply_local_array(mat: np.ndarray, dims: Sequence[int], j: int, kraus: np.ndarray) -> np.ndarray:
    left = int(np.prod(dims[:j]))
    dj = dims[j]
    right = int(np.prod(dims[j + 1:]))
    t = mat.reshape(left, dj, right, left, dj, right)
    out = np.einsum("kab,xbycdz,ked->xaycez", kraus, t, kraus.conj(), optimize=True)
    return out.reshape(mat.shape)


def apply(ch: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    """``sum_k K_k rho K_k†`` on a state of matching global dimension."""
    if ch.dim != rho.dim:
        raise DimensionMismatchError(f"channel dimension {ch.dim} does not match state dimension {rho.dim}")
    return DensityMatrix(hermitize(ch.apply_operator(rho.mat)), rho.spec, validate=False)


def apply_local(ch: KrausChannel, rho: DensityMatrix, j: int) -> DensityMatrix:
    """Apply ``ch`` to party ``j`` only."""
    rho.spec.check_party(j)
    if ch.dim != rho.dims[j]:
        raise DimensionMismatchError(f"channel dimension {ch.dim} does not match party {j} of dimension {rho.dims[j]}")
    out = _apply_local_array(rho.mat, rho.dims, j, ch.kraus_ops)
    return DensityMatrix(hermitize(out), rho.spec, validate=False)


class LocalProductChannel:
    """``E_0 ⊗ E_1 ⊗ ... ⊗ E_{N-1}`` acting on a partitioned state."""

    def __init__(self, channels: Sequence[KrausChannel], spec=None):
        channels = tuple(channels)
        spec = as_spec([c.dim for c in channels] if spec is None else spec)
        if len(channels) != spec.n_parties:
            raise DimensionMismatchError(f"{len(channels)} channels for {spec.n_parties} parties")
        for j, (c, d) in enumerate(zip(channels, spec.dims)):
            if c.dim != d:
                raise DimensionMismatchError(f"channel {j} has dimension {c.dim}, party has {d}")
        self.channels = channels
        self.spec = spec

    def apply_operator(self, mat: np.ndarray, order: Iterable[int] | None = None) -> np.ndarray:
        out = np.asarray(mat, dtype=complex)
        for j in (range(self.spec.n_parties) if order is None else order):
            out = _apply_local_array(out, self.spec.dims, j, self.channels[j].kraus_ops)
        return out

    def __call__(self, rho: DensityMatrix) -> DensityMatrix:
        if rho.spec != self.spec:
            raise DimensionMismatchError(f"state dims {rho.dims} do not match channel dims {self.spec.dims}")
        return DensityMatrix(hermitize(self.apply_operator(rho.mat)), rho.spec, validate=False)

    def evolve(self, rho: DensityMatrix, t: int) -> DensityMatrix:
        for _ in range(int(t)):
            rho = self(rho)
        return rho

    def kraus(self) -> KrausChannel:
        """Global Kraus representation (small systems only)."""
        ops = [np.eye(1)]
        for c in self.channels:
            ops = [np.kron(a, k) for a in ops for k in c.kraus_ops]
        return KrausChannel(ops, validate=False)

    def superoperator(self) -> Superoperator:
        return self.kraus().superoperator()


def tensor_channels(channels: Sequence[KrausChannel], spec=None) -> LocalProductChannel:
    """Product of local channels, one per party."""
    return LocalProductChannel(channels, spec)


def _string_basis_matrix(dims: Sequence[int]) -> np.ndarray:
    """Columns ``vec(P_s)`` over all generalized Pauli strings."""
    locals_ = [pauli_basis(d) for d in dims]
    cols = []
    for ops in itertools.product(*locals_):
        m = ops[0]
        for o in ops[1:]:
            m = np.kron(m, o)
        cols.append(vec(m))
    return np.stack(cols, axis=1)


def in_pauli_basis(s: Superoperator, dims: Sequence[int]) -> np.ndarray:
    """Matrix of a superoperator in the (unnormalized) Pauli-string basis.

    The similarity transform is exact for qubits, where the basis has
    entries in ``{0, ±1, ±i}`` and ``B^{-1} = B† / D``.
    """
    b = _string_basis_matrix(dims)
    return (b.conj().T @ s.mat @ b) / int(np.prod(dims))


class RingChannel:
    """Cyclic shift ``j -> j+1 (mod N)`` followed by full depolarization of site 0."""

    def __init__(self, n: int, d: int):
        if n < 3:
            raise ValueError(f"the ring needs at least 3 sites, got {n}")
        self.n = int(n)
        self.d = int(d)
        self.spec = PartitionSpec((self.d,) * self.n)

    def apply_operator(self, mat: np.ndarray) -> np.ndarray:
        n, d = self.n, self.d
        t = np.asarray(mat, dtype=complex).reshape((d,) * (2 * n))
        # new site k holds the old content of site k-1
        perm = [(k - 1) % n for k in range(n)]
        t = t.transpose(perm + [n + p for p in perm])
        rest = np.trace(t, axis1=0, axis2=n)
        out = np.multiply.outer(np.eye(d) / d, rest)
        # axes now (k0, b0, k1..k_{n-1}, b1..b_{n-1}); restore ket/bra grouping
        order = [0] + list(range(2, n + 1)) + [1] + list(range(n + 1, 2 * n))
        return out.transpose(order).reshape(d**n, d**n)

    def __call__(self, rho: DensityMatrix) -> DensityMatrix:
        if rho.spec != self.spec:
            raise DimensionMismatchError(f"state dims {rho.dims} do not match ring dims {self.spec.dims}")
        return DensityMatrix(hermitize(self.apply_operator(rho.mat)), rho.spec, validate=False)

    def evolve(self, rho: DensityMatrix, t: int) -> DensityMatrix:
        for _ in range(int(t)):
            rho = self(rho)
        return rho

    def shift_unitary(self) -> np.ndarray:
        n, d = self.n, self.d
        dim = d**n
        u = np.zeros((dim, dim))
        for idx in itertools.product(range(d), repeat=n):
            new = tuple(idx[(k - 1) % n] for k in range(n))
            u[np.ravel_multi_index(new, self.spec.dims), np.ravel_multi_index(idx, self.spec.dims)] = 1.0
        return u

    def kraus(self) -> KrausChannel:
        rest = self.d ** (self.n - 1)
        shift = self.shift_unitary()
        ops = [np.kron(w / self.d, np.eye(rest)) @ shift for w in pauli_basis(self.d)]
        return KrausChannel(ops)

    def superoperator(self, basis: str = "computational"):
        s = self.kraus().superoperator()
        if basis == "computational":
            return s
        if basis == "pauli":
            return in_pauli_basis(s, self.spec.dims)
        raise ValueError(f"unknown basis {basis!r}")

    def spectrum(self) -> np.ndarray:
        """Superoperator eigenvalues, descending modulus."""
        return general_eig(self.superoperator("pauli")).eigenvalues


def shift_depolarize_ring(n: int, d: int) -> RingChannel:
    return RingChannel(n, d)


@dataclass(frozen=True)
class SpectralProfile:
    fixed_point: DensityMatrix
    lambda_min: float
    gap_mu: float
    unique: bool
    full_rank: bool
    diagonalizable: bool
    eigenvalues: np.ndarray = field(repr=False)
    status: str = "ok"


def _fixed_point_vector(s: np.ndarray) -> np.ndarray:
    # null vector of S - I is the eigenvalue-1 eigenvector, robust even when S is defective
    _, _, vh = np.linalg.svd(s - np.eye(s.shape[0]))
    return vh[-1].conj()


def spectral_profile(ch: KrausChannel) -> SpectralProfile:
    """Fixed point, smallest fixed-point eigenvalue and second eigenvalue modulus."""
    tol = get_tolerances()
    s = ch.superoperator().mat
    eig = general_eig(s)
    w = eig.eigenvalues
    n_unit = int(np.sum(np.abs(w - 1.0) <= tol.fixed_point_degeneracy))
    unique = n_unit == 1
    status = "ok"
    if not unique:
        status = "degenerate-fixed-point"
        warnings.warn("eigenvalue 1 is degenerate; fixed point taken from a single eigenvector", RuntimeWarning, stacklevel=2)
    x = hermitize(unvec(_fixed_point_vector(s), ch.dim))
    tr = np.trace(x).real
    x = x / tr if abs(tr) > 1e-12 else x / np.linalg.norm(x)
    fixed = DensityMatrix(x, validate=False)
    lam = float(np.linalg.eigvalsh(x)[0])
    mu = float(np.abs(w[1])) if len(w) > 1 else 0.0
    return SpectralProfile(
        fixed_point=fixed,
        lambda_min=lam,
        gap_mu=mu,
        unique=unique,
        full_rank=lam > tol.full_rank,
        diagonalizable=eig.diagonalizable,
        eigenvalues=w,
        status=status,
    )


@dataclass(frozen=True)
class ConvergenceEnvelope:
    """Constants with ``||E^t(rho) - pi|| <= c * exp(-kappa * t)``."""

    c: float
    kappa: float
    mode: str
    t_window: int

    def bound(self, t) -> np.ndarray:
        return self.c * np.exp(-self.kappa * np.asarray(t, dtype=float))


ENVELOPE_MODES = ("spectral-rigorous", "empirical")


def _kappa_from_mu(mu: float) -> float:
    # mu = 0 (instant replacement) would give kappa = inf and break t = 0 arithmetic downstream
    return -math.log(max(mu, np.finfo(float).tiny))


def _check_hypotheses(prof: SpectralProfile):
    if prof.gap_mu >= 1.0 - get_tolerances().no_gap:
        raise NoDampingGapError(f"no damping gap: second eigenvalue modulus {prof.gap_mu:.12g}")
    if not prof.unique:
        raise NonUniqueFixedPointError("fixed point is not unique")
    if not prof.full_rank:
        raise RankDeficientSteadyStateError(
            f"steady state not full rank (smallest eigenvalue {prof.lambda_min:.3e})"
        )


def eigen_operator_pairs(ch: KrausChannel):
    """Biorthogonal (eigenvalue, right, left) triples excluding the fixed mode.

    ``right``/``left`` are ``(n, d, d)`` stacks with ``Tr[l_j† r_k] = delta_jk``.
    """
    d = ch.dim
    eig = general_eig(ch.superoperator().mat)
    if not eig.diagonalizable:
        raise NotDiagonalizableError(
            "channel superoperator is not diagonalizable (near an exceptional point); use mode='empirical'"
        )
    fix = int(np.argmin(np.abs(eig.eigenvalues - 1.0)))
    idx = [k for k in range(len(eig.eigenvalues)) if k != fix]
    return (
        eig.eigenvalues[idx],
        unvec(eig.right[:, idx].T, d),
        unvec(eig.left[:, idx].T, d),
    )


def design_probes(d: int) -> np.ndarray:
    from .designs import design_for
    from .exceptions import DesignError

    try:
        return design_for(d).projectors
    except DesignError:
        return np.zeros((0, d, d), dtype=complex)


def haar_probes(d: int, n: int, seed) -> np.ndarray:
    rng = make_rng(seed)
    return np.array([random_pure_state(d, rng).mat for _ in range(n)]) if n else np.zeros((0, d, d), complex)


def _slow_mode_probes(ch: KrausChannel) -> np.ndarray:
    """Eigenvectors of the Hermitian parts of the slowest eigen-operator."""
    w, vr = sla.eig(ch.superoperator().mat)
    fix = int(np.argmin(np.abs(w - 1.0)))
    moduli = np.abs(w)
    moduli[fix] = -1.0
    r = unvec(vr[:, int(np.argmax(moduli))], ch.dim)
    probes = []
    for h in (0.5 * (r + r.conj().T), 0.5j * (r.conj().T - r)):
        _, v = np.linalg.eigh(h)
        probes.extend(np.outer(v[:, i], v[:, i].conj()) for i in range(ch.dim))
    return np.array(probes)


def _evolution_distances(ch: KrausChannel, probes: np.ndarray, fixed: np.ndarray, t_max: int) -> np.ndarray:
    """``dist[t, i] = ||E^t(probe_i) - fixed||`` for ``t = 0..t_max``."""
    out = np.empty((t_max + 1, len(probes)))
    x = np.asarray(probes, dtype=complex)
    for t in range(t_max + 1):
        out[t] = operator_norms(x - fixed) if len(x) else 0.0
        x = ch.apply_operator(x)
    return out


def convergence_envelope(
    ch: KrausChannel,
    mode: str = "spectral-rigorous",
    t_window: int = 60,
    *,
    delta: float = 0.05,
    safety: float = 2.0,
    n_haar: int = 200,
    seed=0,
    profile: SpectralProfile | None = None,
) -> ConvergenceEnvelope:
    """Fit ``(C, kappa)`` for the local convergence bound.

    ``spectral-rigorous`` sums ``||r||·||l||`` over biorthogonal eigen-operator
    pairs and uses ``kappa = -ln(mu)``; it needs a diagonalizable channel.
    ``empirical`` backs ``kappa`` off by ``delta`` and scales the worst probed
    ``e^{kappa t} ||E^t(rho) - pi||`` by ``safety``.
    """
    if mode not in ENVELOPE_MODES:
        raise ValueError(f"unknown envelope mode {mode!r}; choose from {ENVELOPE_MODES}")
    prof = spectral_profile(ch) if profile is None else profile
    _check_hypotheses(prof)
    mu = prof.gap_mu
    if mode == "spectral-rigorous":
        if not prof.diagonalizable:
            raise NotDiagonalizableError(
                "spectral-rigorous envelope requires a diagonalizable channel; use mode='empirical'"
            )
        _, right, left = eigen_operator_pairs(ch)
        c = float(sum(operator_norm(r) * operator_norm(l) for r, l in zip(right, left)))
        kappa = _kappa_from_mu(mu)
    else:
        kappa = (1.0 - delta) * _kappa_from_mu(mu)
        probes = np.concatenate([design_probes(ch.dim), haar_probes(ch.dim, n_haar, seed), _slow_mode_probes(ch)])
        dist = _evolution_distances(ch, probes, prof.fixed_point.mat, t_window)
        # t = 0 is included so the bound also covers the untouched input
        growth = np.exp(kappa * np.arange(t_window + 1))
        c = safety * float((dist.max(axis=1) * growth).max())
    return ConvergenceEnvelope(c=max(c, np.finfo(float).tiny), kappa=float(kappa), mode=mode, t_window=int(t_window))


class Violation(NamedTuple):
    t: int
    probe: int
    lhs: float
    rhs: float


def _as_probe_stack(probes, d: int, seed) -> np.ndarray:
    if isinstance(probes, (int, np.integer)):
        return haar_probes(d, int(probes), seed)
    if isinstance(probes, DensityMatrix):
        return probes.mat[None]
    if isinstance(probes, np.ndarray):
        return probes.reshape(-1, d, d)
    return np.array([p.mat if isinstance(p, DensityMatrix) else np.asarray(p) for p in probes], dtype=complex)


def check_contraction(
    ch: KrausChannel,
    env: ConvergenceEnvelope,
    probes=500,
    t_max: int | None = None,
    *,
    fixed_point=None,
    seed=12345,
) -> list[Violation]:
    """All ``(t, probe)`` pairs with ``t >= 1`` where the envelope is exceeded."""
    tol = get_tolerances()
    t_max = env.t_window if t_max is None else int(t_max)
    stack = _as_probe_stack(probes, ch.dim, seed)
    fixed = spectral_profile(ch).fixed_point.mat if fixed_point is None else np.asarray(fixed_point)
    dist = _evolution_distances(ch, stack, fixed, t_max)
    violations = []
    for t in range(1, t_max + 1):
        rhs = float(env.bound(t))
        limit = rhs * (1 + tol.contraction_rtol) + tol.contraction_atol
        for i in np.flatnonzero(dist[t] > limit):
            violations.append(Violation(t, int(i), float(dist[t, i]), rhs))
    return violations


ChannelLike = Callable[[DensityMatrix], DensityMatrix]
