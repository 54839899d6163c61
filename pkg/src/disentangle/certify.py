"""Finite-time separability certificates for product channels.

Two routes are provided.  The analytic bound turns a convergence envelope
``(C, kappa)`` and the smallest steady-state eigenvalue ``lambda`` into the
time ``kappa^{-1} ln[C lambda^{-2} (d + lambda)]``.  The direct route scans
``t`` until every evolved signed operator ``E^t((d + 1) Pi - I)`` is
positive semi-definite; from then on the reconstruction weights of the
*initial* state, paired with those evolved operators, form an explicit
fully separable decomposition.  The direct route never enumerates global
multi-indices.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from ._tolerances import get_tolerances
from .channels import (
    ConvergenceEnvelope,
    KrausChannel,
    LocalProductChannel,
    SpectralProfile,
    _check_hypotheses,
    spectral_profile,
    unvec,
    vec,
)
from .designs import ProjectiveDesign, design_for
from .exceptions import (
    CertificationError,
    DimensionMismatchError,
    EnumerationGuardError,
    HorizonExceededError,
    NotDiagonalizableError,
    RankDeficientSteadyStateError,
)
from .linalg import DensityMatrix, general_eig, hermitize, min_eigenvalues, operator_norm
from .reconstruct import (
    ENUMERATION_GUARD,
    SeparableDecomposition,
    StreamingDecomposition,
    n_terms,
    signed_stack,
    weights,
)

DEFAULT_CAP = 10_000


@dataclass(frozen=True)
class PartyThreshold:
    party: int
    t: float
    ceil_t: int
    c: float
    kappa: float
    lambda_min: float
    d: int


@dataclass(frozen=True)
class ThresholdReport:
    per_party: tuple[PartyThreshold, ...]
    t_c: float
    ceil_t_c: int

    def to_dict(self) -> dict:
        return {
            "per_party": [asdict(p) for p in self.per_party],
            "t_c": self.t_c,
            "ceil_t_c": self.ceil_t_c,
        }


def party_threshold(c: float, kappa: float, lam: float, d: float) -> float:
    if lam <= 0:
        raise RankDeficientSteadyStateError("steady state is not full rank; the certificate needs a full-rank fixed point")
    if c <= 0 or kappa <= 0:
        raise ValueError(f"envelope constants must be positive, got C={c}, kappa={kappa}")
    return math.log(c * (d + lam) / lam**2) / kappa


def threshold_from_constants(constants: Sequence[tuple[float, float, float, int]]) -> ThresholdReport:
    """Report from raw per-party ``(C, kappa, lambda, d)`` tuples."""
    if not constants:
        raise ValueError("need at least one party")
    rows = []
    for j, (c, kappa, lam, d) in enumerate(constants):
        t = party_threshold(c, kappa, lam, d)
        rows.append(PartyThreshold(j, t, math.ceil(t), float(c), float(kappa), float(lam), int(d)))
    t_c = max(r.t for r in rows)
    return ThresholdReport(tuple(rows), t_c, math.ceil(t_c))


def threshold_from_envelope(profiles: Sequence[SpectralProfile], envelopes: Sequence[ConvergenceEnvelope]) -> ThresholdReport:
    """Analytic sudden-death bound ``t_c = max_j t_j``."""
    if len(profiles) != len(envelopes):
        raise ValueError("one envelope per profile is required")
    return threshold_from_constants(
        [(e.c, e.kappa, p.lambda_min, p.fixed_point.dim) for p, e in zip(profiles, envelopes)]
    )


def _check_unit_trace(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if abs(np.trace(h) - 1) > 1e-10:
        raise ValueError(f"h must have unit trace, got {np.trace(h).real:.12g}")
    return h


def rho_h_construct(h, profile: SpectralProfile) -> DensityMatrix:
    """``(||h|| pi + lambda h) / (||h|| + lambda)``, a state for any unit-trace Hermitian ``h``."""
    h = _check_unit_trace(h)
    if not profile.full_rank:
        raise RankDeficientSteadyStateError("steady state is not full rank; the certificate needs a full-rank fixed point")
    norm_h = operator_norm(h)
    lam = profile.lambda_min
    return DensityMatrix(hermitize((norm_h * profile.fixed_point.mat + lam * h) / (norm_h + lam)), validate=False)


def positivity_time_for_h(h, profile: SpectralProfile, envelope: ConvergenceEnvelope) -> int:
    """Steps after which ``E^t(h)`` is guaranteed positive semi-definite."""
    h = _check_unit_trace(h)
    t = party_threshold(envelope.c, envelope.kappa, profile.lambda_min, operator_norm(h))
    return max(0, math.ceil(t))


@dataclass(frozen=True)
class Certificate:
    t_star: int
    min_eigenvalue: float
    at_tolerance: bool


def _party_channels(channels) -> tuple[KrausChannel, ...]:
    if isinstance(channels, LocalProductChannel):
        return channels.channels
    if isinstance(channels, KrausChannel):
        return (channels,)
    return tuple(channels)


def _resolve_designs(chs, designs) -> tuple[ProjectiveDesign, ...]:
    if designs is None:
        return tuple(design_for(c.dim) for c in chs)
    if isinstance(designs, ProjectiveDesign):
        designs = [designs] * len(chs)
    designs = tuple(designs)
    if len(designs) != len(chs):
        raise DimensionMismatchError(f"{len(designs)} designs for {len(chs)} channels")
    for j, (c, des) in enumerate(zip(chs, designs)):
        if c.dim != des.d:
            raise DimensionMismatchError(f"design for party {j} has dimension {des.d}, channel has {c.dim}")
    return designs


def certify(channels, designs=None, cap: int = DEFAULT_CAP) -> Certificate:
    """Smallest ``t`` at which all evolved signed operators are PSD, with diagnostics."""
    tol = get_tolerances()
    chs = _party_channels(channels)
    designs = _resolve_designs(chs, designs)
    stacks = [signed_stack(des) for des in designs]
    for t in range(cap + 1):
        worst = min(float(min_eigenvalues(s).min()) for s in stacks)
        if worst >= -tol.psd:
            return Certificate(t, worst, worst < tol.psd)
        stacks = [c.apply_operator(s) for c, s in zip(chs, stacks)]
    raise HorizonExceededError(f"no certificate within horizon of {cap} steps (gapless or near-gapless channel?)")


def certified_separability_time(channels, designs=None, cap: int = DEFAULT_CAP) -> int:
    """Input-independent step count after which every state is fully separable."""
    return certify(channels, designs, cap).t_star


def evolved_signed_factors(channels, designs, t: int) -> list[np.ndarray]:
    chs = _party_channels(channels)
    designs = _resolve_designs(chs, designs)
    out = []
    for c, des in zip(chs, designs):
        s = signed_stack(des)
        for _ in range(int(t)):
            s = c.apply_operator(s)
        out.append(hermitize(s))
    return out


def emit_separable_decomposition(
    rho: DensityMatrix,
    channels,
    designs=None,
    t: int | None = None,
    *,
    guard: int = ENUMERATION_GUARD,
):
    """Explicit fully separable form of ``E^t(rho)``.

    Weights come from the initial state, factors are ``E_j^t(h_j)``.  Above
    the enumeration guard a :class:`StreamingDecomposition` is returned.
    """
    chs = _party_channels(channels)
    if len(chs) != rho.spec.n_parties:
        raise DimensionMismatchError(f"{len(chs)} channels for {rho.spec.n_parties} parties")
    designs = _resolve_designs(chs, designs)
    if t is None:
        t = certified_separability_time(chs, designs)
    factors = evolved_signed_factors(chs, designs, t)
    worst = min(float(min_eigenvalues(f).min()) for f in factors)
    if worst < -get_tolerances().psd:
        raise CertificationError(f"factors not certified PSD at t={t} (min eigenvalue {worst:.3e})")
    if n_terms(designs) > guard:
        return StreamingDecomposition(rho, designs, factors, t)
    return SeparableDecomposition(weights(rho, designs, guard=guard), tuple(factors), rho.spec, int(t))


@dataclass(frozen=True)
class DisentanglerMode:
    """One Hermitian term ``|xi|^t R(t) Tr[L rho]``.

    ``kind`` is ``"self"`` for real eigenvalues, ``"re"``/``"im"`` for the two
    halves of a complex-conjugate pair built from the same ``(r, l)``.
    """

    kind: str
    xi: complex
    r: np.ndarray = field(repr=False)
    l: np.ndarray = field(repr=False)
    L: np.ndarray = field(repr=False)

    def scaled_r(self, t: int) -> np.ndarray:
        a = self.xi**t * self.r
        if self.kind == "self":
            return hermitize(a)
        if self.kind == "re":
            return (a + a.conj().T) / np.sqrt(2)
        return (a - a.conj().T) / (np.sqrt(2) * 1j)


@dataclass(frozen=True)
class DisentanglerForm:
    """``E^t(rho) = sum_{alpha, ±} rho_{alpha±}(t) Tr[E_{alpha±} rho]``."""

    d: int
    fixed_point: np.ndarray = field(repr=False)
    modes: tuple[DisentanglerMode, ...] = field(repr=False)
    onset: int | None = None
    gauge: str = "per-pair max-norm scaling of l (1/c on r)"

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([m.xi for m in self.modes])

    @property
    def nonzero_modes(self) -> int:
        return int(sum(abs(m.xi) > 1e-12 for m in self.modes))

    @property
    def L(self) -> np.ndarray:
        return np.array([m.L for m in self.modes])

    def povm(self) -> np.ndarray:
        """``(n_modes, 2, d, d)`` stack of ``(I ± L) / (2D)``."""
        big_d = self.d**2 - 1
        eye = np.eye(self.d)
        return np.array([[(eye + m.L) / (2 * big_d), (eye - m.L) / (2 * big_d)] for m in self.modes])

    def rho_modes(self, t: int) -> np.ndarray:
        """``(n_modes, 2, d, d)`` stack of ``pi ± D |xi|^t R(t)``."""
        big_d = self.d**2 - 1
        out = []
        for m in self.modes:
            x = big_d * m.scaled_r(t)
            out.append([self.fixed_point + x, self.fixed_point - x])
        return np.array(out)

    def apply(self, rho, t: int) -> np.ndarray:
        rho = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho)
        probs = np.einsum("msab,ba->ms", self.povm(), rho)
        return np.einsum("ms,msab->ab", probs, self.rho_modes(t))

    def min_eigenvalue(self, t: int) -> float:
        return float(min_eigenvalues(self.rho_modes(t)).min())

    def psd_violations(self, start: int, stop: int) -> list[int]:
        """Steps in ``[start, stop]`` where some ``rho_{alpha±}`` fails PSD."""
        tol = get_tolerances().psd
        return [t for t in range(start, stop + 1) if self.min_eigenvalue(t) < -tol]


def _dagger_superop(p: np.ndarray, d: int) -> np.ndarray:
    """Matrix of ``X -> P(X†)†``."""
    # f @ vec(X) == vec(X.T)
    f = np.array([vec(unvec(e, d).T) for e in np.eye(d * d)]).T
    return f @ p.conj() @ f


def _hermitian_basis(right: np.ndarray, left: np.ndarray, d: int):
    """Re-express a real-eigenvalue eigenspace in a Hermitian biorthogonal basis."""
    m = right.shape[1]
    mats = unvec(right.T, d)
    cands = np.concatenate([hermitize(mats), hermitize(-1j * mats)])
    real = np.concatenate([vec(cands).real, vec(cands).imag], axis=1).T
    u, _, _ = np.linalg.svd(real, full_matrices=False)
    basis = u[:, :m]
    new_right = basis[: d * d] + 1j * basis[d * d:]
    a = left.conj().T @ new_right
    new_left = left @ np.linalg.inv(a).conj().T
    return new_right, new_left


def _gauge_pair(r: np.ndarray, l: np.ndarray):
    c = 1.0 / max(operator_norm((l + l.conj().T) / np.sqrt(2)), operator_norm((l - l.conj().T) / (np.sqrt(2) * 1j)))
    return r / c, l * c


def disentangler_form(ch: KrausChannel, t_max: int = DEFAULT_CAP) -> DisentanglerForm:
    """Rewrite ``E^t`` as a measure-and-prepare map with ``D = d² - 1`` two-outcome modes."""
    tol = get_tolerances()
    d = ch.dim
    prof = spectral_profile(ch)
    _check_hypotheses(prof)
    s = ch.superoperator().mat
    eig = general_eig(s)
    if not eig.diagonalizable:
        raise NotDiagonalizableError(
            "channel is not diagonalizable (exceptional point); the disentangler form needs a spectral decomposition"
        )
    w = eig.eigenvalues
    fix = int(np.argmin(np.abs(w - 1.0)))
    rest = [k for k in range(len(w)) if k != fix]
    used: set[int] = set()
    modes: list[DisentanglerMode] = []
    eps = tol.conjugate_pairing
    for k in rest:
        if k in used:
            continue
        xi = w[k]
        cluster = [q for q in rest if q not in used and abs(w[q] - xi) <= eps]
        if abs(xi.imag) <= eps:
            used.update(cluster)
            xi_r = complex(np.mean(w[cluster]).real)
            right, left = _hermitian_basis(eig.right[:, cluster], eig.left[:, cluster], d)
            for i in range(len(cluster)):
                r = hermitize(unvec(right[:, i], d))
                l = hermitize(unvec(left[:, i], d))
                c = 1.0 / operator_norm(l)
                modes.append(DisentanglerMode("self", xi_r, r / c, l * c, l * c))
            continue
        if xi.imag < 0:
            continue
        partner = [q for q in rest if q not in used and abs(w[q] - np.conj(xi)) <= eps]
        if len(partner) != len(cluster):
            raise ValueError(f"missing conjugate partner for eigenvalue {xi:.6g}")
        proj = eig.right[:, cluster] @ eig.left[:, cluster].conj().T
        proj_partner = eig.right[:, partner] @ eig.left[:, partner].conj().T
        residual = np.linalg.norm(proj_partner - _dagger_superop(proj, d), 2) / max(1.0, np.linalg.norm(proj, 2))
        if residual > eps:
            raise ValueError(f"missing conjugate partner for eigenvalue {xi:.6g} (pairing residual {residual:.2e})")
        used.update(cluster)
        used.update(partner)
        for q in cluster:
            r, l = _gauge_pair(unvec(eig.right[:, q], d), unvec(eig.left[:, q], d))
            modes.append(DisentanglerMode("re", complex(xi), r, l, (l + l.conj().T) / np.sqrt(2)))
            modes.append(DisentanglerMode("im", complex(xi), r, l, (l - l.conj().T) / (np.sqrt(2) * 1j)))
    form = DisentanglerForm(d, prof.fixed_point.mat, tuple(modes))
    try:
        onset = disentangler_onset(form, t_max)
    except HorizonExceededError:
        onset = None
    return DisentanglerForm(d, prof.fixed_point.mat, tuple(modes), onset)


def disentangler_onset(form: DisentanglerForm, t_max: int = DEFAULT_CAP) -> int:
    """Smallest ``t <= t_max`` with every ``rho_{alpha±}(t)`` positive semi-definite."""
    tol = get_tolerances().psd
    for t in range(int(t_max) + 1):
        if form.min_eigenvalue(t) >= -tol:
            return t
    raise HorizonExceededError(f"disentangler form not positive within {t_max} steps")
