"""Numerical tolerances shared by every module.

All thresholds live here so that a run can be switched between the
``default`` and ``strict`` profiles in one place.  The active profile is
held in a :class:`contextvars.ContextVar`, which keeps concurrent callers
(threads, asyncio tasks) isolated from each other.
"""

from __future__ import annotations

import contextlib
import contextvars
import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12
    hermitian_input: float = 1e-10
    trace: float = 1e-12
    psd: float = 1e-10
    kraus_completeness: float = 1e-10
    fixed_point_degeneracy: float = 1e-8
    full_rank: float = 1e-10
    no_gap: float = 1e-9
    eigvec_condition: float = 1e8
    # eigenvalues closer than this form a cluster; a cluster whose unit
    # eigenvectors have smallest singular value below the same number is
    # treated as a Jordan block
    defective_cluster: float = 1e-6
    conjugate_pairing: float = 1e-8
    design: float = 1e-10
    frame_potential: float = 1e-9
    weight_negativity: float = 1e-12
    weight_sum: float = 1e-9
    negativity_zero: float = 1e-10
    entropy_cutoff: float = 1e-14
    # slack on the right-hand side of the contraction check; the absolute
    # part is the round-off floor of ||E^t(rho) - pi|| once the bound
    # itself has decayed below machine precision
    contraction_rtol: float = 1e-12
    contraction_atol: float = 1e-13
    # entries below this (relative to max |entry|) count as structural zeros
    structural_zero: float = 1e-14

    def replace(self, **overrides) -> "Tolerances":
        unknown = set(overrides) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise KeyError(f"unknown tolerance keys: {sorted(unknown)}")
        return dataclasses.replace(self, **{k: float(v) for k, v in overrides.items()})


PROFILES = {
    "default": Tolerances(),
    "strict": Tolerances(psd=1e-12, negativity_zero=1e-12, kraus_completeness=1e-12),
}

_active: contextvars.ContextVar[Tolerances] = contextvars.ContextVar(
    "disentangle_tolerances", default=PROFILES["default"]
)


def get_tolerances() -> Tolerances:
    """Return the tolerance table active in the current context."""
    return _active.get()


@contextlib.contextmanager
def use_tolerances(tol: Tolerances | str, **overrides):
    """Temporarily activate a tolerance profile (by name or instance)."""
    if isinstance(tol, str):
        try:
            tol = PROFILES[tol]
        except KeyError:
            raise KeyError(f"unknown tolerance profile {tol!r}; choose from {sorted(PROFILES)}") from None
    if overrides:
        tol = tol.replace(**overrides)
    token = _active.set(tol)
    try:
        yield tol
    finally:
        _active.reset(token)
