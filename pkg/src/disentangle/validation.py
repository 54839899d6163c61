"""Input coercion helpers shared by the estimators and the CLI."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .channels import KrausChannel, LocalProductChannel
from .designs import ProjectiveDesign, custom_design, design_for, mub_design, qubit_six_state
from .exceptions import DesignError, DimensionMismatchError
from .linalg import DensityMatrix


def check_density_matrix(x, dims=None) -> DensityMatrix:
    """Return ``x`` as a validated :class:`DensityMatrix`."""
    if isinstance(x, DensityMatrix):
        if dims is not None and tuple(x.dims) != tuple(np.atleast_1d(dims)):
            return x.with_dims(dims).check()
        return x
    return DensityMatrix(np.asarray(x, dtype=complex), dims)


def check_channel(x) -> KrausChannel:
    if isinstance(x, KrausChannel):
        return x
    return KrausChannel(np.asarray(x, dtype=complex))


def check_channels(x, n_parties: int | None = None) -> tuple[KrausChannel, ...]:
    if isinstance(x, LocalProductChannel):
        chs = x.channels
    elif isinstance(x, KrausChannel):
        chs = (x,)
    else:
        chs = tuple(check_channel(c) for c in x)
    if n_parties is not None and len(chs) != n_parties:
        raise DimensionMismatchError(f"{len(chs)} channels for {n_parties} parties")
    return chs


_NAMED = {"six-state": qubit_six_state, "mub": mub_design}


def check_design(x, d: int) -> ProjectiveDesign:
    """Resolve ``None``/``"auto"``, a design name, or raw projectors for dimension ``d``."""
    if x is None or (isinstance(x, str) and x == "auto"):
        des = design_for(d)
    elif isinstance(x, ProjectiveDesign):
        des = x
    elif isinstance(x, str):
        if x not in _NAMED:
            raise DesignError(f"unknown design {x!r}; choose from {sorted(_NAMED)} or supply projectors")
        des = _NAMED[x]() if x == "six-state" else _NAMED[x](d)
    else:
        des = custom_design(np.asarray(x, dtype=complex))
    if des.d != d:
        raise DimensionMismatchError(f"design has dimension {des.d}, party has {d}")
    return des


def check_designs(x, dims: Sequence[int]) -> tuple[ProjectiveDesign, ...]:
    if x is None or isinstance(x, (str, ProjectiveDesign)):
        return tuple(check_design(x, d) for d in dims)
    x = list(x)
    if len(x) != len(dims):
        raise DimensionMismatchError(f"{len(x)} designs for {len(dims)} parties")
    return tuple(check_design(des, d) for des, d in zip(x, dims))
