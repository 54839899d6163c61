"""Entanglement and correlation monitors, plus canonical test states."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from ._tolerances import get_tolerances
from .linalg import DensityMatrix, _ptrace, maximally_mixed, partial_transpose, pure_state


@dataclass(frozen=True)
class Bipartition:
    side_a: frozenset[int]
    side_b: frozenset[int]

    def __post_init__(self):
        a, b = frozenset(self.side_a), frozenset(self.side_b)
        if not a or not b:
            raise ValueError("both sides of a bipartition must be non-empty")
        if a & b:
            raise ValueError(f"sides overlap on parties {sorted(a & b)}")
        object.__setattr__(self, "side_a", a)
        object.__setattr__(self, "side_b", b)

    @classmethod
    def of(cls, side_a: Iterable[int], n_parties: int) -> "Bipartition":
        a = frozenset(side_a)
        bad = [j for j in a if not 0 <= j < n_parties]
        if bad:
            raise ValueError(f"parties {bad} out of range for {n_parties} parties")
        return cls(a, frozenset(range(n_parties)) - a)

    def check(self, n_parties: int) -> "Bipartition":
        if self.side_a | self.side_b != frozenset(range(n_parties)):
            raise ValueError(f"bipartition {self.label} does not cover parties 0..{n_parties - 1}")
        return self

    @property
    def label(self) -> str:
        return "".join(map(str, sorted(self.side_a))) + "|" + "".join(map(str, sorted(self.side_b)))


def all_bipartitions(n_parties: int) -> list[Bipartition]:
    """Every unordered cut once; party 0 always sits on side A."""
    rest = range(1, n_parties)
    return [
        Bipartition.of(set(range(n_parties)) - set(side_b), n_parties)
        for k in range(1, n_parties)
        for side_b in itertools.combinations(rest, k)
    ]


def negativity(rho: DensityMatrix, cut: Bipartition) -> float:
    """Sum of |negative eigenvalues| of the partial transpose on ``side_b``."""
    cut.check(rho.spec.n_parties)
    w = np.linalg.eigvalsh(partial_transpose(rho, cut.side_b))
    return max(0.0, float(-w[w < 0].sum()))


def von_neumann_entropy(mat: np.ndarray) -> float:
    """Entropy in nats; eigenvalues below the cutoff count as ``0 ln 0 = 0``."""
    w = np.linalg.eigvalsh(np.asarray(mat))
    w = w[w > get_tolerances().entropy_cutoff]
    return float(-(w * np.log(w)).sum())


def mutual_information(rho: DensityMatrix, cut: Bipartition) -> float:
    cut.check(rho.spec.n_parties)
    s_a = von_neumann_entropy(_ptrace(rho.mat, rho.dims, sorted(cut.side_a)))
    s_b = von_neumann_entropy(_ptrace(rho.mat, rho.dims, sorted(cut.side_b)))
    return max(0.0, s_a + s_b - von_neumann_entropy(rho.mat))


def bell_pair(d: int = 2) -> DensityMatrix:
    """Maximally entangled ``sum_k |kk> / sqrt(d)``."""
    psi = np.eye(d).reshape(d * d)
    return pure_state(psi, (d, d))


def werner(q: float) -> DensityMatrix:
    """``q |Phi+><Phi+| + (1 - q) I / 4``."""
    return DensityMatrix(q * bell_pair().mat + (1 - q) * np.eye(4) / 4, (2, 2), validate=False)


def ghz(n: int, d: int = 2) -> DensityMatrix:
    if n < 2:
        raise ValueError("GHZ state needs at least two parties")
    dims = (d,) * n
    psi = np.zeros(d**n, dtype=complex)
    for k in range(d):
        psi[np.ravel_multi_index((k,) * n, dims)] = 1
    return pure_state(psi, dims)


def _place(pairs_state: np.ndarray, n: int, order: Sequence[int]) -> np.ndarray:
    """Move a tensor whose parties are listed in ``order`` into sites 0..n-1."""
    t = pairs_state.reshape((2,) * (2 * n))
    inv = np.argsort(order)
    perm = list(inv) + [n + i for i in inv]
    return t.transpose(perm).reshape(2**n, 2**n)


def rainbow(n: int) -> DensityMatrix:
    """Qubit chain of nested Bell pairs on sites ``(j, n - 1 - j)``."""
    if n < 2 or n % 2:
        raise ValueError(f"rainbow state needs an even number of sites, got {n}")
    bell = bell_pair().mat
    mat = np.eye(1)
    order = []
    for j in range(n // 2):
        mat = np.kron(mat, bell)
        order += [j, n - 1 - j]
    return DensityMatrix(_place(mat, n, order), (2,) * n, validate=False)


def embed_pair_on_ring(n: int, sites: Sequence[int], d: int = 2) -> DensityMatrix:
    """Bell pair on ``sites`` tensored with the maximally mixed state elsewhere."""
    sites = list(sites)
    if len(sites) != 2 or sites[0] == sites[1]:
        raise ValueError(f"need two distinct sites, got {sites}")
    if any(not 0 <= s < n for s in sites):
        raise ValueError(f"sites {sites} out of range for a ring of {n}")
    others = [j for j in range(n) if j not in sites]
    mat = np.kron(bell_pair(d).mat, maximally_mixed((d,) * len(others)).mat) if others else bell_pair(d).mat
    order = sites + others
    t = mat.reshape((d,) * (2 * n))
    inv = np.argsort(order)
    t = t.transpose(list(inv) + [n + i for i in inv])
    return DensityMatrix(t.reshape(d**n, d**n), (d,) * n, validate=False)


def ring_pair_cut(n: int, start: int = 1) -> Callable[[int], Bipartition]:
    """Moving cut that follows the leading half of a pair on a shift ring.

    The shift moves content ``j -> j + 1``; once the trailing half of the
    pair would land on site 0 it is depolarized, so only the leading site is
    tracked.
    """

    def cut(t: int) -> Bipartition:
        return Bipartition.of([(start + t) % n], n)

    return cut


CutSpec = Bipartition | Callable[[int], Bipartition]


@dataclass
class DeathScan:
    """Negativity trajectories per cut; ``death[cut_id]`` is ``None`` if alive at ``t_max``."""

    t_max: int
    cut_ids: list[str]
    negativity: dict[str, np.ndarray] = field(repr=False)
    mutual_information: dict[str, np.ndarray] = field(repr=False)
    death: dict[str, int | None]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "cut_id", "negativity", "mutual_information"])
        for t in range(self.t_max + 1):
            for cid in self.cut_ids:
                writer.writerow([t, cid, repr(float(self.negativity[cid][t])), repr(float(self.mutual_information[cid][t]))])
        return buf.getvalue()


def sudden_death_scan(
    rho0: DensityMatrix,
    channel: Callable[[DensityMatrix], DensityMatrix],
    cuts: Sequence[CutSpec] | dict[str, CutSpec],
    t_max: int,
    *,
    track_mutual_information: bool = True,
) -> DeathScan:
    """First step at which each cut's negativity drops to zero.

    A cut may be a fixed :class:`Bipartition` or a callable ``t -> Bipartition``
    for cuts that follow moving content (the ring counterexample).
    """
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    if not isinstance(cuts, dict):
        cuts = {(c.label if isinstance(c, Bipartition) else f"cut{i}"): c for i, c in enumerate(cuts)}
    zero = get_tolerances().negativity_zero
    ids = list(cuts)
    neg = {cid: np.zeros(t_max + 1) for cid in ids}
    mi = {cid: np.zeros(t_max + 1) for cid in ids}
    rho = rho0
    for t in range(t_max + 1):
        if t:
            rho = channel(rho)
        for cid, c in cuts.items():
            cut = c(t) if callable(c) and not isinstance(c, Bipartition) else c
            neg[cid][t] = negativity(rho, cut)
            if track_mutual_information:
                mi[cid][t] = mutual_information(rho, cut)
    death = {}
    for cid in ids:
        hits = np.flatnonzero(neg[cid] <= zero)
        death[cid] = int(hits[0]) if hits.size else None
    return DeathScan(t_max, ids, neg, mi, death)
