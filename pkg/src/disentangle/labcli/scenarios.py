"""Scenario definitions.

Every scenario expands a config into independent grid points, evaluates
each point with a top-level (picklable) worker function, and merges the
results in grid order.  Workers receive the active tolerance table
explicitly so that results do not depend on which process runs them.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .. import matrix_io
from .._random import make_rng, spawn_seeds
from .._tolerances import Tolerances, use_tolerances
from ..certify import certify, threshold_from_envelope
from ..channels import KrausChannel, LocalProductChannel, depolarizing, random_channel, shift_depolarize_ring
from ..entangle import (
    Bipartition,
    all_bipartitions,
    bell_pair,
    embed_pair_on_ring,
    ghz,
    rainbow,
    ring_pair_cut,
    sudden_death_scan,
    werner,
)
from ..estimators import ChannelAnalyzer
from ..exceptions import ConfigError
from ..linalg import DensityMatrix, random_density
from ..reconstruct import weights, weights_to_csv
from ..validation import check_designs
from .config import ScenarioConfig

# the ring superoperator is d^(2N) square; larger rings skip the spectrum
RING_SPECTRUM_MAX_DIM = 1024


@dataclass
class ScenarioOutput:
    """Report sections plus CSV tables (``name -> rows``, header first)."""

    results: dict[str, Any]
    tables: dict[str, list[list]] = field(default_factory=dict)
    per_party: list[dict] = field(default_factory=list)
    threshold: dict | None = None
    certificate: dict | None = None
    death_table: list[dict] = field(default_factory=list)


# ---------------------------------------------------------------------------
# builders


def build_channel(desc: dict, d: int | None, base_dir) -> KrausChannel:
    kind = desc["kind"]
    d = desc.get("d", d or 2)
    if kind == "depolarizing":
        return depolarizing(d, desc["p"])
    if kind == "random":
        return random_channel(d, desc.get("num_kraus", 4), desc["seed"])
    if kind == "kraus-literal":
        from pathlib import Path

        path = Path(desc["path"])
        path = path if path.is_absolute() else Path(base_dir) / path
        ops, _ = matrix_io.load(path)
        return KrausChannel(ops)
    raise ConfigError(f"channel kind {kind!r} cannot act as a local channel")


def party_channels(cfg: ScenarioConfig, dims, default: dict) -> list[KrausChannel]:
    descs = cfg.get("channels") or [default]
    if len(descs) == 1:
        descs = descs * len(dims)
    return [build_channel(desc, d, cfg.base_dir) for desc, d in zip(descs, dims)]


def party_designs(cfg: ScenarioConfig, dims):
    spec = cfg.get("designs")
    if spec is None:
        return check_designs(None, dims)
    if len(spec) == 1:
        spec = spec * len(dims)
    resolved = []
    for s in spec:
        if isinstance(s, dict):
            projs, _ = matrix_io.load(cfg.resolve(s["path"]))
            resolved.append(projs)
        else:
            resolved.append(s)
    return check_designs(resolved, dims)


def build_state(cfg: ScenarioConfig, dims) -> DensityMatrix:
    st = cfg["state"]
    kind = st["kind"]
    if kind == "bell":
        return bell_pair(dims[0])
    if kind == "werner":
        return werner(st.get("q", 1.0))
    if kind == "ghz":
        return ghz(len(dims), dims[0])
    if kind == "random":
        (child,) = spawn_seeds(cfg.seed, 1)
        rho = random_density(int(np.prod(dims)), st.get("rank"), seed=make_rng(child))
        return DensityMatrix(rho.mat, dims)
    mats, file_dims = matrix_io.load(cfg.resolve(st["path"]))
    return DensityMatrix(mats[0], file_dims or dims)


def _envelope_opts(cfg: ScenarioConfig) -> dict:
    env = cfg["envelope"]
    return {"envelope_mode": env["mode"], "t_window": env["t_window"], "random_state": cfg.seed}


def _party_summary(j: int, analyzer: ChannelAnalyzer, t_j: float) -> dict:
    prof, env = analyzer.profile_, analyzer.envelope_
    return {
        "party": j,
        "d": analyzer.channel_.dim,
        "lambda": prof.lambda_min,
        "mu": prof.gap_mu,
        "unique": prof.unique,
        "full_rank": prof.full_rank,
        "diagonalizable": prof.diagonalizable,
        "C": env.c,
        "kappa": env.kappa,
        "envelope_mode": env.mode,
        "t_j": t_j,
    }


def analyze_parties(chs, designs, env_opts) -> tuple[list[dict], dict, dict]:
    analyzers = [ChannelAnalyzer(**env_opts).fit(c) for c in chs]
    report = threshold_from_envelope([a.profile_ for a in analyzers], [a.envelope_ for a in analyzers])
    cert = certify(chs, designs)
    per_party = [_party_summary(j, a, r.t) for j, (a, r) in enumerate(zip(analyzers, report.per_party))]
    certificate = {"t_star": cert.t_star, "min_eigenvalue": cert.min_eigenvalue, "method": "direct signed-operator scan"}
    return per_party, report.to_dict(), certificate


def _trajectory_rows(scan) -> list[list]:
    rows = [["t", "cut_id", "negativity", "mutual_information"]]
    for t in range(scan.t_max + 1):
        for cid in scan.cut_ids:
            rows.append([t, cid, float(scan.negativity[cid][t]), float(scan.mutual_information[cid][t])])
    return rows


# ---------------------------------------------------------------------------
# workers (top level so a process pool can pickle them)


def _threshold_point(d, p, designs, env_opts):
    ch = depolarizing(d, p)
    per_party, threshold, cert = analyze_parties([ch], designs, env_opts)
    return {
        "p": p,
        "formula_t": math.ceil(-math.log(d + 1) / math.log(p)),
        "t_star": cert["t_star"],
        "t_c": threshold["t_c"],
        "ceil_t_c": threshold["ceil_t_c"],
        "C": per_party[0]["C"],
        "kappa": per_party[0]["kappa"],
        "lambda": per_party[0]["lambda"],
        "mu": per_party[0]["mu"],
    }


def _ghz_point(n, chs, designs, t_max):
    rho = ghz(n, chs[0].dim)
    scan = sudden_death_scan(rho, LocalProductChannel(chs), all_bipartitions(n), t_max)
    t_star = certify(chs, designs).t_star
    return {"n": n, "t_star": t_star, "death": scan.death, "trajectory": _trajectory_rows(scan)}


def _ring_point(n, d, t_max):
    ring = shift_depolarize_ring(n, d)
    out: dict[str, Any] = {"n": n, "d": d}
    if d ** (2 * n) <= RING_SPECTRUM_MAX_DIM:
        moduli = np.sort(np.abs(ring.spectrum()))[::-1]
        out.update(
            spectrum_computed=True,
            n_near_one=int(np.sum(np.abs(moduli - 1) <= 1e-8)),
            max_other_modulus=float(moduli[1]),
        )
    else:
        out.update(spectrum_computed=False, n_near_one=None, max_other_modulus=None)
    rho = embed_pair_on_ring(n, (1, 2), d)
    scan = sudden_death_scan(rho, ring, {"pair": ring_pair_cut(n)}, max(t_max, n), track_mutual_information=False)
    out["death"] = scan.death["pair"]
    out["negativity"] = [float(v) for v in scan.negativity["pair"]]
    return out


def _audit_point(index, child, d, num_kraus, designs, env_opts):
    ch = random_channel(d, num_kraus, child)
    per_party, threshold, cert = analyze_parties([ch, ch], designs, env_opts)
    t_star = cert["t_star"]
    scan = sudden_death_scan(
        bell_pair(d), LocalProductChannel([ch, ch]), [Bipartition.of([0], 2)], max(t_star, 1), track_mutual_information=False
    )
    death = scan.death["0|1"]
    return {
        "index": index,
        "spawn_key": "-".join(map(str, child.spawn_key)),
        "empirical_death": death,
        "t_star": t_star,
        "ceil_t_c": threshold["ceil_t_c"],
        "ordered": death is not None and death <= t_star <= threshold["ceil_t_c"],
        "mu": per_party[0]["mu"],
        "lambda": per_party[0]["lambda"],
    }


def _rainbow_point(n, chs, t_max):
    rho = rainbow(n)
    half = Bipartition.of(range(n // 2), n)
    scan = sudden_death_scan(rho, LocalProductChannel(chs), [half], t_max)
    cid = half.label
    return {
        "n": n,
        "mi": [float(v) for v in scan.mutual_information[cid]],
        "negativity": [float(v) for v in scan.negativity[cid]],
    }


def _call(args):
    tol, fn, fargs = args
    with use_tolerances(tol):
        return fn(*fargs)


def run_points(fn: Callable, points: list[tuple], tol: Tolerances, workers: int) -> list:
    """Evaluate ``fn(*point)`` for every point; results come back in grid order."""
    tasks = [(tol, fn, p) for p in points]
    if workers <= 1 or len(tasks) <= 1:
        return [_call(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, tasks))


# ---------------------------------------------------------------------------
# scenarios


def _local_dim(cfg: ScenarioConfig) -> int:
    if cfg.get("dims"):
        return cfg["dims"][0]
    chans = cfg.get("channels") or [{}]
    return chans[0].get("d", 2)


def depolarization_threshold(cfg, tol, workers) -> ScenarioOutput:
    d = _local_dim(cfg)
    designs = party_designs(cfg, [d])
    rows = run_points(_threshold_point, [(d, p, designs, _envelope_opts(cfg)) for p in cfg["grid"]["p"]], tol, workers)
    header = ["p", "formula_t", "t_star", "t_c", "ceil_t_c", "C", "kappa", "lambda", "mu"]
    table = [header] + [[r[k] for k in header] for r in rows]
    return ScenarioOutput(
        results={
            "d": d,
            "rows": rows,
            "all_match_formula": all(r["t_star"] == r["formula_t"] for r in rows),
            "bound_dominates": all(r["ceil_t_c"] >= r["t_star"] for r in rows),
        },
        tables={"thresholds": table},
    )


def werner_death(cfg, tol, workers) -> ScenarioOutput:
    dims = [2, 2]
    chs = party_channels(cfg, dims, {"kind": "depolarizing", "p": 0.9})
    designs = party_designs(cfg, dims)
    q = cfg.get("state", {}).get("q", 1.0)
    with use_tolerances(tol):
        per_party, threshold, cert = analyze_parties(chs, designs, _envelope_opts(cfg))
        scan = sudden_death_scan(werner(q), LocalProductChannel(chs), [Bipartition.of([0], 2)], cfg["t_max"])
    death = scan.death["0|1"]
    return ScenarioOutput(
        results={"q": q, "death": death},
        tables={"trajectory": _trajectory_rows(scan)},
        per_party=per_party,
        threshold=threshold,
        certificate=cert,
        death_table=[{"cut_id": "0|1", "death": death}],
    )


def ghz_death(cfg, tol, workers) -> ScenarioOutput:
    points = []
    for n in cfg["grid"]["n"]:
        dims = [_local_dim(cfg)] * n
        chs = party_channels(cfg, dims, {"kind": "depolarizing", "p": 0.5})
        points.append((n, chs, party_designs(cfg, dims), cfg["t_max"]))
    res = run_points(_ghz_point, points, tol, workers)
    deaths = [{"n": r["n"], "cut_id": cid, "death": t, "t_star": r["t_star"]} for r in res for cid, t in r["death"].items()]
    tables = {f"trajectory_N{r['n']}": r["trajectory"] for r in res}
    tables["deaths"] = [["n", "cut_id", "death", "t_star"]] + [[r["n"], r["cut_id"], r["death"], r["t_star"]] for r in deaths]
    return ScenarioOutput(results={"t_star": {r["n"]: r["t_star"] for r in res}}, tables=tables, death_table=deaths)


def ring_counterexample(cfg, tol, workers) -> ScenarioOutput:
    chans = cfg.get("channels") or [{"kind": "ring"}]
    d = chans[0].get("d", 2)
    res = run_points(_ring_point, [(n, d, cfg["t_max"]) for n in cfg["grid"]["n"]], tol, workers)
    header = ["n", "death", "spectrum_computed", "n_near_one", "max_other_modulus"]
    offsets = {r["death"] - r["n"] for r in res if r["death"] is not None}
    traj = [["n", "t", "negativity"]] + [[r["n"], t, v] for r in res for t, v in enumerate(r["negativity"])]
    return ScenarioOutput(
        results={
            "rows": [{k: r[k] for k in header} for r in res],
            # death = N - const for every ring size
            "death_linear_in_n": all(r["death"] is not None for r in res) and len(offsets) == 1,
        },
        tables={"ring": [header] + [[r[k] for k in header] for r in res], "trajectory": traj},
        death_table=[{"n": r["n"], "cut_id": "pair", "death": r["death"]} for r in res],
    )


def random_channel_audit(cfg, tol, workers) -> ScenarioOutput:
    d = _local_dim(cfg)
    chans = cfg.get("channels") or [{}]
    num_kraus = chans[0].get("num_kraus", 4)
    designs = party_designs(cfg, [d, d])
    children = spawn_seeds(cfg.seed, cfg["grid"]["count"])
    points = [(i, c, d, num_kraus, designs, _envelope_opts(cfg)) for i, c in enumerate(children)]
    rows = run_points(_audit_point, points, tol, workers)
    header = ["index", "spawn_key", "empirical_death", "t_star", "ceil_t_c", "ordered", "mu", "lambda"]
    return ScenarioOutput(
        results={"n_rows": len(rows), "violations": sum(not r["ordered"] for r in rows)},
        tables={"audit": [header] + [[r[k] for k in header] for r in rows]},
        death_table=[{"index": r["index"], "death": r["empirical_death"]} for r in rows],
    )


def rainbow_mutual_info(cfg, tol, workers) -> ScenarioOutput:
    points = []
    for n in cfg["grid"]["n"]:
        chs = party_channels(cfg, [2] * n, {"kind": "depolarizing", "p": 0.5})
        points.append((n, chs, cfg["t_max"]))
    res = run_points(_rainbow_point, points, tol, workers)
    rows = [["n", "t", "mi_half", "mi_half_per_n", "negativity_half"]]
    for r in res:
        for t, (mi, neg) in enumerate(zip(r["mi"], r["negativity"])):
            rows.append([r["n"], t, mi, mi / r["n"], neg])
    with use_tolerances(tol):
        t_star = certify(party_channels(cfg, [2], {"kind": "depolarizing", "p": 0.5})).t_star
    return ScenarioOutput(
        results={"t_star": t_star, "mi_half_per_n": {r["n"]: [v / r["n"] for v in r["mi"]] for r in res}},
        tables={"mutual_info": rows},
    )


def custom(cfg, tol, workers) -> ScenarioOutput:
    dims = list(cfg["dims"])
    with use_tolerances(tol):
        chs = party_channels(cfg, dims, {})
        designs = party_designs(cfg, dims)
        rho = build_state(cfg, dims)
        per_party, threshold, cert = analyze_parties(chs, designs, _envelope_opts(cfg))
        cuts = all_bipartitions(len(dims)) if len(dims) > 1 else []
        tables = {}
        deaths = []
        if cuts:
            scan = sudden_death_scan(rho, LocalProductChannel(chs), cuts, cfg["t_max"])
            tables["trajectory"] = _trajectory_rows(scan)
            deaths = [{"cut_id": cid, "death": t} for cid, t in scan.death.items()]
        if cfg["emit_weights"]:
            text = weights_to_csv(weights(rho, designs))
            tables["weights"] = [line.split(",") for line in text.splitlines()]
    return ScenarioOutput(
        results={"dims": dims},
        tables=tables,
        per_party=per_party,
        threshold=threshold,
        certificate=cert,
        death_table=deaths,
    )


SCENARIO_RUNNERS: dict[str, Callable[[ScenarioConfig, Tolerances, int], ScenarioOutput]] = {
    "depolarization-threshold": depolarization_threshold,
    "werner-death": werner_death,
    "ghz-death": ghz_death,
    "ring-counterexample": ring_counterexample,
    "random-channel-audit": random_channel_audit,
    "rainbow-mutual-info": rainbow_mutual_info,
    "custom": custom,
}
