"""Command line entry point: ``run``, ``validate`` and ``explain``.

Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
3 violated theorem hypothesis, 4 search horizon exceeded.  Failures also
print a one-line JSON object ``{"error": <class>, "message": ...}`` on
stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .. import __version__
from .._tolerances import PROFILES
from ..exceptions import ConfigError, DesignError, DimensionMismatchError, HorizonExceededError, HypothesisViolation
from .config import load_config, read_document, validate_document
from .report import RunReport, explain, write_tables
from .scenarios import SCENARIO_RUNNERS

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_HORIZON = 0, 1, 2, 3, 4


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, HypothesisViolation):
        return EXIT_HYPOTHESIS
    if isinstance(exc, HorizonExceededError):
        return EXIT_HORIZON
    if isinstance(exc, (ConfigError, DesignError, DimensionMismatchError)):
        return EXIT_CONFIG
    return EXIT_FAILURE


def run(config_path, out_dir=None, workers: int = 1, seed_override=None, tolerance_profile: str = "default") -> RunReport:
    cfg = load_config(config_path)
    if seed_override is not None:
        cfg = cfg.with_seed(seed_override)
    tol = PROFILES[tolerance_profile].replace(**cfg["tolerances"])
    out = Path(out_dir) if out_dir is not None else cfg.resolve(cfg["output"]["dir"])
    start = time.perf_counter()
    result = SCENARIO_RUNNERS[cfg.scenario](cfg, tol, max(1, int(workers)))
    elapsed = time.perf_counter() - start
    artifacts = write_tables(out, cfg.scenario, cfg.seed, result.tables)
    report = RunReport(
        scenario=cfg.scenario,
        seed=cfg.seed,
        config=cfg.raw,
        tool_version=__version__,
        tolerance_profile=tolerance_profile,
        seed_provenance={
            "root_seed": cfg.seed,
            "overridden": seed_override is not None,
            "generator": "numpy Philox via SeedSequence.spawn",
        },
        results=result.results,
        per_party=result.per_party,
        threshold=result.threshold,
        certificate=result.certificate,
        death_table=result.death_table,
        artifacts=artifacts,
        wall_clock_s=elapsed,
    )
    (out / f"{cfg.scenario}_seed{cfg.seed}_report.json").write_text(report.to_json(), encoding="utf-8")
    return report


def validate(config_path) -> list[str]:
    doc = read_document(config_path)
    return validate_document(doc, Path(config_path).resolve().parent)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="disentangle-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="execute a scenario and write report + CSV artifacts")
    p_run.add_argument("--config", required=True, metavar="PATH")
    p_run.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
    p_run.add_argument("--workers", type=int, default=1, metavar="N")
    p_run.add_argument("--seed-override", type=int, metavar="K")
    p_run.add_argument("--tolerance-profile", choices=sorted(PROFILES), default="default")

    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("--config", required=True, metavar="PATH")

    p_exp = sub.add_parser("explain", help="render a report JSON as text")
    p_exp.add_argument("report", metavar="REPORT")
    return parser


def _fail(exc: BaseException) -> int:
    code = exit_code_for(exc)
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "run":
            report = run(args.config, args.out, args.workers, args.seed_override, args.tolerance_profile)
            sys.stdout.write(explain(report))
        elif args.verb == "validate":
            msgs = validate(args.config)
            if msgs:
                raise ConfigError("invalid configuration:\n  " + "\n  ".join(msgs))
            print("ok")
        else:
            with open(args.report, encoding="utf-8") as fh:
                sys.stdout.write(explain(json.load(fh)))
    except Exception as exc:  # noqa: BLE001 - mapped onto exit codes
        return _fail(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
