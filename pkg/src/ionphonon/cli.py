"""``ionphonon`` command line: figure scenarios, custom configs, trap parameters, acceptance suite."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from ionphonon import physconst
from ionphonon.propagate import PropagationError, write_csv
from ionphonon.scenarios import ConfigError, ExperimentConfig, RunResult, embedded_scenarios, load_configs, run_experiment

EXIT_OK = 0
EXIT_FAILED_CHECKS = 1
EXIT_INVALID = 2
EXIT_PROPAGATION = 3

log = logging.getLogger("ionphonon")


def _probability_columns_ok(columns: dict[str, np.ndarray]) -> bool:
    for name, vals in columns.items():
        if name.startswith(("p_", "fidelity")) and (np.min(vals) < -1e-12 or np.max(vals) > 1 + 1e-9):
            return False
    return True


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


def _write_results(cfg: ExperimentConfig, results: list[RunResult], out: Path) -> dict:
    runs = []
    for res in results:
        if not _probability_columns_ok(res.columns):
            raise PropagationError(f"{res.name}: probability outside [0, 1 + 1e-9]")
        csv_name = f"{res.name}.csv"
        write_csv(out / csv_name, res.columns)
        runs.append({"name": res.name, "csv": csv_name, "sweep": res.sweep,
                     "final": res.final, "diagnostics": res.diagnostics})
    if cfg.sweep:
        keys = list(results[0].sweep) + [k for k in results[0].final]
        table = {k: [r.sweep[k] if k in r.sweep else r.final[k] for r in results] for k in keys}
        write_csv(out / f"{cfg.name}_sweep.csv", table)
    return {"config": cfg.to_dict(), "weak_coupling_violated": cfg.hamiltonian.weak_coupling_violated, "runs": runs}


def _resolve(target: str) -> tuple[str, list[ExperimentConfig]]:
    scenarios = embedded_scenarios()
    if target in scenarios:
        return target, scenarios[target]
    path = Path(target)
    if not path.is_file():
        raise ConfigError(f"{target!r} is neither a scenario ({', '.join(scenarios)}, params) nor a config file")
    return path.stem, load_configs(path.read_text(encoding="utf-8"))


def cmd_run(args) -> int:
    if args.target == "params":
        return cmd_params(args)
    label, configs = _resolve(args.target)
    configs = [c.with_overrides(n_max=args.nmax, tol=args.tol) for c in configs]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"schema_version": 1, "target": label, "experiments": []}
    for cfg in configs:
        log.info("running %s", cfg.name)
        results = run_experiment(cfg, jobs=args.jobs)
        summary["experiments"].append(_write_results(cfg, results, out))
    text = json.dumps(_plain(summary), indent=2, sort_keys=True)
    (out / f"{label}_summary.json").write_text(text + "\n", encoding="utf-8")
    print(f"wrote {sum(len(e['runs']) for e in summary['experiments'])} run(s) to {out}")
    return EXIT_OK


def _trap(args) -> physconst.TrapConfig:
    if not getattr(args, "trap", None):
        return physconst.calcium_trap()
    data = json.loads(Path(args.trap).read_text(encoding="utf-8"))
    try:
        return physconst.TrapConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_params(args) -> int:
    cfg = _trap(args)
    out = {"trap": cfg.to_dict(), "derived": physconst.derived_parameters(cfg)}
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_verify(args) -> int:
    from ionphonon import acceptance

    logging.getLogger("ionphonon.hamiltonians").setLevel(logging.ERROR)
    names = args.only or None
    unknown = set(names or ()) - set(acceptance.CHECKS)
    if unknown:
        raise ConfigError(f"unknown criteria: {sorted(unknown)}")
    results = acceptance.run_all(names)
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failed: {', '.join(failed)}" if failed else ""))
    return EXIT_FAILED_CHECKS if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ionphonon", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a figure scenario or a JSON config file")
    run.add_argument("target", help="fig1, fig2a, fig2b, fig3, fig4, fig5, fig6, params or a config path")
    run.add_argument("--out", default="results", help="output directory (default: results)")
    run.add_argument("--jobs", type=int, default=1, help="parallel sweep points")
    run.add_argument("--nmax", type=int, default=None, help="override the Fock truncation of every mode")
    run.add_argument("--tol", type=float, default=None, help="override the propagation tolerance")
    run.add_argument("--trap", default=None, help="trap JSON for 'run params'")
    run.set_defaults(func=cmd_run)

    params = sub.add_parser("params", help="print z0, xi and eta_b for a trap as JSON")
    params.add_argument("--trap", default=None, help="JSON with TrapConfig fields in SI units")
    params.set_defaults(func=cmd_params)

    verify = sub.add_parser("verify", help="run the acceptance suite")
    verify.add_argument("--only", nargs="*", help="subset of criteria, e.g. A1 A7")
    verify.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except PropagationError as exc:
        print(f"propagation failed: {exc}", file=sys.stderr)
        return EXIT_PROPAGATION
    except (ConfigError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
