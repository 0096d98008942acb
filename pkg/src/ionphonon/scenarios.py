"""Experiment configs, named output records and the embedded figure scenarios.

Config files are JSON with frequencies entered as nu/2pi in kHz.  A file holds
one experiment object or a list of them.
"""
from __future__ import annotations

import itertools
import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from ionphonon import analytic, hamiltonians, metrology
from ionphonon.fock import (SPIN, StateVector, expectation, fidelity, fock_state, number_op,
                            occupation_distribution, reduced_overlap)
from ionphonon.hamiltonians import HamiltonianSpec
from ionphonon.propagate import DEFAULT_TOL, evolve, format_float

SCHEMA_VERSION = 1
SPIN_STATES = ("up", "down", "plus")
SWEEPABLE = ("xi_khz", "omega_khz", "drive_khz", "g_b_khz", "eta_b", "phi")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class TimeGrid:
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise ConfigError("time grid needs count >= 2")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)) or not 0 <= self.start < self.stop:
            raise ConfigError(f"time grid needs 0 <= start < stop, got [{self.start}, {self.stop}]")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class InitialState:
    occupations: Mapping[str, int] = field(default_factory=dict)
    spin: str | None = None

    def __post_init__(self):
        if self.spin is not None and self.spin not in SPIN_STATES:
            raise ConfigError(f"spin must be one of {SPIN_STATES}, got {self.spin!r}")
        object.__setattr__(self, "occupations", {k: int(v) for k, v in self.occupations.items()})

    def build(self, space) -> StateVector:
        if self.spin == "plus":
            down = fock_state(space, self.occupations, "down").amplitudes
            up = fock_state(space, self.occupations, "up").amplitudes
            return StateVector(space, (down + up) / math.sqrt(2.0))
        return fock_state(space, self.occupations, self.spin)

    def to_dict(self) -> dict:
        d: dict[str, Any] = dict(self.occupations)
        if self.spin is not None:
            d["spin"] = self.spin
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "InitialState":
        d = dict(d)
        spin = d.pop("spin", None)
        return cls(occupations=d, spin=spin)


@dataclass(frozen=True)
class MetrologySpec:
    """Fock-measurement CFI on the c mode after a beam splitter, per initial ``|n,0,n>``."""

    n_values: tuple[int, ...]
    t_f: float
    step: float = 1e-3

    def __post_init__(self):
        if not self.n_values or min(self.n_values) < 0:
            raise ConfigError("n_values must be non-empty and non-negative")
        if not self.t_f > 0 or not self.step > 0:
            raise ConfigError("t_f and step must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    scenario: str
    hamiltonian: HamiltonianSpec
    initial_state: InitialState = field(default_factory=InitialState)
    times: TimeGrid | None = None
    outputs: tuple[str, ...] = ()
    sweep: tuple[tuple[str, tuple[float, ...]], ...] = ()
    metrology: MetrologySpec | None = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if not re.fullmatch(r"[A-Za-z0-9_.=-]+", self.name):
            raise ConfigError(f"name {self.name!r} must be a plain file stem")
        if self.metrology is None:
            if self.times is None:
                raise ConfigError("trajectory experiments need a time grid")
            for out in self.outputs:
                parse_output(out)
        for param, values in self.sweep:
            if param not in SWEEPABLE:
                raise ConfigError(f"cannot sweep {param!r}; choose from {SWEEPABLE}")
            if not values or not all(math.isfinite(v) for v in values):
                raise ConfigError(f"sweep values for {param!r} must be finite and non-empty")

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "scenario": self.scenario,
            "hamiltonian": self.hamiltonian.to_config(),
            "initial_state": self.initial_state.to_dict(),
            "tol": self.tol,
        }
        if self.times is not None:
            d["times"] = {"start": self.times.start, "stop": self.times.stop, "count": self.times.count}
        if self.outputs:
            d["outputs"] = list(self.outputs)
        if self.sweep:
            d["sweep"] = {p: list(v) for p, v in self.sweep}
        if self.metrology is not None:
            d["metrology"] = {"n_values": list(self.metrology.n_values), "t_f": self.metrology.t_f,
                              "step": self.metrology.step}
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExperimentConfig":
        known = {"schema_version", "name", "scenario", "hamiltonian", "initial_state", "times",
                 "outputs", "sweep", "metrology", "tol"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {d.get('schema_version')!r}")
        try:
            times = d.get("times")
            met = d.get("metrology")
            return cls(
                name=d.get("name", d.get("scenario", "custom")),
                scenario=d.get("scenario", "custom"),
                hamiltonian=HamiltonianSpec.from_config(d["hamiltonian"]),
                initial_state=InitialState.from_dict(d.get("initial_state", {})),
                times=TimeGrid(float(times["start"]), float(times["stop"]), int(times["count"])) if times else None,
                outputs=tuple(d.get("outputs", ())),
                sweep=tuple((p, tuple(float(x) for x in v)) for p, v in d.get("sweep", {}).items()),
                metrology=MetrologySpec(tuple(int(n) for n in met["n_values"]), float(met["t_f"]),
                                        float(met.get("step", 1e-3))) if met else None,
                tol=float(d.get("tol", DEFAULT_TOL)),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def with_overrides(self, n_max: int | None = None, tol: float | None = None) -> "ExperimentConfig":
        cfg = self
        if n_max is not None:
            cfg = replace(cfg, hamiltonian=cfg.hamiltonian.with_n_max(n_max))
        if tol is not None:
            cfg = replace(cfg, tol=tol)
        return cfg

    def points(self) -> list[tuple[dict[str, float], "ExperimentConfig"]]:
        """Cartesian product of the sweep, in declaration order."""
        if not self.sweep:
            return [({}, self)]
        params = [p for p, _ in self.sweep]
        out = []
        for combo in itertools.product(*(v for _, v in self.sweep)):
            values = dict(zip(params, combo))
            ham = self.hamiltonian.to_config()
            ham.update(values)
            tag = "_".join(f"{p}={format_float(v)}" for p, v in values.items())
            out.append((values, replace(self, name=f"{self.name}_{tag}", sweep=(),
                                        hamiltonian=HamiltonianSpec.from_config(ham))))
        return out


def load_configs(text: str) -> list[ExperimentConfig]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    items = data if isinstance(data, list) else [data]
    if not items or not all(isinstance(x, dict) for x in items):
        raise ConfigError("config must be an object or a non-empty list of objects")
    return [ExperimentConfig.from_dict(x) for x in items]


# ---------------------------------------------------------------- outputs

_TWIN = re.compile(r"p_(\d+)")
_PAIR = re.compile(r"p_(\d+)_(\d+)")
_SPIN_PAIR = re.compile(r"p_(up|down)_(\d+)_(\d+)")
_NBAR = re.compile(r"nbar_([abc])")


def parse_output(name: str) -> tuple:
    """Record grammar: ``p_<n>`` twin Fock on (b, c), ``p_<N1>_<N2>`` on (a, c),
    ``p_<up|down>_<N1>_<N2>`` on (spin, a, c), ``nbar_<mode>``,
    ``fidelity_tmss`` and ``fidelity_noon``."""
    for pattern, kind in ((_SPIN_PAIR, "spin_pair"), (_PAIR, "pair"), (_TWIN, "twin"), (_NBAR, "nbar")):
        m = pattern.fullmatch(name)
        if m:
            groups = tuple(int(g) if g.isdigit() else g for g in m.groups())
            return (kind,) + groups
    if name in ("fidelity_tmss", "fidelity_noon"):
        return (name,)
    raise ConfigError(f"unknown output {name!r}")


def squeeze_params(spec: HamiltonianSpec, t: float) -> analytic.SqueezeParams:
    return analytic.SqueezeParams.from_drive(spec.omega_drive_amp, spec.xi, spec.omega, t, spec.phi)


def bs_params(spec: HamiltonianSpec) -> analytic.BsParams:
    if spec.kind == "spin_conditional":
        return analytic.BsParams.conditional(spec.g_b, spec.xi, spec.omega)
    return analytic.BsParams.from_drive(spec.omega_drive_amp, spec.xi, spec.omega, spec.phi)


def _basis(space, occupations: Mapping[str, int], spin: str | None = None) -> StateVector:
    labels = ([SPIN] if spin else []) + list(occupations)
    sub = space.restrict(labels)
    return fock_state(sub, occupations, spin)


def _record_fn(cfg: ExperimentConfig, name: str) -> Callable[[StateVector, float], float]:
    spec = cfg.hamiltonian
    space = spec.space()
    parsed = parse_output(name)
    kind = parsed[0]
    if kind == "twin":
        target = _basis(space, {"b": parsed[1], "c": parsed[1]})
        return lambda st, t: reduced_overlap(st, target)
    if kind == "pair":
        target = _basis(space, {"a": parsed[1], "c": parsed[2]})
        return lambda st, t: reduced_overlap(st, target)
    if kind == "spin_pair":
        target = _basis(space, {"a": parsed[2], "c": parsed[3]}, parsed[1])
        return lambda st, t: reduced_overlap(st, target)
    if kind == "nbar":
        op = number_op(space, parsed[1])
        return lambda st, t: expectation(st, op).real
    if kind == "fidelity_tmss":
        return lambda st, t: analytic.tmss_fidelity(st, squeeze_params(spec, t))
    n = cfg.initial_state.occupations.get("a", 0)
    noon = analytic.noon_state(n, min(space.n_max("a"), space.n_max("c")))
    return lambda st, t: fidelity(st, noon)


def _analytic_fn(cfg: ExperimentConfig, name: str) -> Callable[[float], float] | None:
    """Closed-form companion of a record, when one exists for this Hamiltonian."""
    spec = cfg.hamiltonian
    parsed = parse_output(name)
    occ = cfg.initial_state.occupations
    vacuum = not any(occ.values())
    if spec.kind in ("driven_a", "effective_tmss") and vacuum:
        if parsed[0] == "twin":
            return lambda t: analytic.tmss_prob(parsed[1], squeeze_params(spec, t).r)
        if parsed[0] == "nbar" and parsed[1] in "bc":
            return lambda t: math.sinh(squeeze_params(spec, t).r) ** 2
    n1, n2 = occ.get("a", 0), occ.get("c", 0)
    if spec.kind in ("driven_b", "effective_bs") and parsed[0] == "pair" and not occ.get("b", 0):
        eps = bs_params(spec).epsilon
        return lambda t: analytic.bs_coefficient(n1, n2, parsed[1], parsed[2], eps * t) ** 2
    if spec.kind == "spin_conditional" and parsed[0] == "spin_pair" and cfg.initial_state.spin in ("up", "down"):
        if parsed[1] != cfg.initial_state.spin:
            return lambda t: 0.0
        if parsed[1] == "down":
            hit = float((parsed[2], parsed[3]) == (n1, n2))
            return lambda t: hit
        eps = bs_params(spec).epsilon
        return lambda t: analytic.bs_coefficient(n1, n2, parsed[2], parsed[3], eps * t) ** 2
    return None


@dataclass
class RunResult:
    name: str
    columns: dict[str, np.ndarray]
    final: dict[str, float]
    diagnostics: dict[str, float]
    sweep: dict[str, float] = field(default_factory=dict)


def run_trajectory(cfg: ExperimentConfig) -> RunResult:
    """Propagate one (sweep-free) trajectory experiment and evaluate its records."""
    spec = cfg.hamiltonian
    H = hamiltonians.build(spec)
    psi0 = cfg.initial_state.build(H.space)
    times = cfg.times.values()
    traj = evolve(H, psi0, times, tol=cfg.tol)
    columns: dict[str, np.ndarray] = {"t": times}
    for name in cfg.outputs:
        fn = _record_fn(cfg, name)
        columns[name] = np.array([fn(st, t) for st, t in zip(traj.states, times)])
        exact = _analytic_fn(cfg, name)
        if exact is not None:
            columns[f"{name}_analytic"] = np.array([exact(t) for t in times])
    edge = {}
    for label in H.space.labels:
        if label != SPIN:
            edge[f"edge_population_{label}"] = max(float(occupation_distribution(st, label)[-1]) for st in traj.states)
    diagnostics = {"substeps": traj.stats["substeps"], "error_bound": traj.stats["error_bound"],
                   "max_norm_drift": traj.stats["max_norm_drift"], **edge}
    final = {k: float(v[-1]) for k, v in columns.items() if k != "t"}
    return RunResult(cfg.name, columns, final, diagnostics)


# ------------------------------------------------------------- metrology

def bs_probability_model(spec: HamiltonianSpec, n: int, t_f: float, tol: float) -> metrology.ProbabilityModel:
    """c-mode Fock distribution at ``t_f`` from ``|n,0,n>`` as a function of ``lambda = eps t_f``.

    The drive is rescaled as ``Omega_b = lambda omega / (xi t_f)``.
    """
    space = spec.space()
    psi0 = fock_state(space, {"a": n, "c": n})

    def evaluate(lam: float) -> np.ndarray:
        drive = lam * spec.omega / (spec.xi * t_f)
        H = hamiltonians.build(replace(spec, omega_drive_amp=drive))
        traj = evolve(H, psi0, [t_f], tol=tol)
        return occupation_distribution(traj.states[-1], "c")

    return metrology.ProbabilityModel(evaluate)


def bs_fock_cfi(spec: HamiltonianSpec, n: int, t_f: float, step: float = 1e-3,
                tol: float = 1e-11) -> tuple[float, metrology.CfiResult]:
    """``(lambda_0, CFI result)`` at the drive given in ``spec``."""
    lam0 = bs_params(spec).epsilon * t_f
    model = bs_probability_model(spec, n, t_f, tol)
    return lam0, metrology.cfi_detailed(model, lam0, step)


def _cfi_row(args) -> dict[str, float]:
    spec, n, t_f, step, tol = args
    lam0, res = bs_fock_cfi(spec, n, t_f, step, min(tol, 1e-11))
    closed = metrology.closed_form_qfi("bs_epsilon", n=n)
    return {"n": n, "lambda": lam0, "cfi_lambda": res.value, "cfi_epsilon": metrology.rate_convention(res.value, t_f),
            "qfi_lambda": closed, "qfi_epsilon": metrology.rate_convention(closed, t_f),
            "excluded_mass": res.excluded_mass, "deficit": res.deficit}


def run_metrology(cfg: ExperimentConfig, jobs: int = 1) -> RunResult:
    met = cfg.metrology
    tasks = [(cfg.hamiltonian, n, met.t_f, met.step, cfg.tol) for n in met.n_values]
    rows = parallel_map(_cfi_row, tasks, jobs)
    columns = {k: np.array([r[k] for r in rows]) for k in rows[0]}
    final = {f"cfi_lambda_n{int(r['n'])}": r["cfi_lambda"] for r in rows}
    diagnostics = {"max_excluded_mass": float(columns["excluded_mass"].max()),
                   "max_deficit": float(columns["deficit"].max())}
    return RunResult(cfg.name, columns, final, diagnostics)


def parallel_map(fn, items: Sequence, jobs: int) -> list:
    """Ordered map, in worker processes when ``jobs > 1``."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> list[RunResult]:
    if cfg.metrology is not None:
        return [run_metrology(cfg, jobs)]
    points = cfg.points()
    results = parallel_map(run_trajectory, [p for _, p in points], jobs)
    for (values, _), res in zip(points, results):
        res.sweep = values
    return results


# ------------------------------------------------------------- scenarios

def _cfg(name: str, ham: dict, **kw) -> ExperimentConfig:
    d = {"schema_version": SCHEMA_VERSION, "name": name, "scenario": name.split("_")[0], "hamiltonian": ham, **kw}
    return ExperimentConfig.from_dict(d)


def _tmss_drive(**extra) -> dict:
    return {"kind": "driven_a", "xi_khz": 0.2, "omega_khz": 20.0, "drive_khz": 3.5, "phi": math.pi / 8,
            "n_max": 20, **extra}


def embedded_scenarios() -> dict[str, list[ExperimentConfig]]:
    """Default configs for every figure, with fixed default parameters."""
    fig5 = {"kind": "spin_conditional", "xi_khz": 0.2, "omega_khz": 18.0, "g_b_khz": 5.5, "eta_b": 0.06, "n_max": 10}
    fig6 = {"kind": "spin_conditional", "xi_khz": 0.3, "omega_khz": 15.8, "g_b_khz": 6.3, "eta_b": 0.05,
            "include_ac_stark": True, "n_max": 10}
    fig3 = {"kind": "driven_b", "xi_khz": 0.2, "omega_khz": 17.0, "drive_khz": 6.5, "n_max": 20}
    return {
        "fig1": [_cfg("fig1", _tmss_drive(), times={"start": 0, "stop": 4, "count": 81},
                      outputs=["p_0", "p_1", "p_2", "nbar_b"])],
        "fig2a": [_cfg("fig2a", _tmss_drive(), times={"start": 0, "stop": 4, "count": 41},
                       outputs=["fidelity_tmss"], sweep={"omega_khz": [14.0, 17.0, 20.0]})],
        "fig2b": [_cfg("fig2b", _tmss_drive(), times={"start": 0, "stop": 4, "count": 2},
                       outputs=["fidelity_tmss"],
                       sweep={"omega_khz": [14.0, 17.0, 20.0], "drive_khz": [1.0, 2.0, 3.0, 3.5, 4.0]})],
        "fig3": [_cfg("fig3", fig3, initial_state={"a": 2, "c": 2}, times={"start": 0, "stop": 6.5, "count": 131},
                      outputs=["p_2_2", "p_3_1", "p_1_3", "p_4_0", "p_0_4"])],
        "fig4": [_cfg("fig4", {"kind": "driven_b", "xi_khz": 0.2, "omega_khz": 20.0, "drive_khz": 4.5, "n_max": 12},
                      metrology={"n_values": [0, 1, 2, 3, 4, 5], "t_f": 1.0, "step": 1e-3})],
        "fig5": [
            _cfg("fig5_swap", fig5, initial_state={"a": 1, "spin": "up"},
                 times={"start": 0, "stop": 8.2, "count": 165}, outputs=["p_up_1_0", "p_up_0_1"]),
            _cfg("fig5_fredkin", fig5, initial_state={"a": 1, "c": 1, "spin": "up"},
                 times={"start": 0, "stop": 8.2, "count": 165}, outputs=["p_up_1_1"]),
            _cfg("fig5_idle", fig5, initial_state={"a": 1, "spin": "down"},
                 times={"start": 0, "stop": 8.2, "count": 165}, outputs=["p_down_1_0"]),
        ],
        "fig6": [_cfg("fig6", fig6, initial_state={"a": 2, "spin": "plus"},
                      times={"start": 0, "stop": 3.0, "count": 151}, outputs=["fidelity_noon"])],
    }

