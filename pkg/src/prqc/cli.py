"""Command-line front end: ``prqc run|validate <config>`` and ``prqc ledger ...``.

Exit status is 0 on success, 1 on a runtime failure and 2 on an invalid
configuration or ledger.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import platform
import sys
import traceback
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import __version__
from .circuit import FIELDS, LayerMode, LayerSpec, ParameterVector, PulseSchedule, total_interaction_time
from .ledger import LedgerError, WarmStartLedger, canonical_json, default_path, fingerprint, make_entry
from .models import HamiltonianSpec, InteractionProfile, ModelError, ProfileKind, validate
from .noise import NoiseModel, ZNEConfig, noisy_moments, noisy_reoptimize, zne_estimate, shot_estimate
from .optimize import (
    GrapeConfig,
    OptimizerConfig,
    Problem,
    depth_sweep,
    grape_optimize,
    minimize,
    precompile_scaling,
)
from .quench import Preparation, QuenchConfig, thermalization_report, run_quench, long_time_average

log = logging.getLogger("prqc")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    def __init__(self, messages: list[str]):
        super().__init__("\n".join(messages))
        self.messages = messages


# configuration schema -------------------------------------------------------------


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProfileCfg(_Strict):
    kind: Literal["nearest_neighbor", "exponential", "power_law"] = "nearest_neighbor"
    range: Optional[float] = None

    def build(self) -> InteractionProfile:
        if self.kind == "nearest_neighbor":
            return InteractionProfile(ProfileKind.NEAREST_NEIGHBOR)
        default = 2.0 if self.kind == "power_law" else 1.0
        return InteractionProfile(ProfileKind(self.kind), self.range if self.range is not None else default)


class ModelCfg(_Strict):
    model: str
    n_sites: Optional[int] = None
    couplings: dict[str, float] = Field(default_factory=dict)
    profile: ProfileCfg = Field(default_factory=ProfileCfg)

    @model_validator(mode="after")
    def _check(self):
        errors = validate(
            {"model_kind": self.model, "n_sites": self.n_sites if self.n_sites is not None else 2, "couplings": self.couplings,
             "profile": self.profile.build()}
        )
        if errors:
            raise ValueError("; ".join(errors))
        return self

    def spec(self, n: Optional[int] = None) -> HamiltonianSpec:
        n = n if n is not None else self.n_sites
        if n is None:
            raise ValueError("n_sites is required")
        return HamiltonianSpec(self.model, n, dict(self.couplings), self.profile.build())


class LayersCfg(_Strict):
    mode: Literal["simultaneous", "quenched", "spin1_triple"] = "quenched"
    depth: int = Field(1, ge=1)
    depths: Optional[list[int]] = None
    free: Optional[list[str]] = None
    initial: Optional[str] = None
    init_duration: float = Field(0.1, gt=0)
    fermion_start: Literal["filled", "vacuum"] = "filled"

    @model_validator(mode="after")
    def _check(self):
        if self.free is not None:
            bad = set(self.free) - set(FIELDS[LayerMode(self.mode)])
            if bad:
                raise ValueError(f"unknown controls {sorted(bad)} for {self.mode} layers")
        if self.depths is not None and (not self.depths or min(self.depths) < 1):
            raise ValueError("depths must be positive")
        return self

    def all_depths(self) -> list[int]:
        return list(self.depths) if self.depths else [self.depth]


class OptimizerCfg(_Strict):
    engine: Literal["nelder-mead", "bfgs"] = "nelder-mead"
    restarts: int = Field(8, ge=1)
    warm_restarts: int = Field(1, ge=1)
    spread: float = Field(0.1, ge=0)
    max_evals: int = Field(5000, ge=1)
    window: int = Field(20, ge=1)
    ftol: float = Field(1e-10, ge=0)
    evaluate_only: bool = False

    def build(self, seed: int) -> OptimizerConfig:
        return OptimizerConfig(engine=self.engine, restarts=self.restarts, warm_restarts=self.warm_restarts,
                               spread=self.spread, max_evals=self.max_evals, window=self.window,
                               ftol=self.ftol, seed=seed)


class PrecompileCfg(_Strict):
    sizes: list[int]
    n_final: int = Field(ge=2)
    reoptimize_final: bool = False

    @field_validator("sizes")
    @classmethod
    def _sizes(cls, v):
        if not v or sorted(v) != v or min(v) < 2:
            raise ValueError("sizes must be a non-empty increasing list of integers >= 2")
        return v


class GrapeCfg(_Strict):
    total_time: float = Field(gt=0)
    dt: float = Field(0.1, gt=0)
    smoothness: float = Field(1e-3, ge=0)
    J_max: float = Field(1.0, gt=0)
    max_iter: int = Field(300, ge=1)

    @model_validator(mode="after")
    def _grid(self):
        n = round(self.total_time / self.dt)
        if n < 1 or abs(n * self.dt - self.total_time) > 1e-9:
            raise ValueError("total_time must be a positive multiple of dt")
        return self


class NoiseCfg(_Strict):
    gamma: float = Field(0.0, ge=0)
    shots: Optional[int] = Field(None, ge=1)
    sigma: float = Field(0.0, ge=0)


class ZneCfg(_Strict):
    factors: list[float] = Field(default_factory=lambda: [1.0, 1.5, 2.0, 2.5, 3.0])
    repeats: int = Field(1, ge=1)
    gamma_bases: list[float] = Field(default_factory=lambda: [5e-2, 5e-3])
    enabled: bool = True

    @model_validator(mode="after")
    def _factors(self):
        if len(set(self.factors)) < 2 or min(self.factors) < 1:
            raise ValueError("need at least two distinct amplification factors, all >= 1")
        if any(g <= 0 for g in self.gamma_bases):
            raise ValueError("gamma_bases must be positive")
        return self


class QuenchCfg(_Strict):
    hamiltonian: ModelCfg
    t_max: float = Field(200.0, gt=0)
    dt: float = Field(0.5, gt=0)
    window: tuple[float, float] = (100.0, 200.0)
    prepare: Literal["exact", "circuit"] = "exact"
    threshold: float = Field(0.02, gt=0)

    @model_validator(mode="after")
    def _grid(self):
        lo, hi = self.window
        if self.t_max < self.dt or not 0 <= lo < hi <= self.t_max:
            raise ValueError("need t_max >= dt and 0 <= window start < window end <= t_max")
        return self


EXPERIMENTS = ("optimize", "precompile", "grape", "zne_demo", "noisy_reoptimize", "quench", "thermalize")


class ExperimentConfig(_Strict):
    experiment: Literal["optimize", "precompile", "grape", "zne_demo", "noisy_reoptimize", "quench", "thermalize"]
    seed: int = 0
    output: str
    ledger: Optional[str] = None
    target: ModelCfg
    resource: Optional[ModelCfg] = None
    layers: Optional[LayersCfg] = None
    optimizer: OptimizerCfg = Field(default_factory=OptimizerCfg)
    precompile: Optional[PrecompileCfg] = None
    grape: Optional[GrapeCfg] = None
    noise: NoiseCfg = Field(default_factory=NoiseCfg)
    zne: ZneCfg = Field(default_factory=ZneCfg)
    quench: Optional[QuenchCfg] = None

    @model_validator(mode="after")
    def _sections(self):
        need = {
            "optimize": ("resource", "layers"),
            "precompile": ("resource", "layers", "precompile"),
            "grape": ("resource", "grape"),
            "zne_demo": ("resource", "layers"),
            "noisy_reoptimize": ("resource", "layers", "precompile"),
            "quench": ("quench",),
            "thermalize": ("quench",),
        }[self.experiment]
        missing = [s for s in need if getattr(self, s) is None]
        if missing:
            raise ValueError(f"experiment {self.experiment!r} needs section(s): {', '.join(missing)}")
        if self.experiment in ("optimize", "zne_demo", "grape", "quench", "thermalize") and self.target.n_sites is None:
            raise ValueError("target.n_sites is required for this experiment")
        if self.quench is not None and self.quench.prepare == "circuit" and (self.resource is None or self.layers is None
                                                                             or self.layers.initial is None):
            raise ValueError("circuit preparation needs a resource and layers.initial")
        if self.experiment == "noisy_reoptimize" and self.noise.gamma == 0 and self.zne.enabled:
            raise ValueError("zero-noise extrapolation needs noise.gamma > 0 (or zne.enabled: false)")
        return self

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.model_dump(mode="json"))


def _node_line(node: yaml.Node, loc: tuple) -> Optional[int]:
    line = node.start_mark.line + 1
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                if k.value == str(key):
                    line, node = k.start_mark.line + 1, v
                    break
            else:
                return line
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            return line
    return line


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    """Parse and fully validate a config; raises ConfigError with line-anchored messages."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError([f"{p}: cannot read config ({exc.strerror})"]) from exc
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{p}:{mark.line + 1}" if mark else str(p)
        raise ConfigError([f"{where}: YAML syntax error: {getattr(exc, 'problem', exc)}"]) from exc
    if not isinstance(data, dict):
        raise ConfigError([f"{p}:1: config must be a mapping"])
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            loc = tuple(x for x in err["loc"] if not (isinstance(x, str) and x.startswith("function-")))
            line = _node_line(root, loc) if root is not None else None
            where = f"{p}:{line}" if line else str(p)
            dotted = ".".join(str(x) for x in loc) or "<root>"
            msgs.append(f"{where}: {dotted}: {err['msg']}")
        raise ConfigError(msgs) from exc


# outputs ---------------------------------------------------------------------------


def write_columns(path: Path, columns: list[str], rows, fp: str):
    """Plain-text table with a single ``#`` header line carrying units and the fingerprint."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float)) if len(rows) else np.zeros((0, len(columns)))
    with open(path, "w") as fh:
        fh.write("# " + " ".join(columns) + f" | config={fp}\n")
        for r in rows:
            fh.write(" ".join(repr(float(x)) for x in r) + "\n")


def read_columns(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline()
    cols = header.lstrip("# ").split(" | ")[0].split()
    data = np.loadtxt(path, comments="#", ndmin=2)
    return cols, data


def _json_dump(path: Path, obj: Any, fp: str):
    obj = dict(obj)
    obj["config_fingerprint"] = fp
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


class Run:
    """Output directory plus the trace stream of one experiment."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.fp = cfg.fingerprint
        self.out = Path(cfg.output)
        self.out.mkdir(parents=True, exist_ok=True)
        self._trace = open(self.out / "trace.jsonl", "w")
        self.ledger = WarmStartLedger(cfg.ledger if cfg.ledger else default_path())

    def trace(self, record: dict):
        self._trace.write(canonical_json(_jsonable({**record, "config": self.fp})) + "\n")

    def close(self):
        self._trace.close()

    def columns(self, name: str, columns: list[str], rows):
        write_columns(self.out / name, columns, rows, self.fp)

    def json(self, name: str, obj):
        _json_dump(self.out / name, obj, self.fp)

    def ledger_entry(self, theta, n, metrics, problem_fp, target, resource, role="optimum"):
        meta = {"role": role, "config": self.fp, "target": target.to_dict(), "resource": resource.to_dict()}
        self.ledger.append(make_entry(problem_fp, theta, n, metrics, meta))


def _problem(cfg: ExperimentConfig) -> Problem:
    resource = cfg.resource.spec(cfg.target.n_sites or 2)
    layers = cfg.layers
    spec = LayerSpec.default(layers.mode, resource) if layers.free is None else LayerSpec(layers.mode, tuple(layers.free))
    return Problem(cfg.target.spec(cfg.target.n_sites or 2), resource, spec, layers.fermion_start, layers.init_duration)


def load_params(path: str):
    data = json.loads(Path(path).read_text())
    params = data.get("params", data)
    if "n_steps" in params:
        return PulseSchedule.from_dict(params)
    return ParameterVector.from_dict(params)


def _trace_records(run: Run, label: dict, trace):
    for r in trace.records:
        run.trace({**label, "evaluation": r.evaluation, "cost": r.cost, "params": r.params, **r.metrics})


def _run_optimize(run: Run):
    cfg = run.cfg
    problem = _problem(cfg)
    n = cfg.target.n_sites
    ev = problem.evaluator(n)
    opt = cfg.optimizer.build(cfg.seed)
    theta = load_params(cfg.layers.initial) if cfg.layers.initial else problem.initial(cfg.layers.depth)
    if cfg.optimizer.evaluate_only:
        metrics = ev.metrics(theta)
        rows = []
    else:
        trace = minimize(ev, theta, opt)
        theta, metrics = trace.best_theta, trace.final_metrics
        _trace_records(run, {"n_sites": n}, trace)
        rows = [[r.evaluation, r.cost, r.metrics.get("eps", math.nan), r.metrics.get("infidelity", math.nan)]
                for r in trace.records]
    run.columns("trace.tsv", ["evaluation", "cost[J]", "eps[J]", "infidelity[1]"], rows)
    run.ledger_entry(theta, n, metrics, problem.fingerprint, problem.target.resized(n), problem.resource.resized(n))
    run.json("params.json", {"params": theta.to_dict()})
    return metrics


def _run_precompile(run: Run):
    cfg = run.cfg
    problem = _problem(cfg)
    pc = cfg.precompile
    results = depth_sweep(problem, pc.sizes, pc.n_final, cfg.layers.all_depths(), cfg.optimizer.build(cfg.seed))
    rows, summary = [], {}
    for d, res in results.items():
        for n, tr in res.traces.items():
            _trace_records(run, {"depth": d, "n_sites": n}, tr)
            run.ledger_entry(tr.best_theta, n, tr.final_metrics, problem.fingerprint,
                             problem.target.resized(n), problem.resource.resized(n))
        m = res.final_metrics
        run.ledger_entry(res.theta, pc.n_final, m, problem.fingerprint, problem.target.resized(pc.n_final),
                         problem.resource.resized(pc.n_final), role="final")
        rows.append([d, m["eps"], m["infidelity"], total_interaction_time(res.theta)])
        summary[str(d)] = m
    run.columns("depth_metrics.tsv", ["depth[1]", "eps[J]", "infidelity[1]", "interaction_time[1/J]"], rows)
    return summary


def _run_grape(run: Run):
    cfg = run.cfg
    g = cfg.grape
    target = cfg.target.spec()
    resource = cfg.resource.spec(target.n_sites)
    problem = Problem(target, resource, LayerSpec.default("simultaneous", resource),
                      cfg.layers.fermion_start if cfg.layers else "filled")
    ev = problem.evaluator(target.n_sites)
    n_steps = int(round(g.total_time / g.dt))
    init = load_params(cfg.layers.initial) if (cfg.layers and cfg.layers.initial) else None
    if init is None:
        L = resource.profile.range_param if resource.profile.is_programmable else 1.0
        drive = resource.couplings.get("mu", resource.couplings.get("h", 0.0))
        init = PulseSchedule.constant(g.dt, n_steps, 0.5 * g.J_max, L, drive)
    sched, trace = grape_optimize(ev, init, GrapeConfig(g.dt, g.smoothness, g.J_max, g.max_iter))
    for r in trace.records:
        run.trace({"iteration": r.evaluation, "cost": r.cost, **r.metrics})
    t = (np.arange(sched.n_steps) + 0.5) * sched.dt
    run.columns("pulse.tsv", ["t[1/J]", "J[J]", "L[sites]", "h[J]"], np.column_stack([t, sched.values]))
    run.ledger_entry(sched, target.n_sites, trace.final_metrics, problem.fingerprint, target, resource)
    run.json("params.json", {"params": sched.to_dict()})
    return trace.final_metrics


def _run_zne(run: Run):
    cfg = run.cfg
    problem = _problem(cfg)
    n = cfg.target.n_sites
    ev = problem.evaluator(n)
    if cfg.layers.initial:
        theta = load_params(cfg.layers.initial)
    else:
        theta = minimize(ev, problem.initial(cfg.layers.depth), cfg.optimizer.build(cfg.seed)).best_theta
    state = ev.prepare(theta)
    T = total_interaction_time(theta)
    exact = ev.energy(theta)
    zcfg = ZNEConfig(tuple(cfg.zne.factors), 1, cfg.zne.repeats)
    rows, fits = [], []
    for b, gamma in enumerate(cfg.zne.gamma_bases):
        counter = [0]

        def sample(g, b=b):
            rng = np.random.default_rng([cfg.seed, b, counter[0]])
            counter[0] += 1
            mean, var = noisy_moments(state, ev.target_op, g, T)
            return shot_estimate(mean, var, cfg.noise.shots, rng)

        res = zne_estimate(sample, gamma, zcfg)
        rows += [[gamma, ge, v] for ge, v in res.table()]
        fits.append({"gamma_base": gamma, "intercept": res.value, "std_error": res.std_error, "slope": res.slope,
                     "noiseless": exact, "error": abs(res.value - exact)})
        run.trace(fits[-1])
    run.columns("zne.tsv", ["gamma_base[J]", "gamma_eff[J]", "energy[J]"], rows)
    return {"noiseless_energy": exact, "interaction_time": T, "fits": fits}


def _run_noisy(run: Run):
    cfg = run.cfg
    problem = _problem(cfg)
    pc = cfg.precompile
    opt = cfg.optimizer.build(cfg.seed)
    pre = precompile_scaling(problem, pc.sizes, pc.n_final, cfg.layers.depth, opt)
    ev = problem.evaluator(pc.n_final)
    noise = NoiseModel(cfg.noise.gamma, cfg.noise.shots, cfg.noise.sigma, cfg.seed)
    zne = ZNEConfig(tuple(cfg.zne.factors), 1, cfg.zne.repeats) if cfg.zne.enabled else None
    trace = noisy_reoptimize(pre.theta, ev, noise, zne, OptimizerConfig(
        engine=opt.engine, restarts=1, max_evals=opt.max_evals, window=opt.window, ftol=opt.ftol, seed=cfg.seed))
    _trace_records(run, {"n_sites": pc.n_final}, trace)
    rows = [[r.evaluation, r.cost, r.metrics["eps"], r.metrics["infidelity"]] for r in trace.records]
    run.columns("reoptimization.tsv", ["evaluation", "mitigated_cost[J]", "eps[J]", "infidelity[1]"], rows)
    run.ledger_entry(trace.best_theta, pc.n_final, trace.final_metrics, problem.fingerprint,
                     problem.target.resized(pc.n_final), problem.resource.resized(pc.n_final), role="noisy")
    return {"transferred": pre.final_metrics, "reoptimized": trace.final_metrics}


def _quench_config(cfg: ExperimentConfig) -> QuenchConfig:
    q = cfg.quench
    target = cfg.target.spec()
    if q.prepare == "circuit":
        prep = Preparation(target, cfg.resource.spec(target.n_sites), load_params(cfg.layers.initial))
    else:
        prep = Preparation(target)
    return QuenchConfig(prep, q.hamiltonian.spec(target.n_sites), q.t_max, q.dt, tuple(q.window))


def _run_quench(run: Run):
    qc = _quench_config(run.cfg)
    traj = run_quench(qc)
    n = traj.occupations.shape[1]
    run.columns("trajectory.tsv", ["t[1/J]"] + [f"n_{i}[1]" for i in range(1, n + 1)], traj.columns())
    lta = long_time_average(traj, qc.window)
    return {"energy": traj.energy, "time_average": lta.time_average, "diagonal_ensemble": lta.diagonal_ensemble}


def _run_thermalize(run: Run):
    qc = _quench_config(run.cfg)
    rep = thermalization_report(qc, run.cfg.quench.threshold)
    traj = rep.trajectory
    n = traj.occupations.shape[1]
    run.columns("trajectory.tsv", ["t[1/J]"] + [f"n_{i}[1]" for i in range(1, n + 1)], traj.columns())
    run.columns("thermal.tsv", ["site[1]", "time_average[1]", "diagonal_ensemble[1]", "thermal[1]", "deviation[1]"],
                [[s.site, s.time_average, s.diagonal_ensemble, s.thermal, s.deviation] for s in rep.sites])
    return rep.to_dict()


RUNNERS = {
    "optimize": _run_optimize,
    "precompile": _run_precompile,
    "grape": _run_grape,
    "zne_demo": _run_zne,
    "noisy_reoptimize": _run_noisy,
    "quench": _run_quench,
    "thermalize": _run_thermalize,
}


def run_experiment(cfg: ExperimentConfig) -> int:
    run = Run(cfg)
    run.json("metadata.json", {
        "config": cfg.model_dump(mode="json"),
        "seed": cfg.seed,
        "versions": {"prqc": __version__, "python": platform.python_version(), "numpy": np.__version__,
                     "scipy": __import__("scipy").__version__},
    })
    try:
        metrics = RUNNERS[cfg.experiment](run)
    except Exception as exc:  # runtime failure: keep partial artifacts
        run.json("error.json", {"error": type(exc).__name__, "message": str(exc), "traceback": traceback.format_exc()})
        log.error("run failed: %s", exc)
        return EXIT_RUNTIME
    finally:
        run.close()
    run.json("metrics.json", {"experiment": cfg.experiment, "metrics": metrics})
    return EXIT_OK


# ledger subcommands ----------------------------------------------------------------


def _ledger(path: Optional[str]) -> WarmStartLedger:
    p = Path(path) if path else default_path()
    if not p.exists():
        raise LedgerError(f"{p}: ledger file not found")
    return WarmStartLedger(p)


def _select(ledger: WarmStartLedger, ref: str):
    entries = list(ledger)
    if ref.isdigit():
        idx = int(ref)
        if idx >= len(entries):
            raise LedgerError(f"no entry with index {idx}")
        return entries[idx]
    parts = ref.split(":")
    if len(parts) != 4:
        raise LedgerError("entry reference must be an index or fingerprint:mode:depth:n_sites")
    e = ledger.get(parts[0], parts[1], int(parts[2]), int(parts[3]))
    if e is None:
        raise LedgerError(f"no entry {ref}")
    return e


def _fmt(x):
    return "-" if x is None else f"{x:.3e}"


def cmd_ledger(args) -> int:
    try:
        ledger = _ledger(args.ledger)
        if args.action == "list":
            for i, e in enumerate(ledger):
                print(f"{i:4d} {e.fingerprint} {e.mode:13s} depth={e.depth:<3d} N={e.n_sites:<5d} "
                      f"eps={_fmt(e.metrics.get('eps'))} infidelity={_fmt(e.metrics.get('infidelity'))}")
            return EXIT_OK
        if not args.ref:
            raise LedgerError(f"ledger {args.action} needs an entry reference")
        e = _select(ledger, args.ref)
        if args.action == "show":
            print(e.to_json())
            return EXIT_OK
        payload = {"fingerprint": e.fingerprint, "n_sites": e.n_sites, "params": e.params,
                   "metrics": e.metrics, "target": e.meta.get("target"), "resource": e.meta.get("resource")}
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    except LedgerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="prqc", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    v = sub.add_parser("validate", help="validate a config without running it")
    v.add_argument("config")
    lg = sub.add_parser("ledger", help="inspect the warm-start ledger")
    lg.add_argument("action", choices=["list", "show", "export"])
    lg.add_argument("ref", nargs="?", help="entry index or fingerprint:mode:depth:n_sites")
    lg.add_argument("--ledger", help="ledger path (default: $PRQC_LEDGER or ./prqc-ledger.jsonl)")
    lg.add_argument("-o", "--output", help="export destination (default: stdout)")
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "ledger":
        return cmd_ledger(args)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        for m in exc.messages:
            print(f"error: {m}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(f"ok: {args.config} ({cfg.experiment}, fingerprint {cfg.fingerprint})")
        return EXIT_OK
    return run_experiment(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
