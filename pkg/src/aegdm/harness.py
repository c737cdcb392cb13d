"""Experiment harness: configs, the step loop, grid search, CSV artifacts.

A run is fully determined by (config, seed): the RNG is owned by the run,
problems are pure evaluators, and every output file is written with
locale-independent 17-significant-digit floats, so replays are
byte-identical.  Each energy-method run streams its own stability check
(monotone energy plus the exact per-step recurrence) and ships the result
as an attached report.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import diagnostics
from .diagnostics import BoundReport, TrajectoryTrace
from .optimizers import (
    BaselineState,
    HyperParams,
    NonPositiveShiftedValue,
    OptimizerState,
    adam_step,
    aegd_step,
    aegdm_step,
    sgd_step,
    sgdm_step,
)
from .problems import (
    LeastSquaresProblem,
    LogisticProblem,
    OnlineQuadraticSequence,
    Quadratic,
    Rosenbrock,
    load_dataset_csv,
    make_synthetic_dataset,
)

__all__ = [
    "ConfigError",
    "ParseError",
    "UnknownKey",
    "RangeError",
    "MismatchedProblem",
    "Schedule",
    "ExperimentConfig",
    "RunResult",
    "parse_config",
    "load_config",
    "build_problem",
    "run_experiment",
    "iterations_to_gap",
    "grid_search",
    "compare_optimizers",
    "emit_csv",
    "emit_grid_csv",
    "emit_comparison_csv",
    "DEFAULT_LR",
    "GAP_THRESHOLDS",
]

OPTIMIZERS = ("aegdm", "aegd", "sgd", "sgdm", "adam")
ENERGY_OPTIMIZERS = ("aegdm", "aegd")
DEFAULT_LR = {"aegdm": 0.01, "aegd": 0.1, "sgd": 0.1, "sgdm": 0.1, "adam": 0.001}
GAP_THRESHOLDS = (1e-3, 1e-6, 1e-8)

_STEP_FNS = {
    "aegdm": aegdm_step,
    "aegd": aegd_step,
    "sgd": sgd_step,
    "sgdm": sgdm_step,
    "adam": adam_step,
}

_PROBLEM_KEYS = {
    "rosenbrock": set(),
    "quadratic": {"dim", "cond"},
    "least_squares": {"n", "m", "noise", "data_seed", "l2", "data_csv"},
    "logistic": {"n", "m", "noise", "data_seed", "l2", "data_csv"},
    "online_quadratic": {"dim", "data_seed", "box_lo", "box_hi"},
}

_OPTIMIZER_KEYS = {"name", "lr", "mu", "c", "variant", "beta1", "beta2", "eps"}
_RUN_KEYS = {"iters", "seed", "batch_size", "schedule", "decay_factor",
             "decay_at", "projection", "granularity", "vector_stride"}
_OUTPUT_KEYS = {"trace", "reports"}


class ConfigError(ValueError):
    pass


class ParseError(ConfigError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class UnknownKey(ConfigError):
    pass


class RangeError(ConfigError):
    pass


class MismatchedProblem(ValueError):
    """compare_optimizers needs one shared (problem, seed) across configs."""


@dataclass(frozen=True)
class Schedule:
    kind: str = "constant"
    factor: float = 10.0
    at_step: int = 0

    def eta_at(self, eta: float, t: int) -> float:
        if self.kind == "step_decay" and t >= self.at_step:
            return eta / self.factor
        return eta


@dataclass
class ExperimentConfig:
    problem: str = "rosenbrock"
    problem_params: dict = field(default_factory=dict)
    theta0: tuple | None = None
    optimizer: str = "aegdm"
    hyper: HyperParams = field(default_factory=lambda: HyperParams(eta=0.01, mu=0.9))
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    iters: int = 1000
    seed: int = 0
    batch_size: int | None = None
    schedule: Schedule = field(default_factory=Schedule)
    projection: tuple[float, float] | None = None
    granularity: str = "full"
    vector_stride: int = 10
    trace_path: str | None = None
    reports_path: str | None = None


@dataclass
class RunResult:
    config: ExperimentConfig
    trace: TrajectoryTrace
    final_theta: np.ndarray | None
    final_f: float | None
    wall_time: float
    reports: list
    aborted: str | None
    iterations: int


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def _coerce(value: str):
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def _parse_sections(text: str) -> dict:
    sections: dict[str, dict] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in ("problem", "optimizer", "run", "output"):
                raise ParseError(lineno, f"unknown section [{current}]")
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ParseError(lineno, f"expected key=value, got {line!r}")
        if current is None:
            raise ParseError(lineno, "key=value before any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError(lineno, "empty key")
        sections[current][key] = value
    return sections


def parse_config(text: str) -> ExperimentConfig:
    """Sectioned key=value text (UTF-8, '#' comments) to a validated config.

    Missing values fall back to the documented defaults: c=1, mu=0.9, and a
    per-optimizer base learning rate (aegdm 0.01, aegd 0.1, sgd/sgdm 0.1,
    adam 0.001).
    """
    sections = _parse_sections(text)

    prob = dict(sections.get("problem", {}))
    problem = str(prob.pop("name", "rosenbrock"))
    if problem not in _PROBLEM_KEYS:
        raise UnknownKey(f"unknown problem {problem!r}")
    theta0 = None
    if "theta0" in prob:
        theta0 = tuple(float(tok) for tok in prob.pop("theta0").split(","))
    params = {}
    for key, value in prob.items():
        if key not in _PROBLEM_KEYS[problem]:
            raise UnknownKey(f"unknown [problem] key {key!r} for {problem}")
        params[key] = _coerce(value)

    opt = dict(sections.get("optimizer", {}))
    optimizer = str(opt.pop("name", "aegdm"))
    if optimizer not in OPTIMIZERS:
        raise UnknownKey(f"unknown optimizer {optimizer!r}")
    for key in opt:
        if key not in _OPTIMIZER_KEYS:
            raise UnknownKey(f"unknown [optimizer] key {key!r}")
    eta = float(opt.get("lr", DEFAULT_LR[optimizer]))
    mu = float(opt.get("mu", 0.9))
    c = float(opt.get("c", 1.0))
    variant = str(opt.get("variant", "running_sum"))
    if not eta > 0.0:
        raise RangeError(f"lr must be positive, got {eta}")
    if not 0.0 <= mu < 1.0:
        raise RangeError(f"mu must lie in [0, 1), got {mu}")
    if variant not in ("running_sum", "ema"):
        raise RangeError(f"variant must be running_sum or ema, got {variant!r}")
    beta1 = float(opt.get("beta1", 0.9))
    beta2 = float(opt.get("beta2", 0.999))
    eps = float(opt.get("eps", 1e-8))
    if not (0.0 < beta1 < 1.0 and 0.0 < beta2 < 1.0):
        raise RangeError("beta1 and beta2 must lie in (0, 1)")

    run = dict(sections.get("run", {}))
    for key in run:
        if key not in _RUN_KEYS:
            raise UnknownKey(f"unknown [run] key {key!r}")
    iters = int(run.get("iters", 1000))
    if iters < 1:
        raise RangeError(f"iters must be >= 1, got {iters}")
    seed = int(run.get("seed", 0))
    batch_size = run.get("batch_size")
    batch_size = None if batch_size in (None, "", "full") else int(batch_size)
    if batch_size is not None and batch_size < 1:
        raise RangeError(f"batch_size must be >= 1, got {batch_size}")
    kind = str(run.get("schedule", "constant"))
    if kind not in ("constant", "step_decay"):
        raise RangeError(f"schedule must be constant or step_decay, got {kind!r}")
    factor = float(run.get("decay_factor", 10.0))
    if not factor > 0.0:
        raise RangeError(f"decay_factor must be positive, got {factor}")
    at_step = int(run.get("decay_at", 0))
    schedule = Schedule(kind=kind, factor=factor, at_step=at_step)
    projection = None
    proj_raw = run.get("projection", "none")
    if proj_raw not in ("none", ""):
        lo, hi = (float(tok) for tok in str(proj_raw).split(","))
        if not hi > lo:
            raise RangeError(f"projection box needs hi > lo, got {proj_raw!r}")
        projection = (lo, hi)
    granularity = str(run.get("granularity", "full"))
    if granularity not in ("full", "scalar_only"):
        raise RangeError(f"granularity must be full or scalar_only, got {granularity!r}")
    vector_stride = int(run.get("vector_stride", 10))
    if vector_stride < 1:
        raise RangeError("vector_stride must be >= 1")

    out = dict(sections.get("output", {}))
    for key in out:
        if key not in _OUTPUT_KEYS:
            raise UnknownKey(f"unknown [output] key {key!r}")

    return ExperimentConfig(
        problem=problem,
        problem_params=params,
        theta0=theta0,
        optimizer=optimizer,
        hyper=HyperParams(eta=eta, mu=mu, c=c, momentum_variant=variant),
        beta1=beta1, beta2=beta2, eps=eps,
        iters=iters,
        seed=seed,
        batch_size=batch_size,
        schedule=schedule,
        projection=projection,
        granularity=granularity,
        vector_stride=vector_stride,
        trace_path=out.get("trace"),
        reports_path=out.get("reports"),
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


# ---------------------------------------------------------------------------
# problems from configs
# ---------------------------------------------------------------------------

def build_problem(config: ExperimentConfig):
    params = config.problem_params
    name = config.problem
    if name == "rosenbrock":
        return Rosenbrock()
    if name == "quadratic":
        return Quadratic.diagonal(dim=int(params.get("dim", 2)),
                                  cond=float(params.get("cond", 10.0)))
    if name in ("least_squares", "logistic"):
        if "data_csv" in params:
            X, y = load_dataset_csv(params["data_csv"])
        else:
            X, y = make_synthetic_dataset(
                name,
                n=int(params.get("n", 20)),
                m=int(params.get("m", 200)),
                seed=int(params.get("data_seed", 7)),
                noise=float(params.get("noise", 0.1)),
            )
        cls = LeastSquaresProblem if name == "least_squares" else LogisticProblem
        return cls(X, y, l2=float(params.get("l2", 0.0)))
    if name == "online_quadratic":
        return OnlineQuadraticSequence(
            length=config.iters,
            dim=int(params.get("dim", 5)),
            rng=np.random.default_rng(int(params.get("data_seed", 7))),
            lo=float(params.get("box_lo", -1.0)),
            hi=float(params.get("box_hi", 1.0)),
        )
    raise UnknownKey(f"unknown problem {name!r}")


# ---------------------------------------------------------------------------
# the step loop
# ---------------------------------------------------------------------------

def _ulp_max(a: np.ndarray, b: np.ndarray) -> float:
    diff = np.abs(a - b)
    scale = np.spacing(np.maximum(np.abs(a), np.abs(b)))
    with np.errstate(invalid="ignore"):
        ulps = np.where(diff == 0.0, 0.0, diff / scale)
    return float(ulps.max())


def run_experiment(config: ExperimentConfig, problem=None,
                   stop_gap: float | None = None) -> RunResult:
    """Execute the configured run and return its trace plus attached checks.

    Deterministic given (config, seed).  The run aborts (with the reason
    recorded on the trace) on a non-finite evaluation or a positivity
    violation f + c <= 0; stop_gap ends the run early once the optimality
    gap f - f* falls to the target, recording the stop as
    "target_gap_reached".  Energy-method runs stream the monotone-energy /
    exact-recurrence check and attach it as a report.
    """
    if problem is None:
        problem = build_problem(config)
    theta0 = np.asarray(config.theta0 if config.theta0 is not None
                        else problem.default_theta0, dtype=np.float64)
    if theta0.shape != (problem.dim,):
        raise RangeError(
            f"theta0 has dimension {theta0.size}, problem needs {problem.dim}"
        )
    optimizer = config.optimizer
    is_energy = optimizer in ENERGY_OPTIMIZERS
    step_fn = _STEP_FNS[optimizer]
    # aegd is the mu=0 specialization; pin the recorded mu accordingly so
    # downstream bound constants use what actually ran
    hyper = replace(config.hyper, mu=0.0) if optimizer == "aegd" else config.hyper
    hp_pre = hyper
    hp_post = None
    if config.schedule.kind == "step_decay":
        hp_post = replace(hyper, eta=hyper.eta / config.schedule.factor)

    T = config.iters
    n = theta0.size
    full = config.granularity == "full"
    rng = np.random.default_rng(config.seed)
    f_star = getattr(problem, "f_star", None)

    f_arr = np.empty(T)
    gn_arr = np.empty(T)
    sn_arr = np.empty(T)
    eta_arr = np.empty(T)
    minr_arr = np.empty(T + 1) if is_energy else None
    r_arr = np.empty((T + 1, n)) if (is_energy and full) else None
    m_arr = np.empty((T + 1, n)) if (is_energy and full) else None
    v_arr = np.empty((T, n)) if (is_energy and full) else None
    th_arr = np.empty((T + 1, n)) if full else None
    st_arr = np.empty((T, n)) if full else None
    snaps: list[np.ndarray] = []
    snap_steps: list[int] = []

    state = None
    r0_ids = None
    aborted = None
    done = 0
    max_increase = -np.inf
    max_ulp = 0.0
    violations = 0
    projection = config.projection

    start = time.perf_counter()
    for t in range(T):
        hp = hp_pre if (hp_post is None or t < config.schedule.at_step) else hp_post
        ev = problem.evaluate(theta0 if state is None else state.theta,
                              t=t, rng=rng, batch_size=config.batch_size)
        if not np.isfinite(ev.value) or not np.all(np.isfinite(ev.gradient)):
            aborted = f"non_finite_evaluation:t={t}"
            break
        if state is None:
            try:
                if is_energy:
                    state = OptimizerState.initial(theta0, ev.value, hyper.c)
                    r0_ids = ev.sample_ids
                else:
                    state = BaselineState.initial(theta0, config.beta1,
                                                  config.beta2, config.eps)
            except NonPositiveShiftedValue as exc:
                aborted = f"nonpositive_shifted_value:t={t}:{exc}"
                break
        try:
            out = step_fn(state, ev, hp)
        except NonPositiveShiftedValue as exc:
            aborted = f"nonpositive_shifted_value:t={t}:{exc}"
            break

        f_arr[t] = ev.value
        gn_arr[t] = float(np.linalg.norm(ev.gradient))
        eta_arr[t] = hp.eta
        if is_energy:
            minr_arr[t] = float(state.r.min())
            increase = float((out.new_state.r - state.r).max())
            if increase > max_increase:
                max_increase = increase
            if increase > 0.0:
                violations += 1
            denom = 1.0 + 2.0 * hp.eta * out.v * out.v
            ulp = _ulp_max(out.new_state.r * denom, state.r)
            if ulp > max_ulp:
                max_ulp = ulp
            if full:
                r_arr[t] = state.r
                m_arr[t] = state.m
                v_arr[t] = out.v
        if full:
            th_arr[t] = state.theta
        elif t % config.vector_stride == 0:
            snaps.append(state.theta.copy())
            snap_steps.append(t)

        if projection is not None:
            theta_new = np.clip(out.new_state.theta, projection[0], projection[1])
            step_vec = theta_new - state.theta
            state = replace(out.new_state, theta=theta_new)
        else:
            step_vec = out.step
            state = out.new_state
        sn_arr[t] = float(np.linalg.norm(step_vec))
        if full:
            st_arr[t] = step_vec
        done = t + 1

        if stop_gap is not None and f_star is not None \
                and ev.value - f_star <= stop_gap:
            aborted = "target_gap_reached"
            break

    wall = time.perf_counter() - start

    if state is not None:
        if is_energy:
            minr_arr[done] = float(state.r.min())
            if full:
                r_arr[done] = state.r
                m_arr[done] = state.m
        if full:
            th_arr[done] = state.theta
        elif not snap_steps or snap_steps[-1] != done:
            snaps.append(state.theta.copy())
            snap_steps.append(done)

    trace = TrajectoryTrace(
        config={
            "optimizer": optimizer,
            "problem": config.problem,
            "problem_params": dict(config.problem_params),
            "eta": hyper.eta,
            "mu": hyper.mu,
            "c": hyper.c,
            "momentum_variant": hyper.momentum_variant,
            "seed": config.seed,
            "iters": T,
            "batch_size": config.batch_size,
            "granularity": config.granularity,
            "projection": projection,
            "schedule": (config.schedule.kind, config.schedule.factor,
                         config.schedule.at_step),
            "dim": int(n),
        },
        f=f_arr[:done],
        grad_norm=gn_arr[:done],
        step_norm=sn_arr[:done],
        eta_steps=eta_arr[:done],
        min_r=minr_arr[:done + 1] if (is_energy and state is not None) else None,
        r=r_arr[:done + 1] if r_arr is not None and state is not None else None,
        m=m_arr[:done + 1] if m_arr is not None and state is not None else None,
        v=v_arr[:done] if v_arr is not None else None,
        theta=th_arr[:done + 1] if th_arr is not None and state is not None else None,
        steps=st_arr[:done] if st_arr is not None else None,
        theta_snapshots=np.array(snaps) if snaps else None,
        snapshot_steps=np.array(snap_steps) if snap_steps else None,
        r0_sample_ids=r0_ids,
        abort_reason=aborted,
    )

    if isinstance(problem, OnlineQuadraticSequence) and done > 0:
        trace.regret = diagnostics.compute_regret(trace, problem)

    reports = []
    if is_energy and done > 0:
        ok = max_increase <= 0.0 and max_ulp <= diagnostics.RECURRENCE_ULPS
        reports.append(BoundReport(
            bound_id="energy_monotone",
            lhs=max_increase,
            rhs=0.0,
            satisfied=ok,
            constants={"max_recurrence_ulp": max_ulp,
                       "violations": float(violations)},
        ))

    if state is None:
        final_theta, final_f = None, None
    else:
        final_theta = state.theta
        if isinstance(problem, OnlineQuadraticSequence):
            final_f = float(f_arr[done - 1]) if done else None
        else:
            final_f = float(problem.evaluate(state.theta).value)

    result = RunResult(
        config=config,
        trace=trace,
        final_theta=final_theta,
        final_f=final_f,
        wall_time=wall,
        reports=reports,
        aborted=aborted,
        iterations=done,
    )

    if config.trace_path:
        emit_csv(trace, config.trace_path)
    if config.reports_path:
        diagnostics.write_reports(reports, config.reports_path)
    return result


def iterations_to_gap(trace: TrajectoryTrace, f_star: float,
                      threshold: float) -> int | None:
    """First step index whose objective value is within threshold of f*."""
    hits = np.nonzero(trace.f - f_star <= threshold)[0]
    return int(hits[0]) if hits.size else None


# ---------------------------------------------------------------------------
# grid search and optimizer comparison
# ---------------------------------------------------------------------------

def grid_search(config: ExperimentConfig, lr_candidates,
                criterion: str = "iterations_to_gap", gap: float = 1e-6):
    """Run every candidate rate with the fixed seed and pick the best.

    criterion "final_f" minimizes the final objective value;
    "iterations_to_gap" minimizes the first step reaching optimality gap
    <= gap (runs stop early once there; never reaching counts as infinite).
    Ties break toward the smaller learning rate.  Returns the winning
    config together with the full result table.
    """
    candidates = list(lr_candidates)
    if not candidates:
        raise ValueError("lr_candidates must be non-empty")
    if criterion not in ("final_f", "iterations_to_gap"):
        raise ValueError(f"unknown criterion {criterion!r}")
    problem = build_problem(config)
    rows = []
    best = None
    for lr in candidates:
        cfg = replace(config, hyper=replace(config.hyper, eta=float(lr)),
                      trace_path=None, reports_path=None)
        result = run_experiment(
            cfg, problem=problem,
            stop_gap=gap if criterion == "iterations_to_gap" else None,
        )
        f_star = getattr(problem, "f_star", None)
        iters = iterations_to_gap(result.trace, f_star, gap) \
            if f_star is not None else None
        if criterion == "iterations_to_gap":
            score = np.inf if iters is None else float(iters)
        else:
            score = np.inf if result.final_f is None else float(result.final_f)
        rows.append({
            "lr": float(lr),
            "score": score,
            "final_f": result.final_f,
            "iterations_to_gap": iters,
            "aborted": result.aborted or "",
        })
        key = (score, float(lr))
        if best is None or key < best[0]:
            best = (key, cfg)
    return best[1], rows


def _direction_reversals(trace: TrajectoryTrace, coord: int = 1) -> int | None:
    """Sign flips of the step component along one coordinate (oscillation)."""
    if trace.steps is None or trace.steps.shape[1] <= coord:
        return None
    comp = trace.steps[:, coord]
    signs = np.sign(comp[comp != 0.0])
    if signs.size < 2:
        return 0
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def compare_optimizers(configs):
    """Run several optimizers on one shared (problem, seed) and align traces.

    Returns (results, summary) where summary maps each column-group label
    to final_f, iterations to the standard gap thresholds (when the
    problem's minimum value is known), and the oscillation count.
    """
    configs = list(configs)
    if not configs:
        raise ValueError("need at least one config")
    ref = configs[0]
    for cfg in configs[1:]:
        if (cfg.problem != ref.problem
                or cfg.problem_params != ref.problem_params
                or cfg.seed != ref.seed
                or cfg.theta0 != ref.theta0):
            raise MismatchedProblem(
                "compare_optimizers needs identical problem, theta0 and seed"
            )
    problem = build_problem(ref)
    f_star = getattr(problem, "f_star", None)

    labels = []
    seen: dict[str, int] = {}
    for cfg in configs:
        count = seen.get(cfg.optimizer, 0) + 1
        seen[cfg.optimizer] = count
        labels.append(cfg.optimizer if count == 1 else f"{cfg.optimizer}_{count}")

    results = []
    summary = {}
    for label, cfg in zip(labels, configs):
        result = run_experiment(
            replace(cfg, trace_path=None, reports_path=None), problem=problem)
        results.append((label, result))
        entry = {"final_f": result.final_f,
                 "aborted": result.aborted or "",
                 "reversals": _direction_reversals(result.trace)}
        if f_star is not None:
            for threshold in GAP_THRESHOLDS:
                entry[f"iters_to_{threshold:g}"] = iterations_to_gap(
                    result.trace, f_star, threshold)
        summary[label] = entry
    return results, summary


# ---------------------------------------------------------------------------
# CSV artifacts
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    return f"{float(x):.17g}"


def emit_csv(trace: TrajectoryTrace, path) -> None:
    """Per-iteration trace: iter,f,grad_norm,min_r,step_norm[,regret].

    Row t describes the state entering step t; floats carry 17 significant
    digits so write -> read -> write is byte-stable.
    """
    with_regret = trace.regret is not None
    header = "iter,f,grad_norm,min_r,step_norm" + (",regret" if with_regret else "")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for t in range(trace.n_steps):
            min_r = trace.min_r[t] if trace.min_r is not None else float("nan")
            row = [str(t), _fmt(trace.f[t]), _fmt(trace.grad_norm[t]),
                   _fmt(min_r), _fmt(trace.step_norm[t])]
            if with_regret:
                row.append(_fmt(trace.regret[t]))
            fh.write(",".join(row) + "\n")


def emit_grid_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("lr,score,final_f,iterations_to_gap,aborted\n")
        for row in rows:
            iters = row["iterations_to_gap"]
            fh.write(",".join([
                _fmt(row["lr"]),
                _fmt(row["score"]) if np.isfinite(row["score"]) else "inf",
                _fmt(row["final_f"]),
                "" if iters is None else str(iters),
                row["aborted"],
            ]) + "\n")


def emit_comparison_csv(results, path) -> None:
    """Aligned per-iteration columns, one (f, min_r, step_norm) group each."""
    header = ["iter"]
    for label, _ in results:
        header += [f"f_{label}", f"min_r_{label}", f"step_norm_{label}"]
    length = max(result.trace.n_steps for _, result in results)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for t in range(length):
            row = [str(t)]
            for _, result in results:
                trace = result.trace
                if t < trace.n_steps:
                    min_r = trace.min_r[t] if trace.min_r is not None \
                        else float("nan")
                    row += [_fmt(trace.f[t]), _fmt(min_r),
                            _fmt(trace.step_norm[t])]
                else:
                    row += ["", "", ""]
            fh.write(",".join(row) + "\n")
