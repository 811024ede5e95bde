"""Projected gradient ascent on the load reactances.

Each outer iteration takes the gradient at the current iterate and
backtracks on the step size ``mu``: the trial point is the box projection of
``x + mu * grad`` and is accepted once the objective there is no smaller than
the quadratic model

    Q_mu(x_trial; x) = f(x) + <grad, d> - ||d||^2 / (2 mu),   d = x_trial - x,

with the unconjugated inner product ``<a, b> = a^T b``.  Otherwise ``mu`` is
multiplied by ``kappa`` and a new trial is made.  The shrunk ``mu`` carries
over into the next iteration and is reset to ``mu_init`` whenever the
iteration counter hits a multiple of ``reset_period``.

Backtracking is a do-while loop: the first trial always runs, and the
recorded inner-loop count is the number of trials (>= 1).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .channel import ChannelEval, RisLoad, phi_tr_bound, transfer_function
from .em_model import ImpedanceSet
from .errors import ConfigError, LineSearchStallError, MonotonicityError
from .gradient import gradient
from .metrics import MultCounter

log = logging.getLogger(__name__)

TRACE_HEADER = ("iter", "objective", "mu", "inner_loops", "cum_mults")


@dataclass
class OptimizerConfig:
    mu_init: float = 1e25
    kappa: float = 0.5
    reset_period: int = 1000
    max_outer_iters: int = 1_000_000
    plateau_tol: float = 1e-9
    max_inner_loops: int = 200
    coupling_aware: bool = True

    def __post_init__(self):
        if not self.mu_init > 0:
            raise ConfigError("mu_init must be positive")
        if not 0 < self.kappa < 1:
            raise ConfigError("kappa must lie in (0, 1)")
        if self.reset_period < 1 or self.max_inner_loops < 1 or self.max_outer_iters < 0:
            raise ConfigError("reset_period and max_inner_loops must be >= 1, max_outer_iters >= 0")
        if not self.plateau_tol >= 0:
            raise ConfigError("plateau_tol must be non-negative")


@dataclass(frozen=True)
class TraceRecord:
    iter: int
    objective: float
    mu: float
    inner_loops: int
    cum_mults: int


ConvergenceTrace = list[TraceRecord]


@dataclass
class OptimizerState:
    iterate: RisLoad
    mu: float
    n: int
    objective: float
    ceval: ChannelEval
    trace: ConvergenceTrace = field(default_factory=list)
    counter: MultCounter = field(default_factory=MultCounter)


def project(x: np.ndarray, bounds: tuple[float, float]) -> np.ndarray:
    lo, hi = bounds
    if not lo < hi:
        raise ConfigError("bounds must satisfy z_min < z_max")
    return np.clip(x, lo, hi)


def quadratic_model(f_n: float, grad: np.ndarray, x_trial: np.ndarray, x_n: np.ndarray, mu: float) -> float:
    d = x_trial - x_n
    # grouped per coordinate so every term is >= 0 for a projected ascent step
    return float(f_n + np.sum(d * (grad - d / (2 * mu))))


def default_initializer(iset: ImpedanceSet, r0: float, bounds: tuple[float, float] = (-1e4, 1e4)) -> RisLoad:
    """Cancel each element's self reactance, clamped into the box."""
    x = project(-np.imag(np.diag(iset.z_ss)), bounds)
    return RisLoad(r0, x, bounds)


def unaware_counterpart(iset: ImpedanceSet) -> ImpedanceSet:
    """Copy of ``iset`` with all RIS-RIS mutual coupling removed."""
    return iset.replace(z_ss=np.diag(np.diag(iset.z_ss)))


def initial_state(iset: ImpedanceSet, init: RisLoad, cfg: OptimizerConfig,
                  counter: MultCounter | None = None) -> OptimizerState:
    counter = MultCounter() if counter is None else counter
    ceval = transfer_function(iset, init, counter)
    state = OptimizerState(init, cfg.mu_init, 0, ceval.objective, ceval, counter=counter)
    state.trace.append(TraceRecord(0, ceval.objective, cfg.mu_init, 0, counter.total))
    return state


def line_search_step(state: OptimizerState, iset: ImpedanceSet, cfg: OptimizerConfig) -> OptimizerState:
    """Advance ``state`` by one accepted outer iteration (in place)."""
    load = state.iterate
    x_n, f_n = load.x, state.objective
    grad = gradient(state.ceval, iset).grad
    mu = state.mu
    for loop in range(1, cfg.max_inner_loops + 1):
        x_trial = project(x_n + mu * grad, load.bounds)
        trial = transfer_function(iset, load.with_x(x_trial), state.counter)
        q = quadratic_model(f_n, grad, x_trial, x_n, mu)
        f_trial = trial.objective
        if math.isfinite(f_trial) and f_trial >= q:
            break
        mu *= cfg.kappa
    else:
        raise LineSearchStallError(
            f"no acceptable step after {cfg.max_inner_loops} trials at iteration {state.n}",
            {"iteration": state.n, "mu": mu, "objective": f_n, "trial_objective": f_trial,
             "model": q, "grad_norm": float(np.linalg.norm(grad))},
        )
    if f_trial < f_n:
        raise MonotonicityError(f"objective decreased at iteration {state.n + 1}: {f_n!r} -> {f_trial!r}")
    if trial.near_singular:
        log.info("iteration %d: Z_SE near singular (cond ~ %.2e)", state.n + 1,
                 trial.factorization.condition_estimate)
    state.iterate = load.with_x(x_trial)
    state.ceval = trial
    state.objective = f_trial
    state.n += 1
    state.trace.append(TraceRecord(state.n, f_trial, mu, loop, state.counter.total))
    state.mu = cfg.mu_init if state.n % cfg.reset_period == 0 else mu
    return state


def _plateaued(trace: ConvergenceTrace, window: int, tol: float) -> bool:
    if math.isinf(tol):
        return True
    f_now = trace[-1].objective
    f_then = trace[max(0, len(trace) - 1 - window)].objective
    if f_then == 0:
        return f_now == 0
    return (f_now - f_then) / abs(f_then) < tol


def optimize(iset: ImpedanceSet, init: RisLoad, cfg: OptimizerConfig | None = None, *,
             counter: MultCounter | None = None,
             callback: Callable[[OptimizerState], None] | None = None) -> tuple[RisLoad, ConvergenceTrace]:
    """Maximize ``|h_E2E|^2`` over the load reactances starting from ``init``.

    Stops after ``cfg.max_outer_iters`` iterations or once the relative
    objective gain over the last ``reset_period`` iterations (fewer at the
    start of the run) drops below ``cfg.plateau_tol``.
    """
    cfg = OptimizerConfig() if cfg is None else cfg
    state = initial_state(iset, init, cfg, counter)
    bound = phi_tr_bound(iset, init.r0)
    while state.n < cfg.max_outer_iters:
        line_search_step(state, iset, cfg)
        if abs(state.ceval.phi_tr) > bound:
            log.debug("iteration %d: |phi_TR| = %.3e exceeds heuristic bound %.3e",
                      state.n, abs(state.ceval.phi_tr), bound)
        if callback is not None:
            callback(state)
        if _plateaued(state.trace, cfg.reset_period, cfg.plateau_tol):
            break
    return state.iterate, state.trace


def write_trace_csv(trace: Iterable[TraceRecord], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in trace:
            w.writerow([r.iter, f"{r.objective:.17g}", f"{r.mu:.17g}", r.inner_loops, r.cum_mults])
    return path


def read_trace_csv(path: str | Path) -> ConvergenceTrace:
    with Path(path).open(newline="") as fh:
        rows = csv.DictReader(fh)
        return [TraceRecord(int(r["iter"]), float(r["objective"]), float(r["mu"]),
                            int(r["inner_loops"]), int(r["cum_mults"])) for r in rows]


def summarize(trace: ConvergenceTrace) -> dict:
    """Final objective, iterations to reach 95 % of it, mean trials per iteration, total mults."""
    final = trace[-1].objective
    target = 0.95 * final
    i95 = next(r.iter for r in trace if r.objective >= target)
    steps = trace[1:]
    return {
        "iterations": trace[-1].iter,
        "initial_objective": trace[0].objective,
        "final_objective": final,
        "iters_to_95pct": i95,
        "mean_inner_loops": float(np.mean([r.inner_loops for r in steps])) if steps else 0.0,
        "total_mults": trace[-1].cum_mults,
    }
