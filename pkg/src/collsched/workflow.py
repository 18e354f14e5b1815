"""End-to-end synthesis: build, solve, prune, extract, and always simulate."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

from .astar import astar_solve, max_future_epochs
from .demand import Demand
from .epochs import EpochConfig, FASTEST, epoch_duration
from .errors import ValidationError
from .estimator import estimate_epoch_upper_bound
from .lp import build_lp_model, lp_rates_to_schedule
from .milp import COPY, HYPER_EDGE, ModelOptions, build_general_model
from .schedule import Schedule, extract_schedule, prune_unused_flows
from .simulator import SimOptions, SimReport, simulate
from .solver import SolverOptions, min_feasible_horizon, solve
from .topology import Topology

METHODS = ("milp", "lp", "astar")


@dataclass
class SynthesisResult:
    schedule: Schedule
    report: SimReport
    method: str
    status: str
    solver_wall_time: float
    total_wall_time: float
    objective: float | None
    achieved_gap: float
    epochs: int
    tau: float
    warnings: list[str] = field(default_factory=list)


def synthesize(t: Topology, d: Demand, method: str = "milp", *,
               switch_mode: str = COPY, buffer_limit: float | None = None,
               epoch_mode: str = FASTEST, em: int = 1,
               epochs: int | None = None, search_horizon: bool = False,
               gap: float = 0.0, time_limit: float = 300.0,
               gamma: float = 0.5, epochs_per_round: int | None = None,
               max_rounds: int = 64, seed: int = 0,
               dump_model_path=None) -> SynthesisResult:
    """Produce a schedule with the requested solver and verify it by replay.

    The emitted schedule always passed simulation; a schedule that fails its
    own replay raises instead of being returned.
    """
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r} (one of {METHODS})")
    notes: list[str] = []
    start = time.perf_counter()
    tau = epoch_duration(t, d.chunk_size, epoch_mode, em)
    opts = ModelOptions(switch_mode=switch_mode, buffer_limit=buffer_limit)
    solver_opts = SolverOptions(time_limit=time_limit, relative_gap=gap, seed=seed)

    if method == "astar":
        kpr = epochs_per_round
        if kpr is None:
            cfg_probe = EpochConfig(tau, 1, epoch_mode, em, d.chunk_size)
            kpr = max(4, max_future_epochs(t, cfg_probe, opts))
        cfg = EpochConfig(tau, kpr, epoch_mode, em, d.chunk_size)
        sched = astar_solve(t, d, cfg, gamma, max_rounds, opts=opts,
                            solver_opts=solver_opts)
        report = _checked_replay(sched, t, d, switch_mode)
        wall = time.perf_counter() - start
        return SynthesisResult(sched, report, method, "optimal-per-round",
                               wall, wall, None, 0.0,
                               sched.meta["rounds"] * kpr, tau, notes)

    if epochs is None:
        epochs = estimate_epoch_upper_bound(t, d, tau, opts=opts)
        notes.append(f"estimated epoch upper bound {epochs}")
    cfg = EpochConfig(tau, epochs, epoch_mode, em, d.chunk_size)

    if method == "lp":
        if _benefits_from_copy(d):
            notes.append("demand is multicast: the copy-free program only bounds "
                         "what copy-capable schedules achieve")
            warnings.warn(notes[-1])
        if switch_mode == HYPER_EDGE:
            raise ValidationError("hyper-edge switches apply to the whole-chunk model only")
        builder = lambda K: build_lp_model(t, d, cfg.with_horizon(K), opts)
    else:
        builder = lambda K: build_general_model(t, d, cfg.with_horizon(K), opts)

    if search_horizon:
        k_star, sol = min_feasible_horizon(builder, 1, epochs, solver_opts)
        cfg = cfg.with_horizon(k_star)
    else:
        sol = solve(builder(epochs), solver_opts)
        k_star = epochs
    if not sol.feasible:
        from .errors import HorizonInfeasibleError, SolverTimeoutError
        if sol.status == "infeasible":
            raise HorizonInfeasibleError(k_star, k_star)
        raise SolverTimeoutError(f"no incumbent within {time_limit}s")
    if dump_model_path:
        with open(dump_model_path, "w") as f:
            f.write(sol.model.to_lp_text())

    if method == "lp":
        sched = lp_rates_to_schedule(sol, t, d, cfg)
    else:
        pruned = prune_unused_flows(sol, d, t)
        sched = extract_schedule(pruned, t, d, cfg)
    report = _checked_replay(sched, t, d, switch_mode)
    wall = time.perf_counter() - start
    return SynthesisResult(sched, report, method, sol.status, sol.solve_wall_time,
                           wall, sol.objective, sol.achieved_gap, k_star, tau, notes)


def _benefits_from_copy(d: Demand) -> bool:
    seen = set()
    for s, c, _ in d.entries:
        if (s, c) in seen:
            return True
        seen.add((s, c))
    return False


def _checked_replay(sched: Schedule, t: Topology, d: Demand, switch_mode: str) -> SimReport:
    report = simulate(sched, t, d, SimOptions(switch_mode=switch_mode))
    if report.violations:
        kinds = sorted({v.kind for v in report.violations})
        raise ValidationError(
            f"refusing to emit schedule: replay found {len(report.violations)} "
            f"violations ({', '.join(kinds)})")
    return report
