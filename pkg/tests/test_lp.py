import pytest

from collsched.demand import Demand, generate_demand
from collsched.epochs import EpochConfig
from collsched.errors import ConservationError
from collsched.lp import build_lp_model, lp_completion_epoch, lp_rates_to_schedule
from collsched.milp import ModelOptions, build_general_model
from collsched.simulator import SimOptions, simulate
from collsched.solver import min_feasible_horizon, solve
from collsched.topology import Edge, Topology, line, ring


def test_two_node_ring_alltoall_single_epoch(solver_opts):
    t = ring(2)
    d = generate_demand("alltoall", t, 1, 1)
    cfg = EpochConfig(1.0, 1)
    sol = solve(build_lp_model(t, d, cfg, ModelOptions()), solver_opts)
    assert sol.feasible
    assert lp_completion_epoch(sol) == 0
    assert sol.objective == pytest.approx(2.0)


def test_latency_chain_completion(latency_chain, solver_opts):
    t, d = latency_chain
    builder = lambda k: build_lp_model(t, d, EpochConfig(1.0, k), ModelOptions())
    k, sol = min_feasible_horizon(builder, 1, 12, solver_opts)
    assert k == 8
    assert lp_completion_epoch(sol) == 7


def test_single_path_decomposes_to_one_event(solver_opts):
    t = Topology((0, 1), frozenset(), (Edge(0, 1, 1.0),))
    d = Demand(frozenset({(0, 0, 1)}), 1, 1)
    cfg = EpochConfig(1.0, 1)
    sol = solve(build_lp_model(t, d, cfg, ModelOptions()), solver_opts)
    sched = lp_rates_to_schedule(sol, t, d, cfg)
    assert len(sched.events) == 1
    e = sched.events[0]
    assert (e.source, e.chunk, e.src, e.dst, e.epoch) == (0, 0, 0, 1, 0)
    assert e.fraction == pytest.approx(1.0)


def test_parallel_paths_split_fractions(solver_opts):
    # two 0.5-capacity disjoint relay paths force a 50/50 chunk split
    t = Topology(("s", "a", "b", "d"), frozenset(), (
        Edge("s", "a", 0.5), Edge("s", "b", 0.5),
        Edge("a", "d", 0.5), Edge("b", "d", 0.5)))
    d = Demand(frozenset({("s", 0, "d")}), 1, 1)
    cfg = EpochConfig(1.0, 2)
    sol = solve(build_lp_model(t, d, cfg, ModelOptions()), solver_opts)
    assert sol.feasible
    sched = lp_rates_to_schedule(sol, t, d, cfg)
    by_chunk = sum(e.fraction for e in sched.events if e.src == "s")
    assert by_chunk == pytest.approx(1.0)
    fractions = sorted(e.fraction for e in sched.events)
    assert fractions == pytest.approx([0.5] * 4)
    rep = simulate(sched, t, d, SimOptions())
    assert rep.violations == []


def test_zero_rate_solution_raises_conservation_error(solver_opts):
    t = Topology((0, 1), frozenset(), (Edge(0, 1, 1.0),))
    d = Demand(frozenset({(0, 0, 1)}), 1, 1)
    cfg = EpochConfig(1.0, 2)
    sol = solve(build_lp_model(t, d, cfg, ModelOptions()), solver_opts)
    corrupt = sol.replace_values({idx: 0.0 for _, idx in sol.model.family_items("F")})
    with pytest.raises(ConservationError, match="residue|backing"):
        lp_rates_to_schedule(corrupt, t, d, cfg)


def test_lp_schedule_respects_capacity(solver_opts):
    t = ring(4)
    d = generate_demand("alltoall", t, 1, 1)
    builder = lambda k: build_lp_model(t, d, EpochConfig(1.0, k), ModelOptions())
    k, sol = min_feasible_horizon(builder, 1, 8, solver_opts)
    sched = lp_rates_to_schedule(sol, t, d, EpochConfig(1.0, k))
    load = {}
    for e in sched.events:
        load[(e.src, e.dst, e.epoch)] = load.get((e.src, e.dst, e.epoch), 0.0) + e.fraction
    assert all(v <= 1.0 + 1e-6 for v in load.values())


def test_mass_conservation_per_pair(solver_opts):
    t = ring(4)
    d = generate_demand("alltoall", t, 2, 1)
    builder = lambda k: build_lp_model(t, d, EpochConfig(1.0, k), ModelOptions())
    k, sol = min_feasible_horizon(builder, 1, 8, solver_opts)
    sched = lp_rates_to_schedule(sol, t, d, EpochConfig(1.0, k))
    rep = simulate(sched, t, d, SimOptions())
    assert rep.violations == []
    # every demanded chunk fully delivered exactly once
    for s, c, dst in d.entries:
        assert (s, c, dst) in rep.per_entry_completion


@pytest.mark.parametrize("n", [2, 3, 4])
def test_relaxation_dominance_small_rings(n, solver_opts):
    t = ring(n)
    d = generate_demand("alltoall", t, 1, 1)
    lp_k, _ = min_feasible_horizon(
        lambda k: build_lp_model(t, d, EpochConfig(1.0, k), ModelOptions()),
        1, 8, solver_opts)
    milp_k, _ = min_feasible_horizon(
        lambda k: build_general_model(t, d, EpochConfig(1.0, k), ModelOptions()),
        1, 8, solver_opts)
    assert lp_k <= milp_k
    assert lp_k == milp_k  # exact on these fixtures
