"""Whole-chunk schedule model over the time-expanded network.

Binary flow variables F[s,c,i,j,k] say whether chunk c of source s crosses
edge (i,j) during epoch k. Buffers, per-edge capacity (optionally sliding
windows for fastest-link epochs), copy-aware conservation, three switch
treatments, optional buffer limits, and a delivery objective that rewards
finishing early.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction

from .demand import Demand, check_demand_nodes
from .epochs import EpochConfig, cap_chunks, compute_delta, kappa
from .errors import ValidationError
from .model import BINARY, Model
from .topology import HyperEdgeGroup, Topology, hyper_edge_transform, require_valid

COPY = "copy"
NO_COPY = "no-copy"
HYPER_EDGE = "hyper-edge"


@dataclass(frozen=True)
class ModelOptions:
    switch_mode: str = COPY
    buffer_limit: float | None = None  # chunks a node may hold at once
    capacity_mode: str = "auto"  # auto: windowed iff fastest-link epochs

    def __post_init__(self):
        if self.switch_mode not in (COPY, NO_COPY, HYPER_EDGE):
            raise ValidationError(f"unknown switch mode {self.switch_mode!r}")
        if self.capacity_mode not in ("auto", "plain", "windowed"):
            raise ValidationError(f"unknown capacity mode {self.capacity_mode!r}")
        if self.buffer_limit is not None and self.buffer_limit <= 0:
            raise ValidationError("buffer_limit must be positive")


def _windowed(cfg: EpochConfig, opts: ModelOptions) -> bool:
    if opts.capacity_mode == "plain":
        return False
    if opts.capacity_mode == "windowed":
        return True
    return cfg.windowed


@dataclass(frozen=True)
class CapacityWindow:
    kappa: int  # epochs one chunk occupies the link
    width: int  # epochs summed per constraint (== kappa)
    budget: Fraction  # chunk budget per window


def build_windowed_capacity(t: Topology, cfg: EpochConfig) -> dict[tuple, CapacityWindow]:
    """Sliding-window capacity descriptors for fastest-link epochs.

    A link needing kappa epochs per chunk gets, at every epoch k, the
    constraint sum(F over epochs (k-kappa, k]) <= kappa * cap. kappa == 1
    reduces to the plain per-epoch constraint.
    """
    out = {}
    for e in t.edges:
        kap = kappa(e, cfg)
        out[(e.src, e.dst)] = CapacityWindow(kap, kap, kap * cap_chunks(t, e, 0, cfg))
    return out


def build_hyper_edge_constraints(t: Topology) -> dict:
    """Per-switch budgets for the legacy (non-copy) switch rewrite."""
    _, groups = hyper_edge_transform(t)
    return groups


def build_general_model(t: Topology, d: Demand, cfg: EpochConfig,
                        opts: ModelOptions | None = None) -> Model:
    """The general whole-chunk model; infeasible at too-short horizons."""
    opts = opts or ModelOptions()
    return build_time_expanded(t, d, cfg, opts)


def _earliest_send(t_eff: Topology, delta: dict, seeds: dict) -> dict:
    """Earliest epoch a chunk could be forwarded from each node.

    seeds: node -> epoch at which the chunk is first sendable there. One hop
    over edge e costs delta(e) + 1 epochs. Unreachable nodes map to a large
    sentinel, which fixes their flow variables to zero.
    """
    dist = {n: float("inf") for n in t_eff.nodes}
    heap = []
    for n, k0 in seeds.items():
        if k0 < dist[n]:
            dist[n] = k0
            heapq.heappush(heap, (k0, str(n), n))
    while heap:
        d0, _, n = heapq.heappop(heap)
        if d0 > dist[n]:
            continue
        for e in t_eff.out_edges(n):
            alt = d0 + delta[(e.src, e.dst)] + 1
            if alt < dist[e.dst]:
                dist[e.dst] = alt
                heapq.heappush(heap, (alt, str(e.dst), e.dst))
    return dist


def build_time_expanded(t: Topology, d: Demand, cfg: EpochConfig, opts: ModelOptions,
                        *, final_delivery: bool = True,
                        b0: dict | None = None,
                        delta_q: dict | None = None,
                        switch_q: dict | None = None,
                        demand_entries=None,
                        name: str = "general") -> Model:
    """Shared core for the one-shot model and the per-round models.

    b0 overrides initial buffers ((s,c,n) -> 0/1); delta_q injects prior-round
    arrivals into buffer rows ((s,c,n,k) -> count); switch_q does the same on
    switch conservation rows. demand_entries restricts which (s,c,d) triples
    get read variables (residual demand in round mode).
    """
    require_valid(t)
    check_demand_nodes(d, t)
    if opts.buffer_limit is not None:
        per_source = {}
        for s, c in d.commodities:
            per_source[s] = per_source.get(s, 0) + 1
        if per_source and opts.buffer_limit < max(per_source.values()):
            raise ValidationError("buffer_limit below a source's initial chunk count")

    hyper_groups: dict = {}
    t_eff = t
    if opts.switch_mode == HYPER_EDGE:
        t_eff, hyper_groups = hyper_edge_transform(t)

    windowed = _windowed(cfg, opts)
    K = cfg.K
    kk = K - 1  # last epoch index
    edges = t_eff.edges
    kap = {(e.src, e.dst): (kappa(e, cfg) if windowed else 1) for e in edges}
    kap_slowest = max(kap.values(), default=1)
    delta = {(e.src, e.dst): compute_delta(e, cfg.tau) + (kap_slowest - 1 if windowed else 0)
             for e in edges}

    commodities = d.commodities
    entries = set(demand_entries if demand_entries is not None else d.entries)
    dests = {}
    for s, c, dst in entries:
        dests.setdefault((s, c), []).append(dst)
    for key in dests:
        dests[key].sort(key=str)

    m = Model(name)
    m.meta.update({
        "kind": name, "topology": t, "eff_topology": t_eff, "demand": d,
        "cfg": cfg, "opts": opts, "delta": delta, "kappa": kap,
        "hyper_groups": hyper_groups, "windowed": windowed,
        "entries": entries,
    })

    is_switch = t_eff.is_switch  # hyper-edge mode leaves no switches

    # Earliest epoch each chunk could be forwarded from each node; flows,
    # buffers, and reads before that are fixed to zero up front, which trims
    # the search space considerably on multi-chassis horizons.
    reach: dict[tuple, dict] = {}
    single_source_cache: dict = {}
    for s, c in commodities:
        if b0 is None and not switch_q and not delta_q:
            if s not in single_source_cache:
                single_source_cache[s] = _earliest_send(t_eff, delta, {s: 0})
            reach[(s, c)] = single_source_cache[s]
        else:
            seeds: dict = {}
            for n in t_eff.nodes:
                if (b0 or {}).get((s, c, n), 0):
                    seeds[n] = 0
                for k in range(K + 1):
                    if (delta_q or {}).get((s, c, n, k), 0) or \
                            (switch_q or {}).get((s, c, n, k), 0):
                        seeds[n] = min(seeds.get(n, k), k)
            reach[(s, c)] = _earliest_send(t_eff, delta, seeds)

    # Variables. Buffers and reads stay continuous: integrality propagates
    # from the binary flows through the equalities that define them.
    for s, c in commodities:
        es = reach[(s, c)]
        for e in edges:
            for k in range(K):
                idx = m.add_var("F", (s, c, e.src, e.dst, k), BINARY)
                if k < es[e.src]:
                    m.fix(idx, 0.0)
        for n in t_eff.nodes:
            if is_switch(n):
                continue
            for k in range(K + 1):
                idx = m.add_var("B", (s, c, n, k))
                if k == 0:
                    if b0 is not None:
                        m.fix(idx, float(b0.get((s, c, n), 0.0)))
                    else:
                        m.fix(idx, 1.0 if n == s else 0.0)
                elif k < es[n]:
                    m.fix(idx, 0.0)
        for dst in dests.get((s, c), ()):
            for k in range(K):
                idx = m.add_var("R", (s, c, dst, k), lb=0.0, ub=1.0)
                if final_delivery and k == kk:
                    m.fix(idx, 1.0)
                elif k + 1 < es[dst]:
                    m.fix(idx, 0.0)
        if opts.buffer_limit is not None:
            for n in t_eff.nodes:
                if is_switch(n):
                    continue
                for k in range(K):
                    m.add_var("X", (s, c, n, k), lb=0.0, ub=float(d.chunk_count))

    # Capacity, per edge and epoch; sliding windows where a chunk needs
    # several epochs on the wire.
    for e in edges:
        pair = (e.src, e.dst)
        w = kap[pair]
        for k in range(K):
            lo = max(0, k - w + 1)
            budget = Fraction(0)
            for k2 in range(k - w + 1, k + 1):
                budget += cap_chunks(t_eff, e, max(k2, 0), cfg) if k2 >= 0 \
                    else cap_chunks(t_eff, e, 0, cfg)
            coeffs = [(m.var("F", s, c, e.src, e.dst, k2), 1.0)
                      for s, c in commodities for k2 in range(lo, k + 1)]
            m.add_le(coeffs, float(budget), tag=("cap", e.src, e.dst, k))

    # Conservation with copy: what a node holds at the start of an epoch plus
    # what lands during it bounds each outgoing flow of the next epoch.
    for s, c in commodities:
        for n in t_eff.nodes:
            in_edges = t_eff.in_edges(n)
            out_edges = t_eff.out_edges(n)
            if is_switch(n) and opts.switch_mode == NO_COPY:
                # Legacy switch: every arrival leaves exactly once, next epoch.
                for k_out in range(K):
                    coeffs = [(m.var("F", s, c, e.src, e.dst, k_out), 1.0) for e in out_edges]
                    rhs = 0.0
                    for e in in_edges:
                        k_in = k_out - 1 - delta[(e.src, e.dst)]
                        if k_in >= 0:
                            coeffs.append((m.var("F", s, c, e.src, e.dst, k_in), -1.0))
                    rhs += float((switch_q or {}).get((s, c, n, k_out), 0.0))
                    m.add_eq(coeffs, rhs, tag=("sweq", s, c, n, k_out))
                if switch_q is None:
                    # Arrivals in the final epochs could never leave again.
                    for e in in_edges:
                        dlt = delta[(e.src, e.dst)]
                        for k in range(max(0, kk - dlt), K):
                            m.fix(m.var("F", s, c, e.src, e.dst, k), 0.0)
                continue
            for e_out in out_edges:
                for k_out in range(K):
                    f_out = m.var("F", s, c, n, e_out.dst, k_out)
                    coeffs = [(f_out, -1.0)]
                    rhs = 0.0
                    if not is_switch(n):
                        coeffs.append((m.var("B", s, c, n, max(k_out - 1, 0)), 1.0))
                        # Prior-round arrivals landing at the start of k_out are
                        # forwardable during it, like any in-round arrival.
                        rhs -= float((delta_q or {}).get((s, c, n, k_out), 0.0))
                    else:
                        rhs -= float((switch_q or {}).get((s, c, n, k_out), 0.0))
                    if k_out >= 1:
                        for e in in_edges:
                            k_in = k_out - 1 - delta[(e.src, e.dst)]
                            if k_in >= 0:
                                coeffs.append((m.var("F", s, c, e.src, e.dst, k_in), 1.0))
                    if len(coeffs) == 1 and rhs == 0.0:
                        m.fix(f_out, 0.0)
                    else:
                        m.add_ge(coeffs, rhs, tag=("cons", s, c, n, e_out.dst, k_out))

    # Buffer recurrence: each start-of-epoch buffer accumulates last epoch's
    # arrivals (minus explicit removals when a limit is in force).
    for s, c in commodities:
        for n in t_eff.nodes:
            if is_switch(n):
                continue
            for k in range(1, K + 1):
                coeffs = [(m.var("B", s, c, n, k), 1.0), (m.var("B", s, c, n, k - 1), -1.0)]
                if opts.buffer_limit is not None:
                    coeffs.append((m.var("X", s, c, n, k - 1), 1.0))
                for e in t_eff.in_edges(n):
                    k_in = (k - 1) - delta[(e.src, e.dst)]
                    if k_in >= 0:
                        coeffs.append((m.var("F", s, c, e.src, e.dst, k_in), -1.0))
                rhs = float((delta_q or {}).get((s, c, n, k), 0.0))
                m.add_eq(coeffs, rhs, tag=("buf", s, c, n, k))

    # Destination reads: R is capped by demand (declared R vars only) and by
    # what the buffer holds at the next boundary; monotone so a read is never
    # retracted.
    for (s, c), dlist in sorted(dests.items(), key=lambda kv: (str(kv[0][0]), kv[0][1])):
        for dst in dlist:
            for k in range(K):
                m.add_le([(m.var("R", s, c, dst, k), 1.0),
                          (m.var("B", s, c, dst, k + 1), -1.0)], 0.0,
                         tag=("dest", s, c, dst, k))
                if k >= 1:
                    m.add_ge([(m.var("R", s, c, dst, k), 1.0),
                              (m.var("R", s, c, dst, k - 1), -1.0)], 0.0)

    if opts.buffer_limit is not None:
        for n in t_eff.nodes:
            if is_switch(n):
                continue
            for k in range(K + 1):
                coeffs = [(m.var("B", s, c, n, k), 1.0) for s, c in commodities]
                m.add_le(coeffs, float(opts.buffer_limit), tag=("bcap", n, k))

    # Legacy-switch budgets: simultaneous pair uses are limited by the
    # physical switch degree, and each node drives or drains at most one
    # hyper-edge of a switch per epoch.
    for sw, group in sorted(hyper_groups.items(), key=lambda kv: str(kv[0])):
        for k in range(K):
            coeffs = [(m.var("F", s, c, i, j, k), 1.0)
                      for s, c in commodities for (i, j) in group.pairs]
            m.add_le(coeffs, float(group.budget), tag=("hyper", sw, k))
            for node in sorted({i for i, _ in group.pairs}, key=str):
                coeffs = [(m.var("F", s, c, i, j, k), 1.0)
                          for s, c in commodities for (i, j) in group.pairs if i == node]
                m.add_le(coeffs, 1.0, tag=("hyper-out", sw, node, k))
            for node in sorted({j for _, j in group.pairs}, key=str):
                coeffs = [(m.var("F", s, c, i, j, k), 1.0)
                          for s, c in commodities for (i, j) in group.pairs if j == node]
                m.add_le(coeffs, 1.0, tag=("hyper-in", sw, node, k))

    for (s, c), dlist in dests.items():
        for dst in dlist:
            for k in range(K):
                m.add_objective_term(m.var("R", s, c, dst, k), 1.0 / (k + 1))
    return m
