"""Discrete-epoch replay of schedules under the alpha-beta cost model.

Independent of the optimization path: availability and arrival arithmetic are
rebuilt here from raw link parameters. A chunk sent on (i,j) at epoch k is
available at j for forwarding from epoch k + delta + 1 and counts as
delivered at epoch k + delta, where delta covers both the link latency and,
for whole-chunk schedules on sub-epoch links, the extra transmission epochs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .demand import Demand, check_demand_nodes
from .epochs import ceil_frac, _frac
from .errors import ScheduleError, ValidationError
from .milp import COPY, HYPER_EDGE, NO_COPY
from .schedule import Schedule
from .topology import Topology, hyper_edge_transform, require_valid

WHOLE = 1.0 - 1e-9


@dataclass(frozen=True)
class SimOptions:
    switch_mode: str = COPY
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.switch_mode not in (COPY, NO_COPY, HYPER_EDGE):
            raise ValidationError(f"unknown switch mode {self.switch_mode!r}")


@dataclass(frozen=True)
class Violation:
    kind: str  # capacity | causality | switch-buffer | unmet-demand
    location: str
    epoch: int


@dataclass
class SimReport:
    violations: list[Violation]
    completion_epochs: dict  # destination -> last demanded arrival epoch
    completion_epoch: int
    transfer_time: float
    output_buffer_bytes: dict
    demand_bytes: int
    tau: float
    per_entry_completion: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations


def simulate(sched: Schedule, t: Topology, d: Demand,
             opts: SimOptions | None = None) -> SimReport:
    """Replay a schedule event by event and check it against the cost model.

    Flags capacity overruns per (edge, window), sends of data the sender does
    not yet hold, chunks resting at switches across an epoch, and demand left
    unmet. The replay continues past violations so a flawed schedule still
    gets completion accounting.
    """
    opts = opts or SimOptions()
    require_valid(t)
    check_demand_nodes(d, t)
    t_eff = t
    hyper_groups = {}
    if opts.switch_mode == HYPER_EDGE:
        t_eff, hyper_groups = hyper_edge_transform(t)
    tol = opts.tolerance

    tau = _frac(sched.tau)
    if tau <= 0:
        raise ScheduleError("schedule has non-positive epoch duration")
    chunk = Fraction(sched.chunk_size)
    caps = {}
    for e in t_eff.edges:
        caps[(e.src, e.dst)] = _frac(e.capacity) * tau / chunk

    whole_only = all(ev.fraction >= WHOLE for ev in sched.events)
    kap = {}
    for e in t_eff.edges:
        pair = (e.src, e.dst)
        kap[pair] = max(1, ceil_frac(1 / caps[pair])) if whole_only else 1
    widen = max(kap.values(), default=1) - 1
    delta = {}
    for e in t_eff.edges:
        delta[(e.src, e.dst)] = ceil_frac(_frac(e.alpha) / tau) + widen

    events = sorted(sched.events,
                    key=lambda ev: (ev.epoch, str(ev.source), str(ev.src), str(ev.dst), ev.chunk))
    for ev in events:
        if (ev.src, ev.dst) not in caps:
            raise ScheduleError(f"event references unknown edge ({ev.src!r},{ev.dst!r})")
        if ev.epoch < 0:
            raise ScheduleError(f"event at negative epoch {ev.epoch}")
        if not (0.0 < ev.fraction <= 1.0 + tol):
            raise ScheduleError(f"event fraction {ev.fraction} outside (0, 1]")

    violations: list[Violation] = []

    # Holdings per (source, chunk, node). Whole arrivals at GPU nodes may be
    # copied onto any number of later sends; fractional mass is consumed.
    copy_from: dict[tuple, int] = {}
    frac_pool: dict[tuple, list[list]] = {}
    # Switch arrivals are forwardable exactly one epoch, then must be gone.
    sw_arrivals: dict[tuple, list[dict]] = {}
    deliveries: dict[tuple, list[tuple[int, float]]] = {}

    commodities = {(s, c) for s, c, _ in d.entries}
    for s, c in commodities:
        copy_from[(s, c, s)] = 0
    entry_index = {(s, c, dst) for s, c, dst in d.entries}

    def register_arrival(s, c, node, arr_epoch, qty):
        if t_eff.is_switch(node):
            sw_arrivals.setdefault((s, c, node), []).append(
                {"usable": arr_epoch + 1, "qty": qty, "used": 0.0,
                 "whole": qty >= WHOLE})
        elif qty >= WHOLE:
            prev = copy_from.get((s, c, node))
            if prev is None or arr_epoch + 1 < prev:
                copy_from[(s, c, node)] = arr_epoch + 1
        else:
            frac_pool.setdefault((s, c, node), []).append([arr_epoch + 1, qty])
        if (s, c, node) in entry_index:
            deliveries.setdefault((s, c, node), []).append((arr_epoch, qty))

    def draw(s, c, node, k, qty) -> bool:
        """Deduct qty of (s,c) available at node for a send in epoch k."""
        if t_eff.is_switch(node):
            records = [r for r in sw_arrivals.get((s, c, node), ()) if r["usable"] == k]
            if opts.switch_mode != NO_COPY:
                for r in records:
                    if r["whole"]:
                        r["used"] += qty
                        return True
            remaining = qty
            for r in records:
                free = r["qty"] - r["used"]
                if free > tol:
                    take = min(free, remaining)
                    r["used"] += take
                    remaining -= take
                    if remaining <= tol:
                        return True
            return remaining <= tol
        ready = copy_from.get((s, c, node))
        if ready is not None and ready <= k:
            return True
        remaining = qty
        for rec in frac_pool.get((s, c, node), ()):
            if rec[0] <= k and rec[1] > tol:
                take = min(rec[1], remaining)
                rec[1] -= take
                remaining -= take
                if remaining <= tol:
                    return True
        return remaining <= tol

    for ev in events:
        if not draw(ev.source, ev.chunk, ev.src, ev.epoch, ev.fraction):
            violations.append(Violation("causality", f"{ev.src!r} lacks chunk "
                                        f"{ev.chunk} of {ev.source!r}", ev.epoch))
        arr = ev.epoch + delta[(ev.src, ev.dst)]
        register_arrival(ev.source, ev.chunk, ev.dst, arr, ev.fraction)

    _check_capacity(events, caps, kap, tol, violations)
    _check_switch_rest(sw_arrivals, opts, tol, violations)
    _check_hyper_budgets(events, hyper_groups, tol, violations)

    per_entry: dict[tuple, int] = {}
    for (s, c, dst) in sorted(entry_index, key=str):
        got = sorted(deliveries.get((s, c, dst), ()))
        acc = 0.0
        done = None
        for arr, qty in got:
            acc += qty
            if acc >= 1.0 - tol:
                done = arr
                break
        if done is None:
            violations.append(Violation("unmet-demand", f"chunk {c} of {s!r} at {dst!r}", -1))
        else:
            per_entry[(s, c, dst)] = done

    completion_per_dest: dict = {}
    for (s, c, dst), k in per_entry.items():
        completion_per_dest[dst] = max(completion_per_dest.get(dst, -1), k)
    completion = max(per_entry.values(), default=-1)
    output_bytes = {}
    for n in t.nodes:
        if not t.is_switch(n):
            output_bytes[n] = sum(d.chunk_size for (s, c, dst) in d.entries if dst == n)
    return SimReport(
        violations=violations,
        completion_epochs=completion_per_dest,
        completion_epoch=completion,
        transfer_time=(completion + 1) * float(tau) if completion >= 0 else 0.0,
        output_buffer_bytes=output_bytes,
        demand_bytes=d.total_bytes(),
        tau=float(tau),
        per_entry_completion=per_entry,
    )


def _check_capacity(events, caps, kap, tol, violations):
    load: dict[tuple, float] = {}
    max_epoch = -1
    for ev in events:
        load[(ev.src, ev.dst, ev.epoch)] = load.get((ev.src, ev.dst, ev.epoch), 0.0) + ev.fraction
        max_epoch = max(max_epoch, ev.epoch)
    for (i, j), cap in caps.items():
        w = kap[(i, j)]
        budget = float(w * cap)
        for k in range(max_epoch + 1):
            total = sum(load.get((i, j, k2), 0.0) for k2 in range(k - w + 1, k + 1))
            if total > budget * (1 + tol) + tol:
                violations.append(Violation("capacity", f"({i!r},{j!r})", k))


def _check_switch_rest(sw_arrivals, opts, tol, violations):
    for (s, c, sw), records in sorted(sw_arrivals.items(), key=str):
        for r in records:
            if opts.switch_mode == NO_COPY or not r["whole"]:
                if r["qty"] - r["used"] > tol:
                    violations.append(Violation(
                        "switch-buffer", f"chunk {c} of {s!r} rests at {sw!r}", r["usable"]))
            elif r["used"] == 0.0:
                violations.append(Violation(
                    "switch-buffer", f"chunk {c} of {s!r} rests at {sw!r}", r["usable"]))


def _check_hyper_budgets(events, hyper_groups, tol, violations):
    if not hyper_groups:
        return
    for sw, group in sorted(hyper_groups.items(), key=lambda kv: str(kv[0])):
        pairs = set(group.pairs)
        by_epoch: dict[int, list] = {}
        for ev in events:
            if (ev.src, ev.dst) in pairs:
                by_epoch.setdefault(ev.epoch, []).append(ev)
        for k, evs in sorted(by_epoch.items()):
            if sum(e.fraction for e in evs) > group.budget + tol:
                violations.append(Violation("capacity", f"hyper-edges of {sw!r}", k))
            for node in {e.src for e in evs}:
                if sum(e.fraction for e in evs if e.src == node) > 1 + tol:
                    violations.append(Violation("capacity", f"{node!r} egress via {sw!r}", k))
            for node in {e.dst for e in evs}:
                if sum(e.fraction for e in evs if e.dst == node) > 1 + tol:
                    violations.append(Violation("capacity", f"{node!r} ingress via {sw!r}", k))


def algorithmic_bandwidth(report: SimReport) -> dict:
    """Received bytes over transfer time, per destination and in aggregate."""
    total_bytes = sum(report.output_buffer_bytes.values())
    if total_bytes == 0:
        return {"aggregate": 0.0, "per_node": {n: 0.0 for n in report.output_buffer_bytes}}
    if report.transfer_time <= 0:
        raise ValidationError("zero transfer time with nonzero demand")
    per_node = {n: b / report.transfer_time for n, b in report.output_buffer_bytes.items()}
    return {"aggregate": total_bytes / report.transfer_time, "per_node": per_node}
