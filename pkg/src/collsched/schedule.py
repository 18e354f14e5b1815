"""Schedules: pruned, deterministic chunk-send event lists plus serialization.

A schedule is the deliverable: which chunk crosses which edge in which epoch.
Solver output first passes a reverse trace that zeroes every flow not needed
to account for some demanded delivery.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .demand import Demand
from .epochs import EpochConfig
from .errors import ConservationError
from .milp import NO_COPY
from .solver import Solution
from .topology import NodeId, Topology


@dataclass(frozen=True)
class ScheduleEvent:
    source: NodeId
    chunk: int
    src: NodeId
    dst: NodeId
    epoch: int
    fraction: float = 1.0


@dataclass(frozen=True)
class Schedule:
    tau: float
    events: tuple[ScheduleEvent, ...]
    completion_epoch: int  # epoch of the last demanded delivery; -1 if no demand
    chunk_size: int = 1
    meta: dict = field(default_factory=dict)

    @property
    def transfer_time(self) -> float:
        return (self.completion_epoch + 1) * self.tau if self.completion_epoch >= 0 else 0.0


# ---------------------------------------------------------------------------
# Reverse-trace pruning

def _flow_values(sol: Solution, threshold: float = 0.5) -> dict:
    """(s, c, i, j, k) -> value for whole-chunk flows of a solved model."""
    return sol.family_values("F", threshold)


def prune_unused_flows(sol: Solution, d: Demand, t: Topology) -> Solution:
    """Zero every flow and buffer entry that no demanded delivery depends on.

    Walks backward from each destination's earliest delivery, preferring the
    earliest arrival and then the lowest sender id, marking the flows that
    account for each demanded chunk. Buffers are rebuilt from the surviving
    flows. Reads and the objective are untouched.
    """
    m = sol.model
    keep = trace_required_flows(_flow_values(sol), m.meta, set(m.meta["entries"]))
    updates = {}
    for key, idx in m.family_items("F"):
        v = float(sol.x[idx])
        if v >= 0.5 and key not in keep:
            updates[idx] = 0.0
    # Rebuild buffers from surviving flows so B rows mirror the pruned flows.
    if any(True for _ in m.family_items("B")):
        t_eff = m.meta["eff_topology"]
        delta = m.meta["delta"]
        cfg = m.meta["cfg"]
        arrivals: dict[tuple, list[int]] = {}
        for (s, c, i, j, k) in keep:
            arrivals.setdefault((s, c, j), []).append(k + delta[(i, j)])
        for (s, c) in m.meta["demand"].commodities:
            for n in t_eff.nodes:
                if not m.has_var("B", s, c, n, 0):
                    continue
                held = float(sol.x[m.var("B", s, c, n, 0)])
                arr = sorted(arrivals.get((s, c, n), []))
                for k in range(1, cfg.K + 1):
                    held += sum(1 for a in arr if a == k - 1)
                    idx = m.var("B", s, c, n, k)
                    if float(sol.x[idx]) != held:
                        updates[idx] = held
    return sol.replace_values(updates)


def trace_required_flows(flows: dict, meta: dict, entries: set) -> set:
    """The subset of whole-chunk flows needed to justify every delivery.

    flows: (s, c, i, j, k) -> value (>0 whole sends). Raises if some demanded
    chunk cannot be traced back to its source.
    """
    t_eff: Topology = meta["eff_topology"]
    delta = meta["delta"]
    no_copy_switch = meta["opts"].switch_mode == NO_COPY
    arrivals: dict[tuple, list[tuple[int, NodeId, int]]] = {}
    for (s, c, i, j, k) in flows:
        arrivals.setdefault((s, c, j), []).append((k + delta[(i, j)], i, k))
    for lst in arrivals.values():
        lst.sort(key=lambda a: (a[0], str(a[1])))

    keep: set = set()
    # At no-copy switches each arrival unit justifies exactly one forward.
    consumed: dict[tuple, int] = {}
    # (s, c, n) -> earliest epoch-end by which possession was already traced.
    possession: dict[tuple, int] = {}

    def justify(s, c, n, by_end: int):
        """Mark flows proving n holds chunk (s,c) by end of epoch `by_end`."""
        if n == s:
            return
        prev = possession.get((s, c, n))
        switch = t_eff.is_switch(n)
        if prev is not None and prev <= by_end and not switch:
            return
        options = [a for a in arrivals.get((s, c, n), ()) if a[0] <= by_end]
        if switch:
            # A switch cannot hold a chunk across epochs: the arrival must land
            # exactly at by_end (copy) and each unit forwards once (no-copy).
            options = [a for a in options if a[0] == by_end]
            if no_copy_switch:
                options = [a for a in options if consumed.get((s, c, n, a[1], a[2]), 0) < 1]
        if not options:
            raise ConservationError(
                f"cannot account for chunk {c} of {s!r} at {n!r} by epoch {by_end}")
        arr, i, k_send = options[0]
        if no_copy_switch and switch:
            consumed[(s, c, n, i, k_send)] = consumed.get((s, c, n, i, k_send), 0) + 1
        if not switch:
            possession[(s, c, n)] = arr if prev is None else min(prev, arr)
        if (s, c, i, n, k_send) not in keep:
            keep.add((s, c, i, n, k_send))
            justify(s, c, i, k_send - 1)

    deliveries = delivery_epochs(flows, meta, entries)
    for (s, c, dst) in sorted(entries, key=lambda e: (str(e[0]), e[1], str(e[2]))):
        justify(s, c, dst, deliveries[(s, c, dst)])
    return keep


def delivery_epochs(flows: dict, meta: dict, entries: set) -> dict:
    """Earliest arrival epoch of each demanded (s, c, d); raises if missing."""
    delta = meta["delta"]
    t_eff: Topology = meta["eff_topology"]
    earliest: dict[tuple, int] = {}
    # Chunks can relay, so propagate earliest possession forward.
    possession: dict[tuple, int] = {}
    for (s, c, i, j, k) in sorted(flows, key=lambda f: f[4]):
        arr = k + delta[(i, j)]
        key = (s, c, j)
        if key not in possession or arr < possession[key]:
            possession[key] = arr
    out = {}
    for (s, c, dst) in entries:
        if dst == s:
            out[(s, c, dst)] = 0
            continue
        arr = possession.get((s, c, dst))
        if arr is None:
            raise ConservationError(f"no delivery of chunk {c} from {s!r} to {dst!r}")
        out[(s, c, dst)] = arr
    return out


def schedule_from_flows(flows: dict, meta: dict, cfg: EpochConfig, chunk_size: int,
                        prune: bool = True) -> Schedule:
    """Build a schedule straight from whole-chunk flow values.

    Used when flows come from several chained solves and no single model holds
    them; completion is the latest arrival among demanded deliveries.
    """
    entries = set(meta["entries"])
    if not entries:
        return Schedule(cfg.tau, (), -1, chunk_size)
    kept_keys = trace_required_flows(flows, meta, entries) if prune else set(flows)
    kept = {k: flows[k] for k in kept_keys}
    completion = max(delivery_epochs(kept, meta, entries).values())
    events = [ScheduleEvent(s, c, i, j, k, 1.0)
              for (s, c, i, j, k) in sorted(
                  kept, key=lambda f: (f[4], str(f[0]), str(f[2]), str(f[3]), f[1]))]
    return Schedule(cfg.tau, tuple(events), completion, chunk_size)


def extract_schedule(sol: Solution, t: Topology, d: Demand, cfg: EpochConfig) -> Schedule:
    """One event per surviving whole-chunk flow, deterministically ordered."""
    m = sol.model
    flows = _flow_values(sol)
    entries = set(m.meta["entries"])
    if not entries:
        return Schedule(cfg.tau, (), -1, d.chunk_size)
    completion = max(_read_epochs(sol, entries).values())
    events = [ScheduleEvent(s, c, i, j, k, 1.0)
              for (s, c, i, j, k) in sorted(
                  flows, key=lambda f: (f[4], str(f[0]), str(f[2]), str(f[3]), f[1]))]
    return Schedule(cfg.tau, tuple(events), completion, d.chunk_size)


def _read_epochs(sol: Solution, entries: set) -> dict:
    """Earliest epoch each demanded entry's cumulative read reaches 1."""
    best: dict[tuple, int] = {}
    for (s, c, dst, k), v in sol.model.family_items("R"):
        if float(sol.x[v]) >= 0.5:
            key = (s, c, dst)
            if key in entries and (key not in best or k < best[key]):
                best[key] = k
    missing = entries - set(best)
    if missing:
        raise ConservationError(f"{len(missing)} demanded entries never read")
    return best


# ---------------------------------------------------------------------------
# Serialization

def schedule_to_json(s: Schedule) -> dict:
    return {
        "tau_sec": s.tau,
        "chunk_size_bytes": s.chunk_size,
        "completion_epoch": s.completion_epoch,
        "transfer_time_sec": s.transfer_time,
        "events": [
            {"src_rank": e.source, "chunk": e.chunk, "from": e.src, "to": e.dst,
             "epoch": e.epoch, "fraction": e.fraction}
            for e in s.events
        ],
        "meta": dict(s.meta),
    }


def schedule_from_json(doc: dict) -> Schedule:
    events = tuple(
        ScheduleEvent(e["src_rank"], int(e["chunk"]), e["from"], e["to"],
                      int(e["epoch"]), float(e.get("fraction", 1.0)))
        for e in doc["events"]
    )
    return Schedule(float(doc["tau_sec"]), events, int(doc["completion_epoch"]),
                    int(doc.get("chunk_size_bytes", 1)), dict(doc.get("meta", {})))


def save_schedule(s: Schedule, path) -> None:
    with open(path, "w") as f:
        json.dump(schedule_to_json(s), f, indent=2, sort_keys=True)
        f.write("\n")


def load_schedule(path) -> Schedule:
    with open(path) as f:
        return schedule_from_json(json.load(f))


def msccl_style_steps(s: Schedule) -> list[dict]:
    """Informational exporter: one ordered step per event, runtime-agnostic."""
    steps = []
    for n, e in enumerate(s.events):
        steps.append({
            "step": n, "type": "send", "src_rank": e.src, "dst_rank": e.dst,
            "src_buf_rank": e.source, "chunk": e.chunk, "epoch": e.epoch,
            "fraction": e.fraction,
        })
    return steps
