"""Epoch arithmetic: durations, link delays in epochs, capacities in chunks.

Ratios are computed with Fraction so that exact boundaries (a link that is an
integer multiple of the epoch) never fall on the wrong side of a ceiling.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ValidationError
from .topology import Edge, Topology

SLOWEST = "slowest"
FASTEST = "fastest"


@dataclass(frozen=True)
class EpochConfig:
    tau: float  # epoch duration, seconds
    K: int  # epoch count; epoch indices run 0..K-1
    duration_mode: str = SLOWEST
    epoch_multiplier: int = 1
    chunk_size: int = 1  # bytes

    def __post_init__(self):
        if self.tau <= 0:
            raise ValidationError("tau must be positive")
        if self.K < 1:
            raise ValidationError("K must be >= 1")
        if self.epoch_multiplier < 1:
            raise ValidationError("epoch_multiplier must be >= 1")
        if self.duration_mode not in (SLOWEST, FASTEST):
            raise ValidationError(f"unknown duration mode {self.duration_mode!r}")

    def with_horizon(self, K: int) -> "EpochConfig":
        return EpochConfig(self.tau, K, self.duration_mode, self.epoch_multiplier,
                           self.chunk_size)

    @property
    def windowed(self) -> bool:
        # Fastest-link epochs make slow links fractional per epoch; whole-chunk
        # formulations then need sliding-window capacity and widened delays.
        return self.duration_mode == FASTEST


def epoch_duration(t: Topology, chunk_size: int, mode: str = FASTEST,
                   em: int = 1) -> float:
    """Seconds one epoch lasts: em times the chunk time of the slowest or fastest link."""
    caps = [e.capacity for e in t.edges]
    if not caps:
        raise ValidationError("topology has no edges")
    ref = min(caps) if mode == SLOWEST else max(caps)
    return float(em * Fraction(chunk_size) / _frac(ref))


def compute_delta(edge: Edge, tau: float) -> int:
    """Link latency in whole epochs: ceil(alpha / tau)."""
    if tau <= 0:
        raise ValidationError("tau must be positive")
    if edge.alpha == 0:
        return 0
    return _ceil(_frac(edge.alpha) / _frac(tau))


def cap_chunks(t: Topology, edge: Edge, k: int, cfg: EpochConfig) -> Fraction:
    """Capacity of an edge during epoch k, in chunks per epoch."""
    cap = t.capacity_at(edge, k)
    return _frac(cap) * _frac(cfg.tau) / Fraction(cfg.chunk_size)


def kappa(edge: Edge, cfg: EpochConfig) -> int:
    """Epochs needed to push one whole chunk through the edge at base capacity.

    Pure arithmetic; whether windows actually apply is the formulation's call.
    """
    per_epoch = _frac(edge.capacity) * _frac(cfg.tau) / Fraction(cfg.chunk_size)
    if per_epoch <= 0:
        raise ValidationError(f"edge ({edge.src!r},{edge.dst!r}) has no capacity")
    return max(1, _ceil(1 / per_epoch))


def max_kappa(t: Topology, cfg: EpochConfig) -> int:
    """Epochs a chunk needs on the slowest link of the topology."""
    return max((kappa(e, cfg) for e in t.edges), default=1)


def effective_delta(edge: Edge, cfg: EpochConfig, kappa_slowest: int | None = None) -> int:
    """Epochs from send to availability at the far end.

    In windowed (fastest-link) mode every delay is widened by the epochs a
    chunk spends traversing the slowest link, so nothing is forwarded
    mid-transmission anywhere in the network.
    """
    widen = 0
    if cfg.windowed:
        widen = (kappa_slowest if kappa_slowest is not None else kappa(edge, cfg)) - 1
    return compute_delta(edge, cfg.tau) + widen


def max_effective_delta(t: Topology, cfg: EpochConfig) -> int:
    km = max_kappa(t, cfg) if cfg.windowed else None
    return max((effective_delta(e, cfg, km) for e in t.edges), default=0)


def _frac(x) -> Fraction:
    # Snap floats to the nearest short rational so quantities that began life
    # as round numbers (5e-7s epochs, 25 GB/s links) divide exactly; a ratio
    # landing at 0.5 - 1ulp would otherwise push a ceiling up a whole epoch.
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(x).limit_denominator(10 ** 12)


def _ceil(q: Fraction) -> int:
    return -int((-q) // 1) if q > 0 else 0


def ceil_frac(q) -> int:
    return _ceil(_frac(q))
