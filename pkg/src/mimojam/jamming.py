"""
Jamming actions and how their energy budget lands on the frame.

The frame timeline is laid out as ``[pilot (K) | data (D) | ACK (A)]``.
Every scheme spends its whole budget as white Gaussian noise spread evenly
over the slots it targets, across all ``L`` jammer antennas.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import LinkConfig
from .numerics import sample_complex_gaussian
from .phy import FramePlan, SymbolBlock

__all__ = [
    "Scheme",
    "JammingAction",
    "EnergyAllocation",
    "EffectiveJamming",
    "allocate_energy",
    "gen_jamming_block",
    "effective_jamming",
]


class Scheme(enum.Enum):
    NONE = "none"
    BARRAGE = "barrage"
    PILOT = "pilot"
    ACK = "ack"

    @classmethod
    def parse(cls, value: "str | Scheme") -> "Scheme":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True)
class JammingAction:
    """What the jammer does in one frame; `T_p` is only meaningful for pilot jamming."""

    scheme: Scheme
    total_energy: float = 0.0
    T_p: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if self.total_energy < 0:
            raise ValueError("total_energy must be non-negative")
        if self.scheme is Scheme.PILOT and (self.T_p is None or self.T_p < 1):
            raise ValueError("pilot jamming needs T_p >= 1")


@dataclass(frozen=True)
class EnergyAllocation:
    """
    Per-symbol, per-antenna jamming energy `E_j` over a contiguous range of
    frame slots. ``L * E_j * len(jam_slots)`` equals the energy spent.
    """

    E_j: float
    jam_slots: range

    def overlap(self, start: int, stop: int) -> range:
        lo = max(start, self.jam_slots.start)
        hi = min(stop, self.jam_slots.stop)
        return range(lo, max(lo, hi))


def allocate_energy(action: JammingAction, cfg: LinkConfig, plan: FramePlan) -> EnergyAllocation:
    """
    Spread the action's budget over its target slots.

    Pilot jamming covers a prefix of ``T_p`` slots from the frame head:
    with ``T_p < K`` only part of the pilot is hit, with ``T_p > K`` the
    tail of the burst falls on the first data slots.
    """
    K, D, A = plan.K, plan.D, plan.A
    E = action.total_energy
    if action.scheme is Scheme.NONE or E == 0.0:
        return EnergyAllocation(0.0, range(0))
    if action.scheme is Scheme.BARRAGE:
        slots = range(K, K + D)
    elif action.scheme is Scheme.PILOT:
        if action.T_p > K + D:
            raise ValueError(f"T_p={action.T_p} runs past the data block (K+D={K + D})")
        slots = range(0, action.T_p)
    else:
        slots = range(K + D, K + D + A)
    return EnergyAllocation(E / (cfg.L * len(slots)), slots)


def gen_jamming_block(L: int, E_j: float, slots: int, rng: np.random.Generator) -> SymbolBlock:
    """``L x slots`` block of i.i.d. CN(0, E_j) jamming symbols."""
    return SymbolBlock(sample_complex_gaussian(L, slots, E_j, rng), E_j)


@dataclass(frozen=True)
class EffectiveJamming:
    """Per-symbol jamming energies seen by the data pilot, the data block and the ACK."""

    E_jb: float = 0.0
    E_jp: float = 0.0
    E_ja: float = 0.0


def effective_jamming(action: JammingAction, cfg: LinkConfig, plan: FramePlan,
                      peak_energy: float | None = None) -> EffectiveJamming:
    """
    Average per-slot jamming energy on each frame segment, for analytic SINRs.

    Energy on a partially covered pilot is averaged over all ``K`` pilot
    slots (that is what the least-squares estimate sees); a pilot burst
    longer than ``K`` leaks its tail onto the data block as weak barrage.
    `peak_energy` optionally caps the per-symbol, per-antenna jamming energy,
    which is what makes bursts much shorter than the pilot lose efficiency.
    """
    alloc = allocate_energy(action, cfg, plan)
    e = alloc.E_j if peak_energy is None else min(alloc.E_j, peak_energy)
    if e == 0.0:
        return EffectiveJamming()
    K, D, A = plan.K, plan.D, plan.A
    on_pilot = len(alloc.overlap(0, K))
    on_data = len(alloc.overlap(K, K + D))
    on_ack = len(alloc.overlap(K + D, K + D + A))
    return EffectiveJamming(E_jb=e * on_data / D, E_jp=e * on_pilot / K, E_ja=e * on_ack / A)
