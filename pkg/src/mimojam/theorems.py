"""
Closed-form conditions deciding which jamming target is most efficient per
unit of energy. Everything here is arithmetic on scenario parameters; the
mean top eigenvalue is always passed in, never estimated here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ScenarioParams",
    "pilot_crossover",
    "thm1_pilot_beats_barrage",
    "thm2_pilot_beats_ack_on_ack",
    "thm2_boundary_K",
    "thm3_ack_beats_barrage",
    "thm3_ack_beats_pilot",
    "cond_ack_over_pilot_combined",
]


@dataclass(frozen=True)
class ScenarioParams:
    """Slot counts, antenna counts, path losses and PER thresholds of one link."""

    K: int
    D: int
    A: int
    M: int
    N: int
    L: int
    theta_G: float
    theta_F: float
    gamma_th_d: float
    gamma_th_a: float
    lambda_max_mean: float

    def __post_init__(self):
        for name in ("K", "D", "A", "M", "N", "L", "gamma_th_d", "gamma_th_a", "lambda_max_mean"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.theta_G < 0 or self.theta_F <= 0:
            raise ValueError("theta_G must be >= 0 and theta_F > 0")


def pilot_crossover(D, M) -> float:
    """Pilot length ``sqrt(D M)`` above which pilot jamming stops beating barrage."""
    return math.sqrt(D * M)


def thm1_pilot_beats_barrage(K, D, M) -> bool:
    """
    True when a unit of energy on the pilot lowers the data SINR more than the
    same unit spread over the data block, i.e. ``K < sqrt(D M)``.

    Compared as ``K^2 < D M`` so integer inputs are decided exactly.
    """
    return K * K < D * M


def thm2_pilot_beats_ack_on_ack(A, K, theta_G, theta_F, L, N) -> bool:
    """
    True when pilot jamming gives the ACK a PER bound at least as high as
    jamming the ACK directly: ``A theta_G / (K theta_F) >= K L / N^2``.
    """
    return A * theta_G / (K * theta_F) >= K * L / (N * N)


def thm2_boundary_K(A, theta_G, theta_F, L, N) -> float:
    """Pilot length at which both sides of the second condition are equal."""
    return math.sqrt(A * theta_G * N * N / (L * theta_F))


def _lhs(p: ScenarioParams, length) -> float:
    return p.A * p.theta_G / (length * p.theta_F)


def thm3_ack_beats_barrage(p: ScenarioParams) -> bool:
    """``A theta_G / (D theta_F) < L gamma_a / (lambda N gamma_d)``, noise neglected."""
    rhs = p.L * p.gamma_th_a / (p.lambda_max_mean * p.N * p.gamma_th_d)
    return _lhs(p, p.D) < rhs


def _ack_over_pilot_rhs(p: ScenarioParams) -> float:
    return p.K * p.L * p.gamma_th_a / (p.lambda_max_mean * p.M * p.N * p.gamma_th_d)


def thm3_ack_beats_pilot(p: ScenarioParams) -> bool:
    """``A theta_G / (K theta_F) < K L gamma_a / (lambda M N gamma_d)``."""
    return _lhs(p, p.K) < _ack_over_pilot_rhs(p)


def cond_ack_over_pilot_combined(p: ScenarioParams) -> bool:
    """
    ACK jamming preferred to pilot jamming on both the ACK and the data link:
    the left side must sit below both the second condition's bound ``K L / N^2``
    and the ACK-over-pilot bound.
    """
    return _lhs(p, p.K) < min(p.K * p.L / (p.N * p.N), _ack_over_pilot_rhs(p))
