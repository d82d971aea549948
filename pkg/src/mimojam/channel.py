"""
Physical scenario and per-frame Rayleigh channel draws.

Three links are modelled, each with i.i.d. CN(0, theta) entries where the
variance theta is the path loss of that link:

* ``H`` (N x M): transmitter -> receiver
* ``G`` (N x L): jammer -> receiver
* ``F`` (M x L): jammer -> transmitter

Fading is block fading: one realization covers a whole frame.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import sample_complex_gaussian

__all__ = ["LinkConfig", "ChannelRealization", "draw_channels", "estimate_expected_lambda_max"]


@dataclass(frozen=True)
class LinkConfig:
    """Static link scenario: antenna counts, path losses, energies."""

    M: int = 2
    N: int = 2
    L: int = 2
    theta_H: float = 1.0
    theta_G: float = 1.0
    theta_F: float = 1.0
    E_s: float = 1.0
    N_0: float = 0.1

    def __post_init__(self):
        for name in ("M", "N", "L"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.N < self.M:
            raise ValueError(f"need N >= M for zero-forcing, got N={self.N}, M={self.M}")
        for name in ("theta_H", "theta_G", "theta_F"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.E_s <= 0:
            raise ValueError("E_s must be positive")
        if self.N_0 < 0:
            raise ValueError("N_0 must be non-negative")


@dataclass(frozen=True)
class ChannelRealization:
    H: np.ndarray
    G: np.ndarray
    F: np.ndarray


def draw_channels(cfg: LinkConfig, rng: np.random.Generator) -> ChannelRealization:
    """Draw ``H``, ``G`` and ``F`` independently, in that order, from `rng`."""
    H = sample_complex_gaussian(cfg.N, cfg.M, cfg.theta_H, rng)
    G = sample_complex_gaussian(cfg.N, cfg.L, cfg.theta_G, rng)
    F = sample_complex_gaussian(cfg.M, cfg.L, cfg.theta_F, rng)
    return ChannelRealization(H, G, F)


def estimate_expected_lambda_max(cfg: LinkConfig, trials: int,
                                 rng: np.random.Generator) -> float:
    """
    Monte Carlo mean of the top eigenvalue of ``(H^T)^H H^T`` over `trials`
    fresh channel draws, taking the estimate as perfect.

    Only ``H`` is drawn; ``G`` and ``F`` don't enter this quantity, so the
    result scales exactly linearly with ``theta_H`` for a fixed seed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    total = 0.0
    done = 0
    while done < trials:
        n = min(_LAMBDA_CHUNK, trials - done)
        H = sample_complex_gaussian(n * cfg.N, cfg.M, cfg.theta_H, rng).reshape(n, cfg.N, cfg.M)
        Ht = np.swapaxes(H, 1, 2)
        gram = np.conj(np.swapaxes(Ht, 1, 2)) @ Ht
        total += np.linalg.eigvalsh(gram)[:, -1].clip(min=0.0).sum()
        done += n
    return float(total / trials)


_LAMBDA_CHUNK = 50_000
