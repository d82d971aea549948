"""
Link metrics: closed-form SINRs, the SINR -> PER model, and the Monte Carlo
frame simulator that runs the whole pilot / data / ACK exchange.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .channel import LinkConfig, draw_channels
from .jamming import JammingAction, Scheme, allocate_energy, gen_jamming_block
from .numerics import SingularMatrixError, hermitian, left_pinv, right_pinv, sample_complex_gaussian
from .phy import FramePlan, Mcs, ack_recover, beamform_vector, build_pilot, demodulate, modulate

__all__ = [
    "SINR_CEILING",
    "SinrReport",
    "TrialOutcome",
    "FrameResult",
    "BerEstimate",
    "sinr_barrage",
    "sinr_pilot",
    "sinr_ack",
    "ack_sinr_terms",
    "expected_sinr",
    "per_model",
    "per_lower_bound",
    "simulate_frame",
    "estimate_ber",
    "frame_rng",
]

SINR_CEILING = 1e12


@dataclass(frozen=True)
class SinrReport:
    """Linear SINR per spatial stream (a single entry for the ACK link)."""

    per_stream: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_stream))


@dataclass(frozen=True)
class TrialOutcome:
    bit_errors: int
    bits: int
    packet_errors: int
    packets: int
    flagged: bool = False

    def __post_init__(self):
        if not (0 <= self.bit_errors <= self.bits and 0 <= self.packet_errors <= self.packets):
            raise ValueError(f"inconsistent error counts: {self}")


@dataclass(frozen=True)
class FrameResult:
    """Outcome of one simulated frame: forward data, backward ACK, measured SINRs."""

    data: TrialOutcome
    ack: TrialOutcome
    sinr: SinrReport
    ack_sinr: SinrReport

    @property
    def flagged(self) -> bool:
        return self.data.flagged


def _ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1.0), SINR_CEILING)
    return np.minimum(out, SINR_CEILING)


def _zf_terms(H, G):
    Hp = left_pinv(H)
    HpG = Hp @ G
    jam = np.real(np.einsum("ij,ij->i", HpG, HpG.conj()))
    noise = np.real(np.diag(np.linalg.inv(hermitian(H) @ H)))
    return jam, noise


def sinr_barrage(H, G, E_s, E_j, N_0) -> SinrReport:
    """Per-stream post-ZF SINR with jamming on the data block and a perfect estimate."""
    jam, noise = _zf_terms(np.asarray(H), np.asarray(G))
    return SinrReport(_ratio(E_s, E_j * jam + N_0 * noise))


def sinr_pilot(H, G, E_s, E_j, N_0, K, M=None) -> SinrReport:
    """
    Per-stream effective SINR when only the pilot is jammed.

    The pilot-borne jamming reaches the detector scaled by ``M/K`` and the
    estimation noise inflates the thermal term by ``1 + 1/K``.
    """
    H = np.asarray(H)
    M = H.shape[1] if M is None else M
    if K < 1:
        raise ValueError("K must be >= 1")
    jam, noise = _zf_terms(H, np.asarray(G))
    return SinrReport(_ratio(E_s, E_j * (M / K) * jam + (1.0 + 1.0 / K) * N_0 * noise))


def ack_sinr_terms(H_hat, u, G, F, E_s, E_jp, E_ja, N_0, K) -> tuple[float, float]:
    """
    Signal and interference-plus-noise power at the MRC output, both divided
    by the beam gain ``||H_hat^T u||^2``.

    The interference has two parts. Residual estimation error from the
    pilot, ``(E_jp ||G^T u||^2 + N_0 ||u||^2) / K``, rides on the beam. The
    direct part is ACK jamming through ``F`` plus thermal noise, projected
    onto ``H_hat^T u``. Pass ``K = inf`` for a perfect estimate.
    """
    u = np.asarray(u).reshape(-1, 1)
    v = np.asarray(H_hat).T @ u
    gain = float(np.real(hermitian(v) @ v)[0, 0])
    if gain <= 0.0:
        raise ValueError("beamformed channel has zero gain")
    F = np.asarray(F)
    Gtu = np.asarray(G).T @ u
    residual = (E_jp * float(np.real(hermitian(Gtu) @ Gtu)[0, 0])
                + N_0 * float(np.real(hermitian(u) @ u)[0, 0])) / K
    Fhv = hermitian(F) @ v
    direct = (E_ja * float(np.real(hermitian(Fhv) @ Fhv)[0, 0]) + N_0 * gain) / gain
    return gain * E_s, residual + direct


def sinr_ack(H_hat, u, G, F, E_s, E_jp, E_ja, N_0, K, L=None) -> SinrReport:
    """Post-MRC SINR of the ACK symbol, capped at `SINR_CEILING`."""
    if L is not None and np.asarray(G).shape[1] != L:
        raise ValueError(f"G has {np.asarray(G).shape[1]} jammer columns, expected L={L}")
    signal, interference = ack_sinr_terms(H_hat, u, G, F, E_s, E_jp, E_ja, N_0, K)
    return SinrReport(np.atleast_1d(_ratio(signal, interference)))


def expected_sinr(scheme, cfg: LinkConfig, plan: FramePlan, E_jb=0.0, E_jp=0.0, E_ja=0.0,
                  lambda_max_mean=None) -> float:
    """
    Channel-averaged SINR for the data link (barrage / pilot) or the ACK link.

    For the pilot case, any barrage-like energy `E_jb` (a pilot burst
    overrunning into the data) adds ``E_jb * theta_G`` to the denominator;
    it is 0 for a clean pilot attack.
    """
    scheme = Scheme.parse(scheme)
    M, N, L, K = cfg.M, cfg.N, cfg.L, plan.K
    num = cfg.E_s * cfg.theta_H
    if scheme in (Scheme.BARRAGE, Scheme.NONE):
        den = E_jb * cfg.theta_G + cfg.N_0
    elif scheme is Scheme.PILOT:
        den = (M / K) * E_jp * cfg.theta_G + (1.0 + 1.0 / K) * cfg.N_0 + E_jb * cfg.theta_G
    else:
        if lambda_max_mean is None:
            raise ValueError("ACK expected SINR needs lambda_max_mean")
        num = lambda_max_mean * N * num
        den = (N * N / K) * (E_jp * cfg.theta_G + cfg.N_0) + (L * E_ja * cfg.theta_F + cfg.N_0)
    return float(_ratio(num, den))


def per_model(gamma, mcs: Mcs):
    """
    Packet error rate at linear SINR `gamma`: 1 up to the threshold, then
    ``min(1, a_z exp(-b_z gamma))``. Accepts scalars or arrays.
    """
    g = np.asarray(gamma, dtype=float)
    tail = np.minimum(1.0, mcs.a_z * np.exp(-mcs.b_z * g))
    out = np.where(g <= mcs.gamma_th, 1.0, tail)
    return float(out) if out.ndim == 0 else out


def per_lower_bound(gamma_bar, gamma_th):
    """Markov-inequality PER bound ``1 - gamma_bar/gamma_th`` clamped to [0, 1]."""
    if gamma_th <= 0:
        raise ValueError("gamma_th must be positive")
    out = np.clip(1.0 - np.asarray(gamma_bar, dtype=float) / gamma_th, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


@functools.lru_cache(maxsize=64)
def _pilot(M: int, K: int, E_s: float):
    X = build_pilot(M, K, E_s).matrix
    X.setflags(write=False)
    Xp = right_pinv(X)
    Xp.setflags(write=False)
    return X, Xp


def frame_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for frame `index` under master `seed`."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def _flagged(plan: FramePlan, data_bits: int) -> FrameResult:
    nan = SinrReport(np.array([np.nan]))
    return FrameResult(
        data=TrialOutcome(data_bits // 2, data_bits, plan.packets_per_frame, plan.packets_per_frame, True),
        ack=TrialOutcome(plan.ack_bits // 2, plan.ack_bits, 1, 1, True),
        sinr=nan, ack_sinr=nan,
    )


def simulate_frame(cfg: LinkConfig, plan: FramePlan, action: JammingAction,
                   rng: np.random.Generator) -> FrameResult:
    """
    Run one frame end to end.

    Pilot through ``H`` (jammed if the action hits pilot slots), LS estimate,
    ``D`` data slots through ``H`` with zero-forcing on the estimate, then an
    ``A``-symbol ACK beamformed back through ``H^T`` and recovered by MRC at
    the transmitter, with ACK jamming arriving through ``F``.

    Channels, pilot noise, data, ACK and jamming each draw from their own
    child stream, so changing only the jamming energy leaves every other
    random quantity of the frame untouched.
    """
    plan.check(cfg.M)
    M, N, L, K, D, A = cfg.M, cfg.N, cfg.L, plan.K, plan.D, plan.A
    E_s, N_0 = cfg.E_s, cfg.N_0
    chan_rng, pilot_rng, data_rng, ack_rng, jam_rng = rng.spawn(5)
    ch = draw_channels(cfg, chan_rng)
    alloc = allocate_energy(action, cfg, plan)
    data_bits = plan.packets_per_frame * plan.packet_bits

    def jam(start, stop):
        """Jammer output (L rows) over frame slots [start, stop)."""
        hit = alloc.overlap(start, stop)
        out = np.zeros((L, stop - start), dtype=np.complex128)
        if len(hit) and alloc.E_j > 0:
            out[:, hit.start - start:hit.stop - start] = gen_jamming_block(L, alloc.E_j, len(hit), jam_rng).matrix
        return out

    # pilot and estimate
    X, Xp = _pilot(M, K, E_s)
    Y = ch.H @ X + sample_complex_gaussian(N, K, N_0, pilot_rng) + ch.G @ jam(0, K)
    H_hat = Y @ Xp

    # forward data
    bits = data_rng.integers(0, 2, size=data_bits, dtype=np.uint8)
    x = modulate(bits, plan.data_mcs, E_s).reshape(D, M).T
    y = ch.H @ x + sample_complex_gaussian(N, D, N_0, data_rng) + ch.G @ jam(K, K + D)
    try:
        x_hat = left_pinv(H_hat) @ y
        u = beamform_vector(H_hat)
    except (SingularMatrixError, ValueError):
        return _flagged(plan, data_bits)
    err = demodulate(x_hat.T.ravel(), plan.data_mcs, E_s) != bits
    pkt = err.reshape(plan.packets_per_frame, plan.packet_bits).any(axis=1)
    mse = np.mean(np.abs(x_hat - x) ** 2, axis=1)
    data = TrialOutcome(int(err.sum()), data_bits, int(pkt.sum()), plan.packets_per_frame)

    # backward ACK
    ack_bits = ack_rng.integers(0, 2, size=plan.ack_bits, dtype=np.uint8)
    s = modulate(ack_bits, plan.ack_mcs, E_s)
    y_ack = (ch.H.T @ u) @ s[None, :] + sample_complex_gaussian(M, A, N_0, ack_rng) \
        + ch.F @ jam(K + D, K + D + A)
    s_hat = ack_recover(y_ack, H_hat, u)
    ack_err = demodulate(s_hat, plan.ack_mcs, E_s) != ack_bits
    ack = TrialOutcome(int(ack_err.sum()), plan.ack_bits, int(ack_err.any()), 1)
    ack_mse = np.mean(np.abs(s_hat - s) ** 2)
    return FrameResult(data, ack, SinrReport(_ratio(E_s, mse)), SinrReport(np.atleast_1d(_ratio(E_s, ack_mse))))


@dataclass(frozen=True)
class BerEstimate:
    """Pooled error ratios over a run of frames with 95% half-widths."""

    ber: float
    ci95: float
    per: float
    ack_ber: float
    ack_ci95: float
    ack_per: float
    frames: int
    flagged_frames: int


def _pooled(errors: np.ndarray, total: np.ndarray) -> tuple[float, float]:
    """
    Pooled ratio and a normal-approximation 95% half-width.

    Frames are the independent units (errors inside one fading block are
    correlated), so the variance is the ratio-estimator variance across frames.
    """
    n = errors.size
    ratio = errors.sum() / total.sum()
    if n < 2:
        p = ratio
        return float(ratio), float(1.96 * np.sqrt(p * (1 - p) / total.sum()))
    resid = errors - ratio * total
    var = np.sum(resid ** 2) / (n * (n - 1) * np.mean(total) ** 2)
    return float(ratio), float(1.96 * np.sqrt(var))


def estimate_ber(cfg: LinkConfig, plan: FramePlan, action: JammingAction,
                 frames: int, seed: int) -> BerEstimate:
    """
    Monte Carlo BER/PER over `frames` frames; frame ``i`` uses
    ``frame_rng(seed, i)`` so the result does not depend on evaluation order.
    """
    if frames < 1:
        raise ValueError("frames must be >= 1")
    stats = np.zeros((frames, 8), dtype=np.int64)
    for i in range(frames):
        r = simulate_frame(cfg, plan, action, frame_rng(seed, i))
        stats[i] = (r.data.bit_errors, r.data.bits, r.data.packet_errors, r.data.packets,
                    r.ack.bit_errors, r.ack.bits, r.ack.packet_errors, int(r.flagged))
    ber, ci = _pooled(stats[:, 0], stats[:, 1])
    ack_ber, ack_ci = _pooled(stats[:, 4], stats[:, 5])
    return BerEstimate(
        ber=ber, ci95=ci,
        per=float(stats[:, 2].sum() / stats[:, 3].sum()),
        ack_ber=ack_ber, ack_ci95=ack_ci,
        ack_per=float(stats[:, 6].sum() / frames),
        frames=frames, flagged_frames=int(stats[:, 7].sum()),
    )
