"""
PHY building blocks: constellations, pilots, least-squares channel
estimation, zero-forcing detection for the spatially multiplexed data link
and beamforming / maximal-ratio recovery for the single-stream ACK link.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import hermitian, left_pinv, max_eigenpair, right_pinv

__all__ = [
    "Mcs",
    "MCS_TABLE",
    "BPSK",
    "QPSK",
    "QAM16",
    "QAM64",
    "FramePlan",
    "SymbolBlock",
    "build_pilot",
    "modulate",
    "demodulate",
    "ls_estimate",
    "zf_detect",
    "beamform_vector",
    "ack_recover",
]


@dataclass(frozen=True)
class Mcs:
    """
    Modulation and coding scheme with its packet-error-rate fit.

    The PER of a packet received at linear SINR ``g`` is 1 for
    ``g <= gamma_th`` and ``a_z * exp(-b_z * g)`` above it.
    """

    id: int
    name: str
    bits_per_symbol: int
    a_z: float
    b_z: float
    gamma_th: float

    def __post_init__(self):
        if self.bits_per_symbol not in (1, 2, 4, 6):
            raise ValueError(f"unsupported bits_per_symbol {self.bits_per_symbol}")
        if self.a_z <= 0 or self.b_z <= 0 or self.gamma_th <= 0:
            raise ValueError("a_z, b_z and gamma_th must be positive")
        if self.a_z * np.exp(-self.b_z * self.gamma_th) > 1.0 + 1e-9:
            raise ValueError(f"{self.name}: a_z*exp(-b_z*gamma_th) exceeds 1")


def _mcs(id_, name, bps, a, b):
    # threshold where the exponential fit reaches PER = 1
    return Mcs(id_, name, bps, a, b, float(np.log(a) / b))


# Convolutionally coded modes (packet-level fit). QPSK-9/16 reuses the QPSK-1/2 fit.
BPSK = _mcs(1, "BPSK-1/2", 1, 274.7229, 7.9932)
QPSK = _mcs(2, "QPSK-9/16", 2, 90.2514, 3.4998)
QAM16 = _mcs(3, "16QAM-3/4", 4, 53.3987, 0.3756)
QAM64 = _mcs(4, "64QAM-3/4", 6, 35.3508, 0.0900)

MCS_TABLE: dict[int, Mcs] = {m.id: m for m in (BPSK, QPSK, QAM16, QAM64)}


@dataclass(frozen=True)
class SymbolBlock:
    """A ``streams x slots`` block of symbols and its nominal per-symbol energy."""

    matrix: np.ndarray
    energy_per_symbol: float


@dataclass(frozen=True)
class FramePlan:
    """
    Slot layout of one frame.

    ``K`` pilot slots and ``D`` data slots are M-vector symbols; the ``A``
    ACK slots are scalar symbols sent back over the beamformed link.
    """

    K: int
    D: int
    A: int
    data_mcs: Mcs = field(default=BPSK)
    ack_mcs: Mcs = field(default=BPSK)
    packets_per_frame: int = 240
    packet_bits: int = 1024

    def __post_init__(self):
        if min(self.K, self.D, self.A) < 1:
            raise ValueError("K, D and A must be positive")
        if self.packets_per_frame < 1 or self.packet_bits < 1:
            raise ValueError("packets_per_frame and packet_bits must be positive")

    @classmethod
    def for_link(cls, M: int, K: int, *, data_mcs: Mcs = BPSK, ack_mcs: Mcs = BPSK,
                 packets_per_frame: int = 240, packet_bits: int = 1024,
                 ack_bits: int = 512) -> "FramePlan":
        """Derive ``D`` and ``A`` from the payload sizes; sizes must divide evenly."""
        data_bits = packets_per_frame * packet_bits
        per_slot = data_mcs.bits_per_symbol * M
        if data_bits % per_slot:
            raise ValueError(f"{data_bits} data bits do not fill whole {per_slot}-bit slots")
        if ack_bits % ack_mcs.bits_per_symbol:
            raise ValueError("ACK bits do not fill whole symbols")
        return cls(K=K, D=data_bits // per_slot, A=ack_bits // ack_mcs.bits_per_symbol,
                   data_mcs=data_mcs, ack_mcs=ack_mcs,
                   packets_per_frame=packets_per_frame, packet_bits=packet_bits)

    @property
    def ack_bits(self) -> int:
        return self.A * self.ack_mcs.bits_per_symbol

    def check(self, M: int) -> None:
        """Raise if the plan is inconsistent with an ``M``-antenna transmitter."""
        if self.K < M:
            raise ValueError(f"pilot length K={self.K} shorter than M={M}")
        bits = self.packets_per_frame * self.packet_bits
        if self.D * self.data_mcs.bits_per_symbol * M != bits:
            raise ValueError(f"D={self.D} does not carry {bits} bits over {M} streams")


def build_pilot(M: int, K: int, E_s: float) -> SymbolBlock:
    """
    Orthogonal training block with ``X X^H = K E_s I_M``.

    Rows are the first `M` rows of the K-point DFT matrix scaled by
    ``sqrt(E_s)``, so every pilot symbol has energy exactly `E_s`.
    """
    if K < M:
        raise ValueError(f"pilot length K={K} must be >= M={M}")
    m = np.arange(M)[:, None]
    k = np.arange(K)[None, :]
    X = np.sqrt(E_s) * np.exp(-2j * np.pi * ((m * k) % K) / K)
    return SymbolBlock(X, E_s)


def _pam_levels(bits_per_axis: int) -> int:
    return 1 << bits_per_axis


def _scale(mcs: Mcs, E_s: float) -> float:
    """Amplitude of the unit grid step so the constellation averages `E_s`."""
    if mcs.bits_per_symbol == 1:
        return np.sqrt(E_s)
    m = _pam_levels(mcs.bits_per_symbol // 2)
    # square QAM on the odd-integer grid has mean energy 2(m^2 - 1)/3
    return np.sqrt(E_s * 3.0 / (2.0 * (m * m - 1)))


def _bits_to_int(bits: np.ndarray) -> np.ndarray:
    k = bits.shape[-1]
    weights = 1 << np.arange(k - 1, -1, -1)
    return bits @ weights


def _int_to_bits(vals: np.ndarray, k: int) -> np.ndarray:
    shifts = np.arange(k - 1, -1, -1)
    return ((vals[..., None] >> shifts) & 1).astype(np.uint8)


def _gray_to_index(g: np.ndarray) -> np.ndarray:
    i = g.copy()
    shift = g >> 1
    while np.any(shift):
        i ^= shift
        shift >>= 1
    return i


def _pam_modulate(bits: np.ndarray, k: int) -> np.ndarray:
    m = _pam_levels(k)
    idx = _gray_to_index(_bits_to_int(bits))
    # index 0 (label 0...0) sits at the most positive level
    return (m - 1 - 2 * idx).astype(float)


def _pam_demodulate(a: np.ndarray, k: int) -> np.ndarray:
    m = _pam_levels(k)
    t = np.clip(((m - 1) - a) / 2.0, 0.0, m - 1)
    lo = np.floor(t).astype(np.int64)
    lo = np.minimum(lo, m - 1)
    idx = np.floor(t + 0.5).astype(np.int64).clip(0, m - 1)
    tie = (t - lo) == 0.5
    if np.any(tie):
        hi = np.minimum(lo + 1, m - 1)
        gray_lo = lo ^ (lo >> 1)
        gray_hi = hi ^ (hi >> 1)
        idx = np.where(tie, np.where(gray_lo <= gray_hi, lo, hi), idx)
    gray = idx ^ (idx >> 1)
    return _int_to_bits(gray, k)


def modulate(bits, mcs: Mcs, E_s: float = 1.0) -> np.ndarray:
    """
    Map a bit sequence onto Gray-labelled symbols with mean energy `E_s`.

    BPSK sends bit 0 as ``+sqrt(E_s)``. Square QAM modes split each label
    into an in-phase half (leading bits) and a quadrature half, both
    Gray-coded PAM with label 0 on the most positive level.

    Examples
    --------
    >>> modulate([0, 1], BPSK)
    array([ 1.+0.j, -1.+0.j])
    """
    bits = np.asarray(bits, dtype=np.int64).ravel()
    bps = mcs.bits_per_symbol
    if bits.size % bps:
        raise ValueError(f"{bits.size} bits is not a multiple of {bps} bits/symbol")
    scale = _scale(mcs, E_s)
    groups = bits.reshape(-1, bps)
    if bps == 1:
        return (scale * (1.0 - 2.0 * groups[:, 0])).astype(np.complex128)
    k = bps // 2
    i_amp = _pam_modulate(groups[:, :k], k)
    q_amp = _pam_modulate(groups[:, k:], k)
    return scale * (i_amp + 1j * q_amp)


def demodulate(symbols, mcs: Mcs, E_s: float = 1.0) -> np.ndarray:
    """
    Hard-decision inverse of `modulate`.

    Points exactly on a decision boundary go to the neighbour with the
    lower Gray label, so a zero real part decodes to bit 0.
    """
    s = np.asarray(symbols, dtype=np.complex128).ravel()
    scale = _scale(mcs, E_s)
    if mcs.bits_per_symbol == 1:
        return (s.real < 0).astype(np.uint8)
    k = mcs.bits_per_symbol // 2
    i_bits = _pam_demodulate(s.real / scale, k)
    q_bits = _pam_demodulate(s.imag / scale, k)
    return np.concatenate([i_bits, q_bits], axis=1).ravel()


def ls_estimate(Y: np.ndarray, X: SymbolBlock | np.ndarray) -> np.ndarray:
    """Least-squares channel estimate ``Y X^dagger`` from a received pilot block."""
    Xm = X.matrix if isinstance(X, SymbolBlock) else np.asarray(X)
    return np.asarray(Y) @ right_pinv(Xm)


def zf_detect(y: np.ndarray, H_hat: np.ndarray) -> np.ndarray:
    """Zero-forcing equalization ``H_hat^dagger y``; `y` may hold many slots as columns."""
    return left_pinv(H_hat) @ y


def beamform_vector(H_hat: np.ndarray) -> np.ndarray:
    """
    Receive-side beamformer for the ACK: ``sqrt(N)`` times the dominant
    eigenvector of ``(H_hat^T)^H H_hat^T``, so ``||u||^2 = N``.
    """
    H_hat = np.asarray(H_hat, dtype=np.complex128)
    if not np.any(H_hat):
        raise ValueError("cannot beamform on an all-zero channel estimate")
    Ht = H_hat.T
    _, v = max_eigenpair(hermitian(Ht) @ Ht)
    n = H_hat.shape[0]
    return np.sqrt(n) * v


def ack_recover(y: np.ndarray, H_hat: np.ndarray, u: np.ndarray) -> np.ndarray:
    """
    Maximal-ratio recovery of the ACK symbols at the transmitter.

    Projects the received ``M x A`` block onto ``H_hat^T u`` and divides by
    ``u^H (H_hat^T)^H H_hat^T u``. Returns one complex estimate per column.
    """
    v = np.asarray(H_hat).T @ u
    norm = float(np.real(hermitian(v) @ v)[0, 0])
    if norm <= 0.0:
        raise ValueError("beamformed channel has zero gain")
    return (hermitian(v) @ np.atleast_2d(y)).ravel() / norm
