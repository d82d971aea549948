import numpy as np
import pytest
from scipy import integrate, special

from mimojam.channel import LinkConfig, draw_channels
from mimojam.jamming import JammingAction
from mimojam.numerics import left_pinv, right_pinv
from mimojam.phy import BPSK, MCS_TABLE, QAM64, FramePlan, beamform_vector, build_pilot, modulate
from mimojam.linkmetrics import (
    SINR_CEILING,
    ack_sinr_terms,
    estimate_ber,
    expected_sinr,
    frame_rng,
    per_lower_bound,
    per_model,
    simulate_frame,
    sinr_ack,
    sinr_barrage,
    sinr_pilot,
)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


# a fixed, well-conditioned link used by the Monte Carlo oracles
H_FIX = np.array([[1.0 + 0.2j, 0.3 - 0.1j], [-0.2 + 0.4j, 0.9 - 0.3j]])
G_FIX = np.array([[0.8 - 0.5j, 0.1 + 0.6j], [0.4 + 0.2j, -0.7 + 0.3j]])
F_FIX = np.array([[0.5 + 0.5j, -0.3 + 0.9j], [1.1 - 0.2j, 0.2 + 0.1j]])


def ls_error_batch(G, K, E_j, N_0, n, rng):
    """``n`` independent LS estimation errors (N x M) for a jammed pilot."""
    N, L = G.shape
    Xp = right_pinv(build_pilot(2, K, 1.0).matrix)
    Z = np.sqrt(E_j) * crandn(rng, n, L, K)
    W = np.sqrt(N_0) * crandn(rng, n, N, K)
    return (G @ Z + W) @ Xp


class TestClosedFormSinr:
    def test_barrage_noise_only(self):
        r = sinr_barrage(np.eye(2), np.eye(2), 1.0, 0.0, 0.1)
        assert np.allclose(r.per_stream, 10.0)
        assert r.mean == pytest.approx(10.0)

    def test_barrage_jamming_only(self):
        r = sinr_barrage(np.eye(2), np.eye(2), 1.0, 0.1, 0.0)
        assert np.allclose(r.per_stream, 10.0)

    def test_pilot_closed_form(self):
        r = sinr_pilot(np.eye(2), np.eye(2), 1.0, 0.0, 0.1, K=4)
        assert np.allclose(r.per_stream, 8.0)

    def test_pilot_long_training_limit(self):
        a = sinr_pilot(H_FIX, G_FIX, 1.0, 0.0, 0.1, K=10**9).per_stream
        b = sinr_barrage(H_FIX, G_FIX, 1.0, 0.0, 0.1).per_stream
        assert np.allclose(a, b, rtol=1e-8)

    def test_pilot_equals_barrage_when_k_is_m(self):
        a = sinr_pilot(H_FIX, G_FIX, 1.0, 0.3, 0.0, K=2).per_stream
        b = sinr_barrage(H_FIX, G_FIX, 1.0, 0.3, 0.0).per_stream
        assert np.allclose(a, b)

    def test_singular_channel(self):
        with pytest.raises(np.linalg.LinAlgError):
            sinr_barrage(np.ones((2, 2)), np.eye(2), 1.0, 0.1, 0.1)

    def test_ceiling(self):
        r = sinr_barrage(np.eye(2), np.eye(2), 1.0, 0.0, 0.0)
        assert np.all(r.per_stream == SINR_CEILING)

    def test_barrage_matches_measured_zf_output(self):
        rng = np.random.default_rng(10)
        E_j, N_0, n = 0.2, 0.05, 100_000
        x = modulate(rng.integers(0, 2, 2 * n), BPSK).reshape(2, n)
        z = np.sqrt(E_j) * crandn(rng, 2, n)
        w = np.sqrt(N_0) * crandn(rng, 2, n)
        err = left_pinv(H_FIX) @ (H_FIX @ x + G_FIX @ z + w) - x
        measured = 1.0 / np.mean(np.abs(err) ** 2, axis=1)
        predicted = sinr_barrage(H_FIX, G_FIX, 1.0, E_j, N_0).per_stream
        assert measured == pytest.approx(predicted, rel=0.03)


class TestAckSinr:
    def test_noiseless_unjammed_caps(self):
        u = beamform_vector(H_FIX)
        r = sinr_ack(H_FIX, u, G_FIX, F_FIX, 1.0, 0.0, 0.0, 0.0, K=4)
        assert r.per_stream[0] == SINR_CEILING

    def test_scalar_reduction(self):
        # M=N=L=1, unit channels, ACK jamming only: |F^H v|^2 / |v|^2 = 1
        one = np.array([[1.0]])
        r = sinr_ack(one, one, one, one, 1.0, 0.0, 0.25, 0.05, K=8, L=1)
        assert r.per_stream[0] == pytest.approx(1.0 / (0.05 / 8 + 0.25 + 0.05))

    def test_l_mismatch(self):
        with pytest.raises(ValueError):
            sinr_ack(H_FIX, beamform_vector(H_FIX), G_FIX, F_FIX, 1, 0, 0, 0.1, K=4, L=3)

    def test_matches_measured_mrc_output(self):
        rng = np.random.default_rng(11)
        K, E_jp, E_ja, N_0, n = 4, 0.3, 0.2, 0.05, 100_000
        H_hat = H_FIX
        u = beamform_vector(H_hat)
        H_tilde = ls_error_batch(G_FIX, K, E_jp, N_0, n, rng)
        s = modulate(rng.integers(0, 2, n), BPSK)
        true_T = np.swapaxes(H_hat - H_tilde, 1, 2)
        y = (true_T @ u)[:, :, 0] * s[:, None]
        y = y + (F_FIX @ (np.sqrt(E_ja) * crandn(rng, 2, n))).T + np.sqrt(N_0) * crandn(rng, n, 2)
        v = H_hat.T @ u
        s_hat = (y @ v.conj()).ravel() / np.vdot(v, v).real
        measured = 1.0 / np.mean(np.abs(s_hat - s) ** 2)
        predicted = sinr_ack(H_hat, u, G_FIX, F_FIX, 1.0, E_jp, E_ja, N_0, K, L=2).per_stream[0]
        assert measured == pytest.approx(predicted, rel=0.03)


class TestExpectedSinr:
    cfg = LinkConfig(N_0=0.1)

    def test_barrage_unjammed(self):
        plan = FramePlan.for_link(2, 4)
        assert expected_sinr("barrage", self.cfg, plan) == pytest.approx(10.0)

    def test_pilot_barrage_identity(self):
        cfg = LinkConfig(N_0=1e-12)
        plan = FramePlan.for_link(2, 16)
        E_jb = 0.3
        p = expected_sinr("pilot", cfg, plan, E_jp=16 / 2 * E_jb)
        b = expected_sinr("barrage", cfg, plan, E_jb=E_jb)
        assert p == pytest.approx(b, rel=1e-9)

    def test_ack_needs_lambda(self):
        with pytest.raises(ValueError):
            expected_sinr("ack", self.cfg, FramePlan.for_link(2, 4))

    def test_ack_against_channel_average(self):
        cfg = LinkConfig(N_0=0.1)
        plan = FramePlan.for_link(2, 4)
        E_jp = E_ja = 1.0
        rng = np.random.default_rng(12)
        # ratio of channel-averaged signal power to averaged interference
        sig = den = lam = 0.0
        n = 10_000
        for _ in range(n):
            ch = draw_channels(cfg, rng)
            Ht = ch.H.T
            lam += np.linalg.eigvalsh(Ht.conj().T @ Ht)[-1]
            u = beamform_vector(ch.H)
            s, i = ack_sinr_terms(ch.H, u, ch.G, ch.F, 1.0, E_jp, E_ja, cfg.N_0, plan.K)
            sig += s
            den += i
        formula = expected_sinr("ack", cfg, plan, E_jp=E_jp, E_ja=E_ja, lambda_max_mean=lam / n)
        assert sig / den == pytest.approx(formula, rel=0.05)


class TestPer:
    @pytest.mark.parametrize("mcs", list(MCS_TABLE.values()), ids=lambda m: m.name)
    def test_zero_sinr(self, mcs):
        assert per_model(0.0, mcs) == 1.0

    def test_large_sinr(self):
        assert per_model(1e6, QAM64) == 0.0

    def test_continuity(self):
        m = QAM64
        above = per_model(m.gamma_th * (1 + 1e-12), m)
        assert above == pytest.approx(m.a_z * np.exp(-m.b_z * m.gamma_th), abs=1e-9)

    def test_range_and_monotone(self):
        g = np.linspace(0, 100, 2001)
        for m in MCS_TABLE.values():
            e = per_model(g, m)
            assert np.all((e >= 0) & (e <= 1))
            assert np.all(np.diff(e) <= 0)

    def test_lower_bound(self):
        assert per_lower_bound(3.0, 3.0) == 0.0
        assert per_lower_bound(1.5, 3.0) == 0.5
        assert per_lower_bound(6.0, 3.0) == 0.0
        with pytest.raises(ValueError):
            per_lower_bound(1.0, 0.0)


class TestLemmaOracles:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_estimation_error_second_moment(self, seed):
        rng = np.random.default_rng(100 + seed)
        K, E_j, N_0, n = 8, 0.5, 0.1, 100_000
        G = crandn(rng, 2, 2) + np.array([[1.0, 0.8], [0.6, 1.0]])
        C = crandn(rng, 2, 2)
        A = C @ C.conj().T + np.eye(2)
        Ht = ls_error_batch(G, K, E_j, N_0, n, rng)
        mc = np.mean(Ht @ A @ np.conj(np.swapaxes(Ht, 1, 2)), axis=0)
        closed = np.trace(A).real / K * (E_j * G @ G.conj().T + N_0 * np.eye(2))
        assert np.max(np.abs(mc - closed) / np.abs(closed)) < 0.05
        assert np.max(np.abs(Ht.mean(axis=0))) < 0.01

    def test_post_processing_noise(self):
        rng = np.random.default_rng(7)
        K, E_j, N_0, n, M = 16, 0.1, 0.01, 100_000, 2
        H_hat = H_FIX + ls_error_batch(G_FIX, K, E_j, N_0, n, rng)
        x = modulate(rng.integers(0, 2, 2 * n), BPSK).reshape(n, 2, 1)
        y = H_FIX @ x + np.sqrt(N_0) * crandn(rng, n, 2, 1)
        Hh_H = np.conj(np.swapaxes(H_hat, 1, 2))
        w_hat = np.linalg.solve(Hh_H @ H_hat, Hh_H @ y) - x
        mc = np.mean(w_hat @ np.conj(np.swapaxes(w_hat, 1, 2)), axis=0)
        Hp = left_pinv(H_FIX)
        closed = (1 + 1 / K) * N_0 * np.linalg.inv(H_FIX.conj().T @ H_FIX) \
            + (M / K) * E_j * Hp @ G_FIX @ G_FIX.conj().T @ Hp.conj().T
        assert np.linalg.norm(mc - closed) / np.linalg.norm(closed) < 0.10


class TestSimulation:
    def test_clean_frame_has_no_errors(self):
        cfg = LinkConfig(N_0=0.0)
        for mcs in MCS_TABLE.values():
            plan = FramePlan.for_link(2, 4, data_mcs=mcs, packets_per_frame=4, packet_bits=96)
            r = simulate_frame(cfg, plan, JammingAction("none"), frame_rng(1, mcs.id))
            assert r.data.bit_errors == 0 and r.ack.bit_errors == 0
            assert not r.flagged

    def test_common_random_numbers(self):
        cfg = LinkConfig()
        plan = FramePlan.for_link(2, 4, packets_per_frame=4, packet_bits=256)
        a = simulate_frame(cfg, plan, JammingAction("pilot", 0.0, T_p=4), frame_rng(5, 0))
        b = simulate_frame(cfg, plan, JammingAction("none"), frame_rng(5, 0))
        assert a.data == b.data and a.ack == b.ack

    def test_estimate_zero(self):
        cfg = LinkConfig(N_0=0.0)
        plan = FramePlan.for_link(2, 4, packets_per_frame=2, packet_bits=128)
        est = estimate_ber(cfg, plan, JammingAction("none"), 20, seed=3)
        assert (est.ber, est.ci95, est.ack_ber) == (0.0, 0.0, 0.0)

    def test_estimate_deterministic(self):
        cfg = LinkConfig()
        plan = FramePlan.for_link(2, 4, packets_per_frame=2, packet_bits=128)
        act = JammingAction("barrage", 5.0)
        assert estimate_ber(cfg, plan, act, 30, seed=9) == estimate_ber(cfg, plan, act, 30, seed=9)

    def test_rejects_zero_frames(self):
        with pytest.raises(ValueError):
            estimate_ber(LinkConfig(), FramePlan.for_link(2, 4), JammingAction("none"), 0, 0)

    def test_rayleigh_bpsk(self):
        snr = 10.0
        cfg = LinkConfig(M=1, N=1, L=1, N_0=1 / snr)
        plan = FramePlan.for_link(1, 512, packets_per_frame=4, packet_bits=256)

        def integrand(g):
            return 0.5 * special.erfc(np.sqrt(g)) * np.exp(-g / snr) / snr

        oracle, _ = integrate.quad(integrand, 0, np.inf)
        est = estimate_ber(cfg, plan, JammingAction("none"), 4000, seed=2024)
        assert abs(est.ber - oracle) < 3 * est.ci95 / 1.96
        assert est.flagged_frames == 0

    def test_more_energy_more_errors(self):
        cfg = LinkConfig(N_0=0.1)
        plan = FramePlan.for_link(2, 4, packets_per_frame=4, packet_bits=256)
        bers = [estimate_ber(cfg, plan, JammingAction("barrage", e), 200, seed=1).ber
                for e in (0.0, 50.0, 200.0)]
        assert bers[0] <= bers[1] <= bers[2]
