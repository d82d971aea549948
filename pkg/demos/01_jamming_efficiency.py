"""
Where should a jammer spend its energy?

Walks through the closed-form conditions on the default 2x2 link with a
240 x 1024-bit BPSK payload, then checks one of them against the channel
averaged SINR.
"""
import numpy as np

from mimojam import FramePlan, LinkConfig, expected_sinr
from mimojam.theorems import (
    ScenarioParams,
    cond_ack_over_pilot_combined,
    pilot_crossover,
    thm1_pilot_beats_barrage,
    thm2_boundary_K,
    thm2_pilot_beats_ack_on_ack,
)

link = LinkConfig(M=2, N=2, L=2)
plan = FramePlan.for_link(link.M, 4)
print(f"data slots D = {plan.D}, ACK slots A = {plan.A}")

# %% pilot vs barrage on the data link
# Short training sequences are cheap to hit. The advantage lasts while K < sqrt(D M).
print(f"pilot beats barrage below K = {pilot_crossover(plan.D, link.M):.1f}")
for K in (4, 16, 128, 512):
    print(f"  K={K:4d}: {thm1_pilot_beats_barrage(K, plan.D, link.M)}")

# same story in SINR terms: one unit of energy, no noise
quiet = LinkConfig(N_0=0.0)
for K in (4, 512):
    p = FramePlan(K=K, D=plan.D, A=plan.A)
    s_p = expected_sinr("pilot", quiet, p, E_jp=1 / (link.L * K))
    s_b = expected_sinr("barrage", quiet, p, E_jb=1 / (link.L * plan.D))
    print(f"  K={K}: SINR pilot {10 * np.log10(s_p):6.1f} dB, barrage {10 * np.log10(s_b):6.1f} dB")

# %% pilot vs ACK jamming, judged on the ACK link
print(f"\npilot beats ACK jamming (on the ACK) below K = {thm2_boundary_K(plan.A, 1.0, 1.0, 2, 2):g}")
print("  ", [thm2_pilot_beats_ack_on_ack(plan.A, K, 1.0, 1.0, 2, 2) for K in (4, 16, 128, 512)])

# %% geometry decides between pilot and ACK jamming
# With the transmitter close to the jammer (theta_F >> theta_G), ACK jamming wins.
for tg, tf, where in ((10.0, 1.0, "receiver near jammer"), (1.0, 100.0, "transmitter near jammer")):
    sp = ScenarioParams(K=128, D=plan.D, A=plan.A, M=2, N=2, L=2, theta_G=tg, theta_F=tf,
                        gamma_th_d=1.0, gamma_th_a=1.0, lambda_max_mean=3.5)
    print(f"{where:>24}: prefer ACK jamming = {cond_ack_over_pilot_combined(sp)}")
