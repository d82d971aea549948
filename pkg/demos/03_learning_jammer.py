"""
A Q-learning jammer against a rate-adapting transmitter.

The transmitter starts on route 1 at 64QAM, moves to route 2 after 1000
frames and then steps down its MCS. We run both exploration methods on the
same seed and compare what they learn.
"""
import numpy as np

from mimojam.learning import AgentConfig, EnvConfig, MdpState, fluctuations, run_episode

env = EnvConfig()
seed = 3
enh = run_episode(env, AgentConfig(method="enhanced"), 4000, seed)
semi = run_episode(env, AgentConfig(method="semi_uniform"), 4000, seed)

# state trace: changes only at the 1000-step boundaries
changes = np.flatnonzero(np.diff(enh.state)) + 1
print("state changes at steps", (changes + 1).tolist())
print("states visited", [str(MdpState.from_index(int(s))) for s in enh.state[np.r_[0, changes]]])

for step in (999, 1999, 3999):
    print(f"greedy at step {step + 1}: enhanced {enh.greedy_at(step)}, semi-uniform {semi.greedy_at(step)}")

print(f"\naccumulated reward: enhanced {enh.cum_reward[-1]:.0f}, semi-uniform {semi.cum_reward[-1]:.0f}")
print(f"best-action changes before step 2000: enhanced {fluctuations(enh, 2000)}, "
      f"semi-uniform {fluctuations(semi, 2000)}")
# On route 1 pilot jamming bites and the evidence pins the hidden length.
# The belief and its loss baseline are shared by all states, so on route 2,
# where every pilot burst looks weak next to the route-1 history, it drifts.
print("belief over (4, 16, 128, 512) at step 1000:", np.round(enh.belief[999], 3))
print("belief over (4, 16, 128, 512) at step 4000:", np.round(enh.belief[-1], 3))
