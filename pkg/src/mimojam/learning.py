"""
A Q-learning jammer against a transmitter that adapts route and MCS.

States are (route, MCS) pairs, eight in all. Actions are the 120 entries of
a fixed table: barrage, pilot jamming with one of four assumed pilot lengths,
or ACK jamming, each at one of 20 energy levels. The environment is analytic:
expected SINRs per frame segment go through the PER model and packet losses
are drawn from the resulting probabilities.

Two exploration proposals are provided. `explore_semi_uniform` is plain
epsilon-greedy over the whole table. `explore_enhanced` uses the efficiency
conditions in `mimojam.theorems` and a belief over the hidden pilot length
to decide which scheme to try.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import LinkConfig
from .jamming import JammingAction, Scheme, effective_jamming
from .linkmetrics import expected_sinr, per_model
from .phy import BPSK, MCS_TABLE, FramePlan
from .theorems import ScenarioParams, cond_ack_over_pilot_combined, thm3_ack_beats_barrage

__all__ = [
    "N_STATES",
    "N_ACTIONS",
    "PILOT_LENGTHS",
    "MdpState",
    "MdpAction",
    "QTable",
    "BeliefOverK",
    "EffectBaseline",
    "RewardConfig",
    "EnvConfig",
    "AgentConfig",
    "Environment",
    "EpisodeTrace",
    "env_step",
    "reward",
    "q_update",
    "explore_semi_uniform",
    "explore_enhanced",
    "exploration_distribution",
    "update_belief_K",
    "scenario_for",
    "run_episode",
    "fluctuations",
]

PILOT_LENGTHS = (4, 16, 128, 512)
N_LEVELS = 20
N_STATES = 8
N_ACTIONS = (2 + len(PILOT_LENGTHS)) * N_LEVELS


@dataclass(frozen=True)
class MdpState:
    """Route (1 or 2) and MCS id (1 = BPSK ... 4 = 64QAM); `index` runs 1..8."""

    route: int
    mcs_index: int

    def __post_init__(self):
        if self.route not in (1, 2) or self.mcs_index not in (1, 2, 3, 4):
            raise ValueError(f"invalid state {self.route, self.mcs_index}")

    @property
    def index(self) -> int:
        return 4 * (self.route - 1) + self.mcs_index

    @classmethod
    def from_index(cls, index: int) -> "MdpState":
        if not 1 <= index <= N_STATES:
            raise ValueError(f"state index {index} outside 1..{N_STATES}")
        return cls(1 + (index - 1) // 4, 1 + (index - 1) % 4)


@dataclass(frozen=True)
class MdpAction:
    """
    One of the 120 table actions.

    Indices 1-20 are barrage, 21-100 pilot jamming in blocks of 20 for
    ``T_p`` = 4, 16, 128, 512, and 101-120 ACK jamming. Within each block the
    energy level runs 1..20.
    """

    index: int

    def __post_init__(self):
        if not 1 <= self.index <= N_ACTIONS:
            raise ValueError(f"action index {self.index} outside 1..{N_ACTIONS}")

    @property
    def block(self) -> int:
        return (self.index - 1) // N_LEVELS

    @property
    def level(self) -> int:
        return 1 + (self.index - 1) % N_LEVELS

    @property
    def scheme(self) -> Scheme:
        if self.block == 0:
            return Scheme.BARRAGE
        if self.block == N_ACTIONS // N_LEVELS - 1:
            return Scheme.ACK
        return Scheme.PILOT

    @property
    def T_p(self) -> int | None:
        return PILOT_LENGTHS[self.block - 1] if self.scheme is Scheme.PILOT else None

    def energy(self, step: float = 10.0) -> float:
        return step * self.level

    def to_jamming(self, step: float = 10.0) -> JammingAction:
        return JammingAction(self.scheme, self.energy(step), self.T_p)

    @classmethod
    def make(cls, scheme, level: int, T_p: int | None = None) -> "MdpAction":
        scheme = Scheme.parse(scheme)
        if not 1 <= level <= N_LEVELS:
            raise ValueError(f"energy level {level} outside 1..{N_LEVELS}")
        if scheme is Scheme.BARRAGE:
            block = 0
        elif scheme is Scheme.ACK:
            block = N_ACTIONS // N_LEVELS - 1
        elif scheme is Scheme.PILOT:
            block = 1 + PILOT_LENGTHS.index(T_p)
        else:
            raise ValueError("the action table has no idle action")
        return cls(block * N_LEVELS + level)

    def __str__(self):
        tp = f"/T_p={self.T_p}" if self.T_p else ""
        return f"{self.scheme.value}{tp}@{self.level}"


class QTable:
    """
    Tabular action values with per-pair visit counts.

    The learning rate of a pair is ``max(alpha, 1/visits)``, so early visits
    average samples and later ones settle at `alpha`.
    """

    def __init__(self, alpha: float = 0.1, beta: float = 0.9,
                 n_states: int = N_STATES, n_actions: int = N_ACTIONS):
        if not 0 < alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if not 0 <= beta < 1:
            raise ValueError("beta must be in [0, 1)")
        self.alpha = alpha
        self.beta = beta
        self.values = np.zeros((n_states, n_actions))
        self.visits = np.zeros((n_states, n_actions), dtype=np.int64)

    def row(self, s: MdpState) -> np.ndarray:
        return self.values[s.index - 1]

    def greedy(self, s: MdpState) -> MdpAction:
        # np.argmax returns the first maximum, i.e. the lowest action index
        return MdpAction(int(np.argmax(self.row(s))) + 1)

    def state_visits(self, s: MdpState) -> int:
        return int(self.visits[s.index - 1].sum())


def _idx(x) -> int:
    return int(x.index) if hasattr(x, "index") else int(x)


def q_update(qt: QTable, s, a, r: float, s_next) -> QTable:
    """
    One Q-learning backup, in place; returns `qt` for chaining.

    States and actions may also be given as plain 1-based indices.
    """
    i, j = _idx(s) - 1, _idx(a) - 1
    qt.visits[i, j] += 1
    lr = max(qt.alpha, 1.0 / qt.visits[i, j])
    target = r + qt.beta * float(np.max(qt.values[_idx(s_next) - 1]))
    qt.values[i, j] = (1.0 - lr) * qt.values[i, j] + lr * target
    return qt


@dataclass(frozen=True)
class RewardConfig:
    price: float = 2.0

    def __post_init__(self):
        if self.price < 0:
            raise ValueError("price must be non-negative")


def reward(n_e: int, action: MdpAction | float, cfg: RewardConfig, energy_step: float = 10.0) -> float:
    """Packets lost minus the price of the energy spent; `action` may be a raw energy."""
    energy = action.energy(energy_step) if isinstance(action, MdpAction) else float(action)
    return float(n_e) - cfg.price * energy


@dataclass(frozen=True)
class BeliefOverK:
    """
    The jammer's belief over the hidden pilot length and the data length.

    Both are discrete distributions over their supports and must each sum to 1.
    """

    probs: tuple[float, ...]
    support: tuple[int, ...] = PILOT_LENGTHS
    D_probs: tuple[float, ...] = (1.0,)
    D_support: tuple[int, ...] = (122880,)

    def __post_init__(self):
        for p, sup in ((self.probs, self.support), (self.D_probs, self.D_support)):
            if len(p) != len(sup):
                raise ValueError("probability vector and support differ in length")
            if min(p) < 0 or not math.isclose(math.fsum(p), 1.0, abs_tol=1e-9):
                raise ValueError(f"belief {p} is not a distribution")

    @classmethod
    def initial(cls, M: int, D_support, support=PILOT_LENGTHS) -> "BeliefOverK":
        """Uniform over pilot lengths below ``sqrt(D_max M)``, uniform over `D_support`."""
        cap = math.sqrt(max(D_support) * M)
        legal = [k < cap for k in support]
        n = sum(legal)
        if n == 0:
            raise ValueError("no pilot length is below the legal cap")
        return cls(tuple(1.0 / n if ok else 0.0 for ok in legal), tuple(support),
                   tuple(1.0 / len(D_support) for _ in D_support), tuple(D_support))

    def prob(self, k: int) -> float:
        return self.probs[self.support.index(k)]


def exploration_distribution(belief: BeliefOverK, M: int) -> tuple[float, dict[int, float]]:
    """
    Probability of exploring barrage, and of exploring pilot jamming with each
    assumed length. Pilot lengths above ``sqrt(D_max M)`` get probability 0;
    the pilot share is spread over the legal ones in proportion to the belief.
    The barrage share plus all pilot shares is exactly 1.
    """
    p_b = 0.0
    for d, pd in zip(belief.D_support, belief.D_probs):
        cap = math.sqrt(d * M)
        p_b += pd * math.fsum(pk for k, pk in zip(belief.support, belief.probs) if k > cap)
    p_b = min(1.0, p_b)
    cap_max = math.sqrt(max(belief.D_support) * M)
    legal = {k: pk for k, pk in zip(belief.support, belief.probs) if k <= cap_max}
    mass = math.fsum(legal.values())
    if mass <= 0.0:
        return 1.0, {k: 0.0 for k in belief.support}
    pilot = {k: ((1.0 - p_b) * legal[k] / mass if k in legal else 0.0) for k in belief.support}
    return p_b, pilot


def explore_semi_uniform(qt: QTable, s: MdpState, epsilon_su: float,
                         rng: np.random.Generator) -> MdpAction:
    """Greedy with probability ``1 - epsilon_su``, otherwise uniform over all actions."""
    if rng.random() < epsilon_su:
        return MdpAction(int(rng.integers(1, N_ACTIONS + 1)))
    return qt.greedy(s)


def explore_enhanced(qt: QTable, s: MdpState, belief: BeliefOverK, params: ScenarioParams,
                     epsilon: float, rng: np.random.Generator) -> MdpAction:
    """
    Propose an exploratory action from the decision tree.

    Barrage or a pilot length is drawn from `exploration_distribution`; the
    choice is then switched to ACK jamming with probability `epsilon` when
    the matching ACK condition holds for `params` (with ``K`` set to the
    drawn length for the pilot branch). The energy level is uniform.

    `qt` and `s` are accepted for interface symmetry with the greedy branch;
    the proposal itself does not look at action values.
    """
    p_b, pilot = exploration_distribution(belief, params.M)
    ks = list(pilot)
    weights = np.array([p_b] + [pilot[k] for k in ks])
    pick = int(rng.choice(len(weights), p=weights / weights.sum()))
    if pick == 0:
        scheme, T_p = Scheme.BARRAGE, None
        if thm3_ack_beats_barrage(params) and rng.random() < epsilon:
            scheme = Scheme.ACK
    else:
        scheme, T_p = Scheme.PILOT, ks[pick - 1]
        if cond_ack_over_pilot_combined(replace(params, K=T_p)) and rng.random() < epsilon:
            scheme, T_p = Scheme.ACK, None
    level = int(rng.integers(1, N_LEVELS + 1))
    return MdpAction.make(scheme, level, T_p)


@dataclass
class EffectBaseline:
    """Running mean of packets lost per energy level, used as the belief-update reference."""

    count: np.ndarray = field(default_factory=lambda: np.zeros(N_LEVELS + 1, dtype=np.int64))
    mean: np.ndarray = field(default_factory=lambda: np.zeros(N_LEVELS + 1))

    def get(self, level: int) -> float | None:
        return float(self.mean[level]) if self.count[level] else None

    def add(self, level: int, n_e: float) -> None:
        self.count[level] += 1
        self.mean[level] += (n_e - self.mean[level]) / self.count[level]


def update_belief_K(belief: BeliefOverK, chosen_T_p: int, n_e: float, baseline: float | None,
                    eta: float = 0.1, margin: float = 0.0) -> BeliefOverK:
    """
    Multiplicative reweighting after a pilot-jamming step.

    If the loss beat the baseline by more than `margin`, the hypothesis
    ``K = chosen_T_p`` is multiplied by ``1 + eta`` and every other one divided
    by it; a loss below the baseline does the opposite. Anything else,
    including a missing baseline, leaves the belief as it is.
    """
    if baseline is None or abs(n_e - baseline) <= margin:
        return belief
    up = (1.0 + eta) if n_e > baseline else 1.0 / (1.0 + eta)
    w = np.array([p * (up if k == chosen_T_p else 1.0 / up) for k, p in zip(belief.support, belief.probs)])
    total = w.sum()
    if total <= 0.0:
        return belief
    w /= total
    return replace(belief, probs=tuple(float(x) for x in w))


@dataclass(frozen=True)
class EnvConfig:
    """
    Two candidate routes and the transmitter's hidden protocol parameters.

    Route 1 has its receiver near the jammer (large ``theta_G``); on route 2
    the transmitter is near the jammer (large ``theta_F``). `peak_energy` caps
    the jammer's per-symbol, per-antenna output, so very short bursts cannot
    deliver their full budget.
    """

    routes: tuple[LinkConfig, LinkConfig] = (
        LinkConfig(theta_G=10.0, theta_F=1.0, N_0=0.01),
        LinkConfig(theta_G=1.0, theta_F=100.0, N_0=0.01),
    )
    K: int = 128
    packets_per_frame: int = 240
    packet_bits: int = 1024
    ack_bits: int = 512
    energy_step: float = 10.0
    peak_energy: float | None = 0.5
    lambda_max_mean: float = 3.5
    start: MdpState = MdpState(1, 4)
    transition_period: int = 1000
    per_down: float = 0.1
    per_up: float = 0.01
    rate_window: int = 100

    def plan(self, mcs_index: int) -> FramePlan:
        return FramePlan.for_link(self.routes[0].M, self.K, data_mcs=MCS_TABLE[mcs_index], ack_mcs=BPSK,
                                  packets_per_frame=self.packets_per_frame,
                                  packet_bits=self.packet_bits, ack_bits=self.ack_bits)


class Environment:
    """
    Runtime side of an `EnvConfig`: step counter, loss window and a cache of
    per-(state, action) loss probabilities.

    The transmitter only changes state at multiples of ``transition_period``.
    The first such boundary switches route. Later boundaries apply rate
    adaptation on the windowed PER (down above ``per_down``, up below
    ``per_up``); if that would not change the state, the route switches
    instead, so every boundary is a transition.
    """

    def __init__(self, cfg: EnvConfig):
        self.cfg = cfg
        self.step = 0
        self.boundaries = 0
        self._window: list[tuple[int, int]] = []
        self._cache: dict[tuple[int, int], tuple[float, float]] = {}

    def loss_probabilities(self, s: MdpState, a: MdpAction) -> tuple[float, float]:
        """(data PER, ACK PER) under expected SINRs for state `s` and action `a`."""
        key = (s.index, a.index)
        if key not in self._cache:
            cfg = self.cfg
            link = cfg.routes[s.route - 1]
            plan = cfg.plan(s.mcs_index)
            eff = effective_jamming(a.to_jamming(cfg.energy_step), link, plan, cfg.peak_energy)
            # one expression covers all schemes: pilot corruption, data-block energy, thermal noise
            g_data = expected_sinr("pilot", link, plan, E_jb=eff.E_jb, E_jp=eff.E_jp)
            g_ack = expected_sinr("ack", link, plan, E_jp=eff.E_jp, E_ja=eff.E_ja,
                                  lambda_max_mean=cfg.lambda_max_mean * link.theta_H)
            self._cache[key] = (per_model(g_data, plan.data_mcs), per_model(g_ack, plan.ack_mcs))
        return self._cache[key]

    def expected_loss(self, s: MdpState, a: MdpAction) -> float:
        e_d, e_a = self.loss_probabilities(s, a)
        return self.cfg.packets_per_frame * (e_d + e_a - e_d * e_a)

    def windowed_per(self) -> float:
        lost = sum(x for x, _ in self._window)
        sent = sum(y for _, y in self._window)
        return lost / sent if sent else 0.0

    def _transition(self, s: MdpState) -> MdpState:
        self.boundaries += 1
        other = 3 - s.route
        if self.boundaries == 1:
            return MdpState(other, s.mcs_index)
        per = self.windowed_per()
        m = s.mcs_index
        if per > self.cfg.per_down and m > 1:
            return MdpState(s.route, m - 1)
        if per < self.cfg.per_up and m < 4:
            return MdpState(s.route, m + 1)
        return MdpState(other, m)


def env_step(env: Environment, state: MdpState, action: MdpAction,
             rng: np.random.Generator) -> tuple[MdpState, int, float]:
    """
    Play one frame.

    Data losses are Binomial(packets, data PER). The frame's block ACK is lost
    with the ACK PER, in which case every data packet of the frame has to be
    resent and counts as lost. Returns the next state, packets lost and the
    energy spent.
    """
    cfg = env.cfg
    n = cfg.packets_per_frame
    e_d, e_a = env.loss_probabilities(state, action)
    n_e = int(rng.binomial(n, e_d))
    if rng.random() < e_a:
        n_e = n
    env._window.append((n_e, n))
    if len(env._window) > cfg.rate_window:
        env._window.pop(0)
    env.step += 1
    nxt = state
    if cfg.transition_period and env.step % cfg.transition_period == 0:
        nxt = env._transition(state)
        env._window.clear()
    return nxt, n_e, action.energy(cfg.energy_step)


def scenario_for(env_cfg: EnvConfig, s: MdpState) -> ScenarioParams:
    """What the jammer knows about state `s`: geometry, lengths and thresholds (``K`` is a placeholder)."""
    link = env_cfg.routes[s.route - 1]
    plan = env_cfg.plan(s.mcs_index)
    return ScenarioParams(K=plan.K, D=plan.D, A=plan.A, M=link.M, N=link.N, L=link.L,
                          theta_G=link.theta_G, theta_F=link.theta_F,
                          gamma_th_d=plan.data_mcs.gamma_th, gamma_th_a=plan.ack_mcs.gamma_th,
                          lambda_max_mean=env_cfg.lambda_max_mean * link.theta_H)


@dataclass(frozen=True)
class AgentConfig:
    """
    Learner settings. The exploration gate in state ``s`` fires with
    probability ``max(gate_floor, 1 / (1 + visits(s) / gate_tau))``.
    """

    method: str = "enhanced"
    alpha: float = 0.1
    beta: float = 0.9
    epsilon: float = 0.5
    gate_tau: float = 50.0
    gate_floor: float = 0.02
    eta: float = 0.1
    belief_margin: float = 5.0
    reward: RewardConfig = RewardConfig()

    def __post_init__(self):
        if self.method not in ("enhanced", "semi_uniform"):
            raise ValueError(f"unknown exploration method {self.method!r}")
        if self.gate_tau <= 0 or not 0 <= self.gate_floor <= 1:
            raise ValueError("gate_tau must be positive and gate_floor in [0, 1]")

    def gate(self, visits: int) -> float:
        return max(self.gate_floor, 1.0 / (1.0 + visits / self.gate_tau))


@dataclass
class EpisodeTrace:
    """Per-step record of one learning run; the full Q table is kept only at the end."""

    state: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    packets_lost: np.ndarray
    best_action: np.ndarray
    best_value: np.ndarray
    explored: np.ndarray
    belief: np.ndarray
    q_final: np.ndarray

    @property
    def cum_reward(self) -> np.ndarray:
        return np.cumsum(self.reward)

    def greedy_at(self, step: int) -> MdpAction:
        return MdpAction(int(self.best_action[step]))


def run_episode(env_cfg: EnvConfig, agent: AgentConfig, steps: int, seed: int) -> EpisodeTrace:
    """
    Run `steps` frames of learning from a fresh Q table.

    The environment and the agent draw from separate streams derived from
    `seed`, so the same seed gives the same trace.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    env_rng, agent_rng = np.random.default_rng(np.random.SeedSequence(int(seed))).spawn(2)
    env = Environment(env_cfg)
    qt = QTable(agent.alpha, agent.beta)
    M = env_cfg.routes[0].M
    d_support = tuple(env_cfg.plan(m).D for m in sorted(MCS_TABLE))
    belief = BeliefOverK.initial(M, d_support)
    baseline = EffectBaseline()

    out = {k: np.zeros(steps, dtype=np.int64) for k in ("state", "action", "lost", "best", "explored")}
    rewards = np.zeros(steps)
    best_value = np.zeros(steps)
    beliefs = np.zeros((steps, len(belief.support)))

    s = env_cfg.start
    for t in range(steps):
        explore = agent_rng.random() < agent.gate(qt.state_visits(s))
        if not explore:
            a = qt.greedy(s)
        elif agent.method == "enhanced":
            a = explore_enhanced(qt, s, belief, scenario_for(env_cfg, s), agent.epsilon, agent_rng)
        else:
            a = explore_semi_uniform(qt, s, 1.0, agent_rng)
        s_next, n_e, _ = env_step(env, s, a, env_rng)
        r = reward(n_e, a, agent.reward, env_cfg.energy_step)
        q_update(qt, s, a, r, s_next)
        if a.scheme is Scheme.PILOT:
            belief = update_belief_K(belief, a.T_p, n_e, baseline.get(a.level), agent.eta, agent.belief_margin)
            baseline.add(a.level, n_e)

        out["state"][t] = s.index
        out["action"][t] = a.index
        out["lost"][t] = n_e
        out["explored"][t] = explore
        rewards[t] = r
        g = qt.greedy(s)
        out["best"][t] = g.index
        best_value[t] = qt.row(s)[g.index - 1]
        beliefs[t] = belief.probs
        s = s_next

    return EpisodeTrace(out["state"], out["action"], rewards, out["lost"], out["best"],
                        best_value, out["explored"], beliefs, qt.values.copy())


def fluctuations(trace: EpisodeTrace, until: int) -> int:
    """Number of times the greedy action changes during the first `until` steps."""
    best = trace.best_action[:until]
    return int(np.count_nonzero(np.diff(best)))
