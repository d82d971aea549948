"""
Config-driven experiment runner.

Three subcommands share one JSON config format::

    mimojam sweep    --config cfg.json --out results/ [--seed N] [--threads N]
    mimojam theorems --config cfg.json --out results/
    mimojam learn    --config cfg.json --out results/

Every CSV has a header row, a fixed column order, floats written with 17
significant digits and a ``config_hash`` column (sha256 of the canonical
JSON config as given, with any ``--seed`` override applied). Equal hash means byte-identical output, whatever the
thread count.

Config layout (all sections optional except ``schema`` and ``mode``)::

    {
      "schema": 1,
      "mode": "ber_sweep" | "theorem_check" | "learning",
      "seed": 0,
      "link":  {"M": 2, "N": 2, "L": 2, "theta_H": 1, "theta_G": 1, "theta_F": 1,
                "E_s": 1, "N_0": 0.316},
      "frame": {"packets_per_frame": 240, "packet_bits": 1024, "ack_bits": 512,
                "data_mcs": 1, "ack_mcs": 1},
      "grid":  {"schemes": ["barrage", "pilot", "ack"], "energies": [0, 5, 10, 15, 20],
                "pilot_lengths": [4, 16, 128, 512]},
      "frames": 2000,
      "theorems": {"lambda_max_mean": 3.5, "check_energy": 20, "check_frames": 200},
      "learning": {"steps": 4000, "n_seeds": 20, "env": {...}, "agent": {...}}
    }

Output files
------------
sweep
    ``ber_sweep.csv``: scheme, energy, K, target, ber, ci95, per, flagged_frames, frames, seed, config_hash
theorems
    ``theorem_check.csv``: predicate, inputs, verdict, simulated_ordering, agree, config_hash
learn
    ``learning_trace_seed<S>.csv``: step, state, action, reward, cum_reward_enhanced, cum_reward_semiuniform, config_hash
    (state/action/reward are the enhanced run's; both runs use episode seed S)
    ``learning_best_action.csv``: seed, step, best_enhanced, best_semiuniform, config_hash
    ``learning_summary.csv``: seed, total_enhanced, total_semiuniform, fluct_enhanced, fluct_semiuniform, config_hash
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import LinkConfig
from .jamming import JammingAction, Scheme
from .learning import AgentConfig, EnvConfig, MdpState, RewardConfig, fluctuations, run_episode
from .linkmetrics import estimate_ber
from .phy import MCS_TABLE, FramePlan
from .theorems import (
    ScenarioParams,
    cond_ack_over_pilot_combined,
    thm1_pilot_beats_barrage,
    thm2_pilot_beats_ack_on_ack,
    thm3_ack_beats_barrage,
    thm3_ack_beats_pilot,
)

SCHEMA_VERSION = 1
MODES = ("ber_sweep", "theorem_check", "learning")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FrameSettings:
    packets_per_frame: int = 240
    packet_bits: int = 1024
    ack_bits: int = 512
    data_mcs: int = 1
    ack_mcs: int = 1

    def plan(self, M: int, K: int) -> FramePlan:
        return FramePlan.for_link(M, K, data_mcs=MCS_TABLE[self.data_mcs], ack_mcs=MCS_TABLE[self.ack_mcs],
                                  packets_per_frame=self.packets_per_frame, packet_bits=self.packet_bits,
                                  ack_bits=self.ack_bits)


@dataclass(frozen=True)
class GridSettings:
    schemes: tuple[str, ...] = ("barrage", "pilot", "ack")
    energies: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0)
    pilot_lengths: tuple[int, ...] = (4, 16, 128, 512)


@dataclass(frozen=True)
class TheoremSettings:
    lambda_max_mean: float = 3.5
    check_energy: float = 20.0
    check_frames: int = 200


@dataclass(frozen=True)
class LearningSettings:
    steps: int = 4000
    n_seeds: int = 20
    env: EnvConfig = EnvConfig()
    agent: AgentConfig = AgentConfig()


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description; build with `load_config` or `parse_config`."""

    mode: str
    seed: int = 0
    link: LinkConfig = LinkConfig(N_0=0.31622776601683794)
    frame: FrameSettings = FrameSettings()
    grid: GridSettings = GridSettings()
    frames: int = 2000
    theorems: TheoremSettings = TheoremSettings()
    learning: LearningSettings = LearningSettings()
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _build(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _env(data) -> EnvConfig:
    data = dict(data or {})
    if "routes" in data:
        routes = data["routes"]
        if not isinstance(routes, list) or len(routes) != 2:
            raise ConfigError("learning.env.routes: need exactly two link objects")
        data["routes"] = tuple(_build(LinkConfig, r, f"learning.env.routes[{i}]") for i, r in enumerate(routes))
    if "start" in data:
        data["start"] = _build(MdpState, data["start"], "learning.env.start")
    env = EnvConfig()
    try:
        return dataclasses.replace(env, **data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"learning.env: {exc}") from exc


def _agent(data) -> AgentConfig:
    data = dict(data or {})
    if "reward" in data:
        data["reward"] = _build(RewardConfig, data["reward"], "learning.agent.reward")
    data.pop("method", None)  # both methods always run, paired
    return _build(AgentConfig, data, "learning.agent")


def parse_config(data: dict, seed: int | None = None) -> ExperimentConfig:
    """Validate a decoded config object; `seed` overrides the file's seed."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if data.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"schema must be {SCHEMA_VERSION}, got {data.get('schema')!r}")
    known = {"schema", "mode", "seed", "link", "frame", "grid", "frames", "theorems", "learning"}
    if set(data) - known:
        raise ConfigError(f"unknown top-level keys {sorted(set(data) - known)}")
    mode = data.get("mode")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    raw = json.loads(json.dumps(data))
    if seed is not None:
        raw["seed"] = int(seed)
    master = int(raw.get("seed", 0))
    if master < 0:
        raise ConfigError("seed must be non-negative")

    frame = _build(FrameSettings, raw.get("frame"), "frame")
    for key in ("data_mcs", "ack_mcs"):
        if getattr(frame, key) not in MCS_TABLE:
            raise ConfigError(f"frame.{key}: unknown MCS id {getattr(frame, key)}")
    grid = _build(GridSettings, raw.get("grid"), "grid")
    if not grid.energies:
        raise ConfigError("grid.energies must be nonempty")
    if any(e < 0 for e in grid.energies):
        raise ConfigError("grid.energies must be non-negative")
    if not grid.pilot_lengths:
        raise ConfigError("grid.pilot_lengths must be nonempty")
    try:
        schemes = tuple(Scheme.parse(s).value for s in grid.schemes)
    except ValueError as exc:
        raise ConfigError(f"grid.schemes: {exc}") from exc
    grid = dataclasses.replace(grid, schemes=schemes)
    link = _build(LinkConfig, raw.get("link"), "link") if "link" in raw else ExperimentConfig.link
    for K in grid.pilot_lengths:
        try:
            frame.plan(link.M, K).check(link.M)
        except ValueError as exc:
            raise ConfigError(f"frame/grid: {exc}") from exc
    frames = int(raw.get("frames", 2000))
    if frames < 1:
        raise ConfigError("frames must be >= 1")
    theorems = _build(TheoremSettings, raw.get("theorems"), "theorems")
    if theorems.lambda_max_mean <= 0 or theorems.check_frames < 1:
        raise ConfigError("theorems: lambda_max_mean must be positive and check_frames >= 1")

    ldata = dict(raw.get("learning") or {})
    unknown = set(ldata) - {"steps", "n_seeds", "env", "agent"}
    if unknown:
        raise ConfigError(f"learning: unknown keys {sorted(unknown)}")
    learning = LearningSettings(steps=int(ldata.get("steps", 4000)), n_seeds=int(ldata.get("n_seeds", 20)),
                            env=_env(ldata.get("env")), agent=_agent(ldata.get("agent")))
    if learning.steps < 1 or learning.n_seeds < 1:
        raise ConfigError("learning: steps and n_seeds must be >= 1")

    return ExperimentConfig(mode=mode, seed=master, link=link, frame=frame, grid=grid, frames=frames,
                            theorems=theorems, learning=learning, raw=raw)


def load_config(path, seed: int | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(data, seed)


def point_seed(master: int, index: int) -> int:
    """Seed of grid point `index`; every scheme at one point shares it."""
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1, np.uint64)[0])


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(r[h]) for h in header])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def _pool_map(fn, jobs, threads):
    # results come back in job order, not completion order
    if threads <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, jobs))


def _action(scheme: str, energy: float, K: int) -> JammingAction:
    return JammingAction(scheme, float(energy), K if scheme == "pilot" else None)


def _ber_job(job):
    link, plan, action, frames, seed = job
    return estimate_ber(link, plan, action, frames, seed)


SWEEP_COLUMNS = ("scheme", "energy", "K", "target", "ber", "ci95", "per", "flagged_frames",
                 "frames", "seed", "config_hash")


def run_ber_sweep(cfg: ExperimentConfig, threads: int = 1) -> list[dict]:
    """One row per (K, energy, scheme, target) in grid order."""
    if cfg.mode != "ber_sweep":
        raise ConfigError(f"run_ber_sweep needs mode ber_sweep, got {cfg.mode}")
    jobs, keys = [], []
    for p, (K, energy) in enumerate((K, e) for K in cfg.grid.pilot_lengths for e in cfg.grid.energies):
        seed = point_seed(cfg.seed, p)
        plan = cfg.frame.plan(cfg.link.M, K)
        for scheme in cfg.grid.schemes:
            jobs.append((cfg.link, plan, _action(scheme, energy, K), cfg.frames, seed))
            keys.append((scheme, float(energy), K, seed))
    rows = []
    for (scheme, energy, K, seed), est in zip(keys, _pool_map(_ber_job, jobs, threads)):
        base = dict(scheme=scheme, energy=energy, K=K, flagged_frames=est.flagged_frames,
                    frames=est.frames, seed=seed, config_hash=cfg.config_hash)
        rows.append(dict(base, target="data", ber=est.ber, ci95=est.ci95, per=est.per))
        rows.append(dict(base, target="ack", ber=est.ack_ber, ci95=est.ack_ci95, per=est.ack_per))
    return rows


THEOREM_COLUMNS = ("predicate", "inputs", "verdict", "simulated_ordering", "agree", "config_hash")


def _scenario(cfg: ExperimentConfig, K: int) -> ScenarioParams:
    plan = cfg.frame.plan(cfg.link.M, K)
    lk = cfg.link
    return ScenarioParams(K=K, D=plan.D, A=plan.A, M=lk.M, N=lk.N, L=lk.L, theta_G=lk.theta_G,
                          theta_F=lk.theta_F, gamma_th_d=plan.data_mcs.gamma_th,
                          gamma_th_a=plan.ack_mcs.gamma_th,
                          lambda_max_mean=cfg.theorems.lambda_max_mean * lk.theta_H)


def run_theorem_check(cfg: ExperimentConfig, threads: int = 1) -> list[dict]:
    """
    Evaluate every predicate for each pilot length of the grid.

    The first two are cross-checked by a short simulation at
    ``theorems.check_energy``: data BER of pilot vs barrage, and ACK BER of
    pilot vs ACK jamming, both with common random numbers. The third-family
    predicates compare PER bounds rather than BER and are reported without a
    simulated ordering.
    """
    if cfg.mode != "theorem_check":
        raise ConfigError(f"run_theorem_check needs mode theorem_check, got {cfg.mode}")
    th = cfg.theorems
    jobs = []
    for i, K in enumerate(cfg.grid.pilot_lengths):
        plan = cfg.frame.plan(cfg.link.M, K)
        seed = point_seed(cfg.seed, i)
        for scheme in ("pilot", "barrage", "ack"):
            jobs.append((cfg.link, plan, _action(scheme, th.check_energy, K), th.check_frames, seed))
    est = _pool_map(_ber_job, jobs, threads)

    rows = []
    for i, K in enumerate(cfg.grid.pilot_lengths):
        p = _scenario(cfg, K)
        pilot, barrage, ack = est[3 * i: 3 * i + 3]
        inputs = f"K={K};D={p.D};M={p.M}"
        v1 = thm1_pilot_beats_barrage(K, p.D, p.M)
        hit1 = pilot.ber > barrage.ber
        rows.append(dict(predicate="thm1_pilot_beats_barrage", inputs=inputs, verdict=v1,
                         simulated_ordering="pilot>barrage" if hit1 else "pilot<=barrage", agree=v1 == hit1))
        inputs = f"A={p.A};K={K};theta_G={p.theta_G!r};theta_F={p.theta_F!r};L={p.L};N={p.N}"
        v2 = thm2_pilot_beats_ack_on_ack(p.A, K, p.theta_G, p.theta_F, p.L, p.N)
        hit2 = pilot.ack_ber >= ack.ack_ber
        rows.append(dict(predicate="thm2_pilot_beats_ack_on_ack", inputs=inputs, verdict=v2,
                         simulated_ordering="pilot>=ack" if hit2 else "pilot<ack", agree=v2 == hit2))
        inputs = (f"K={K};D={p.D};A={p.A};M={p.M};N={p.N};L={p.L};theta_G={p.theta_G!r};"
                  f"theta_F={p.theta_F!r};gamma_th_d={p.gamma_th_d!r};gamma_th_a={p.gamma_th_a!r};"
                  f"lambda_max_mean={p.lambda_max_mean!r}")
        for fn in (thm3_ack_beats_barrage, thm3_ack_beats_pilot, cond_ack_over_pilot_combined):
            rows.append(dict(predicate=fn.__name__, inputs=inputs, verdict=fn(p),
                             simulated_ordering="-", agree="-"))
    for r in rows:
        r["config_hash"] = cfg.config_hash
    return rows


def _episode_job(job):
    env, agent, steps, seed = job
    return run_episode(env, agent, steps, seed)


def run_learning(cfg: ExperimentConfig, out_dir, threads: int = 1) -> list[Path]:
    """
    Paired enhanced / semi-uniform runs on episode seeds ``seed .. seed + n_seeds - 1``.

    Returns the paths written.
    """
    if cfg.mode != "learning":
        raise ConfigError(f"run_learning needs mode learning, got {cfg.mode}")
    ls = cfg.learning
    seeds = [cfg.seed + i for i in range(ls.n_seeds)]
    agents = [dataclasses.replace(ls.agent, method=m) for m in ("enhanced", "semi_uniform")]
    jobs = [(ls.env, a, ls.steps, s) for s in seeds for a in agents]
    traces = _pool_map(_episode_job, jobs, threads)
    h = cfg.config_hash
    out = Path(out_dir)
    paths, best_rows, summary = [], [], []
    half = min(2000, ls.steps)
    for i, s in enumerate(seeds):
        enh, semi = traces[2 * i], traces[2 * i + 1]
        ce, cs = enh.cum_reward, semi.cum_reward
        rows = [dict(step=t + 1, state=int(enh.state[t]), action=int(enh.action[t]), reward=float(enh.reward[t]),
                     cum_reward_enhanced=float(ce[t]), cum_reward_semiuniform=float(cs[t]), config_hash=h)
                for t in range(ls.steps)]
        paths.append(write_csv(out / f"learning_trace_seed{s}.csv",
                               ("step", "state", "action", "reward", "cum_reward_enhanced",
                                "cum_reward_semiuniform", "config_hash"), rows))
        best_rows += [dict(seed=s, step=t + 1, best_enhanced=int(enh.best_action[t]),
                           best_semiuniform=int(semi.best_action[t]), config_hash=h) for t in range(ls.steps)]
        summary.append(dict(seed=s, total_enhanced=float(ce[-1]), total_semiuniform=float(cs[-1]),
                            fluct_enhanced=fluctuations(enh, half), fluct_semiuniform=fluctuations(semi, half),
                            config_hash=h))
    paths.append(write_csv(out / "learning_best_action.csv",
                           ("seed", "step", "best_enhanced", "best_semiuniform", "config_hash"), best_rows))
    paths.append(write_csv(out / "learning_summary.csv",
                           ("seed", "total_enhanced", "total_semiuniform", "fluct_enhanced",
                            "fluct_semiuniform", "config_hash"), summary))
    return paths


_COMMANDS = {"sweep": "ber_sweep", "theorems": "theorem_check", "learn": "learning"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mimojam", description="MIMO jamming experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("sweep", "BER/PER sweep over schemes, energies and pilot lengths"),
                        ("theorems", "evaluate the efficiency conditions with a simulation cross-check"),
                        ("learn", "paired Q-learning runs, enhanced vs semi-uniform exploration")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker processes")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args.config, args.seed)
        expected = _COMMANDS[args.command]
        if cfg.mode != expected:
            raise ConfigError(f"'{args.command}' needs mode {expected!r}, config has {cfg.mode!r}")
        out = Path(args.out)
        if args.command == "sweep":
            paths = [write_csv(out / "ber_sweep.csv", SWEEP_COLUMNS, run_ber_sweep(cfg, args.threads))]
        elif args.command == "theorems":
            paths = [write_csv(out / "theorem_check.csv", THEOREM_COLUMNS, run_theorem_check(cfg, args.threads))]
        else:
            paths = run_learning(cfg, out, args.threads)
    except (ConfigError, OSError) as exc:
        print(f"mimojam: error: {exc}", file=sys.stderr)
        return 2
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
