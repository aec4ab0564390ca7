"""Seeded evaluation protocol and report tables.

Trial i runs on seed base_seed + i, so different policies evaluated with the
same base seed face identical initial conditions. Success is binary (no
partial credit); time is 0.1 s per executed step, 10 s on timeout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..baselines import BtState, EnsembleBuffer, bt_policy, smoothness, temporal_ensemble
from ..env import decanonicalize_action
from ..rl.trainer import decode_frame, snapshot_observation


class AgentRunner:
    """Rolls out a learned policy: frame prep, symmetry, optional ensembling.

    Observations pass through the same snapshot encoding the trainer uses, so
    the policy sees identically quantized inputs at train and eval time.
    """

    def __init__(self, policy, trainer_config, ensembling=False, deterministic=True):
        self.policy = policy
        self.cfg = trainer_config
        self.ensembling = ensembling
        self.deterministic = deterministic
        self._buf = EnsembleBuffer()

    def reset(self, seed):
        self._buf.reset()

    def act(self, obs):
        vec, frame, k = snapshot_observation(obs, self.cfg)
        a = self.policy.act(
            vec, decode_frame(frame, self.cfg.modality), deterministic=self.deterministic
        )
        a = decanonicalize_action(a, k)
        if self.ensembling:
            a = temporal_ensemble(self._buf, a)
        return a


class BtRunner:
    """Behavior-tree baseline with a fresh state machine per trial."""

    def __init__(self, cfg=None):
        self.cfg = cfg
        self._state = BtState.fresh(0)

    def reset(self, seed):
        self._state = BtState.fresh(seed)

    def act(self, obs):
        action, self._state = bt_policy(obs, self._state, self.cfg)
        return action


@dataclass
class TrialRecord:
    seed: int
    box_name: str
    success: bool
    reward: float
    steps: int
    time_s: float
    action_diff: float  # summed consecutive action-difference norms


@dataclass
class EvalReport:
    policy_id: str
    scenario_set: str
    n_trials: int
    success_rate: float  # percent
    mean_reward: float
    std_reward: float
    mean_time: float
    std_time: float
    smoothness: float
    trials: list = field(default_factory=list)

    def to_dict(self):
        d = dict(self.__dict__)
        d["trials"] = [t.__dict__ for t in self.trials]
        return d

    @staticmethod
    def from_dict(d):
        trials = [TrialRecord(**t) for t in d.pop("trials", [])]
        return EvalReport(trials=trials, **d)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))

    @staticmethod
    def load(path):
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"report not found: {path}")
        return EvalReport.from_dict(json.loads(path.read_text()))


def evaluate(environment, runner, n_trials=30, base_seed=1000, scenario_set="seen",
             policy_id="policy", trajectory_sink=None):
    """Run seeded trials and aggregate; returns an EvalReport."""
    trials = []
    for i in range(n_trials):
        seed = base_seed + i
        obs = environment.reset(seed=seed, scenario=scenario_set)
        runner.reset(seed)
        if trajectory_sink is not None:
            trajectory_sink.start_episode(environment, seed)
        actions = []
        total = 0.0
        terminated = truncated = False
        while not (terminated or truncated):
            action = np.clip(runner.act(obs), -1.0, 1.0)
            if trajectory_sink is not None:
                trajectory_sink.pre_step(obs)
            obs, reward, terminated, truncated = environment.step(action)
            actions.append(action)
            total += reward.total
            if trajectory_sink is not None:
                trajectory_sink.record(action, reward.total, terminated, truncated)
        if trajectory_sink is not None:
            trajectory_sink.end_episode(obs)
        steps = len(actions)
        trials.append(
            TrialRecord(
                seed=seed,
                box_name=environment.box.name,
                success=bool(terminated),
                reward=float(total),
                steps=steps,
                time_s=environment.cfg.policy_dt * steps,
                action_diff=smoothness([np.asarray(actions)]) if steps >= 2 else 0.0,
            )
        )
    return summarize(trials, policy_id, scenario_set)


def summarize(trials, policy_id, scenario_set):
    rewards = np.array([t.reward for t in trials])
    times = np.array([t.time_s for t in trials])
    return EvalReport(
        policy_id=policy_id,
        scenario_set=scenario_set,
        n_trials=len(trials),
        success_rate=100.0 * sum(t.success for t in trials) / len(trials),
        mean_reward=float(rewards.mean()),
        std_reward=float(rewards.std(ddof=1)) if len(trials) > 1 else 0.0,
        mean_time=float(times.mean()),
        std_time=float(times.std(ddof=1)) if len(trials) > 1 else 0.0,
        smoothness=float(np.mean([t.action_diff for t in trials])),
        trials=trials,
    )


# ---------------------------------------------------------------------------
# comparison tables


def compare(reports):
    """Aligned text and CSV tables across policies; best values marked.

    Reports of the same policy on different scenario sets merge into one row.
    Every policy must cover the same scenario sets.
    """
    if len(reports) < 2:
        raise ValueError("compare needs at least two reports")
    by_policy: dict = {}
    for r in reports:
        by_policy.setdefault(r.policy_id, {})[r.scenario_set] = r
    sets = sorted({s for d in by_policy.values() for s in d})
    for pid, d in by_policy.items():
        if sorted(d) != sets:
            raise ValueError(
                f"mismatched scenarios: {pid} covers {sorted(d)}, expected {sets}"
            )

    metrics = [
        ("success", lambda r: r.success_rate, max, "{:.1f}"),
        ("reward", lambda r: r.mean_reward, max, "{:.1f}"),
        ("time", lambda r: r.mean_time, min, "{:.2f}"),
    ]
    best = {}
    for s in sets:
        for name, get, pick, _ in metrics:
            best[(s, name)] = pick(get(d[s]) for d in by_policy.values())

    header = ["policy"]
    for s in sets:
        header += [f"{s}/success[%]", f"{s}/reward", f"{s}/time[s]"]
    text_rows = [header]
    csv_rows = [
        ["policy"]
        + [f"{s}_{c}" for s in sets
           for c in ("success", "reward_mean", "reward_std", "time_mean", "time_std")]
    ]
    for pid, d in sorted(by_policy.items()):
        trow = [pid]
        crow = [pid]
        for s in sets:
            r = d[s]
            for name, get, _, fmt in metrics:
                val = get(r)
                mark = "*" if val == best[(s, name)] else ""
                if name == "reward":
                    trow.append(f"{fmt.format(val)}±{r.std_reward:.1f}{mark}")
                elif name == "time":
                    trow.append(f"{fmt.format(val)}±{r.std_time:.2f}{mark}")
                else:
                    trow.append(fmt.format(val) + mark)
            crow += [
                f"{r.success_rate:.6g}", f"{r.mean_reward:.6g}", f"{r.std_reward:.6g}",
                f"{r.mean_time:.6g}", f"{r.std_time:.6g}",
            ]
        text_rows.append(trow)
        csv_rows.append(crow)

    widths = [max(len(row[i]) for row in text_rows) for i in range(len(header))]
    lines = []
    for row in text_rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    text = "\n".join(lines)
    csv = "\n".join(",".join(row) for row in csv_rows)
    return text, csv
