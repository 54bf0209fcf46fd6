"""Imitation + RL training of pointing policies.

The rollout environment couples the PD-controlled chain with the pointing
reward; the policy is optimized with clipped-surrogate PPO while a GAN-style
discriminator trained on demonstration transitions supplies the imitation
reward. Cluster-specialized policies and the nearest-neighbor replay baseline
live here as well.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .clips import ClipLibrary, MotionClip
from .dynamics import Action, effective_inertia, step
from .geometry import (
    REWARD_MAX,
    RewardWeights,
    TargetPoint,
    perturb_target,
    pointing_reward,
)
from .kinematics import character_state_dim, observe
from .networks import (
    PolicyNetwork,
    ValueNetwork,
    imitation_reward,
    make_discriminator,
)
from .skeleton import JointState, SimConfig, SkeletonModel

CHECKPOINT_SCHEMA = "pointgen-ckpt/1"


@dataclass
class TrainConfig:
    weights: RewardWeights = field(default_factory=RewardWeights)
    clip_eps: float = 0.2
    discount: float = 0.99
    gae_lambda: float = 0.95
    policy_lr: float = 3e-4
    value_lr: float = 1e-3
    disc_lr: float = 3e-4
    epochs: int = 5
    minibatch_size: int = 256
    num_envs: int = 16
    iterations: int = 300
    disc_updates: int = 2
    grad_penalty: float = 10.0
    seed: int = 0
    phase_input: bool = True
    disc_variant: str = "plain"
    policy_hidden: tuple[int, int] = (256, 256)
    disc_hidden: tuple[int, int] = (128, 128)
    init_log_std: float = -0.7

    def __post_init__(self) -> None:
        if not 0.0 < self.clip_eps < 1.0:
            raise ValueError("clip_eps must lie in (0, 1)")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must lie in (0, 1]")
        if self.iterations < 0:
            raise ValueError("iteration budget must be >= 0")


def obs_dim_of(skeleton: SkeletonModel) -> int:
    return character_state_dim(skeleton) + 1 + 3


def feature_dim_of(skeleton: SkeletonModel) -> int:
    return 2 * character_state_dim(skeleton)


class PointingEnv:
    """Single pointing episode: fixed target, phase-clocked PD-controlled arm."""

    def __init__(self, skeleton: SkeletonModel, sim_config: SimConfig,
                 episode_steps: int, target: TargetPoint,
                 phase_input: bool = True):
        self.skeleton = skeleton
        self.sim_config = sim_config
        self.episode_steps = episode_steps
        self.target = target
        self.phase_input = phase_input
        self._inertia = effective_inertia(skeleton)
        self.reset()

    def reset(self, q0: np.ndarray | None = None) -> np.ndarray:
        n = self.skeleton.num_joints
        q = np.zeros(n) if q0 is None else np.asarray(q0, dtype=float)
        self.state = JointState(q, np.zeros(n))
        self.t = 0
        self._cs = observe(self.skeleton, self.state)
        return self.observation()

    @property
    def phase(self) -> float:
        return self.t / self.episode_steps

    def state_flat(self) -> np.ndarray:
        return self._cs.flat

    def observation(self) -> np.ndarray:
        phase = self.phase if self.phase_input else 0.0
        return np.concatenate([self._cs.flat, [phase], self.target.xyz])

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, bool]:
        self.state = step(self.skeleton, self.state, Action(action),
                          self.sim_config, inertia=self._inertia)
        self.t += 1
        self._cs = observe(self.skeleton, self.state)
        # root-local equals world here: the root is fixed at the origin
        elbow = self._cs.positions[self.skeleton.elbow_index]
        hand = self._cs.positions[self.skeleton.hand_index]
        r_task = pointing_reward(elbow, hand, self.target.xyz)
        done = self.t >= self.episode_steps
        return self.observation(), r_task, done


@dataclass
class TransitionBuffer:
    """Rollout storage with post-processed GAE advantages and returns."""

    obs: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    r_task: np.ndarray
    r_imitation: np.ndarray
    rewards: np.ndarray
    values: np.ndarray
    phases: np.ndarray
    targets: np.ndarray
    dones: np.ndarray
    features: np.ndarray
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None

    def __post_init__(self) -> None:
        n = len(self.obs)
        for name in ("actions", "log_probs", "r_task", "r_imitation", "rewards",
                     "values", "phases", "targets", "dones", "features"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name!r} length mismatch")
        if np.any(self.r_task < -1e-12) or np.any(self.r_task > REWARD_MAX + 1e-9):
            raise ValueError("task rewards outside [0, (e-1)/e]")
        if not np.all(np.isfinite(self.rewards)):
            raise ValueError("non-finite rewards")

    def __len__(self) -> int:
        return len(self.obs)

    def compute_gae(self, discount: float, lam: float) -> None:
        n = len(self)
        adv = np.zeros(n)
        last = 0.0
        for i in reversed(range(n)):
            terminal = self.dones[i] or i + 1 == n
            next_value = 0.0 if terminal else self.values[i + 1]
            nonterminal = 0.0 if terminal else 1.0
            delta = self.rewards[i] + discount * next_value - self.values[i]
            last = delta + discount * lam * nonterminal * last
            adv[i] = last
        self.advantages = adv
        self.returns = adv + self.values

    def normalized_advantages(self) -> np.ndarray:
        adv = self.advantages
        if adv is None:
            raise ValueError("call compute_gae first")
        if not np.all(np.isfinite(adv)):
            raise ValueError("non-finite advantages")
        std = adv.std()
        if std < 1e-12:
            return adv - adv.mean() if len(adv) > 1 else adv
        return (adv - adv.mean()) / (std + 1e-8)


def reference_features(clips: list[MotionClip]) -> tuple[np.ndarray, np.ndarray]:
    """Consecutive character-state pairs (and phases) from demonstration clips."""
    feats = []
    phases = []
    for clip in clips:
        qdot = clip.joint_velocities()
        states = []
        for i in range(clip.num_frames):
            st = JointState(clip.frames_q[i], qdot[i],
                            clip.frames_root_pos[i], clip.frames_root_quat[i])
            states.append(observe(clip.skeleton, st).flat)
        for i in range(clip.num_frames - 1):
            feats.append(np.concatenate([states[i], states[i + 1]]))
            phases.append(i / (clip.num_frames - 1))
    return np.asarray(feats, dtype=np.float32), np.asarray(phases, dtype=np.float32)


def update_discriminator(disc, optimizer, policy_features: np.ndarray,
                         reference_features_: np.ndarray,
                         policy_phases: np.ndarray | None = None,
                         reference_phases: np.ndarray | None = None,
                         grad_penalty_weight: float = 10.0) -> dict:
    """One least-squares GAN step: +1 targets on reference transitions, -1 on
    policy transitions, with a gradient penalty on reference samples."""
    if len(policy_features) == 0 or len(reference_features_) == 0:
        raise ValueError("empty discriminator batch")
    pol = torch.as_tensor(np.asarray(policy_features, dtype=np.float32))
    ref = torch.as_tensor(np.asarray(reference_features_, dtype=np.float32))
    ref.requires_grad_(True)
    pol_ph = None if policy_phases is None else torch.as_tensor(
        np.asarray(policy_phases, dtype=np.float32))
    ref_ph = None if reference_phases is None else torch.as_tensor(
        np.asarray(reference_phases, dtype=np.float32))

    d_ref = disc(ref, ref_ph)
    d_pol = disc(pol, pol_ph)
    real_loss = ((d_ref - 1.0) ** 2).mean()
    fake_loss = ((d_pol + 1.0) ** 2).mean()
    grad = torch.autograd.grad(d_ref.sum(), ref, create_graph=True)[0]
    penalty = (grad ** 2).sum(dim=1).mean()
    loss = real_loss + fake_loss + 0.5 * grad_penalty_weight * penalty

    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
    return {
        "real_loss": float(real_loss.detach()),
        "fake_loss": float(fake_loss.detach()),
        "grad_penalty": float(penalty.detach()),
    }


def ppo_update(policy: PolicyNetwork, value: ValueNetwork,
               buffer: TransitionBuffer, config: TrainConfig,
               policy_opt=None, value_opt=None) -> dict:
    """Clipped-surrogate policy step and value regression over the buffer."""
    if policy_opt is None:
        policy_opt = torch.optim.Adam(policy.parameters(), lr=config.policy_lr)
    if value_opt is None:
        value_opt = torch.optim.Adam(value.parameters(), lr=config.value_lr)
    obs = torch.as_tensor(np.asarray(buffer.obs, dtype=np.float32))
    actions = torch.as_tensor(np.asarray(buffer.actions, dtype=np.float32))
    old_logp = torch.as_tensor(np.asarray(buffer.log_probs, dtype=np.float32))
    adv = torch.as_tensor(buffer.normalized_advantages().astype(np.float32))
    returns = torch.as_tensor(np.asarray(buffer.returns, dtype=np.float32))

    n = len(buffer)
    ratios = []
    clipped = []
    value_losses = []
    gen = torch.Generator().manual_seed(config.seed)
    for _ in range(config.epochs):
        perm = torch.randperm(n, generator=gen)
        for start in range(0, n, config.minibatch_size):
            idx = perm[start:start + config.minibatch_size]
            dist = policy.distribution(obs[idx])
            logp = dist.log_prob(actions[idx]).sum(-1)
            ratio = torch.exp(logp - old_logp[idx])
            surr1 = ratio * adv[idx]
            surr2 = torch.clamp(ratio, 1.0 - config.clip_eps,
                                1.0 + config.clip_eps) * adv[idx]
            policy_loss = -torch.min(surr1, surr2).mean()
            policy_opt.zero_grad()
            policy_loss.backward()
            policy_opt.step()

            v = value(obs[idx])
            value_loss = ((v - returns[idx]) ** 2).mean()
            value_opt.zero_grad()
            value_loss.backward()
            value_opt.step()

            ratios.append(ratio.detach())
            clipped.append(
                ((ratio < 1.0 - config.clip_eps)
                 | (ratio > 1.0 + config.clip_eps)).float())
            value_losses.append(float(value_loss.detach()))
    all_ratios = torch.cat(ratios)
    return {
        "mean_ratio": float(all_ratios.mean()),
        "clip_fraction": float(torch.cat(clipped).mean()),
        "value_loss": float(np.mean(value_losses)),
    }


@dataclass
class TrainResult:
    policy: PolicyNetwork
    value: ValueNetwork
    discriminator: torch.nn.Module
    curves: list[dict]
    config: TrainConfig
    skeleton: SkeletonModel
    sim_config: SimConfig
    episode_duration: float


def _collect(policy, value, skeleton, sim_config, clips, config,
             rng: np.random.Generator) -> TransitionBuffer:
    """Lockstep vectorized rollout of num_envs episodes (one per sampled clip)."""
    from .batchsim import BatchedArm

    B = config.num_envs
    picks = [clips[int(rng.integers(len(clips)))] for _ in range(B)]
    for clip in picks:
        if clip.target is None:
            raise ValueError(f"training clip {clip.source_id!r} has no target")
    targets = np.array([perturb_target(c.target, rng).xyz for c in picks])
    steps = np.array([c.num_frames - 1 for c in picks])
    horizon = int(steps.max())

    arm = BatchedArm(skeleton, sim_config, B)
    arm.reset(np.array([c.frames_q[0] for c in picks]))

    # (T, B, ...) staging, masked by per-env episode length
    obs_rows, act_rows, logp_rows, val_rows = [], [], [], []
    rtask_rows, feat_rows = [], []
    for t in range(horizon):
        flat = arm.flat_states()
        phases = (t / steps) if config.phase_input else np.zeros(B)
        obs = np.concatenate([flat, phases[:, None], targets], axis=1)
        obs_t = torch.as_tensor(obs.astype(np.float32))
        with torch.no_grad():
            dist = policy.distribution(obs_t)
            act = dist.sample()
            logp = dist.log_prob(act).sum(-1)
            val = value(obs_t)
        actions = act.numpy().astype(float)
        arm.step(actions)
        next_flat = arm.flat_states()
        obs_rows.append(obs)
        act_rows.append(actions)
        logp_rows.append(logp.numpy())
        val_rows.append(val.numpy())
        rtask_rows.append(arm.task_rewards(targets))
        feat_rows.append(np.concatenate([flat, next_flat], axis=1))

    cols: dict[str, list] = {k: [] for k in
                             ("obs", "actions", "log_probs", "r_task", "values",
                              "phases", "targets", "dones", "features")}
    for e in range(B):
        T = int(steps[e])
        for t in range(T):
            cols["obs"].append(obs_rows[t][e])
            cols["actions"].append(act_rows[t][e])
            cols["log_probs"].append(logp_rows[t][e])
            cols["r_task"].append(rtask_rows[t][e])
            cols["values"].append(val_rows[t][e])
            cols["phases"].append(t / T)
            cols["targets"].append(targets[e])
            cols["dones"].append(t == T - 1)
            cols["features"].append(feat_rows[t][e])
    n = len(cols["obs"])
    return TransitionBuffer(
        obs=np.asarray(cols["obs"], dtype=np.float32),
        actions=np.asarray(cols["actions"], dtype=np.float32),
        log_probs=np.asarray(cols["log_probs"]),
        r_task=np.asarray(cols["r_task"]),
        r_imitation=np.zeros(n),
        rewards=np.zeros(n),
        values=np.asarray(cols["values"]),
        phases=np.asarray(cols["phases"]),
        targets=np.asarray(cols["targets"]),
        dones=np.asarray(cols["dones"], dtype=bool),
        features=np.asarray(cols["features"], dtype=np.float32),
    )


def train_policy(skeleton: SkeletonModel, clips: list[MotionClip],
                 config: TrainConfig,
                 sim_config: SimConfig | None = None) -> TrainResult:
    """Collect / discriminator-update / PPO-update loop over the iteration
    budget. A zero budget returns the freshly initialized networks."""
    if not clips:
        raise ValueError("empty clip set")
    sim_config = sim_config or SimConfig()
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)

    obs_dim = obs_dim_of(skeleton)
    act_dim = skeleton.num_joints
    policy = PolicyNetwork(obs_dim, act_dim, config.policy_hidden,
                           config.init_log_std)
    value = ValueNetwork(obs_dim, config.policy_hidden)
    disc = make_discriminator(config.disc_variant, feature_dim_of(skeleton),
                              config.disc_hidden)
    policy_opt = torch.optim.Adam(policy.parameters(), lr=config.policy_lr)
    value_opt = torch.optim.Adam(value.parameters(), lr=config.value_lr)
    disc_opt = torch.optim.Adam(disc.parameters(), lr=config.disc_lr)

    use_imitation = config.weights.w_imitation > 0.0
    if use_imitation:
        ref_feats, ref_phases = reference_features(clips)

    curves = []
    for it in range(config.iterations):
        buffer = _collect(policy, value, skeleton, sim_config, clips, config, rng)
        if use_imitation:
            buffer.r_imitation = imitation_reward(disc, buffer.features,
                                                  buffer.phases)
        buffer.rewards = (config.weights.w_imitation * buffer.r_imitation
                          + config.weights.w_task * buffer.r_task)
        if not np.all(np.isfinite(buffer.rewards)):
            raise RuntimeError(f"non-finite rewards at iteration {it}")
        buffer.compute_gae(config.discount, config.gae_lambda)

        disc_metrics = {}
        if use_imitation:
            for _ in range(config.disc_updates):
                bsz = min(config.minibatch_size, len(buffer), len(ref_feats))
                pol_idx = rng.integers(len(buffer), size=bsz)
                ref_idx = rng.integers(len(ref_feats), size=bsz)
                disc_metrics = update_discriminator(
                    disc, disc_opt,
                    buffer.features[pol_idx], ref_feats[ref_idx],
                    buffer.phases[pol_idx], ref_phases[ref_idx],
                    grad_penalty_weight=config.grad_penalty,
                )
        ppo_metrics = ppo_update(policy, value, buffer, config,
                                 policy_opt, value_opt)
        curves.append({
            "iteration": it,
            "mean_rG": float(buffer.r_task.mean()),
            "mean_rI": float(buffer.r_imitation.mean()),
            **{f"disc_{k}": v for k, v in disc_metrics.items()},
            **ppo_metrics,
        })

    duration = float(np.mean([c.duration for c in clips]))
    return TrainResult(policy=policy, value=value, discriminator=disc,
                       curves=curves, config=config, skeleton=skeleton,
                       sim_config=sim_config, episode_duration=duration)


# --- model handles and rollout ------------------------------------------------

@dataclass
class PointingModel:
    """Self-contained rollout handle for a trained policy."""

    policy: PolicyNetwork
    skeleton: SkeletonModel
    sim_config: SimConfig
    default_duration: float = 2.0
    phase_input: bool = True

    def generate(self, target: TargetPoint,
                 duration: float | None = None) -> MotionClip:
        duration = duration or self.default_duration
        fps = 1.0 / self.sim_config.control_dt
        steps = int(round(duration * fps))
        env = PointingEnv(self.skeleton, self.sim_config, steps, target,
                          phase_input=self.phase_input)
        obs = env.reset()
        frames = [env.state.q.copy()]
        for _ in range(steps):
            with torch.no_grad():
                mean = self.policy(torch.as_tensor(obs[None].astype(np.float32)))
            obs, _r, _done = env.step(mean.numpy()[0])
            frames.append(env.state.q.copy())
        return MotionClip(fps=fps, frames_q=np.asarray(frames),
                          skeleton=self.skeleton, target=target,
                          source_id="policy-rollout")


@dataclass
class GtnnModel:
    """Replays the stored clip whose target is nearest to the query."""

    library: ClipLibrary

    def generate(self, target: TargetPoint,
                 duration: float | None = None) -> MotionClip:
        return gtnn_generate(self.library, target)


def gtnn_generate(library: ClipLibrary, target: TargetPoint) -> MotionClip:
    if not library.clips:
        raise ValueError("empty library")
    t = target.xyz
    best = None
    best_d = np.inf
    for clip in library.clips:
        if clip.target is None:
            continue
        d = float(np.linalg.norm(clip.target.xyz - t))
        if d < best_d:
            best_d = d
            best = clip
    if best is None:
        raise ValueError("library has no annotated targets")
    return best


@dataclass
class ClusterPolicy:
    cluster_id: int
    member_targets: np.ndarray  # (m, 3)
    model: PointingModel
    discriminator: torch.nn.Module | None = None


@dataclass
class ClusterPolicySet:
    entries: list[ClusterPolicy]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("empty cluster policy set")
        for e in self.entries:
            if len(e.member_targets) == 0:
                raise ValueError(f"cluster {e.cluster_id} has no members")
        self.entries = sorted(self.entries, key=lambda e: e.cluster_id)

    def generate(self, target: TargetPoint,
                 duration: float | None = None) -> MotionClip:
        return select_policy(self, target).generate(target, duration)


def select_policy(cluster_set: ClusterPolicySet,
                  test_target: TargetPoint) -> PointingModel:
    """Policy of the cluster holding the training target nearest to the query;
    exact ties go to the lowest cluster id."""
    t = test_target.xyz
    best_model = None
    best_d = np.inf
    for entry in cluster_set.entries:
        d = float(np.min(np.linalg.norm(entry.member_targets - t, axis=1)))
        if d < best_d:
            best_d = d
            best_model = entry.model
    return best_model


def train_cluster_policies(library: ClipLibrary, labels,
                           config: TrainConfig,
                           sim_config: SimConfig | None = None
                           ) -> ClusterPolicySet:
    """One train_policy call per cluster of the label partition."""
    labels = np.asarray(labels)
    if len(labels) != len(library.clips):
        raise ValueError("labels must cover every clip")
    entries = []
    for cid in sorted(set(int(v) for v in labels)):
        members = [c for c, l in zip(library.clips, labels) if int(l) == cid]
        if not members:
            raise ValueError(f"cluster {cid} is empty")
        result = train_policy(library.skeleton, members, config, sim_config)
        entries.append(
            ClusterPolicy(
                cluster_id=cid,
                member_targets=np.array([c.target.xyz for c in members]),
                model=PointingModel(result.policy, result.skeleton,
                                    result.sim_config,
                                    default_duration=result.episode_duration,
                                    phase_input=config.phase_input),
                discriminator=result.discriminator,
            )
        )
    return ClusterPolicySet(entries=entries)


def generate_motion(model, target: TargetPoint,
                    duration: float | None = None) -> MotionClip:
    """Deterministic rollout / retrieval for any model handle."""
    if isinstance(model, ClipLibrary):
        model = GtnnModel(model)
    return model.generate(target, duration)


# --- persistence --------------------------------------------------------------

def save_checkpoint(path: str | Path, result: TrainResult) -> None:
    disc = result.discriminator
    payload = {
        "schema": CHECKPOINT_SCHEMA,
        "arch": {
            "obs_dim": result.policy.obs_dim,
            "act_dim": result.policy.act_dim,
            "policy_hidden": list(result.config.policy_hidden),
            "disc_hidden": list(result.config.disc_hidden),
            "disc_variant": disc.variant,
            "feature_dim": disc.feature_dim,
        },
        "policy": result.policy.state_dict(),
        "value": result.value.state_dict(),
        "discriminator": disc.state_dict(),
    }
    tmp = Path(str(path) + ".tmp")
    torch.save(payload, tmp)
    tmp.replace(path)


def load_checkpoint(path: str | Path) -> tuple[PolicyNetwork, ValueNetwork,
                                               torch.nn.Module]:
    payload = torch.load(path, weights_only=False)
    if payload.get("schema") != CHECKPOINT_SCHEMA:
        raise ValueError(f"unsupported checkpoint schema {payload.get('schema')!r}")
    arch = payload["arch"]
    policy = PolicyNetwork(arch["obs_dim"], arch["act_dim"],
                           tuple(arch["policy_hidden"]))
    value = ValueNetwork(arch["obs_dim"], tuple(arch["policy_hidden"]))
    disc = make_discriminator(arch["disc_variant"], arch["feature_dim"],
                              tuple(arch["disc_hidden"]))
    policy.load_state_dict(payload["policy"])
    value.load_state_dict(payload["value"])
    disc.load_state_dict(payload["discriminator"])
    return policy, value, disc


def export_curves(curves: list[dict], path: str | Path) -> None:
    if not curves:
        Path(path).write_text("iteration,mean_rG,mean_rI\n")
        return
    keys = list(curves[0].keys())
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=keys)
        w.writeheader()
        for row in curves:
            w.writerow(row)
