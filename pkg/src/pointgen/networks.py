"""Policy, value and discriminator networks (plain MLP and phase-functioned)."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

NUM_CONTROL_SETS = 4  # phase-functioned control points at p = 0, 1/3, 2/3, 1


def _mlp(sizes: tuple[int, ...]) -> nn.Sequential:
    layers: list[nn.Module] = []
    for i in range(len(sizes) - 1):
        layers.append(nn.Linear(sizes[i], sizes[i + 1]))
        if i < len(sizes) - 2:
            layers.append(nn.ReLU())
    return nn.Sequential(*layers)


class PolicyNetwork(nn.Module):
    """Gaussian policy over PD target angles.

    Input is [flattened character state, phase, target xyz]; output is the
    action mean with a state-independent per-dimension log std.
    """

    def __init__(self, obs_dim: int, act_dim: int,
                 hidden: tuple[int, int] = (256, 256),
                 init_log_std: float = -1.0):
        super().__init__()
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.net = _mlp((obs_dim, *hidden, act_dim))
        self.log_std = nn.Parameter(torch.full((act_dim,), init_log_std))

    def forward(self, obs: torch.Tensor) -> torch.Tensor:
        return self.net(obs)

    def distribution(self, obs: torch.Tensor) -> torch.distributions.Normal:
        mean = self.net(obs)
        return torch.distributions.Normal(mean, self.log_std.exp())


class ValueNetwork(nn.Module):
    def __init__(self, obs_dim: int, hidden: tuple[int, int] = (256, 256)):
        super().__init__()
        self.net = _mlp((obs_dim, *hidden, 1))

    def forward(self, obs: torch.Tensor) -> torch.Tensor:
        return self.net(obs).squeeze(-1)


class Discriminator(nn.Module):
    """Plain MLP discriminator over consecutive character-state pairs.

    The ``phases`` argument is accepted and ignored, so both variants share
    one call signature.
    """

    variant = "plain"

    def __init__(self, feature_dim: int, hidden: tuple[int, int] = (128, 128)):
        super().__init__()
        self.feature_dim = feature_dim
        self.net = _mlp((feature_dim, *hidden, 1))

    def forward(self, features: torch.Tensor,
                phases: torch.Tensor | None = None) -> torch.Tensor:
        return self.net(features).squeeze(-1)


def catmull_rom_weights(phase: torch.Tensor) -> torch.Tensor:
    """(B, 4) blend weights over the 4 control sets for phase in [0, 1].

    Piecewise Catmull-Rom with clamped endpoints: the blend interpolates each
    control set exactly at its control phase and varies continuously between
    them. Weights sum to 1 (affine combination).
    """
    p = phase.clamp(0.0, 1.0)
    s = p * (NUM_CONTROL_SETS - 1)
    k = s.floor().clamp(0, NUM_CONTROL_SETS - 2).long()
    t = s - k.to(s.dtype)
    t2 = t * t
    t3 = t2 * t
    basis = 0.5 * torch.stack(
        [
            -t3 + 2 * t2 - t,
            3 * t3 - 5 * t2 + 2,
            -3 * t3 + 4 * t2 + t,
            t3 - t2,
        ],
        dim=-1,
    )
    weights = torch.zeros(p.shape[0], NUM_CONTROL_SETS, dtype=p.dtype)
    for offset in range(-1, 3):
        idx = (k + offset).clamp(0, NUM_CONTROL_SETS - 1)
        weights.scatter_add_(1, idx.unsqueeze(1), basis[:, offset + 1].unsqueeze(1))
    return weights


class PhaseBlendedLinear(nn.Module):
    """Linear layer whose weights are blended from 4 control parameter sets."""

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        scale = 1.0 / np.sqrt(in_dim)
        self.weight = nn.Parameter(
            torch.empty(NUM_CONTROL_SETS, out_dim, in_dim).uniform_(-scale, scale))
        self.bias = nn.Parameter(
            torch.empty(NUM_CONTROL_SETS, out_dim).uniform_(-scale, scale))

    def forward(self, x: torch.Tensor, blend: torch.Tensor) -> torch.Tensor:
        # blending weights then applying them equals applying each control set
        # and blending the outputs; the latter avoids materializing a
        # per-sample (out, in) weight tensor
        per_set = torch.einsum("bi,koi->kbo", x, self.weight)
        per_set = per_set + self.bias[:, None, :]
        return torch.einsum("bk,kbo->bo", blend, per_set)


class PhaseFunctionedDiscriminator(nn.Module):
    """Discriminator whose parameters are a phase-blended mix of 4 control
    sets, letting it separate the raise and retract parts of a gesture."""

    variant = "pfnn"

    def __init__(self, feature_dim: int, hidden: tuple[int, int] = (128, 128)):
        super().__init__()
        self.feature_dim = feature_dim
        self.l1 = PhaseBlendedLinear(feature_dim, hidden[0])
        self.l2 = PhaseBlendedLinear(hidden[0], hidden[1])
        self.l3 = PhaseBlendedLinear(hidden[1], 1)

    def forward(self, features: torch.Tensor,
                phases: torch.Tensor | None = None) -> torch.Tensor:
        if phases is None:
            raise ValueError("phase-functioned discriminator requires phases")
        blend = catmull_rom_weights(phases).to(features.dtype)
        h = torch.relu(self.l1(features, blend))
        h = torch.relu(self.l2(h, blend))
        return self.l3(h, blend).squeeze(-1)


def make_discriminator(variant: str, feature_dim: int,
                       hidden: tuple[int, int] = (128, 128)) -> nn.Module:
    if variant == "plain":
        return Discriminator(feature_dim, hidden)
    if variant == "pfnn":
        return PhaseFunctionedDiscriminator(feature_dim, hidden)
    raise ValueError(f"unknown discriminator variant {variant!r}")


def imitation_reward(disc: nn.Module, features: np.ndarray,
                     phases: np.ndarray | None = None) -> np.ndarray:
    """Map discriminator scores to rewards in [0, 1]:
    r = max(0, 1 - 0.25 (D - 1)^2)."""
    features = np.atleast_2d(np.asarray(features, dtype=np.float32))
    if features.shape[1] != disc.feature_dim:
        raise ValueError(
            f"feature dim {features.shape[1]} does not match "
            f"discriminator dim {disc.feature_dim}")
    with torch.no_grad():
        ph = None if phases is None else torch.as_tensor(
            np.asarray(phases, dtype=np.float32).reshape(-1))
        d = disc(torch.as_tensor(features), ph).numpy()
    return np.clip(1.0 - 0.25 * (d - 1.0) ** 2, 0.0, 1.0)
