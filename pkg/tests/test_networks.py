import numpy as np
import pytest
import torch

from pointgen.networks import (
    NUM_CONTROL_SETS,
    Discriminator,
    PhaseBlendedLinear,
    PhaseFunctionedDiscriminator,
    PolicyNetwork,
    ValueNetwork,
    catmull_rom_weights,
    imitation_reward,
    make_discriminator,
)


class TestPolicyValue:
    def test_shapes(self):
        policy = PolicyNetwork(obs_dim=12, act_dim=3)
        obs = torch.randn(7, 12)
        assert policy(obs).shape == (7, 3)
        dist = policy.distribution(obs)
        assert dist.mean.shape == (7, 3)
        assert torch.allclose(dist.stddev[0],
                              policy.log_std.exp())
        value = ValueNetwork(obs_dim=12)
        assert value(obs).shape == (7,)

    def test_log_std_initialization(self):
        policy = PolicyNetwork(8, 2, init_log_std=-0.7)
        assert torch.allclose(policy.log_std, torch.full((2,), -0.7))

    def test_deterministic_forward(self):
        torch.manual_seed(0)
        policy = PolicyNetwork(6, 2)
        obs = torch.randn(3, 6)
        assert torch.equal(policy(obs), policy(obs))


class TestCatmullRomWeights:
    def test_partition_of_unity(self):
        phases = torch.rand(200)
        w = catmull_rom_weights(phases)
        assert w.shape == (200, NUM_CONTROL_SETS)
        assert torch.allclose(w.sum(dim=1), torch.ones(200), atol=1e-6)

    def test_exact_at_control_phases(self):
        phases = torch.tensor([0.0, 1 / 3, 2 / 3, 1.0])
        w = catmull_rom_weights(phases)
        assert torch.allclose(w, torch.eye(4), atol=1e-6)

    def test_continuity(self):
        # the blend is continuous across segment boundaries
        eps = 1e-5
        for boundary in (1 / 3, 2 / 3):
            lo = catmull_rom_weights(torch.tensor([boundary - eps]))
            hi = catmull_rom_weights(torch.tensor([boundary + eps]))
            assert torch.allclose(lo, hi, atol=1e-3)

    def test_out_of_range_clamped(self):
        w_low = catmull_rom_weights(torch.tensor([-0.5]))
        w0 = catmull_rom_weights(torch.tensor([0.0]))
        assert torch.allclose(w_low, w0, atol=1e-7)
        w_high = catmull_rom_weights(torch.tensor([1.5]))
        w1 = catmull_rom_weights(torch.tensor([1.0]))
        assert torch.allclose(w_high, w1, atol=1e-7)


class TestDiscriminators:
    def test_factory(self):
        assert make_discriminator("plain", 10).variant == "plain"
        assert make_discriminator("pfnn", 10).variant == "pfnn"
        with pytest.raises(ValueError):
            make_discriminator("quantum", 10)

    def test_plain_ignores_phase(self):
        disc = Discriminator(10)
        x = torch.randn(5, 10)
        assert torch.equal(disc(x), disc(x, torch.rand(5)))

    def test_pfnn_requires_phase(self):
        disc = PhaseFunctionedDiscriminator(10)
        with pytest.raises(ValueError):
            disc(torch.randn(5, 10))

    def test_pfnn_phase_sensitivity(self):
        torch.manual_seed(3)
        disc = PhaseFunctionedDiscriminator(6)
        x = torch.randn(1, 6).repeat(2, 1)
        with torch.no_grad():
            out = disc(x, torch.tensor([0.0, 1.0]))
        assert abs(float(out[0] - out[1])) > 1e-4

    def test_pfnn_interpolates_control_sets(self):
        # at a control phase, the blended layer equals that control set's
        # plain affine map
        torch.manual_seed(1)
        layer = PhaseBlendedLinear(4, 3)
        x = torch.randn(1, 4)
        for k, p in enumerate([0.0, 1 / 3, 2 / 3, 1.0]):
            blend = catmull_rom_weights(torch.tensor([p]))
            out = layer(x, blend)
            direct = x @ layer.weight[k].T + layer.bias[k]
            assert torch.allclose(out, direct, atol=1e-5)


class TestImitationReward:
    def test_score_mapping(self):
        # bypass the network: r = max(0, 1 - 0.25 (D-1)^2)
        class Fixed:
            feature_dim = 2

            def __init__(self, v):
                self.v = v

            def __call__(self, f, p=None):
                return torch.full((f.shape[0],), self.v)

        feats = np.zeros((1, 2), dtype=np.float32)
        assert imitation_reward(Fixed(1.0), feats)[0] == pytest.approx(1.0)
        assert imitation_reward(Fixed(-1.0), feats)[0] == pytest.approx(0.0)
        assert imitation_reward(Fixed(0.0), feats)[0] == pytest.approx(0.75)
        assert imitation_reward(Fixed(3.0), feats)[0] == pytest.approx(0.0)
        assert imitation_reward(Fixed(5.0), feats)[0] == pytest.approx(0.0)

    def test_range(self):
        torch.manual_seed(0)
        disc = Discriminator(8)
        r = imitation_reward(disc, np.random.default_rng(0).normal(size=(50, 8)))
        assert np.all((0.0 <= r) & (r <= 1.0))

    def test_dim_mismatch(self):
        disc = Discriminator(8)
        with pytest.raises(ValueError):
            imitation_reward(disc, np.zeros((3, 7)))
