"""Prior sampling and interpolation contracts."""

import numpy as np
import pytest

from voxprofile import model as mdl
from voxprofile import profiles as prof
from voxprofile.errors import DomainError


class TestSamplePrior:
    def test_monte_carlo_mean(self):
        rng = np.random.default_rng(0)
        n = 100_000
        draws = np.stack([prof.sample_prior(rng, 8).z for _ in range(n)])
        bound = 3.0 / np.sqrt(n)
        assert np.all(np.abs(draws.mean(axis=0)) < bound)

    def test_monte_carlo_covariance_diagonal(self):
        rng = np.random.default_rng(1)
        draws = np.stack([prof.sample_prior(rng, 6).z for _ in range(100_000)])
        diag = draws.var(axis=0)
        assert np.all(np.abs(diag - 1.0) < 0.05)

    def test_same_state_same_sample(self):
        a = prof.sample_prior(np.random.default_rng(7), 32).z
        b = prof.sample_prior(np.random.default_rng(7), 32).z
        assert np.array_equal(a, b)

    def test_provenance(self):
        p = prof.sample_prior(np.random.default_rng(0), 4, seed_label=9)
        assert p.provenance == {"kind": "prior_sample", "seed": 9}


class TestInterpolate:
    def test_endpoints(self):
        rng = np.random.default_rng(2)
        z1, z2 = rng.standard_normal((2, 32))
        assert np.array_equal(prof.interpolate(z1, z2, 1.0).z, z1)
        assert np.array_equal(prof.interpolate(z1, z2, 0.0).z, z2)

    def test_midpoint(self):
        z1 = np.array([2.0, 0.0])
        z2 = np.array([0.0, 2.0])
        assert np.array_equal(prof.interpolate(z1, z2, 0.5).z, np.array([1.0, 1.0]))

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        z1, z2 = rng.standard_normal((2, 16))
        for w in (0.0, 0.25, 0.5, 0.75, 1.0):
            a = prof.interpolate(z1, z2, w).z
            b = prof.interpolate(z2, z1, 1.0 - w).z
            assert np.array_equal(a, b)

    def test_affine_distance_property(self):
        rng = np.random.default_rng(4)
        z1, z2 = rng.standard_normal((2, 12))
        for w in np.linspace(0, 1, 11):
            zw = prof.interpolate(z1, z2, float(w)).z
            lhs = np.linalg.norm(zw - z2)
            rhs = w * np.linalg.norm(z1 - z2)
            assert abs(lhs - rhs) < 1e-12

    @pytest.mark.parametrize("w", [-0.01, 1.01, 2.0, -5.0])
    def test_domain(self, w):
        with pytest.raises(DomainError):
            prof.interpolate(np.zeros(3), np.ones(3), w)


class TestEncodeProfile:
    def make_params(self, seed=0):
        cfg = mdl.ModelConfig(
            feature_dim=6, frames_per_utterance=5, content_count=3,
            latent_dim=4, enc_hidden=(7,), dec_hidden=(8,),
        )
        return mdl.init_model(cfg, [0, 1], seed=seed)

    def test_deterministic(self):
        from voxprofile.corpus import Utterance

        params = self.make_params()
        rng = np.random.default_rng(5)
        utt = Utterance(0, 0, 0, rng.standard_normal((5, 6)))
        a = prof.encode_profile(params, utt).z
        b = prof.encode_profile(params, utt).z
        assert np.array_equal(a, b)

    def test_zero_weight_encoder_zero_profile(self):
        from voxprofile.corpus import Utterance

        params = self.make_params()
        for name, arr in mdl.param_items(params).items():
            if name.startswith("enc."):
                arr[...] = 0.0
        utt = Utterance(0, 0, 0, np.random.default_rng(6).standard_normal((5, 6)))
        assert np.array_equal(prof.encode_profile(params, utt).z, np.zeros(4))

    def test_equals_posterior_mean(self):
        from voxprofile.corpus import Utterance

        params = self.make_params(seed=9)
        utt = Utterance(0, 1, 0, np.random.default_rng(7).standard_normal((5, 6)))
        mu, _ = mdl.encode(params, utt.frames)
        assert np.array_equal(prof.encode_profile(params, utt).z, mu)
