import numpy as np
import pytest
from scipy import stats

from itlm import ConfigError, CorruptionModel, GenConfig, LinkFunction, generate, generate_mixture
from itlm.datagen import load_dataset, save_dataset


def test_noiseless_clean_data_is_exact():
    ds = generate(GenConfig(n=200, d=5, alpha_star=1.0, sigma=0.0, seed=3))
    theta = ds.truth.theta_star[0]
    np.testing.assert_array_equal(ds.responses, ds.features @ theta)
    assert ds.truth.clean_mask.all()
    assert np.linalg.norm(theta) == pytest.approx(1.0, abs=1e-15)


def test_exact_clean_count():
    ds = generate(GenConfig(n=1000, d=3, alpha_star=0.7, seed=1))
    assert ds.truth.clean_mask.sum() == 700


def test_random_output_moments():
    ds = generate(GenConfig(n=100_000, d=1, alpha_star=1e-5, sigma=0.0,
                            corruption=CorruptionModel.random_output(1.0), seed=11))
    r = ds.responses[~ds.truth.clean_mask]
    assert r.size == 99_999
    # 5 standard errors of the mean and variance
    assert abs(r.mean()) <= 5 / np.sqrt(r.size)
    assert abs(r.var() - 1.0) <= 5 * np.sqrt(2 / r.size)


def test_same_seed_identical():
    cfg = GenConfig(n=100, d=4, alpha_star=0.6, seed=42)
    a, b = generate(cfg), generate(cfg)
    assert a.features.tobytes() == b.features.tobytes()
    assert a.responses.tobytes() == b.responses.tobytes()
    np.testing.assert_array_equal(a.truth.clean_mask, b.truth.clean_mask)


def test_noise_is_independent_of_features():
    cfg = GenConfig(n=10_000, d=10, alpha_star=0.8, sigma=0.5, seed=5)
    ds = generate(cfg)
    clean = ds.truth.clean_mask
    resid = ds.responses[clean] - ds.features[clean] @ ds.truth.theta_star[0]
    coef, *_ = np.linalg.lstsq(ds.features[clean], resid, rcond=None)
    assert np.linalg.norm(coef) <= 5 * cfg.sigma * np.sqrt(cfg.d / clean.sum())


def test_noise_is_gaussian():
    ds = generate(GenConfig(n=100_000, d=1, alpha_star=1.0, sigma=0.3, corruption=CorruptionModel.none(),
                            theta_star=[0.0], seed=8))
    assert abs(stats.kurtosis(ds.responses, fisher=False) - 3.0) <= 0.1
    assert ds.responses.std() == pytest.approx(0.3, rel=0.01)


def test_constant_and_adversarial_corruption():
    ds = generate(GenConfig(n=50, d=2, alpha_star=0.6, sigma=0.0,
                            corruption=CorruptionModel.constant(10.0), seed=2))
    np.testing.assert_array_equal(ds.responses[~ds.truth.clean_mask], 10.0)
    adv = np.array([3.0, -1.0])
    ds = generate(GenConfig(n=50, d=2, alpha_star=0.6, sigma=0.0,
                            corruption=CorruptionModel.adversarial(adv, offset=2.0), seed=2))
    bad = ~ds.truth.clean_mask
    np.testing.assert_allclose(ds.responses[bad], ds.features[bad] @ adv + 2.0, rtol=1e-15)


def test_piecewise_link_responses():
    link = LinkFunction.piecewise(1.0, 1.2)
    ds = generate(GenConfig(n=100, d=3, alpha_star=1.0, sigma=0.0, link=link, seed=4))
    np.testing.assert_array_equal(ds.responses, link.value(ds.features @ ds.truth.theta_star[0]))


def test_invalid_configs():
    with pytest.raises(ConfigError):
        GenConfig(alpha_star=0.0)
    with pytest.raises(ConfigError):
        GenConfig(sigma=-1.0)
    with pytest.raises(ConfigError):
        CorruptionModel.random_output(0.0)
    with pytest.raises(ConfigError):
        CorruptionModel.mixture([0.7, 0.2])
    with pytest.raises(ConfigError):
        generate(GenConfig(n=10, d=2, alpha_star=0.5, corruption=CorruptionModel.none()))


class TestMixture:
    def cfg(self, **kw):
        base = dict(n=1000, d=20, alpha_star=0.7, sigma=0.0,
                    corruption=CorruptionModel.mixture([0.7, 0.3]), seed=9)
        base.update(kw)
        return GenConfig(**base)

    def test_component_counts(self):
        ds = generate_mixture(self.cfg())
        assert np.bincount(ds.truth.component_id).tolist() == [700, 300]
        np.testing.assert_array_equal(ds.truth.clean_mask, ds.truth.component_id == 0)

    def test_orthogonal_unit_component(self):
        t = generate_mixture(self.cfg()).truth.theta_star
        assert abs(t[0] @ t[1]) <= 1e-12
        assert abs(np.linalg.norm(t[1]) - 1) <= 1e-12

    def test_noiseless_rows_follow_their_component(self):
        ds = generate_mixture(self.cfg())
        t = ds.truth.theta_star[ds.truth.component_id]
        np.testing.assert_array_equal(ds.responses, np.einsum("ij,ij->i", ds.features, t))

    def test_requires_d_at_least_two(self):
        with pytest.raises(ConfigError):
            generate_mixture(self.cfg(d=1))

    def test_generate_dispatches(self):
        a, b = generate(self.cfg()), generate_mixture(self.cfg())
        assert a.responses.tobytes() == b.responses.tobytes()


@pytest.mark.parametrize("mixture", [False, True])
def test_file_round_trip_is_bit_exact(tmp_path, mixture):
    corruption = CorruptionModel.mixture([0.7, 0.3]) if mixture else CorruptionModel.random_output()
    ds = generate(GenConfig(n=30, d=3, alpha_star=0.7, sigma=0.3, corruption=corruption,
                            link=LinkFunction.piecewise(1.0, 1.2), seed=1))
    path = tmp_path / "ds.txt"
    save_dataset(ds, path)
    back = load_dataset(path)
    assert back.features.tobytes() == ds.features.tobytes()
    assert back.responses.tobytes() == ds.responses.tobytes()
    assert back.truth.theta_star.tobytes() == ds.truth.theta_star.tobytes()
    np.testing.assert_array_equal(back.truth.clean_mask, ds.truth.clean_mask)
    np.testing.assert_array_equal(back.truth.component_id, ds.truth.component_id)
    assert back.link == ds.link


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("hello\n")
    with pytest.raises(ConfigError):
        load_dataset(path)
