import numpy as np
import pytest

from gclab.errors import ConfigError
from gclab.noise import NoiseSpec, confusion_estimate, inject
from gclab.rng import CounterRng


class TestInject:
    def test_rate_zero_is_identity(self):
        labels = np.array([0, 1, 2, 1, 0])
        assigned, mask = inject(labels, 3, NoiseSpec("symmetric", 0.0, seed=1))
        assert np.array_equal(assigned, labels)
        assert not mask.any()

    def test_pairflip_rate_one_flips_all(self):
        labels = np.array([0, 1, 0, 1, 1])
        assigned, mask = inject(labels, 2, NoiseSpec("pairflip", 1.0, seed=2))
        assert np.array_equal(assigned, 1 - labels)
        assert mask.all()

    def test_symmetric_never_maps_to_self(self):
        rng = CounterRng(3)
        labels = rng.integers(4, 500)
        assigned, mask = inject(labels, 4, NoiseSpec("symmetric", 0.9, seed=3))
        assert (assigned[mask] != labels[mask]).all()
        assert np.array_equal(mask, assigned != labels)

    def test_realized_rate_within_binomial_band(self):
        labels = CounterRng(5).integers(6, 10000)
        assigned, mask = inject(labels, 6, NoiseSpec("symmetric", 0.2, seed=5))
        realized = mask.mean()
        assert 0.18 <= realized <= 0.22  # 5 sigma band around 0.2

    def test_seed_determinism(self):
        labels = CounterRng(7).integers(5, 300)
        a1, m1 = inject(labels, 5, NoiseSpec("symmetric", 0.3, seed=99))
        a2, m2 = inject(labels, 5, NoiseSpec("symmetric", 0.3, seed=99))
        assert np.array_equal(a1, a2)
        assert np.array_equal(m1, m2)

    def test_different_seeds_differ(self):
        labels = CounterRng(9).integers(5, 300)
        a1, _ = inject(labels, 5, NoiseSpec("symmetric", 0.3, seed=1))
        a2, _ = inject(labels, 5, NoiseSpec("symmetric", 0.3, seed=2))
        assert not np.array_equal(a1, a2)

    def test_bad_rate_rejected(self):
        with pytest.raises(ConfigError):
            NoiseSpec("symmetric", 1.5, seed=0)

    def test_single_class_with_noise_rejected(self):
        with pytest.raises(ConfigError):
            inject(np.zeros(5, dtype=int), 1, NoiseSpec("symmetric", 0.2, seed=0))

    def test_labels_out_of_range_rejected(self):
        with pytest.raises(ConfigError):
            inject(np.array([0, 3]), 3, NoiseSpec("symmetric", 0.1, seed=0))


class TestConfusionEstimate:
    def test_clean_labels_identity(self):
        labels = np.array([0, 1, 2, 0, 1, 2])
        assert np.array_equal(confusion_estimate(labels, labels, 3), np.eye(3))

    def test_pairflip_rate_one_permutation(self):
        labels = CounterRng(11).integers(4, 400)
        assigned, _ = inject(labels, 4, NoiseSpec("pairflip", 1.0, seed=11))
        conf = confusion_estimate(labels, assigned, 4)
        expected = np.roll(np.eye(4), 1, axis=1)
        assert np.array_equal(conf, expected)

    def test_symmetric_off_diagonals(self):
        labels = CounterRng(13).integers(6, 60000)
        assigned, _ = inject(labels, 6, NoiseSpec("symmetric", 0.3, seed=13))
        conf = confusion_estimate(labels, assigned, 6)
        off = conf[~np.eye(6, dtype=bool)]
        assert np.all(np.abs(off - 0.06) < 0.01)
        assert np.allclose(conf.sum(axis=1), 1.0)

    def test_empty_class_identity_row(self):
        conf = confusion_estimate(np.array([0, 0]), np.array([1, 0]), 3)
        assert np.array_equal(conf[2], [0.0, 0.0, 1.0])
        assert np.allclose(conf.sum(axis=1), 1.0)
