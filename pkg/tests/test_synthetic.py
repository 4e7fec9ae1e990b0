"""Synthetic generator: determinism, planted spectra, validation."""

import numpy as np
import pytest

from eegemo.spectral import Band, BandTable, FIVE_BANDS, compute_band_power, stft_power
from eegemo.synthetic import SyntheticSpec, generate_synthetic, spec_from_dict

from conftest import SMALL_GROUPS, small_spec


class TestDeterminism:
    def test_equal_seeds_equal_trials(self):
        spec = small_spec(seed=7, trials_per_class=3, seconds=4.0)
        a = generate_synthetic(spec)
        b = generate_synthetic(spec)
        assert len(a) == len(b)
        for ta, tb in zip(a, b):
            assert ta.trial_id == tb.trial_id
            assert ta.label == tb.label
            assert np.array_equal(ta.samples, tb.samples)

    def test_different_seeds_differ(self):
        a = generate_synthetic(small_spec(seed=1, trials_per_class=1, seconds=2.0))
        b = generate_synthetic(small_spec(seed=2, trials_per_class=1, seconds=2.0))
        assert not np.array_equal(a[0].samples, b[0].samples)


class TestCounts:
    def test_balanced_labels(self):
        profiles = {0: {}, 1: {}, 2: {}}
        spec = SyntheticSpec(
            class_profiles=profiles, trials_per_class=30, noise_level=1.0,
            duration_seconds=1.0, channels=("A", "B"),
            channel_groups={"all": ("A", "B")}, seed=0,
        )
        trials = generate_synthetic(spec)
        assert len(trials) == 90
        labels = [t.label for t in trials]
        assert labels.count(0) == labels.count(1) == labels.count(2) == 30


class TestPlantedSpectrum:
    def test_pure_near_10hz_energy_in_alpha(self):
        # Noise-free spec emitting a single component drawn within 10 +/- 0.01 Hz.
        narrow = BandTable((Band("alpha", 9.99, 10.01),))
        spec = SyntheticSpec(
            class_profiles={0: {}, 1: {}},
            trials_per_class=1, noise_level=0.0, duration_seconds=8.0,
            channels=("A",), channel_groups={"all": ("A",)},
            band_amplitudes={"alpha": 1.0}, bands=narrow, seed=3,
        )
        trial = generate_synthetic(spec)[0]
        psd = compute_band_power(stft_power(trial, 1.0), FIVE_BANDS)
        by_band = {c.band: psd.values[:, i].sum() for i, c in enumerate(psd.columns)}
        total = sum(by_band.values())
        assert by_band["alpha"] / total >= 0.99

    def test_boosted_group_has_more_band_power(self):
        spec = small_spec(noise_level=0.2, trials_per_class=1, seconds=8.0, seed=5)
        trials = generate_synthetic(spec)
        gamma_boosted = next(t for t in trials if t.label == 1)
        flat = next(t for t in trials if t.label == 0)
        for t, expect_boost in ((gamma_boosted, True), (flat, False)):
            psd = compute_band_power(stft_power(t, 1.0), FIVE_BANDS)
            idx = {(c.site, c.band): i for i, c in enumerate(psd.columns)}
            tempo = np.mean([psd.values[:, idx[(ch, "gamma")]].mean()
                             for ch in SMALL_GROUPS["temporal"]])
            front = np.mean([psd.values[:, idx[(ch, "gamma")]].mean()
                             for ch in SMALL_GROUPS["frontal"]])
            if expect_boost:
                assert tempo > 4.0 * front
            else:
                assert tempo < 2.0 * front


class TestValidation:
    def test_negative_noise_rejected(self):
        with pytest.raises(ValueError, match="noise_level"):
            small_spec(noise_level=-0.1)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="2 classes"):
            SyntheticSpec(class_profiles={0: {}}, channels=("A",),
                          channel_groups={})

    def test_unknown_group_rejected(self):
        with pytest.raises(ValueError, match="unknown group"):
            SyntheticSpec(
                class_profiles={0: {}, 1: {"gamma": {"nowhere": 2.0}}},
                channels=("A",), channel_groups={},
            )

    def test_negative_amplitude_rejected(self):
        with pytest.raises(ValueError, match=">= 0"):
            SyntheticSpec(
                class_profiles={0: {}, 1: {}},
                channels=("A",), channel_groups={},
                band_amplitudes={"gamma": -1.0},
            )

    def test_spec_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ValueError, match="unknown synthetic spec keys"):
            spec_from_dict({"class_profiles": {"0": {}, "1": {}}, "bogus": 1})
