"""Labeled synthetic EEG with planted band-power signatures.

Each trial is a sum of one sinusoidal component per base band (one
frequency drawn uniformly inside the band's edges per trial, an
independent phase per channel) plus white Gaussian noise. Class identity
is planted by multiplying a component's amplitude on a named channel
group, so the expected spectral contrast between classes is known exactly
and downstream features/classifiers can be verified against it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .layout import default_channels, default_groups
from .spectral import BandTable, FIVE_BANDS
from .trials import TrialRecording


def _default_band_amplitudes() -> dict[str, float]:
    return {b.name: 1.0 for b in FIVE_BANDS}


@dataclass
class SyntheticSpec:
    """Recipe for a labeled synthetic trial set; seed fixes the output.

    ``class_profiles`` maps class label -> band name -> channel group ->
    amplitude multiplier. Groups come from ``channel_groups``; a channel in
    several boosted groups gets the product of the multipliers.
    """

    class_profiles: dict[int, dict[str, dict[str, float]]]
    trials_per_class: int = 10
    noise_level: float = 1.0
    duration_seconds: float = 20.0
    sampling_rate_hz: float = 200.0
    channels: tuple[str, ...] = field(default_factory=default_channels)
    channel_groups: dict[str, tuple[str, ...]] = field(default_factory=default_groups)
    band_amplitudes: dict[str, float] = field(default_factory=_default_band_amplitudes)
    channel_gain: dict[str, float] = field(default_factory=dict)
    bands: BandTable = FIVE_BANDS
    subject_id: str = "s01"
    session_id: str = "sess01"
    seed: int = 0

    def __post_init__(self):
        self.channels = tuple(self.channels)
        if len(self.class_profiles) < 2:
            raise ValueError("need at least 2 classes")
        if self.noise_level < 0:
            raise ValueError(f"noise_level must be >= 0, got {self.noise_level}")
        if self.trials_per_class < 1:
            raise ValueError("trials_per_class must be >= 1")
        known = set(self.channels)
        for group, members in self.channel_groups.items():
            for ch in members:
                if ch not in known:
                    raise ValueError(f"group {group!r} references unknown channel {ch!r}")
        band_names = set(self.bands.names)
        for name, amp in self.band_amplitudes.items():
            if name not in band_names:
                raise ValueError(f"band_amplitudes references unknown band {name!r}")
            if amp < 0:
                raise ValueError(f"amplitude for band {name!r} must be >= 0")
        for label, profile in self.class_profiles.items():
            for band, groups in profile.items():
                if band not in band_names:
                    raise ValueError(f"class {label}: unknown band {band!r}")
                for group, mult in groups.items():
                    if group not in self.channel_groups:
                        raise ValueError(f"class {label}: unknown group {group!r}")
                    if mult < 0:
                        raise ValueError(f"class {label}: multiplier must be >= 0")
        for ch, g in self.channel_gain.items():
            if ch not in known:
                raise ValueError(f"channel_gain references unknown channel {ch!r}")
            if g < 0:
                raise ValueError("channel gains must be >= 0")

    @property
    def class_labels(self) -> tuple[int, ...]:
        return tuple(sorted(self.class_profiles))


def generate_synthetic(spec: SyntheticSpec) -> list[TrialRecording]:
    """Deterministic trial set for the given spec; equal seeds, equal bytes."""
    rng = np.random.default_rng(spec.seed)
    n = int(round(spec.duration_seconds * spec.sampling_rate_hz))
    t = np.arange(n) / spec.sampling_rate_hz
    n_ch = len(spec.channels)
    gains = np.array([spec.channel_gain.get(ch, 1.0) for ch in spec.channels])

    trials = []
    for label in spec.class_labels:
        profile = spec.class_profiles[label]
        for i in range(spec.trials_per_class):
            x = np.zeros((n_ch, n))
            for band in spec.bands:
                base = spec.band_amplitudes.get(band.name)
                if base is None:
                    continue
                freq = rng.uniform(band.low_hz, band.high_hz)
                phase = rng.uniform(0.0, 2.0 * np.pi, size=n_ch)
                amp = np.full(n_ch, base)
                for group, mult in profile.get(band.name, {}).items():
                    members = set(spec.channel_groups[group])
                    in_group = np.array([ch in members for ch in spec.channels])
                    amp = np.where(in_group, amp * mult, amp)
                x += (amp * gains)[:, None] * np.sin(
                    2.0 * np.pi * freq * t + phase[:, None]
                )
            if spec.noise_level > 0:
                x += spec.noise_level * rng.standard_normal((n_ch, n))
            trials.append(TrialRecording(
                subject_id=spec.subject_id,
                session_id=spec.session_id,
                trial_id=f"c{label}_t{i:03d}",
                label=label,
                sampling_rate_hz=spec.sampling_rate_hz,
                channel_names=spec.channels,
                samples=x,
            ))
    return trials


def spec_from_dict(doc: dict) -> SyntheticSpec:
    """Build a spec from a JSON-style dict, rejecting unknown keys."""
    known = {
        "class_profiles", "trials_per_class", "noise_level", "duration_seconds",
        "sampling_rate_hz", "channels", "channel_groups", "band_amplitudes",
        "channel_gain", "subject_id", "session_id", "seed",
    }
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown synthetic spec keys: {sorted(unknown)}")
    if "class_profiles" not in doc:
        raise ValueError("synthetic spec requires class_profiles")
    kwargs = dict(doc)
    kwargs["class_profiles"] = {
        int(label): profile for label, profile in doc["class_profiles"].items()
    }
    if "channels" in kwargs:
        kwargs["channels"] = tuple(kwargs["channels"])
    if "channel_groups" in kwargs:
        kwargs["channel_groups"] = {
            g: tuple(m) for g, m in kwargs["channel_groups"].items()
        }
    return SyntheticSpec(**kwargs)


def load_spec(path: str | Path) -> SyntheticSpec:
    with open(path) as fh:
        return spec_from_dict(json.load(fh))
