"""Short-time spectral analysis and band-power features.

Windows are consecutive, non-overlapping, Hann-weighted; the trailing
partial window is dropped. Bin power is the squared magnitude of the
one-sided DFT divided by the window energy sum(w^2). Under that
normalization every bin of a white-noise input has expectation equal to
the signal variance, so band power (the arithmetic mean over member bins)
estimates in-band variance and is invariant to the window length.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tensor import FeatureColumn, FeatureTensor
from .trials import TrialRecording


@dataclass(frozen=True)
class Band:
    name: str
    low_hz: float
    high_hz: float

    def __post_init__(self):
        if not self.low_hz < self.high_hz:
            raise ValueError(f"band {self.name}: low {self.low_hz} >= high {self.high_hz}")


@dataclass(frozen=True)
class BandTable:
    """Ordered, non-overlapping frequency bands."""

    bands: tuple[Band, ...]

    def __post_init__(self):
        prev = None
        names = set()
        for b in self.bands:
            if b.name in names:
                raise ValueError(f"duplicate band name {b.name!r}")
            names.add(b.name)
            if prev is not None and b.low_hz <= prev.high_hz:
                raise ValueError(
                    f"bands must be ordered and non-overlapping: "
                    f"{prev.name} ends at {prev.high_hz}, {b.name} starts at {b.low_hz}"
                )
            prev = b

    def __iter__(self):
        return iter(self.bands)

    def __len__(self) -> int:
        return len(self.bands)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(b.name for b in self.bands)


FIVE_BANDS = BandTable((
    Band("delta", 1.0, 3.0),
    Band("theta", 4.0, 7.0),
    Band("alpha", 8.0, 13.0),
    Band("beta", 14.0, 30.0),
    Band("gamma", 31.0, 50.0),
))

# Four-band variant for recordings already band-limited to 4-45 Hz.
FOUR_BANDS = BandTable((
    Band("theta", 4.0, 7.0),
    Band("alpha", 8.0, 13.0),
    Band("beta", 14.0, 30.0),
    Band("gamma", 31.0, 45.0),
))

BAND_TABLES = {"five": FIVE_BANDS, "four": FOUR_BANDS}


@dataclass
class Spectrogram:
    """Per-channel window-by-bin power with carried trial identity."""

    power: np.ndarray          # (channels, windows, bins), >= 0
    bin_hz: np.ndarray         # (bins,)
    window_seconds: float
    channel_names: tuple[str, ...]
    subject_id: str = ""
    session_id: str = ""
    trial_id: str = ""
    label: int = -1

    def __post_init__(self):
        self.power = np.asarray(self.power, dtype=np.float64)
        self.bin_hz = np.asarray(self.bin_hz, dtype=np.float64)
        if self.power.ndim != 3:
            raise ValueError(f"power must be 3-D, got shape {self.power.shape}")
        if self.power.shape[0] != len(self.channel_names):
            raise ValueError("channel axis does not match channel_names")
        if self.power.shape[2] != self.bin_hz.shape[0]:
            raise ValueError("bin axis does not match bin_hz")

    @property
    def n_windows(self) -> int:
        return self.power.shape[1]

    @property
    def nyquist_hz(self) -> float:
        return float(self.bin_hz[-1])


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window of length n."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft_power(t: TrialRecording, window_seconds: float = 1.0) -> Spectrogram:
    """Non-overlapping Hann-windowed power spectrogram of every channel."""
    if not window_seconds > 0:
        raise ValueError(f"window_seconds must be > 0, got {window_seconds}")
    n = int(round(window_seconds * t.sampling_rate_hz))
    if n < 1:
        raise ValueError("window shorter than one sample")
    n_windows = t.n_samples // n
    if n_windows < 1:
        raise ValueError(
            f"trial has {t.n_samples} samples, shorter than one "
            f"{window_seconds} s window ({n} samples)"
        )
    w = hann_window(n)
    norm = float(np.sum(w * w))
    x = t.samples[:, : n_windows * n].astype(np.float64)
    frames = x.reshape(t.n_channels, n_windows, n) * w
    spec = np.fft.rfft(frames, axis=2)
    power = (spec.real ** 2 + spec.imag ** 2) / norm
    bin_hz = np.fft.rfftfreq(n, d=1.0 / t.sampling_rate_hz)
    return Spectrogram(
        power=power,
        bin_hz=bin_hz,
        window_seconds=window_seconds,
        channel_names=t.channel_names,
        subject_id=t.subject_id,
        session_id=t.session_id,
        trial_id=t.trial_id,
        label=t.label,
    )


def band_bin_mask(bin_hz: np.ndarray, band: Band) -> np.ndarray:
    """Members are bins with low <= f <= high, both edges inclusive."""
    eps = 1e-9
    return (bin_hz >= band.low_hz - eps) & (bin_hz <= band.high_hz + eps)


def compute_band_power(s: Spectrogram, bands: BandTable) -> FeatureTensor:
    """Mean in-band power per (window, channel, band); feature kind PSD."""
    masks = []
    for band in bands:
        if band.high_hz > s.nyquist_hz + 1e-9:
            raise ValueError(
                f"band {band.name} ({band.low_hz}-{band.high_hz} Hz) exceeds "
                f"Nyquist {s.nyquist_hz} Hz"
            )
        mask = band_bin_mask(s.bin_hz, band)
        if not mask.any():
            raise ValueError(f"band {band.name} covers no spectrogram bins")
        masks.append(mask)

    n_ch = len(s.channel_names)
    nb = len(bands)
    values = np.empty((s.n_windows, n_ch * nb))
    columns = []
    for ci, ch in enumerate(s.channel_names):
        for bi, band in enumerate(bands):
            values[:, ci * nb + bi] = s.power[ci][:, masks[bi]].mean(axis=1)
            columns.append(FeatureColumn("PSD", ch, band.name))
    return FeatureTensor(
        values=values,
        columns=tuple(columns),
        window_seconds=s.window_seconds,
        subject_id=s.subject_id,
        session_id=s.session_id,
        trial_id=s.trial_id,
        label=s.label,
    )


def spectrogram_to_csv(s: Spectrogram, channel: str, path: str | Path) -> Path:
    """One channel's window-by-bin power as CSV, bin frequencies as header."""
    if channel not in s.channel_names:
        raise ValueError(f"unknown channel {channel!r}")
    ci = s.channel_names.index(channel)
    path = Path(path)
    lines = [f"# channel={channel}", f"# window_seconds={s.window_seconds!r}"]
    lines.append(",".join(repr(float(f)) for f in s.bin_hz))
    for row in s.power[ci]:
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path
