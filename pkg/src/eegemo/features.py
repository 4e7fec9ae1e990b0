"""Differential entropy and asymmetry feature families.

All features build on band power P (see :mod:`eegemo.spectral`):

* DE   = 0.5 * ln(2*pi*e*P) per (window, channel, band), natural log.
* DASM = DE(left) - DE(right) over the 27 lateral pairs.
* RASM = DE(left) / DE(right) over the same pairs.
* ASM  = [DASM, RASM] concatenated column-wise.
* DCAU = DE(frontal) - DE(posterior) over the 23 caudal pairs.

Band power is floored at POWER_FLOOR before the log so silent channels
produce finite values; RASM denominators below RATIO_FLOOR in magnitude
are clamped and the affected columns flagged in tensor metadata.
"""

from __future__ import annotations

import math

import numpy as np

from .layout import ChannelLayout, PairTable, default_layout
from .spectral import BandTable, FIVE_BANDS, Spectrogram, compute_band_power, stft_power
from .tensor import FeatureColumn, FeatureTensor
from .trials import TrialRecording

LN_2PIE = math.log(2.0 * math.pi * math.e)
POWER_FLOOR = 1e-12
RATIO_FLOOR = 1e-6


def compute_de(s: Spectrogram, bands: BandTable) -> FeatureTensor:
    """Differential entropy per (window, channel, band)."""
    psd = compute_band_power(s, bands)
    de = 0.5 * np.log(2.0 * math.pi * math.e * np.maximum(psd.values, POWER_FLOOR))
    columns = tuple(FeatureColumn("DE", c.site, c.band) for c in psd.columns)
    return FeatureTensor(
        de, columns, psd.window_seconds,
        psd.subject_id, psd.session_id, psd.trial_id, psd.label,
    )


def _pair_columns(de: FeatureTensor, pairs: PairTable, kind: str):
    if "DE" not in de.kinds or len(de.kinds) != 1:
        raise ValueError(f"expected a DE tensor, got kinds {de.kinds}")
    index = de.column_index()
    bands = de.bands
    first_idx, second_idx, columns = [], [], []
    for a, b in pairs:
        for band in bands:
            if (a, band) not in index:
                raise ValueError(f"tensor is missing channel {a!r} for band {band!r}")
            if (b, band) not in index:
                raise ValueError(f"tensor is missing channel {b!r} for band {band!r}")
            first_idx.append(index[(a, band)])
            second_idx.append(index[(b, band)])
            columns.append(FeatureColumn(kind, f"{a}-{b}", band))
    return np.array(first_idx), np.array(second_idx), tuple(columns)


def compute_dasm(de: FeatureTensor, pairs: PairTable | None = None) -> FeatureTensor:
    """DE difference over left/right pairs."""
    pairs = pairs if pairs is not None else default_layout().lateral_pairs
    ia, ib, columns = _pair_columns(de, pairs, "DASM")
    values = de.values[:, ia] - de.values[:, ib]
    return FeatureTensor(
        values, columns, de.window_seconds,
        de.subject_id, de.session_id, de.trial_id, de.label,
    )


def compute_rasm(de: FeatureTensor, pairs: PairTable | None = None) -> FeatureTensor:
    """DE ratio over left/right pairs, denominator clamped away from zero."""
    pairs = pairs if pairs is not None else default_layout().lateral_pairs
    ia, ib, columns = _pair_columns(de, pairs, "RASM")
    num = de.values[:, ia]
    den = de.values[:, ib]
    small = np.abs(den) < RATIO_FLOOR
    sign = np.where(den < 0, -1.0, 1.0)
    den = np.where(small, sign * RATIO_FLOOR, den)
    out = FeatureTensor(
        num / den, columns, de.window_seconds,
        de.subject_id, de.session_id, de.trial_id, de.label,
    )
    guarded = sorted(set(np.nonzero(small)[1].tolist()))
    if guarded:
        out.meta["rasm_guard_columns"] = ";".join(str(i) for i in guarded)
    return out


def compute_asm(dasm: FeatureTensor, rasm: FeatureTensor) -> FeatureTensor:
    """Column-wise concatenation of DASM then RASM."""
    if dasm.n_windows != rasm.n_windows:
        raise ValueError(
            f"window counts differ: {dasm.n_windows} vs {rasm.n_windows}"
        )
    out = FeatureTensor(
        np.hstack([dasm.values, rasm.values]),
        dasm.columns + rasm.columns,
        dasm.window_seconds,
        dasm.subject_id, dasm.session_id, dasm.trial_id, dasm.label,
    )
    out.meta.update(rasm.meta)
    return out


def compute_dcau(de: FeatureTensor, pairs: PairTable | None = None) -> FeatureTensor:
    """DE difference over frontal/posterior pairs."""
    pairs = pairs if pairs is not None else default_layout().caudal_pairs
    ia, ib, columns = _pair_columns(de, pairs, "DCAU")
    values = de.values[:, ia] - de.values[:, ib]
    return FeatureTensor(
        values, columns, de.window_seconds,
        de.subject_id, de.session_id, de.trial_id, de.label,
    )


def band_slice(f: FeatureTensor, band: str) -> FeatureTensor:
    """Columns of one band; "total" returns the input unchanged."""
    if band == "total":
        return f
    keep = [i for i, c in enumerate(f.columns) if c.band == band]
    if not keep:
        raise ValueError(f"unknown band {band!r} for this tensor (has {f.bands})")
    return FeatureTensor(
        f.values[:, keep],
        tuple(f.columns[i] for i in keep),
        f.window_seconds,
        f.subject_id, f.session_id, f.trial_id, f.label,
        dict(f.meta),
    )


FEATURE_KINDS = ("PSD", "DE", "DASM", "RASM", "ASM", "DCAU")


def extract_features(
    trial: TrialRecording,
    kind: str = "DE",
    bands: BandTable = FIVE_BANDS,
    window_seconds: float = 1.0,
    layout: ChannelLayout | None = None,
) -> FeatureTensor:
    """Run the spectral front end and derive the requested feature family."""
    if kind not in FEATURE_KINDS:
        raise ValueError(f"unknown feature kind {kind!r}, expected one of {FEATURE_KINDS}")
    s = stft_power(trial, window_seconds)
    if kind == "PSD":
        return compute_band_power(s, bands)
    de = compute_de(s, bands)
    if kind == "DE":
        return de
    layout = layout if layout is not None else default_layout()
    if kind == "DASM":
        return compute_dasm(de, layout.lateral_pairs)
    if kind == "RASM":
        return compute_rasm(de, layout.lateral_pairs)
    if kind == "ASM":
        return compute_asm(
            compute_dasm(de, layout.lateral_pairs),
            compute_rasm(de, layout.lateral_pairs),
        )
    return compute_dcau(de, layout.caudal_pairs)
