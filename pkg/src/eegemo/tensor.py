"""Window-by-feature matrices with per-column provenance.

Feature tensors are stored as CSV: optional ``# key=value`` comment lines
carry trial metadata, the header row holds one ``kind:site:band``
descriptor per column, and each following row is one analysis window.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

KINDS = ("PSD", "DE", "DASM", "RASM", "DCAU")


@dataclass(frozen=True)
class FeatureColumn:
    """Provenance of one tensor column: feature kind, channel or pair, band."""

    kind: str
    site: str
    band: str

    def descriptor(self) -> str:
        return f"{self.kind}:{self.site}:{self.band}"


def parse_descriptor(text: str) -> FeatureColumn:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"bad column descriptor {text!r}")
    return FeatureColumn(*parts)


@dataclass
class FeatureTensor:
    """Windows-by-features matrix plus carried trial identity.

    ``meta`` holds free-form auxiliary entries (e.g. guard flags raised by
    ratio features); values must be strings for lossless CSV round trips.
    """

    values: np.ndarray
    columns: tuple[FeatureColumn, ...]
    window_seconds: float
    subject_id: str = ""
    session_id: str = ""
    trial_id: str = ""
    label: int = -1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.columns = tuple(self.columns)
        if self.values.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {self.values.shape}")
        if self.values.shape[1] != len(self.columns):
            raise ValueError(
                f"{self.values.shape[1]} value columns for "
                f"{len(self.columns)} descriptors"
            )

    @property
    def n_windows(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    @property
    def kinds(self) -> tuple[str, ...]:
        seen = []
        for c in self.columns:
            if c.kind not in seen:
                seen.append(c.kind)
        return tuple(seen)

    @property
    def bands(self) -> tuple[str, ...]:
        seen = []
        for c in self.columns:
            if c.band not in seen:
                seen.append(c.band)
        return tuple(seen)

    def column_index(self) -> dict[tuple[str, str], int]:
        """Map (site, band) -> column position; requires unique sites."""
        out = {}
        for i, c in enumerate(self.columns):
            key = (c.site, c.band)
            if key in out:
                raise ValueError(f"duplicate column for site/band {key}")
            out[key] = i
        return out

    def with_values(self, values: np.ndarray) -> FeatureTensor:
        """Same provenance, new matrix of identical shape."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self.values.shape:
            raise ValueError(f"shape {values.shape} != {self.values.shape}")
        return replace(self, values=values, meta=dict(self.meta))


def save_feature_csv(t: FeatureTensor, path: str | Path) -> Path:
    path = Path(path)
    buf = io.StringIO()
    buf.write(f"# subject_id={t.subject_id}\n")
    buf.write(f"# session_id={t.session_id}\n")
    buf.write(f"# trial_id={t.trial_id}\n")
    buf.write(f"# label={int(t.label)}\n")
    buf.write(f"# window_seconds={t.window_seconds!r}\n")
    for key in sorted(t.meta):
        buf.write(f"# meta.{key}={t.meta[key]}\n")
    buf.write(",".join(c.descriptor() for c in t.columns) + "\n")
    for row in t.values:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    path.write_text(buf.getvalue())
    return path


def load_feature_csv(path: str | Path) -> FeatureTensor:
    path = Path(path)
    fields: dict[str, str] = {}
    meta: dict[str, str] = {}
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("# "):
                key, _, value = line[2:].partition("=")
                if key.startswith("meta."):
                    meta[key[5:]] = value
                else:
                    fields[key] = value
                continue
            if header is None:
                header = [parse_descriptor(s) for s in line.split(",")]
                continue
            rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no header row")
    values = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(header))
    return FeatureTensor(
        values=values,
        columns=tuple(header),
        window_seconds=float(fields.get("window_seconds", "0") or 0),
        subject_id=fields.get("subject_id", ""),
        session_id=fields.get("session_id", ""),
        trial_id=fields.get("trial_id", ""),
        label=int(fields.get("label", "-1")),
        meta=meta,
    )


def stack_windows(tensors: list[FeatureTensor]) -> tuple[np.ndarray, np.ndarray]:
    """Pool windows across trials; returns (X, window labels).

    All tensors must share the same column layout.
    """
    if not tensors:
        raise ValueError("no tensors to stack")
    cols = tensors[0].columns
    for t in tensors[1:]:
        if t.columns != cols:
            raise ValueError("tensors have mismatched column layouts")
    X = np.vstack([t.values for t in tensors])
    y = np.concatenate([np.full(t.n_windows, t.label, dtype=np.int64) for t in tensors])
    return X, y
