"""Scalp electrode layout and asymmetry pair tables.

The default cap is the 62-channel extended 10-20 montage. Channel
coordinates are unit-disc (x, y) positions intended for topographic grid
export and plotting, not for source localization.

Two pair tables accompany the cap:

* ``lateral_pairs`` -- 27 left/right symmetric electrode pairs. The 15th
  slot is F1-F2; it replaces a duplicated F7-F8 entry in the commonly
  circulated 27-pair listing, F1/F2 being the only symmetric frontal pair
  on this cap otherwise absent from that list. Override by supplying a
  custom table file if another convention is required.
* ``caudal_pairs`` -- 23 frontal/posterior electrode pairs.

Tables ship as a versioned JSON data file (``data/cap62_v1.json``); custom
caps can be loaded from a file with the same schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

CAP_FORMAT = "eegemo-cap"
CAP_VERSION = 1


@dataclass(frozen=True)
class PairTable:
    """Ordered electrode pairs with a role tag.

    For role ``lateral`` the first member is the left electrode, for
    ``caudal`` the frontal one.
    """

    pairs: tuple[tuple[str, str], ...]
    role: str = "custom"

    def __post_init__(self):
        for a, b in self.pairs:
            if a == b:
                raise ValueError(f"pair members must differ, got {a}-{b}")
        if len(set(self.pairs)) != len(self.pairs):
            raise ValueError("duplicate pair in table")

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


@dataclass(frozen=True)
class ChannelLayout:
    """Cap geometry: channel -> unit-disc coordinate, plus pair tables."""

    coordinates: dict[str, tuple[float, float]]
    lateral_pairs: PairTable
    caudal_pairs: PairTable
    version: int = CAP_VERSION

    def __post_init__(self):
        names = set(self.coordinates)
        if len(names) != len(self.coordinates):
            raise ValueError("duplicate channel names in layout")
        for table in (self.lateral_pairs, self.caudal_pairs):
            for a, b in table:
                if a not in names or b not in names:
                    raise ValueError(f"pair {a}-{b} references unknown channel")

    @property
    def channel_names(self) -> tuple[str, ...]:
        return tuple(self.coordinates)

    def __contains__(self, name: str) -> bool:
        return name in self.coordinates


def _layout_from_dict(doc: dict) -> ChannelLayout:
    if doc.get("format") != CAP_FORMAT:
        raise ValueError(f"not a cap layout file (format={doc.get('format')!r})")
    if doc.get("version") != CAP_VERSION:
        raise ValueError(
            f"unsupported cap layout version {doc.get('version')!r}, "
            f"expected {CAP_VERSION}"
        )
    coords = {c["name"]: (float(c["x"]), float(c["y"])) for c in doc["channels"]}
    lateral = PairTable(tuple((a, b) for a, b in doc["lateral_pairs"]), role="lateral")
    caudal = PairTable(tuple((a, b) for a, b in doc["caudal_pairs"]), role="caudal")
    return ChannelLayout(coords, lateral, caudal, version=doc["version"])


def load_layout(path: str | Path) -> ChannelLayout:
    """Load a cap layout from a versioned JSON file."""
    with open(path) as fh:
        return _layout_from_dict(json.load(fh))


_DEFAULT: ChannelLayout | None = None


def default_layout() -> ChannelLayout:
    """The packaged 62-channel cap with 27 lateral and 23 caudal pairs."""
    global _DEFAULT
    if _DEFAULT is None:
        text = resources.files("eegemo.data").joinpath("cap62_v1.json").read_text()
        _DEFAULT = _layout_from_dict(json.loads(text))
    return _DEFAULT


def default_channels() -> tuple[str, ...]:
    return default_layout().channel_names


# Coarse scalp regions of the default cap, used by the synthetic generator
# to plant class-dependent band signatures on named channel groups.
def default_groups() -> dict[str, tuple[str, ...]]:
    names = default_channels()
    groups = {
        "prefrontal": ("FP1", "FPZ", "FP2", "AF3", "AF4"),
        "frontal": ("F7", "F5", "F3", "F1", "FZ", "F2", "F4", "F6", "F8"),
        "temporal_left": ("FT7", "T7", "TP7", "FC5", "C5", "CP5"),
        "temporal_right": ("FT8", "T8", "TP8", "FC6", "C6", "CP6"),
        "central": ("FC3", "FC1", "FCZ", "FC2", "FC4", "C3", "C1", "CZ", "C2", "C4",
                    "CP3", "CP1", "CPZ", "CP2", "CP4"),
        "parietal": ("P7", "P5", "P3", "P1", "PZ", "P2", "P4", "P6", "P8"),
        "occipital": ("PO7", "PO5", "PO3", "POZ", "PO4", "PO6", "PO8",
                      "O1", "OZ", "O2", "CB1", "CB2"),
        "all": names,
    }
    return groups
