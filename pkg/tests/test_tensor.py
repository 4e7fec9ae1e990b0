"""Feature tensor CSV round trips and window pooling."""

import numpy as np
import pytest

from eegemo.tensor import (
    FeatureColumn, FeatureTensor, load_feature_csv, parse_descriptor,
    save_feature_csv, stack_windows,
)


def make_tensor(rng, windows=6, meta=None):
    cols = (
        FeatureColumn("DE", "T7", "gamma"),
        FeatureColumn("DE", "T8", "gamma"),
        FeatureColumn("DASM", "T7-T8", "alpha"),
    )
    return FeatureTensor(
        rng.normal(size=(windows, 3)), cols, 1.0,
        subject_id="s01", session_id="sess02", trial_id="t3", label=2,
        meta=meta or {},
    )


class TestCsvRoundTrip:
    def test_values_and_identity_preserved(self, tmp_path):
        t = make_tensor(np.random.default_rng(0))
        save_feature_csv(t, tmp_path / "f.csv")
        back = load_feature_csv(tmp_path / "f.csv")
        assert back.columns == t.columns
        assert back.subject_id == t.subject_id
        assert back.session_id == t.session_id
        assert back.trial_id == t.trial_id
        assert back.label == t.label
        assert back.window_seconds == t.window_seconds
        assert np.array_equal(back.values, t.values)  # repr round trip is exact

    def test_meta_entries_survive(self, tmp_path):
        t = make_tensor(np.random.default_rng(1), meta={"rasm_guard_columns": "0;2"})
        save_feature_csv(t, tmp_path / "f.csv")
        back = load_feature_csv(tmp_path / "f.csv")
        assert back.meta == {"rasm_guard_columns": "0;2"}

    def test_header_is_descriptor_row(self, tmp_path):
        t = make_tensor(np.random.default_rng(2))
        save_feature_csv(t, tmp_path / "f.csv")
        lines = (tmp_path / "f.csv").read_text().splitlines()
        header = next(l for l in lines if not l.startswith("#"))
        assert header == "DE:T7:gamma,DE:T8:gamma,DASM:T7-T8:alpha"

    def test_bad_descriptor_rejected(self):
        with pytest.raises(ValueError, match="descriptor"):
            parse_descriptor("DE:T7")


class TestStackWindows:
    def test_pools_labels_per_window(self):
        rng = np.random.default_rng(3)
        a = make_tensor(rng, windows=4)
        b = make_tensor(rng, windows=3)
        b.label = 0
        X, y = stack_windows([a, b])
        assert X.shape == (7, 3)
        assert y.tolist() == [2, 2, 2, 2, 0, 0, 0]

    def test_column_mismatch_rejected(self):
        rng = np.random.default_rng(4)
        a = make_tensor(rng)
        b = FeatureTensor(rng.normal(size=(2, 1)),
                          (FeatureColumn("DE", "CZ", "beta"),), 1.0)
        with pytest.raises(ValueError, match="mismatched"):
            stack_windows([a, b])

    def test_shape_validation(self):
        with pytest.raises(ValueError, match="descriptors"):
            FeatureTensor(np.zeros((2, 2)),
                          (FeatureColumn("DE", "CZ", "beta"),), 1.0)
