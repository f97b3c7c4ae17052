import numpy as np
import pytest

from kcfmot.features import (
    COLOR_NAMES,
    N_CHANNELS,
    ColorNamesTable,
    TrackerLost,
    extract_patch,
    fallback_color_names,
    featurize,
    hann2d,
    load_color_names,
    read_color_names,
    write_color_names,
)
from kcfmot.geometry import BoundingBox


@pytest.fixture(scope="module")
def table():
    return load_color_names()


def _frame(rng, h=60, w=80):
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


def test_extract_patch_without_padding_is_exact_crop(rng):
    frame = _frame(rng)
    box = BoundingBox(10, 5, 20, 12)
    np.testing.assert_array_equal(extract_patch(frame, box, 0.0), frame[5:17, 10:30])


def test_extract_patch_padding_doubles_size_about_center(rng):
    frame = _frame(rng)
    patch = extract_patch(frame, BoundingBox(10, 10, 20, 20), 1.0)
    assert patch.shape == (40, 40, 3)
    # Window is centred on (20, 20), so it starts at (0, 0).
    np.testing.assert_array_equal(patch, frame[0:40, 0:40])


def test_extract_patch_replicates_edges_at_corner(rng):
    frame = _frame(rng)
    patch = extract_patch(frame, BoundingBox(0, 0, 10, 10), 1.0)
    assert patch.shape == (20, 20, 3)
    # Window spans -5..14; the out-of-frame band repeats row/column 0.
    np.testing.assert_array_equal(patch[:5, :5], np.broadcast_to(frame[0, 0], (5, 5, 3)))
    np.testing.assert_array_equal(patch[:5, 5:], np.broadcast_to(frame[0, :15], (5, 15, 3)))
    np.testing.assert_array_equal(patch[5:, 5:], frame[:15, :15])


def test_extract_patch_outside_frame_signals_lost(rng):
    with pytest.raises(TrackerLost):
        extract_patch(_frame(rng), BoundingBox(500, 500, 10, 10), 1.0)


def test_extract_patch_rejects_negative_padding(rng):
    with pytest.raises(ValueError):
        extract_patch(_frame(rng), BoundingBox(0, 0, 5, 5), -0.5)


def test_featurize_shape_and_gray_channel(table):
    patch = np.full((16, 24, 3), 128, dtype=np.uint8)
    f = featurize(patch, table)
    assert f.shape == (16, 24, N_CHANNELS)
    unwindowed = featurize(patch, table)[8, 12, 0] / hann2d(24, 16)[8, 12]
    assert abs(unwindowed) < 0.01


def test_featurize_red_patch_lights_red_channel(table):
    patch = np.zeros((9, 9, 3), dtype=np.uint8)
    patch[..., 0] = 255
    probs = table.lookup(patch)
    np.testing.assert_allclose(probs.sum(axis=2), 1.0, atol=1e-6)
    assert (probs.argmax(axis=2) == COLOR_NAMES.index("red")).all()
    f = featurize(patch, table)
    centre = f[4, 4, 1:]
    assert centre.argmax() == COLOR_NAMES.index("red")


def test_featurize_corners_are_zero(rng, table):
    f = featurize(_frame(rng, 20, 30), table)
    for r, c in [(0, 0), (0, -1), (-1, 0), (-1, -1)]:
        assert np.all(f[r, c] == 0.0)


def test_featurize_cells_pool_and_resize(rng, table):
    patch = _frame(rng, 21, 30)
    f = featurize(patch, table, cell=4)
    # 21 rows are resized to 20, the nearest multiple of the cell size.
    assert f.shape == (5, 8, N_CHANNELS)


def test_featurize_is_deterministic(rng, table):
    patch = _frame(rng, 20, 20)
    assert featurize(patch, table).tobytes() == featurize(patch.copy(), table).tobytes()


def test_featurize_rejects_bad_cell(table):
    with pytest.raises(ValueError):
        featurize(np.zeros((4, 4, 3), np.uint8), table, cell=0)


def test_hann2d_examples():
    np.testing.assert_array_equal(hann2d(1, 1), [[0.0]])
    np.testing.assert_allclose(hann2d(3, 1), [[0.0, 1.0, 0.0]])
    np.testing.assert_allclose(hann2d(1, 3), [[0.0], [1.0], [0.0]])
    np.testing.assert_allclose(hann2d(3, 3)[1], [0.0, 1.0, 0.0])
    w = hann2d(7, 5)
    assert w.shape == (5, 7)
    np.testing.assert_array_equal(w, w[:, ::-1])
    np.testing.assert_array_equal(w, w[::-1, :])
    assert w.min() >= 0.0 and w.max() <= 1.0


def test_hann_row_vector_matches_formula():
    n = np.arange(3)
    expected = 0.5 - 0.5 * np.cos(2 * np.pi * n / 2)
    np.testing.assert_allclose(np.outer(expected, expected)[1], expected)


def test_fallback_table_is_one_hot():
    t = fallback_color_names()
    assert t.entries.shape == (4096, 10)
    assert set(np.unique(t.entries)) == {0.0, 1.0}
    np.testing.assert_allclose(t.entries.sum(axis=1), 1.0)


def test_table_validation():
    with pytest.raises(ValueError):
        ColorNamesTable(np.zeros((4096, 10)))
    with pytest.raises(ValueError):
        ColorNamesTable(np.ones((10, 10)) / 10)


def test_table_csv_round_trip(tmp_path):
    t = fallback_color_names()
    path = tmp_path / "cn.csv"
    write_color_names(t, path)
    back = read_color_names(path)
    np.testing.assert_array_equal(back.entries, t.entries)
    assert load_color_names(path).entries.shape == (4096, 10)
