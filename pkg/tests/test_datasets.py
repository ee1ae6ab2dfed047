"""Dataset ingestion tests: builtin generators, CSV parsing with line-level
errors, and hand-built IDX fixtures."""

import struct

import numpy as np
import pytest

from pnflows.datasets import (gaussian_mixture, load_csv, load_dataset, load_idx,
                              rings, two_moons)
from pnflows.errors import FormatError


def idx_images_bytes(n, r, c, payload):
    return struct.pack(">IIII", 0x00000803, n, r, c) + bytes(payload)


def idx_labels_bytes(labels):
    return struct.pack(">II", 0x00000801, len(labels)) + bytes(labels)


class TestBuiltins:
    def test_two_moons_seeded_determinism(self):
        a = two_moons(1000, 0.05, seed=7)
        b = two_moons(1000, 0.05, seed=7)
        np.testing.assert_array_equal(a.data, b.data)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_two_moons_shape_and_labels(self):
        handle = two_moons(101, 0.02, seed=1)
        assert handle.data.shape == (101, 2)
        assert set(np.unique(handle.labels)) == {0, 1}

    def test_rings_radii(self):
        handle = rings(600, radii=(1.0, 3.0), noise=0.01, seed=2)
        norms = np.linalg.norm(handle.data, axis=1)
        inner = norms[handle.labels == 0]
        outer = norms[handle.labels == 1]
        assert inner.mean() == pytest.approx(1.0, abs=0.05)
        assert outer.mean() == pytest.approx(3.0, abs=0.05)

    def test_gaussian_mixture_centers(self):
        centers = np.array([[0.0, 0.0], [10.0, 10.0]])
        handle = gaussian_mixture(500, centers=centers, scale=0.1, seed=3)
        for label, center in enumerate(centers):
            cluster = handle.data[handle.labels == label]
            np.testing.assert_allclose(cluster.mean(axis=0), center, atol=0.1)


class TestCsv:
    def test_two_by_two(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1.0,2.0\n3.0,4.0\n")
        handle = load_csv(path)
        np.testing.assert_array_equal(handle.data, [[1.0, 2.0], [3.0, 4.0]])
        assert handle.labels is None

    def test_header_row_skipped(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("x0,x1\n1.0,2.0\n")
        np.testing.assert_array_equal(load_csv(path).data, [[1.0, 2.0]])

    def test_nan_reports_line_number(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1.0,2.0\n3.0,nan\n")
        with pytest.raises(FormatError, match="line 2"):
            load_csv(path)

    def test_garbage_reports_line_number(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1.0,2.0\n3.0,two\n")
        with pytest.raises(FormatError, match="line 2"):
            load_csv(path)

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1.0,2.0\n3.0\n")
        with pytest.raises(FormatError, match="line 2"):
            load_csv(path)

    def test_label_column_split(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1.0,2.0,0\n3.0,4.0,1\n")
        handle = load_csv(path, labels=True)
        assert handle.data.shape == (2, 2)
        np.testing.assert_array_equal(handle.labels, [0, 1])


class TestIdx:
    def test_hand_built_24_byte_fixture(self, tmp_path):
        # magic + dims 2x2x2 + 8 payload bytes -> 2 vectors of d=4
        path = tmp_path / "img.idx"
        path.write_bytes(idx_images_bytes(2, 2, 2, range(8)))
        handle = load_idx(path)
        assert handle.data.shape == (2, 4)
        np.testing.assert_allclose(handle.data[0], np.arange(4) / 255.0)
        assert handle.value_range == (0.0, 1.0)

    def test_labels_file(self, tmp_path):
        path = tmp_path / "lab.idx"
        path.write_bytes(idx_labels_bytes([3, 1, 4]))
        handle = load_idx(path)
        np.testing.assert_array_equal(handle.labels, [3, 1, 4])

    def test_bad_magic_reports_offset(self, tmp_path):
        path = tmp_path / "bad.idx"
        path.write_bytes(struct.pack(">I", 0xDEADBEEF) + b"xxxx")
        with pytest.raises(FormatError, match="byte 0"):
            load_idx(path)

    def test_payload_mismatch_reports_offset(self, tmp_path):
        path = tmp_path / "short.idx"
        path.write_bytes(idx_images_bytes(2, 2, 2, range(7)))
        with pytest.raises(FormatError, match="byte 16"):
            load_idx(path)


class TestLoadDataset:
    def test_builtin_expression(self):
        handle = load_dataset("two_moons(n=50, noise=0.01, seed=4)")
        assert handle.n == 50

    def test_unknown_builtin(self):
        with pytest.raises(FormatError, match="unknown builtin"):
            load_dataset("spirals(n=10)")

    def test_csv_path_with_labels_suffix(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1.0,2.0,1\n3.0,4.0,0\n")
        handle = load_dataset(f"{path}#labels")
        assert handle.dim == 2
        np.testing.assert_array_equal(handle.labels, [1, 0])

    def test_idx_with_separate_labels(self, tmp_path):
        img = tmp_path / "img.idx"
        img.write_bytes(idx_images_bytes(3, 1, 2, range(6)))
        lab = tmp_path / "lab.idx"
        lab.write_bytes(idx_labels_bytes([0, 1, 0]))
        handle = load_dataset(f"{img}#labels={lab}")
        assert handle.data.shape == (3, 2)
        np.testing.assert_array_equal(handle.labels, [0, 1, 0])

    def test_missing_file(self):
        with pytest.raises(FormatError, match="does not exist"):
            load_dataset("no/such/file.csv")