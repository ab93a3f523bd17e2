import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from speciesid.dataset import SampleLabel
from speciesid.errors import FormatError, GeometryError, NumericError
from speciesid.features import (
    FVEC_MAGIC,
    FeatureMaps,
    FeatureTable,
    FeatureVector,
    global_average_pool,
    mock_extract,
    read_feature_table,
    write_feature_table,
)
from speciesid.image import RasterImage
from speciesid.rng import Xoshiro256

from test_augment import noise_image


def random_maps(c, h, w, seed=1):
    rng = Xoshiro256(seed)
    values = np.array([rng.uniform01() for _ in range(c * h * w)])
    return FeatureMaps(values.reshape(c, h, w) * 2.0 - 0.5)


def random_table(n, d, seed=2, n_classes=3):
    rng = Xoshiro256(seed)
    rows = []
    for i in range(n):
        values = np.array([rng.uniform01() * 4 - 2 for _ in range(d)])
        sid = i % n_classes
        rows.append(
            FeatureVector(values, f"r{i}", SampleLabel(sid, f"species_{sid:02d}"))
        )
    return FeatureTable(tuple(rows))


class TestGlobalAveragePool:
    def test_reduction_512_by_49(self):
        maps = random_maps(512, 7, 7)
        pooled = global_average_pool(maps)
        assert pooled.dims == 512
        assert maps.values[0].size == 49

    def test_constant_maps(self):
        maps = FeatureMaps(np.full((5, 3, 4), 0.7))
        assert global_average_pool(maps).values == pytest.approx([0.7] * 5)

    def test_single_map_mean(self):
        maps = FeatureMaps(np.array([[[1.0, 2.0], [3.0, 4.0]]]))
        assert global_average_pool(maps).values[0] == 2.5

    def test_linearity(self):
        a = random_maps(4, 5, 5, seed=3)
        b = random_maps(4, 5, 5, seed=4)
        alpha, beta = 1.7, -0.4
        combined = FeatureMaps(alpha * a.values + beta * b.values)
        lhs = global_average_pool(combined).values
        rhs = alpha * global_average_pool(a).values + beta * global_average_pool(b).values
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-15)

    @given(st.integers(1, 6), st.integers(1, 5), st.integers(1, 5), st.integers(0, 100))
    @settings(max_examples=30, deadline=None)
    def test_bounds(self, c, h, w, seed):
        maps = random_maps(c, h, w, seed=seed)
        pooled = global_average_pool(maps).values
        for ch in range(c):
            assert maps.values[ch].min() - 1e-12 <= pooled[ch] <= maps.values[ch].max() + 1e-12


class TestMockExtract:
    def test_constant_image(self):
        img = RasterImage(np.full((21, 21, 1), 0.4))
        maps = mock_extract(img, grid=3)
        assert maps.channels == 8
        assert np.allclose(maps.values[0], 0.4)  # mean map
        assert np.allclose(maps.values[1:], 0.0)  # spread/gradient/edges

    def test_determinism(self):
        img = noise_image(50, 50, seed=9)
        a = mock_extract(img, grid=7)
        b = mock_extract(img, grid=7)
        assert np.array_equal(a.values, b.values)

    def test_250_grid7_shape(self):
        img = noise_image(250, 250, seed=1)
        maps = mock_extract(img, grid=7)
        assert maps.values.shape == (8, 7, 7)

    def test_mean_map_matches_direct_cells(self):
        img = noise_image(29, 23, seed=5)
        grid = 4
        maps = mock_extract(img, grid=grid)
        gray = img.pixels[:, :, 0]
        h, w = gray.shape
        for i in range(grid):
            for j in range(grid):
                cell = gray[
                    h * i // grid : h * (i + 1) // grid,
                    w * j // grid : w * (j + 1) // grid,
                ]
                assert maps.values[0, i, j] == pytest.approx(cell.mean())
                assert maps.values[1, i, j] == pytest.approx(cell.std())

    def test_rotation_sensitivity(self):
        # fixed asymmetric fixture: a 90-degree turn must change the vector
        px = np.zeros((40, 40, 1))
        px[5:12, 3:30] = 0.9
        px[20:36, 6:12] = 0.5
        img = RasterImage(px)
        rotated = RasterImage(np.rot90(px, axes=(0, 1)).copy())
        a = global_average_pool(mock_extract(img, grid=4)).values
        b = global_average_pool(mock_extract(rotated, grid=4)).values
        assert not np.allclose(a, b)

    def test_image_smaller_than_grid(self):
        with pytest.raises(GeometryError):
            mock_extract(noise_image(5, 5), grid=7)

    def test_stats_selector(self):
        img = noise_image(30, 30)
        assert mock_extract(img, grid=3, stats=("mean",)).channels == 1
        assert mock_extract(img, grid=3, stats=("mean", "edges4")).channels == 5
        with pytest.raises(ValueError):
            mock_extract(img, grid=3, stats=("bogus",))


class TestFvecFormat:
    def test_round_trip_bit_exact(self, tmp_path):
        table = random_table(11, 6)
        path = tmp_path / "t.fvec"
        write_feature_table(table, path)
        back = read_feature_table(path)
        assert len(back) == len(table)
        for a, b in zip(table.rows, back.rows):
            assert a.sample_id == b.sample_id
            assert a.label.species_name == b.label.species_name
            assert np.array_equal(a.values, b.values)

    def test_header_reports_dims_and_rows(self, tmp_path):
        table = random_table(112, 512, n_classes=7)
        path = tmp_path / "big.fvec"
        write_feature_table(table, path)
        raw = path.read_bytes()
        dims, rows = struct.unpack_from("<II", raw, len(FVEC_MAGIC))
        assert (dims, rows) == (512, 112)

    def test_truncated_file(self, tmp_path):
        path = tmp_path / "t.fvec"
        write_feature_table(random_table(5, 4), path)
        path.write_bytes(path.read_bytes()[:-7])
        with pytest.raises(FormatError, match="truncated"):
            read_feature_table(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "t.fvec"
        path.write_bytes(b"NOPE" + b"\x00" * 20)
        with pytest.raises(FormatError, match="magic"):
            read_feature_table(path)

    def test_trailing_garbage(self, tmp_path):
        path = tmp_path / "t.fvec"
        write_feature_table(random_table(3, 2), path)
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(FormatError, match="trailing"):
            read_feature_table(path)

    def test_non_finite_rejected(self, tmp_path):
        table = random_table(2, 3)
        path = tmp_path / "t.fvec"
        write_feature_table(table, path)
        raw = bytearray(path.read_bytes())
        raw[-8:] = struct.pack("<d", float("nan"))
        path.write_bytes(bytes(raw))
        with pytest.raises(NumericError):
            read_feature_table(path)

    def test_csv_fallback_round_trip(self, tmp_path):
        table = random_table(7, 3)
        path = tmp_path / "t.csv"
        write_feature_table(table, path)
        back = read_feature_table(path)
        for a, b in zip(table.rows, back.rows):
            assert np.array_equal(a.values, b.values)  # repr round-trips floats

    @given(n=st.integers(1, 9), d=st.integers(1, 8), seed=st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_round_trip_property(self, tmp_path_factory, n, d, seed):
        table = random_table(n, d, seed=seed)
        path = tmp_path_factory.getbasetemp() / f"p{n}_{d}_{seed}.fvec"
        write_feature_table(table, path)
        back = read_feature_table(path)
        assert np.array_equal(back.matrix, table.matrix)

    def test_mismatched_dims_rejected(self):
        rows = (
            FeatureVector(np.array([1.0, 2.0]), "a", SampleLabel(0, "x")),
            FeatureVector(np.array([1.0]), "b", SampleLabel(0, "x")),
        )
        with pytest.raises(FormatError):
            FeatureTable(rows)
