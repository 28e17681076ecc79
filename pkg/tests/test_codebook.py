import numpy as np
import pytest

from xlris.codebook import (
    CodebookFileError,
    SampleGrid,
    axis_samples,
    build_near_field_codebook,
    codeword_key,
    codeword_vector,
    enumerate_grid,
    far_field_codebook,
    load_codebook,
    reduced_profile,
    save_codebook,
)
from xlris.geometry import ArrayDims, Point3, cascaded_distances, far_field_steering

DIMS = ArrayDims(8, 2, 0.5)


def generic_line_grid(s, step=1.137):
    # s points varying in all coordinates via a slanted, irrational-ish sweep
    return SampleGrid(
        (0.83, 0.83 + step * (s - 1)), (3.41, 3.41), (-0.57, -0.57), step, 1.0, 1.0
    )


def brute_force_distinct_beams(grid_g, grid_r, dims, tol=1e-6):
    """Independent dedup oracle: pairwise vector comparison after phase alignment."""
    pts_g, pts_r = enumerate_grid(grid_g), enumerate_grid(grid_r)
    vectors = []
    for pg in pts_g:
        for pr in pts_r:
            profile = cascaded_distances(Point3.from_array(pg), Point3.from_array(pr), dims)
            vec = np.exp(2j * np.pi * (profile % 1.0))
            vectors.append(vec / vec[0])  # remove global phase
    kept = []
    for vec in vectors:
        if all(np.abs(vec - seen).max() > tol for seen in kept):
            kept.append(vec)
    return len(kept)


class TestGridEnumeration:
    def test_inclusive_sweep(self):
        assert np.array_equal(axis_samples(0, 10, 3), [0, 3, 6, 9])

    def test_single_point_axis(self):
        assert np.array_equal(axis_samples(5.0, 5.0, 2.0), [5.0])

    def test_full_scale_grid_count(self):
        # 25 x-samples, 2 y-samples, 9 z-samples
        grid = SampleGrid((-600, 600), (5, 100), (-200, 200), 50, 50, 50)
        assert grid.shape == (25, 2, 9)
        assert len(enumerate_grid(grid)) == 450

    def test_degenerate_grid_is_one_point(self):
        grid = SampleGrid((1, 1), (2, 2), (3, 3), 1, 1, 1)
        assert np.array_equal(enumerate_grid(grid), [[1, 2, 3]])

    def test_x_major_ordering(self):
        grid = SampleGrid((0, 1), (10, 11), (20, 21), 1, 1, 1)
        pts = enumerate_grid(grid)
        # z varies fastest, then y, then x
        assert np.array_equal(
            pts,
            [
                [0, 10, 20], [0, 10, 21], [0, 11, 20], [0, 11, 21],
                [1, 10, 20], [1, 10, 21], [1, 11, 20], [1, 11, 21],
            ],
        )

    def test_validation(self):
        with pytest.raises(ValueError):
            SampleGrid((1, 0), (0, 1), (0, 1), 1, 1, 1)
        with pytest.raises(ValueError):
            SampleGrid((0, 1), (0, 1), (0, 1), 0.0, 1, 1)


class TestCanonicalKey:
    def test_constant_offset_shares_key(self):
        profile = np.array([0.25, 1.5, 3.75, 10.125])
        assert codeword_key(profile) == codeword_key(profile + 7.25)

    def test_integer_shifts_share_key(self):
        profile = np.array([0.25, 1.5, 3.75, 10.125])
        shifts = np.array([3.0, 1.0, 14.0, 2.0])
        assert codeword_key(profile) == codeword_key(profile + shifts)

    def test_millicycle_perturbation_distinct(self):
        rng = np.random.default_rng(41)
        for _ in range(20):
            profile = rng.uniform(0, 2000, 32)
            bumped = profile.copy()
            bumped[7] += 1e-3
            assert codeword_key(profile) != codeword_key(bumped)

    def test_reduced_profile_anchor_is_zero(self):
        rng = np.random.default_rng(4)
        nano = reduced_profile(rng.uniform(0, 500, 16))
        assert nano[0] == 0
        assert nano.min() >= 0 and nano.max() < 1_000_000_000

    def test_reduced_profile_does_not_mutate_input(self):
        profile = np.array([1.2, 3.4, 5.6])
        before = profile.copy()
        reduced_profile(profile)
        assert np.array_equal(profile, before)


class TestFarFieldCodebook:
    def test_two_element_angles(self):
        cb = far_field_codebook(ArrayDims(2, 1, 0.5))
        assert cb.size == 2
        assert np.allclose(cb.phis, [-0.5, 0.5])

    def test_full_scale_size(self):
        assert far_field_codebook(ArrayDims(128, 4, 0.5)).size == 512

    def test_columns_are_conjugated_steering_vectors(self):
        dims = ArrayDims(5, 3, 0.5)
        cb = far_field_codebook(dims)
        for l in range(cb.size):
            phi, psi = cb.angles(l)
            assert np.array_equal(cb.vector(l), np.conj(far_field_steering(phi, psi, dims)))

    def test_lattice_order_matches_column_index(self):
        cb = far_field_codebook(ArrayDims(3, 2, 0.5))
        assert cb.angles(0) == (cb.phis[0], cb.psis[0])
        assert cb.angles(1) == (cb.phis[0], cb.psis[1])
        assert cb.angles(2) == (cb.phis[1], cb.psis[0])

    def test_pairwise_distinct_on_odd_dims(self):
        # pairwise comparison oracle; odd counts avoid the aliased half-lattice
        cb = far_field_codebook(ArrayDims(3, 3, 0.5))
        vecs = [cb.vector(l) for l in range(cb.size)]
        for i in range(len(vecs)):
            for j in range(i + 1, len(vecs)):
                assert np.abs(vecs[i] - vecs[j]).max() > 1e-6
        assert len({cb.key(l) for l in range(cb.size)}) == cb.size

    def test_unit_modulus(self):
        cb = far_field_codebook(ArrayDims(4, 4, 0.5))
        for l in range(cb.size):
            assert np.abs(np.abs(cb.vector(l)) - 1.0).max() < 1e-12

    def test_responses_match_naive_products(self):
        dims = ArrayDims(6, 2, 0.5)
        cb = far_field_codebook(dims)
        rng = np.random.default_rng(8)
        h = rng.standard_normal(dims.n) + 1j * rng.standard_normal(dims.n)
        naive = np.array([cb.vector(l) @ h for l in range(cb.size)])
        assert np.abs(cb.responses(h) - naive).max() < 1e-9


class TestNearFieldBuild:
    def test_single_point_pair(self):
        grid = SampleGrid((2, 2), (5, 5), (0, 0), 1, 1, 1)
        cb = build_near_field_codebook(grid, grid, DIMS)
        assert cb.size == 1
        assert cb.pre_dedup_pairs == 1

    @pytest.mark.parametrize("s", [3, 5, 10])
    def test_swap_dedup_matches_brute_force(self, s):
        grid = generic_line_grid(s)
        cb = build_near_field_codebook(grid, grid, DIMS)
        assert cb.size == s * (s + 1) // 2
        assert cb.size == brute_force_distinct_beams(grid, grid, DIMS)

    def test_dedup_bounds(self):
        grid_g = generic_line_grid(6)
        grid_r = generic_line_grid(4, step=0.731)
        cb = build_near_field_codebook(grid_g, grid_r, DIMS)
        assert cb.size <= grid_g.size * grid_r.size
        same = build_near_field_codebook(grid_g, grid_g, DIMS)
        assert same.size <= grid_g.size * (grid_g.size + 1) // 2

    def test_no_two_codewords_share_a_key(self):
        grid = generic_line_grid(7)
        cb = build_near_field_codebook(grid, grid, DIMS)
        assert len(set(cb.keys.tolist())) == cb.size

    def test_dedup_soundness_no_distinct_beams_merged(self):
        # every retained codeword pair differs by far more than the rounding resolution
        grid = generic_line_grid(5)
        cb = build_near_field_codebook(grid, grid, DIMS)
        vecs = [cb.vector(l) for l in range(cb.size)]
        for i in range(cb.size):
            for j in range(i + 1, cb.size):
                aligned = vecs[i] / vecs[i][0] - vecs[j] / vecs[j][0]
                assert np.abs(aligned).max() > 1e-6

    def test_deterministic_including_order(self):
        grid = generic_line_grid(6)
        a = build_near_field_codebook(grid, grid, DIMS)
        b = build_near_field_codebook(grid, grid, DIMS)
        assert np.array_equal(a.pairs, b.pairs)
        assert np.array_equal(a.keys, b.keys)

    def test_threaded_build_identical(self):
        grid = generic_line_grid(8)
        a = build_near_field_codebook(grid, grid, DIMS)
        b = build_near_field_codebook(grid, grid, DIMS, threads=4)
        assert np.array_equal(a.pairs, b.pairs)
        assert np.array_equal(a.keys, b.keys)

    def test_vector_is_conjugated_distance_profile(self):
        grid = generic_line_grid(4)
        cb = build_near_field_codebook(grid, grid, DIMS)
        for l in range(0, cb.size, 3):
            profile = cb.distance_profile(l)
            oracle = np.exp(2j * np.pi * (profile % 1.0))
            assert np.abs(cb.vector(l) - oracle).max() < 1e-12
            assert np.abs(np.abs(cb.vector(l)) - 1.0).max() < 1e-12

    def test_responses_match_naive_loop(self):
        grid = generic_line_grid(5)
        cb = build_near_field_codebook(grid, grid, DIMS)
        rng = np.random.default_rng(12)
        h = rng.standard_normal(DIMS.n) + 1j * rng.standard_normal(DIMS.n)
        naive = np.array([cb.vector(l) @ h for l in range(cb.size)])
        assert np.abs(cb.responses(h) - naive).max() < 1e-9

    def test_codeword_vector_helper_matches(self):
        grid = generic_line_grid(3)
        cb = build_near_field_codebook(grid, grid, DIMS)
        cw = cb.codeword(2)
        assert np.array_equal(codeword_vector(cw, DIMS), cb.vector(2))


class TestPersistence:
    @pytest.fixture
    def built(self):
        grid = generic_line_grid(6)
        return build_near_field_codebook(grid, grid, DIMS)

    def test_round_trip(self, built, tmp_path):
        path = tmp_path / "cb.bin"
        save_codebook(built, path)
        loaded = load_codebook(path, DIMS)
        assert loaded.size == built.size
        assert np.array_equal(loaded.keys, built.keys)
        for l in range(built.size):
            assert loaded.source_pair(l) == built.source_pair(l)
            assert np.abs(loaded.vector(l) - built.vector(l)).max() <= 1e-12

    def test_dims_mismatch_rejected(self, built, tmp_path):
        path = tmp_path / "cb.bin"
        save_codebook(built, path)
        with pytest.raises(CodebookFileError):
            load_codebook(path, ArrayDims(8, 4, 0.5))
        with pytest.raises(CodebookFileError):
            load_codebook(path, ArrayDims(8, 2, 0.25))

    def test_tampered_payload_rejected(self, built, tmp_path):
        path = tmp_path / "cb.bin"
        save_codebook(built, path)
        blob = bytearray(path.read_bytes())
        blob[40] ^= 0x5A
        path.write_bytes(bytes(blob))
        with pytest.raises(CodebookFileError):
            load_codebook(path, DIMS)

    def test_truncated_file_rejected(self, built, tmp_path):
        path = tmp_path / "cb.bin"
        save_codebook(built, path)
        path.write_bytes(path.read_bytes()[:20])
        with pytest.raises(CodebookFileError):
            load_codebook(path, DIMS)

    def test_bad_magic_rejected(self, built, tmp_path):
        path = tmp_path / "cb.bin"
        save_codebook(built, path)
        blob = bytearray(path.read_bytes())
        blob[:4] = b"NOPE"
        path.write_bytes(bytes(blob))
        with pytest.raises(CodebookFileError):
            load_codebook(path, DIMS)

    def test_far_field_codebook_not_persistable(self, tmp_path):
        with pytest.raises(TypeError):
            save_codebook(far_field_codebook(DIMS), tmp_path / "ff.bin")
