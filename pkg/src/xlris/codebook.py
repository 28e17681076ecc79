"""Codebook construction: sampled-point grids, dedup keys, persistence.

Two codebook families live here. The far-field codebook places one codeword
per point of a fixed spatial-angle lattice. The near-field codebook pairs
every sampled scatter point on the BS side with every sampled point on the
user side, derives each codeword from the summed distance profile of the
pair, and drops pairs whose beam duplicates an earlier one.

Duplicate detection works on a global-phase-invariant canonical form of the
distance profile: fractional parts anchored to the first element, rounded to
nine decimals (integer nanocycles). Codebooks store a 64-bit polynomial hash
of that form rather than the full sequence, which keeps the full-scale
codebook small; the hash is what the cache file format carries per record.
"""

from __future__ import annotations

import struct
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import (
    ArrayDims,
    Box3,
    Point3,
    cascaded_distances,
    element_distances,
    far_field_steering,
    phase_vector,
)

_NANO = 1_000_000_000
_KEY_MULTIPLIER = np.uint64(0x9E3779B97F4A7C15)

_MAGIC = b"XLRC"
_FORMAT_VERSION = 1
_HEADER = struct.Struct("<IIIdQ")  # version, N1, N2, d, L
_RECORD_DTYPE = np.dtype([("pg", "<f8", 3), ("pr", "<f8", 3), ("key", "<u8")])


class CodebookFileError(ValueError):
    """Raised when a codebook cache file is missing, corrupt, or mismatched."""


@dataclass(frozen=True)
class SampleGrid:
    """Inclusive axis sweeps: min, min+step, ... up to the largest value <= max."""

    x: tuple[float, float]
    y: tuple[float, float]
    z: tuple[float, float]
    step_x: float
    step_y: float
    step_z: float

    def __post_init__(self) -> None:
        for name, (lo, hi) in (("x", self.x), ("y", self.y), ("z", self.z)):
            if lo > hi:
                raise ValueError(f"grid {name}-range has min > max: {(lo, hi)}")
        for name, step in (("x", self.step_x), ("y", self.step_y), ("z", self.step_z)):
            if not step > 0:
                raise ValueError(f"grid step_{name} must be positive, got {step}")

    @classmethod
    def from_box(cls, box: Box3, steps) -> "SampleGrid":
        sx, sy, sz = steps
        return cls(box.x, box.y, box.z, sx, sy, sz)

    def axis_samples(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            axis_samples(*self.x, self.step_x),
            axis_samples(*self.y, self.step_y),
            axis_samples(*self.z, self.step_z),
        )

    @property
    def shape(self) -> tuple[int, int, int]:
        xs, ys, zs = self.axis_samples()
        return len(xs), len(ys), len(zs)

    @property
    def size(self) -> int:
        nx, ny, nz = self.shape
        return nx * ny * nz


def axis_samples(lo: float, hi: float, step: float) -> np.ndarray:
    """Samples lo, lo+step, ... not exceeding hi (small float slop tolerated)."""
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


def enumerate_grid(grid: SampleGrid) -> np.ndarray:
    """All grid points as an (S, 3) array, x-major, then y, then z."""
    xs, ys, zs = grid.axis_samples()
    return np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1).reshape(-1, 3)


@lru_cache(maxsize=8)
def _key_powers(n: int) -> np.ndarray:
    powers = np.empty(n, dtype=np.uint64)
    acc = 1
    mult = int(_KEY_MULTIPLIER)
    for i in range(n):
        powers[i] = acc
        acc = (acc * mult) & 0xFFFFFFFFFFFFFFFF
    return powers


def reduced_profile(profile) -> np.ndarray:
    """Canonical form of a distance profile, in integer nanocycles.

    Takes fractional parts, anchors them to the first element, wraps into
    [0, 1), and rounds to 1e-9. Profiles that differ by a constant offset or
    by per-element integers (a global phase, or whole-wavelength shifts)
    reduce to the same form. Works on (N,) or batched (..., N) input.

    The loop below is a hand-fused equivalent of
    ``rint(mod(mod(p, 1) - mod(p, 1)[..., :1], 1) * 1e9) % 1e9`` that avoids
    np.mod (slow) and most temporaries; the full-scale build sweeps hundreds
    of millions of elements through here.
    """
    p = np.asarray(profile, dtype=np.float64)
    frac = np.floor(p)
    np.subtract(p, frac, out=frac)  # x - floor(x): exact, == np.mod(x, 1)
    anchor = frac[..., :1].copy()
    np.subtract(frac, anchor, out=frac)
    np.add(frac, 1.0, out=frac, where=frac < 0.0)  # wrap (-1, 1) into [0, 1)
    np.multiply(frac, float(_NANO), out=frac)
    np.rint(frac, out=frac)
    nano = frac.astype(np.int64)
    nano[nano == _NANO] = 0  # a delta that rounded to a full cycle is zero
    return nano


def codeword_key(profile) -> int:
    """Global-phase-invariant 64-bit dedup key for a codeword's distance profile.

    Two codewords whose beams coincide up to a global phase get equal keys;
    profiles differing anywhere by more than the 1e-9 rounding resolution get
    distinct keys (up to the negligible 64-bit hash collision odds).
    """
    return int(_hash_reduced(reduced_profile(profile)))


def _hash_reduced(nano: np.ndarray) -> np.ndarray:
    # Rolling polynomial hash mod 2^64; wraparound is the point. Consumes
    # (overwrites) its input, which both callers pass as an owned temporary.
    u = nano.view(np.uint64)
    np.multiply(u, _key_powers(nano.shape[-1]), out=u)
    return u.sum(axis=-1, dtype=np.uint64)


@dataclass(frozen=True)
class Codeword:
    """One reflecting vector plus the geometry that generated it.

    Exactly one of `pair` (near-field scatter points) or `angles` (far-field
    lattice angles) is set. The complex vector itself is regenerated on
    demand by the owning codebook.
    """

    key: int
    pair: tuple[Point3, Point3] | None = None
    angles: tuple[float, float] | None = None


def codeword_vector(cw: Codeword, dims: ArrayDims) -> np.ndarray:
    """Regenerate a codeword's complex vector from its stored geometry."""
    if cw.pair is not None:
        return phase_vector(cascaded_distances(cw.pair[0], cw.pair[1], dims), conjugate=True)
    if cw.angles is not None:
        return np.conj(far_field_steering(cw.angles[0], cw.angles[1], dims))
    raise ValueError("codeword carries neither a point pair nor an angle pair")


class NearFieldCodebook:
    """Ordered, deduplicated codewords indexed by scatter-point pairs.

    Codeword ``l`` is defined by points ``(g_points[pairs[l, 0]],
    r_points[pairs[l, 1]])``; its vector is the conjugated spherical-wave
    phase profile of that pair and is regenerated lazily (the full-scale
    codebook held as dense vectors would be hundreds of MB).
    """

    def __init__(
        self,
        dims: ArrayDims,
        g_points: np.ndarray,
        r_points: np.ndarray,
        pairs: np.ndarray,
        keys: np.ndarray,
        grid_g: SampleGrid | None = None,
        grid_r: SampleGrid | None = None,
        pre_dedup_pairs: int | None = None,
    ):
        self.dims = dims
        self.g_points = np.asarray(g_points, dtype=np.float64).reshape(-1, 3)
        self.r_points = np.asarray(r_points, dtype=np.float64).reshape(-1, 3)
        self.pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        self.keys = np.asarray(keys, dtype=np.uint64).reshape(-1)
        if len(self.keys) != len(self.pairs):
            raise ValueError("pairs and keys must have equal length")
        self.grid_g = grid_g
        self.grid_r = grid_r
        self.pre_dedup_pairs = pre_dedup_pairs

    @property
    def size(self) -> int:
        return len(self.pairs)

    def __len__(self) -> int:
        return self.size

    def source_pair(self, l: int) -> tuple[Point3, Point3]:
        gi, ri = self.pairs[l]
        return Point3.from_array(self.g_points[gi]), Point3.from_array(self.r_points[ri])

    def key(self, l: int) -> int:
        return int(self.keys[l])

    def codeword(self, l: int) -> Codeword:
        return Codeword(key=self.key(l), pair=self.source_pair(l))

    def distance_profile(self, l: int) -> np.ndarray:
        gi, ri = self.pairs[l]
        return element_distances(self.g_points[gi], self.dims) + element_distances(
            self.r_points[ri], self.dims
        )

    def vector(self, l: int) -> np.ndarray:
        """Codeword vector: conjugated phases exp(+j*2*pi*D_s) per element."""
        return phase_vector(self.distance_profile(l), conjugate=True)

    def responses(self, h_bar: np.ndarray) -> np.ndarray:
        """Noiseless inner products theta_l^T h_bar for every codeword.

        Exploits the pair factorization: each codeword is the element-wise
        product of two per-point conjugated steering vectors, so all L
        responses come from one (Sg, N) x (N, Sr) product and a gather.
        """
        h = np.asarray(h_bar)
        if h.shape != (self.dims.n,):
            raise ValueError(f"channel vector length {h.shape} != N={self.dims.n}")
        u_g = phase_vector(element_distances(self.g_points, self.dims), conjugate=True)
        u_r = phase_vector(element_distances(self.r_points, self.dims), conjugate=True)
        cross = (u_g * h[np.newaxis, :]) @ u_r.T
        return cross[self.pairs[:, 0], self.pairs[:, 1]]


class FarFieldCodebook:
    """The N1*N2-column DFT-style codebook on the planar-wave angle lattice.

    Codeword ``l = n*N2 + m`` is the conjugated planar-wave steering vector
    at (phis[n], psis[m]).
    """

    def __init__(self, dims: ArrayDims, phis: np.ndarray, psis: np.ndarray):
        self.dims = dims
        self.phis = np.asarray(phis, dtype=np.float64)
        self.psis = np.asarray(psis, dtype=np.float64)

    @property
    def size(self) -> int:
        return len(self.phis) * len(self.psis)

    def __len__(self) -> int:
        return self.size

    def angles(self, l: int) -> tuple[float, float]:
        n, m = divmod(l, len(self.psis))
        return float(self.phis[n]), float(self.psis[m])

    def distance_profile(self, l: int) -> np.ndarray:
        """Phase profile (in cycles) playing the role of a distance profile."""
        phi, psi = self.angles(l)
        return np.add.outer(phi * np.arange(self.dims.n1), psi * np.arange(self.dims.n2)).ravel()

    def key(self, l: int) -> int:
        return codeword_key(self.distance_profile(l))

    def codeword(self, l: int) -> Codeword:
        return Codeword(key=self.key(l), angles=self.angles(l))

    def vector(self, l: int) -> np.ndarray:
        phi, psi = self.angles(l)
        return np.conj(far_field_steering(phi, psi, self.dims))

    def responses(self, h_bar: np.ndarray) -> np.ndarray:
        h = np.asarray(h_bar)
        if h.shape != (self.dims.n,):
            raise ValueError(f"channel vector length {h.shape} != N={self.dims.n}")
        a1 = phase_vector(np.outer(self.phis, np.arange(self.dims.n1)), conjugate=True)
        a2 = phase_vector(np.outer(self.psis, np.arange(self.dims.n2)), conjugate=True)
        return (a1 @ h.reshape(self.dims.n1, self.dims.n2) @ a2.T).ravel()


def far_field_codebook(dims: ArrayDims) -> FarFieldCodebook:
    """Codebook on the angle lattice phi_n = (2n-N1-1)/N1, psi_m = (2m-N2-1)/N2."""
    phis = (2.0 * np.arange(1, dims.n1 + 1) - dims.n1 - 1) / dims.n1
    psis = (2.0 * np.arange(1, dims.n2 + 1) - dims.n2 - 1) / dims.n2
    return FarFieldCodebook(dims, phis, psis)


def build_near_field_codebook(
    grid_g: SampleGrid, grid_r: SampleGrid, dims: ArrayDims, threads: int = 1
) -> NearFieldCodebook:
    """Sweep the ordered pair product of the two grids and dedup by beam.

    For each pair the summed distance profile defines the codeword; a pair
    is kept only if its canonical key has not been seen earlier in the
    sweep, so swapped pairs (and any other coincident beams) collapse to
    the first occurrence. Keys are a deterministic map over the pair
    product, so the result is identical whether blocks run serially or on
    `threads` workers.
    """
    pts_g = enumerate_grid(grid_g)
    pts_r = enumerate_grid(grid_r)
    s_g, s_r = len(pts_g), len(pts_r)
    if s_g == 0 or s_r == 0:
        raise ValueError("sample grids must contain at least one point")

    dist_g = element_distances(pts_g, dims)
    dist_r = element_distances(pts_r, dims)
    keys = np.empty(s_g * s_r, dtype=np.uint64)

    def fill_block(i: int) -> None:
        block = dist_g[i, np.newaxis, :] + dist_r
        keys[i * s_r : (i + 1) * s_r] = _hash_reduced(reduced_profile(block))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill_block, range(s_g)))
    else:
        for i in range(s_g):
            fill_block(i)

    _, first_seen = np.unique(keys, return_index=True)
    kept = np.sort(first_seen)
    pairs = np.column_stack([kept // s_r, kept % s_r])
    return NearFieldCodebook(
        dims,
        pts_g,
        pts_r,
        pairs,
        keys[kept],
        grid_g=grid_g,
        grid_r=grid_r,
        pre_dedup_pairs=s_g * s_r,
    )


def save_codebook(cb: NearFieldCodebook, path) -> None:
    """Write the binary cache: header, one record per codeword, trailing CRC32.

    Only source pairs, dims, and key hashes are persisted; vectors are
    regenerated on load.
    """
    if not isinstance(cb, NearFieldCodebook):
        raise TypeError("only near-field codebooks are persisted (far-field is formulaic)")
    records = np.empty(cb.size, dtype=_RECORD_DTYPE)
    records["pg"] = cb.g_points[cb.pairs[:, 0]]
    records["pr"] = cb.r_points[cb.pairs[:, 1]]
    records["key"] = cb.keys
    payload = _HEADER.pack(_FORMAT_VERSION, cb.dims.n1, cb.dims.n2, cb.dims.d, cb.size)
    payload += records.tobytes()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


def load_codebook(path, dims: ArrayDims) -> NearFieldCodebook:
    """Read a cache file back; rejects wrong magic/version/dims and corruption."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MAGIC) + _HEADER.size + 4:
        raise CodebookFileError(f"codebook file too short: {path}")
    if blob[: len(_MAGIC)] != _MAGIC:
        raise CodebookFileError(f"bad magic in codebook file: {path}")
    payload, (crc,) = blob[len(_MAGIC) : -4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload) != crc:
        raise CodebookFileError(f"checksum mismatch in codebook file: {path}")
    version, n1, n2, d, size = _HEADER.unpack_from(payload)
    if version != _FORMAT_VERSION:
        raise CodebookFileError(f"unsupported codebook format version {version}")
    if (n1, n2) != (dims.n1, dims.n2) or d != dims.d:
        raise CodebookFileError(
            f"codebook dims ({n1}x{n2}, d={d}) do not match requested "
            f"({dims.n1}x{dims.n2}, d={dims.d})"
        )
    body = payload[_HEADER.size :]
    if len(body) != size * _RECORD_DTYPE.itemsize:
        raise CodebookFileError(f"record section length mismatch in {path}")
    records = np.frombuffer(body, dtype=_RECORD_DTYPE)
    g_unique, g_idx = np.unique(records["pg"], axis=0, return_inverse=True)
    r_unique, r_idx = np.unique(records["pr"], axis=0, return_inverse=True)
    pairs = np.column_stack([g_idx.ravel(), r_idx.ravel()])
    return NearFieldCodebook(dims, g_unique, r_unique, pairs, records["key"].copy())
