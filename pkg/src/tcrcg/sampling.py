"""Uniform sampling of tensor entries with replacement.

Draws come from numpy's Philox4x64 generator, a counter-based bit generator
with a fixed published algorithm, so ``(dims, m, seed)`` reproduces the same
index list on every platform.
"""

from dataclasses import dataclass, field
import csv
import io
import struct

import numpy as np

from ._validation import ShapeError, check_positive_int, check_tensor3

__all__ = [
    "SamplingSet",
    "make_rng",
    "sample_omega",
    "apply_r_omega",
    "max_multiplicity",
    "partition_omega",
]

_T3S_MAGIC = b"T3S1"


def make_rng(seed):
    """Philox-backed generator; ``seed`` may be an int or a sequence of ints."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


@dataclass(frozen=True, eq=False)
class SamplingSet:
    """Multiset of sampled entries.

    ``draws`` is an ``(m, 3)`` array of 0-based ``(i, j, k)`` indices in draw
    order. ``support`` lists the distinct entries and ``counts`` their
    multiplicities.
    """

    dims: tuple
    draws: np.ndarray
    seed: object = None
    support: np.ndarray = field(init=False, repr=False)
    counts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        draws = np.asarray(self.draws, dtype=np.int64).reshape(-1, 3)
        if len(dims) != 3 or min(dims) < 1:
            raise ShapeError(f"invalid dims {dims}")
        if draws.size and (draws.min() < 0 or np.any(draws.max(axis=0) >= np.array(dims))):
            raise ValueError("sample index out of bounds")
        flat = np.ravel_multi_index(draws.T, dims, order="F") if draws.size else np.empty(0, np.int64)
        uniq, counts = np.unique(flat, return_counts=True)
        support = np.stack(np.unravel_index(uniq, dims, order="F"), axis=1)
        draws.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "draws", draws)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "counts", counts)

    @property
    def m(self):
        return len(self.draws)

    @property
    def size(self):
        return int(np.prod(self.dims))

    @property
    def ratio(self):
        """``m / (n1 n2 n3)``, the expected fraction of observed entries."""
        return self.m / self.size

    @classmethod
    def from_mask(cls, mask):
        """Duplicate-free sampling set observing every True entry of ``mask``."""
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim == 2:
            mask = mask[:, :, np.newaxis]
        idx = np.stack(np.nonzero(mask), axis=1)
        order = np.argsort(np.ravel_multi_index(idx.T, mask.shape, order="F"), kind="stable")
        return cls(mask.shape, idx[order])

    def counts_tensor(self):
        out = np.zeros(self.dims)
        if self.m:
            out[tuple(self.support.T)] = self.counts
        return out

    def to_csv(self, path=None):
        """Write ``i,j,k,multiplicity`` rows with 1-based indices."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["i", "j", "k", "multiplicity"])
        for (i, j, k), c in zip(self.support.tolist(), self.counts.tolist()):
            writer.writerow([i + 1, j + 1, k + 1, c])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path, dims):
        draws = []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                idx = (int(row["i"]) - 1, int(row["j"]) - 1, int(row["k"]) - 1)
                draws.extend([idx] * int(row["multiplicity"]))
        return cls(dims, np.array(draws, dtype=np.int64).reshape(-1, 3))

    def to_bytes(self):
        """Binary form: ``T3S1``, three u32 dims, u64 m, then m*3 u32 indices."""
        head = _T3S_MAGIC + struct.pack("<3IQ", *self.dims, self.m)
        return head + self.draws.astype("<u4").tobytes()

    @classmethod
    def from_bytes(cls, data):
        if data[:4] != _T3S_MAGIC:
            raise ValueError("not a T3S sampling file")
        n1, n2, n3, m = struct.unpack_from("<3IQ", data, 4)
        body = np.frombuffer(data, dtype="<u4", count=3 * m, offset=24)
        return cls((n1, n2, n3), body.astype(np.int64).reshape(m, 3))


def sample_omega(dims, m, seed):
    """Draw ``m`` entries independently and uniformly with replacement."""
    dims = tuple(int(d) for d in dims)
    m = check_positive_int(m, "m")
    flat = make_rng(seed).integers(0, int(np.prod(dims)), size=m)
    draws = np.stack(np.unravel_index(flat, dims, order="F"), axis=1)
    return SamplingSet(dims, draws, seed)


def apply_r_omega(omega, z):
    """Sampling operator: each observed entry scaled by its multiplicity."""
    z = check_tensor3(z)
    if z.shape != omega.dims:
        raise ShapeError(f"tensor shape {z.shape} does not match sampling dims {omega.dims}")
    out = np.zeros_like(z)
    if omega.m:
        idx = tuple(omega.support.T)
        out[idx] = omega.counts * z[idx]
    return out


def max_multiplicity(omega):
    if omega.m < 1:
        raise ValueError("empty sampling set")
    return int(omega.counts.max())


def partition_omega(omega, groups):
    """Split the draw list into ``groups`` contiguous parts.

    Every part has ``m // groups`` draws except part 0, which also takes the
    remainder.
    """
    groups = check_positive_int(groups, "groups")
    if groups > omega.m:
        raise ValueError(f"cannot split {omega.m} draws into {groups} groups")
    size = omega.m // groups
    first = size + omega.m % groups
    bounds = [0, first] + [first + size * g for g in range(1, groups)]
    return [
        SamplingSet(omega.dims, omega.draws[lo:hi], omega.seed)
        for lo, hi in zip(bounds[:-1], bounds[1:])
    ]
