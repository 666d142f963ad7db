"""Index-addressable uniform randomness.

Every simulation in this package is a deterministic function of one
bi-infinite sequence of uniforms.  The seeded source computes u_i as a pure
function of (seed, i) in counter mode, so indices can be queried in any
order, negative indices included, and extending further into the past is
O(1) per index.  Sequential-state generators cannot do this, which is why
we do not wrap random.Random or a numpy Generator here.

The mixing function is the splitmix64 finalizer; uniforms carry 53 bits of
mantissa in [0, 1).
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import IndexNotCoveredError

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_SEED_SALT = 0x5851F42D4C957F2D
_INV_2_53 = 2.0 ** -53


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MUL1) & _MASK
    z = ((z ^ (z >> 27)) * _MUL2) & _MASK
    return z ^ (z >> 31)


class SeededSource:
    """Reproducible uniforms: u_at(i) depends only on (seed, i).

    Instances are immutable after construction and safe to share across
    threads.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self._base = _mix((seed & _MASK) ^ _SEED_SALT)

    def u_at(self, i: int) -> float:
        z = (self._base + ((i & _MASK) * _GOLDEN)) & _MASK
        return (_mix(z) >> 11) * _INV_2_53

    def u_block(self, lo: int, hi: int) -> np.ndarray:
        """Vectorized u_at over the index range [lo, hi); identical values."""
        idx = np.arange(lo, hi, dtype=np.int64).view(np.uint64)
        z = np.uint64(self._base) + idx * np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
        z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def __repr__(self):
        return f"SeededSource(seed={self.seed})"


def _vec_mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
    return z ^ (z >> np.uint64(31))


def seed_bases(seeds: np.ndarray) -> np.ndarray:
    """Vectorized counterpart of SeededSource construction over many seeds."""
    s = np.asarray(seeds, dtype=np.int64).view(np.uint64)
    return _vec_mix(s ^ np.uint64(_SEED_SALT))


def u_for_bases(bases: np.ndarray, index: int) -> np.ndarray:
    """u_at(index) for many pre-mixed seeds at once; bit-identical to the
    scalar path."""
    z = bases + np.uint64(((index & _MASK) * _GOLDEN) & _MASK)
    z = _vec_mix(z)
    return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53


class FixedTrace:
    """Uniform source backed by an explicit index -> value map.

    Used for hand-built realizations in tests and worked examples; querying
    an uncovered index is an error rather than silently random.
    """

    def __init__(self, values: dict[int, float]):
        for i, u in values.items():
            if not 0.0 <= u < 1.0:
                raise ValueError(f"u_{i} = {u} outside [0, 1)")
        self.values = dict(values)

    @classmethod
    def from_csv(cls, path) -> "FixedTrace":
        """Load a trace from rows of (index, value); a header row is skipped."""
        values: dict[int, float] = {}
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row:
                    continue
                try:
                    i = int(row[0])
                except ValueError:
                    continue  # header
                values[i] = float(row[1])
        return cls(values)

    def u_at(self, i: int) -> float:
        try:
            return self.values[i]
        except KeyError:
            raise IndexNotCoveredError(i) from None

    def u_block(self, lo: int, hi: int) -> np.ndarray:
        return np.array([self.u_at(i) for i in range(lo, hi)], dtype=np.float64)

    def __repr__(self):
        lo, hi = min(self.values), max(self.values)
        return f"FixedTrace({len(self.values)} values on [{lo}, {hi}])"
