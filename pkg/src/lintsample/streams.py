"""Uniform variate streams: seeded pseudo-random, Sobol and Halton.

Every stream is random-access: ``rows(start, n)`` is a pure function of the
stream parameters, so skipping ahead costs nothing and disjoint row ranges
can be generated independently (and in parallel) with results identical to
a serial draw.

Algorithms are fixed so sequences are reproducible across platforms:

* ``pseudorandom``: Philox4x64-10 keyed through ``numpy.random.SeedSequence``;
  variates are the top 53 bits of each 64-bit word times 2^-53, consumed
  row-major.
* ``sobol``: gray-code Sobol points from the Joe-Kuo ``new-joe-kuo-6.21201``
  direction numbers at 32-bit resolution. Unscrambled streams skip the
  all-zero first point. Scrambled streams apply a hash-based nested
  (Owen-style) scramble per dimension and keep the first point, which is no
  longer degenerate once scrambled.
* ``halton``: radical inverses in the first ``width`` primes, starting at
  index 1. Scrambled streams add a random digit shift modulo the base at
  every digit position.
"""
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import SequenceExhaustedError
from .interpolant import DIM_MAX

KINDS = ("pseudorandom", "sobol", "halton")

SOBOL_BITS = 32
#: Rows available from a Sobol stream.
SOBOL_MAX_ROWS = 2**31

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53)
_SEED_MAX = 2**64


def _check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed < _SEED_MAX:
        raise ValueError("seed must be a non-negative 64-bit integer")
    return seed


def _max_width():
    return DIM_MAX + 1


# -- Sobol --------------------------------------------------------------------

@lru_cache(maxsize=1)
def _joe_kuo_table():
    with resources.files("lintsample").joinpath("data/joe_kuo_21201.npz").open("rb") as fh:
        z = np.load(fh)
        return z["poly"].astype(np.int64), z["vinit"].astype(np.int64)


@lru_cache(maxsize=None)
def sobol_direction_numbers(width):
    """Direction integers ``V[d, j]`` (32-bit) for ``width`` dimensions.

    Row 0 is the van der Corput sequence; row ``d >= 1`` uses the ``d``-th
    Joe-Kuo primitive polynomial and initial values.
    """
    poly, vinit = _joe_kuo_table()
    if width > poly.size:
        raise ValueError(f"Sobol direction numbers cover {poly.size} dimensions")
    v = np.zeros((width, SOBOL_BITS), dtype=np.uint64)
    for j in range(SOBOL_BITS):
        v[0, j] = 1 << (SOBOL_BITS - 1 - j)
    for d in range(1, width):
        p = int(poly[d])
        s = p.bit_length() - 1
        a = (p >> 1) & ((1 << (s - 1)) - 1) if s > 1 else 0
        m = [int(x) for x in vinit[d, :s]]
        for j in range(s, SOBOL_BITS):
            new = m[j - s] ^ (m[j - s] << s)
            for i in range(1, s):
                if (a >> (s - 1 - i)) & 1:
                    new ^= m[j - i] << i
            m.append(new)
        for j in range(SOBOL_BITS):
            v[d, j] = m[j] << (SOBOL_BITS - 1 - j)
    v.setflags(write=False)
    return v


def sobol_integers(indices, width):
    """Unscrambled Sobol points at ``indices`` as uint32, shape (n, width)."""
    v = sobol_direction_numbers(width)
    idx = np.asarray(indices, dtype=np.uint64)
    gray = idx ^ (idx >> np.uint64(1))
    out = np.zeros((idx.size, width), dtype=np.uint64)
    for j in range(SOBOL_BITS):
        on = ((gray >> np.uint64(j)) & np.uint64(1)).astype(bool)
        if np.any(on):
            out[on] ^= v[:, j]
    return out.astype(np.uint32)


def _reverse_bits32(x):
    x = x.astype(np.uint32)
    x = ((x >> np.uint32(1)) & np.uint32(0x55555555)) | ((x & np.uint32(0x55555555)) << np.uint32(1))
    x = ((x >> np.uint32(2)) & np.uint32(0x33333333)) | ((x & np.uint32(0x33333333)) << np.uint32(2))
    x = ((x >> np.uint32(4)) & np.uint32(0x0F0F0F0F)) | ((x & np.uint32(0x0F0F0F0F)) << np.uint32(4))
    x = ((x >> np.uint32(8)) & np.uint32(0x00FF00FF)) | ((x & np.uint32(0x00FF00FF)) << np.uint32(8))
    return (x >> np.uint32(16)) | (x << np.uint32(16))


def nested_scramble(x, keys):
    """Hash-based nested uniform scramble of 32-bit fractions.

    Works on bit-reversed integers with a permutation in which each bit is
    flipped by a function of the bits below it only. After reversing back,
    each output bit depends on itself and the more significant input bits,
    which is the nested structure of Owen scrambling, so digital-net
    balance is preserved.

    Parameters
    ----------
    x : ndarray of uint32, shape (n, w)
    keys : ndarray of uint32, shape (w,)
        Per-dimension scramble keys.
    """
    keys = keys.astype(np.uint32)
    y = _reverse_bits32(x)
    y ^= y * np.uint32(0x3D20ADEA)
    y += keys
    y *= (keys >> np.uint32(16)) | np.uint32(1)
    y ^= y * np.uint32(0x05526C56)
    y ^= y * np.uint32(0x53A22864)
    return _reverse_bits32(y)


# -- Halton -------------------------------------------------------------------

def _halton_digits(base):
    # enough digits for 64-bit indices and double precision
    return int(np.ceil(64 / np.log2(base)))


def radical_inverse(indices, base, shift=None):
    """Radical inverse of integer ``indices`` in ``base``.

    ``shift``, if given, holds one digit per position (least significant
    first); each digit of the index is shifted by it modulo ``base``.
    """
    idx = np.asarray(indices, dtype=np.uint64).copy()
    n_digits = _halton_digits(base)
    digits = np.empty((n_digits, idx.size), dtype=np.uint64)
    b = np.uint64(base)
    for j in range(n_digits):
        digits[j] = idx % b
        idx //= b
    if shift is not None:
        digits = (digits + np.asarray(shift, dtype=np.uint64)[:, None]) % b
    out = np.zeros(digits.shape[1])
    for j in range(n_digits - 1, -1, -1):
        out = (out + digits[j]) / base
    return out


# -- stream -------------------------------------------------------------------

class VariateStream:
    """Deterministic source of uniform variates in rows of fixed width.

    Parameters
    ----------
    kind : {'pseudorandom', 'sobol', 'halton'}
    width : int
        Row width; ``k + 1`` when feeding a k-dimensional sampler.
    seed : int or None
        64-bit seed. Required for ``pseudorandom``. For the QMC kinds a seed
        selects a scrambled sequence and ``None`` the plain one.

    Attributes
    ----------
    counter : int
        Index of the next row :meth:`next_rows` will return.
    """

    def __init__(self, kind, width, seed=None):
        if kind not in KINDS:
            raise ValueError(f"unknown stream kind {kind!r}; choose from {KINDS}")
        width = int(width)
        if not 1 <= width <= _max_width():
            raise ValueError(f"stream width must be in 1..{_max_width()}")
        if kind == "pseudorandom" and seed is None:
            raise ValueError("pseudorandom streams need a seed")
        self.kind = kind
        self.width = width
        self.seed = None if seed is None else _check_seed(seed)
        self.counter = 0
        self._setup()

    @property
    def scrambled(self):
        return self.kind != "pseudorandom" and self.seed is not None

    def _setup(self):
        if self.kind == "pseudorandom":
            self._seedseq = np.random.SeedSequence(self.seed)
        elif self.kind == "sobol" and self.scrambled:
            self._keys = np.random.SeedSequence(self.seed).generate_state(
                self.width, dtype=np.uint32
            )
        elif self.kind == "halton" and self.scrambled:
            self._shifts = []
            for d in range(self.width):
                base = _PRIMES[d]
                ss = np.random.SeedSequence([self.seed, d])
                raw = ss.generate_state(_halton_digits(base), dtype=np.uint32)
                self._shifts.append(raw % np.uint32(base))

    def rows(self, start, n):
        """Rows ``start .. start + n - 1`` without touching the counter.

        Returns
        -------
        ndarray, shape (n, width), values in [0, 1)
        """
        start = int(start)
        n = int(n)
        if start < 0 or n < 0:
            raise ValueError("start and n must be non-negative")
        if self.kind == "pseudorandom":
            return self._philox_rows(start, n)
        if self.kind == "sobol":
            return self._sobol_rows(start, n)
        return self._halton_rows(start, n)

    def next_rows(self, n):
        """Draw the next ``n`` rows and advance the counter."""
        if n < 1:
            raise ValueError("n must be at least 1")
        out = self.rows(self.counter, n)
        self.counter += int(n)
        return out

    def skip(self, n):
        """Advance the counter by ``n`` rows without generating them."""
        if n < 0:
            raise ValueError("cannot skip a negative number of rows")
        self.counter += int(n)
        return self

    def reset(self):
        self.counter = 0
        return self

    def scramble(self, seed):
        """New stream of the same QMC kind and width, scrambled by ``seed``."""
        if self.kind == "pseudorandom":
            raise ValueError("scrambling applies only to sobol and halton streams")
        return VariateStream(self.kind, self.width, seed)

    def copy(self):
        other = VariateStream(self.kind, self.width, self.seed)
        other.counter = self.counter
        return other

    def __repr__(self):
        return (f"VariateStream(kind={self.kind!r}, width={self.width}, "
                f"seed={self.seed}, counter={self.counter})")

    def _philox_rows(self, start, n):
        bitgen = np.random.Philox(self._seedseq)
        first = start * self.width
        # Philox emits 64-bit words in blocks of four
        bitgen.advance(first // 4)
        if first % 4:
            bitgen.random_raw(first % 4)
        raw = bitgen.random_raw(n * self.width)
        u = (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return u.reshape(n, self.width)

    def _sobol_rows(self, start, n):
        offset = 0 if self.scrambled else 1
        if start + n > SOBOL_MAX_ROWS:
            raise SequenceExhaustedError(
                f"Sobol stream limited to {SOBOL_MAX_ROWS} rows; "
                f"requested up to row {start + n}"
            )
        ints = sobol_integers(np.arange(start, start + n, dtype=np.uint64) + offset, self.width)
        if self.scrambled:
            ints = nested_scramble(ints, self._keys)
        return ints.astype(np.float64) * 2.0**-SOBOL_BITS

    def _halton_rows(self, start, n):
        idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
        out = np.empty((n, self.width))
        for d in range(self.width):
            shift = self._shifts[d] if self.scrambled else None
            out[:, d] = radical_inverse(idx, _PRIMES[d], shift)
        return np.minimum(out, 1.0 - 2.0**-53)


def make_stream(kind, width, seed=None):
    """Build a stream; ``kind`` may also be ``'none'`` for pseudorandom."""
    if kind in (None, "none"):
        kind = "pseudorandom"
    return VariateStream(kind, width, seed)
