"""Bit-packed GF(2) vectors, Kronecker-structured generator matrices, and
word-parallel Gaussian elimination.

Vectors are packed little-endian into 64-bit words: logical bit ``i`` lives in
word ``i // 64`` at position ``i % 64``. Bits past the logical length are kept
zero so whole-word comparisons and XORs are valid.
"""

from __future__ import annotations

import enum

import numpy as np
from numba import njit

MAX_BITS = 1 << 24
KRON_CAP = 14  # explicit materialization cap; encoding works beyond it

_WORD = np.uint64


def _word_count(length: int) -> int:
    return (length + 63) // 64


def _pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 array (last axis) into little-endian uint64 words."""
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    nbytes = 8 * _word_count(bits.shape[-1])
    packed = np.packbits(bits, axis=-1, bitorder="little")
    pad = nbytes - packed.shape[-1]
    if pad:
        widths = [(0, 0)] * (packed.ndim - 1) + [(0, pad)]
        packed = np.pad(packed, widths)
    return packed.view(_WORD)


def _unpack_words(words: np.ndarray, length: int) -> np.ndarray:
    """Inverse of :func:`_pack_bits`; returns a 0/1 uint8 array."""
    raw = np.unpackbits(words.view(np.uint8), axis=-1, bitorder="little")
    return raw[..., :length]


class BitBlock:
    """A length-``n`` GF(2) vector packed into 64-bit words.

    Instances are treated as immutable: every operation returns a new block,
    so values can be shared freely across concurrent trial workers.
    """

    __slots__ = ("length", "words")

    def __init__(self, length: int, words: np.ndarray):
        if not 1 <= length <= MAX_BITS:
            raise ValueError(f"BitBlock length must be in [1, 2^24], got {length}")
        if words.shape != (_word_count(length),) or words.dtype != _WORD:
            raise ValueError("words array does not match the stated length")
        self.length = length
        self.words = words

    @classmethod
    def zeros(cls, length: int) -> "BitBlock":
        return cls(length, np.zeros(_word_count(length), dtype=_WORD))

    @classmethod
    def from_bits(cls, bits) -> "BitBlock":
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 1:
            raise ValueError("from_bits expects a 1-D 0/1 sequence")
        return cls(bits.shape[0], _pack_bits(bits))

    @classmethod
    def unit(cls, length: int, index: int) -> "BitBlock":
        if not 0 <= index < length:
            raise ValueError("unit index out of range")
        block = cls.zeros(length)
        block.words[index >> 6] |= _WORD(1) << _WORD(index & 63)
        return block

    def to_bits(self) -> np.ndarray:
        return _unpack_words(self.words, self.length)

    def bit(self, index: int) -> int:
        if not 0 <= index < self.length:
            raise IndexError("bit index out of range")
        return int((self.words[index >> 6] >> _WORD(index & 63)) & _WORD(1))

    def popcount(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def is_zero(self) -> bool:
        return not self.words.any()

    def __len__(self) -> int:
        return self.length

    def __xor__(self, other: "BitBlock") -> "BitBlock":
        if self.length != other.length:
            raise ValueError("length mismatch in XOR")
        return BitBlock(self.length, self.words ^ other.words)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitBlock)
            and self.length == other.length
            and bool(np.array_equal(self.words, other.words))
        )

    def __hash__(self):
        return hash((self.length, self.words.tobytes()))

    def __repr__(self) -> str:
        if self.length <= 64:
            body = "".join(str(b) for b in self.to_bits())
        else:
            body = f"<{self.length} bits, weight {self.popcount()}>"
        return f"BitBlock({body})"


class GF2Matrix:
    """Row-major matrix over GF(2); every row is one packed word run."""

    __slots__ = ("rows", "cols", "words")

    def __init__(self, rows: int, cols: int, words: np.ndarray):
        if rows < 1 or cols < 1:
            raise ValueError("GF2Matrix needs at least one row and column")
        if words.shape != (rows, _word_count(cols)) or words.dtype != _WORD:
            raise ValueError("packed storage does not match matrix shape")
        self.rows = rows
        self.cols = cols
        self.words = words

    @classmethod
    def from_bit_rows(cls, bits) -> "GF2Matrix":
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 2:
            raise ValueError("from_bit_rows expects a 2-D 0/1 array")
        return cls(bits.shape[0], bits.shape[1], _pack_bits(bits))

    @classmethod
    def identity(cls, n: int) -> "GF2Matrix":
        return cls.from_bit_rows(np.eye(n, dtype=np.uint8))

    def row(self, i: int) -> BitBlock:
        if not 0 <= i < self.rows:
            raise IndexError("row index out of range")
        return BitBlock(self.cols, self.words[i].copy())

    def to_bits(self) -> np.ndarray:
        return _unpack_words(self.words, self.cols)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GF2Matrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and bool(np.array_equal(self.words, other.words))
        )

    def __repr__(self) -> str:
        return f"GF2Matrix({self.rows}x{self.cols})"


class SolveStatus(enum.Enum):
    UNIQUE = "unique"
    NON_UNIQUE = "non-unique"
    INCONSISTENT = "inconsistent"


def kron_power(n: int) -> GF2Matrix:
    """Materialize the n-fold Kronecker power of [[1,0],[1,1]].

    Capped at n <= 14; larger transforms are applied through :func:`encode`
    without ever forming the matrix.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > KRON_CAP:
        raise ValueError(f"kron_power materialization is capped at n={KRON_CAP}")
    words = np.array([[1]], dtype=_WORD)
    size = 1
    for _ in range(n):
        if size < 64:
            # both halves of the doubled rows still fit in one word
            top = words
            bottom = words | (words << _WORD(size))
            words = np.vstack([top, bottom])
        else:
            zero = np.zeros_like(words)
            words = np.vstack([np.hstack([words, zero]), np.hstack([words, words])])
        size *= 2
    return GF2Matrix(size, size, np.ascontiguousarray(words))


def _butterfly_mask(step: int) -> np.uint64:
    # ones at bit positions p with (p & step) == 0, i.e. lower half of each pair
    block = (1 << step) - 1
    mask = 0
    for shift in range(0, 64, 2 * step):
        mask |= block << shift
    return _WORD(mask)


_SUBWORD_MASKS = {s: _butterfly_mask(s) for s in (1, 2, 4, 8, 16, 32)}


def encode(info_placed: BitBlock) -> BitBlock:
    """Multiply by the Kronecker-power generator via in-place butterflies.

    ``info_placed`` is the full length-N input word (information bits already
    placed, frozen positions zero). Runs in O(N log N) word operations and is
    bit-exact equal to the naive vector-matrix product.
    """
    n_bits = info_placed.length
    if n_bits & (n_bits - 1):
        raise ValueError("encode requires a power-of-two length")
    w = info_placed.words.copy()
    step = 1
    while step < n_bits and step < 64:
        mask = _SUBWORD_MASKS[step]
        w ^= (w >> _WORD(step)) & mask
        step <<= 1
    while step < n_bits:
        half = step // 64
        v = w.reshape(-1, 2 * half)
        v[:, :half] ^= v[:, half:]
        step <<= 1
    return BitBlock(n_bits, w)


def row_weight(i: int, n: int) -> int:
    """Hamming weight of row ``i`` of the 2^n transform, without the row.

    The weight is 2 raised to the popcount of the row index.
    """
    if n < 0 or not 0 <= i < (1 << n):
        raise ValueError(f"row index {i} out of range for n={n}")
    return 1 << int(i).bit_count()


@njit(cache=True)
def _rank_kernel(words, ncols):  # pragma: no cover - exercised via rank()
    rows = words.shape[0]
    nwords = words.shape[1]
    piv = 0
    for col in range(ncols):
        w = col >> 6
        mask = np.uint64(1) << np.uint64(col & 63)
        src = -1
        for r in range(piv, rows):
            if words[r, w] & mask:
                src = r
                break
        if src < 0:
            continue
        if src != piv:
            for t in range(nwords):
                tmp = words[piv, t]
                words[piv, t] = words[src, t]
                words[src, t] = tmp
        for r in range(piv + 1, rows):
            if words[r, w] & mask:
                for t in range(nwords):
                    words[r, t] ^= words[piv, t]
        piv += 1
        if piv == rows:
            break
    return piv


@njit(cache=True)
def _solve_kernel(aug, bvec, nrows, ncols):  # pragma: no cover
    """Eliminate over the first ``ncols`` columns of the identity-augmented
    system and reduce ``bvec`` alongside. Returns the pivot count; on exit the
    first ``ncols`` bits of ``bvec`` are the residual and the following
    ``nrows`` bits hold the accumulated combination.
    """
    nwords = aug.shape[1]
    piv = 0
    for col in range(ncols):
        w = col >> 6
        mask = np.uint64(1) << np.uint64(col & 63)
        src = -1
        for r in range(piv, nrows):
            if aug[r, w] & mask:
                src = r
                break
        if src < 0:
            continue
        if src != piv:
            for t in range(nwords):
                tmp = aug[piv, t]
                aug[piv, t] = aug[src, t]
                aug[src, t] = tmp
        for r in range(nrows):
            if r != piv and (aug[r, w] & mask):
                for t in range(nwords):
                    aug[r, t] ^= aug[piv, t]
        if bvec[w] & mask:
            for t in range(nwords):
                bvec[t] ^= aug[piv, t]
        piv += 1
        if piv == nrows:
            break
    return piv


def rank(m: GF2Matrix) -> int:
    """GF(2) rank by word-parallel elimination; the input is not modified."""
    return int(_rank_kernel(m.words.copy(), m.cols))


def solve_unique(a: GF2Matrix, b: BitBlock) -> tuple[SolveStatus, BitBlock | None]:
    """Solve ``x . a = b`` for the coefficient vector x over the rows of a.

    Returns ``(UNIQUE, x)`` when a has full row rank and b lies in its row
    space, ``(NON_UNIQUE, None)`` when the system is consistent but a free
    combination exists, and ``(INCONSISTENT, None)`` otherwise.
    """
    if a.cols != b.length:
        raise ValueError("dimension mismatch between matrix columns and vector")
    total = a.cols + a.rows
    nwords = _word_count(total)
    aug = np.zeros((a.rows, nwords), dtype=_WORD)
    aug[:, : a.words.shape[1]] = a.words
    for r in range(a.rows):
        pos = a.cols + r
        aug[r, pos >> 6] |= _WORD(1) << _WORD(pos & 63)
    bvec = np.zeros(nwords, dtype=_WORD)
    bvec[: b.words.shape[0]] = b.words
    npiv = int(_solve_kernel(aug, bvec, a.rows, a.cols))
    residual = _unpack_words(bvec, a.cols)
    if residual.any():
        return SolveStatus.INCONSISTENT, None
    if npiv < a.rows:
        return SolveStatus.NON_UNIQUE, None
    x_bits = _unpack_words(bvec, total)[a.cols :]
    return SolveStatus.UNIQUE, BitBlock.from_bits(x_bits)
