"""Adaptive arithmetic coding of nonnegative-integer symbol streams.

Each stream is coded independently with a fresh order-0 model: every
symbol starts with count 1, counts grow by 1 per coded symbol, and all
counts are halved (rounding up) once their total exceeds the model limit
(``2**16``, or twice the alphabet size for near-maximal alphabets).  The
coder itself is an integer 32-bit range coder with carry handling, so the
output bytes are a pure, platform-independent function of the symbol
sequence and the alphabet bound.

Alphabets wider than ``2**16`` are coded as a fixed number of 16-bit
sub-symbols (most significant group first), each with its own adaptive
model; this keeps model state bounded while admitting very wide symbol
ranges (quantized coefficient levels grow like ``1/delta``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SymbolStream", "EntropyDecodeError", "arith_encode", "arith_decode"]

_TOP = 1 << 24
_MASK32 = 0xFFFFFFFF
_MODEL_LIMIT = 1 << 16   # halve counts when the total exceeds this
_GROUP = 1 << 16         # sub-symbol width for wide alphabets
_MAX_BOUND = 1 << 63     # symbols live in int64


class EntropyDecodeError(ValueError):
    """Range-coder state violation or truncated input."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass
class SymbolStream:
    symbols: np.ndarray
    alphabet_bound: int


class _AdaptiveModel:
    """Fenwick-tree frequency model with Laplace (all-ones) initialization."""

    def __init__(self, size: int):
        self.size = size
        self.counts = [1] * size
        self.total = size
        # the halving threshold needs headroom above the flat prior, or a
        # maximal alphabet would rebuild the tree on every single symbol
        self.limit = max(_MODEL_LIMIT, 2 * size)
        self._build()

    def _build(self):
        tree = [0] * (self.size + 1)
        for i, c in enumerate(self.counts):
            tree[i + 1] += c
            parent = (i + 1) + ((i + 1) & -(i + 1))
            if parent <= self.size:
                tree[parent] += tree[i + 1]
        self.tree = tree
        self._topbit = 1 << (self.size.bit_length() - 1)

    def cum_below(self, symbol: int) -> int:
        s = 0
        i = symbol
        tree = self.tree
        while i > 0:
            s += tree[i]
            i -= i & -i
        return s

    def find(self, target: int) -> tuple[int, int]:
        """Return ``(symbol, cum_below)`` with ``cum <= target < cum + count``."""
        idx = 0
        rem = target
        bit = self._topbit
        tree = self.tree
        size = self.size
        while bit:
            nxt = idx + bit
            if nxt <= size and tree[nxt] <= rem:
                idx = nxt
                rem -= tree[nxt]
            bit >>= 1
        return idx, target - rem

    def update(self, symbol: int):
        self.counts[symbol] += 1
        self.total += 1
        i = symbol + 1
        tree = self.tree
        size = self.size
        while i <= size:
            tree[i] += 1
            i += i & -i
        if self.total > self.limit:
            self.counts = [(c + 1) >> 1 for c in self.counts]
            self.total = sum(self.counts)
            self._build()


class _RangeEncoder:
    def __init__(self):
        self.low = 0
        self.range = _MASK32
        self.cache = 0
        self.cache_size = 1
        self.out = bytearray()

    def encode(self, start: int, size: int, total: int):
        r = self.range // total
        self.low += r * start
        self.range = r * size
        while self.range < _TOP:
            self.range <<= 8
            self._shift_low()

    def _shift_low(self):
        if self.low < 0xFF000000 or self.low > _MASK32:
            carry = self.low >> 32
            self.out.append((self.cache + carry) & 0xFF)
            for _ in range(self.cache_size - 1):
                self.out.append((0xFF + carry) & 0xFF)
            self.cache_size = 0
            self.cache = (self.low >> 24) & 0xFF
        self.cache_size += 1
        self.low = (self.low << 8) & _MASK32

    def finish(self) -> bytes:
        for _ in range(5):
            self._shift_low()
        return bytes(self.out)


class _RangeDecoder:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.range = _MASK32
        self.code = 0
        self._byte()   # leading byte primed by the encoder cache, always 0
        for _ in range(4):
            self.code = (self.code << 8) | self._byte()

    def _byte(self) -> int:
        if self.pos >= len(self.data):
            raise EntropyDecodeError("input exhausted", offset=self.pos)
        b = self.data[self.pos]
        self.pos += 1
        return b

    def decode_target(self, total: int) -> int:
        self._r = self.range // total
        value = self.code // self._r
        if value >= total:
            raise EntropyDecodeError("corrupt range-coder state", offset=self.pos)
        return value

    def consume(self, start: int, size: int):
        self.code -= start * self._r
        self.range = size * self._r
        while self.range < _TOP:
            self.code = ((self.code << 8) | self._byte()) & _MASK32
            self.range <<= 8


def _validate(symbols: np.ndarray, alphabet_bound: int):
    if alphabet_bound < 1:
        raise ValueError("alphabet_bound must be >= 1")
    if alphabet_bound > _MAX_BOUND:
        raise ValueError("alphabet_bound exceeds the supported symbol range")
    if symbols.size >= 1 << 32:
        raise ValueError("stream too long")
    if symbols.size:
        lo, hi = int(symbols.min()), int(symbols.max())
        if lo < 0:
            raise ValueError("negative symbol")
        if hi >= alphabet_bound:
            raise ValueError(f"symbol {hi} >= alphabet_bound {alphabet_bound}")


def _group_models(bound: int) -> list[_AdaptiveModel]:
    """One model per 16-bit sub-symbol, most significant group first."""
    if bound <= _GROUP:
        return [_AdaptiveModel(bound)]
    groups = ((bound - 1).bit_length() + 15) // 16
    top = ((bound - 1) >> (16 * (groups - 1))) + 1
    return [_AdaptiveModel(top)] + [
        _AdaptiveModel(_GROUP) for _ in range(groups - 1)
    ]


def arith_encode(stream: SymbolStream) -> bytes:
    """Encode ``stream`` to a self-terminating byte sequence."""
    symbols = np.asarray(stream.symbols, dtype=np.int64).reshape(-1)
    bound = int(stream.alphabet_bound)
    _validate(symbols, bound)
    enc = _RangeEncoder()
    models = _group_models(bound)
    if len(models) == 1:
        model = models[0]
        for s in symbols.tolist():
            enc.encode(model.cum_below(s), model.counts[s], model.total)
            model.update(s)
    else:
        shifts = [16 * (len(models) - 1 - i) for i in range(len(models))]
        for s in symbols.tolist():
            for model, shift in zip(models, shifts):
                part = (s >> shift) & 0xFFFF
                enc.encode(model.cum_below(part), model.counts[part], model.total)
                model.update(part)
    return enc.finish()


def arith_decode(data: bytes, length: int, alphabet_bound: int) -> SymbolStream:
    """Exact inverse of :func:`arith_encode` for ``length`` symbols."""
    bound = int(alphabet_bound)
    if bound < 1:
        raise ValueError("alphabet_bound must be >= 1")
    if length < 0:
        raise ValueError("negative length")
    if length == 0:
        return SymbolStream(np.empty(0, dtype=np.int64), bound)
    dec = _RangeDecoder(data)
    models = _group_models(bound)
    out = np.empty(length, dtype=np.int64)
    if len(models) == 1:
        model = models[0]
        for i in range(length):
            s, cum = model.find(dec.decode_target(model.total))
            dec.consume(cum, model.counts[s])
            model.update(s)
            out[i] = s
    else:
        for i in range(length):
            s = 0
            for model in models:
                part, cum = model.find(dec.decode_target(model.total))
                dec.consume(cum, model.counts[part])
                model.update(part)
                s = (s << 16) | part
            if s >= bound:
                raise EntropyDecodeError("decoded symbol out of range", dec.pos)
            out[i] = s
    return SymbolStream(out, bound)
