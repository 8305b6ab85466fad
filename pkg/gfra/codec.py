"""
This module provides the channel codes and the BPSK map used for uplink
messages: the abstract `Codec`, the default rate-1/2 LDPC code with
hard-decision bit-flipping decoding, an uncoded pass-through, and the codec
registry consulted through `SystemConfig.codec`.
"""

import abc
from fractions import Fraction
from typing import Callable, Dict, Tuple

import numpy as np
from scipy import sparse

from .config import SystemConfig
from .exceptions import CodecNotAvailable, ConfigError, UsageError
from .typing import Bits

__all__ = [
    'Codec',
    'LdpcCodec',
    'UncodedCodec',
    'modulate',
    'demodulate',
    'build_message',
    'register_codec',
    'get_codec',
]


def modulate(bits) -> np.ndarray:
    """BPSK map, bit ``b`` to ``2b - 1``."""
    return 2.0 * np.asarray(bits, dtype=np.float64) - 1.0


def demodulate(symbols) -> Bits:
    """Hard decision at zero: positive symbols become 1, the rest 0."""
    return (np.asarray(symbols, dtype=np.float64) > 0).astype(np.uint8)


class Codec(abc.ABC):
    """
    A systematic binary block code. Subclasses define `Codec.encode` and
    `Codec.correct`; decoding from channel symbols is built on them.
    """

    name: str = ''

    @property
    @abc.abstractmethod
    def rate(self) -> Fraction:
        """Information bits per coded bit."""
        pass

    @property
    @abc.abstractmethod
    def info_len(self) -> int:
        """Information bits per block."""
        pass

    @property
    def block_len(self) -> int:
        """Coded bits per block."""
        return int(self.info_len / self.rate)

    @abc.abstractmethod
    def encode(self, bits) -> Bits:
        """
        Encode ``bits``, whose length must be a multiple of `Codec.info_len`.
        The output is ``len(bits) / rate`` bits long; `UsageError` is raised
        on a bad length.
        """
        pass

    @abc.abstractmethod
    def correct(self, bits) -> Bits:
        """
        Hard-decision decoding of received code bits: return the corrected
        code words, concatenated. Deterministic, best effort.
        """
        pass

    def _blocks(self, values, size: int) -> np.ndarray:
        values = np.asarray(values).reshape(-1)
        if values.size == 0 or values.size % size:
            raise UsageError(f'{self.name}: length {values.size} is not a '
                             f'positive multiple of {size}')
        return values.reshape(-1, size)

    def decode(self, symbols) -> Bits:
        """
        Decode channel symbols (soft values or signs) to information bits.
        """
        words = self._blocks(demodulate(symbols), self.block_len)
        fixed = self.correct(words.reshape(-1)).reshape(words.shape)
        return fixed[:, :self.info_len].reshape(-1)

    def __repr__(self):
        return (f'<{self.__class__.__name__}, name={self.name!r}, '
                f'rate={self.rate}, block_len={self.block_len}>')


def build_message(bits, codec: Codec) -> np.ndarray:
    """
    The transmitted ``±1`` message of ``bits``: the reference symbol ``+1``
    followed by the modulated code word.
    """
    return np.concatenate(([1.0], modulate(codec.encode(bits))))


def _pick_offsets(m: int) -> Tuple[int, int]:
    # all six cyclic differences distinct and none equal to +-1: any two
    # columns of H then share at most one check
    for a in range(2, m):
        for b in range(a + 1, m):
            diffs = {a, b, b - a, m - a, m - b, m - b + a}
            if len(diffs) == 6 and not diffs & {1, m - 1}:
                return a, b
    raise UsageError(f'no girth-6 column offsets for {m} checks')


class LdpcCodec(Codec):
    """
    Rate-1/2 systematic LDPC code of length ``block_len``.

    The parity-check matrix is ``H = [Hu | Hp]`` with ``m = block_len / 2``
    checks. Information column ``j`` of ``Hu`` checks rows ``j``, ``j + a``
    and ``j + b`` (mod ``m``); ``Hp`` is dual diagonal, so the parity bits are
    the running XOR of the ``Hu`` syndrome. The graph has no 4-cycles, which
    lets the bit-flipping decoder correct any single error per block.
    """

    name = 'default-ldpc'

    def __init__(self, block_len: int, max_iters: int = 50):
        if block_len % 2 or block_len < 18:
            raise UsageError(f'{self.name}: block length must be even and '
                             f'at least 18, got {block_len}')
        self._n = block_len
        self._m = block_len // 2
        self._max_iters = max_iters
        self.offsets = _pick_offsets(self._m)

        m = self._m
        a, b = self.offsets
        j = np.arange(m)
        hu_rows = np.concatenate([j, (j + a) % m, (j + b) % m])
        hu_cols = np.tile(j, 3)
        hp_rows = np.concatenate([j, j[:-1] + 1])
        hp_cols = np.concatenate([j, j[:-1]]) + m
        rows = np.concatenate([hu_rows, hp_rows])
        cols = np.concatenate([hu_cols, hp_cols])
        data = np.ones(rows.size, dtype=np.int64)
        self.H = sparse.csr_matrix((data, (rows, cols)), shape=(m, 2 * m))
        self._hu = self.H[:, :m]
        self._ht = self.H.T.tocsr()
        self._col_weight = np.asarray(self.H.sum(axis=0)).reshape(-1)

    @property
    def rate(self) -> Fraction:
        return Fraction(1, 2)

    @property
    def info_len(self) -> int:
        return self._m

    @property
    def block_len(self) -> int:
        return self._n

    def encode(self, bits) -> Bits:
        u = self._blocks(bits, self._m).astype(np.int64)
        s = (self._hu @ u.T) % 2
        p = np.cumsum(s, axis=0) % 2
        return np.concatenate([u, p.T], axis=1).astype(np.uint8).reshape(-1)

    def syndrome(self, words: np.ndarray) -> np.ndarray:
        """Syndromes of the code words in the rows of ``words``."""
        return np.asarray(self.H @ words.T).T % 2

    def correct(self, bits) -> Bits:
        words = self._blocks(bits, self._n).astype(np.int64)
        for _ in range(self._max_iters):
            syn = self.syndrome(words)
            bad = syn.any(axis=1)
            if not bad.any():
                break
            # unsatisfied minus satisfied checks of each bit
            score = 2 * np.asarray(self._ht @ syn.T).T - self._col_weight
            top = score.max(axis=1)
            flip = (score == top[:, None]) & ((top > 0) & bad)[:, None]
            if not flip.any():
                break
            words[flip] ^= 1
        return words.astype(np.uint8).reshape(-1)


class UncodedCodec(Codec):
    """Identity code of rate 1."""

    name = 'uncoded'

    @property
    def rate(self) -> Fraction:
        return Fraction(1)

    @property
    def info_len(self) -> int:
        return 1

    def encode(self, bits) -> Bits:
        return self._blocks(bits, 1).astype(np.uint8).reshape(-1)

    def correct(self, bits) -> Bits:
        return self._blocks(bits, 1).astype(np.uint8).reshape(-1)


_registry: Dict[str, Callable[[SystemConfig], Codec]] = {}
_built: Dict[Tuple[str, int, int], Codec] = {}


def register_codec(name: str) -> Callable:
    """
    Register a codec factory under ``name``, used as a decorator:

    ```py
    @register_codec('my-code')
    def make_my_code(cfg: SystemConfig) -> Codec:
        return MyCode(cfg.n_pd)
    ```
    """

    def deco(factory: Callable[[SystemConfig], Codec]) -> Callable:
        _registry[name] = factory
        _built.clear()
        return factory

    return deco


@register_codec(LdpcCodec.name)
def _make_ldpc(cfg: SystemConfig) -> Codec:
    return LdpcCodec(cfg.n_pd, max_iters=cfg.bf_max_iters)


@register_codec(UncodedCodec.name)
def _make_uncoded(cfg: SystemConfig) -> Codec:
    return UncodedCodec()


def get_codec(cfg: SystemConfig) -> Codec:
    """
    The codec named by ``cfg.codec``, built for a payload of ``cfg.n_pd``
    coded bits. Raises `CodecNotAvailable` for an unknown name and
    `ConfigError` when the code does not fit the configuration.
    """
    if cfg.codec not in _registry:
        raise CodecNotAvailable(cfg.codec)
    key = (cfg.codec, cfg.n_pd, cfg.bf_max_iters)
    codec = _built.get(key)
    if codec is None:
        try:
            codec = _registry[cfg.codec](cfg)
        except UsageError as e:
            raise ConfigError(f'codec {cfg.codec}: {e}') from e
        _built[key] = codec
    if codec.rate != cfg.code_rate:
        raise ConfigError(f'codec {cfg.codec} has rate {codec.rate}, '
                          f'config asks for {cfg.code_rate}')
    if cfg.n_pd % codec.block_len:
        raise ConfigError(f'codec {cfg.codec}: n_pd={cfg.n_pd} is not a '
                          f'multiple of block length {codec.block_len}')
    return codec
