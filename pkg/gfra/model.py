"""
This module provides the uplink signal model: the orthonormal pilot book,
channel and noise draws, UE frame construction and synthesis of the signals
received at the base station.

With power control every UE is received at unit power, so a UE is described
by its small-scale channel vector ``g_k`` (length ``M``) and its message
``v_k`` (length ``N_m``, reference symbol first).
"""

import dataclasses
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import hadamard

from .codec import Codec, build_message, get_codec
from .config import SystemConfig
from .exceptions import ConfigError
from .typing import Bits, Selection

__all__ = [
    'SystemConfig',
    'PilotBook',
    'ChannelState',
    'UplinkFrame',
    'NoiseDraw',
    'ReceivedBlock',
    'EXAMPLE_SELECTIONS',
    'build_frames',
    'draw_channels',
    'draw_noise',
    'synthesize',
]

EXAMPLE_SELECTIONS = ((1, 1), (1, 3), (2, 1), (3, 3), (3, 3))
"""
Sub-pilot selections of the five-UE example graph (``L = 2``,
``tau_p = 3``): peeling recovers UEs 3, 1 and 2 in that order while UEs 4
and 5 share both pilots and stay unresolved.
"""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclasses.dataclass(frozen=True, eq=False)
class PilotBook:
    """
    ``tau_p`` mutually orthogonal unit-norm real pilots, the columns of
    ``S``. The identity book is the default; the normalized Hadamard book
    spreads every pilot over all symbols.
    """

    S: np.ndarray

    @property
    def tau_p(self) -> int:
        return self.S.shape[1]

    def column(self, t: int) -> np.ndarray:
        """Pilot ``t``, 1-based."""
        return self.S[:, t - 1]

    @classmethod
    def create(cls, tau_p: int, kind: str = 'identity') -> 'PilotBook':
        if kind == 'identity':
            return cls(_frozen(np.eye(tau_p)))
        if kind == 'hadamard':
            if tau_p & (tau_p - 1):
                raise ConfigError('hadamard pilots need tau_p to be a power '
                                  'of 2')
            return cls(_frozen(hadamard(tau_p) / np.sqrt(tau_p)))
        raise ConfigError(f'unknown pilot book {kind!r}')

    @classmethod
    def for_config(cls, cfg: SystemConfig) -> 'PilotBook':
        return cls.create(cfg.tau_p, cfg.pilot_book)


@dataclasses.dataclass(frozen=True, eq=False)
class ChannelState:
    """
    Small-scale channels, column ``k`` of ``G`` belongs to UE ``k``. Power
    control makes ``rho_k * beta_k = 1`` for every UE, so the received gain
    is the channel itself.
    """

    G: np.ndarray

    @property
    def m(self) -> int:
        return self.G.shape[0]

    @property
    def na(self) -> int:
        return self.G.shape[1]


def draw_channels(cfg: SystemConfig, rng: np.random.Generator,
                  na: Optional[int] = None) -> ChannelState:
    """I.i.d. standard normal ``M x Na`` channel matrix."""
    na = cfg.na if na is None else na
    return ChannelState(_frozen(rng.standard_normal((cfg.m, na))))


@dataclasses.dataclass(frozen=True, eq=False)
class UplinkFrame:
    """
    One active UE's transmission: its 1-based sub-pilot index per phase, its
    information bits and its ``±1`` message ``v`` (``v[0]`` is the reference
    symbol, always ``+1``).
    """

    subpilot_idx: Selection
    info_bits: Bits
    v: np.ndarray


def build_frames(cfg: SystemConfig,
                 rng: np.random.Generator,
                 codec: Optional[Codec] = None,
                 selections: Optional[Sequence[Selection]] = None
                 ) -> List[UplinkFrame]:
    """
    Draw ``cfg.na`` frames: sub-pilot indices uniform on ``1..tau_p``,
    independently per phase, and uniform payload bits. ``selections``
    forces the sub-pilot indices instead (payloads stay random).
    """
    codec = codec or get_codec(cfg)
    if selections is None:
        picks = rng.integers(1, cfg.tau_p + 1, size=(cfg.na, cfg.l))
        selections = [tuple(int(t) for t in row) for row in picks]
    else:
        selections = [tuple(int(t) for t in s) for s in selections]
        if len(selections) != cfg.na:
            raise ConfigError(f'{len(selections)} selections for '
                              f'na={cfg.na}')
        for s in selections:
            if len(s) != cfg.l or not all(1 <= t <= cfg.tau_p for t in s):
                raise ConfigError(f'selection {s} does not fit l={cfg.l}, '
                                  f'tau_p={cfg.tau_p}')

    frames = []
    for sel in selections:
        bits = rng.integers(0, 2, size=cfg.n_info).astype(np.uint8)
        bits.setflags(write=False)
        frames.append(UplinkFrame(sel, bits, _frozen(build_message(bits,
                                                                   codec))))
    return frames


@dataclasses.dataclass(frozen=True, eq=False)
class NoiseDraw:
    """Receiver noise of one slot: ``Zp`` per phase and ``Zm``."""

    Zp: List[np.ndarray]
    Zm: np.ndarray


def draw_noise(cfg: SystemConfig, rng: np.random.Generator) -> NoiseDraw:
    """I.i.d. ``N(0, noise_var)`` noise for every received sample."""
    sd = np.sqrt(cfg.noise_var)
    zp = [_frozen(sd * rng.standard_normal((cfg.m, cfg.tau_p)))
          for _ in range(cfg.l)]
    return NoiseDraw(zp, _frozen(sd * rng.standard_normal((cfg.m, cfg.n_m))))


@dataclasses.dataclass(frozen=True, eq=False)
class ReceivedBlock:
    """
    What the base station observes in one slot: ``Yp[l]`` (``M x tau_p``)
    for each sub-pilot phase and the superimposed messages ``Ym``
    (``M x N_m``).
    """

    Yp: List[np.ndarray]
    Ym: np.ndarray
    noise_var: float


def synthesize(cfg: SystemConfig,
               frames: Sequence[UplinkFrame],
               G,
               rng: Optional[np.random.Generator] = None,
               book: Optional[PilotBook] = None,
               noise: Optional[NoiseDraw] = None) -> ReceivedBlock:
    """
    Superimpose every UE's pilots and message through its channel and add
    noise: ``Yp[l] = sum_k g_k S_{t(k,l)}^T + Zp[l]`` and
    ``Ym = sum_k g_k v_k^T + Zm``.

    ``G`` is a `ChannelState` or an ``M x Na`` array. Noise comes from
    ``noise`` when given, otherwise it is drawn from ``rng``. Raises
    `ConfigError` when the dimensions disagree with ``cfg``.
    """
    G = G.G if isinstance(G, ChannelState) else np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != cfg.m or G.shape[1] != len(frames):
        raise ConfigError(f'channel matrix of shape {G.shape} for m={cfg.m} '
                          f'and {len(frames)} frames')
    book = book or PilotBook.for_config(cfg)
    if book.tau_p != cfg.tau_p:
        raise ConfigError(f'pilot book has {book.tau_p} pilots, '
                          f'tau_p={cfg.tau_p}')
    for f in frames:
        if len(f.subpilot_idx) != cfg.l or f.v.shape != (cfg.n_m,):
            raise ConfigError('frame does not match the configuration')
    if noise is None:
        if rng is None:
            raise ConfigError('synthesize needs rng or noise')
        noise = draw_noise(cfg, rng)

    yp = []
    for l in range(cfg.l):  # noqa: E741
        # row k of P is the pilot sent by UE k in this phase
        P = np.stack([book.column(f.subpilot_idx[l]) for f in frames]) \
            if frames else np.zeros((0, cfg.tau_p))
        yp.append(_frozen(G @ P + noise.Zp[l]))
    V = np.stack([f.v for f in frames]) if frames \
        else np.zeros((0, cfg.n_m))
    ym = _frozen(G @ V + noise.Zm)
    return ReceivedBlock(yp, ym, cfg.noise_var)
