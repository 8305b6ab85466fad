"""
This module provides `SystemConfig`, the scheme and simulation parameters,
and `SweepSpec`, a Monte Carlo sweep description, together with loading them
from TOML or JSON files.

Field names are the lower snake_case spellings of the scheme's symbols, for
example:

```toml
m = 400
na = 20
tau_p = 10
l = 2
code_rate = "1/2"
```
"""

import dataclasses
import itertools
import math
import os
from fractions import Fraction
from typing import (Any, Dict, Iterator, Mapping, Optional, Sequence, Tuple,
                    Union)

try:
    import ujson as json
except ImportError:
    import json

try:
    import tomllib
except ImportError:
    import tomli as tomllib

from .exceptions import ConfigError

__all__ = [
    'SystemConfig',
    'SweepSpec',
    'load_mapping',
    'GRID_KEYS',
    'BASELINE_NAMES',
]

GRID_KEYS = ('na', 'm', 'snr_db', 'n_i', 'tau_p', 'l')
"""Keys a sweep grid may range over, in output column order."""

BASELINE_NAMES = ('traditional', 'multipreamble_approx')
"""Comparison schemes a sweep may include."""

_PILOT_BOOKS = ('identity', 'hadamard')
_PEEL_RULES = ('weight', 'degree')


def _as_rate(value: Union[str, float, int, Fraction]) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f'code_rate: cannot parse {value!r}')


def load_mapping(path: Union[str, os.PathLike]) -> Dict[str, Any]:
    """
    Read a ``.toml`` or ``.json`` file into a dictionary.
    """
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    try:
        if ext == '.toml':
            with open(path, 'rb') as f:
                return tomllib.load(f)
        if ext == '.json':
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
            if not isinstance(data, dict):
                raise ConfigError(f'{path}: top level must be an object')
            return data
    except OSError as e:
        raise ConfigError(f'{path}: {e}') from e
    except (tomllib.TOMLDecodeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f'{path}: {e}') from e
    raise ConfigError(f'{path}: unsupported config format {ext!r}')


@dataclasses.dataclass(frozen=True)
class SystemConfig:
    """
    All parameters of one simulated operating point. Instances are immutable
    and validated on construction; an invalid field raises `ConfigError`.
    Defaults follow the simulation-parameter table of the scheme.
    """

    m: int = 400
    na: int = 20
    tau_p: int = 10
    l: int = 2  # noqa: E741
    n_i: int = 20
    snr_db: float = 10.0
    n_pd: int = 2048
    code_rate: Fraction = Fraction(1, 2)
    sic_max_iters: int = 1000
    degree_tol: float = 0.3
    dup_threshold: float = 0.5
    valid_threshold: float = 0.3
    de_iters: int = 1000
    seed: int = 0

    codec: str = 'default-ldpc'
    pilot_book: str = 'identity'
    detect_threshold: float = 0.5
    count_phase: int = 0
    ica_max_iter: int = 200
    ica_tol: float = 1e-6
    bf_max_iters: int = 50
    residual_refit: bool = True
    peel_rule: str = 'weight'

    def __post_init__(self):
        object.__setattr__(self, 'code_rate', _as_rate(self.code_rate))
        object.__setattr__(self, 'snr_db', float(self.snr_db))
        for name in ('m', 'na', 'tau_p', 'l', 'n_i', 'n_pd', 'sic_max_iters',
                     'de_iters', 'ica_max_iter', 'bf_max_iters'):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f'{name}: expected an integer, '
                                  f'got {value!r}')
            if value < 1:
                raise ConfigError(f'{name}: must be >= 1, got {value}')
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ConfigError('snr_db: must be a number or +inf')
        if not 0 < self.code_rate <= 1:
            raise ConfigError(f'code_rate: must lie in (0, 1], '
                              f'got {self.code_rate}')
        if self.n_info < 1:
            raise ConfigError('n_pd * code_rate: no information bits left')
        if not self.degree_tol > 0:
            raise ConfigError('degree_tol: must be > 0')
        if not self.ica_tol > 0:
            raise ConfigError('ica_tol: must be > 0')
        for name in ('dup_threshold', 'valid_threshold', 'detect_threshold'):
            if not 0 < getattr(self, name) < 1:
                raise ConfigError(f'{name}: must lie in (0, 1)')
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) \
                or not 0 <= self.seed < 2**64:
            raise ConfigError('seed: must be an unsigned 64-bit integer')
        if self.pilot_book not in _PILOT_BOOKS:
            raise ConfigError(f'pilot_book: one of {_PILOT_BOOKS}, '
                              f'got {self.pilot_book!r}')
        if self.pilot_book == 'hadamard' and self.tau_p & (self.tau_p - 1):
            raise ConfigError('pilot_book: hadamard needs tau_p to be '
                              'a power of 2')
        if not 0 <= self.count_phase <= self.l:
            raise ConfigError(f'count_phase: must lie in [0, {self.l}]')
        if not isinstance(self.residual_refit, bool):
            raise ConfigError('residual_refit: expected true or false')
        if self.peel_rule not in _PEEL_RULES:
            raise ConfigError(f'peel_rule: one of {_PEEL_RULES}, '
                              f'got {self.peel_rule!r}')

    @property
    def n_m(self) -> int:
        """Message length: one reference symbol plus the coded payload."""
        return self.n_pd + 1

    @property
    def n_info(self) -> int:
        """Information bits per UE, ``round(n_pd * code_rate)``."""
        return round(self.n_pd * self.code_rate)

    @property
    def noise_var(self) -> float:
        """
        Receiver noise variance, ``10 ** (-snr_db / 10)``; ``snr_db = inf``
        gives a noise-free receiver.
        """
        return 10.0**(-self.snr_db / 10.0)

    @property
    def overhead(self) -> int:
        """Pilot symbols plus the reference symbol, ``tau_p * l + 1``."""
        return self.tau_p * self.l + 1

    def replace(self, **changes) -> 'SystemConfig':
        """Return a copy with ``changes`` applied (and validated)."""
        _check_keys(changes)
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> Dict[str, Any]:
        """Plain dictionary; ``code_rate`` is rendered as ``"p/q"``."""
        d = dataclasses.asdict(self)
        d['code_rate'] = str(self.code_rate)
        return d

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> 'SystemConfig':
        """Build from a mapping whose keys are field names."""
        _check_keys(data)
        return cls(**dict(data))

    @classmethod
    def load(cls, path: Union[str, os.PathLike]) -> 'SystemConfig':
        """Load from a ``.toml`` or ``.json`` file."""
        return cls.from_mapping(load_mapping(path))


_FIELDS = frozenset(f.name for f in dataclasses.fields(SystemConfig))


def _check_keys(data: Mapping[str, Any]) -> None:
    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise ConfigError(f'unknown configuration keys: {", ".join(unknown)}')


@dataclasses.dataclass(frozen=True)
class SweepSpec:
    """
    A grid of operating points with the number of trials to run at each.

    ``grid`` maps keys of `GRID_KEYS` to nonempty value lists; the special
    key ``pilot_layout`` holds ``[tau_p, l]`` pairs that vary together. Keys
    not in the grid keep their ``base`` value.
    """

    base: SystemConfig = dataclasses.field(default_factory=SystemConfig)
    grid: Tuple[Tuple[str, Tuple[Any, ...]], ...] = ()
    trials: int = 100
    baselines: Tuple[str, ...] = ()
    analysis: bool = False
    out: Optional[str] = None

    def __post_init__(self):
        grid = self.grid.items() if isinstance(self.grid, Mapping) \
            else self.grid
        normalized = []
        for key, values in grid:
            if key not in GRID_KEYS and key != 'pilot_layout':
                raise ConfigError(f'grid: unknown key {key!r}')
            if isinstance(values, (str, bytes)) or \
                    not isinstance(values, Sequence):
                values = [values]
            if not values:
                raise ConfigError(f'grid: {key} has no values')
            if key == 'pilot_layout':
                pairs = []
                for pair in values:
                    if not isinstance(pair, Sequence) or len(pair) != 2:
                        raise ConfigError('grid: pilot_layout entries '
                                          'are [tau_p, l] pairs')
                    pairs.append((int(pair[0]), int(pair[1])))
                values = pairs
            normalized.append((key, tuple(values)))
        keys = [k for k, _ in normalized]
        if 'pilot_layout' in keys and ('tau_p' in keys or 'l' in keys):
            raise ConfigError('grid: pilot_layout excludes tau_p and l')
        order = {k: i for i, k in enumerate(GRID_KEYS + ('pilot_layout',))}
        normalized.sort(key=lambda kv: order[kv[0]])
        object.__setattr__(self, 'grid', tuple(normalized))
        object.__setattr__(self, 'baselines', tuple(self.baselines))

        if isinstance(self.trials, bool) or not isinstance(self.trials, int) \
                or self.trials < 1:
            raise ConfigError('trials: must be an integer >= 1')
        for name in self.baselines:
            if name not in BASELINE_NAMES:
                raise ConfigError(f'baselines: unknown scheme {name!r}')

    def points(self) -> Iterator[SystemConfig]:
        """Configurations of every grid point, in row-major grid order."""
        keys = [k for k, _ in self.grid]
        for combo in itertools.product(*(v for _, v in self.grid)):
            changes = {}
            for key, value in zip(keys, combo):
                if key == 'pilot_layout':
                    changes['tau_p'], changes['l'] = value
                else:
                    changes[key] = value
            yield self.base.replace(**changes)

    def as_dict(self) -> Dict[str, Any]:
        return {
            'base': self.base.as_dict(),
            'grid': {k: [list(v) if isinstance(v, tuple) else v
                         for v in vs] for k, vs in self.grid},
            'trials': self.trials,
            'baselines': list(self.baselines),
            'analysis': self.analysis,
        }

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> 'SweepSpec':
        allowed = {'base', 'grid', 'trials', 'baselines', 'analysis', 'out'}
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ConfigError(f'unknown sweep keys: {", ".join(unknown)}')
        base = SystemConfig.from_mapping(data.get('base', {}))
        return cls(base=base,
                   grid=dict(data.get('grid', {})),
                   trials=data.get('trials', 100),
                   baselines=tuple(data.get('baselines', ())),
                   analysis=bool(data.get('analysis', False)),
                   out=data.get('out'))

    @classmethod
    def load(cls, path: Union[str, os.PathLike]) -> 'SweepSpec':
        return cls.from_mapping(load_mapping(path))

    @classmethod
    def single(cls, cfg: SystemConfig, trials: int,
               baselines: Sequence[str] = (),
               analysis: bool = False,
               out: Optional[str] = None) -> 'SweepSpec':
        """A one-point sweep at ``cfg``."""
        return cls(base=cfg, trials=trials, baselines=tuple(baselines),
                   analysis=analysis, out=out)
