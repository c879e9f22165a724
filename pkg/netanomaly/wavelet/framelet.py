"""
Framelet filter banks: one lowpass and several highpass filters forming a tight frame, so
the synthesis filters are the analysis filters themselves. Signals are mirrored at both
ends, then every level convolves the extended signal circularly and keeps every second
sample, which halves the length.
"""
import dataclasses
import logging
import math
from typing import Optional

import numpy as np

from netanomaly.errors import ConfigError, ContractError

logger = logging.getLogger(__name__)


VANISHING_TOLERANCE = 1e-12


@dataclasses.dataclass(frozen=True)
class FilterBank:
    name: str
    lowpass: np.ndarray
    highpass: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.highpass:
            raise ConfigError(f'filter bank {self.name!r} has no highpass filter')
        if abs(float(self.lowpass.sum()) - 1.0) > VANISHING_TOLERANCE:
            raise ConfigError(f'filter bank {self.name!r}: lowpass taps must sum to 1')
        for i, taps in enumerate(self.highpass):
            if abs(float(taps.sum())) > VANISHING_TOLERANCE:
                raise ConfigError(f'filter bank {self.name!r}: highpass filter {i} has no vanishing moment')

    @property
    def filters(self) -> tuple[np.ndarray, ...]:
        return (self.lowpass,) + self.highpass

    def vanishing_moments(self, i: int) -> int:
        """Number of vanishing moments of highpass filter i."""
        taps = self.highpass[i]
        n = np.arange(len(taps), dtype=float)
        scale = float(np.abs(taps).sum())
        k = 0
        while k < len(taps) and abs(float(np.sum(taps * n ** k))) <= 1e-9 * scale * max(1.0, float(n[-1])) ** k:
            k += 1
        return k


def _taps(*values: float) -> np.ndarray:
    return np.array(values, dtype=float)


_SQRT6 = math.sqrt(6.0)

# Tight spline framelets: the lowpass is a B-spline mask and the highpass filters split its
# complement binomially.
FILTER_BANKS: dict[str, FilterBank] = {
    'cubic-spline': FilterBank(
        name='cubic-spline',
        lowpass=_taps(1, 4, 6, 4, 1) / 16,
        highpass=(
            _taps(1, 2, 0, -2, -1) / 8,
            _taps(1, 0, -2, 0, 1) * _SQRT6 / 16,
            _taps(1, -2, 0, 2, -1) / 8,
            _taps(1, -4, 6, -4, 1) / 16,
        ),
    ),
    'linear-spline': FilterBank(
        name='linear-spline',
        lowpass=_taps(1, 2, 1) / 4,
        highpass=(
            _taps(1, 0, -1) * math.sqrt(2.0) / 4,
            _taps(-1, 2, -1) / 4,
        ),
    ),
}
DEFAULT_BANK = 'cubic-spline'


def get_bank(name: str) -> FilterBank:
    try:
        return FILTER_BANKS[name]
    except KeyError:
        raise ConfigError(f'unknown filter bank {name!r} (available: {", ".join(FILTER_BANKS)})') from None


@dataclasses.dataclass(frozen=True)
class BandDecomposition:
    highpass: list[list[np.ndarray]]    # level j (from 1) → one coefficient array per highpass filter
    lowpass: np.ndarray                 # approximation after the last level
    length: int
    bank_name: str
    offset: int                         # mirrored samples before x[0]
    padded_length: int                  # length after symmetric extension

    @property
    def levels(self) -> int:
        return len(self.highpass)

    def coefficient_count(self) -> int:
        return sum(c.size for level in self.highpass for c in level) + self.lowpass.size

    def map_highpass(self, keep) -> 'BandDecomposition':
        """Copy in which level j (1-based) keeps its coefficients iff keep(j, coefficients) is true."""
        return dataclasses.replace(self, highpass=[
            [c if keep(j, c) else np.zeros_like(c) for c in level]
            for j, level in enumerate(self.highpass, start=1)
        ])


def _analysis_step(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    out = np.zeros(x.size // 2)
    for n, tap in enumerate(taps):
        out += tap * np.roll(x, -n)[::2]
    return math.sqrt(2.0) * out


def _synthesis_step(y: np.ndarray, taps: np.ndarray) -> np.ndarray:
    up = np.zeros(2 * y.size)
    up[::2] = y
    out = np.zeros_like(up)
    for n, tap in enumerate(taps):
        out += tap * np.roll(up, n)
    return math.sqrt(2.0) * out


def symmetric_extension(length: int, bank: FilterBank, levels: int) -> tuple[int, int]:
    """(left, right) sample counts that mirror x into a signal whose length is a multiple of
    2^levels, with margins wide enough that no filter reaches around the ends into x."""
    block = 2 ** levels
    taps = max(len(f) for f in bank.filters)
    margin = (taps - 1) * block
    right = margin + (-(length + 2 * margin)) % block
    return margin, right


def analyze(x: np.ndarray, bank: FilterBank, levels: int) -> BandDecomposition:
    x = np.asarray(x, dtype=float)
    if levels < 1:
        raise ContractError('levels ≥ 1')
    block = 2 ** levels
    if x.ndim != 1 or x.size < block:
        raise ContractError(f'{levels} levels need a signal of at least {block} samples, got {x.size}')
    left, right = symmetric_extension(x.size, bank, levels)
    extended = np.pad(x, (left, right), mode='symmetric')
    highpass = []
    approximation = extended
    for _ in range(levels):
        highpass.append([_analysis_step(approximation, taps) for taps in bank.highpass])
        approximation = _analysis_step(approximation, bank.lowpass)
    return BandDecomposition(highpass=highpass, lowpass=approximation, length=x.size, bank_name=bank.name,
                             offset=left, padded_length=extended.size)


def synthesize(decomposition: BandDecomposition, bank: FilterBank) -> np.ndarray:
    """Invert `analyze`; the result is cropped to the original signal."""
    if decomposition.bank_name != bank.name:
        raise ContractError(f'decomposition from bank {decomposition.bank_name!r} cannot be synthesized with {bank.name!r}')
    approximation = decomposition.lowpass
    for j in range(decomposition.levels, 0, -1):
        level = decomposition.highpass[j - 1]
        expected = decomposition.padded_length // 2 ** j
        if len(level) != len(bank.highpass) or any(c.size != expected for c in level) or approximation.size != expected:
            raise ContractError(f'level {j}: coefficient shapes do not match a length-{decomposition.length} signal')
        signal = _synthesis_step(approximation, bank.lowpass)
        for coefficients, taps in zip(level, bank.highpass):
            signal += _synthesis_step(coefficients, taps)
        approximation = signal
    return approximation[decomposition.offset:decomposition.offset + decomposition.length]


def max_levels(length: int, cap: Optional[int] = None) -> int:
    levels = max(int(math.floor(math.log2(length))), 1) if length >= 2 else 0
    return min(levels, cap) if cap is not None else levels
