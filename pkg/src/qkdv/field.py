"""Real periodic fields on a uniform grid and their Fourier representation."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridMismatch, UnresolvedField

DEFAULT_DEALIAS = 2.0 / 3.0
TAIL_TOL = 1e-10


def grid(n: int, period: float) -> np.ndarray:
    return period * np.arange(n) / n


def wavenumbers(n: int, period: float) -> np.ndarray:
    """Angular wavenumbers of the rfft modes, Nyquist set to zero.

    Zeroing the Nyquist mode keeps every derivative real and makes repeated
    first derivatives agree with a single high-order one.
    """
    k = 2.0 * np.pi / period * np.arange(n // 2 + 1)
    k[-1] = 0.0
    return k


def dealias_mask(n: int, fraction: float = DEFAULT_DEALIAS) -> np.ndarray:
    """Boolean mask of the retained rfft modes, |m| <= fraction * n/2."""
    cutoff = int(np.floor(fraction * n / 2 + 1e-9))
    return np.arange(n // 2 + 1) <= cutoff


def _check_n(n: int) -> None:
    if n < 16 or n & (n - 1):
        raise ValueError(f"grid size must be a power of two >= 16, got {n}")


@dataclass(frozen=True, eq=False)
class Field:
    """Samples of a real function on ``[0, period)`` with a lazily computed spectrum.

    The values array is copied and made read-only, so a Field can be shared
    between threads.
    """

    values: np.ndarray
    period: float

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("Field values must be one-dimensional")
        _check_n(vals.size)
        if not np.all(np.isfinite(vals)):
            raise ValueError("Field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "period", float(self.period))

    @classmethod
    def from_function(cls, func, n: int, period: float) -> "Field":
        return cls(func(grid(n, period)), period)

    @classmethod
    def from_spectrum(cls, coeffs: np.ndarray, n: int, period: float) -> "Field":
        return cls(np.fft.irfft(coeffs, n), period)

    @classmethod
    def constant(cls, c: float, n: int, period: float) -> "Field":
        return cls(np.full(n, float(c)), period)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def x(self) -> np.ndarray:
        return grid(self.n, self.period)

    @cached_property
    def spectrum(self) -> np.ndarray:
        coeffs = np.fft.rfft(self.values)
        coeffs.setflags(write=False)
        return coeffs

    @property
    def k(self) -> np.ndarray:
        return wavenumbers(self.n, self.period)

    def with_values(self, values) -> "Field":
        return Field(values, self.period)

    def same_grid(self, other: "Field") -> bool:
        return self.n == other.n and np.isclose(self.period, other.period, rtol=1e-14, atol=0)

    def __add__(self, other):
        return self.with_values(self.values + _vals(other, self))

    def __sub__(self, other):
        return self.with_values(self.values - _vals(other, self))

    def __mul__(self, other):
        return self.with_values(self.values * _vals(other, self))

    __rmul__ = __mul__
    __radd__ = __add__

    def __neg__(self):
        return self.with_values(-self.values)

    def __repr__(self):
        return f"Field(n={self.n}, period={self.period:g}, range=[{self.values.min():.3g}, {self.values.max():.3g}])"


def _vals(other, ref: Field):
    if isinstance(other, Field):
        if not ref.same_grid(other):
            raise GridMismatch("fields live on different grids")
        return other.values
    return other


# -- spectral operations on plain arrays ------------------------------------
def derivative(values: np.ndarray, period: float, order: int = 1) -> np.ndarray:
    if order < 0:
        raise ValueError("derivative order must be non-negative")
    if order == 0:
        return np.asarray(values, dtype=float)
    n = len(values)
    k = wavenumbers(n, period)
    return np.fft.irfft((1j * k) ** order * np.fft.rfft(values), n)


def dealias(values: np.ndarray, fraction: float = DEFAULT_DEALIAS) -> np.ndarray:
    n = len(values)
    coeffs = np.fft.rfft(values)
    coeffs[~dealias_mask(n, fraction)] = 0.0
    return np.fft.irfft(coeffs, n)


def product(u: np.ndarray, w: np.ndarray, fraction: float = DEFAULT_DEALIAS) -> np.ndarray:
    """Pointwise product projected back onto the retained modes."""
    return dealias(np.asarray(u) * np.asarray(w), fraction)


def spectral_tail(values: np.ndarray, fraction: float = DEFAULT_DEALIAS) -> float:
    """Largest |coefficient| in the upper third of the retained band and above, over the peak."""
    n = len(values)
    mag = np.abs(np.fft.rfft(values))
    peak = mag.max()
    if peak == 0.0:
        return 0.0
    cutoff = fraction * n / 2
    band = np.arange(n // 2 + 1) > (2.0 / 3.0) * cutoff
    return float(mag[band].max() / peak)


def require_resolved(values: np.ndarray, tol: float = TAIL_TOL, fraction: float = DEFAULT_DEALIAS) -> None:
    tail = spectral_tail(values, fraction)
    if tail > tol:
        raise UnresolvedField(f"spectral tail {tail:.3e} exceeds {tol:.1e}")


def l2_norm(values: np.ndarray, period: float) -> float:
    """Continuous L2 norm over one period (exact for trigonometric polynomials)."""
    values = np.asarray(values, dtype=float)
    return float(np.sqrt(period * np.mean(values ** 2)))


def sobolev_norms(values: np.ndarray, period: float, kmax: int) -> np.ndarray:
    """[||v||_{H^0}, ..., ||v||_{H^kmax}] with ||v||_{H^k}^2 = sum_{j<=k} ||d^j v||_{L2}^2."""
    n = len(values)
    coeffs = np.fft.rfft(values)
    k = wavenumbers(n, period)
    weight = np.full(n // 2 + 1, 2.0)
    weight[0] = 1.0
    weight[-1] = 1.0
    power = weight * np.abs(coeffs) ** 2 * period / n ** 2
    out = [float(power.sum())]
    for j in range(1, kmax + 1):
        out.append(out[-1] + float((power * k ** (2 * j)).sum()))
    return np.sqrt(np.array(out))


def sobolev_norm(values: np.ndarray, period: float, s: int) -> float:
    return float(sobolev_norms(values, period, s)[-1])


def sup_norms(values: np.ndarray, period: float, order: int) -> float:
    """W^{order,inf} norm: max over j <= order of ||d^j v||_inf."""
    return max(float(np.max(np.abs(derivative(values, period, j)))) for j in range(order + 1))
