"""Initial data: solitons, random band-limited ensembles, bumps and rough H^q data."""
from __future__ import annotations

import numpy as np

from .field import Field, grid, sup_norms


def soliton_profile(x, c: float, x0: float, period: float, images: int = 2) -> np.ndarray:
    """Periodised KdV soliton 3c sech^2(sqrt(c)/2 (x - x0)), summed over ``images`` copies each side."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for m in range(-images, images + 1):
        out += 3.0 * c / np.cosh(0.5 * np.sqrt(c) * (x - x0 - m * period)) ** 2
    return out


def soliton(c: float, n: int, period: float, x0: float | None = None, t: float = 0.0) -> Field:
    """Soliton of speed c at time t (travels to the right with speed c)."""
    if x0 is None:
        x0 = 0.5 * period
    shift = (x0 + c * t) % period
    return Field(soliton_profile(grid(n, period), c, shift, period), period)


def periodization_defect(c: float, period: float) -> float:
    """Relative size of the overlap between a soliton and its nearest periodic image.

    The periodised profile solves KdV up to the interaction term, whose
    relative size is sech^4(sqrt(c) period / 4).
    """
    return float(np.cosh(0.25 * np.sqrt(c) * period) ** -4)


def random_bandlimited(rng: np.random.Generator, n: int, period: float, modes: int = 8,
                       w1: float = 1.0, mean: float = 0.0, decay: float = 1.0) -> Field:
    """Random trigonometric polynomial of degree ``modes`` with ||v - mean||_{W^{1,inf}} = w1."""
    m = np.arange(1, modes + 1)
    coeffs = np.zeros(n // 2 + 1, dtype=complex)
    amp = rng.standard_normal(modes) + 1j * rng.standard_normal(modes)
    coeffs[1:modes + 1] = amp / m ** decay
    vals = np.fft.irfft(coeffs, n)
    vals *= w1 / sup_norms(vals, period, 1)
    return Field(vals + mean, period)


def bump(n: int, period: float, width: float | None = None, center: float | None = None) -> Field:
    """Smooth periodic bump exp((cos(2 pi (x - center)/period) - 1) / w^2) with unit height."""
    if width is None:
        width = 0.1
    if center is None:
        center = 0.5 * period
    x = grid(n, period)
    return Field(np.exp((np.cos(2 * np.pi * (x - center) / period) - 1.0) / width ** 2), period)


def rough_data(q: float, n: int, period: float, amplitude: float = 1.0, max_mode: int | None = None,
               seed: int = 0) -> Field:
    """Data with |coefficient_m| ~ m^-(q+1): in H^q but not in H^(q + 1/2)."""
    rng = np.random.default_rng(seed)
    if max_mode is None:
        max_mode = n // 3
    m = np.arange(1, max_mode + 1)
    coeffs = np.zeros(n // 2 + 1, dtype=complex)
    coeffs[1:max_mode + 1] = np.exp(2j * np.pi * rng.random(max_mode)) * m ** (-(q + 1.0))
    vals = np.fft.irfft(coeffs, n)
    vals *= amplitude / np.max(np.abs(vals))
    return Field(vals, period)
