"""Fourier multiplier operators for the regularized fifth-order equation.

The elliptic regularization M = I - b1 dxx + b dxxxx acts diagonally with
symbol m(k) = 1 + b1 k^2 + b k^4 >= 1, so every real power of M is defined.
On top of it sit the skew-adjoint generator

    A = -M^{-1} (dx + a1 dxxx + a dxxxxx),

the damping operator B = M^{-1} sigma M and its H^s adjoint

    B^{*,s} = M^{1-s/2} sigma M^{s/2-1},

which reduces to plain multiplication by sigma at s = 2.

Pointwise products with sigma are dealiased by factor-2 zero padding; the
padding/truncation pair is an exact adjoint pair on the modes below Nyquist,
which is what makes the discrete adjoint identity hold to roundoff.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .spectral import Field, TorusGrid, make_grid, multiplier_weight


def pad_spectrum(coeffs: np.ndarray) -> np.ndarray:
    """Zero-pad n coefficients to 2n (factor-2 dealiasing grid).

    The single Nyquist coefficient is split evenly between +n/2 and -n/2 so
    the fine-grid samples of a real field stay real.
    """
    n = coeffs.shape[0]
    fine = np.zeros(2 * n, dtype=complex)
    fine[: n // 2] = coeffs[: n // 2]
    fine[-(n // 2) + 1 :] = coeffs[n // 2 + 1 :]
    fine[n // 2] = 0.5 * coeffs[n // 2]
    fine[-(n // 2)] = 0.5 * coeffs[n // 2]
    return fine


def truncate_spectrum(fine: np.ndarray) -> np.ndarray:
    """Inverse of pad_spectrum: keep modes |k| <= n/2, summing the two
    Nyquist slots (so pad -> truncate is the identity)."""
    n2 = fine.shape[0]
    n = n2 // 2
    out = np.zeros(n, dtype=complex)
    out[: n // 2] = fine[: n // 2]
    out[n // 2 + 1 :] = fine[-(n // 2) + 1 :]
    out[n // 2] = fine[n // 2] + fine[-(n // 2)]
    return out


def fine_values(f: Field) -> np.ndarray:
    """Samples of f spectrally interpolated onto the 2n-point grid."""
    n = f.grid.n
    return np.fft.ifft(pad_spectrum(f.coeffs) * 2 * n).real


def from_fine_values(grid: TorusGrid, fine_vals: np.ndarray) -> Field:
    """Project 2n-point samples back to the n-point grid (dealiased)."""
    fine_coeffs = np.fft.fft(fine_vals) / (2 * grid.n)
    return Field(grid, coeffs=truncate_spectrum(fine_coeffs))


def multiply(f: Field, g: Field) -> Field:
    """Dealiased pointwise product via factor-2 zero padding."""
    if f.grid != g.grid:
        raise ConfigError("product of fields on different grids")
    return from_fine_values(f.grid, fine_values(f) * fine_values(g))


def bump_profile(grid: TorusGrid, center: float, width: float, amplitude: float) -> Field:
    """Raised-cosine-to-the-4th bump supported on the arc of the given width.

    sigma(x) = amplitude * cos(pi d / width)^4 for wrapped distance
    d = dist(x, center) < width/2, zero outside.
    """
    if not 0 < width <= 2 * np.pi:
        raise ConfigError(f"bump width must be in (0, 2pi], got {width}")
    d = np.angle(np.exp(1j * (grid.nodes - center)))
    vals = np.where(
        np.abs(d) < width / 2.0,
        amplitude * np.cos(np.pi * d / width) ** 4,
        0.0,
    )
    return Field(grid, values=vals)


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the fifth-order model plus the damping profile.

    b and b1 (the mixed-derivative regularizations) must be positive; gamma
    defaults to 7/48, the value at which the cubic energy flux cancels and
    the H^2 energy law is exact.
    """

    a: float = 1.0
    a1: float = 1.0
    b: float = 1.0
    b1: float = 1.0
    gamma: float = 7.0 / 48.0
    sigma: Field = None

    def __post_init__(self):
        if self.b <= 0 or self.b1 <= 0:
            raise ConfigError("ModelParams requires b > 0 and b1 > 0")
        if self.a == 0:
            raise ConfigError("ModelParams requires a != 0")

    def with_sigma(self, sigma: Field) -> "ModelParams":
        return replace(self, sigma=sigma)

    def weight(self, k: np.ndarray) -> np.ndarray:
        return multiplier_weight(k, self.b, self.b1)


def default_params(grid: TorusGrid, sigma_center: float = np.pi,
                   sigma_width: float = np.pi, sigma_amplitude: float = 1.0) -> ModelParams:
    """Default parameter preset with a bump damping profile."""
    sigma = bump_profile(grid, sigma_center, sigma_width, sigma_amplitude)
    return ModelParams(sigma=sigma)


def m_power(f: Field, theta: float, params: ModelParams) -> Field:
    """Apply M^theta: mode k scaled by m(k)^theta."""
    if theta == 0:
        return f
    w = params.weight(f.grid.wavenumbers) ** theta
    return Field(f.grid, coeffs=f.coeffs * w)


def a_apply(f: Field, params: ModelParams) -> Field:
    """Skew-adjoint generator: mode k scaled by -i(k - a1 k^3 + a k^5)/m(k)."""
    k = f.grid.wavenumbers
    sym = -1j * (k - params.a1 * k ** 3 + params.a * k ** 5) / params.weight(k)
    sym = sym.copy()
    sym[f.grid.n // 2] = 0.0  # odd symbol: keep real fields real
    return Field(f.grid, coeffs=f.coeffs * sym)


def a_symbol(k: np.ndarray, params: ModelParams) -> np.ndarray:
    """Imaginary part of the symbol of A (A acts as i * this on mode k)."""
    return -(k - params.a1 * k ** 3 + params.a * k ** 5) / params.weight(k)


def b_apply(f: Field, params: ModelParams) -> Field:
    """B f = M^{-1} (sigma * M f), sigma product dealiased."""
    return m_power(multiply(params.sigma, m_power(f, 1.0, params)), -1.0, params)


def b_star_apply(f: Field, s: float, params: ModelParams) -> Field:
    """H^s adjoint of B: M^{1-s/2} (sigma * M^{s/2-1} f).

    For s = 2 both powers vanish and this is the sigma product itself.
    """
    if s < 2:
        warnings.warn(f"b_star_apply outside derivation range: s={s} < 2", stacklevel=2)
    inner = m_power(f, s / 2.0 - 1.0, params)
    return m_power(multiply(params.sigma, inner), 1.0 - s / 2.0, params)
