"""Periodic grid, FFT transforms, spectral differentiation and Sobolev inner
products on the torus [0, 2pi).

Conventions (fixed once, used everywhere):

* forward transform carries 1/n: ``coeffs = fft(values) / n``;
* inner products carry the 2pi measure, so for real u, v on the same grid
  ``int u v dx = 2pi * sum_k uhat_k conj(vhat_k)`` (discrete Parseval);
* the H^s weight is ``m(k) = 1 + b1 k^2 + b k^4`` (the symbol of the
  regularizing operator), raised to the power s/2;
* the Nyquist mode n/2 is zeroed under odd-order differentiation so that
  derivatives of real fields stay real.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GridMismatchError, UnsupportedOrderError

MAX_DERIVATIVE_ORDER = 7  # highest order used anywhere (weight matching)


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid of n points on [0, 2pi) with integer wavenumbers."""

    n: int
    nodes: np.ndarray = field(repr=False)
    wavenumbers: np.ndarray = field(repr=False)

    @property
    def length(self):
        return 2.0 * np.pi

    def __eq__(self, other):
        return isinstance(other, TorusGrid) and self.n == other.n

    def __hash__(self):
        return hash(self.n)


def make_grid(n: int) -> TorusGrid:
    """Build the uniform periodic grid x_j = 2pi j / n.

    n must be even and within [8, 2^20].
    """
    if n % 2 != 0:
        raise ConfigError(f"n must be even, got {n}")
    if not 8 <= n <= 2 ** 20:
        raise ConfigError(f"n must satisfy 8 <= n <= 2^20, got {n}")
    nodes = 2.0 * np.pi * np.arange(n) / n
    # fftfreq places the single unpaired mode at -n/2; we use +n/2 so the
    # wavenumber set is {-n/2+1, ..., n/2}.
    k = np.fft.fftfreq(n, d=1.0 / n)
    k[n // 2] = n // 2
    nodes.setflags(write=False)
    k.setflags(write=False)
    return TorusGrid(n=n, nodes=nodes, wavenumbers=k)


class Field:
    """Real-valued function on a TorusGrid with paired physical/spectral
    representations.

    Immutable by convention: operations return new Fields.
    """

    __slots__ = ("grid", "_values", "_coeffs")

    def __init__(self, grid: TorusGrid, values=None, coeffs=None):
        if values is None and coeffs is None:
            raise ValueError("need values or coeffs")
        self.grid = grid
        self._values = None if values is None else np.asarray(values, dtype=float)
        self._coeffs = None if coeffs is None else np.asarray(coeffs, dtype=complex)
        if self._values is not None and self._values.shape != (grid.n,):
            raise ValueError(f"values shape {self._values.shape} != ({grid.n},)")
        if self._coeffs is not None and self._coeffs.shape != (grid.n,):
            raise ValueError(f"coeffs shape {self._coeffs.shape} != ({grid.n},)")

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = np.fft.ifft(self._coeffs * self.grid.n).real
        return self._values

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            self._coeffs = np.fft.fft(self._values) / self.grid.n
        return self._coeffs

    @classmethod
    def from_function(cls, grid: TorusGrid, f) -> "Field":
        return cls(grid, values=f(grid.nodes))

    @classmethod
    def zero(cls, grid: TorusGrid) -> "Field":
        return cls(grid, values=np.zeros(grid.n))

    def __add__(self, other):
        _check_same_grid(self, other)
        return Field(self.grid, values=self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return Field(self.grid, values=self.values - other.values)

    def __mul__(self, scalar):
        return Field(self.grid, values=self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, values=-self.values)

    def linf(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class SobolevIndex:
    """Regularity exponent s with the multiplier coefficients b, b1."""

    s: float
    b: float = 1.0
    b1: float = 1.0

    def __post_init__(self):
        if self.b <= 0 or self.b1 <= 0:
            raise ConfigError("Sobolev multiplier requires b > 0 and b1 > 0")


def multiplier_weight(k: np.ndarray, b: float, b1: float) -> np.ndarray:
    """m(k) = 1 + b1 k^2 + b k^4, the elliptic symbol. Always >= 1."""
    k2 = k * k
    return 1.0 + b1 * k2 + b * k2 * k2


def _check_same_grid(u: Field, v: Field):
    if u.grid != v.grid:
        raise GridMismatchError(
            f"fields on different grids: n={u.grid.n} vs n={v.grid.n}"
        )


def derivative(f: Field, m: int) -> Field:
    """m-th spectral derivative: mode k multiplied by (ik)^m.

    The Nyquist mode is zeroed for odd m to keep the result real.
    """
    if m < 0 or m > MAX_DERIVATIVE_ORDER:
        raise UnsupportedOrderError(
            f"derivative order must be in [0, {MAX_DERIVATIVE_ORDER}], got {m}"
        )
    if m == 0:
        return f
    k = f.grid.wavenumbers
    mult = (1j * k) ** m
    if m % 2 == 1:
        mult = mult.copy()
        mult[f.grid.n // 2] = 0.0
    return Field(f.grid, coeffs=f.coeffs * mult)


def l2_inner(u: Field, v: Field) -> float:
    """int_T u v dx via discrete Parseval."""
    _check_same_grid(u, v)
    return float(2.0 * np.pi * np.real(np.sum(u.coeffs * np.conj(v.coeffs))))


def hs_inner(u: Field, v: Field, idx: SobolevIndex) -> float:
    """Weighted Sobolev inner product 2pi sum_k m(k)^{s/2} uhat conj(vhat).

    At s = 0 this is the L^2(T) inner product; at s = 2 it equals the
    equivalent H^2 energy ``int u^2 + b1 u_x^2 + b u_xx^2 dx``.
    """
    _check_same_grid(u, v)
    w = multiplier_weight(u.grid.wavenumbers, idx.b, idx.b1) ** (idx.s / 2.0)
    return float(2.0 * np.pi * np.real(np.sum(w * u.coeffs * np.conj(v.coeffs))))


def hs_norm_sq(u: Field, idx: SobolevIndex) -> float:
    return hs_inner(u, u, idx)


def energy_h2(u: Field, b: float, b1: float) -> float:
    """Equivalent H^2 energy, term by term: int u^2 + b1 u_x^2 + b u_xx^2 dx.

    Computed from the spectral derivatives; agrees with
    ``hs_inner(u, u, SobolevIndex(2, b, b1))`` by Parseval.
    """
    ux = derivative(u, 1)
    uxx = derivative(u, 2)
    return l2_inner(u, u) + b1 * l2_inner(ux, ux) + b * l2_inner(uxx, uxx)


def random_field(grid: TorusGrid, rng, decay: float = 0.5, kmax=None) -> Field:
    """Smooth random field: independent modes with e^{-decay |k|} envelope.

    The Nyquist mode is left empty so products dealiased with a factor-2
    padding stay alias-free for cubic nonlinearities.
    """
    n = grid.n
    k = grid.wavenumbers
    if kmax is None:
        kmax = n // 2 - 1
    c = np.zeros(n, dtype=complex)
    half = (k > 0) & (k <= kmax)
    amp = np.exp(-decay * k[half])
    c[half] = amp * (rng.standard_normal(half.sum()) + 1j * rng.standard_normal(half.sum()))
    # enforce conjugate symmetry for a real field
    full = np.zeros(n, dtype=complex)
    full[half] = c[half]
    full[1:] += np.conj(c[1:][::-1])
    full[0] = rng.standard_normal()
    return Field(grid, coeffs=full)
