"""Right-hand sides of the closed-loop equation, its quasilinear form, and
the elliptic/transport splitting.

All evolution equations are written as u_t = F(u) after inverting the
elliptic factor M = I - b1 dxx + b dxxxx.  Nonlinear products are dealiased
on a factor-2 padded grid, which is exact through cubic terms for
Nyquist-free inputs.

Sign convention for the damping: the dissipative feedback u_t = Au - B(sigma u)
is used, so that the H^2 energy satisfies

    dE/dt = -2 ||sigma u||_{H^2}^2 - 2 (7/48 - gamma) int u_x^3 dx.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import (
    ModelParams,
    a_apply,
    b_apply,
    fine_values,
    from_fine_values,
    m_power,
    multiply,
)
from .spectral import Field, derivative, l2_inner


@dataclass(frozen=True)
class FrozenCoefficients:
    """Given bounded coefficient functions (q, p, r) of x."""

    q: Field
    p: Field
    r: Field


def nonlinear_physical(u: Field, params: ModelParams) -> Field:
    """The four nonlinear terms of the conservative form:

    N(u) = 3/2 u u_x + gamma (u^2)_xxx - 7/48 (u_x^2)_x - 1/8 (u^3)_x.
    """
    grid = u.grid
    uf = fine_values(u)
    uxf = fine_values(derivative(u, 1))
    term_conv = from_fine_values(grid, uf * uxf)
    sq = from_fine_values(grid, uf * uf)
    sqx = from_fine_values(grid, uxf * uxf)
    cube = from_fine_values(grid, uf * uf * uf)
    g = params.gamma
    out = (
        1.5 * term_conv
        + g * derivative(sq, 3)
        - (7.0 / 48.0) * derivative(sqx, 1)
        - 0.125 * derivative(cube, 1)
    )
    return out


def quasilinear_coefficients(u: Field, params: ModelParams) -> FrozenCoefficients:
    """Coefficients of the expanded form:

    q(u) = 1 + 3/2 u - 3/8 u^2,  p(u) = a1 + 2 gamma u,
    r(u) = (6 gamma - 7/24) u_x.
    """
    grid = u.grid
    uf = fine_values(u)
    q = from_fine_values(grid, 1.0 + 1.5 * uf - 0.375 * uf * uf)
    p = from_fine_values(grid, params.a1 + 2.0 * params.gamma * uf)
    r = (6.0 * params.gamma - 7.0 / 24.0) * derivative(u, 1)
    return FrozenCoefficients(q=q, p=p, r=r)


def quasilinear_physical(u: Field, params: ModelParams) -> Field:
    """q(u) u_x + p(u) u_xxx + r(u) u_xx, dealiased.

    Subtracting the linear part u_x + a1 u_xxx recovers nonlinear_physical(u).
    """
    c = quasilinear_coefficients(u, params)
    return (
        multiply(c.q, derivative(u, 1))
        + multiply(c.p, derivative(u, 3))
        + multiply(c.r, derivative(u, 2))
    )


def undamped_rhs(u: Field, params: ModelParams) -> Field:
    """u_t = A u - M^{-1} N(u): the conservative flow."""
    return a_apply(u, params) - m_power(nonlinear_physical(u, params), -1.0, params)


def closed_loop_rhs(u: Field, params: ModelParams) -> Field:
    """u_t = A u - M^{-1} N(u) - B(sigma u): nonlinear flow with feedback."""
    return undamped_rhs(u, params) - b_apply(multiply(params.sigma, u), params)


def linear_closed_loop_rhs(u: Field, params: ModelParams) -> Field:
    """u_t = A u - B(sigma u): linearized damped flow (the W_a group)."""
    return a_apply(u, params) - b_apply(multiply(params.sigma, u), params)


def scaled_closed_loop_rhs(u: Field, params: ModelParams, alpha: float) -> Field:
    """Closed loop with the nonlinearity scaled: quadratic terms carry alpha,
    the cubic term alpha^2.  alpha=1 is the full system, alpha=0 the linear one.
    """
    grid = u.grid
    uf = fine_values(u)
    uxf = fine_values(derivative(u, 1))
    sq = from_fine_values(grid, uf * uf)
    sqx = from_fine_values(grid, uxf * uxf)
    cube = from_fine_values(grid, uf * uf * uf)
    conv = from_fine_values(grid, uf * uxf)
    nl = alpha * (
        1.5 * conv
        + params.gamma * derivative(sq, 3)
        - (7.0 / 48.0) * derivative(sqx, 1)
    ) - alpha ** 2 * 0.125 * derivative(cube, 1)
    return (
        a_apply(u, params)
        - m_power(nl, -1.0, params)
        - b_apply(multiply(params.sigma, u), params)
    )


def frozen_rhs(u: Field, coeffs: FrozenCoefficients, params: ModelParams) -> Field:
    """u_t = -M^{-1}(a u_xxxxx + q u_x + p u_xxx + r u_xx) with frozen (q,p,r)."""
    inner = (
        params.a * derivative(u, 5)
        + multiply(coeffs.q, derivative(u, 1))
        + multiply(coeffs.p, derivative(u, 3))
        + multiply(coeffs.r, derivative(u, 2))
    )
    return -m_power(inner, -1.0, params)


def split_elliptic(u: Field, params: ModelParams) -> Field:
    """w = M u = u - b1 u_xx + b u_xxxx."""
    return m_power(u, 1.0, params)


def transport_source(u: Field, coeffs: FrozenCoefficients, params: ModelParams) -> Field:
    """Right-hand side of the transport half of the splitting:

    w_t + (a/b) w_x = (a/b - q) u_x - (a b1 / b + p) u_xxx - r u_xx.
    """
    ab = params.a / params.b
    ux = derivative(u, 1)
    uxx = derivative(u, 2)
    uxxx = derivative(u, 3)
    grid = u.grid
    qf = fine_values(coeffs.q)
    pf = fine_values(coeffs.p)
    rf = fine_values(coeffs.r)
    src = (
        (ab - qf) * fine_values(ux)
        - (ab * params.b1 + pf) * fine_values(uxxx)
        - rf * fine_values(uxx)
    )
    return from_fine_values(grid, src)


def cubic_flux(u: Field) -> float:
    """int u_x^3 dx, the residual term of the energy identity when
    gamma != 7/48.  Dealiased: cubic of a Nyquist-free field is exact."""
    ux = derivative(u, 1)
    return l2_inner(multiply(ux, ux), ux)
