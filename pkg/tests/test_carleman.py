"""Tests for the Carleman machinery: weight construction, the conjugated
operator decomposition, the cross-term coefficients (against an independent
symbolic integration-by-parts oracle), and the weighted quotients."""

import math

import numpy as np
import pytest
from numpy.polynomial import polynomial as npoly

from torus_stab import (
    ConfigError,
    DegenerateInputError,
    Field,
    SpaceTimeWeight,
    WeightBoundError,
    build_psi,
    combined_ratio,
    conjugation_defect,
    conjugation_sides,
    default_params,
    elliptic_ratio,
    find_positivity_threshold,
    h_coeffs,
    make_grid,
    phi_eval,
    pp_pn,
    random_field,
    time_average,
    transport_ratio,
)

TWO_PI = 2.0 * np.pi
W = build_psi(np.pi / 2, 0.1)
RNG = np.random.default_rng(31)


def bump_window(x, center, half_width):
    """C-infinity bump with exact zeros outside |x-center| < half_width."""
    y = (x - center) / half_width
    out = np.zeros_like(x)
    inside = np.abs(y) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - y[inside] ** 2))
    return out


# -------------------------------------------------------------------------
# weight construction
# -------------------------------------------------------------------------

def test_interior_exact():
    x = np.linspace(np.pi / 4, TWO_PI - np.pi / 4, 101)
    assert np.max(np.abs(W.eval(x, 0) - (x + 0.1) ** 2)) == 0.0
    assert np.max(np.abs(W.eval(x, 1) - 2 * (x + 0.1))) == 0.0
    assert np.max(np.abs(W.eval(x, 2) - 2.0)) == 0.0
    for k in range(3, 8):
        assert np.max(np.abs(W.eval(x, k))) == 0.0


def _bridge_deriv(coeffs, tau, k):
    """psi^(k) from the stored psi' monomial coefficients, k >= 1."""
    d = npoly.polyder(coeffs, k - 1) if k > 1 else coeffs
    return npoly.polyval(tau, d)


def test_seam_matching_orders_1_to_7():
    """Derivative mismatch at the seam and the bridge-interior junctions,
    measured relative to the size of that derivative on the bridge (the
    high orders reach ~1e7, so an absolute comparison would be vacuous)."""
    half = W.eta / 2.0
    xb = np.concatenate([np.linspace(0, half, 400),
                         np.linspace(TWO_PI - half, TWO_PI, 400)])
    for k in range(1, 8):
        scale = max(1.0, np.max(np.abs(W.eval(xb, k))))
        # bridge halves agree at the seam x = 0 (tau = 0 on both sides)
        left = _bridge_deriv(W.coeffs_left, 0.0, k)
        right = _bridge_deriv(W.coeffs_right, 0.0, k)
        assert abs(left - right) <= 1e-8 * scale
        # bridge matches the interior quadratic at both junctions
        interior_jet = {1: 2 * (half + 0.1), 2: 2.0}
        got = _bridge_deriv(W.coeffs_right, half, k)
        assert abs(got - interior_jet.get(k, 0.0)) <= 1e-8 * scale
        interior_jet_l = {1: 2 * (TWO_PI - half + 0.1), 2: 2.0}
        got = _bridge_deriv(W.coeffs_left, -half, k)
        assert abs(got - interior_jet_l.get(k, 0.0)) <= 1e-8 * scale


def test_psi_continuous_at_junctions():
    half = W.eta / 2.0
    for xj in (half, TWO_PI - half):
        lo = W.eval(xj - 1e-10, 0)
        hi = W.eval(xj + 1e-10, 0)
        assert abs(lo - hi) < 1e-8


def test_dpsi_bounds_everywhere():
    x = np.linspace(0.0, TWO_PI, 4096)
    d = W.eval(x, 1)
    lo, hi = W.dpsi_bounds()
    assert d.min() >= lo - 1e-12
    assert d.max() <= hi + 1e-12


def test_psi_strictly_increasing():
    x = np.linspace(0.0, TWO_PI, 2000)
    p = W.eval(x, 0)
    assert np.all(np.diff(p) > 0)
    assert np.argmax(p) == len(x) - 1


def test_weight_bound_error_for_bad_parameters():
    """A seam plateau above the admissible slope band must be rejected by
    the fine-grid verification."""
    hi = 2.0 * (TWO_PI + 0.1)
    with pytest.raises(WeightBoundError):
        build_psi(np.pi / 2, 0.1, v0=hi + 1.0)


def test_build_psi_validation():
    with pytest.raises(ConfigError):
        build_psi(-1.0, 0.1)
    with pytest.raises(ConfigError):
        build_psi(np.pi / 2, -0.1)


def test_eval_order_range():
    with pytest.raises(ConfigError):
        W.eval(1.0, 9)
    with pytest.raises(ConfigError):
        W.eval(1.0, -1)


# -------------------------------------------------------------------------
# space-time weight
# -------------------------------------------------------------------------

def _admissible_stw(rho=0.9):
    T = 1.1 * (TWO_PI + W.delta) / rho  # a = b = 1
    return SpaceTimeWeight(weight=W, rho=rho, a=1.0, b=1.0, t_final=T)


def test_stw_admissibility():
    with pytest.raises(ConfigError):
        SpaceTimeWeight(weight=W, rho=0.9, a=1.0, b=1.0, t_final=1.0)
    stw = _admissible_stw()
    assert stw.rho * stw.speed * stw.t_final > TWO_PI + W.delta


def test_phi_partials():
    stw = _admissible_stw()
    x = np.linspace(1.0, 5.0, 7)
    t = 2.0
    np.testing.assert_allclose(
        stw.phi(x, t), W.eval(x, 0) - stw.rho * t ** 2, atol=1e-12)
    np.testing.assert_allclose(
        phi_eval(stw, x, t, dx=1), W.eval(x, 1), atol=1e-12)
    np.testing.assert_allclose(
        phi_eval(stw, x, t, dt=1), -2 * stw.rho * t + 0 * x, atol=1e-12)
    np.testing.assert_allclose(
        phi_eval(stw, x, t, dt=2), -2 * stw.rho + 0 * x, atol=1e-12)
    np.testing.assert_allclose(phi_eval(stw, x, t, dx=1, dt=1), 0 * x)


def test_transport_interior_constant():
    stw = _admissible_stw(rho=0.9)
    assert stw.transport_interior_constant() == pytest.approx(0.2)
    # oracle: phi_tt + 2 c phi_xt + c^2 phi_xx on the interior
    x = np.array([2.0, 3.0])
    val = (phi_eval(stw, x, 1.0, dt=2)
           + 2 * stw.speed * phi_eval(stw, x, 1.0, dx=1, dt=1)
           + stw.speed ** 2 * phi_eval(stw, x, 1.0, dx=2))
    np.testing.assert_allclose(val, 0.2, atol=1e-12)


# -------------------------------------------------------------------------
# conjugated decomposition
# -------------------------------------------------------------------------

def test_pp_pn_sum_is_conjugated_operator():
    """P_p v + P_n v = e^{s psi} d^4/dx^4 (e^{-s psi} v) within 1e-9
    relative, checked with compactly supported fields away from the seam.

    The window must decay to exact zeros fast (the exponential conjugation
    amplifies roundoff by e^{s osc(psi)} over the support), hence the tight
    super-Gaussian window and moderate s here; large s is covered by the
    integral identity test, whose both sides carry the same weight."""
    grid = make_grid(1024)
    x = grid.nodes
    window = np.exp(-((x - 3.0) / 0.3) ** 8)
    window[np.abs(x - 3.0) > 1.0] = 0.0
    rng = np.random.default_rng(4)
    for s in (1.0, 2.0):
        base = random_field(grid, rng, decay=0.5, kmax=10)
        u = Field(grid, values=window * base.values)
        d = conjugation_defect(u, W, s)
        assert d <= 1e-9


def test_pp_pn_requires_s_geq_1():
    grid = make_grid(128)
    v = random_field(grid, RNG)
    with pytest.raises(ConfigError):
        pp_pn(v, W, 0.5)
    with pytest.raises(ConfigError):
        h_coeffs(W, 0.5)


def test_h4_exact_formula():
    x = np.linspace(0.0, TWO_PI, 512)
    for s in (1.0, 7.0, 30.0):
        h4 = h_coeffs(W, s, x=x)[3]
        np.testing.assert_array_equal(h4, 8.0 * s * W.eval(x, 2))


def test_h1_leading_order():
    """h1 / s^7 -> 8 psi_x^6 psi_xx as s grows; drift below 5% across three
    decades of s on the interior."""
    x = np.linspace(np.pi / 2, TWO_PI - np.pi / 2, 64)
    target = 8.0 * W.eval(x, 1) ** 6 * W.eval(x, 2)
    for s in (1e2, 1e3, 1e4):
        h1 = h_coeffs(W, s, x=x)[0]
        assert np.max(np.abs(h1 / s ** 7 - target) / np.abs(target)) <= 0.05


def test_h_coefficients_against_symbolic_ibp():
    """Independent oracle: reduce 2 P_p v P_n v to diagonal form by symbolic
    integration by parts (for compactly supported v all boundary terms
    vanish) and compare the diagonal coefficients with 2 h_i."""
    import sympy as sp

    x, s = sp.symbols("x s", positive=True)
    psi = sp.Function("psi")(x)
    v = sp.Function("v")(x)
    p = {m: sp.diff(psi, x, m) for m in range(1, 9)}
    Pp = ((s ** 4 * p[1] ** 4 + 3 * s ** 2 * p[2] ** 2
           + 4 * s ** 2 * p[3] * p[1]) * v
          + 12 * s ** 2 * p[1] * p[2] * sp.diff(v, x)
          + 6 * s ** 2 * p[1] ** 2 * sp.diff(v, x, 2)
          + sp.diff(v, x, 4))
    Pn = (-(6 * s ** 3 * p[1] ** 2 * p[2] + s * p[4]) * v
          - (4 * s ** 3 * p[1] ** 3 + 4 * s * p[3]) * sp.diff(v, x)
          - 6 * s * p[2] * sp.diff(v, x, 2)
          - 4 * s * p[1] * sp.diff(v, x, 3))

    def split(term):
        coeff = sp.Integer(1)
        orders = []
        for base, exp in term.as_powers_dict().items():
            if base == v:
                orders += [0] * int(exp)
            elif isinstance(base, sp.Derivative) and base.expr == v:
                orders += [base.derivative_count] * int(exp)
            else:
                coeff *= base ** exp
        assert len(orders) == 2
        return tuple(sorted(orders)), coeff

    work = {}
    for term in sp.expand(2 * Pp * Pn).as_ordered_terms():
        (i, j), c = split(term)
        work[(i, j)] = work.get((i, j), 0) + c

    diag = {}
    # int c v^(i) v^(j): for j = i it is already diagonal; for j = i+1 it
    # equals -int (c'/2) (v^(i))^2; otherwise integrate by parts once.
    while work:
        (i, j), c = work.popitem()
        c = sp.expand(c)
        if c == 0:
            continue
        if j == i:
            diag[i] = diag.get(i, 0) + c
        elif j == i + 1:
            diag[i] = diag.get(i, 0) - sp.diff(c, x) / 2
        else:
            work[(i + 1, j - 1)] = work.get((i + 1, j - 1), 0) + (-c)
            key = tuple(sorted((i, j - 1)))
            work[key] = work.get(key, 0) - sp.diff(c, x)

    # the packaged coefficients, written symbolically
    h1 = sp.Rational(1, 2) * s * (
        16 * s ** 6 * p[1] ** 6 * p[2] - 4 * s ** 4 * p[1] ** 4 * p[4]
        - 64 * s ** 4 * p[1] ** 3 * p[2] * p[3]
        - 48 * s ** 4 * p[1] ** 2 * p[2] ** 3
        + 4 * s ** 2 * p[1] ** 2 * p[6] + 24 * s ** 2 * p[1] * p[2] * p[5]
        + 32 * s ** 2 * p[1] * p[3] * p[4] - 36 * s ** 2 * p[2] ** 2 * p[4]
        - 80 * s ** 2 * p[2] * p[3] ** 2 - p[8])
    h2 = 4 * s * (6 * s ** 4 * p[1] ** 4 * p[2] - 3 * s ** 2 * p[1] ** 2 * p[4]
                  - 12 * s ** 2 * p[1] * p[2] * p[3] + 6 * s ** 2 * p[2] ** 3
                  + p[6])
    h3 = 24 * s ** 3 * p[1] ** 2 * p[2] - 10 * s * p[4]
    h4 = 8 * s * p[2]
    for i, h in enumerate((h1, h2, h3, h4)):
        assert sp.simplify(diag.get(i, 0) - 2 * h) == 0


def test_conjugation_identity():
    grid = make_grid(4096)
    x = grid.nodes
    base = random_field(grid, RNG, decay=0.3, kmax=40)
    u = Field(grid, values=bump_window(x, 3.0, 0.5) * base.values)
    for s in (5.0, 10.0, 20.0):
        lhs, rhs = conjugation_sides(u, W, s)
        assert abs(lhs - rhs) <= 1e-8 * abs(lhs)


def test_conjugation_empty_support():
    grid = make_grid(256)
    with pytest.raises(DegenerateInputError):
        conjugation_sides(Field.zero(grid), W, 5.0)


# -------------------------------------------------------------------------
# positivity and quotients
# -------------------------------------------------------------------------

def test_positivity_threshold():
    s0, K, K1 = find_positivity_threshold(W)
    assert s0 >= 1.0
    assert K > 0.0
    assert math.isfinite(K1)
    # at 2 s0 all scaled coefficients stay positive on the interior
    lo, hi = W.interior_interval()
    xi = np.linspace(lo + 1e-6, hi - 1e-6, 512)
    hs = h_coeffs(W, 2 * s0, x=xi)
    for i, h in enumerate(hs, start=1):
        assert np.min(2 * h / (2 * s0) ** (9 - 2 * i)) > 0


def test_elliptic_ratio_finite():
    grid = make_grid(256)
    eta = np.pi / 2
    omega = Field(grid, values=((grid.nodes < eta)
                                | (grid.nodes > TWO_PI - eta)).astype(float))
    s0, _, _ = find_positivity_threshold(W)
    for s in np.linspace(s0, 6 * s0, 5):
        q = elliptic_ratio(random_field(grid, RNG), W, s, omega)
        assert math.isfinite(q) and q > 0


def test_elliptic_ratio_zero_rhs_raises():
    grid = make_grid(256)
    omega = Field.zero(grid)
    with pytest.raises(DegenerateInputError):
        elliptic_ratio(Field.zero(grid), W, 2.0, omega)


def test_transport_ratio_on_exact_transport():
    """A pulse advected at speed a/b solves the transport equation exactly,
    so the defect term vanishes and the quotient stays order one."""
    grid = make_grid(256)
    stw = _admissible_stw()
    eta = np.pi / 2
    omega = Field(grid, values=((grid.nodes < eta)
                                | (grid.nodes > TWO_PI - eta)).astype(float))
    f0 = random_field(grid, RNG, decay=0.8)
    times = np.linspace(0.0, stw.t_final, 161)
    fields = [Field(grid, coeffs=f0.coeffs
                    * np.exp(-1j * grid.wavenumbers * stw.speed * t))
              for t in times]
    for s in (1.0, 2.0, 4.0):
        q = transport_ratio((times, fields), stw, s, omega)
        assert math.isfinite(q) and q > 0


def test_combined_ratio_divergence_flag():
    """Sharpness probe: a pulse advected at speed a/b from (0, eps) is
    observed on omega = (2pi - eps, 2pi) only after t = (2pi - 2 eps) b/a.
    Truncating the trajectory below that threshold leaves the observation
    term empty, so the combined quotient must be flagged as infinite."""
    grid = make_grid(512)
    params = default_params(grid)
    stw = _admissible_stw()
    eps = 0.5
    omega = Field(grid, values=(grid.nodes > TWO_PI - eps).astype(float))
    # pulse initially on (eps, 2 eps); crossing distance to omega
    t_sub = 0.9 * (TWO_PI - 3 * eps) / stw.speed
    times = np.linspace(0.0, t_sub, 9)
    x = grid.nodes
    fields = [Field(grid, values=bump_window(
        np.mod(x - stw.speed * t, TWO_PI), 1.5 * eps, eps / 2 - 1e-3))
        for t in times]
    q = combined_ratio((times, fields), stw, 2.0, omega, params)
    assert q == math.inf


# -------------------------------------------------------------------------
# time-averaging smoother
# -------------------------------------------------------------------------

def _series(grid, n_t, T):
    times = np.linspace(0.0, T, n_t)
    fields = [Field.from_function(
        grid, lambda xx, tt=t: np.cos(xx - tt) * np.exp(-0.3 * tt))
        for t in times]
    return times, fields


def test_time_average_constant_in_time():
    grid = make_grid(64)
    times = np.linspace(0.0, 1.0, 11)
    f = Field.from_function(grid, np.sin)
    out_t, out_f = time_average((times, [f] * 11), 0.3)
    assert len(out_t) == 8
    for g in out_f:
        assert (g - f).linf() < 1e-14


def test_time_average_linear_in_time_oracle():
    """For g(x,t) = t * c(x) the average over [t, t+h] is (t + h/2) c(x)."""
    grid = make_grid(64)
    times = np.linspace(0.0, 1.0, 101)
    c = Field.from_function(grid, np.cos)
    fields = [float(t) * c for t in times]
    out_t, out_f = time_average((times, fields), 0.2)
    for t, g in zip(out_t, out_f):
        assert (g - float(t + 0.1) * c).linf() < 1e-12


def test_time_average_validation():
    grid = make_grid(64)
    times, fields = _series(grid, 51, 1.0)
    with pytest.raises(ConfigError):
        time_average((times, fields), 2.0)
    with pytest.raises(ConfigError):
        time_average((times, fields), 0.0301)  # not a multiple of dt
