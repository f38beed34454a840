import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import erfc

from wienerhopf import symbols as Y
from wienerhopf.grid import build_grid, cutoff_profile
from wienerhopf.operators import (
    Convolution,
    LeftShift,
    RightShift,
    assemble_matrix,
    delta_kernel,
    gaussian_bump,
    kernel_from_function,
)
from wienerhopf.spectra import growth_order
from wienerhopf.weights import constant, exponential


def std_normal(s):
    return np.exp(-0.5 * np.asarray(s) ** 2) / np.sqrt(2 * np.pi)


def orders(w, X=20, N=400):
    g = build_grid(X, N)
    return growth_order("right", w, g, [1, 2, 3]), growth_order("left", w, g, [1, 2, 3])


def test_shift_symbol_values():
    assert Y.shift_symbol(1, "right", 0) == 1
    assert Y.shift_symbol(1, "right", np.pi) == pytest.approx(-1)
    assert abs(Y.shift_symbol(1, "right", 1j)) == pytest.approx(np.e)
    assert Y.shift_symbol(2, "left", 0.3 + 0.1j) == pytest.approx(np.exp(2j * (0.3 + 0.1j)))
    with pytest.raises(ValueError):
        Y.shift_symbol(1, "up", 0)


def test_gaussian_transform_closed_form():
    K = kernel_from_function(std_normal, 0.05, -8, 8)
    xi = np.linspace(-6, 6, 61)
    np.testing.assert_allclose(Y.convolution_symbol(K, 0.0, xi), np.exp(-xi**2 / 2), atol=1e-8)


def test_translation_multiplies_by_phase():
    K = kernel_from_function(std_normal, 0.05, -8, 8)
    xi = np.linspace(-4, 4, 41)
    shifted = Y.convolution_symbol(K.shifted(1.0), 0.0, xi)
    np.testing.assert_allclose(shifted, np.exp(-xi**2 / 2) * np.exp(-1j * xi), atol=1e-8)


def test_transform_against_quad():
    K = gaussian_bump(0.01, 0.3, 1.0)
    for xi in (0.0, 1.7, -3.2):
        for a in (0.0, 0.5):
            re = quad(lambda s: K.func(s) * np.exp(a * s) * np.cos(xi * s), -0.7, 1.3, limit=200)[0]
            im = -quad(lambda s: K.func(s) * np.exp(a * s) * np.sin(xi * s), -0.7, 1.3, limit=200)[0]
            assert Y.convolution_symbol(K, a, [xi])[0] == pytest.approx(re + 1j * im, abs=1e-10)


@pytest.mark.parametrize("t", [0.05, 1.0, 2.0])
def test_convention_lock(t):
    z = np.array([0.3, -1.2 + 0.4j, 2.0 - 0.7j])
    sym = Y.SymbolFunction.for_kernel(delta_kernel(0.05, t))
    np.testing.assert_allclose(sym(z), Y.shift_symbol(t, "right", z), atol=1e-12)


def test_symbol_linearity():
    h = 0.05
    a, b = gaussian_bump(h, 0.0), gaussian_bump(h, 0.7, 0.5)
    xi = np.linspace(-3, 3, 13)
    lhs = Y.convolution_symbol(2 * a - b, 0.2, xi)
    rhs = 2 * Y.convolution_symbol(a, 0.2, xi) - Y.convolution_symbol(b, 0.2, xi)
    np.testing.assert_allclose(lhs, rhs, atol=1e-13)


def test_tilt_overflow():
    with pytest.raises(Y.TiltOverflowError):
        Y.convolution_symbol(gaussian_bump(0.05), 1e4, [0.0])


def test_cauchy_riemann_on_kernel_symbol():
    sym = Y.SymbolFunction.for_kernel(gaussian_bump(0.05, 0.5))
    for z in (0.3 + 0.1j, -1.0 - 0.2j):
        assert Y.cauchy_riemann_residual(sym, z) <= Y.CR_TOL


def test_bound_check_bump_constant_weight():
    g = build_grid(20, 400)
    K = gaussian_bump(g.h)
    T = assemble_matrix(Convolution(K), g, constant())
    strip = Y.strip_U(*orders(constant()))
    assert strip.degenerate and strip.tilts().tolist() == [0.0]
    bc = Y.symbol_bound_check(T, Y.SymbolFunction.for_kernel(K), strip)
    assert bc.status == "pass"
    assert bc.rows[0]["max_abs_symbol"] == pytest.approx(1.0, abs=1e-12)
    assert bc.max_ratio <= 1 + Y.BOUND_SLACK


def test_equality_case_right_shift_exponential():
    g = build_grid(20, 400)
    w = exponential(1.0)
    strip = Y.strip_U(*orders(w))
    T = assemble_matrix(RightShift(1.0), g, w)
    bc = Y.symbol_bound_check(T, Y.SymbolFunction.for_shift(1.0), strip)
    assert strip.tilts() == pytest.approx([1.0])
    assert bc.max_ratio == pytest.approx(1.0, abs=1e-12)


def test_strip_rejects_far_tilt():
    strip = Y.strip_U(*orders(constant()))
    with pytest.raises(Y.StripError):
        strip.check(0.5)
    strip.check(0.09)


def test_strips_o_and_v():
    r, l = orders(exponential(-1.0))
    o, v = Y.strip_O(r, l), Y.strip_V(r, l)
    assert o.a_max == pytest.approx(-1.0) and o.a_min == pytest.approx(-3.0)
    assert v.a_min == pytest.approx(-1.0) and v.a_max == pytest.approx(1.0)


def test_line_max_exhaustive_for_shift():
    m, at, ok = Y.line_max(Y.SymbolFunction.for_shift(1.0), 0.3)
    assert ok and m == pytest.approx(np.exp(0.3))


# ---------------------------------------------------------------- quasimodes


def packet(x, b, t0, eta0):
    y = x - t0
    return cutoff_profile(x, t0) * np.exp(-0.5 * (b * y) ** 2) * np.exp(1j * eta0 * y)


def continuous_shift_residual(b, t0):
    """||F(. - 1) + F|| / ||F|| on the half line by quadrature (lambda = -1)."""
    F = lambda x: packet(x, b, t0, np.pi)
    num = quad(lambda x: abs((F(x - 1) if x >= 1 else 0) + F(x)) ** 2, 0, 2 * t0 + 1, limit=400)[0]
    den = quad(lambda x: abs(F(x)) ** 2, 0, 2 * t0, limit=400)[0]
    return np.sqrt(num / den)


@pytest.mark.parametrize("b,t0,X,N", [(0.25, 10.0, 40.0, 800), (0.125, 20.0, 80.0, 1600)])
def test_shift_witness_matches_oracles(b, t0, X, N):
    g = build_grid(X, N)
    rep = Y.quasimode_witness(RightShift(1.0), Y.SymbolFunction.for_shift(1.0), 0.0, np.pi, b, t0, g, constant())
    assert rep.lam == pytest.approx(-1)
    assert rep.residual == pytest.approx(continuous_shift_residual(b, t0), rel=1e-3)
    # the cutoff-free full-line value sqrt(2 (1 - exp(-b^2/4))) is a lower bound reached as t0 grows
    ideal = np.sqrt(2 * (1 - np.exp(-(b**2) / 4)))
    assert ideal <= rep.residual <= 1.05 * ideal
    assert rep.passed and rep.exact_tilt


def test_shift_witness_refines():
    sym = Y.SymbolFunction.for_shift(1.0)
    a = Y.quasimode_witness(RightShift(1.0), sym, 0.0, np.pi, 0.25, 10.0, build_grid(40, 800), constant())
    b = Y.quasimode_witness(RightShift(1.0), sym, 0.0, np.pi, 0.125, 20.0, build_grid(80, 1600), constant())
    assert b.residual <= 1.1 * a.residual
    assert b.residual < a.residual


def test_bump_witness():
    g = build_grid(40, 800)
    K = gaussian_bump(g.h)
    sym = Y.SymbolFunction.for_kernel(K)
    rep = Y.quasimode_witness(Convolution(K), sym, 0.0, 0.0, 0.25, 10.0, g, constant())
    assert rep.lam == pytest.approx(sym(0.0))
    assert rep.residual <= 0.1
    # the assembled matrix gives the same residual as the operator description
    rep2 = Y.quasimode_witness(assemble_matrix(Convolution(K), g, constant()), sym, 0.0, 0.0, 0.25, 10.0, g, constant())
    assert rep2.residual == pytest.approx(rep.residual, rel=1e-10)


def test_tilted_witness_exponential_weight():
    g = build_grid(40, 800)
    w = exponential(1.0)
    strip = Y.strip_U(*orders(w))
    rep = Y.quasimode_witness(RightShift(1.0), Y.SymbolFunction.for_shift(1.0), 1.0, np.pi, 0.25, 10.0, g, w, strip=strip)
    assert rep.exact_tilt and rep.lam == pytest.approx(-np.e)
    # with w e^{-x} constant, S f - lam f = e (F(. - 1) + F) in the weighted norm
    base = Y.quasimode_witness(RightShift(1.0), Y.SymbolFunction.for_shift(1.0), 0.0, np.pi, 0.25, 10.0, g, constant())
    assert rep.residual == pytest.approx(np.e * base.residual, rel=1e-10)
    with pytest.raises(Y.StripError):
        Y.quasimode_witness(RightShift(1.0), Y.SymbolFunction.for_shift(1.0), 0.0, np.pi, 0.25, 10.0, g, w, strip=strip)


def test_out_of_band_mass_at_default_geometry():
    g = build_grid(40, 800)
    F = packet(g.nodes, 0.25, 10.0, np.pi)
    band, out, total, perr = Y.packet_spectrum_mass(F, g, np.pi, 1.0)
    assert out <= 0.02 * total
    assert band + out == pytest.approx(total, rel=1e-12)
    assert perr <= 1e-10


def test_out_of_band_mass_gaussian_tail():
    # with t0 = 20 the cutoff ramps sit where the Gaussian is below e^-12,
    # so |F^|^2 is a Gaussian of variance b^2/2 and the tail fraction is erfc(delta / b)
    g = build_grid(80, 1600)
    b = 0.25
    F = packet(g.nodes, b, 20.0, np.pi)
    for delta in (0.25, 0.5, 1.0):
        band, out, total, _ = Y.packet_spectrum_mass(F, g, np.pi, delta)
        assert out / total == pytest.approx(erfc(delta / b), abs=1e-6)


# ------------------------------------------------------------ inclusion scans


def test_inclusion_outside_point():
    rep = Y.spectrum_inclusion_scan(RightShift(1.0), constant(), 0.05, [100, 200, 400], [2.0])
    assert rep.samples[0]["class"] == "outside-consistent"
    assert min(rep.samples[0]["sigma_min"]) >= 1.0


def test_inclusion_deep_interior_consistent():
    r, l = orders(constant())
    sym = Y.SymbolFunction.for_shift(1.0)
    z, lam = Y.symbol_image_samples(sym, Y.strip_O(r, l), 50, inner_margin=0.6)
    assert np.all(np.abs(lam) <= np.exp(-0.6) + 1e-12)
    rep = Y.spectrum_inclusion_scan(RightShift(1.0), constant(), 0.05, [100, 200, 400], lam, z)
    assert rep.fraction == 1.0


def test_inclusion_left_shift_radius():
    w = exponential(-1.0)
    r, l = orders(w)
    sym = Y.SymbolFunction.for_shift(1.0, "left")
    z, lam = Y.symbol_image_samples(sym, Y.strip_V(r, l), 20, inner_margin=1.0)
    assert np.all(np.abs(lam) <= np.e * np.exp(-1.0) + 1e-9)
    rep = Y.spectrum_inclusion_scan(LeftShift(1.0), w, 0.05, [100, 200, 400], lam, z)
    assert rep.fraction == 1.0


def test_symbol_image_samples_deterministic():
    r, l = orders(constant())
    s = Y.strip_O(r, l)
    sym = Y.SymbolFunction.for_shift(1.0)
    a = Y.symbol_image_samples(sym, s, 10)
    b = Y.symbol_image_samples(sym, s, 10)
    np.testing.assert_array_equal(a[1], b[1])
    with pytest.raises(Y.StripError):
        Y.symbol_image_samples(sym, s, 10, inner_margin=5.0)
