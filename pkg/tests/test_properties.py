"""Property-based checks of the structural invariants."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from wienerhopf.grid import GridFunction, build_grid, grid_with_spacing, to_isometric, weighted_inner
from wienerhopf.operators import (
    Convolution,
    LeftShift,
    RightShift,
    apply_operator,
    assemble_matrix,
    gaussian_bump,
    operator_norm,
)
from wienerhopf.spectra import pseudospectrum
from wienerhopf.symbols import convolution_symbol, packet_spectrum_mass
from wienerhopf.weights import builtin_weights, custom, exponential, oscillatory, polynomial

G = build_grid(10, 200)
WEIGHTS = builtin_weights()
weight_st = st.sampled_from(WEIGHTS)
steps_st = st.integers(1, 40)
seed_st = st.integers(0, 2**32 - 1)
FAST = settings(max_examples=25, deadline=None)


def random_function(seed, weight, grid=G, support=None):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(grid.N) + 1j * rng.standard_normal(grid.N)
    if support is not None:
        v[grid.nodes > support] = 0
    return GridFunction(v, grid, weight)


@FAST
@given(weight_st, seed_st)
def test_isometry(w, seed):
    f = random_function(seed, w)
    assert np.isclose(np.linalg.norm(to_isometric(f)) ** 2, weighted_inner(f, f).real, rtol=1e-12)


@FAST
@given(weight_st, seed_st, st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_sesquilinear(w, seed, c):
    f, g = random_function(seed, w), random_function(seed + 1, w)
    assert np.isclose(weighted_inner(c * f, g), c * weighted_inner(f, g), rtol=1e-10, atol=1e-10)
    assert np.isclose(weighted_inner(f, c * g), np.conj(c) * weighted_inner(f, g), rtol=1e-10, atol=1e-10)
    assert np.isclose(weighted_inner(f, g), np.conj(weighted_inner(g, f)), rtol=1e-12)


@FAST
@given(weight_st, steps_st, steps_st)
def test_submultiplicative_and_semigroup(w, k1, k2):
    h = G.h
    A = assemble_matrix(RightShift(k1 * h), G, w)
    B = assemble_matrix(RightShift(k2 * h), G, w)
    AB = assemble_matrix(RightShift((k1 + k2) * h), G, w)
    # S_s S_t = S_{s+t} exactly on the section
    np.testing.assert_allclose((A @ B).matrix, AB.matrix, rtol=1e-12, atol=0)
    assert operator_norm(AB) <= operator_norm(A) * operator_norm(B) * (1 + 1e-12)


@FAST
@given(weight_st, steps_st, st.floats(0.1, 3.0), st.floats(0, 2 * np.pi))
def test_circular_symmetry(w, k, r, theta):
    for spec in (RightShift(k * G.h), LeftShift(k * G.h)):
        M = assemble_matrix(spec, G, w)
        s = pseudospectrum(M, [r, r * np.exp(1j * theta)]).sigma_min
        assert abs(s[0] - s[1]) <= 1e-10 * max(1.0, s[0])


@FAST
@given(weight_st, steps_st, st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_left_right_duality(w, k, z):
    # P+ S_-t on L2_w is unitarily the adjoint of S_t on L2_{1/w}
    inv = custom(log_func=lambda x, _w=w: -_w.log(x), name="inverse")
    L = assemble_matrix(LeftShift(k * G.h), G, w)
    R = assemble_matrix(RightShift(k * G.h), G, inv)
    a = pseudospectrum(L, [z]).sigma_min[0]
    b = pseudospectrum(R, [np.conj(z)]).sigma_min[0]
    assert abs(a - b) <= 1e-10 * max(1.0, a)


@FAST
@given(st.sampled_from([0.3, 0.5, 0.6]), st.floats(0, 2 * np.pi))
def test_monotone_filling(r, theta):
    # inside the unit disk sigma_min only shrinks as the section grows
    z = r * np.exp(1j * theta)
    seq = [pseudospectrum(assemble_matrix(RightShift(1.0), grid_with_spacing(0.05, n), WEIGHTS[0]), [z]).sigma_min[0] for n in (100, 200, 400)]
    assert seq[0] >= seq[1] >= seq[2]


@FAST
@given(weight_st, steps_st, st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False))
def test_neumann_bound(w, k, z):
    M = assemble_matrix(RightShift(k * G.h), G, w)
    nm = operator_norm(M)
    s = pseudospectrum(M, [z]).sigma_min[0]
    assert s >= abs(z) - nm - 1e-9


@FAST
@given(
    st.sampled_from([exponential(0.5), polynomial(2.0), oscillatory(1.0)]),
    st.integers(1, 20),
    seed_st,
)
def test_annulus_inequality_interior(w, k, seed):
    # inf ratio * ||f|| <= ||S_t f|| <= sup ratio * ||f|| for f supported away from the window end
    t = k * G.h
    f = random_function(seed, w, support=G.X - t - G.h)
    Sf = apply_operator(RightShift(t), f)
    lw = w.log(G.nodes)
    d = lw[k:] - lw[:-k]
    lo, hi = np.exp(d.min()), np.exp(d.max())
    assert lo * f.norm() * (1 - 1e-12) <= Sf.norm() <= hi * f.norm() * (1 + 1e-12)


@FAST
@given(st.floats(-2, 2), st.floats(0.3, 1.5), st.floats(-1, 1), st.floats(-0.5, 0.5), seed_st)
def test_symbol_linearity(c1, hw, center, a, seed):
    h = 0.05
    k1, k2 = gaussian_bump(h, 0.0), gaussian_bump(h, center, hw)
    xi = np.random.default_rng(seed).uniform(-5, 5, 7)
    lhs = convolution_symbol(c1 * k1 + k2, a, xi)
    rhs = c1 * convolution_symbol(k1, a, xi) + convolution_symbol(k2, a, xi)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@FAST
@given(steps_st, st.floats(-0.5, 0.5), st.floats(-3, 3))
def test_convention_lock(k, a, xi):
    from wienerhopf.operators import delta_kernel
    from wienerhopf.symbols import shift_symbol

    t = k * 0.05
    got = convolution_symbol(delta_kernel(0.05, t), a, [xi])[0]
    assert abs(got - shift_symbol(t, "right", xi + 1j * a)) <= 1e-12 * max(1.0, abs(got))


@FAST
@given(seed_st, st.floats(-3, 3), st.floats(0.1, 2.0))
def test_parseval_split(seed, eta0, delta):
    g = build_grid(10, 200)
    F = np.random.default_rng(seed).standard_normal(200) + 0j
    band, out, total, perr = packet_spectrum_mass(F, g, eta0, delta)
    assert perr <= 1e-10
    assert band <= total * (1 + 1e-6)


@FAST
@given(weight_st, st.floats(-1.5, 1.5), seed_st)
def test_convolution_matrix_consistency(w, center, seed):
    spec = Convolution(gaussian_bump(G.h, center, 0.5))
    f = random_function(seed, w, support=6.0)
    M = assemble_matrix(spec, G, w)
    ref = to_isometric(apply_operator(spec, f))
    assert np.linalg.norm(M.matrix @ to_isometric(f) - ref) <= 1e-11 * max(1.0, np.linalg.norm(ref))


@FAST
@given(weight_st, steps_st, seed_st, st.complex_numbers(min_magnitude=0.2, max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_factorization_on_interior_vectors(w, k, seed, z):
    # (L - 1/z) u = (1/z) L (z - S) u, hence ||(L - 1/z) u|| <= |z|^-1 ||L|| ||(z - S) u||
    t = k * G.h
    S = assemble_matrix(RightShift(t), G, w).matrix
    L = assemble_matrix(LeftShift(t), G, w).matrix
    u = to_isometric(random_function(seed, w, support=G.X - t - G.h))
    lhs = (L - np.eye(G.N) / z) @ u
    np.testing.assert_allclose(lhs, L @ ((z * np.eye(G.N) - S) @ u) / z, atol=1e-12 * np.abs(u).max())
    bound = np.linalg.norm(L, 2) * np.linalg.norm((z * np.eye(G.N) - S) @ u) / abs(z)
    assert np.linalg.norm(lhs) <= bound + 1e-9 * np.linalg.norm(u)
