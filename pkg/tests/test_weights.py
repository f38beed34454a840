import numpy as np
import pytest

from wienerhopf import weights as W
from wienerhopf.grid import build_grid


def test_evaluate_builtins():
    assert W.evaluate_weight(W.constant(), 3.7) == 1.0
    assert W.evaluate_weight(W.exponential(1.0), 2.0) == pytest.approx(np.e**2, rel=1e-14)
    assert W.evaluate_weight(W.polynomial(2.0), 1.0) == pytest.approx(4.0, rel=1e-14)


def test_negative_argument_rejected():
    with pytest.raises(ValueError):
        W.constant().log(-0.1)


def test_overflow_raises_range_error():
    with pytest.raises(W.WeightRangeError):
        W.evaluate_weight(W.exponential(1.0), 1000.0)


def test_ratio_bounds_examples():
    g = build_grid(20, 400)
    lo, hi = W.ratio_bounds(W.exponential(1.0), 1.0, g)
    assert lo == pytest.approx(np.e, rel=1e-13) and hi == pytest.approx(np.e, rel=1e-13)
    assert W.ratio_bounds(W.constant(), 5.0, g) == (1.0, 1.0)
    lo, hi = W.ratio_bounds(W.polynomial(2.0), 1.0, g)
    # largest ratio at the leftmost node x = h/2
    assert hi == pytest.approx((2.025 / 1.025) ** 2, rel=1e-13)
    assert hi == pytest.approx(3.9030, abs=1e-4)


def test_ratio_bounds_needs_t_inside_window():
    g = build_grid(20, 400)
    with pytest.raises(ValueError):
        W.ratio_bounds(W.constant(), 25.0, g)
    with pytest.raises(ValueError):
        W.ratio_bounds(W.constant(), 0.0, g)


@pytest.mark.parametrize("w", [W.exponential(1.0), W.polynomial(2.0), W.constant()])
def test_admissible_weights_pass(w):
    rep = W.admissibility_check(w, [0.05, 1.0, 2.0])
    assert rep.passed and not rep.growth_flag


def test_gaussian_growth_weight_flagged():
    w = W.custom(log_func=lambda x: np.asarray(x, dtype=float) ** 2, name="exp(x^2)")
    rep = W.admissibility_check(w, [1.0])
    assert not rep.passed and rep.growth_flag


def test_custom_requires_exactly_one_form():
    with pytest.raises(ValueError):
        W.custom()
    with pytest.raises(ValueError):
        W.custom(np.exp, log_func=lambda x: x)


def test_custom_from_values_matches_log():
    w = W.custom(lambda x: (1 + x) ** 3)
    x = np.linspace(0, 5, 11)
    np.testing.assert_allclose(w.log(x), 3 * np.log1p(x), rtol=1e-14)


def test_from_config_families():
    assert W.from_config({}).family == "constant"
    w = W.from_config({"weight.family": "exponential", "weight.rate": -1})
    assert w.known_orders == (-1.0, 1.0)
    with pytest.raises(ValueError):
        W.from_config({"weight.family": "nope"})


def test_labels_distinguish_parameters():
    assert W.exponential(1.0).label != W.exponential(-1.0).label
