"""Weight families on the half line and translation-ratio diagnostics.

A weight is stored through its logarithm so that ratios
``w(x + t) / w(x)`` can be formed as ``exp(log w(x + t) - log w(x))``
without overflowing for fast-growing weights.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

FAMILIES = ("constant", "exponential", "polynomial", "oscillatory", "custom")

#: relative change of the ratio bounds tolerated between the two widest windows
STABILIZATION_TOL = 0.05


class WeightRangeError(ArithmeticError):
    """Weight evaluation overflowed or underflowed to a non-positive value."""


@dataclass(frozen=True)
class Weight:
    """Positive continuous weight on [0, inf).

    Use the constructors :func:`constant`, :func:`exponential`,
    :func:`polynomial`, :func:`oscillatory` or :func:`custom` rather than
    instantiating directly.
    """

    family: str
    log_func: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    params: tuple = ()
    known_orders: Optional[tuple[float, float]] = None
    name: str = ""

    def log(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("weight evaluated at negative x")
        return np.asarray(self.log_func(x), dtype=float)

    def __call__(self, x):
        return evaluate_weight(self, x)

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if not self.params:
            return self.family
        args = ",".join(f"{k}={v:g}" for k, v in self.params)
        return f"{self.family}({args})"

    def describe(self) -> dict:
        d = {"family": self.family, "name": self.label}
        d.update(dict(self.params))
        if self.known_orders is not None:
            d["known_orders"] = list(self.known_orders)
        return d


def constant() -> Weight:
    return Weight("constant", lambda x: np.zeros_like(x), known_orders=(0.0, 0.0))


def exponential(rate: float) -> Weight:
    """w(x) = exp(rate * x); ground orders are (rate, -rate)."""
    rate = float(rate)
    return Weight(
        "exponential",
        lambda x: rate * x,
        params=(("rate", rate),),
        known_orders=(rate, -rate),
    )


def polynomial(exponent: float) -> Weight:
    """w(x) = (1 + x) ** exponent; both ground orders vanish."""
    k = float(exponent)
    return Weight(
        "polynomial",
        lambda x: k * np.log1p(x),
        params=(("exponent", k),),
        known_orders=(0.0, 0.0),
    )


def _oscillatory_log(gamma):
    def f(x):
        L = np.log1p(x)
        return gamma * x * np.sin(L) / (1.0 + L)

    return f


def oscillatory(gamma: float = 1.0) -> Weight:
    """w(x) = exp(gamma x sin(ln(1+x)) / (1 + ln(1+x))).

    The exponent has a bounded derivative, so every translation ratio is
    bounded; the ground orders are zero but are approached only
    logarithmically, which makes finite-window estimates nontrivial.
    """
    gamma = float(gamma)
    return Weight("oscillatory", _oscillatory_log(gamma), params=(("gamma", gamma),))


def custom(
    func: Optional[Callable] = None,
    *,
    log_func: Optional[Callable] = None,
    name: str = "custom",
    known_orders: Optional[tuple[float, float]] = None,
) -> Weight:
    """Register a user weight, given either ``func`` or its logarithm."""
    if (func is None) == (log_func is None):
        raise ValueError("give exactly one of func or log_func")
    if log_func is None:

        def log_func(x, _f=func):
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                return np.log(np.asarray(_f(x), dtype=float))

    return Weight("custom", log_func, known_orders=known_orders, name=name)


BUILTINS = {
    "constant": constant,
    "exponential": exponential,
    "polynomial": polynomial,
    "oscillatory": oscillatory,
}


def builtin_weights() -> list[Weight]:
    """The four built-in families at their default parameters."""
    return [constant(), exponential(1.0), exponential(-1.0), polynomial(2.0), oscillatory(1.0)]


def from_config(cfg: dict) -> Weight:
    """Build a weight from flat ``weight.*`` keys."""
    family = cfg.get("weight.family", "constant")
    if family == "constant":
        return constant()
    if family == "exponential":
        return exponential(float(cfg.get("weight.rate", 1.0)))
    if family == "polynomial":
        return polynomial(float(cfg.get("weight.exponent", 2.0)))
    if family == "oscillatory":
        return oscillatory(float(cfg.get("weight.gamma", 1.0)))
    raise ValueError(f"unknown weight family {family!r}")


def evaluate_weight(w: Weight, x):
    """Return w(x), raising :class:`WeightRangeError` on overflow."""
    lw = w.log(x)
    with np.errstate(over="ignore"):
        val = np.exp(lw)
    if not np.all(np.isfinite(val)) or np.any(val <= 0):
        raise WeightRangeError(f"{w.label} weight out of floating range")
    return val if np.ndim(val) else float(val)


def log_ratios(w: Weight, x: np.ndarray, t: float) -> np.ndarray:
    """log(w(x + t) / w(x)) evaluated exactly at the points ``x``."""
    x = np.asarray(x, dtype=float)
    return w.log(x + t) - w.log(x)


def ratio_bounds(w: Weight, t: float, grid) -> tuple[float, float]:
    """Min and max of w(x + t)/w(x) over grid nodes with x + t <= X."""
    if not 0 < t < grid.X:
        raise ValueError(f"shift t={t} must lie in (0, X={grid.X})")
    x = grid.nodes[grid.nodes + t <= grid.X * (1 + 1e-12)]
    lr = log_ratios(w, x, t)
    with np.errstate(over="ignore"):
        return float(np.exp(lr.min())), float(np.exp(lr.max()))


@dataclass
class ProbeRecord:
    t: float
    inf_ratio: float
    sup_ratio: float
    windows: list = field(default_factory=list)
    passed: bool = True
    growth: bool = False


@dataclass
class AdmissibilityReport:
    weight: str
    records: list[ProbeRecord]
    passed: bool
    growth_flag: bool
    tolerance: float = STABILIZATION_TOL

    def to_dict(self) -> dict:
        return {
            "weight": self.weight,
            "verdict": "pass" if self.passed else "fail",
            "growth_flag": self.growth_flag,
            "tolerance": self.tolerance,
            "probes": [
                {
                    "t": r.t,
                    "inf_ratio": r.inf_ratio,
                    "sup_ratio": r.sup_ratio,
                    "windows": r.windows,
                    "passed": r.passed,
                    "growth": r.growth,
                }
                for r in self.records
            ],
        }


def _rel_change(a, b):
    if not (np.isfinite(a) and np.isfinite(b)):
        return np.inf
    return abs(b - a) / max(abs(a), abs(b), 1e-300)


def admissibility_check(
    w: Weight,
    probes: Sequence[float],
    X: float = 20.0,
    N: int = 400,
    scales: Sequence[int] = (1, 2, 4),
    tol: float = STABILIZATION_TOL,
) -> AdmissibilityReport:
    """Certify the translation-ratio condition on widening windows.

    The grid spacing ``X / N`` is held fixed while the window grows through
    ``X * s`` for ``s`` in ``scales``.  A probe passes when both ratio bounds
    change by less than ``tol`` (relative) between the two widest windows and
    stay finite and positive.
    """
    from .grid import build_grid

    if len(probes) == 0:
        raise ValueError("probes must be nonempty")
    records = []
    for t in probes:
        windows = []
        for s in scales:
            g = build_grid(X * s, N * s)
            lr = log_ratios(w, g.nodes[g.nodes + t <= g.X * (1 + 1e-12)], t)
            with np.errstate(over="ignore"):
                lo, hi = float(np.exp(np.min(lr))), float(np.exp(np.max(lr)))
            windows.append({"X": g.X, "inf_ratio": lo, "sup_ratio": hi})
        lo1, hi1 = windows[-2]["inf_ratio"], windows[-2]["sup_ratio"]
        lo2, hi2 = windows[-1]["inf_ratio"], windows[-1]["sup_ratio"]
        growth = _rel_change(hi1, hi2) >= tol
        decay = _rel_change(lo1, lo2) >= tol or not lo2 > 0
        ok = np.isfinite(hi2) and lo2 > 0 and not growth and not decay
        records.append(ProbeRecord(float(t), lo2, hi2, windows, bool(ok), bool(growth)))
    return AdmissibilityReport(
        w.label,
        records,
        all(r.passed for r in records),
        any(r.growth for r in records),
        tol,
    )
