"""Symbols of shift and convolution operators on strips of the complex plane.

Fourier convention: ``F f(xi) = int f(t) exp(-i xi t) dt`` with the inverse
carrying ``1 / (2 pi)``.  For a tilt ``a`` the symbol on the line
``Im z = a`` is the transform of ``phi(t) exp(a t)``, so ``h(z)`` is the
analytic continuation ``int phi(t) exp(-i z t) dt``.  Under this convention
the right shift by ``t`` has symbol ``exp(-i t z)`` and the left shift
``exp(i t z)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .grid import Grid, GridFunction, cutoff_window, grid_with_spacing, wave_packet
from .operators import (
    Kernel,
    MatrixOperator,
    apply_operator,
    assemble_matrix,
    describe,
    operator_norm,
)
from .spectra import GrowthEstimate, non_increasing, pseudospectrum
from .weights import Weight

#: slack in the norm bound max |h_a| <= (1 + BOUND_SLACK) ||T||
BOUND_SLACK = 0.05
#: sampled tilts may leave the measured strip by at most this much
STRIP_MARGIN = 0.1
#: finite-difference step of the Cauchy-Riemann check
CR_STEP = 1e-3
CR_TOL = 1e-4
#: sigma_min below which a symbol value counts as numerically in the spectrum
INCLUSION_TOL = 1e-3
DELTA_CHOICES = (0.25, 0.5, 1.0, 2.0)


class StripError(ValueError):
    pass


class TiltOverflowError(ValueError):
    def __init__(self, msg, a):
        super().__init__(msg)
        self.a = a


# --------------------------------------------------------------------------
# evaluation


def shift_symbol(t: float, sign: str, z):
    """exp(-i t z) for the right shift, exp(i t z) for the left shift."""
    z = np.asarray(z, dtype=complex)
    if sign == "right":
        return np.exp(-1j * t * z)
    if sign == "left":
        return np.exp(1j * t * z)
    raise ValueError("sign must be 'right' or 'left'")


def _check_tilt(kernel: Kernel, a: float):
    s = kernel.positions
    base = np.abs(kernel.values)
    with np.errstate(over="ignore", invalid="ignore"):
        tilted = base * np.exp(a * s)
    if not np.all(np.isfinite(tilted)):
        raise TiltOverflowError(f"tilt a={a} overflows the kernel", a)
    peak_b, peak_t = base.max(), tilted.max()
    if peak_t == 0:
        return
    edge_b = max(base[0], base[-1]) / peak_b
    edge_t = max(tilted[0], tilted[-1]) / peak_t
    # only reject when the tilt itself destroys decay at the edges
    if edge_t > 1e-14 and edge_t > 10 * max(edge_b, 1e-300):
        raise TiltOverflowError(f"tilt a={a} lifts the kernel edges to {edge_t:.2e} of the peak", a)


def convolution_symbol(kernel: Kernel, a: float, xi, chunk: int = 4096) -> np.ndarray:
    """h * sum_m phi(s_m) exp(a s_m) exp(-i xi s_m) on the kernel samples.

    This is the exact symbol of the sampled (Toeplitz) operator and equals the
    trapezoid rule whenever the kernel vanishes at its support ends.
    """
    _check_tilt(kernel, a)
    s = kernel.positions
    wts = kernel.h * kernel.values * np.exp(a * s)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.empty(xi.size, dtype=complex)
    for i in range(0, xi.size, chunk):
        out[i : i + chunk] = np.exp(-1j * np.outer(xi[i : i + chunk], s)) @ wts
    return out


@dataclass(frozen=True, eq=False)
class SymbolFunction:
    """h(z) = h_{Im z}(Re z) for a shift or a sampled kernel."""

    kind: str
    t: float = 0.0
    sign: str = "right"
    kernel: Optional[Kernel] = None

    @classmethod
    def for_shift(cls, t: float, sign: str = "right") -> "SymbolFunction":
        return cls("shift", float(t), sign)

    @classmethod
    def for_kernel(cls, kernel: Kernel) -> "SymbolFunction":
        return cls("kernel", kernel=kernel)

    @classmethod
    def for_spec(cls, spec) -> "SymbolFunction":
        from .operators import Convolution, LeftShift, RightShift

        if isinstance(spec, RightShift):
            return cls.for_shift(spec.t, "right")
        if isinstance(spec, LeftShift):
            return cls.for_shift(spec.t, "left")
        if isinstance(spec, Convolution):
            return cls.for_kernel(spec.kernel)
        raise TypeError(f"no symbol for {spec!r}")

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "shift":
            return shift_symbol(self.t, self.sign, z)
        flat = z.ravel()
        out = np.empty(flat.size, dtype=complex)
        for a in np.unique(flat.imag):
            sel = flat.imag == a
            out[sel] = convolution_symbol(self.kernel, float(a), flat.real[sel])
        return out.reshape(z.shape)

    def on_line(self, a: float, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if self.kind == "shift":
            return shift_symbol(self.t, self.sign, xi + 1j * a)
        return convolution_symbol(self.kernel, a, xi)

    @property
    def period(self) -> Optional[float]:
        """Period in Re z (the sampled symbols are trigonometric sums)."""
        if self.kind == "shift":
            return 2 * np.pi / self.t
        return 2 * np.pi / self.kernel.h

    @property
    def width(self) -> float:
        if self.kind == "shift":
            return self.t
        lo, hi = self.kernel.support
        return max(hi - lo, self.kernel.h)

    def describe(self) -> dict:
        if self.kind == "shift":
            return {"kind": "shift", "t": self.t, "sign": self.sign}
        return {"kind": "kernel", "kernel": self.kernel.label, "support": list(self.kernel.support)}


# --------------------------------------------------------------------------
# strips


@dataclass(frozen=True)
class StripSpec:
    """Tilts ``a_min <= Im z <= a_max`` tied to measured ground orders."""

    a_min: float
    a_max: float
    alpha0: float
    alpha1: float
    kind: str = "U"

    def __post_init__(self):
        if self.a_min > self.a_max:
            raise StripError(f"empty strip [{self.a_min}, {self.a_max}]")

    @property
    def degenerate(self) -> bool:
        return self.a_max - self.a_min < 1e-12

    def tilts(self, n: int = 5) -> np.ndarray:
        if self.degenerate:
            return np.array([0.5 * (self.a_min + self.a_max)])
        return np.linspace(self.a_min, self.a_max, n)

    def check(self, a: float):
        lo, hi = -self.alpha1 - STRIP_MARGIN, self.alpha0 + STRIP_MARGIN
        if not lo <= a <= hi:
            raise StripError(f"tilt a={a} lies outside the measured strip [{lo:g}, {hi:g}] (margin included)")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "a_min": self.a_min, "a_max": self.a_max, "alpha0": self.alpha0, "alpha1": self.alpha1}


def strip_U(right: GrowthEstimate, left: GrowthEstimate) -> StripSpec:
    """[-alpha1, alpha0]; collapses to its midpoint if the estimates cross."""
    a0, a1 = right.alpha_hat, left.alpha_hat
    lo, hi = -a1, a0
    if lo > hi:
        lo = hi = 0.5 * (lo + hi)
    return StripSpec(lo, hi, a0, a1, "U")


def strip_O(right: GrowthEstimate, left: GrowthEstimate, depth: float = 2.0) -> StripSpec:
    """Lower half-plane Im z < alpha0, cut at ``alpha0 - depth`` for sampling."""
    a0 = right.alpha_hat
    return StripSpec(a0 - depth, a0, a0, left.alpha_hat, "O")


def strip_V(right: GrowthEstimate, left: GrowthEstimate, depth: float = 2.0) -> StripSpec:
    """Upper half-plane Im z > -alpha1, cut at ``-alpha1 + depth`` for sampling."""
    a1 = left.alpha_hat
    return StripSpec(-a1, -a1 + depth, right.alpha_hat, a1, "V")


# --------------------------------------------------------------------------
# bound check


def line_max(symbol: SymbolFunction, a: float, rel_tol: float = 0.01, max_doublings: int = 12):
    """max over xi of |h_a(xi)| with an adaptively doubled xi window.

    Returns ``(max, xi_at_max, stabilized)``.  The window is capped at one
    period of the symbol, which makes the scan exhaustive.
    """
    half_period = 0.5 * symbol.period
    density = 64.0 * max(1.0, symbol.width)
    L = min(8.0, half_period)
    prev = None
    for _ in range(max_doublings + 1):
        n = int(2 * L * density) + 1
        xi = np.linspace(-L, L, n)
        v = np.abs(symbol.on_line(a, xi))
        i = int(np.argmax(v))
        cur = float(v[i])
        if L >= half_period:
            return cur, float(xi[i]), True
        if prev is not None and abs(cur - prev) <= rel_tol * max(cur, 1e-300):
            return cur, float(xi[i]), True
        prev = cur
        L = min(2 * L, half_period)
    return cur, float(xi[i]), False


def cauchy_riemann_residual(symbol: SymbolFunction, z: complex, step: float = CR_STEP) -> float:
    """Relative residual |d_y h - i d_x h| from central differences."""
    hx = (symbol(z + step) - symbol(z - step)) / (2 * step)
    hy = (symbol(z + 1j * step) - symbol(z - 1j * step)) / (2 * step)
    scale = max(abs(symbol(z)), abs(hx), 1e-300)
    return float(abs(hy - 1j * hx) / scale)


@dataclass
class BoundCheck:
    operator_norm: float
    rows: list
    cr_residual: float
    passed: bool
    inconclusive: bool
    slack: float = BOUND_SLACK

    @property
    def status(self) -> str:
        if not self.passed:
            return "fail"
        return "inconclusive" if self.inconclusive else "pass"

    @property
    def max_ratio(self) -> float:
        return max(r["ratio"] for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "operator_norm": self.operator_norm,
            "rows": self.rows,
            "cr_residual": self.cr_residual,
            "cr_tol": CR_TOL,
            "slack": self.slack,
            "status": self.status,
        }


def symbol_bound_check(T, symbol: SymbolFunction, strip: StripSpec, tilts: Optional[Sequence[float]] = None) -> BoundCheck:
    """Compare sup over each sampled line of |h_a| with ||T||.

    Also runs a finite-difference Cauchy-Riemann check of ``h`` at points on
    the sampled lines.
    """
    tilts = strip.tilts() if tilts is None else np.asarray(tilts, dtype=float)
    for a in tilts:
        strip.check(float(a))
    norm = operator_norm(T)
    rows = []
    inconclusive = False
    for a in tilts:
        m, at, ok = line_max(symbol, float(a))
        inconclusive |= not ok
        rows.append(
            {
                "a": float(a),
                "max_abs_symbol": m,
                "argmax_xi": at,
                "ratio": m / norm if norm > 0 else np.inf,
                "stabilized": ok,
                "holds": m <= (1 + BOUND_SLACK) * norm,
            }
        )
    scale = 1.0 / max(symbol.width, 1.0)
    cr = 0.0
    for a in tilts:
        for xi in (-2.0, -0.7, 0.3, 1.5):
            cr = max(cr, cauchy_riemann_residual(symbol, complex(xi * scale, a)))
    passed = all(r["holds"] for r in rows) and cr <= CR_TOL
    return BoundCheck(norm, rows, cr, passed, inconclusive)


# --------------------------------------------------------------------------
# quasimodes


@dataclass
class QuasimodeReport:
    lam: complex
    a: float
    eta0: float
    b: float
    t0: float
    X: float
    N: int
    residual: float
    eps: float
    delta: float
    in_band_dev: float
    global_dev: float
    out_of_band: float
    packet_norm_sq: float
    parseval_error: float
    tolerance: float
    cutoff_c1: float
    exact_tilt: bool

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance

    @property
    def concentrated(self) -> bool:
        """Out-of-band mass at most ``eps`` times the packet energy."""
        return self.out_of_band <= self.eps * self.packet_norm_sq

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "lam"}
        d["lambda"] = [self.lam.real, self.lam.imag]
        d["passed"] = self.passed
        d["concentrated"] = self.concentrated
        return d


def _packet_spectrum(F: np.ndarray, x: np.ndarray, h: float, xi: np.ndarray) -> np.ndarray:
    out = np.empty(xi.size, dtype=complex)
    for i in range(0, xi.size, 2048):
        out[i : i + 2048] = h * (np.exp(-1j * np.outer(xi[i : i + 2048], x)) @ F)
    return out


def packet_spectrum_mass(F: np.ndarray, grid: Grid, eta0: float, delta: float, n_band: int = 4001):
    """Split ``(1/2pi) int |F^|^2`` into the band |xi - eta0| <= delta and the rest.

    The total over one period equals ``h sum |F_j|^2`` exactly (discrete
    Parseval); it is also evaluated by FFT quadrature and the discrepancy
    returned as a normalization check.
    """
    h = grid.h
    x = grid.nodes
    total = float(h * np.sum(np.abs(F) ** 2))
    xi = np.linspace(eta0 - delta, eta0 + delta, n_band)
    band = float(trapezoid(np.abs(_packet_spectrum(F, x, h, xi)) ** 2, xi) / (2 * np.pi))
    M = 4 * grid.N
    # F^ on the uniform grid eta0 + 2 pi m / (M h): exact trapezoid for the trig polynomial
    Fh = h * np.fft.fft(F * np.exp(-1j * eta0 * x), M)
    full = float(np.sum(np.abs(Fh) ** 2) * (2 * np.pi / (M * h)) / (2 * np.pi))
    return band, max(total - band, 0.0), total, abs(full - total) / max(total, 1e-300)


def _deviation(symbol, a, eta0, lam, delta):
    xi = np.linspace(eta0 - delta, eta0 + delta, 801)
    in_band = float(np.max(np.abs(symbol.on_line(a, xi) - lam)))
    half = 0.5 * symbol.period
    xi_all = np.linspace(eta0 - half, eta0 + half, int(2 * half * 64 * max(1, symbol.width)) + 1)
    glob = float(np.max(np.abs(symbol.on_line(a, xi_all) - lam)))
    return in_band, max(glob, in_band)


def quasimode_witness(
    T,
    symbol: SymbolFunction,
    a: float,
    eta0: float,
    b: float,
    t0: float,
    grid: Grid,
    weight: Weight,
    eps: float = 0.1,
    delta: Optional[float] = None,
    strip: Optional[StripSpec] = None,
) -> QuasimodeReport:
    """Residual of ``T - lambda`` on a cut-off, tilted wave packet.

    ``F`` is the cutoff times the Gaussian packet and ``f = F exp(-a x)``;
    ``lambda = h(eta0 + i a)``.  The tolerance is the spectral bound

        sqrt(dev_in^2 * in_band + dev_all^2 * out_of_band) / ||F||

    with ``dev_in`` the deviation of ``h_a`` from ``lambda`` on the band and
    ``dev_all`` its global maximum; it ignores the half-line projection and
    is exact in form only when ``w(x) exp(-a x)`` is constant.  Without an
    explicit ``delta`` the band width in ``DELTA_CHOICES`` giving the tightest
    bound is used.  ``eps`` only sets the ``concentrated`` flag.
    """
    if strip is not None:
        strip.check(a)
    if isinstance(T, MatrixOperator) and (T.grid != grid):
        raise ValueError("operator and witness live on different grids")
    phi = cutoff_window(grid, t0)
    g = wave_packet(grid, eta0, b, t0)
    F = phi.samples * g.samples
    x = grid.nodes
    f = GridFunction(F * np.exp(-a * x), grid, weight)
    lam = complex(symbol(complex(eta0, a)))
    Tf = T.apply(f) if isinstance(T, MatrixOperator) else apply_operator(T, f)
    residual = (Tf - lam * f).norm() / f.norm()

    def bound(d):
        dev_in, dev_all = _deviation(symbol, a, eta0, lam, d)
        band, out, total, perr = packet_spectrum_mass(F, grid, eta0, d)
        tol = float(np.sqrt(dev_in**2 * band + dev_all**2 * out) / np.sqrt(total))
        return tol, dev_in, dev_all, out, total, perr

    if delta is None:
        # the bound holds for every band width; keep the tightest one
        delta = min(DELTA_CHOICES, key=lambda d: bound(d)[0])
    tol, dev_in, dev_all, out, total, perr = bound(delta)

    from .grid import CUTOFF_C1

    lw = weight.log(x) - a * x
    exact = bool(np.ptp(lw) < 1e-9 * max(1.0, np.max(np.abs(lw))))
    return QuasimodeReport(
        lam, float(a), float(eta0), float(b), float(t0), grid.X, grid.N, float(residual),
        float(eps), float(delta), dev_in, dev_all, out, total, perr, tol, CUTOFF_C1, exact,
    )


# --------------------------------------------------------------------------
# inclusion scans


def symbol_image_samples(symbol: SymbolFunction, strip: StripSpec, n: int, inner_margin: float = 0.0, re_range=None, seed: int = 0):
    """Draw ``n`` points of the strip interior and map them through the symbol.

    Real parts are uniform over ``re_range`` (one period by default);
    imaginary parts are uniform over the strip shrunk by ``inner_margin``
    at its finite edge(s) next to the spectral circle.
    """
    rng = np.random.default_rng(seed)
    lo, hi = strip.a_min, strip.a_max
    if strip.kind == "O":
        hi -= inner_margin
    elif strip.kind == "V":
        lo += inner_margin
    else:
        lo, hi = lo + inner_margin, hi - inner_margin
    if lo > hi:
        raise StripError("strip interior is empty after the margin")
    if re_range is None:
        p = symbol.period
        re_range = (-p / 2, p / 2)
    z = rng.uniform(*re_range, n) + 1j * rng.uniform(lo, hi, n)
    return z, symbol(z)


@dataclass
class InclusionReport:
    operator: str
    weight: str
    n_schedule: list
    norms: list
    samples: list
    tol: float = INCLUSION_TOL

    @property
    def interior(self) -> list:
        return [s for s in self.samples if s["class"] != "outside-consistent"]

    @property
    def fraction(self) -> float:
        inner = self.interior
        if not inner:
            return float("nan")
        return sum(s["class"] == "consistent" for s in inner) / len(inner)

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "weight": self.weight,
            "n_schedule": self.n_schedule,
            "norms": self.norms,
            "tol": self.tol,
            "fraction_consistent": self.fraction,
            "samples": self.samples,
        }


def spectrum_inclusion_scan(spec, weight: Weight, h: float, n_schedule, lambdas, z=None, tol: float = INCLUSION_TOL) -> InclusionReport:
    """sigma_min(lambda I - T_N) over a section schedule at fixed spacing.

    A sample is *consistent with inclusion* when the sequence does not
    increase and ends below ``tol``; a sample beyond the operator norm at
    every N whose sigma_min respects the Neumann bound is
    *outside-consistent*.
    """
    n_schedule = sorted(int(n) for n in n_schedule)
    mats = [assemble_matrix(spec, grid_with_spacing(h, n), weight) for n in n_schedule]
    norms = [operator_norm(M) for M in mats]
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=complex))
    sig = np.array([pseudospectrum(M, lambdas).sigma_min for M in mats])
    out = []
    for i, lam in enumerate(lambdas):
        s = sig[:, i]
        rec = {"lambda": [lam.real, lam.imag], "sigma_min": [float(v) for v in s]}
        if z is not None:
            rec["z"] = [z[i].real, z[i].imag]
        if np.any(np.isnan(s)):
            rec["class"] = "failed"
        elif all(abs(lam) > nm for nm in norms):
            ok = all(sv >= abs(lam) - nm - 1e-9 for sv, nm in zip(s, norms))
            rec["class"] = "outside-consistent" if ok else "inconsistent"
        elif non_increasing(s, 1e-13 * max(1.0, norms[-1])) and s[-1] <= tol:
            rec["class"] = "consistent"
        elif non_increasing(s, 1e-13 * max(1.0, norms[-1])):
            rec["class"] = "inconclusive"
        else:
            rec["class"] = "inconsistent"
        out.append(rec)
    return InclusionReport(str(describe(spec)), weight.label, n_schedule, norms, out, tol)
