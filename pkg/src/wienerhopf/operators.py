"""Shift and convolution operators on the discretized weighted half line.

Operators are described symbolically by small spec objects
(:class:`RightShift`, :class:`LeftShift`, :class:`Convolution`,
:class:`LinearCombo`), applied directly to :class:`GridFunction` samples, or
assembled into dense matrices acting on isometric coordinates.  In those
coordinates a shift is a weighted partial permutation whose nonzero entries
are the translation ratios of the weight.
"""
from __future__ import annotations

import numbers
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.linalg

from .grid import Grid, GridFunction, from_isometric, read_uniform_csv, to_isometric
from .weights import Weight

#: matrices above this size need ``allow_large=True``
MAX_DENSE_N = 4000
#: largest N for which norms use a full SVD
FULL_SVD_N = 1200
#: kernels at most this many samples long are convolved directly
DIRECT_CONV_MAX = 256


class ConvergenceError(RuntimeError):
    def __init__(self, msg, last=None, residual=None):
        super().__init__(msg)
        self.last = last
        self.residual = residual


# --------------------------------------------------------------------------
# kernels


@dataclass(frozen=True, eq=False)
class Kernel:
    """Samples of a kernel at the integer multiples ``m h`` for
    ``m = offset, ..., offset + len(values) - 1``."""

    values: np.ndarray
    offset: int
    h: float
    func: Optional[Callable] = field(default=None, repr=False)
    label: str = "kernel"

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex))
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValueError("kernel needs a nonempty 1-d sample vector")

    @property
    def positions(self) -> np.ndarray:
        return (self.offset + np.arange(self.values.size)) * self.h

    @property
    def support(self) -> tuple[float, float]:
        p = self.positions
        return float(p[0]), float(p[-1])

    def __add__(self, other: "Kernel") -> "Kernel":
        return _combine(self, other, 1.0)

    def __sub__(self, other: "Kernel") -> "Kernel":
        return _combine(self, other, -1.0)

    def __mul__(self, c) -> "Kernel":
        f = None if self.func is None else (lambda s, _f=self.func: c * _f(s))
        return Kernel(self.values * c, self.offset, self.h, f, self.label)

    __rmul__ = __mul__

    def shifted(self, s: float) -> "Kernel":
        """Kernel translated right by ``s`` (a multiple of h)."""
        m = int(round(s / self.h))
        if abs(m * self.h - s) > 1e-9 * max(1.0, abs(s)):
            raise ValueError(f"kernel shift {s} is not a multiple of h={self.h}")
        f = None if self.func is None else (lambda x, _f=self.func: _f(x - s))
        return Kernel(self.values, self.offset + m, self.h, f, f"{self.label}>>{s:g}")


def _combine(a: Kernel, b: Kernel, sign: float) -> Kernel:
    if not np.isclose(a.h, b.h, rtol=1e-12, atol=0):
        raise ValueError("kernel spacings differ")
    lo = min(a.offset, b.offset)
    hi = max(a.offset + a.values.size, b.offset + b.values.size)
    v = np.zeros(hi - lo, dtype=complex)
    v[a.offset - lo : a.offset - lo + a.values.size] += a.values
    v[b.offset - lo : b.offset - lo + b.values.size] += sign * b.values
    f = None
    if a.func is not None and b.func is not None:
        f = lambda s, fa=a.func, fb=b.func: fa(s) + sign * fb(s)
    return Kernel(v, lo, a.h, f, f"{a.label}{'+' if sign > 0 else '-'}{b.label}")


def kernel_from_function(func: Callable, h: float, lo: float, hi: float, label="kernel") -> Kernel:
    """Sample ``func`` at the multiples of ``h`` inside [lo, hi]."""
    m0 = int(np.ceil(lo / h - 1e-9))
    m1 = int(np.floor(hi / h + 1e-9))
    if m1 < m0:
        raise ValueError(f"support [{lo}, {hi}] holds no multiple of h={h}")
    pos = np.arange(m0, m1 + 1) * h
    return Kernel(np.asarray(func(pos), dtype=complex), m0, h, func, label)


#: relative height at which a bump is cut off
BUMP_FLOOR = 1e-16


def gaussian_bump(h: float, center: float = 0.0, half_width: float = 1.0, mass: float = 1.0) -> Kernel:
    """Gaussian of the given mass, truncated where it falls to 1e-16 of its peak.

    The width is chosen so the truncation happens exactly at
    ``center +/- half_width``.
    """
    sigma = half_width / np.sqrt(2 * np.log(1 / BUMP_FLOOR))
    c = mass / (sigma * np.sqrt(2 * np.pi))

    def f(s):
        s = np.asarray(s, dtype=float)
        out = c * np.exp(-0.5 * ((s - center) / sigma) ** 2)
        return np.where(np.abs(s - center) <= half_width * (1 + 1e-12), out, 0.0)

    return kernel_from_function(f, h, center - half_width, center + half_width, f"bump({center:g})")


def delta_kernel(h: float, at: float = 1.0) -> Kernel:
    """Single sample of value 1/h at ``at``, i.e. unit mass under the h-sum."""
    m = int(round(at / h))
    if abs(m * h - at) > 1e-9 * max(1.0, abs(at)):
        raise ValueError(f"delta position {at} is not a multiple of h={h}")
    return Kernel(np.array([1.0 / h]), m, h, None, f"delta({at:g})")


def read_kernel_csv(path, h: float) -> Kernel:
    """Import a kernel from a ``t,re,im`` CSV whose spacing must equal ``h``."""
    t, v, step = read_uniform_csv(path, ("t", "re", "im"))
    if abs(step - h) > 1e-9 * max(h, 1.0):
        raise ValueError(f"{path}: kernel spacing {step} differs from grid spacing {h}")
    m0 = int(round(t[0] / h))
    if abs(m0 * h - t[0]) > 1e-9 * max(1.0, abs(t[0])):
        raise ValueError(f"{path}: row 1 position {t[0]} is not a multiple of h={h}")
    return Kernel(v, m0, h, None, str(path))


def write_kernel_csv(kernel: Kernel, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "re", "im"])
        for t, v in zip(kernel.positions, kernel.values):
            w.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])


# --------------------------------------------------------------------------
# operator specs


class _SpecOps:
    def __add__(self, other):
        return LinearCombo(((1.0, self), (1.0, other)))

    def __sub__(self, other):
        return LinearCombo(((1.0, self), (-1.0, other)))

    def __rmul__(self, c):
        if not isinstance(c, numbers.Number):
            return NotImplemented
        return LinearCombo(((c, self),))


@dataclass(frozen=True)
class RightShift(_SpecOps):
    """(S_t f)(x) = f(x - t) for x >= t, else 0."""

    t: float


@dataclass(frozen=True)
class LeftShift(_SpecOps):
    """(P+ S_{-t} f)(x) = f(x + t) restricted to x >= 0."""

    t: float


@dataclass(frozen=True, eq=False)
class Convolution(_SpecOps):
    """f -> P+(phi * f)."""

    kernel: Kernel


@dataclass(frozen=True)
class LinearCombo(_SpecOps):
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((complex(c), s) for c, s in self.terms))
        if not self.terms:
            raise ValueError("empty linear combination")


OperatorSpec = Union[RightShift, LeftShift, Convolution, LinearCombo]


def describe(spec) -> dict:
    if isinstance(spec, RightShift):
        return {"variant": "RightShift", "t": spec.t}
    if isinstance(spec, LeftShift):
        return {"variant": "LeftShift", "t": spec.t}
    if isinstance(spec, Convolution):
        lo, hi = spec.kernel.support
        return {"variant": "Convolution", "kernel": spec.kernel.label, "support": [lo, hi]}
    if isinstance(spec, LinearCombo):
        return {
            "variant": "LinearCombo",
            "terms": [{"coef": [c.real, c.imag], "op": describe(s)} for c, s in spec.terms],
        }
    if isinstance(spec, MatrixOperator):
        return {"variant": "Matrix", "source": spec.label}
    raise TypeError(f"not an operator spec: {spec!r}")


def right_reach(spec) -> float:
    """How far to the right the operator can move mass."""
    if isinstance(spec, RightShift):
        return float(spec.t)
    if isinstance(spec, LeftShift):
        return 0.0
    if isinstance(spec, Convolution):
        return max(0.0, spec.kernel.support[1])
    if isinstance(spec, LinearCombo):
        return max(right_reach(s) for _, s in spec.terms)
    if isinstance(spec, MatrixOperator):
        i, j = np.nonzero(spec.matrix)
        return max(0.0, float(np.max(i - j, initial=0)) * spec.grid.h)
    raise TypeError(f"not an operator spec: {spec!r}")


def _check_kernel(kernel: Kernel, grid: Grid):
    if abs(kernel.h - grid.h) > 1e-12 * max(1.0, grid.h):
        raise ValueError(f"kernel spacing {kernel.h} differs from grid spacing {grid.h}")


def convolve(kernel: Kernel, samples: np.ndarray, method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """Sum h * phi((i - j) h) * f_j over j, for every integer i.

    Returns ``(out, lost)`` where ``out`` holds indices ``0..N-1`` and
    ``lost`` the values that land at indices ``>= N``.
    """
    f = np.asarray(samples, dtype=complex)
    N, L = f.size, kernel.values.size
    if method == "auto":
        method = "direct" if L <= DIRECT_CONV_MAX else "fft"
    if method == "direct":
        full = np.convolve(f, kernel.values)
    elif method == "fft":
        n = N + L - 1
        nfft = 1 << int(np.ceil(np.log2(n)))
        full = np.fft.ifft(np.fft.fft(f, nfft) * np.fft.fft(kernel.values, nfft))[:n]
    else:
        raise ValueError(f"unknown convolution method {method!r}")
    full *= kernel.h
    # full[p] sits at index p + offset
    idx = np.arange(full.size) + kernel.offset
    out = np.zeros(N, dtype=complex)
    keep = (idx >= 0) & (idx < N)
    out[idx[keep]] = full[keep]
    return out, full[idx >= N]


def apply_operator(spec, f: GridFunction, method: str = "auto") -> GridFunction:
    """Apply an operator spec to plain samples.

    ``out.meta["lost_norm"]`` records the weighted norm of mass pushed past
    the right edge of the window (a finite-window artifact).
    """
    grid, w = f.grid, f.weight
    if isinstance(spec, MatrixOperator):
        return spec.apply(f)
    lost = 0.0
    if isinstance(spec, RightShift):
        k = grid.steps(spec.t)
        out = np.zeros_like(f.samples)
        out[k:] = f.samples[: grid.N - k]
        tail = f.samples[grid.N - k :]
        if np.any(tail):
            xs = grid.nodes[grid.N - k :] + spec.t
            lost = float(np.sqrt(grid.h * np.sum(np.abs(tail) ** 2 * np.exp(2 * w.log(xs)))))
    elif isinstance(spec, LeftShift):
        k = grid.steps(spec.t)
        out = np.zeros_like(f.samples)
        out[: grid.N - k] = f.samples[k:]
    elif isinstance(spec, Convolution):
        _check_kernel(spec.kernel, grid)
        out, tail = convolve(spec.kernel, f.samples, method)
        if np.any(tail):
            xs = (grid.N + np.arange(tail.size) + 0.5) * grid.h
            lost = float(np.sqrt(grid.h * np.sum(np.abs(tail) ** 2 * np.exp(2 * w.log(xs)))))
    elif isinstance(spec, LinearCombo):
        out = np.zeros_like(f.samples)
        sq = 0.0
        for c, s in spec.terms:
            g = apply_operator(s, f, method)
            out += c * g.samples
            sq += (abs(c) * g.meta.get("lost_norm", 0.0)) ** 2
        lost = float(np.sqrt(sq))
    else:
        raise TypeError(f"not an operator spec: {spec!r}")
    return GridFunction(out, grid, w, {"lost_norm": lost})


# --------------------------------------------------------------------------
# matrices


@dataclass(frozen=True, eq=False)
class MatrixOperator:
    """Dense matrix acting on isometric coordinates of a fixed grid and weight."""

    matrix: np.ndarray
    grid: Grid
    weight: Weight
    spec: object = None
    label: str = ""

    @property
    def N(self) -> int:
        return self.grid.N

    def apply(self, f: GridFunction) -> GridFunction:
        if f.grid != self.grid:
            raise ValueError("grid function and matrix live on different grids")
        return from_isometric(self.matrix @ to_isometric(f), self.grid, self.weight)

    def __matmul__(self, other):
        if isinstance(other, MatrixOperator):
            return MatrixOperator(self.matrix @ other.matrix, self.grid, self.weight, None, "product")
        return self.matrix @ other

    def provenance(self) -> dict:
        d = {"N": self.grid.N, "X": self.grid.X, "h": self.grid.h, "weight": self.weight.describe()}
        if self.spec is not None:
            d["operator"] = describe(self.spec)
        elif self.label:
            d["operator"] = self.label
        return d


def _plain_matrix(spec, grid: Grid) -> np.ndarray:
    N = grid.N
    if isinstance(spec, RightShift):
        return np.eye(N, k=-grid.steps(spec.t), dtype=complex)
    if isinstance(spec, LeftShift):
        return np.eye(N, k=grid.steps(spec.t), dtype=complex)
    if isinstance(spec, Convolution):
        K = spec.kernel
        _check_kernel(K, grid)
        d = np.subtract.outer(np.arange(N), np.arange(N)) - K.offset
        inside = (d >= 0) & (d < K.values.size)
        A = np.zeros((N, N), dtype=complex)
        A[inside] = grid.h * K.values[d[inside]]
        return A
    if isinstance(spec, LinearCombo):
        return sum(c * _plain_matrix(s, grid) for c, s in spec.terms)
    raise TypeError(f"not an operator spec: {spec!r}")


def conjugate_by_weight(A: np.ndarray, grid: Grid, weight: Weight) -> np.ndarray:
    """Entries A_ij * w(x_i) / w(x_j), computed only on the nonzeros."""
    lw = weight.log(grid.nodes)
    M = np.array(A, dtype=complex)
    i, j = np.nonzero(M)
    M[i, j] *= np.exp(lw[i] - lw[j])
    return M


def assemble_matrix(spec, grid: Grid, weight: Weight, allow_large: bool = False) -> MatrixOperator:
    if grid.N > MAX_DENSE_N and not allow_large:
        raise MemoryError(f"N={grid.N} exceeds the dense guard {MAX_DENSE_N}; pass allow_large=True")
    M = conjugate_by_weight(_plain_matrix(spec, grid), grid, weight)
    return MatrixOperator(M, grid, weight, spec)


def rank_one(e: GridFunction) -> MatrixOperator:
    """The operator f -> <f, e> e."""
    u = to_isometric(e)
    return MatrixOperator(np.outer(u, u.conj()), e.grid, e.weight, None, "rank-one")


def _dense(M) -> np.ndarray:
    return M.matrix if isinstance(M, MatrixOperator) else np.asarray(M)


def operator_norm(M, tol: float = 1e-10, maxiter: int = 10_000, method: str = "auto") -> float:
    """Largest singular value.

    Full SVD up to ``FULL_SVD_N``; beyond that, power iteration on M* M from
    a fixed start vector.
    """
    A = _dense(M)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if method == "auto":
        method = "svd" if A.shape[0] <= FULL_SVD_N else "power"
    if method == "svd":
        return float(scipy.linalg.svdvals(A)[0])
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    rng = np.random.default_rng(0)
    v = rng.standard_normal(A.shape[1]) + 1j * rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    lam, res = 0.0, np.inf
    for _ in range(maxiter):
        w = A.conj().T @ (A @ v)
        new = float(np.linalg.norm(w))
        if new == 0.0:
            return 0.0
        v = w / new
        res = abs(new - lam) / new
        if res <= tol:
            return float(np.sqrt(new))
        lam = new
    raise ConvergenceError(f"power iteration stalled, relative change {res:.3e}", v, res)


# --------------------------------------------------------------------------
# defects


def _action(T, grid: Grid, weight: Weight):
    if isinstance(T, MatrixOperator):
        return T.apply
    return lambda f: apply_operator(T, f)


def _check_tests(T, t: float, tests, margin):
    if not tests:
        raise ValueError("empty test set")
    grid = tests[0].grid
    margin = grid.h if margin is None else margin
    limit = grid.X - t - right_reach(T) - margin
    for n, f in enumerate(tests):
        if f.grid != grid:
            raise ValueError("test functions live on different grids")
        if f.support_end() > limit + 1e-9 * grid.X:
            raise ValueError(
                f"test function {n} reaches x={f.support_end():g}, beyond the interior limit {limit:g}"
            )
    return grid, margin


def wiener_hopf_defect(T, t: float, tests, margin: float | None = None) -> float:
    """max over tests of ||P+ S_{-t} T S_t f - T f|| / ||f||."""
    grid, _ = _check_tests(T, t, tests, margin)
    act = _action(T, grid, tests[0].weight)
    R, L = RightShift(t), LeftShift(t)
    worst = 0.0
    for f in tests:
        lhs = apply_operator(L, act(apply_operator(R, f)))
        worst = max(worst, (lhs - act(f)).norm() / f.norm())
    return worst


def commutator_defect(T, t: float, tests, side: str = "right", margin: float | None = None) -> float:
    """max over tests of ||T S f - S T f|| / ||f|| with S = S_t (right) or P+ S_{-t} (left)."""
    if side not in ("right", "left"):
        raise ValueError("side must be 'right' or 'left'")
    grid, _ = _check_tests(T, t, tests, margin)
    act = _action(T, grid, tests[0].weight)
    S = RightShift(t) if side == "right" else LeftShift(t)
    worst = 0.0
    for f in tests:
        d = act(apply_operator(S, f)) - apply_operator(S, act(f))
        worst = max(worst, d.norm() / f.norm())
    return worst
