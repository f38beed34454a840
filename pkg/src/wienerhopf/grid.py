"""Uniform midpoint discretization of the weighted half-line space.

Nodes sit at ``x_j = (j + 1/2) h`` so that a shift by ``k h`` maps nodes to
nodes.  Functions are stored by their plain samples; the *isometric*
coordinates ``u_j = f_j w(x_j) sqrt(h)`` turn the weighted norm into the
Euclidean one, which is where operator matrices live.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .weights import Weight, constant


@dataclass(frozen=True)
class Grid:
    X: float
    N: int

    def __post_init__(self):
        if not (np.isfinite(self.X) and self.X > 0):
            raise ValueError(f"grid extent must be positive, got X={self.X}")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"grid needs N >= 2 nodes, got N={self.N}")

    @property
    def h(self) -> float:
        return self.X / self.N

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.N) + 0.5) * self.h

    def steps(self, t: float) -> int:
        """Number of nodes in a shift of length ``t``; ``t`` must be a multiple of h."""
        k = int(round(t / self.h))
        if k < 1 or abs(k * self.h - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"shift t={t} is not a positive multiple of h={self.h}")
        return k

    def index_of(self, x: float) -> int:
        """Index of the node nearest to ``x``."""
        return int(np.clip(np.floor(x / self.h), 0, self.N - 1))


def build_grid(X: float, N: int) -> Grid:
    return Grid(float(X), int(N))


def grid_with_spacing(h: float, N: int) -> Grid:
    """Grid of N nodes at fixed spacing h (extent grows with N)."""
    return Grid(float(h) * int(N), int(N))


@dataclass(frozen=True, eq=False)
class GridFunction:
    samples: np.ndarray
    grid: Grid
    weight: Weight
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} samples, got shape {s.shape}")
        object.__setattr__(self, "samples", s)

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def norm(self) -> float:
        return float(np.linalg.norm(to_isometric(self)))

    def with_samples(self, samples) -> "GridFunction":
        return GridFunction(samples, self.grid, self.weight)

    def __add__(self, other):
        _check_compatible(self, other)
        return self.with_samples(self.samples + other.samples)

    def __sub__(self, other):
        _check_compatible(self, other)
        return self.with_samples(self.samples - other.samples)

    def __mul__(self, c):
        return self.with_samples(self.samples * c)

    __rmul__ = __mul__

    def support_end(self) -> float:
        """Right edge of the cell holding the last nonzero sample (0 if f == 0)."""
        nz = np.flatnonzero(self.samples)
        return 0.0 if nz.size == 0 else (nz[-1] + 1) * self.grid.h


def _check_compatible(f: GridFunction, g: GridFunction):
    if f.grid != g.grid:
        raise ValueError("grid functions live on different grids")
    if f.weight is not g.weight and f.weight.describe() != g.weight.describe():
        raise ValueError("grid functions carry different weights")


def from_callable(func, grid: Grid, weight: Weight | None = None) -> GridFunction:
    return GridFunction(func(grid.nodes), grid, weight or constant())


def indicator(a: float, b: float, grid: Grid, weight: Weight | None = None) -> GridFunction:
    """Indicator of [a, b] sampled at the nodes."""
    x = grid.nodes
    return GridFunction(((x >= a) & (x <= b)).astype(complex), grid, weight or constant())


def weighted_inner(f: GridFunction, g: GridFunction) -> complex:
    """h * sum f_j conj(g_j) w(x_j)^2."""
    _check_compatible(f, g)
    w2 = np.exp(2 * f.weight.log(f.grid.nodes))
    return complex(f.grid.h * np.sum(f.samples * np.conj(g.samples) * w2))


def isometric_scale(grid: Grid, weight: Weight) -> np.ndarray:
    return np.exp(weight.log(grid.nodes)) * np.sqrt(grid.h)


def to_isometric(f: GridFunction) -> np.ndarray:
    return f.samples * isometric_scale(f.grid, f.weight)


def from_isometric(u, grid: Grid, weight: Weight) -> GridFunction:
    return GridFunction(np.asarray(u, dtype=complex) / isometric_scale(grid, weight), grid, weight)


def wave_packet(grid: Grid, eta0: float, b: float, t0: float, weight: Weight | None = None) -> GridFunction:
    """Samples of exp(-b^2 (t - t0)^2 / 2) exp(i (t - t0) eta0)."""
    if not t0 > 1:
        raise ValueError(f"packet center must satisfy t0 > 1, got {t0}")
    if not b > 0:
        raise ValueError(f"bandwidth must be positive, got {b}")
    if not 2 * t0 < grid.X:
        raise ValueError(f"packet window [0, 2 t0] = [0, {2 * t0}] escapes X={grid.X}")
    y = grid.nodes - t0
    g = np.exp(-0.5 * (b * y) ** 2) * np.exp(1j * eta0 * y)
    return GridFunction(g, grid, weight or constant())


def _smoothstep(s):
    # quintic: C2, value 0 -> 1 with vanishing first and second derivatives at both ends
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


#: ramp width of the cutoff on each side
CUTOFF_RAMP = 0.5
#: sup of |phi'| and |phi''| for the quintic ramp of width 1/2
CUTOFF_C1 = max(15.0 / 8.0 / CUTOFF_RAMP, 10.0 / np.sqrt(3.0) / CUTOFF_RAMP**2)


def cutoff_profile(t, t0: float) -> np.ndarray:
    """The cutoff as a function: 0 on t <= 1/2 and t >= 2 t0 - 1/2, 1 on [1, 2 t0 - 1]."""
    t = np.asarray(t, dtype=float)
    rise = _smoothstep((t - 0.5) / CUTOFF_RAMP)
    fall = _smoothstep((2 * t0 - 0.5 - t) / CUTOFF_RAMP)
    return rise * fall


def cutoff_window(grid: Grid, t0: float, weight: Weight | None = None) -> GridFunction:
    if not t0 > 1:
        raise ValueError(f"cutoff needs t0 > 1, got {t0}")
    if not 2 * t0 - 0.5 < grid.X:
        raise ValueError(f"cutoff support [1/2, {2 * t0 - 0.5}] escapes X={grid.X}")
    return GridFunction(cutoff_profile(grid.nodes, t0).astype(complex), grid, weight or constant())


def write_csv(f: GridFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "re", "im"])
        for x, v in zip(f.grid.nodes, f.samples):
            w.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])


def read_uniform_csv(path, header: tuple[str, ...], rtol: float = 1e-9):
    """Read a three-column complex CSV and validate uniform spacing.

    Returns ``(positions, values, spacing)``.  Raises ``ValueError`` naming
    the first offending data row (1-based, header excluded).
    """
    rows = []
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        head = next(reader, None)
        if head is None or tuple(c.strip() for c in head) != header:
            raise ValueError(f"{path}: expected header {','.join(header)}, got {head}")
        for i, row in enumerate(reader, start=1):
            if not row:
                continue
            try:
                rows.append(tuple(float(c) for c in row))
            except ValueError:
                raise ValueError(f"{path}: row {i} is not numeric: {row}") from None
            if len(rows[-1]) != 3:
                raise ValueError(f"{path}: row {i} has {len(row)} columns, expected 3")
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least two rows")
    data = np.array(rows)
    pos = data[:, 0]
    d = np.diff(pos)
    h = d[0]
    if not h > 0:
        raise ValueError(f"{path}: row 2 does not increase the position column")
    bad = np.flatnonzero(np.abs(d - h) > rtol * max(abs(h), 1.0))
    if bad.size:
        raise ValueError(f"{path}: non-uniform spacing at row {bad[0] + 2}")
    return pos, data[:, 1] + 1j * data[:, 2], float(h)


def read_csv(path, weight: Weight | None = None) -> GridFunction:
    """Import a GridFunction written by :func:`write_csv`."""
    x, v, h = read_uniform_csv(path, ("x", "re", "im"))
    if abs(x[0] - h / 2) > 1e-9 * max(h, 1.0):
        raise ValueError(f"{path}: first node {x[0]} is not the midpoint h/2={h / 2}")
    return GridFunction(v, build_grid(h * len(x), len(x)), weight or constant())
