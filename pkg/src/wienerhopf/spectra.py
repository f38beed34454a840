"""Ground orders, spectral radii and pseudospectra of finite sections.

Truncated shifts are nilpotent, so their eigenvalues say nothing about the
spectrum of the operator on the half line.  Membership is instead witnessed
by the smallest singular value of ``z I - M`` and its trend as the window
grows at fixed spacing.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .grid import Grid, from_isometric, grid_with_spacing
from .operators import (
    FULL_SVD_N,
    LeftShift,
    MatrixOperator,
    RightShift,
    _dense,
    assemble_matrix,
    operator_norm,
)
from .weights import Weight

log = logging.getLogger(__name__)

#: inside points must reach this sigma_min at the largest N
INSIDE_TOL = 1e-4
#: relative half-width of the unclassified annulus around the predicted circle
BOUNDARY_BAND = 0.1
#: outside points need sigma_min >= OUTSIDE_FACTOR * (|z| - radius)
OUTSIDE_FACTOR = 0.3
#: absolute slack in the Neumann bound
NEUMANN_SLACK = 1e-9


@dataclass
class GrowthEstimate:
    alpha_hat: float
    side: str
    t_values: np.ndarray
    log_norms: np.ndarray
    residual: float
    method: str = "norm-slope"
    gelfand: Optional[dict] = None

    def to_dict(self) -> dict:
        d = {
            "alpha_hat": self.alpha_hat,
            "side": self.side,
            "method": self.method,
            "t_values": [float(t) for t in self.t_values],
            "log_norms": [float(v) for v in self.log_norms],
            "residual": self.residual,
        }
        if self.gelfand is not None:
            d["gelfand"] = self.gelfand
        return d


def shift_log_norms(side: str, weight: Weight, grid: Grid, t_values) -> np.ndarray:
    """log ||S_t|| (right) or log ||P+ S_{-t}|| (left) from the exact ratio maxima."""
    lw = weight.log(grid.nodes)
    out = []
    for t in t_values:
        k = grid.steps(t)
        if k >= grid.N:
            raise ValueError(f"shift t={t} does not fit in X={grid.X}")
        d = lw[k:] - lw[:-k]
        out.append(d.max() if side == "right" else (-d).max())
    return np.array(out)


def growth_order(side: str, weight: Weight, grid: Grid, t_values: Sequence[float], gelfand: bool = False) -> GrowthEstimate:
    """Least-squares slope of log-norm against t.

    With ``gelfand=True`` the estimate is cross-checked by
    ``rho(S_{t0})^{1/t0}`` for the smallest supplied ``t0``.
    """
    if side not in ("right", "left"):
        raise ValueError("side must be 'right' or 'left'")
    t = np.asarray(sorted(float(v) for v in t_values))
    if t.size < 3:
        raise ValueError("growth_order needs at least 3 shift lengths")
    if t[-1] > grid.X / 2 * (1 + 1e-12):
        raise ValueError(f"largest shift {t[-1]} exceeds X/2 = {grid.X / 2}")
    ln = shift_log_norms(side, weight, grid, t)
    slope, icpt = np.polyfit(t, ln, 1)
    resid = float(np.sqrt(np.mean((ln - (slope * t + icpt)) ** 2)))
    est = GrowthEstimate(float(slope), side, t, ln, resid)
    if gelfand:
        t0 = float(t[0])
        k = grid.steps(t0)
        spec = RightShift(t0) if side == "right" else LeftShift(t0)
        M = assemble_matrix(spec, grid, weight)
        n_max = max(3, min(8, grid.N // k - 1))
        g = gelfand_radius(M, n_max, steps=k)
        est.gelfand = g.to_dict()
        if g.value is not None:
            est.gelfand["alpha_hat"] = float(np.log(g.value) / t0)
    return est


@dataclass
class GelfandResult:
    value: Optional[float]
    norms: list
    truncation_dominated: bool = False

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "power_norms": self.norms,
            "truncation_dominated": self.truncation_dominated,
        }


def _shift_steps(M) -> Optional[int]:
    spec = getattr(M, "spec", None)
    if isinstance(spec, (RightShift, LeftShift)):
        return M.grid.steps(spec.t)
    return None


def gelfand_radius(M, n_max: int, steps: Optional[int] = None) -> GelfandResult:
    """Extrapolate ``||M^n||^(1/n)`` from the slope of ``log ||M^n||`` over the
    last three powers."""
    A = _dense(M)
    k = steps if steps is not None else _shift_steps(M)
    if k is not None and n_max >= A.shape[0] / k:
        raise ValueError(f"n_max={n_max} reaches the nilpotent cutoff N/k={A.shape[0] / k:g}")
    if n_max < 3:
        raise ValueError("need n_max >= 3")
    P = np.eye(A.shape[0], dtype=complex)
    norms = []
    for _ in range(n_max):
        P = A @ P
        norms.append(operator_norm(P))
    last = np.array(norms[-3:])
    if np.any(last < np.finfo(float).tiny) or not np.all(np.isfinite(last)):
        return GelfandResult(None, norms, True)
    n = np.arange(n_max - 2, n_max + 1)
    slope = np.polyfit(n, np.log(last), 1)[0]
    return GelfandResult(float(np.exp(slope)), norms)


# --------------------------------------------------------------------------
# pseudospectra


def _blocks(A: np.ndarray) -> list[np.ndarray]:
    """Index sets of the connected components of the sparsity graph.

    zI - A is block diagonal in these sets up to a permutation, so its
    singular values are the union of the blocks'.
    """
    n, labels = connected_components(csr_matrix(A != 0), directed=False)
    if n == 1:
        return [np.arange(A.shape[0])]
    return [np.flatnonzero(labels == c) for c in range(n)]


def _sigma_min_inverse_iteration(B: np.ndarray, tol=1e-12, maxiter=100) -> float:
    lu, piv = scipy.linalg.lu_factor(B, check_finite=False)
    if np.any(np.diag(lu) == 0):
        return 0.0
    rng = np.random.default_rng(0)
    x = rng.standard_normal(B.shape[0]) + 0j
    x /= np.linalg.norm(x)
    est = np.inf
    for _ in range(maxiter):
        y = scipy.linalg.lu_solve((lu, piv), x, trans=2)
        y = scipy.linalg.lu_solve((lu, piv), y)
        g = np.linalg.norm(y)
        if not np.isfinite(g):
            return 0.0
        new = 1.0 / np.sqrt(g)
        x = y / g
        if abs(new - est) <= tol * new:
            return float(new)
        est = new
    return float(est)


def _sigma_min_blocks(A: np.ndarray, blocks, z: complex) -> float:
    best = np.inf
    for idx in blocks:
        B = z * np.eye(idx.size) - A[np.ix_(idx, idx)]
        if idx.size <= FULL_SVD_N:
            s = scipy.linalg.svdvals(B, check_finite=False)[-1]
        else:
            s = _sigma_min_inverse_iteration(B)
        best = min(best, s)
    return float(best)


@dataclass
class PseudospectrumGrid:
    z: np.ndarray
    sigma_min: np.ndarray
    provenance: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def at(self, z) -> float:
        i = int(np.argmin(np.abs(self.z - z)))
        return float(self.sigma_min[i])


def rect_grid(re_min, re_max, im_min, im_max, n_re, n_im) -> np.ndarray:
    """Row-major rectangular complex grid (imaginary part outer)."""
    xr = np.linspace(re_min, re_max, n_re)
    yi = np.linspace(im_min, im_max, n_im)
    return (xr[None, :] + 1j * yi[:, None]).ravel()


def polar_grid(radii, angles) -> np.ndarray:
    r = np.asarray(radii, dtype=float)
    a = np.asarray(angles, dtype=float)
    return (r[:, None] * np.exp(1j * a[None, :])).ravel()


def disk_samples(radius: float, n: int) -> np.ndarray:
    """Deterministic area-uniform (sunflower) points in the closed disk."""
    i = np.arange(n)
    r = radius * np.sqrt((i + 0.5) / n)
    return r * np.exp(1j * i * np.pi * (3 - np.sqrt(5)))


def annulus_samples(r_in: float, r_out: float, n: int) -> np.ndarray:
    """Deterministic area-uniform points with r_in <= |z| <= r_out."""
    i = np.arange(n)
    r = np.sqrt(r_in**2 + (r_out**2 - r_in**2) * (i + 0.5) / n)
    return r * np.exp(1j * (i * np.pi * (3 - np.sqrt(5)) + 0.3))


def pseudospectrum(M, z, workers: int = 1) -> PseudospectrumGrid:
    """Smallest singular value of ``z I - M`` at every node of ``z``.

    Node failures are recorded (value NaN) rather than raised.
    """
    A = _dense(M)
    z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    blocks = _blocks(A)
    sig = np.full(z.size, np.nan)
    failures = []

    def one(i):
        try:
            return i, _sigma_min_blocks(A, blocks, z[i]), None
        except (np.linalg.LinAlgError, ValueError) as exc:
            return i, np.nan, f"{type(exc).__name__}: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, range(z.size)))
    else:
        results = [one(i) for i in range(z.size)]
    for i, s, err in results:
        sig[i] = s
        if err is not None:
            failures.append({"index": i, "z": [z[i].real, z[i].imag], "error": err})
            log.warning("pseudospectrum node %d failed: %s", i, err)
    prov = M.provenance() if isinstance(M, MatrixOperator) else {"N": A.shape[0]}
    return PseudospectrumGrid(z, sig, prov, failures)


@dataclass
class ApproxEigenpair:
    z: complex
    vector: np.ndarray
    residual: float
    sigma_min: float
    grid: Optional[Grid] = None
    weight: Optional[Weight] = None

    def as_grid_function(self):
        if self.grid is None:
            raise ValueError("no grid attached")
        return from_isometric(self.vector, self.grid, self.weight)


def approximate_eigenvector(M, z: complex) -> ApproxEigenpair:
    """Right singular vector of ``M - z I`` for its smallest singular value."""
    A = _dense(M)
    B = A - z * np.eye(A.shape[0])
    _, s, vh = scipy.linalg.svd(B)
    v = vh[-1].conj()
    res = float(np.linalg.norm(B @ v))
    g = M.grid if isinstance(M, MatrixOperator) else None
    w = M.weight if isinstance(M, MatrixOperator) else None
    return ApproxEigenpair(complex(z), v, res, float(s[-1]), g, w)


# --------------------------------------------------------------------------
# disk scans


def non_increasing(seq, floor: float = 0.0, rtol: float = 1e-9) -> bool:
    """True when each entry is at most the previous one, up to ``floor``."""
    s = np.asarray(seq, dtype=float)
    return bool(np.all(s[1:] <= s[:-1] * (1 + rtol) + floor))


@dataclass
class ScanPoint:
    z: complex
    zone: str
    sigma: list
    status: str

    def to_dict(self) -> dict:
        return {"z": [self.z.real, self.z.imag], "zone": self.zone, "sigma_min": self.sigma, "status": self.status}


@dataclass
class DiskScanReport:
    operator: str
    weight: str
    radius: float
    n_schedule: list
    norms: list
    points: list[ScanPoint]
    inside_tol: float = INSIDE_TOL

    def count(self, status) -> int:
        return sum(p.status == status for p in self.points)

    @property
    def status(self) -> str:
        if self.count("fail"):
            return "fail"
        if self.count("inconclusive"):
            return "inconclusive"
        return "pass"

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "weight": self.weight,
            "radius": self.radius,
            "n_schedule": self.n_schedule,
            "norms": self.norms,
            "inside_tol": self.inside_tol,
            "counts": {s: self.count(s) for s in ("inside", "outside", "unclassified", "inconclusive", "fail")},
            "status": self.status,
            "points": [p.to_dict() for p in self.points],
        }


def section_matrices(spec, weight: Weight, h: float, n_schedule) -> list[MatrixOperator]:
    """Finite sections at fixed spacing ``h``; the window grows with N."""
    return [assemble_matrix(spec, grid_with_spacing(h, n), weight) for n in n_schedule]


def classify_point(z, sigma, radius, norm, inside_tol=INSIDE_TOL, band=BOUNDARY_BAND) -> tuple[str, str]:
    """Zone and status of one sample given its sigma_min trend across N."""
    r = abs(z) / radius
    floor = 1e-13 * max(1.0, norm)
    if r <= 1 - band:
        if not non_increasing(sigma, floor):
            return "inside", "fail"
        return "inside", "inside" if sigma[-1] <= inside_tol else "inconclusive"
    if r >= 1 + band:
        ok = min(sigma) >= OUTSIDE_FACTOR * (abs(z) - radius)
        if abs(z) > norm:
            ok = ok and min(sigma) >= abs(z) - norm - NEUMANN_SLACK
        return "outside", "outside" if ok else "fail"
    return "boundary", "unclassified"


def disk_scan(spec, weight: Weight, h: float, n_schedule, radius: float, points, inside_tol=INSIDE_TOL) -> DiskScanReport:
    """Compare sigma_min over a growing section schedule with a predicted disk.

    ``radius`` is normally ``exp(alpha_hat * t)`` from :func:`growth_order`.
    """
    n_schedule = sorted(int(n) for n in n_schedule)
    mats = section_matrices(spec, weight, h, n_schedule)
    norms = [operator_norm(M) for M in mats]
    pts = np.asarray(points, dtype=complex)
    sig = np.array([pseudospectrum(M, pts).sigma_min for M in mats])  # (len(N), len(points))
    out = []
    for i, z in enumerate(pts):
        zone, status = classify_point(z, sig[:, i], radius, norms[-1], inside_tol)
        out.append(ScanPoint(complex(z), zone, [float(s) for s in sig[:, i]], status))
    from .operators import describe

    return DiskScanReport(str(describe(spec)), weight.label, float(radius), n_schedule, norms, out, inside_tol)
