"""Verification pipelines behind the command line.

Each pipeline takes a validated flat config and an output directory and
returns a list of :class:`CheckRecord`; artifacts are written as a side
effect and their relative names appended to ``artifacts``.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from . import weights as W
from .grid import build_grid, from_callable, indicator
from .operators import (
    Convolution,
    LeftShift,
    LinearCombo,
    RightShift,
    assemble_matrix,
    commutator_defect,
    delta_kernel,
    describe,
    gaussian_bump,
    operator_norm,
    rank_one,
    read_kernel_csv,
    wiener_hopf_defect,
)
from .report import CheckRecord, status_of, write_json, write_pseudospectrum, write_rows
from .spectra import (
    annulus_samples,
    disk_samples,
    disk_scan,
    growth_order,
    pseudospectrum,
    rect_grid,
)
from .symbols import (
    SymbolFunction,
    quasimode_witness,
    shift_symbol,
    spectrum_inclusion_scan,
    strip_O,
    strip_U,
    strip_V,
    symbol_bound_check,
    symbol_image_samples,
)

# Claim anchors carried by every check record.
A_ADMISSIBLE = "admissible weight: translation ratios bounded above and below"
A_NORM = "shift norm equals the largest translation ratio of the weight"
A_ORDERS = "ground orders are the growth bounds of the shift semigroups"
A_ORDER_SUM = "ground orders satisfy alpha0 + alpha1 >= 0"
A_WH = "Wiener-Hopf operators are those with P+ S_-t T S_t = T"
A_COMMUTE_R = "commuting with the right shifts iff the kernel lives on the positive axis"
A_COMMUTE_L = "commuting with the left shifts iff the kernel lives on the negative axis"
A_BOUND = "tilted symbol bounded by the operator norm on the strip"
A_LOCK = "delta kernel at t has the symbol exp(-itz)"
A_ROTATION = "shift spectra are invariant under rotation"
A_DISK_R = "spectrum of S_t is the disk of radius exp(alpha0 t)"
A_DISK_L = "spectrum of P+S_-t is the disk of radius exp(alpha1 t)"
A_RANGE_R = "spectrum contains the symbol image of Im z < alpha0"
A_RANGE_L = "spectrum contains the symbol image of Im z > -alpha1"
A_QUASI = "symbol values are approximate eigenvalues (tilted wave packets)"


class Context:
    """Lazily computed objects shared by the checks of one run."""

    def __init__(self, cfg: dict, out: Path):
        self.cfg = cfg
        self.out = Path(out)
        self.artifacts: list[str] = []
        self.weight = W.from_config(cfg)
        self.grid = build_grid(cfg["grid.X"], cfg["grid.N"])
        self.t = cfg["operator.t"]
        self._growth = None

    @property
    def h(self) -> float:
        return self.grid.h

    def spec(self):
        return spec_from_config(self.cfg, self.h)

    def growth(self):
        if self._growth is None:
            g = build_grid(self.cfg["spectra.growth_X"], int(round(self.cfg["spectra.growth_X"] / self.h)))
            ts = self.cfg["spectra.t_list"]
            self._growth = (growth_order("right", self.weight, g, ts), growth_order("left", self.weight, g, ts))
        return self._growth

    def add(self, name: str):
        self.artifacts.append(name)
        return self.out / name


def _one_spec(entry: dict, cfg: dict, h: float):
    variant = entry.get("variant", "RightShift")
    if variant == "RightShift":
        return RightShift(float(entry.get("t", cfg["operator.t"])))
    if variant == "LeftShift":
        return LeftShift(float(entry.get("t", cfg["operator.t"])))
    if variant == "Convolution":
        path = entry.get("kernel_path", cfg["operator.kernel_path"])
        if path:
            return Convolution(read_kernel_csv(path, h))
        return Convolution(
            gaussian_bump(
                h,
                float(entry.get("kernel_center", cfg["operator.kernel_center"])),
                float(entry.get("kernel_half_width", cfg["operator.kernel_half_width"])),
            )
        )
    raise ValueError(f"unknown operator variant {variant!r}")


def _coef(c) -> complex:
    if isinstance(c, (list, tuple)):
        return complex(float(c[0]), float(c[1]))
    return complex(c)


def spec_from_config(cfg: dict, h: float):
    if cfg["operator.variant"] != "LinearCombo":
        return _one_spec({"variant": cfg["operator.variant"]}, cfg, h)
    combo = cfg["operator.combo"]
    if not combo:
        raise ValueError("operator.variant LinearCombo needs operator.combo entries")
    return LinearCombo(tuple((_coef(e.get("coef", 1.0)), _one_spec(e, cfg, h)) for e in combo))


def _abs_rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(b))


# --------------------------------------------------------------------------
# individual checks


def check_admissibility(ctx: Context) -> list[CheckRecord]:
    probes = ctx.cfg["spectra.probes"] or [ctx.h, 1.0, 2.0]
    rep = W.admissibility_check(ctx.weight, probes, ctx.grid.X, ctx.grid.N)
    write_json(rep.to_dict(), ctx.add("admissibility.json"))
    sup = max(r.sup_ratio for r in rep.records)
    inf = min(r.inf_ratio for r in rep.records)
    return [
        CheckRecord(
            "admissibility", A_ADMISSIBLE, {"inf_ratio": inf, "sup_ratio": sup},
            "finite positive bounds, stable under window doubling", rep.tolerance,
            status_of(rep.passed), {"weight": ctx.weight.label, "growth_flag": rep.growth_flag},
        )
    ]


def check_exact_norms(ctx: Context) -> list[CheckRecord]:
    tol = ctx.cfg["tolerance.norm"]
    out, rows = [], []
    lw = ctx.weight.log(ctx.grid.nodes)
    for side, cls in (("right", RightShift), ("left", LeftShift)):
        worst = 0.0
        for t in (ctx.h, 1.0, 2.0):
            k = ctx.grid.steps(t)
            d = lw[k:] - lw[:-k]
            expected = float(np.exp(d.max() if side == "right" else (-d).max()))
            got = operator_norm(assemble_matrix(cls(t), ctx.grid, ctx.weight))
            err = _abs_rel(got, expected)
            worst = max(worst, err)
            rows.append((side, float(t), got, expected, err))
        out.append(
            CheckRecord(
                f"exact-norm-{side}", A_NORM, worst, 0.0, tol, status_of(worst <= tol),
                {"t_values": [ctx.h, 1.0, 2.0], "error": "relative to max(1, exact ratio)"},
            )
        )
    write_rows(ctx.add("norms.csv"), ["side", "t", "svd_norm", "ratio_max", "error"], rows)
    return out


def check_growth(ctx: Context) -> list[CheckRecord]:
    right, left = ctx.growth()
    write_json({"right": right.to_dict(), "left": left.to_dict()}, ctx.add("growth.json"))
    tol = ctx.cfg["tolerance.growth"]
    known = ctx.weight.known_orders
    out = []
    for i, (est, anchor_side) in enumerate(((right, "alpha0"), (left, "alpha1"))):
        if known is None:
            status = status_of(bool(np.isfinite(est.alpha_hat)))
            expected = None
        else:
            expected = known[i]
            status = status_of(abs(est.alpha_hat - expected) <= tol)
        out.append(
            CheckRecord(
                f"growth-{anchor_side}", A_ORDERS, est.alpha_hat, expected, tol, status,
                {"fit_residual": est.residual, "t_values": list(est.t_values)},
            )
        )
    s = right.alpha_hat + left.alpha_hat
    ts = ctx.cfg["tolerance.order_sum"]
    out.append(CheckRecord("growth-order-sum", A_ORDER_SUM, s, ">= 0", ts, status_of(s >= -ts)))
    return out


def _interior_tests(ctx: Context):
    g, w = ctx.grid, ctx.weight
    rng = np.random.default_rng(7)
    c = rng.standard_normal(6) + 1j * rng.standard_normal(6)

    def smooth(x):
        y = np.where(x < 5.0, np.sin(np.pi * x / 5.0) ** 2, 0.0)
        return y * sum(cj * np.cos(j * x) for j, cj in enumerate(c))

    return [indicator(0.0, 1.0, g, w), from_callable(smooth, g, w)]


def check_defects(ctx: Context) -> list[CheckRecord]:
    t, h = ctx.t, ctx.h
    tests = _interior_tests(ctx)
    ind = tests[:1]
    out = []
    tol_wh = ctx.cfg["tolerance.wiener_hopf"]
    tol_c = ctx.cfg["tolerance.commutator"]
    floor = ctx.cfg["tolerance.commutator_floor"]

    combo = 2.0 * LeftShift(t) + 3j * RightShift(t)
    d = wiener_hopf_defect(combo, t, tests)
    out.append(CheckRecord("wiener-hopf-shift-combo", A_WH, d, 0.0, tol_wh, status_of(d <= tol_wh), {"operator": describe(combo)}))

    bump = Convolution(gaussian_bump(h, 0.0, 1.0))
    d = wiener_hopf_defect(bump, t, tests)
    out.append(CheckRecord("wiener-hopf-bump", A_WH, d, 0.0, tol_c, status_of(d <= tol_c)))

    e = indicator(0.0, 1.0, ctx.grid, ctx.weight)
    e = e * (1.0 / e.norm())
    d = wiener_hopf_defect(rank_one(e), t, ind)
    out.append(CheckRecord("wiener-hopf-rank-one", A_WH, d, ">= 0.1 (not Wiener-Hopf)", 0.1, status_of(d >= 0.1)))

    for where, center in (("positive", 1.0), ("negative", -1.0)):
        T = Convolution(gaussian_bump(h, center, 0.5))
        dr = commutator_defect(T, t, ind, "right")
        dl = commutator_defect(T, t, ind, "left")
        small, large = (dr, dl) if where == "positive" else (dl, dr)
        anchor = A_COMMUTE_R if where == "positive" else A_COMMUTE_L
        near, far = ("right", "left") if where == "positive" else ("left", "right")
        out.append(CheckRecord(f"commutator-{where}-kernel-{near}", anchor, small, 0.0, tol_c, status_of(small <= tol_c)))
        out.append(
            CheckRecord(f"commutator-{where}-kernel-{far}", anchor, large, f">= {floor}", floor, status_of(large >= floor))
        )
    return out


def bound_kernels(h: float):
    b = gaussian_bump(h, 0.0, 1.0)
    s = gaussian_bump(h, 1.5, 1.0)
    return {"bump": b, "shifted-bump": s, "bump-difference": b - gaussian_bump(h, 0.5, 1.0)}


def check_symbol_bound(ctx: Context) -> list[CheckRecord]:
    right, left = ctx.growth()
    strip = strip_U(right, left)
    slack = ctx.cfg["tolerance.bound_slack"]
    out, dump = [], {"strip": strip.to_dict()}
    for name, K in bound_kernels(ctx.h).items():
        T = assemble_matrix(Convolution(K), ctx.grid, ctx.weight)
        bc = symbol_bound_check(T, SymbolFunction.for_kernel(K), strip, ctx.cfg["symbol.tilts"])
        dump[name] = bc.to_dict()
        out.append(
            CheckRecord(
                f"symbol-bound-{name}", A_BOUND, bc.max_ratio, "<= 1 + slack", slack,
                bc.status, {"cr_residual": bc.cr_residual, "operator_norm": bc.operator_norm},
            )
        )
    z = np.array([0.3 + 0.0j, -1.2 + 0.4j, 2.0 - 0.7j])
    lock = max(
        float(np.max(np.abs(SymbolFunction.for_kernel(delta_kernel(ctx.h, t))(z) - shift_symbol(t, "right", z))))
        for t in (ctx.h, 1.0, 2.0)
    )
    out.append(CheckRecord("symbol-convention-lock", A_LOCK, lock, 0.0, 1e-12, status_of(lock <= 1e-12)))
    write_json(dump, ctx.add("symbol_bound.json"))
    return out


def check_rotation(ctx: Context) -> list[CheckRecord]:
    tol = ctx.cfg["tolerance.symmetry"]
    out = []
    for side, cls in (("right", RightShift), ("left", LeftShift)):
        M = assemble_matrix(cls(ctx.t), ctx.grid, ctx.weight)
        worst = 0.0
        for r in (0.5, 1.5):
            base = pseudospectrum(M, [r]).sigma_min[0]
            rot = pseudospectrum(M, r * np.exp(1j * np.array([np.pi / 7, 1.0, 2.5]))).sigma_min
            worst = max(worst, float(np.max(np.abs(rot - base))))
        out.append(CheckRecord(f"rotation-{side}", A_ROTATION, worst, 0.0, tol, status_of(worst <= tol)))
    return out


def check_disks(ctx: Context) -> list[CheckRecord]:
    right, left = ctx.growth()
    nin, nout = ctx.cfg["spectra.inside_samples"], ctx.cfg["spectra.outside_samples"]
    out = []
    for side, cls, est, anchor in (("right", RightShift, right, A_DISK_R), ("left", LeftShift, left, A_DISK_L)):
        R = float(np.exp(est.alpha_hat * ctx.t))
        pts = np.concatenate([disk_samples(0.9 * R, nin), annulus_samples(1.1 * R, 2.0 * R, nout)])
        rep = disk_scan(cls(ctx.t), ctx.weight, ctx.h, ctx.cfg["spectra.n_schedule"], R, pts, ctx.cfg["tolerance.inside"])
        write_json(rep.to_dict(), ctx.add(f"disk_{side}.json"))
        write_rows(
            ctx.add(f"disk_{side}.csv"),
            ["z_re", "z_im", "sigma_min"],
            ((p.z.real, p.z.imag, p.sigma[-1]) for p in rep.points),
        )
        counts = {s: rep.count(s) for s in ("inside", "inconclusive", "outside", "fail", "unclassified")}
        out.append(
            CheckRecord(
                f"disk-scan-{side}", anchor, counts, {"inside": nin, "outside": nout},
                ctx.cfg["tolerance.inside"], rep.status, {"radius": R, "n_schedule": rep.n_schedule},
            )
        )
    return out


def check_symbol_ranges(ctx: Context) -> list[CheckRecord]:
    right, left = ctx.growth()
    depth, margin = ctx.cfg["symbol.depth"], ctx.cfg["symbol.inner_margin"]
    n, tol = ctx.cfg["symbol.samples"], ctx.cfg["tolerance.inclusion"]
    need = ctx.cfg["tolerance.inclusion_fraction"]
    out = []
    for side, spec, strip, anchor in (
        ("right", RightShift(ctx.t), strip_O(right, left, depth), A_RANGE_R),
        ("left", LeftShift(ctx.t), strip_V(right, left, depth), A_RANGE_L),
    ):
        sym = SymbolFunction.for_spec(spec)
        z, lam = symbol_image_samples(sym, strip, n, margin)
        rep = spectrum_inclusion_scan(spec, ctx.weight, ctx.h, ctx.cfg["spectra.n_schedule"], lam, z, tol)
        write_json(rep.to_dict(), ctx.add(f"symbol_range_{side}.json"))
        classes = [s["class"] for s in rep.samples]
        bad = classes.count("inconsistent") + classes.count("failed")
        frac = rep.fraction
        status = "fail" if bad else status_of(True, inconclusive=not frac >= need)
        out.append(
            CheckRecord(
                f"symbol-range-{side}", anchor, frac, f">= {need}", tol, status,
                {c: classes.count(c) for c in sorted(set(classes))},
            )
        )
    return out


def _witness_targets(ctx: Context):
    right, left = ctx.growth()
    strip = strip_U(right, left)
    a = ctx.cfg["witness.a"]
    a = 0.5 * (strip.a_min + strip.a_max) if a is None else float(a)
    eta = ctx.cfg["witness.eta0"]
    shift_eta = np.pi / ctx.t if eta is None else float(eta)
    bump_eta = 0.0 if eta is None else float(eta)
    return strip, a, [("shift", RightShift(ctx.t), shift_eta), ("bump", Convolution(gaussian_bump(ctx.h, 0.0, 1.0)), bump_eta)]


def run_witness(ctx: Context, spec, eta0, a, strip, b, t0, X, N):
    g = build_grid(X, N)
    if isinstance(spec, Convolution):
        spec = Convolution(gaussian_bump(g.h, 0.0, 1.0))
    return quasimode_witness(
        spec, SymbolFunction.for_spec(spec), a, eta0, b, t0, g, ctx.weight,
        ctx.cfg["witness.eps"], ctx.cfg["witness.delta"], strip,
    )


def check_witness(ctx: Context) -> list[CheckRecord]:
    c = ctx.cfg
    strip, a, targets = _witness_targets(ctx)
    slack = c["tolerance.witness_slack"]
    out, dump = [], {}
    for name, spec, eta0 in targets:
        base = run_witness(ctx, spec, eta0, a, strip, c["witness.b"], c["witness.t0"], c["witness.X"], c["witness.N"])
        fine = run_witness(
            ctx, spec, eta0, a, strip, c["witness.b"] / 2, 2 * c["witness.t0"], 2 * c["witness.X"], 2 * c["witness.N"]
        )
        dump[name] = {"base": base.to_dict(), "refined": fine.to_dict()}
        out.append(
            CheckRecord(
                f"quasimode-{name}", A_QUASI, base.residual, "<= symbol-deviation bound", base.tolerance,
                status_of(base.passed), {"lambda": base.lam, "delta": base.delta, "out_of_band": base.out_of_band},
            )
        )
        ok = fine.residual <= (1 + slack) * base.residual
        out.append(
            CheckRecord(
                f"quasimode-{name}-refinement", A_QUASI, [base.residual, fine.residual],
                "non-increasing", slack, status_of(ok and fine.passed),
            )
        )
    write_json(dump, ctx.add("witness.json"))
    return out


# --------------------------------------------------------------------------
# commands


def cmd_weights_check(ctx):
    return check_admissibility(ctx)


def cmd_norms(ctx):
    out = check_exact_norms(ctx)
    spec = ctx.spec()
    M = assemble_matrix(spec, ctx.grid, ctx.weight, ctx.cfg["grid.allow_large"])
    write_json({"operator": describe(spec), "norm": operator_norm(M), **M.provenance()}, ctx.add("operator_norm.json"))
    return out


def cmd_growth(ctx):
    return check_growth(ctx)


def cmd_pseudospec(ctx):
    c = ctx.cfg
    spec = ctx.spec()
    M = assemble_matrix(spec, ctx.grid, ctx.weight, c["grid.allow_large"])
    z = rect_grid(*c["spectra.z_re"], *c["spectra.z_im"], *c["spectra.z_n"])
    ps = pseudospectrum(M, z)
    norm = operator_norm(M)
    side = {"operator.t": ctx.t, "norm": norm}
    if isinstance(spec, (RightShift, LeftShift)):
        right, left = ctx.growth()
        est = right if isinstance(spec, RightShift) else left
        side["predicted_radius"] = float(np.exp(est.alpha_hat * spec.t))
    ctx.artifacts += write_pseudospectrum(ps, ctx.out / "pseudospectrum.csv", side)
    outside = np.abs(ps.z) > norm
    viol = float(np.max((np.abs(ps.z) - norm - ps.sigma_min)[outside], initial=-np.inf))
    return [
        CheckRecord(
            "pseudospectrum-neumann-bound", "resolvent bound beyond the operator norm",
            viol, "<= 0", 1e-9, status_of(viol <= 1e-9 and not ps.failures),
            {"rows": int(ps.z.size), "failures": len(ps.failures)},
        )
    ]


def cmd_symbol(ctx):
    c = ctx.cfg
    spec = ctx.spec()
    sym = SymbolFunction.for_spec(spec)
    right, left = ctx.growth()
    strip = strip_U(right, left)
    tilts = c["symbol.tilts"] or list(strip.tilts())
    xi = np.linspace(*c["symbol.xi"], int(c["symbol.n_xi"]))
    rows = []
    for a in tilts:
        v = sym.on_line(float(a), xi)
        rows += [(float(x), float(a), float(y.real), float(y.imag)) for x, y in zip(xi, v)]
    write_rows(ctx.add("symbol.csv"), ["xi", "a", "re", "im"], rows)
    T = assemble_matrix(spec, ctx.grid, ctx.weight, c["grid.allow_large"])
    bc = symbol_bound_check(T, sym, strip, tilts)
    write_json(bc.to_dict(), ctx.add("symbol_bound.json"))
    return [CheckRecord("symbol-bound", A_BOUND, bc.max_ratio, "<= 1 + slack", c["tolerance.bound_slack"], bc.status)]


def cmd_witness(ctx):
    return check_witness(ctx)


def cmd_verify_all(ctx):
    checks = []
    for step in (
        check_admissibility,
        check_exact_norms,
        check_growth,
        check_defects,
        check_symbol_bound,
        check_rotation,
        check_disks,
        check_symbol_ranges,
        check_witness,
    ):
        checks += step(ctx)
    return checks


COMMANDS = {
    "weights-check": cmd_weights_check,
    "norms": cmd_norms,
    "growth": cmd_growth,
    "pseudospec": cmd_pseudospec,
    "symbol": cmd_symbol,
    "witness": cmd_witness,
    "verify-all": cmd_verify_all,
}
