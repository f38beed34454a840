"""Verification records and canonical (byte-stable) serialization."""
from __future__ import annotations

import csv
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

STATUSES = ("pass", "fail", "inconclusive")


def _canon(obj) -> Any:
    if isinstance(obj, dict):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_canon(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def _emit(obj, indent: int, level: int, out: list):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = sorted(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(f"{pad}{_string(k)}: ")
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list)) for v in obj):
            out.append("[" + ", ".join(_scalar(v) for v in obj) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "]")
    else:
        out.append(_scalar(obj))


def _string(s: str) -> str:
    import json

    return json.dumps(s, ensure_ascii=True)


def _scalar(v) -> str:
    if v is None:
        return "null"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return '"NaN"'
        if math.isinf(v):
            return '"Infinity"' if v > 0 else '"-Infinity"'
        return format(v, ".17g")
    return _string(v)


def canonical_json(obj, indent: int = 1) -> str:
    """JSON with sorted keys and every float written with 17 significant digits."""
    out: list[str] = []
    _emit(_canon(obj), indent, 0, out)
    return "".join(out) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(canonical_json(obj))


@dataclass
class CheckRecord:
    name: str
    anchor: str
    measured: Any
    expected: Any
    tolerance: Any
    status: str
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"bad status {self.status!r}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "measured": self.measured,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "status": self.status,
            "details": self.details,
        }


def status_of(ok: bool, inconclusive: bool = False) -> str:
    if not ok:
        return "fail"
    return "inconclusive" if inconclusive else "pass"


def environment() -> dict:
    import scipy

    from . import __version__

    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "wienerhopf": __version__,
    }


@dataclass
class VerificationReport:
    command: str
    checks: list[CheckRecord]
    config: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)

    @property
    def status(self) -> str:
        s = {c.status for c in self.checks}
        if "fail" in s:
            return "fail"
        if "inconclusive" in s:
            return "inconclusive"
        return "pass"

    def to_dict(self) -> dict:
        if not self.checks:
            raise ValueError("a verification report needs at least one check")
        return {
            "command": self.command,
            "status": self.status,
            "counts": {s: sum(c.status == s for c in self.checks) for s in STATUSES},
            "checks": [c.to_dict() for c in self.checks],
            "config": self.config,
            "environment": environment(),
            "artifacts": sorted(self.artifacts),
        }


def write_report(report: VerificationReport, path) -> None:
    write_json(report.to_dict(), path)


def write_rows(path, header, rows) -> None:
    """CSV writer with round-trip float formatting."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])


def write_pseudospectrum(ps, path, sidecar: Optional[dict] = None) -> list[str]:
    """``z_re,z_im,sigma_min`` CSV plus a JSON sidecar with provenance."""
    path = Path(path)
    write_rows(
        path,
        ["z_re", "z_im", "sigma_min"],
        ((float(z.real), float(z.imag), float(s)) for z, s in zip(ps.z, ps.sigma_min)),
    )
    meta = dict(ps.provenance)
    meta.update(sidecar or {})
    meta["failures"] = ps.failures
    meta["rows"] = int(ps.z.size)
    side = path.with_suffix(".json")
    write_json(meta, side)
    return [path.name, side.name]
