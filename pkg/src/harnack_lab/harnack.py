"""Empirical Harnack-quotient estimation on subcylinders.

For a positive solution u and a subcylinder [a, b] x B_r, the quotient
sup u / inf u over the subcylinder grid is the quantity a Harnack
inequality would bound.  The toolkit measures it three ways:

* ``sup_inf_ratio`` / ``scan_family``: exact grid extrema for one solution
  or a family; the family maximum is the empirical lower bound on any
  would-be Harnack constant for that drift.
* ``counterexample_scan``: the same quotient along the constant-drift
  family u = e^{-lam x} cosh(sqrt(lam) y), whose ratio e^lam cosh(sqrt(lam))
  grows without bound — drift of one sign admits no Harnack constant.
* ``region_inequality_check``: the restricted form  sup over [a,b] x A_d
  versus inf over [a,b] x inner ball, where A_d collects the y with
  |beta(y)| > d (both signs must be populated).

``window_average_x`` provides the x-averaged field v(x,y) = integral of
u(x+s,y) over |s| <= z, the mollified quantity the sup/inf comparison can
be run against when pointwise values are too rough.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fields import ScalarField, format_float, line_plot_svg
from .operators import CylinderDomain, OperatorSpec, ball_lattice, classify_regions
from .solutions import AnalyticSolution, counterexample_family

__all__ = [
    "SubCylinder",
    "HarnackReport",
    "FamilyScan",
    "RegionCheck",
    "sup_inf_ratio",
    "scan_family",
    "counterexample_scan",
    "region_inequality_check",
    "window_average_x",
    "scan_to_csv",
    "ratio_plot_svg",
]


@dataclass(frozen=True)
class SubCylinder:
    """Closed subcylinder [x_lo, x_hi] x ball(y_radius)."""

    x_lo: float = 0.0
    x_hi: float = 1.0
    y_radius: float = 1.0

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ValueError("x_lo must be below x_hi")
        if not self.y_radius > 0:
            raise ValueError("y_radius must be positive")

    @classmethod
    def from_domain(cls, dom: CylinderDomain) -> "SubCylinder":
        return cls(dom.inner_x_lo, dom.inner_x_hi, dom.y_inner_radius)

    def to_json_dict(self) -> dict:
        return {"x_lo": self.x_lo, "x_hi": self.x_hi, "y_radius": self.y_radius}


@dataclass(frozen=True)
class HarnackReport:
    """Grid extrema of one positive solution over a subcylinder."""

    solution: str
    sup: float
    inf: float
    ratio: float
    argmax: tuple
    argmin: tuple
    subdomain: SubCylinder

    def to_json_dict(self) -> dict:
        return {
            "solution": self.solution,
            "sup": self.sup,
            "inf": self.inf,
            "ratio": self.ratio,
            "argmax": list(self.argmax),
            "argmin": list(self.argmin),
            "subdomain": self.subdomain.to_json_dict(),
        }


@dataclass(frozen=True)
class FamilyScan:
    """Per-solution reports plus the family-wide maximum ratio."""

    family: str
    reports: tuple
    max_ratio: float
    verdict: str | None = None
    params: tuple | None = None

    def to_json_dict(self) -> dict:
        return {"family": self.family, "max_ratio": self.max_ratio, "verdict": self.verdict}


@dataclass(frozen=True)
class RegionCheck:
    """sup over [a,b] x A_d against inf over [a,b] x inner ball."""

    level: float
    sup: float
    inf: float
    ratio: float
    cap: float
    passed: bool
    plus_count: int
    minus_count: int

    def to_json_dict(self) -> dict:
        return {
            "level": self.level,
            "sup": self.sup,
            "inf": self.inf,
            "ratio": self.ratio,
            "cap": self.cap,
            "passed": self.passed,
            "plus_count": self.plus_count,
            "minus_count": self.minus_count,
        }


def _solution_parts(u):
    """(name, n_y, vectorized fn) for a catalog solution or a sampled field."""
    if isinstance(u, ScalarField):
        return u.name, u.n_y, u.at
    if isinstance(u, AnalyticSolution):
        return u.name, u.op.n_y, u.at
    raise TypeError(f"cannot scan a {type(u).__name__}")


def _eval_subgrid(u, sub: SubCylinder, grid: int):
    """Evaluate u on the closed subcylinder lattice; returns (x, y, values)."""
    if grid < 2:
        raise ValueError("grid must have at least 2 nodes per axis")
    name, n_y, fn = _solution_parts(u)
    axes = (np.linspace(sub.x_lo, sub.x_hi, grid),) + (
        np.linspace(-sub.y_radius, sub.y_radius, grid),
    ) * n_y
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = [m.reshape(-1) for m in mesh]
    x = flat[0]
    y = np.stack(flat[1:], axis=-1)
    keep = (y * y).sum(axis=-1) <= sub.y_radius**2 * (1 + 1e-12)
    x, y = x[keep], y[keep]
    return name, x, y, np.asarray(fn(x, y), dtype=float)


def sup_inf_ratio(u, sub: SubCylinder | None = None, grid: int = 101) -> HarnackReport:
    """Exact grid extrema and their quotient; refuses nonpositive fields."""
    sub = sub or SubCylinder()
    name, x, y, vals = _eval_subgrid(u, sub, grid)
    i_min = int(np.argmin(vals))
    i_max = int(np.argmax(vals))
    if vals[i_min] <= 0:
        loc = ", ".join(format(v, "g") for v in (x[i_min], *y[i_min]))
        raise ValueError(
            f"{name} is not positive on the subdomain: min {vals[i_min]:g} at ({loc})"
        )
    return HarnackReport(
        solution=name,
        sup=float(vals[i_max]),
        inf=float(vals[i_min]),
        ratio=float(vals[i_max] / vals[i_min]),
        argmax=(float(x[i_max]), *map(float, y[i_max])),
        argmin=(float(x[i_min]), *map(float, y[i_min])),
        subdomain=sub,
    )


def scan_family(solutions, sub: SubCylinder | None = None, grid: int = 101,
                family: str = "family") -> FamilyScan:
    """Ratio report per solution plus the family maximum."""
    solutions = list(solutions)
    if not solutions:
        raise ValueError("empty solution family")
    reports = tuple(sup_inf_ratio(u, sub, grid) for u in solutions)
    return FamilyScan(
        family=family,
        reports=reports,
        max_ratio=max(r.ratio for r in reports),
    )


def counterexample_scan(lams, sub: SubCylinder | None = None, grid: int = 101,
                        dom: CylinderDomain | None = None) -> FamilyScan:
    """Ratios along the non-sign-changing family, with a divergence verdict.

    Verdict "divergent" means the ratios increase monotonically and the last
    exceeds ten times the first; "bounded" otherwise.  A single-point scan
    gets no verdict.
    """
    lams = [float(v) for v in lams]
    if not lams:
        raise ValueError("empty lambda list")
    if any(v <= 0 for v in lams):
        raise ValueError("lambda values must be positive")
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambda values must be increasing")
    dom = dom or CylinderDomain()
    reports = tuple(
        sup_inf_ratio(counterexample_family(lam, dom), sub, grid) for lam in lams
    )
    ratios = [r.ratio for r in reports]
    if len(ratios) < 2:
        verdict = None
    elif all(b > a for a, b in zip(ratios, ratios[1:])) and ratios[-1] > 10 * ratios[0]:
        verdict = "divergent"
    else:
        verdict = "bounded"
    return FamilyScan(
        family="counterexample",
        reports=reports,
        max_ratio=max(ratios),
        verdict=verdict,
        params=tuple(lams),
    )


def region_inequality_check(
    u,
    op: OperatorSpec,
    dom: CylinderDomain,
    level: float,
    cap: float,
    grid_step: float = 0.01,
) -> RegionCheck:
    """Compare sup over [a,b] x A_d with inf over [a,b] x inner ball.

    A_d is the union of the drift regions at the given level; both signs
    must be populated (a one-signed drift has no level-d Harnack bound).
    The x interval is the domain's inner interval.
    """
    regions = classify_regions(op, dom, level, grid_step)
    missing = [tag for tag, pts in (("+", regions.plus_points), ("-", regions.minus_points))
               if pts.shape[0] == 0]
    if missing:
        sides = ", ".join(f"A_{level:g}^{tag}" for tag in missing)
        raise ValueError(f"empty drift region(s) {sides}; no restricted bound applies")

    name, n_y, fn = _solution_parts(u)
    if n_y != op.n_y:
        raise ValueError("solution and operator dimensions differ")
    n_x = int(round((dom.inner_x_hi - dom.inner_x_lo) / grid_step)) + 1
    x_nodes = np.linspace(dom.inner_x_lo, dom.inner_x_hi, max(n_x, 2))

    def extremum(y_pts, take_max):
        best = None
        for x0 in x_nodes:
            vals = np.asarray(fn(np.full(y_pts.shape[0], x0), y_pts), dtype=float)
            v = float(vals.max() if take_max else vals.min())
            best = v if best is None else (max(best, v) if take_max else min(best, v))
        return best

    a_d = np.concatenate([regions.plus_points, regions.minus_points], axis=0)
    sup_val = extremum(a_d, take_max=True)
    ball_pts, _ = ball_lattice(dom.y_inner_radius, grid_step, op.n_y, closed=True)
    inf_val = extremum(ball_pts, take_max=False)
    if inf_val <= 0:
        raise ValueError(f"{name} is not positive on the inner subcylinder: min {inf_val:g}")
    ratio = sup_val / inf_val
    return RegionCheck(
        level=float(level),
        sup=sup_val,
        inf=inf_val,
        ratio=float(ratio),
        cap=float(cap),
        passed=bool(ratio <= cap),
        plus_count=regions.plus_count,
        minus_count=regions.minus_count,
    )


def _window_weights(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Trapezoid weights over grid slices for the integral on [lo, hi]:
    interior nodes carry their usual coefficient, the window endpoints are
    linearly interpolated from their bracketing slices."""

    def interp_row(pos):
        i = int(np.clip(np.searchsorted(x, pos, side="right") - 1, 0, x.shape[0] - 2))
        theta = (pos - x[i]) / (x[i + 1] - x[i])
        row = np.zeros(x.shape[0])
        row[i] = 1.0 - theta
        row[i + 1] = theta
        return row

    inner = np.nonzero((x > lo + 1e-15) & (x < hi - 1e-15))[0]
    positions = np.concatenate([[lo], x[inner], [hi]])
    rows = [interp_row(lo)] + [None] * inner.shape[0] + [interp_row(hi)]
    gaps = np.diff(positions)
    coeff = np.zeros(positions.shape[0])
    coeff[:-1] += gaps / 2
    coeff[1:] += gaps / 2
    weights = coeff[0] * rows[0] + coeff[-1] * rows[-1]
    weights[inner] += coeff[1:-1]
    return weights


def window_average_x(u: ScalarField, z: float) -> ScalarField:
    """v(x, y) = integral of u(x+s, y) ds for s in [-z, z], by trapezoid.

    Keeps the grid nodes whose window stays inside the x support; the
    half-width is capped at 1/3.
    """
    if not 0 < z <= 1.0 / 3.0 + 1e-12:
        raise ValueError("window half-width z must satisfy 0 < z <= 1/3")
    x = u.axes[0]
    span = x[-1] - x[0]
    tol = 1e-9 * max(1.0, span)
    keep = np.nonzero((x - z >= x[0] - tol) & (x + z <= x[-1] + tol))[0]
    if keep.shape[0] == 0:
        raise ValueError(
            f"insufficient grid margin for window half-width {z:g}: "
            f"x support is [{x[0]:g}, {x[-1]:g}]"
        )
    out = np.empty((keep.shape[0],) + u.values.shape[1:])
    for row, j in enumerate(keep):
        lo = max(x[j] - z, x[0])
        hi = min(x[j] + z, x[-1])
        out[row] = np.tensordot(_window_weights(x, lo, hi), u.values, axes=(0, 0))
    return ScalarField((x[keep],) + u.axes[1:], out, name=f"window_average({u.name})")


def scan_to_csv(scan: FamilyScan, path) -> None:
    """One row per solution: identifier, extrema, locations, ratio."""
    if not scan.reports:
        raise ValueError("nothing to write")
    n_y = len(scan.reports[0].argmax) - 1
    header = ["solution", "sup", "inf", "ratio"]
    header += [f"argmax_{n}" for n in ("x", *[f"y{k+1}" for k in range(n_y)])]
    header += [f"argmin_{n}" for n in ("x", *[f"y{k+1}" for k in range(n_y)])]
    lines = [",".join(header)]
    for rep in scan.reports:
        row = [rep.solution, format_float(rep.sup), format_float(rep.inf),
               format_float(rep.ratio)]
        row += [format_float(v) for v in rep.argmax]
        row += [format_float(v) for v in rep.argmin]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def ratio_plot_svg(scan: FamilyScan) -> str:
    """Ratio against the family parameter (or index), log scale."""
    xs = np.asarray(scan.params if scan.params is not None
                    else np.arange(1, len(scan.reports) + 1), dtype=float)
    ys = np.array([r.ratio for r in scan.reports])
    return line_plot_svg(
        xs, ys,
        title=f"{scan.family}: sup/inf over the subcylinder",
        x_label="family parameter",
        y_label="ratio",
        log_y=bool(np.all(ys > 0)),
    )
