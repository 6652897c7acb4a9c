"""Numeric audits of the standing hypotheses behind the limit theorem.

Three checks gate every experiment, each reported with the measured quantity
and an explicit tolerance:

  * square-integrability / normalization: the candidate is a unit-mass L2
    density, and its truncated representative stays nonnegative on a screen
    grid (truncation may dip slightly negative, hence a relative floor);
  * variance domination: M = 2 f2 - f1 f1^T is positive semidefinite, i.e.
    Var<X, h> >= |h|^2 for every direction (the trace of M is reported for
    the record; it is trivially finite here);
  * excess-size: |M|_F^2 < 1, the quantitative condition that makes the
    limit density square integrable. The spectral radius of M (= 2G) is
    reported alongside as the exact admissibility quantity.

The variance identity Var<X, h> = h^T M h + |h|^2 is checkable against a
quadrature oracle in low dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .basis import ChaosVector, eval_many, kernel_view
from .quadrature import tensor_grid, tensor_rule
from .streams import STREAM_AUDIT, substream


class AssumptionViolationError(Exception):
    """A standing hypothesis fails and no override was requested."""


class CheckResult(NamedTuple):
    passed: bool
    measured: float
    threshold: float


@dataclass(frozen=True)
class GridSpec:
    """Screening grid: tensor grid for d <= 3, Gaussian Monte Carlo beyond."""

    points_per_axis: int = 41
    halfwidth: float = 3.5
    mc_points: int = 4096
    seed: int = 2024

    def build(self, dimension: int) -> np.ndarray:
        if dimension <= 3:
            return tensor_grid(dimension, self.points_per_axis, self.halfwidth)
        rng = substream(self.seed, STREAM_AUDIT)
        pts = rng.standard_normal((self.mc_points, dimension))
        return np.vstack([np.zeros((1, dimension)), pts])


@dataclass
class AssumptionReport:
    """Measured quantities and verdicts for all standing hypotheses."""

    l2_norm: float | None = None
    normalization: float | None = None
    min_on_grid: float | None = None
    min_eigenvalue_m: float | None = None
    trace_m: float | None = None
    frobenius_sq_m: float | None = None
    spectral_radius_2g: float | None = None
    verdicts: dict[str, CheckResult] = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts.values())

    def failing(self) -> list[str]:
        return [name for name, v in self.verdicts.items() if not v.passed]

    def merged(self, other: "AssumptionReport") -> "AssumptionReport":
        out = AssumptionReport()
        for name in (
            "l2_norm",
            "normalization",
            "min_on_grid",
            "min_eigenvalue_m",
            "trace_m",
            "frobenius_sq_m",
            "spectral_radius_2g",
        ):
            mine = getattr(self, name)
            theirs = getattr(other, name)
            setattr(out, name, theirs if theirs is not None else mine)
        out.verdicts = {**self.verdicts, **other.verdicts}
        return out

    def to_json_dict(self) -> dict:
        return {
            "l2_norm": self.l2_norm,
            "normalization": self.normalization,
            "min_on_grid": self.min_on_grid,
            "min_eigenvalue_m": self.min_eigenvalue_m,
            "trace_m": self.trace_m,
            "frobenius_sq_m": self.frobenius_sq_m,
            "spectral_radius_2g": self.spectral_radius_2g,
            "all_passed": self.all_passed,
            "verdicts": {
                name: {
                    "passed": v.passed,
                    "measured": v.measured,
                    "threshold": v.threshold,
                }
                for name, v in self.verdicts.items()
            },
        }


def check_square_integrability(
    f: ChaosVector, grid: GridSpec | None = None, negativity_factor: float = 1e-6
) -> AssumptionReport:
    """Unit mass, finite L2 norm, and a nonnegativity screen on the grid.

    The norm is always finite at truncation and recorded for the report. The
    grid minimum may dip slightly below zero for truncated representatives;
    the pass floor is -negativity_factor * ||f||_2.
    """
    grid = grid or GridSpec()
    report = AssumptionReport()
    report.l2_norm = f.norm()
    report.normalization = float(f.coeffs[0])
    pts = grid.build(f.space.dimension)
    report.min_on_grid = float(eval_many(f, pts).min())
    report.verdicts["normalization"] = CheckResult(
        abs(report.normalization - 1.0) <= 1e-12, report.normalization, 1e-12
    )
    floor = -negativity_factor * report.l2_norm
    report.verdicts["nonnegativity"] = CheckResult(
        report.min_on_grid >= floor, report.min_on_grid, floor
    )
    return report


def check_variance_domination(f: ChaosVector) -> AssumptionReport:
    """M = 2 f2 - f1 f1^T must be PSD; its trace is reported for the record."""
    view = kernel_view(f)
    m = 2.0 * view.g2
    eig = np.linalg.eigvalsh(m)
    report = AssumptionReport()
    report.min_eigenvalue_m = float(eig.min())
    report.trace_m = float(np.trace(m))
    report.verdicts["variance_domination"] = CheckResult(
        report.min_eigenvalue_m >= -1e-10, report.min_eigenvalue_m, -1e-10
    )
    return report


def check_excess_size(f: ChaosVector) -> AssumptionReport:
    """|M|_F^2 strictly below one; reports the spectral radius of 2G as well.

    The Frobenius condition is the sufficient hypothesis; the spectral radius
    is the exact admissibility quantity for the limit density and always
    satisfies rho(2G) <= |M|_F.
    """
    view = kernel_view(f)
    m = 2.0 * view.g2
    eig = np.linalg.eigvalsh(m)
    report = AssumptionReport()
    report.frobenius_sq_m = float(np.sum(m * m))
    report.spectral_radius_2g = float(np.abs(eig).max())
    report.verdicts["excess_frobenius"] = CheckResult(
        report.frobenius_sq_m < 1.0, report.frobenius_sq_m, 1.0
    )
    return report


class VariancePairing(NamedTuple):
    formula_value: float
    quadrature_value: float | None


def variance_pairing(
    f: ChaosVector, h, max_quadrature_dim: int = 3
) -> VariancePairing:
    """Var<X, h> two ways: the kernel formula h^T M h + |h|^2 and quadrature.

    The quadrature side integrates <w,h>^2 f and <w,h> f exactly (the
    integrands are polynomials of degree max_degree + 2). Above the dimension
    cut only the formula value is returned.
    """
    h = np.asarray(h, dtype=float).reshape(-1)
    space = f.space
    if h.shape != (space.dimension,):
        raise ValueError(f"direction must have length {space.dimension}")
    view = kernel_view(f)
    m = 2.0 * view.g2
    formula = float(h @ m @ h + h @ h)
    if space.dimension > max_quadrature_dim:
        return VariancePairing(formula, None)
    nodes = (space.max_degree + 3) // 2 + 1
    pts, wts = tensor_rule(space.dimension, max(nodes, 8))
    fvals = eval_many(f, pts)
    proj = pts @ h
    second = float(np.dot(wts, proj * proj * fvals))
    first = float(np.dot(wts, proj * fvals))
    return VariancePairing(formula, second - first * first)


def audit_density(f: ChaosVector, grid: GridSpec | None = None) -> AssumptionReport:
    """Run all standing-hypothesis checks and merge the verdicts."""
    report = check_square_integrability(f, grid)
    if f.space.max_degree >= 2:
        report = report.merged(check_variance_domination(f))
        report = report.merged(check_excess_size(f))
    return report
