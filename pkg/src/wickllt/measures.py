"""Constructors for test densities and a rejection sampler.

Families covered:
  * raw coefficient vectors (validated: unit mass, nonnegativity screen);
  * finite mixtures of shifted Gaussians, the convolution of the reference
    measure with a finitely supported measure on the shift space;
  * the Gaussian limit density itself for a given excess kernel (fixed
    point of the standardized-sum dynamics);
  * the rank-one quadratic exponential, which admits an independent closed
    form for cross-checking.

Sampling is by rejection against the standard Gaussian with a grid-based
envelope; Philox sub-streams keyed by batch index make the output identical
for a given seed at any worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .audit import GridSpec, check_square_integrability
from .basis import ChaosVector, GaussianSpace, _parent_plan, eval_many
from .limit_density import gaussian_limit_series
from .quadrature import tensor_grid
from .streams import STREAM_SAMPLER, substream


class DensityValidationError(Exception):
    """Candidate coefficients do not describe an admissible density."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class EnvelopeBreachError(Exception):
    """Rejection sampling hit a density value above its envelope."""


@dataclass(frozen=True)
class WeightedShifts:
    """Finitely supported probability measure on the shift space.

    weights: probabilities (sum to one); shifts: one d-vector per atom.
    """

    weights: np.ndarray
    shifts: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        s = np.atleast_2d(np.asarray(self.shifts, dtype=float))
        if w.ndim != 1 or w.shape[0] != s.shape[0]:
            raise ValueError("need one weight per shift")
        if w.min() < 0.0:
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, expected 1")
        w.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "shifts", s)

    @property
    def dimension(self) -> int:
        return self.shifts.shape[1]

    @property
    def count(self) -> int:
        return self.shifts.shape[0]

    def exponential_integrability(self) -> float:
        """sum_j p_j exp(|h_j|^2 / 2); finite for any finite atom list."""
        sq = np.sum(self.shifts * self.shifts, axis=1)
        return float(np.dot(self.weights, np.exp(0.5 * sq)))

    def shift_variance_total(self) -> float:
        """sum_i Var<Y, e_i> of the atomic measure; < 1 is the easy
        sufficient condition for the excess-size hypothesis."""
        mean = self.weights @ self.shifts
        second = float(np.dot(self.weights, np.sum(self.shifts**2, axis=1)))
        return second - float(mean @ mean)

    def to_json_dict(self) -> dict:
        return {
            "weights": [float(x) for x in self.weights],
            "shifts": [[float(x) for x in row] for row in self.shifts],
        }

    @staticmethod
    def from_json_dict(data: dict) -> "WeightedShifts":
        return WeightedShifts(
            np.asarray(data["weights"], dtype=float),
            np.asarray(data["shifts"], dtype=float),
        )


def from_coefficients(
    coeffs,
    space: GaussianSpace,
    grid: GridSpec | None = None,
    negativity_factor: float = 1e-6,
) -> ChaosVector:
    """Validate raw coefficients as a density: unit mass plus a grid screen."""
    vec = ChaosVector(space, np.asarray(coeffs, dtype=float))
    violations = []
    if abs(vec.coeffs[0] - 1.0) > 1e-12:
        violations.append(
            f"normalization: degree-0 coefficient is {float(vec.coeffs[0]):.17g}, expected 1"
        )
    report = check_square_integrability(vec, grid, negativity_factor)
    if not report.verdicts["nonnegativity"].passed:
        violations.append(
            f"nonnegativity: grid minimum {report.min_on_grid:.6g} below floor "
            f"{report.verdicts['nonnegativity'].threshold:.6g}"
        )
    if violations:
        raise DensityValidationError(violations)
    return vec


def shift_mixture(nu: WeightedShifts, space: GaussianSpace, chunk: int = 512) -> ChaosVector:
    """Density of the reference measure convolved with the atomic measure nu.

    Coefficientwise this is sum_j p_j h_j^alpha / alpha!, a convex
    combination of shifted-Gaussian densities; strictly positive with unit
    mass. Atoms are processed in chunks with a one-multiply-per-index
    recursion so large atom counts stay affordable. The result is divided by
    its constant coefficient (= the accumulated weight total, one up to
    summation roundoff) so the mass invariant holds exactly.
    """
    if nu.dimension != space.dimension:
        raise ValueError(
            f"shifts have dimension {nu.dimension}, space has {space.dimension}"
        )
    coord, _, parent = space.cached("parent_plan", _parent_plan)
    acc = np.zeros(space.size)
    n = space.size
    for start in range(0, nu.count, chunk):
        h = nu.shifts[start : start + chunk]
        w = nu.weights[start : start + chunk]
        block = np.empty((n, h.shape[0]))
        block[0] = 1.0
        for p in range(1, n):
            block[p] = block[parent[p]] * h[:, coord[p]]
        acc += block @ w
    acc /= acc[0]
    return ChaosVector(space, acc / space.factorials)


def gaussian_cov(g2, space: GaussianSpace) -> ChaosVector:
    """The limit density itself as a test density (fixed point of the sweep)."""
    return gaussian_limit_series(g2, space).series


def rank_one_quadratic(g, space: GaussianSpace) -> ChaosVector:
    """Series density for the rank-one excess kernel G = g g^T.

    Defined while 2 |g|^2 < 1; pointwise it agrees with rank_one_closed_form
    up to the truncation tail.
    """
    g = np.asarray(g, dtype=float).reshape(-1)
    if g.shape != (space.dimension,):
        raise ValueError(f"direction must have length {space.dimension}")
    sq = float(g @ g)
    if 2.0 * sq >= 1.0:
        raise ValueError(
            f"rank-one quadratic exponential requires 2|g|^2 < 1, got {2 * sq:.6f}"
        )
    return gaussian_limit_series(np.outer(g, g), space).series


def rank_one_closed_form(g, w) -> float | np.ndarray:
    """(1 + 2|g|^2)^{-1/2} exp(<w, g>^2 / (1 + 2|g|^2)), the closed expression
    for the rank-one quadratic exponential."""
    g = np.asarray(g, dtype=float).reshape(-1)
    sq = float(g @ g)
    pts = np.asarray(w, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    proj = pts @ g
    vals = np.exp(proj * proj / (1.0 + 2.0 * sq)) / math.sqrt(1.0 + 2.0 * sq)
    return float(vals[0]) if single else vals


def save_samples_csv(samples: np.ndarray, path) -> None:
    """Write draws as plain CSV, one row per vector, 17-digit coordinates."""
    from .serialize import write_csv

    arr = np.atleast_2d(np.asarray(samples, dtype=float))
    write_csv(path, [f"x{i + 1}" for i in range(arr.shape[1])], arr)


def _envelope_halfwidth(count: int, max_degree: int) -> float:
    # Wide enough that a standard normal sample of this size stays inside
    # with overwhelming probability, padded for polynomial growth.
    return math.sqrt(2.0 * math.log(10.0 * max(count, 2))) + 1.0 + 0.25 * math.sqrt(max_degree)


_ENVELOPE_AXIS_POINTS = {1: 4097, 2: 193, 3: 41, 4: 21}


def sample(
    f: ChaosVector,
    count: int,
    seed: int = 0,
    envelope_factor: float = 1.05,
    halfwidth: float | None = None,
    batch: int = 8192,
) -> np.ndarray:
    """Draw from the measure f dmu by rejection against the reference Gaussian.

    The envelope is envelope_factor times the maximum of f on a dense tensor
    grid whose halfwidth covers the plausible sample range for this count and
    degree. A proposal that evaluates above the envelope aborts the run with
    a diagnostic instead of silently clipping.
    """
    d = f.space.dimension
    if d > 4:
        raise ValueError("rejection sampling is limited to dimension <= 4")
    if count < 1:
        raise ValueError("need a positive sample count")
    hw = halfwidth if halfwidth is not None else _envelope_halfwidth(count, f.space.max_degree)
    grid = tensor_grid(d, _ENVELOPE_AXIS_POINTS[d], hw)
    envelope = envelope_factor * float(eval_many(f, grid).max())
    if envelope <= 0.0:
        raise DensityValidationError(["density is nonpositive on the envelope grid"])
    out = np.empty((count, d))
    got = 0
    batch_index = 0
    max_batches = 2000 + 200 * count // batch
    while got < count:
        if batch_index > max_batches:
            raise EnvelopeBreachError(
                "rejection sampling stalled; acceptance rate too low for envelope "
                f"{envelope:.6g}"
            )
        rng = substream(seed, STREAM_SAMPLER, batch_index)
        batch_index += 1
        pts = rng.standard_normal((batch, d))
        vals = eval_many(f, pts)
        breach = vals > envelope
        if np.any(breach):
            k = int(np.argmax(breach))
            raise EnvelopeBreachError(
                f"envelope too small: density value {vals[k]:.6g} at point "
                f"{pts[k].tolist()} exceeds envelope {envelope:.6g}; enlarge the "
                "grid halfwidth or envelope factor"
            )
        accept = rng.random(batch) * envelope <= np.clip(vals, 0.0, None)
        taken = pts[accept]
        take = min(taken.shape[0], count - got)
        out[got : got + take] = taken[:take]
        got += take
    return out
