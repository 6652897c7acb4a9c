"""Machine-checkable identity suite for the chaos/Wick calculus.

Every identity the calculus relies on is duplicated here as a standalone
check with an explicit tolerance, runnable from the CLI. A mutation hook
(`inject_error`) corrupts one documented input per identity so the suite can
demonstrate that it actually detects violations. Truncation-sensitive checks
report the discarded-mass bound they used alongside the verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import ChaosVector, GaussianSpace, basis_vector, chaos_inner
from .harness import empirical_convolution_check, ks_against_density, young_check
from .limit_density import gaussian_limit_series, self_similarity_defect
from .measures import from_coefficients, sample
from .streams import STREAM_VALIDATE, substream
from .wick import TruncationPolicy, gamma, s_transform, stochastic_exponential, wick_power, wick_product

IDENTITY_NAMES = (
    "orthogonality",
    "functor",
    "exponential_group_law",
    "s_transform_factorization",
    "gamma_contraction",
    "self_similarity",
    "young",
    "empirical_convolution",
)


@dataclass(frozen=True)
class IdentityResult:
    name: str
    passed: bool
    max_error: float
    tolerance: float
    tail_bound: float | None = None
    note: str = ""

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "max_error": self.max_error,
            "tolerance": self.tolerance,
            "tail_bound": self.tail_bound,
            "note": self.note,
        }


def _random_vector(space: GaussianSpace, rng, max_degree: int, scale: float = 0.3) -> ChaosVector:
    degcap = min(max_degree, space.max_degree)
    coeffs = np.where(
        space.degrees <= degcap, scale * rng.standard_normal(space.size), 0.0
    )
    return ChaosVector(space, coeffs)


def _check_orthogonality(space: GaussianSpace, rng, mutate: bool) -> IdentityResult:
    tol = 1e-10
    worst = 0.0
    for p in range(space.size):
        left = basis_vector(space, space._table[p].entries)
        if mutate and p == space.size - 1:
            left = -1.0 * left  # deliberate sign corruption
        for q in range(p, space.size):
            right = basis_vector(space, space._table[q].entries)
            expected = space.factorials[p] if p == q else 0.0
            worst = max(worst, abs(chaos_inner(left, right) - expected))
    return IdentityResult("orthogonality", worst <= tol, worst, tol)


def _check_functor(space: GaussianSpace, rng, mutate: bool) -> IdentityResult:
    tol = 1e-10
    worst = 0.0
    for lam in (0.0, 0.3, 1.0):
        f = _random_vector(space, rng, 4)
        g = _random_vector(space, rng, 4)
        left = gamma(lam, wick_product(f, g).vector)
        lam_right = lam / 2.0 if mutate else lam
        right = wick_product(gamma(lam_right, f), gamma(lam, g)).vector
        worst = max(worst, float(np.abs(left.coeffs - right.coeffs).max()))
    return IdentityResult("functor", worst <= tol, worst, tol)


def _check_group_law(space: GaussianSpace, rng, mutate: bool) -> IdentityResult:
    tol = 1e-10
    worst = 0.0
    for _ in range(5):
        h = 0.6 * rng.standard_normal(space.dimension)
        ell = 0.6 * rng.standard_normal(space.dimension)
        prod = wick_product(
            stochastic_exponential(h, space), stochastic_exponential(ell, space)
        ).vector
        target = stochastic_exponential(h - ell if mutate else h + ell, space)
        worst = max(worst, float(np.abs(prod.coeffs - target.coeffs).max()))
    return IdentityResult("exponential_group_law", worst <= tol, worst, tol)


def _check_s_transform(space: GaussianSpace, rng, mutate: bool) -> IdentityResult:
    tol = 1e-10
    worst = 0.0
    tail = 0.0
    h = np.full(space.dimension, 0.3)
    for _ in range(100):
        f = _random_vector(space, rng, 4)
        g = _random_vector(space, rng, 4)
        prod = wick_product(f, g)
        lhs = s_transform(prod.vector, h)
        rhs = s_transform(f, h) * s_transform(g, -h if mutate else h)
        # Capped products lose the pairing mass of the dropped degrees:
        # |missing| <= sqrt(dropped L2 mass) * exp(|h|^2 / 2).
        drop = math.sqrt(max(prod.discarded_mass or 0.0, 0.0)) * math.exp(
            0.5 * float(h @ h)
        )
        tail = max(tail, drop)
        worst = max(worst, max(abs(lhs - rhs) - drop, 0.0))
    return IdentityResult(
        "s_transform_factorization",
        worst <= tol,
        worst,
        tol,
        tail_bound=tail,
        note="errors counted beyond the truncation allowance",
    )


def _check_gamma_contraction(space: GaussianSpace, rng, mutate: bool) -> IdentityResult:
    tol = 1e-12
    worst = -math.inf
    for lam in (0.0, 0.25, 0.7, 1.0):
        f = _random_vector(space, rng, space.max_degree)
        lhs = gamma(lam, f).norm()
        rhs = f.norm()
        excess = (rhs - lhs) if mutate else (lhs - rhs)  # mutated: demand expansion
        worst = max(worst, excess)
    return IdentityResult("gamma_contraction", worst <= tol, max(worst, 0.0), tol)


def _check_self_similarity(space: GaussianSpace, rng, mutate: bool) -> IdentityResult:
    tol = 1e-10
    g = np.zeros((space.dimension, space.dimension))
    g[0, 0] = 0.2
    if space.dimension > 1:
        g[1, 1] = 0.1
    worst = 0.0
    for n in (2, 3, 5):
        if mutate:
            density = gaussian_limit_series(g, space)
            scaled = gamma(1.0 / float(n), density.series)  # wrong exponent
            powered = wick_power(
                scaled, n, TruncationPolicy(space.max_degree, report_discarded=False)
            )
            worst = max(
                worst, float(np.abs(powered.vector.coeffs - density.series.coeffs).max())
            )
        else:
            worst = max(worst, self_similarity_defect(g, n, space))
    return IdentityResult("self_similarity", worst <= tol, worst, tol)


def _check_young(space: GaussianSpace, rng, mutate: bool) -> IdentityResult:
    tol = 1e-12
    worst = -math.inf
    for _ in range(50):
        f = _random_vector(space, rng, 4)
        g = _random_vector(space, rng, 4)
        report = young_check([f, g], [0.5, 0.5])
        excess = (report.rhs - report.lhs) if mutate else (report.lhs - report.rhs)
        worst = max(worst, excess)
    return IdentityResult("young", worst <= tol, max(worst, 0.0), tol)


def _check_empirical_convolution(
    space: GaussianSpace, rng, mutate: bool, ks_samples: int, seed: int
) -> IdentityResult:
    line = GaussianSpace(1, max(space.max_degree, 8))
    coeffs = np.zeros(line.size)
    coeffs[0] = 1.0
    coeffs[line.position((2,))] = 0.1
    f = from_coefficients(coeffs, line)
    if mutate:
        # Sample the sum at equal weights but test it against a prediction
        # built for badly skewed weights; the suite must flag the mismatch.
        x1 = sample(f, ks_samples, seed=seed)[:, 0]
        x2 = sample(f, ks_samples, seed=seed + 1)[:, 0]
        sums = math.sqrt(0.5) * (x1 + x2)
        predicted = wick_product(gamma(math.sqrt(0.1), f), gamma(math.sqrt(0.9), f)).vector
        report = ks_against_density(sums, predicted)
    else:
        report = empirical_convolution_check(f, f, (0.5, 0.5), samples=ks_samples, seed=seed)
    return IdentityResult(
        "empirical_convolution",
        report.passed,
        report.ks_statistic,
        report.critical_value,
    )


def run_identity_suite(
    dimension: int = 2,
    max_degree: int = 8,
    seed: int = 0,
    inject_error: str | None = None,
    ks_samples: int = 20000,
) -> list[IdentityResult]:
    """Run every identity check; `inject_error` corrupts exactly one of them."""
    if inject_error is not None and inject_error not in IDENTITY_NAMES:
        raise ValueError(
            f"unknown identity {inject_error!r}; choose one of {IDENTITY_NAMES}"
        )
    space = GaussianSpace(dimension, max_degree)
    rng = substream(seed, STREAM_VALIDATE)
    results = [
        _check_orthogonality(space, rng, inject_error == "orthogonality"),
        _check_functor(space, rng, inject_error == "functor"),
        _check_group_law(space, rng, inject_error == "exponential_group_law"),
        _check_s_transform(space, rng, inject_error == "s_transform_factorization"),
        _check_gamma_contraction(space, rng, inject_error == "gamma_contraction"),
        _check_self_similarity(space, rng, inject_error == "self_similarity"),
        _check_young(space, rng, inject_error == "young"),
        _check_empirical_convolution(
            space, rng, inject_error == "empirical_convolution", ks_samples, seed
        ),
    ]
    return results
