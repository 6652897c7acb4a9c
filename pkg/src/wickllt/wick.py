"""Wick product, degreewise scaling, stochastic exponentials, centering.

On the coefficient representation of basis.py the Wick product is the
additive convolution of multi-indices,

    c_gamma(f <> g) = sum_{alpha + beta = gamma} c_alpha(f) c_beta(g),

which realizes the kernel-level rule (degree-k) <> (degree-j) -> degree-(k+j)
with symmetrized tensor kernels. The scaling operator gamma(lambda)
multiplies degree-k coefficients by lambda^k; gamma(exp(-t)) is the
Ornstein-Uhlenbeck semigroup, and ou_apply provides an independent
Monte-Carlo check of that identity through the Mehler integral form.

Products are truncated at a cap degree. The truncated L2 mass is reported
exactly when enumerating the overflow degrees is affordable, and otherwise
as a documented upper bound from degreewise norms (flagged as such).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .basis import (
    ChaosVector,
    GaussianSpace,
    ChaosError,
    _require_same_space,
    constant_vector,
    enumerate_indices,
    eval_at,
    eval_many,
    extract_mean,
    factorial_float,
    monomial_powers,
)
from .streams import substream

# Enumerating decompositions of overflow degrees costs one table row per
# (alpha, beta) pair; above this many pairs the exact discarded mass is
# replaced by the norm bound.
EXT_PAIR_BUDGET = 3_000_000


class NotNormalizedError(ChaosError):
    """Density operation applied to a vector whose mass is not one."""


@dataclass(frozen=True)
class TruncationPolicy:
    """Degree cap for Wick products plus discarded-mass reporting switch."""

    cap_degree: int
    report_discarded: bool = True

    def __post_init__(self) -> None:
        if self.cap_degree < 0:
            raise ValueError("cap_degree must be nonnegative")


class WickResult(NamedTuple):
    vector: ChaosVector
    discarded_mass: float | None
    mass_is_bound: bool


def _encode_radix(indices: np.ndarray, base: int) -> np.ndarray:
    # Mixed-radix key per row; caller guarantees base**d fits in int64.
    d = indices.shape[1]
    powers = base ** np.arange(d, dtype=np.int64)
    return indices @ powers


def _pair_table(space: GaussianSpace):
    """All ordered index pairs with |alpha|+|beta| <= K, grouped by out degree.

    Returns (i_idx, j_idx, out_idx, degree_offsets) where degree_offsets[m]
    is the first pair whose output degree is m; slicing at
    degree_offsets[cap+1] restricts a convolution to outputs of degree <= cap.
    """

    def build(sp: GaussianSpace):
        k_max = sp.max_degree
        base = k_max + 1
        if base ** sp.dimension >= 2**62:
            raise ChaosError("index table too wide for radix keys")
        keys = _encode_radix(sp.indices, base)
        order = np.argsort(keys)
        keys_sorted = keys[order]
        deg_pos = [np.nonzero(sp.degrees == m)[0] for m in range(k_max + 1)]
        chunks_i, chunks_j, chunks_out = [], [], []
        offsets = np.zeros(k_max + 2, dtype=np.int64)
        total = 0
        for m in range(k_max + 1):
            offsets[m] = total
            for a in range(m + 1):
                ia, ib = deg_pos[a], deg_pos[m - a]
                if ia.size == 0 or ib.size == 0:
                    continue
                sums = sp.indices[ia][:, None, :] + sp.indices[ib][None, :, :]
                out = order[
                    np.searchsorted(keys_sorted, _encode_radix(sums.reshape(-1, sp.dimension), base))
                ]
                chunks_i.append(np.repeat(ia, ib.size))
                chunks_j.append(np.tile(ib, ia.size))
                chunks_out.append(out)
                total += out.size
        offsets[k_max + 1] = total
        return (
            np.concatenate(chunks_i),
            np.concatenate(chunks_j),
            np.concatenate(chunks_out),
            offsets,
        )

    return space.cached("pair_table", build)


def _overflow_table(space: GaussianSpace):
    """Pair table for output degrees K+1 .. 2K, or None when unaffordable.

    Output positions refer to a local enumeration of the overflow indices;
    the matching factorials come along for exact mass computation.
    """

    def build(sp: GaussianSpace):
        d, k_max = sp.dimension, sp.max_degree
        n_pairs = math.comb(2 * d + 2 * k_max, 2 * k_max) - math.comb(2 * d + k_max, k_max)
        if n_pairs > EXT_PAIR_BUDGET:
            return None
        over = [
            mi
            for mi in enumerate_indices(d, 2 * k_max, size_cap=2 * EXT_PAIR_BUDGET)
            if mi.degree > k_max
        ]
        over_idx = np.array([mi.entries for mi in over], dtype=np.int64)
        base = 2 * k_max + 1
        if base**d >= 2**62:
            return None
        keys = _encode_radix(over_idx, base)
        order = np.argsort(keys)
        keys_sorted = keys[order]
        fact_1d = np.array([factorial_float(n) for n in range(2 * k_max + 1)])
        over_fact = np.prod(fact_1d[over_idx], axis=1)
        deg_pos = [np.nonzero(sp.degrees == m)[0] for m in range(k_max + 1)]
        chunks_i, chunks_j, chunks_out = [], [], []
        for m in range(k_max + 1, 2 * k_max + 1):
            for a in range(m - k_max, k_max + 1):
                ia, ib = deg_pos[a], deg_pos[m - a]
                if ia.size == 0 or ib.size == 0:
                    continue
                sums = sp.indices[ia][:, None, :] + sp.indices[ib][None, :, :]
                out = order[
                    np.searchsorted(keys_sorted, _encode_radix(sums.reshape(-1, d), base))
                ]
                chunks_i.append(np.repeat(ia, ib.size))
                chunks_j.append(np.tile(ib, ia.size))
                chunks_out.append(out)
        if not chunks_i:
            return (
                np.zeros(0, np.int64),
                np.zeros(0, np.int64),
                np.zeros(0, np.int64),
                over_fact,
            )
        return (
            np.concatenate(chunks_i),
            np.concatenate(chunks_j),
            np.concatenate(chunks_out),
            over_fact,
        )

    return space.cached("overflow_table", build)


def _discarded_bound(f: ChaosVector, g: ChaosVector, cap: int) -> float:
    # Upper bound on the dropped L2 mass from degreewise norms: within each
    # overflow degree m, triangle inequality over (k, j) splits combined with
    # ||(deg k) <> (deg j)||^2 <= binom(m, k) ||f_k||^2 ||g_j||^2.
    nf = np.sqrt(f.degree_norms_sq())
    ng = np.sqrt(g.degree_norms_sq())
    top_f = f.max_nonzero_degree()
    top_g = g.max_nonzero_degree()
    total = 0.0
    for m in range(cap + 1, top_f + top_g + 1):
        s = 0.0
        for k in range(max(0, m - top_g), min(top_f, m) + 1):
            s += math.sqrt(math.comb(m, k)) * nf[k] * ng[m - k]
        total += s * s
    return total


def wick_product(
    f: ChaosVector, g: ChaosVector, policy: TruncationPolicy | None = None
) -> WickResult:
    """Truncated Wick product with a report of the L2 mass dropped by the cap.

    Bilinear, commutative, and exact on all output degrees <= cap_degree;
    the unit element is the constant one. H_alpha <> H_beta = H_{alpha+beta}.
    """
    space = _require_same_space(f, g)
    if policy is None:
        policy = TruncationPolicy(space.max_degree)
    cap = policy.cap_degree
    if cap > space.max_degree:
        raise ValueError("cap_degree exceeds the space's max_degree")
    i_idx, j_idx, out_idx, offsets = _pair_table(space)
    stop = offsets[cap + 1]
    prod = np.bincount(
        out_idx[:stop],
        weights=f.coeffs[i_idx[:stop]] * g.coeffs[j_idx[:stop]],
        minlength=space.size,
    )
    vec = ChaosVector(space, prod)
    if not policy.report_discarded:
        return WickResult(vec, None, False)
    top = f.max_nonzero_degree() + g.max_nonzero_degree()
    if top <= cap:
        return WickResult(vec, 0.0, False)
    # Drops between cap and the table's max degree are representable and are
    # recovered exactly by rerunning the convolution without the cap.
    mid = 0.0
    if cap < space.max_degree:
        full = np.bincount(
            out_idx, weights=f.coeffs[i_idx] * g.coeffs[j_idx], minlength=space.size
        )
        diff = full - prod
        mid = float(np.dot(space.factorials * diff, diff))
    if top <= space.max_degree:
        return WickResult(vec, mid, False)
    over = _overflow_table(space)
    if over is not None:
        oi, oj, oout, ofact = over
        dropped = np.bincount(
            oout, weights=f.coeffs[oi] * g.coeffs[oj], minlength=ofact.size
        )
        return WickResult(vec, mid + float(np.dot(ofact * dropped, dropped)), False)
    return WickResult(vec, mid + _discarded_bound(f, g, space.max_degree), True)


def wick_power(
    f: ChaosVector, n: int, policy: TruncationPolicy | None = None
) -> WickResult:
    """n-th Wick power by binary exponentiation with per-step capping.

    Capped convolution never corrupts degrees <= cap, so the result agrees
    with the n-fold product on every represented degree regardless of the
    multiplication order. Discarded masses accumulate over the steps.
    """
    if n < 0:
        raise ValueError("Wick power needs a nonnegative exponent")
    if policy is None:
        policy = TruncationPolicy(f.space.max_degree)
    if n == 0:
        return WickResult(constant_vector(f.space), 0.0 if policy.report_discarded else None, False)
    result: ChaosVector | None = None
    base = f
    dropped = 0.0 if policy.report_discarded else None
    is_bound = False
    remaining = n
    while True:
        if remaining & 1:
            if result is None:
                result = base
            else:
                step = wick_product(result, base, policy)
                result = step.vector
                if dropped is not None and step.discarded_mass is not None:
                    dropped += step.discarded_mass
                    is_bound = is_bound or step.mass_is_bound
        remaining >>= 1
        if remaining == 0:
            break
        step = wick_product(base, base, policy)
        base = step.vector
        if dropped is not None and step.discarded_mass is not None:
            dropped += step.discarded_mass
            is_bound = is_bound or step.mass_is_bound
    return WickResult(result, dropped, is_bound)


def gamma(lam: float, f: ChaosVector) -> ChaosVector:
    """Degreewise scaling: coefficient at degree k picks up lambda^k.

    Defined for lambda in [0, 1]; gamma(1) is the identity and
    gamma(exp(-t)) is the Ornstein-Uhlenbeck semigroup at time t. Values
    outside [0, 1] are rejected, not extrapolated.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"scaling parameter must lie in [0, 1], got {lam}")
    scale = np.power(float(lam), f.space.degrees.astype(float))
    if lam == 0.0:
        scale = np.where(f.space.degrees == 0, 1.0, 0.0)
    return ChaosVector(f.space, f.coeffs * scale)


class OuEstimate(NamedTuple):
    value: float
    standard_error: float


def ou_apply(
    t: float,
    f: ChaosVector,
    w,
    mc_samples: int = 4096,
    seed: int = 0,
) -> OuEstimate:
    """Monte-Carlo Mehler-integral evaluation of the OU semigroup at a point.

    Estimates E[f(exp(-t) w + sqrt(1 - exp(-2t)) W)] with W standard normal;
    converges to eval_at(gamma(exp(-t), f), w) as the sample count grows.
    Exists as an oracle for the coefficient route, hence sampling rather
    than quadrature.
    """
    if t < 0:
        raise ValueError("time parameter must be nonnegative")
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape != (f.space.dimension,):
        raise ValueError("point dimension mismatch")
    decay = math.exp(-t)
    spread = math.sqrt(max(0.0, 1.0 - decay * decay))
    if spread == 0.0:
        return OuEstimate(eval_at(f, w), 0.0)
    rng = substream(seed, 5)
    pts = decay * w[None, :] + spread * rng.standard_normal((mc_samples, f.space.dimension))
    vals = eval_many(f, pts)
    se = float(vals.std(ddof=1) / math.sqrt(mc_samples))
    return OuEstimate(float(vals.mean()), se)


def stochastic_exponential(h, space: GaussianSpace) -> ChaosVector:
    """Density of the h-shifted Gaussian: coefficients h^alpha / alpha!.

    Pointwise this is exp(<w, h> - |h|^2/2) up to the truncation tail.
    """
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.shape != (space.dimension,):
        raise ValueError(f"shift must have length {space.dimension}")
    coeffs = monomial_powers(space, h) / space.factorials
    return ChaosVector(space, coeffs)


def s_transform(f: ChaosVector, h) -> float:
    """sum_alpha c_alpha h^alpha, the pairing of f with a stochastic exponential.

    Equals chaos_inner(f, stochastic_exponential(h)) but is computed in closed
    form without building the exponential; turns Wick products into ordinary
    products of values.
    """
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.shape != (f.space.dimension,):
        raise ValueError(f"argument must have length {f.space.dimension}")
    return float(np.dot(f.coeffs, monomial_powers(f.space, h)))


def center_density(
    f: ChaosVector, policy: TruncationPolicy | None = None
) -> ChaosVector:
    """Density of the centered variable: f Wick-multiplied by the opposite shift.

    Requires unit mass (degree-0 coefficient one). The result has zero
    degree-1 coefficients and its degree-2 kernel equals the excess kernel
    G = f2 - f1 f1^T / 2 of the input.
    """
    if abs(f.coeffs[0] - 1.0) > 1e-12:
        raise NotNormalizedError(
            f"not a normalized density: degree-0 coefficient is {float(f.coeffs[0]):.17g}"
        )
    mean = extract_mean(f)
    shift = stochastic_exponential(-mean, f.space)
    return wick_product(f, shift, policy).vector
