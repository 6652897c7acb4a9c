"""Multi-index Hermite basis and chaos coefficient vectors on Gaussian R^d.

The ambient space is R^d with the standard Gaussian measure mu_d. Every
square-integrable function is stored by its coefficients on the product
Hermite basis

    H_alpha(w) = prod_i He_{alpha_i}(w_i),      |alpha| <= max_degree,

where He_n are the probabilists' Hermite polynomials (E[He_n He_m] = n! delta_nm).
A symmetric degree-k tensor kernel T corresponds to the coefficients
c_alpha = (k!/alpha!) T_alpha, so the squared norm of the degree-k slice is
k! |T|^2 and the full norm identity reads ||f||_2^2 = sum_alpha alpha! c_alpha^2.
Under this convention the Wick product acts as a plain additive convolution
of multi-index coefficients (see wick.py).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

# Hard cap on the basis table; a full table of this size is ~100 MB of
# bookkeeping and anything bigger is a config mistake, not a use case.
MAX_BASIS_SIZE = 2_000_000


class ChaosError(Exception):
    """Base class for chaos-representation errors."""


class BasisTooLargeError(ChaosError):
    """Requested index table exceeds the configured memory cap."""


class IncompatibleBasisError(ChaosError):
    """Operands live on different bases."""


class InsufficientDegreeError(ChaosError):
    """Operation needs higher-degree coefficients than the space carries."""


def factorial_float(n: int) -> float:
    """n! as a float; exact integer arithmetic below 21, log-gamma above."""
    if n < 0:
        raise ValueError("factorial of negative integer")
    if n <= 20:
        return float(math.factorial(n))
    return math.exp(math.lgamma(n + 1.0))


@dataclass(frozen=True)
class MultiIndex:
    """A d-tuple of nonnegative integers with its total degree cached."""

    entries: tuple[int, ...]
    degree: int = field(init=False)

    def __post_init__(self) -> None:
        if any(e < 0 for e in self.entries):
            raise ValueError("multi-index entries must be nonnegative")
        object.__setattr__(self, "degree", int(sum(self.entries)))

    def __len__(self) -> int:
        return len(self.entries)


def _compositions(dimension: int, total: int) -> Iterator[tuple[int, ...]]:
    # Weak compositions of `total` into `dimension` parts, first part largest
    # first; concatenated over increasing `total` this is the graded order.
    if dimension == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for tail in _compositions(dimension - 1, total - head):
            yield (head,) + tail


def enumerate_indices(
    dimension: int, max_degree: int, size_cap: int = MAX_BASIS_SIZE
) -> list[MultiIndex]:
    """All multi-indices with |alpha| <= max_degree in graded order.

    Within one degree the order is by decreasing first coordinate, then
    recursively on the remainder; the full table has binom(d + K, K) rows.
    """
    if dimension < 1:
        raise ValueError("dimension must be at least 1")
    if max_degree < 0:
        raise ValueError("max_degree must be nonnegative")
    size = math.comb(dimension + max_degree, max_degree)
    if size > size_cap:
        raise BasisTooLargeError(
            f"basis too large: {size} indices for d={dimension}, K={max_degree} "
            f"(cap {size_cap})"
        )
    out = []
    for total in range(max_degree + 1):
        for entries in _compositions(dimension, total):
            out.append(MultiIndex(entries))
    return out


@dataclass(frozen=True, eq=False)
class GaussianSpace:
    """Finite-dimensional Gaussian model: R^d, standard Gaussian, degree cap K.

    Holds the canonical graded enumeration of all multi-indices with
    |alpha| <= max_degree plus derived lookup tables. Instances are immutable;
    the internal cache only memoizes derived read-only structures.
    """

    dimension: int
    max_degree: int
    size_cap: int = MAX_BASIS_SIZE

    def __post_init__(self) -> None:
        table = enumerate_indices(self.dimension, self.max_degree, self.size_cap)
        indices = np.array([mi.entries for mi in table], dtype=np.int64)
        indices.setflags(write=False)
        degrees = indices.sum(axis=1)
        degrees.setflags(write=False)
        fact_1d = np.array(
            [factorial_float(n) for n in range(self.max_degree + 1)], dtype=float
        )
        factorials = np.prod(fact_1d[indices], axis=1)
        factorials.setflags(write=False)
        position = {mi.entries: p for p, mi in enumerate(table)}
        object.__setattr__(self, "_table", table)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "factorials", factorials)
        object.__setattr__(self, "_position", position)
        object.__setattr__(self, "_cache", {})
        object.__setattr__(self, "_lock", threading.Lock())

    @property
    def size(self) -> int:
        return len(self._table)

    @property
    def index_table(self) -> list[MultiIndex]:
        return list(self._table)

    def position(self, entries: tuple[int, ...]) -> int:
        return self._position[tuple(int(e) for e in entries)]

    def cached(self, key: str, builder: Callable[["GaussianSpace"], object]) -> object:
        """Memoize a derived structure; thread-safe, built at most once."""
        cache = self._cache
        if key not in cache:
            with self._lock:
                if key not in cache:
                    cache[key] = builder(self)
        return cache[key]

    def is_compatible(self, other: "GaussianSpace") -> bool:
        return (
            self.dimension == other.dimension and self.max_degree == other.max_degree
        )


def _require_same_space(f: "ChaosVector", g: "ChaosVector") -> GaussianSpace:
    if f.space is not g.space and not f.space.is_compatible(g.space):
        raise IncompatibleBasisError(
            "incompatible bases: "
            f"(d={f.space.dimension}, K={f.space.max_degree}) vs "
            f"(d={g.space.dimension}, K={g.space.max_degree})"
        )
    return f.space


def hermite_eval(n: int, x):
    """He_n(x) for the probabilists' Hermite polynomials.

    Uses the three-term recurrence He_{n+1} = x He_n - n He_{n-1} with
    He_0 = 1, He_1 = x. Accepts scalars or arrays.
    """
    if n < 0:
        raise ValueError("Hermite order must be nonnegative")
    arr = np.asarray(x, dtype=float)
    prev = np.ones_like(arr)
    if n == 0:
        return prev if arr.shape else float(prev)
    cur = arr.copy()
    for k in range(1, n):
        prev, cur = cur, arr * cur - k * prev
    return cur if arr.shape else float(cur)


def hermite_table(max_order: int, x: np.ndarray) -> np.ndarray:
    """He_0..He_max_order evaluated at x; shape (max_order+1, *x.shape)."""
    arr = np.asarray(x, dtype=float)
    out = np.empty((max_order + 1,) + arr.shape)
    out[0] = 1.0
    if max_order >= 1:
        out[1] = arr
    for k in range(1, max_order):
        out[k + 1] = arr * out[k] - k * out[k - 1]
    return out


@dataclass(frozen=True, eq=False)
class ChaosVector:
    """An L2(mu) element stored as one real coefficient per basis index.

    Immutable after construction; arithmetic returns new vectors. The
    coefficient at position p multiplies H_{alpha_p} in the space's table
    order.
    """

    space: GaussianSpace
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.coeffs, dtype=float)
        if arr.shape != (self.space.size,):
            raise ValueError(
                f"expected {self.space.size} coefficients, got {arr.shape}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    def norm_sq(self) -> float:
        """Exact squared L2 norm: sum_alpha alpha! c_alpha^2."""
        return float(np.dot(self.space.factorials * self.coeffs, self.coeffs))

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def degree_norms_sq(self) -> np.ndarray:
        """Squared L2 mass per chaos degree, length max_degree + 1."""
        w = self.space.factorials * self.coeffs * self.coeffs
        return np.bincount(self.space.degrees, weights=w, minlength=self.space.max_degree + 1)

    def max_nonzero_degree(self) -> int:
        nz = np.nonzero(self.coeffs)[0]
        if nz.size == 0:
            return 0
        return int(self.space.degrees[nz].max())

    def __add__(self, other: "ChaosVector") -> "ChaosVector":
        space = _require_same_space(self, other)
        return ChaosVector(space, self.coeffs + other.coeffs)

    def __sub__(self, other: "ChaosVector") -> "ChaosVector":
        space = _require_same_space(self, other)
        return ChaosVector(space, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "ChaosVector":
        return ChaosVector(self.space, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "ChaosVector":
        return ChaosVector(self.space, -self.coeffs)


def constant_vector(space: GaussianSpace, value: float = 1.0) -> ChaosVector:
    c = np.zeros(space.size)
    c[0] = value
    return ChaosVector(space, c)


def basis_vector(space: GaussianSpace, entries: tuple[int, ...]) -> ChaosVector:
    c = np.zeros(space.size)
    c[space.position(entries)] = 1.0
    return ChaosVector(space, c)


def chaos_inner(f: ChaosVector, g: ChaosVector) -> float:
    """Exact inner product integral f*g dmu = sum_alpha alpha! c_alpha(f) c_alpha(g)."""
    space = _require_same_space(f, g)
    return float(np.dot(space.factorials * f.coeffs, g.coeffs))


def _strip_plan(space: GaussianSpace) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # For each index p > 0: c = first nonzero coordinate, its entry value,
    # and the position of alpha with coordinate c zeroed out. Lets basis
    # evaluation run as one vector multiply per table row.
    n = space.size
    coord = np.zeros(n, dtype=np.int64)
    order = np.zeros(n, dtype=np.int64)
    rest = np.zeros(n, dtype=np.int64)
    for p in range(1, n):
        alpha = space._table[p].entries
        c = next(i for i, e in enumerate(alpha) if e > 0)
        stripped = alpha[:c] + (0,) + alpha[c + 1 :]
        coord[p] = c
        order[p] = alpha[c]
        rest[p] = space.position(stripped)
    return coord, order, rest


def _parent_plan(space: GaussianSpace) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # For each index p > 0: first nonzero coordinate c, its entry value, and
    # the position of alpha - e_c. Supports one-multiply-per-row recursions
    # for monomial powers h^alpha.
    n = space.size
    coord = np.zeros(n, dtype=np.int64)
    entry = np.zeros(n, dtype=np.int64)
    parent = np.zeros(n, dtype=np.int64)
    for p in range(1, n):
        alpha = space._table[p].entries
        c = next(i for i, e in enumerate(alpha) if e > 0)
        reduced = alpha[:c] + (alpha[c] - 1,) + alpha[c + 1 :]
        coord[p] = c
        entry[p] = alpha[c]
        parent[p] = space.position(reduced)
    return coord, entry, parent


def monomial_powers(space: GaussianSpace, h: np.ndarray) -> np.ndarray:
    """h^alpha for every table index, computed by one multiply per row."""
    h = np.asarray(h, dtype=float)
    if h.shape != (space.dimension,):
        raise ValueError(f"expected vector of length {space.dimension}")
    coord, _, parent = space.cached("parent_plan", _parent_plan)
    out = np.empty(space.size)
    out[0] = 1.0
    for p in range(1, space.size):
        out[p] = out[parent[p]] * h[coord[p]]
    return out


def eval_many(f: ChaosVector, points: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Evaluate sum_alpha c_alpha H_alpha at each row of `points`.

    Basis values are filled degree by degree through the strip recursion
    H_alpha = He_{alpha_c}(w_c) * H_{alpha with c zeroed}; memory is bounded
    by chunking over evaluation points.
    """
    space = f.space
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != space.dimension:
        raise ValueError(
            f"points have dimension {pts.shape[1]}, expected {space.dimension}"
        )
    coord, order, rest = space.cached("strip_plan", _strip_plan)
    n = space.size
    out = np.empty(pts.shape[0])
    for start in range(0, pts.shape[0], chunk):
        block = pts[start : start + chunk]
        tabs = [hermite_table(space.max_degree, block[:, i]) for i in range(space.dimension)]
        vals = np.empty((n, block.shape[0]))
        vals[0] = 1.0
        for p in range(1, n):
            vals[p] = tabs[coord[p]][order[p]] * vals[rest[p]]
        out[start : start + block.shape[0]] = f.coeffs @ vals
    return out


def eval_at(f: ChaosVector, w) -> float:
    """Pointwise value of the chaos expansion at a single point."""
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape != (f.space.dimension,):
        raise ValueError(f"point has dimension {w.size}, expected {f.space.dimension}")
    return float(eval_many(f, w[None, :])[0])


@dataclass(frozen=True)
class KernelView:
    """First- and second-order kernels of a density plus the excess kernel.

    mean[i] = c_{e_i}; kernel2[i][i] = c_{2 e_i}, kernel2[i][j] = c_{e_i+e_j}/2
    for i != j; g2 = kernel2 - outer(mean, mean)/2. Both matrices are built
    symmetric entry by entry, never symmetrized after the fact.
    """

    mean: np.ndarray
    kernel2: np.ndarray
    g2: np.ndarray

    def __post_init__(self) -> None:
        for name in ("mean", "kernel2", "g2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def kernel_view(f: ChaosVector) -> KernelView:
    """Extract (f1, f2, G) from the degree-1 and degree-2 coefficients."""
    space = f.space
    if space.max_degree < 2:
        raise InsufficientDegreeError(
            "insufficient degree: kernel extraction needs max_degree >= 2"
        )
    d = space.dimension
    mean = np.zeros(d)
    kernel2 = np.zeros((d, d))
    for i in range(d):
        e_i = tuple(1 if k == i else 0 for k in range(d))
        mean[i] = f.coeffs[space.position(e_i)]
        two_e_i = tuple(2 if k == i else 0 for k in range(d))
        kernel2[i, i] = f.coeffs[space.position(two_e_i)]
        for j in range(i + 1, d):
            e_ij = tuple(1 if k in (i, j) else 0 for k in range(d))
            half = 0.5 * f.coeffs[space.position(e_ij)]
            kernel2[i, j] = half
            kernel2[j, i] = half
    g2 = kernel2 - 0.5 * np.outer(mean, mean)
    return KernelView(mean=mean, kernel2=kernel2, g2=g2)


def from_kernel_view(
    space: GaussianSpace,
    mean: np.ndarray,
    kernel2: np.ndarray,
    constant: float = 1.0,
) -> ChaosVector:
    """Build the vector with given constant, degree-1 and degree-2 kernels."""
    if space.max_degree < 2:
        raise InsufficientDegreeError(
            "insufficient degree: kernel placement needs max_degree >= 2"
        )
    d = space.dimension
    mean = np.asarray(mean, dtype=float)
    kernel2 = np.asarray(kernel2, dtype=float)
    if mean.shape != (d,) or kernel2.shape != (d, d):
        raise ValueError("kernel shapes do not match the space dimension")
    if not np.allclose(kernel2, kernel2.T, atol=0.0):
        raise ValueError("second-order kernel must be exactly symmetric")
    c = np.zeros(space.size)
    c[0] = constant
    for i in range(d):
        e_i = tuple(1 if k == i else 0 for k in range(d))
        c[space.position(e_i)] = mean[i]
        two_e_i = tuple(2 if k == i else 0 for k in range(d))
        c[space.position(two_e_i)] = kernel2[i, i]
        for j in range(i + 1, d):
            e_ij = tuple(1 if k in (i, j) else 0 for k in range(d))
            c[space.position(e_ij)] = 2.0 * kernel2[i, j]
    return ChaosVector(space, c)


def extract_mean(f: ChaosVector) -> np.ndarray:
    """Degree-1 coefficients as a vector (the first chaos kernel)."""
    space = f.space
    d = space.dimension
    if space.max_degree < 1:
        return np.zeros(d)
    mean = np.zeros(d)
    for i in range(d):
        e_i = tuple(1 if k == i else 0 for k in range(d))
        mean[i] = f.coeffs[space.position(e_i)]
    return mean
