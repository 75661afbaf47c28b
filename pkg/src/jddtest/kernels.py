"""Bounded kernels and gram-matrix evaluation.

Two kernel families are provided:

* :class:`RbfKernel`: the workhorse, ``k(a, b) = exp(-||a - b||^2 / sigma^2)``.
  Note the parameterization: the squared distance is divided by ``sigma^2``
  with no factor 2, so the default bandwidth 0.25 is tied to this exact form.
  Values lie in (0, 1], hence the bound K = 1.
* :class:`ExplicitLinearKernel`: ``k(a, b) = <a, b>`` with the identity
  feature map.  It exists so that kernel-space computations can be
  cross-checked against explicit coordinate computations; its declared bound
  K must dominate the self-similarity of any data it touches, and it expects
  data whose pairwise inner products are nonnegative (the framework assumes
  0 <= k <= K throughout).

Squared distances are computed by direct summation of squared coordinate
differences, never via the ||a||^2 + ||b||^2 - 2<a,b> expansion, so that
identical inputs give exactly zero distance.  Kernel values are asserted
against their bounds, never clamped: a violation raises
:class:`~jddtest.errors.BoundViolationError` instead of being masked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import BoundViolationError, InputError
from .rng import rng_from

__all__ = [
    "RbfKernel",
    "ExplicitLinearKernel",
    "KernelSpec",
    "GramPair",
    "FunctionBoundReport",
    "kernel_eval",
    "gram",
    "check_function_bound",
]

# rows per block when evaluating gram matrices; bounds temporary memory at
# BLOCK * n * d floats without affecting any entry's value
_GRAM_BLOCK = 256

# relative slack for floating-point checks of mathematically-true bounds
_BOUND_RTOL = 1e-9

# a random function draw is treated as degenerate when its squared RKHS norm
# falls below this fraction of K * ||c||^2; below it, normalization could not
# be trusted to 1e-9 (see check_function_bound)
_DEGENERATE_NORM_FRACTION = 1e-4


@dataclass(frozen=True)
class RbfKernel:
    """RBF kernel ``exp(-||a - b||^2 / bandwidth^2)``; bound K = 1 always."""

    bandwidth: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise InputError(f"RBF bandwidth must be a positive finite real, got {self.bandwidth}")

    @property
    def bound(self) -> float:
        return 1.0


@dataclass(frozen=True)
class ExplicitLinearKernel:
    """Linear kernel ``<a, b>`` on explicit features of dimension ``feature_dim``.

    ``bound`` must be at least the largest self-similarity ``<v, v>`` of any
    vector the kernel is applied to; operations reject data violating this.
    """

    feature_dim: int
    bound: float = 1.0

    def __post_init__(self) -> None:
        if not (isinstance(self.feature_dim, int) and self.feature_dim >= 1):
            raise InputError(f"feature_dim must be a positive integer, got {self.feature_dim}")
        if not (math.isfinite(self.bound) and self.bound > 0):
            raise InputError(f"kernel bound must be a positive finite real, got {self.bound}")


KernelSpec = Union[RbfKernel, ExplicitLinearKernel]


def as_matrix(vectors, *, name: str = "vectors") -> np.ndarray:
    """Validate and convert a vector collection to a (m, d) float64 matrix."""
    m = np.asarray(vectors, dtype=np.float64)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2:
        raise InputError(f"{name} must be a 2-d array or list of equal-length vectors")
    if m.shape[0] == 0 or m.shape[1] == 0:
        raise InputError(f"{name} must be nonempty with positive dimension, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError(f"{name} contains non-finite entries")
    return np.ascontiguousarray(m)


def _check_linear_data(spec: ExplicitLinearKernel, m: np.ndarray, name: str) -> None:
    if m.shape[1] != spec.feature_dim:
        raise InputError(
            f"{name} has dimension {m.shape[1]}, kernel expects {spec.feature_dim}"
        )
    self_sim = np.einsum("ij,ij->i", m, m)
    worst = float(self_sim.max())
    if worst > spec.bound * (1.0 + _BOUND_RTOL):
        raise InputError(
            f"linear kernel bound violated: max self-similarity {worst} exceeds "
            f"declared bound {spec.bound}; rescale the data or raise the bound"
        )


def _sqdist_block(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    # direct (a-b)^2 summation; identical rows give exactly 0.0
    diff = rows[:, None, :] - cols[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _gram_block(spec: KernelSpec, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    if isinstance(spec, RbfKernel):
        return np.exp(-_sqdist_block(rows, cols) / (spec.bandwidth * spec.bandwidth))
    return np.einsum("ik,jk->ij", rows, cols)


def _assert_bounded(spec: KernelSpec, values: np.ndarray) -> None:
    lo = float(values.min())
    hi = float(values.max())
    k = spec.bound
    if lo < -_BOUND_RTOL * k or hi > k * (1.0 + _BOUND_RTOL):
        raise BoundViolationError(
            f"kernel values must lie in [0, {k}], observed range [{lo}, {hi}]; "
            "values are never clamped, so this indicates a bug or data outside "
            "the kernel's declared bound (e.g. negative inner products under a "
            "linear kernel)"
        )


def kernel_eval(spec: KernelSpec, a, b) -> float:
    """Evaluate ``k(a, b)`` for a single vector pair.

    Symmetric in its arguments, and bitwise consistent with the matching
    entry of :func:`gram` (both run the same vectorized code path).
    """
    av = as_matrix(a, name="a")
    bv = as_matrix(b, name="b")
    if av.shape[0] != 1 or bv.shape[0] != 1:
        raise InputError("kernel_eval takes single vectors; use gram for batches")
    if av.shape[1] != bv.shape[1]:
        raise InputError(f"dimension mismatch: {av.shape[1]} vs {bv.shape[1]}")
    if isinstance(spec, ExplicitLinearKernel):
        _check_linear_data(spec, av, "a")
        _check_linear_data(spec, bv, "b")
    value = _gram_block(spec, av, bv)
    _assert_bounded(spec, value)
    return float(value[0, 0])


def gram(spec: KernelSpec, rows, cols) -> np.ndarray:
    """Gram matrix with entry ``(i, j) = kernel_eval(spec, rows[i], cols[j])``.

    Entries are computed independently (row blocks only bound memory), so the
    result is identical however the work is partitioned.
    """
    r = as_matrix(rows, name="rows")
    c = as_matrix(cols, name="cols")
    if r.shape[1] != c.shape[1]:
        raise InputError(f"dimension mismatch: rows have d={r.shape[1]}, cols d={c.shape[1]}")
    if isinstance(spec, ExplicitLinearKernel):
        _check_linear_data(spec, r, "rows")
        _check_linear_data(spec, c, "cols")
    out = np.empty((r.shape[0], c.shape[0]), dtype=np.float64)
    for start in range(0, r.shape[0], _GRAM_BLOCK):
        stop = min(start + _GRAM_BLOCK, r.shape[0])
        out[start:stop] = _gram_block(spec, r[start:stop], c)
    _assert_bounded(spec, out)
    return out


@dataclass(frozen=True)
class GramPair:
    """The two gram matrices of a sample pair under the x- and y-kernels.

    ``gx`` and ``gy`` share a shape (rows x cols = the two sample sizes) and
    every entry lies in ``[0, bound]``.
    """

    gx: np.ndarray
    gy: np.ndarray
    bound: float

    def __post_init__(self) -> None:
        if self.gx.shape != self.gy.shape:
            raise InputError(f"gram shapes differ: {self.gx.shape} vs {self.gy.shape}")
        if not (math.isfinite(self.bound) and self.bound > 0):
            raise InputError(f"gram bound must be a positive finite real, got {self.bound}")
        for name, g in (("gx", self.gx), ("gy", self.gy)):
            lo, hi = float(g.min()), float(g.max())
            if lo < -_BOUND_RTOL * self.bound or hi > self.bound * (1.0 + _BOUND_RTOL):
                raise BoundViolationError(
                    f"{name} entries must lie in [0, {self.bound}], observed [{lo}, {hi}]"
                )

    @property
    def shape(self) -> tuple[int, int]:
        return self.gx.shape


def gram_pair(kx: KernelSpec, ky: KernelSpec, xs_rows, ys_rows, xs_cols, ys_cols) -> GramPair:
    """Evaluate both kernels on a sample pair and bundle the matrices."""
    return GramPair(
        gx=gram(kx, xs_rows, xs_cols),
        gy=gram(ky, ys_rows, ys_cols),
        bound=max(kx.bound, ky.bound),
    )


@dataclass(frozen=True)
class FunctionBoundReport:
    """Outcome of a randomized check of the unit-ball evaluation bound.

    Any unit-norm function of the kernel's function space satisfies
    ``|f(x)| <= sqrt(K)``; ``max_abs_value`` is the largest ``|f(x)|``
    observed over all non-degenerate random draws.
    """

    max_abs_value: float
    bound: float  # sqrt(K)
    trials: int
    degenerate_draws: int

    @property
    def ok(self) -> bool:
        return self.max_abs_value <= self.bound + 1e-9


def check_function_bound(
    spec: KernelSpec, points, trials: int, seed: int
) -> FunctionBoundReport:
    """Probe ``|f(x)| <= sqrt(K)`` with random unit-norm functions.

    Each trial draws ``f = sum_j c_j phi(p_j)`` with Gaussian coefficients
    over the given points, normalizes it via the gram matrix
    (``||f||^2 = c' G c``), and evaluates ``|f|`` at every point
    (``f(p_i) = (G c)_i``).  Draws whose squared norm is too small relative
    to ``K ||c||^2`` cannot be normalized accurately and are counted as
    degenerate rather than evaluated.
    """
    if not (isinstance(trials, int) and trials >= 1):
        raise InputError(f"trials must be a positive integer, got {trials}")
    pts = as_matrix(points, name="points")
    g = gram(spec, pts, pts)
    n = pts.shape[0]
    rng = rng_from(seed)
    coeffs = rng.standard_normal((trials, n))

    evals = np.einsum("ij,tj->ti", g, coeffs)  # row t holds f_t at every point
    norms_sq = np.einsum("ti,ti->t", evals, coeffs)
    coeff_sq = np.einsum("ti,ti->t", coeffs, coeffs)

    usable = norms_sq >= _DEGENERATE_NORM_FRACTION * spec.bound * coeff_sq
    degenerate = int(trials - usable.sum())
    if usable.any():
        peak = np.abs(evals[usable]).max(axis=1) / np.sqrt(norms_sq[usable])
        max_abs = float(peak.max())
    else:
        max_abs = 0.0
    return FunctionBoundReport(
        max_abs_value=max_abs,
        bound=math.sqrt(spec.bound),
        trials=trials,
        degenerate_draws=degenerate,
    )
