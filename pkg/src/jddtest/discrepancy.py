"""Joint-distribution discrepancy estimators and Rademacher diagnostics.

The central quantity is the biased empirical joint distribution discrepancy
(JDD) between two paired samples.  With samples ``(x_i, y_i), i < m`` and
``(x'_j, y'_j), j < n`` and bounded kernels ``k_x``, ``k_y``, its square is

    (1/m^2) sum_ij k_x(x_i,x_j) k_y(y_i,y_j)
  + (1/n^2) sum_ij k_x(x'_i,x'_j) k_y(y'_i,y'_j)
  - (2/mn)  sum_ij k_x(x_i,x'_j) k_y(y_i,y'_j)

and the reported value is the (unsquared) square root.  The same number is
computed three independent ways so each path can serve as an oracle for the
others:

* :func:`jdd_biased`: the fast path, via gram matrices, with row-by-row
  fixed-order accumulation through exact extended-precision sums;
* :func:`jdd_naive_oracle`: deliberately naive nested loops over vector
  pairs with Kahan-compensated accumulation and no gram materialization;
* :func:`jdd_embedding_oracle`: for explicit linear features only, the
  Frobenius distance between the empirical mean outer products, which equals
  the gram form through the tensor-product identity
  ``<a (x) b, c (x) d> = <a, c><b, d>``.

The Rademacher helpers quantify how large the statistic can get under random
sign flips of one sample: :func:`rademacher_draw_value` is the exact
unit-ball supremum for one sign assignment, :func:`rademacher_mc_estimate`
the Monte Carlo average over signs, and :func:`rademacher_jensen_bound` the
closed-form bound ``(1/m) sqrt(sum_i k_x(x_i,x_i) k_y(y_i,y_i))`` obtained by
moving the expectation inside the square root, itself at most ``K/sqrt(m)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundViolationError, InputError
from .kernels import (
    ExplicitLinearKernel,
    KernelSpec,
    RbfKernel,
    _check_linear_data,
    as_matrix,
    gram,
)
from .rng import rng_from

__all__ = [
    "PairedSample",
    "JddValue",
    "RademacherDraw",
    "RademacherEstimate",
    "jdd_biased",
    "jdd_naive_oracle",
    "jdd_embedding_oracle",
    "mmd_biased",
    "rademacher_draw",
    "rademacher_draw_value",
    "rademacher_mc_estimate",
    "rademacher_jensen_bound",
]

# a radicand this far below zero cannot be floating-point noise from a true 0
RADICAND_TOL = 1e-9

# sign-vector batch size for the Monte Carlo estimator; fixed so the
# reduction schedule (and hence every bit of the result) never varies
_MC_BLOCK = 64

_NAIVE_SUM = None  # lazily compiled nested-loop kernel


@dataclass(frozen=True, eq=False)
class PairedSample:
    """An m-row collection of paired observations (x_i, y_i).

    ``xs`` has shape (m, d_x) and ``ys`` shape (m, d_y); rows are paired by
    index.  Entries must be finite.
    """

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self) -> None:
        xs = as_matrix(self.xs, name="xs")
        ys = as_matrix(self.ys, name="ys")
        if xs.shape[0] != ys.shape[0]:
            raise InputError(
                f"xs and ys must pair up row-for-row: {xs.shape[0]} vs {ys.shape[0]} rows"
            )
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def m(self) -> int:
        return self.xs.shape[0]

    @property
    def dx(self) -> int:
        return self.xs.shape[1]

    @property
    def dy(self) -> int:
        return self.ys.shape[1]


@dataclass(frozen=True)
class JddValue:
    """A discrepancy value together with its pre-square-root diagnostics.

    ``value = sqrt(max(squared_sum, 0))``; ``squared_sum`` keeps the raw
    radicand, which can dip a hair below zero in floating point when the two
    samples nearly coincide.  ``clamped`` says the clamp was active;
    ``clamp_suspect`` says it was active beyond what rounding can explain,
    which indicates a bug upstream.
    """

    value: float
    m: int
    n: int
    squared_sum: float

    @property
    def clamped(self) -> bool:
        return self.squared_sum < 0.0

    @property
    def clamp_suspect(self) -> bool:
        return self.squared_sum < -RADICAND_TOL


@dataclass(frozen=True, eq=False)
class RademacherDraw:
    """One vector of i.i.d. signs in {-1, +1} plus the substream index it came from."""

    signs: np.ndarray
    draw_index: int

    def __post_init__(self) -> None:
        signs = np.asarray(self.signs, dtype=np.float64)
        if signs.ndim != 1 or signs.shape[0] < 1:
            raise InputError("signs must be a nonempty 1-d vector")
        if not np.all(np.abs(signs) == 1.0):
            raise InputError("every sign must be exactly +1 or -1")
        object.__setattr__(self, "signs", signs)

    @property
    def m(self) -> int:
        return self.signs.shape[0]


@dataclass(frozen=True)
class RademacherEstimate:
    """Monte Carlo mean and standard error of the signed-supremum values."""

    mean: float
    std_error: float
    trials: int


def _check_pair_dims(p: PairedSample, q: PairedSample) -> None:
    if p.dx != q.dx or p.dy != q.dy:
        raise InputError(
            f"sample dimensions differ: ({p.dx}, {p.dy}) vs ({q.dx}, {q.dy})"
        )


def _check_kernel_dims(kx: KernelSpec, ky: KernelSpec, p: PairedSample) -> None:
    if isinstance(kx, ExplicitLinearKernel) and kx.feature_dim != p.dx:
        raise InputError(f"x-kernel expects dimension {kx.feature_dim}, sample has {p.dx}")
    if isinstance(ky, ExplicitLinearKernel) and ky.feature_dim != p.dy:
        raise InputError(f"y-kernel expects dimension {ky.feature_dim}, sample has {p.dy}")


def _gram_product_sum(gx: np.ndarray, gy: np.ndarray) -> float:
    # row-by-row fixed-order accumulation; fsum makes the cross-row combine exact
    rows = np.einsum("ij,ij->i", gx, gy)
    return math.fsum(rows)


def _sqrt_clamped(radicand: float) -> float:
    return math.sqrt(radicand) if radicand > 0.0 else 0.0


def jdd_biased(kx: KernelSpec, ky: KernelSpec, p: PairedSample, q: PairedSample) -> JddValue:
    """Biased empirical JDD between two paired samples (gram-matrix fast path).

    Unequal sample sizes are allowed.  The radicand is clamped at zero only
    inside the final square root; its raw value is kept in the result.
    """
    _check_pair_dims(p, q)
    _check_kernel_dims(kx, ky, p)
    m, n = p.m, q.m
    s_pp = _gram_product_sum(gram(kx, p.xs, p.xs), gram(ky, p.ys, p.ys))
    s_qq = _gram_product_sum(gram(kx, q.xs, q.xs), gram(ky, q.ys, q.ys))
    s_pq = _gram_product_sum(gram(kx, p.xs, q.xs), gram(ky, p.ys, q.ys))
    radicand = s_pp / (m * m) + s_qq / (n * n) - 2.0 * (s_pq / (m * n))
    return JddValue(value=_sqrt_clamped(radicand), m=m, n=n, squared_sum=radicand)


def _naive_sum():
    # compiled on first use; keeps import time low for callers that never
    # touch the oracle
    global _NAIVE_SUM
    if _NAIVE_SUM is None:
        from numba import njit

        @njit(cache=True)
        def joint_sum(ax, ay, bx, by, rbf_x, par_x, rbf_y, par_y):
            total = 0.0
            comp = 0.0
            for i in range(ax.shape[0]):
                for j in range(bx.shape[0]):
                    if rbf_x:
                        d = 0.0
                        for k in range(ax.shape[1]):
                            t = ax[i, k] - bx[j, k]
                            d += t * t
                        vx = math.exp(-d / par_x)
                    else:
                        vx = 0.0
                        for k in range(ax.shape[1]):
                            vx += ax[i, k] * bx[j, k]
                    if rbf_y:
                        d = 0.0
                        for k in range(ay.shape[1]):
                            t = ay[i, k] - by[j, k]
                            d += t * t
                        vy = math.exp(-d / par_y)
                    else:
                        vy = 0.0
                        for k in range(ay.shape[1]):
                            vy += ay[i, k] * by[j, k]
                    term = vx * vy - comp
                    acc = total + term
                    comp = (acc - total) - term
                    total = acc
            return total

        _NAIVE_SUM = joint_sum
    return _NAIVE_SUM


def _kernel_flags(spec: KernelSpec) -> tuple[bool, float]:
    if isinstance(spec, RbfKernel):
        return True, spec.bandwidth * spec.bandwidth
    return False, 0.0


def jdd_naive_oracle(
    kx: KernelSpec, ky: KernelSpec, p: PairedSample, q: PairedSample
) -> JddValue:
    """Same number as :func:`jdd_biased`, by direct nested loops.

    No gram matrix is materialized; the three double sums run pair by pair in
    a fixed order with Kahan-compensated accumulation, making this the
    reduction-order-independent oracle for the fast path.  Intended for
    m, n up to a few hundred.
    """
    _check_pair_dims(p, q)
    _check_kernel_dims(kx, ky, p)
    if isinstance(kx, ExplicitLinearKernel):
        _check_linear_data(kx, p.xs, "p.xs")
        _check_linear_data(kx, q.xs, "q.xs")
    if isinstance(ky, ExplicitLinearKernel):
        _check_linear_data(ky, p.ys, "p.ys")
        _check_linear_data(ky, q.ys, "q.ys")
    rbf_x, par_x = _kernel_flags(kx)
    rbf_y, par_y = _kernel_flags(ky)
    joint_sum = _naive_sum()
    m, n = p.m, q.m
    s_pp = joint_sum(p.xs, p.ys, p.xs, p.ys, rbf_x, par_x, rbf_y, par_y)
    s_qq = joint_sum(q.xs, q.ys, q.xs, q.ys, rbf_x, par_x, rbf_y, par_y)
    s_pq = joint_sum(p.xs, p.ys, q.xs, q.ys, rbf_x, par_x, rbf_y, par_y)
    radicand = s_pp / (m * m) + s_qq / (n * n) - 2.0 * (s_pq / (m * n))
    return JddValue(value=_sqrt_clamped(radicand), m=m, n=n, squared_sum=radicand)


def jdd_embedding_oracle(
    feature_dim_x: int, feature_dim_y: int, p: PairedSample, q: PairedSample
) -> JddValue:
    """JDD via explicit tensor-product mean embeddings (linear kernels only).

    Vectors act as their own features, so each sample's joint embedding is
    the d_x x d_y matrix ``(1/m) sum_i x_i y_i^T`` and the discrepancy is the
    Frobenius norm of the difference.  Agrees with :func:`jdd_biased` under
    matching explicit linear kernels.
    """
    _check_pair_dims(p, q)
    if p.dx != feature_dim_x or p.dy != feature_dim_y:
        raise InputError(
            f"samples have dims ({p.dx}, {p.dy}), expected "
            f"({feature_dim_x}, {feature_dim_y})"
        )
    mean_p = p.xs.T @ p.ys / p.m
    mean_q = q.xs.T @ q.ys / q.m
    diff = mean_p - mean_q
    squared = float(np.einsum("ij,ij->", diff, diff))
    return JddValue(value=_sqrt_clamped(squared), m=p.m, n=q.m, squared_sum=squared)


def mmd_biased(kx: KernelSpec, a, b) -> float:
    """Biased MMD on a single marginal, for contrast with the joint statistic.

    Same gram-sum structure as the JDD but over one kernel only; a baseline
    that sees marginal shifts and is blind to purely-joint ones.
    """
    av = as_matrix(a, name="a")
    bv = as_matrix(b, name="b")
    if av.shape[1] != bv.shape[1]:
        raise InputError(f"dimension mismatch: {av.shape[1]} vs {bv.shape[1]}")
    m, n = av.shape[0], bv.shape[0]
    s_aa = math.fsum(np.einsum("ij->i", gram(kx, av, av)))
    s_bb = math.fsum(np.einsum("ij->i", gram(kx, bv, bv)))
    s_ab = math.fsum(np.einsum("ij->i", gram(kx, av, bv)))
    radicand = s_aa / (m * m) + s_bb / (n * n) - 2.0 * (s_ab / (m * n))
    return _sqrt_clamped(radicand)


def rademacher_draw(m: int, seed: int, index: int = 0) -> RademacherDraw:
    """Draw sign vector ``index`` of the stream addressed by ``seed``."""
    if not (isinstance(m, int) and m >= 1):
        raise InputError(f"m must be a positive integer, got {m}")
    rng = rng_from(seed, index)
    signs = rng.integers(0, 2, size=m).astype(np.float64) * 2.0 - 1.0
    return RademacherDraw(signs=signs, draw_index=index)


def _joint_gram(kx: KernelSpec, ky: KernelSpec, s: PairedSample) -> np.ndarray:
    return gram(kx, s.xs, s.xs) * gram(ky, s.ys, s.ys)


def _signed_radicands(h: np.ndarray, signs: np.ndarray) -> np.ndarray:
    # signs: (t, m); fixed-size blocks keep the einsum schedule identical
    # across runs and thread settings
    out = np.empty(signs.shape[0])
    for start in range(0, signs.shape[0], _MC_BLOCK):
        block = signs[start : start + _MC_BLOCK]
        partial = np.einsum("ij,tj->ti", h, block)
        out[start : start + _MC_BLOCK] = np.einsum("ti,ti->t", partial, block)
    return out


def _sign_values(h: np.ndarray, signs: np.ndarray, m: int) -> np.ndarray:
    radicands = _signed_radicands(h, signs)
    floor = float(radicands.min())
    if floor < -RADICAND_TOL:
        raise BoundViolationError(
            f"sign-flip radicand {floor} is negative beyond rounding tolerance; "
            "the joint gram matrix is not positive semidefinite"
        )
    return np.sqrt(np.maximum(radicands, 0.0)) / m


def rademacher_draw_value(
    kx: KernelSpec, ky: KernelSpec, s: PairedSample, draw: RademacherDraw
) -> float:
    """Exact unit-ball supremum of the signed empirical average for one draw.

    Equals ``(1/m) sqrt(sum_ij s_i s_j k_x(x_i,x_j) k_y(y_i,y_j))``, the norm
    of the sign-weighted joint embedding; always within ``[0, K]``.
    """
    if draw.m != s.m:
        raise InputError(f"sign vector has length {draw.m}, sample has m={s.m}")
    h = _joint_gram(kx, ky, s)
    return float(_sign_values(h, draw.signs[None, :], s.m)[0])


def rademacher_mc_estimate(
    kx: KernelSpec, ky: KernelSpec, s: PairedSample, trials: int, seed: int
) -> RademacherEstimate:
    """Monte Carlo mean and standard error of the signed-supremum value.

    Draw ``t`` uses substream ``t`` of ``seed``, so individual draws are
    reproducible in isolation and adding trials never changes earlier ones.
    """
    if not (isinstance(trials, int) and trials >= 2):
        raise InputError(f"trials must be an integer >= 2, got {trials}")
    h = _joint_gram(kx, ky, s)
    signs = np.empty((trials, s.m))
    for t in range(trials):
        signs[t] = rng_from(seed, t).integers(0, 2, size=s.m).astype(np.float64) * 2.0 - 1.0
    values = _sign_values(h, signs, s.m)
    mean = math.fsum(values) / trials
    variance = math.fsum((v - mean) ** 2 for v in values) / (trials - 1)
    return RademacherEstimate(
        mean=mean, std_error=math.sqrt(variance / trials), trials=trials
    )


def rademacher_jensen_bound(kx: KernelSpec, ky: KernelSpec, s: PairedSample) -> float:
    """Closed-form bound ``(1/m) sqrt(sum_i k_x(x_i,x_i) k_y(y_i,y_i))``.

    Dominates the Monte Carlo mean in expectation and is itself at most
    ``K / sqrt(m)``; with RBF kernels every self-similarity is 1, so the
    bound is exactly ``sqrt(m) / m = 1/sqrt(m)``.
    """
    sx = _self_similarities(kx, s.xs)
    sy = _self_similarities(ky, s.ys)
    total = math.fsum(sx * sy)
    return math.sqrt(total) / s.m


def _self_similarities(spec: KernelSpec, m: np.ndarray) -> np.ndarray:
    if isinstance(spec, RbfKernel):
        # exp(-0 / sigma^2) = 1 identically
        return np.ones(m.shape[0])
    _check_linear_data(spec, m, "sample")
    return np.einsum("ij,ij->i", m, m)
