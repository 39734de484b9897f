"""Multivariate normal model: adversarial covariance construction, sampling,
characteristic functions, and exact/bounded Kullback-Leibler divergences.

All determinants and inverses go through Cholesky factors; covariances are
rejected up front unless they are symmetric and strictly positive definite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from . import rng
from .data import BlockStructure, Dataset

_SYM_TOL = 1e-12
_PIVOT_TOL = 1e-12


def cholesky_spd(matrix: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, rejecting matrices with pivots below 1e-12."""
    try:
        chol = np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as exc:
        raise ValueError("matrix is not positive definite") from exc
    if float(np.min(np.diagonal(chol))) ** 2 <= _PIVOT_TOL:
        raise ValueError("matrix is numerically singular (Cholesky pivot below 1e-12)")
    return chol


@dataclass(frozen=True, eq=False)
class GaussianMeasure:
    """N(mean, cov) on R^d with a symmetric, strictly positive definite cov."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValueError(f"cov must be a square matrix, got shape {cov.shape}")
        if cov.shape[0] != mean.shape[0]:
            raise ValueError(
                f"mean has length {mean.shape[0]} but cov is {cov.shape[0]}x{cov.shape[1]}"
            )
        if cov.size and float(np.max(np.abs(cov - cov.T))) > _SYM_TOL:
            raise ValueError("cov must be symmetric to within 1e-12 per entry")
        chol = cholesky_spd(cov)
        for arr in (mean, cov, chol):
            arr.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_chol", chol)

    @property
    def d(self) -> int:
        return self.mean.shape[0]

    @property
    def chol(self) -> np.ndarray:
        """Lower Cholesky factor of cov."""
        return self._chol  # type: ignore[attr-defined]

    @classmethod
    def standard(cls, d: int) -> "GaussianMeasure":
        """N(0, I_d)."""
        return cls(np.zeros(d), np.eye(d))


@dataclass(frozen=True, eq=False)
class AdversarialPair:
    """Null/alternative pair for the two-point construction at sample budget n.

    ``p0`` is N(0, I_d); ``p1`` correlates the two coordinates adjacent to the
    first block boundary with rho = n^{-1/2} and shifts the mean by
    (1/(sqrt(d) n)) in every coordinate.
    """

    p0: GaussianMeasure
    p1: GaussianMeasure
    n: int
    rho: float
    gamma: float
    block: BlockStructure

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"sample budget must be at least 2, got {self.n}")
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.p0.d != self.block.total or self.p1.d != self.block.total:
            raise ValueError("pair dimensions do not match the block structure")


def make_adversarial_cov(block: BlockStructure, rho: float, i: int | None = None) -> np.ndarray:
    """Identity matrix of size d with entries (i, i+1) and (i+1, i) set to rho.

    ``i`` is the 0-based index of the first coordinate of the correlated pair
    and defaults to ``block.dims[0] - 1``, the only choice for which the pair
    straddles the first block boundary (any other choice leaves the blocks
    independent).  The determinant is 1 - rho^2.
    """
    block.require_multiblock()
    rho = float(rho)
    if not -1.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (-1, 1) for a positive definite matrix, got {rho}")
    d = block.total
    if i is None:
        i = block.dims[0] - 1
    i = int(i)
    if not 0 <= i <= d - 2:
        raise ValueError(f"pair index {i} out of range for dimension {d}")
    cov = np.eye(d)
    cov[i, i + 1] = rho
    cov[i + 1, i] = rho
    return cov


def sample(g: GaussianMeasure, n: int, seed: int, block: BlockStructure | None = None) -> Dataset:
    """n i.i.d. rows mean + L z, with L the Cholesky factor of cov.

    Deterministic in (g, n, seed).  ``block`` defaults to a single block of
    size d; pass an explicit partition when the rows feed an independence
    estimator.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if block is None:
        block = BlockStructure((g.d,))
    if block.total != g.d:
        raise ValueError(f"block dims sum to {block.total} but the measure has d={g.d}")
    z = rng.stream(seed).standard_normal((int(n), g.d))
    return Dataset(g.mean + z @ g.chol.T, block)


def char_fn(g: GaussianMeasure, omega: np.ndarray):
    """Characteristic function exp(i <mean, w> - <w, cov w>/2).

    Accepts a single frequency of shape (d,) or a batch of shape (N, d);
    returns a complex scalar or a complex array accordingly.
    """
    om = np.asarray(omega, dtype=float)
    single = om.ndim == 1
    om2 = np.atleast_2d(om)
    if om2.shape[1] != g.d:
        raise ValueError(f"omega has dimension {om2.shape[1]}, measure has d={g.d}")
    if not np.all(np.isfinite(om2)):
        raise ValueError("omega must be finite")
    phase = om2 @ g.mean
    quad = np.einsum("nd,nd->n", om2 @ g.cov, om2)
    vals = np.exp(1j * phase - 0.5 * quad)
    return complex(vals[0]) if single else vals


def _clamp_kl(value: float) -> float:
    # KL is nonnegative; absorb round-off in (-1e-12, 0).
    if -1e-12 < value < 0.0:
        return 0.0
    return value


def kl_gaussians(g1: GaussianMeasure, g0: GaussianMeasure) -> float:
    """KL(N1 || N0) in nats.

    Computed as [tr(S0^{-1} S1) + (m0-m1)' S0^{-1} (m0-m1) - d
    + ln(|S0|/|S1|)] / 2 through the Cholesky factors of both covariances.
    """
    if g1.d != g0.d:
        raise ValueError(f"dimension mismatch: {g1.d} vs {g0.d}")
    l0, l1 = g0.chol, g1.chol
    a = solve_triangular(l0, l1, lower=True)
    trace_term = float(np.sum(a * a))
    v = solve_triangular(l0, g1.mean - g0.mean, lower=True)
    quad = float(v @ v)
    logdet0 = 2.0 * float(np.sum(np.log(np.diagonal(l0))))
    logdet1 = 2.0 * float(np.sum(np.log(np.diagonal(l1))))
    return _clamp_kl(0.5 * (trace_term + quad - g0.d + logdet0 - logdet1))


def _check_adversarial_args(n: int, rho: float) -> None:
    if int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n}")
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")


def kl_adversarial_exact(n: int, rho: float, block: BlockStructure) -> float:
    """Exact n-fold product KL of the adversarial pair:
    1/(2n) + (n/2) ln(1/(1 - rho^2)).

    Equals n times the per-sample KL (product measures add), independent of
    how the dimension splits across blocks.
    """
    _check_adversarial_args(n, rho)
    block.require_multiblock()
    n = int(n)
    return 1.0 / (2 * n) - 0.5 * n * math.log1p(-rho * rho)


def kl_adversarial_bound(n: int, rho: float) -> float:
    """Budget bound 1/(2n) + (n/2) rho^2/(1 - rho^2); at rho^2 = 1/n it is
    at most 5/4 for every n >= 2 (ln x <= x - 1)."""
    _check_adversarial_args(n, rho)
    n = int(n)
    return 1.0 / (2 * n) + 0.5 * n * rho * rho / (1.0 - rho * rho)
