"""Closed forms for Gaussian measures under Gaussian product kernels:
mean-embedding inner products, MMD^2, HSIC^2, and the certificate quantities
of the two-point lower-bound construction.

Every determinant is evaluated in log space through a Cholesky factor and
exponentiated once, so large dimensions cannot overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .data import BlockStructure
from .gaussian import GaussianMeasure, cholesky_spd


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return gamma


def _chol_logdet(matrix: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diagonal(cholesky_spd(matrix)))))


def embedding_inner(g1: GaussianMeasure, g2: GaussianMeasure, gamma: float) -> float:
    """Inner product of the kernel mean embeddings of two Gaussians under the
    Gaussian kernel exp(-gamma/2 |x-y|^2):

        exp(-(m1-m2)' (S1+S2+I/gamma)^{-1} (m1-m2) / 2)
            / |gamma S1 + gamma S2 + I|^{1/2}

    Symmetric in its two arguments and always in (0, 1].
    """
    gamma = _check_gamma(gamma)
    if g1.d != g2.d:
        raise ValueError(f"dimension mismatch: {g1.d} vs {g2.d}")
    d = g1.d
    s = g1.cov + g2.cov + np.eye(d) / gamma
    chol = cholesky_spd(s)
    v = solve_triangular(chol, g1.mean - g2.mean, lower=True)
    # |gamma S1 + gamma S2 + I| = gamma^d |S|
    logdet = d * math.log(gamma) + 2.0 * float(np.sum(np.log(np.diagonal(chol))))
    return math.exp(-0.5 * float(v @ v) - 0.5 * logdet)


def _clamp_sq(value: float) -> float:
    # squared RKHS distances are nonnegative; absorb round-off in (-1e-12, 0)
    if -1e-12 < value < 0.0:
        return 0.0
    return value


def mmd2_gaussian(g1: GaussianMeasure, g2: GaussianMeasure, gamma: float) -> float:
    """Closed-form squared maximum mean discrepancy of two Gaussians under the
    Gaussian kernel; zero iff the measures coincide."""
    return _clamp_sq(
        embedding_inner(g1, g1, gamma)
        + embedding_inner(g2, g2, gamma)
        - 2.0 * embedding_inner(g1, g2, gamma)
    )


@dataclass(frozen=True)
class Hsic2Decomposition:
    """HSIC^2 split into its three inner-product terms.

    ``value = term_i + term_ii - 2 term_iii`` compares the joint embedding
    against the product of the block marginals; it vanishes exactly when the
    covariance is block diagonal.
    """

    term_i: float
    term_ii: float
    term_iii: float
    value: float

    def __post_init__(self) -> None:
        if self.value < -1e-12:
            raise ValueError(f"HSIC^2 must be nonnegative, got {self.value}")

    @property
    def hsic(self) -> float:
        """Nonnegative square root of ``value``."""
        return math.sqrt(max(0.0, self.value))


def _decomposition(term_i: float, term_ii: float, term_iii: float) -> Hsic2Decomposition:
    return Hsic2Decomposition(term_i, term_ii, term_iii, _clamp_sq(term_i + term_ii - 2.0 * term_iii))


def _block_diagonal(cov: np.ndarray, block: BlockStructure) -> np.ndarray:
    out = np.zeros_like(cov)
    for sl in block.slices():
        out[sl, sl] = cov[sl, sl]
    return out


def hsic2_gaussian(g: GaussianMeasure, block: BlockStructure, gamma: float) -> Hsic2Decomposition:
    """Closed-form HSIC^2 of N(mean, cov) with blockwise Gaussian kernels of a
    common bandwidth gamma:

        |2 gamma S1 + I|^{-1/2} + |2 gamma S2 + I|^{-1/2}
            - 2 |gamma S1 + gamma S2 + I|^{-1/2}

    where S1 is the covariance and S2 its block-diagonal restriction.  The
    mean cancels and never enters.
    """
    gamma = _check_gamma(gamma)
    block.require_multiblock()
    if g.d != block.total:
        raise ValueError(f"measure has d={g.d} but block dims sum to {block.total}")
    s1 = g.cov
    s2 = _block_diagonal(s1, block)
    eye = np.eye(g.d)
    term_i = math.exp(-0.5 * _chol_logdet(2.0 * gamma * s1 + eye))
    term_ii = math.exp(-0.5 * _chol_logdet(2.0 * gamma * s2 + eye))
    term_iii = math.exp(-0.5 * _chol_logdet(gamma * s1 + gamma * s2 + eye))
    return _decomposition(term_i, term_ii, term_iii)


def adversarial_hsic2(
    gamma: float, d: int, rho: float | None = None, n: int | None = None
) -> Hsic2Decomposition:
    """HSIC^2 of the single-correlation covariance in closed form.

    With z = 2 gamma + 1:

        term_i   = [z^{d-2} (z^2 - (2 gamma rho)^2)]^{-1/2}
        term_ii  = z^{-d/2}
        term_iii = [z^{d-2} (z^2 - (gamma rho)^2)]^{-1/2}

    Exactly one of ``rho`` and ``n`` must be given; ``n`` sets rho = n^{-1/2}.
    rho = 1 (the n = 1 case) is allowed: the expressions stay finite there
    even though the underlying Gaussian degenerates.
    """
    gamma = _check_gamma(gamma)
    if int(d) != d or d < 2:
        raise ValueError(f"d must be an integer >= 2, got {d}")
    if (rho is None) == (n is None):
        raise ValueError("give exactly one of rho and n")
    if rho is None:
        if int(n) != n or n < 1:
            raise ValueError(f"n must be an integer >= 1, got {n}")
        rho = 1.0 / math.sqrt(n)
    rho = float(rho)
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    z = 2.0 * gamma + 1.0
    log_z = math.log(z)
    term_i = math.exp(-0.5 * ((d - 2) * log_z + math.log(z * z - (2.0 * gamma * rho) ** 2)))
    term_ii = math.exp(-0.5 * d * log_z)
    term_iii = math.exp(-0.5 * ((d - 2) * log_z + math.log(z * z - (gamma * rho) ** 2)))
    return _decomposition(term_i, term_ii, term_iii)


def minimax_constant(gamma: float, d: int) -> float:
    """Explicit constant c = gamma / (2 (2 gamma + 1)^{d/4 + 1}) in the
    n^{-1/2} lower bound for Gaussian product kernels; the adversarial HSIC
    gap is at least 2c/sqrt(n) for every n >= 1."""
    gamma = _check_gamma(gamma)
    if int(d) != d or d < 2:
        raise ValueError(f"d must be an integer >= 2, got {d}")
    return gamma * math.exp(-(d / 4.0 + 1.0) * math.log(2.0 * gamma + 1.0)) / 2.0


def critical_slope(gamma: float, d: int) -> float:
    """Largest slope c for which f_c stays nonnegative on (0, 1]:
    c* = gamma^2 / ((2 gamma + 1)^2 sqrt((2 gamma + 1)^d))."""
    gamma = _check_gamma(gamma)
    z = 2.0 * gamma + 1.0
    return gamma * gamma * math.exp(-(2.0 + d / 2.0) * math.log(z))


def f_c(x: float, gamma: float, d: int, c: float) -> float:
    """Slope-certificate function, with z = 2 gamma + 1:

        f_c(x) = [z^{d-2}(z^2 - 4 gamma^2 x)]^{-1/2} + (z^d)^{-1/2}
                 - 2 [z^{d-2}(z^2 - gamma^2 x)]^{-1/2} - c x

    Defined for 0 <= x < (1 + 1/(2 gamma))^2.  f_c(0) = 0, and with
    c = critical_slope(gamma, d) the function is nonnegative and nondecreasing
    on (0, 1]; evaluating at x = 1/n certifies the HSIC^2 gap at budget n.
    """
    gamma = _check_gamma(gamma)
    x = float(x)
    limit = (1.0 + 1.0 / (2.0 * gamma)) ** 2
    if not 0.0 <= x < limit:
        raise ValueError(f"x must lie in [0, {limit}), got {x}")
    z = 2.0 * gamma + 1.0
    log_z = math.log(z)
    t1 = math.exp(-0.5 * ((d - 2) * log_z + math.log(z * z - 4.0 * gamma * gamma * x)))
    t2 = math.exp(-0.5 * d * log_z)
    t3 = math.exp(-0.5 * ((d - 2) * log_z + math.log(z * z - gamma * gamma * x)))
    return t1 + t2 - 2.0 * t3 - float(c) * x


def lecam_bound(alpha: float) -> float:
    """Two-point testing floor max(e^{-alpha}/4, (1 - sqrt(alpha/2))/2).

    This lower-bounds the worst-case error probability of any estimator that
    must distinguish two hypotheses whose n-fold product KL is at most alpha.
    """
    alpha = float(alpha)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return max(math.exp(-alpha) / 4.0, (1.0 - math.sqrt(alpha / 2.0)) / 2.0)
