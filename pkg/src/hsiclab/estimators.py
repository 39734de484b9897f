"""Sample-based HSIC and MMD estimators.

* ``hsic_v``: biased V-statistic for any number of blocks (for two blocks it
  equals trace(K H L H)/n^2 with H the centering matrix).
* ``hsic_u``: unbiased U-statistic, two blocks only.
* ``hsic_nystrom``: Frobenius norm of the empirical centered cross-covariance
  in landmark feature coordinates; estimates HSIC itself, not HSIC^2.
* ``mmd_v``: biased plug-in MMD^2 between two samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .data import Dataset
from .kernels import KernelSpec, ProductKernel, gram


@dataclass(frozen=True, eq=False)
class CrossCovEstimate:
    """Empirical centered cross-covariance in Nystrom feature coordinates.

    Its Frobenius norm is the associated HSIC estimate.
    """

    feature_dims: tuple[int, int]
    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=float)
        if mat.shape != tuple(self.feature_dims):
            raise ValueError(f"matrix shape {mat.shape} does not match dims {self.feature_dims}")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "feature_dims", (int(self.feature_dims[0]), int(self.feature_dims[1])))

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.matrix))


def _block_grams(pk: ProductKernel, data: Dataset) -> tuple[np.ndarray, ...]:
    if data.block != pk.block:
        raise ValueError(
            f"dataset blocks {data.block.dims} do not match kernel blocks {pk.block.dims}"
        )
    return tuple(
        gram(spec, data.block_values(m), data.block_values(m))
        for m, spec in enumerate(pk.specs)
    )


def _two_block_stats(k: np.ndarray, l: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Elementwise dot and row sums shared by the two-block V and U forms."""
    total = float(np.dot(k.ravel(), l.ravel()))
    return total, k.sum(axis=1), l.sum(axis=1)


def _hsic_v_from_stats(n: int, total: float, k_rows: np.ndarray, l_rows: np.ndarray) -> float:
    term1 = total / (n * n)
    term2 = float(k_rows.sum()) * float(l_rows.sum()) / n**4
    term3 = float(k_rows @ l_rows) / n**3
    return term1 + term2 - 2.0 * term3


def _hsic_v_from_grams(grams: tuple[np.ndarray, ...]) -> float:
    if len(grams) == 2:
        return _hsic_v_from_stats(grams[0].shape[0], *_two_block_stats(grams[0], grams[1]))
    prod = grams[0].copy()
    for g in grams[1:]:
        prod *= g
    term1 = float(prod.mean())
    term2 = 1.0
    for g in grams:
        term2 *= float(g.mean())
    row_means = np.stack([g.mean(axis=1) for g in grams])
    term3 = float(np.prod(row_means, axis=0).mean())
    return term1 + term2 - 2.0 * term3


def hsic_v(pk: ProductKernel, data: Dataset) -> float:
    """Biased V-statistic estimate of HSIC^2 over M >= 2 blocks:

        mean_ij prod_m K_m[i,j] + prod_m mean_ij K_m[i,j]
            - 2 mean_i prod_m mean_j K_m[i,j]

    Always nonnegative up to round-off.
    """
    pk.block.require_multiblock()
    if data.n < 2:
        raise ValueError(f"V-statistic needs at least 2 samples, got {data.n}")
    return _hsic_v_from_grams(_block_grams(pk, data))


def _hsic_u_from_stats(
    n: int,
    total: float,
    k_rows: np.ndarray,
    l_rows: np.ndarray,
    k_diag: np.ndarray,
    l_diag: np.ndarray,
) -> float:
    # zeroed-diagonal quantities expressed through the plain Gram sums
    t1 = total - float(k_diag @ l_diag)
    sk = k_rows - k_diag
    sl = l_rows - l_diag
    t2 = float(sk.sum()) * float(sl.sum()) / ((n - 1) * (n - 2))
    t3 = 2.0 * float(sk @ sl) / (n - 2)
    return (t1 + t2 - t3) / (n * (n - 3))


def _hsic_u_from_grams(k: np.ndarray, l: np.ndarray) -> float:
    total, k_rows, l_rows = _two_block_stats(k, l)
    return _hsic_u_from_stats(
        k.shape[0], total, k_rows, l_rows, np.diagonal(k), np.diagonal(l)
    )


def hsic_u(pk: ProductKernel, data: Dataset) -> float:
    """Unbiased U-statistic estimate of HSIC^2 for exactly two blocks:

        [tr(K~ L~) + (1'K~1)(1'L~1)/((n-1)(n-2)) - 2 1'K~L~1/(n-2)] / (n(n-3))

    with K~, L~ the per-block Grams with zeroed diagonals.  May be negative;
    its expectation equals the population HSIC^2.
    """
    if pk.block.m != 2:
        raise ValueError(f"U-statistic requires exactly 2 blocks, got {pk.block.m}")
    if data.n < 4:
        raise ValueError(f"U-statistic requires n >= 4, got {data.n}")
    grams = _block_grams(pk, data)
    return _hsic_u_from_grams(grams[0], grams[1])


def _inv_sqrt_psd(w: np.ndarray) -> np.ndarray:
    # landmark Grams can be nearly singular; floor the spectrum before inverting
    vals, vecs = np.linalg.eigh(w)
    floor = 1e-10 * float(vals[-1])
    vals = np.maximum(vals, floor)
    return (vecs / np.sqrt(vals)) @ vecs.T


def nystrom_cross_cov(
    pk: ProductKernel, data: Dataset, landmark_points: tuple[np.ndarray, np.ndarray]
) -> CrossCovEstimate:
    """Centered cross-covariance of Nystrom features built on explicit
    per-block landmark points (arrays of shape (l_m, d_m)).

    Features are phi_m(x) = W_m^{-1/2} k_m(landmarks_m, x) with W_m the
    landmark Gram.  Sharing landmark points across datasets puts their
    estimates in a common coordinate system.
    """
    if pk.block.m != 2:
        raise ValueError(f"cross-covariance features require exactly 2 blocks, got {pk.block.m}")
    phis = []
    for m in range(2):
        lm = np.atleast_2d(np.asarray(landmark_points[m], dtype=float))
        if lm.shape[1] != pk.block.dims[m]:
            raise ValueError(
                f"landmarks for block {m} have {lm.shape[1]} columns, expected {pk.block.dims[m]}"
            )
        w = gram(pk.specs[m], lm, lm)
        phis.append(gram(pk.specs[m], data.block_values(m), lm) @ _inv_sqrt_psd(w))
    phi0, phi1 = phis
    c = phi0.T @ phi1 / data.n - np.outer(phi0.mean(axis=0), phi1.mean(axis=0))
    return CrossCovEstimate((phi0.shape[1], phi1.shape[1]), c)


def hsic_nystrom(
    pk: ProductKernel, data: Dataset, landmarks: int, seed: int
) -> tuple[float, CrossCovEstimate]:
    """Nystrom estimate of HSIC (not HSIC^2) for exactly two blocks.

    Selects ``landmarks`` rows uniformly without replacement per block, builds
    the landmark features, and returns the Frobenius norm of the empirical
    centered cross-covariance together with the matrix itself.  With
    landmarks = n the estimate equals sqrt(max(0, hsic_v)).
    """
    if pk.block.m != 2:
        raise ValueError(f"Nystrom estimator requires exactly 2 blocks, got {pk.block.m}")
    landmarks = int(landmarks)
    if landmarks < 2:
        raise ValueError(f"need at least 2 landmarks, got {landmarks}")
    if landmarks > data.n:
        raise ValueError(f"cannot select {landmarks} landmarks from {data.n} rows")
    points = tuple(
        data.block_values(m)[rng.stream(seed, "landmarks", m).choice(data.n, size=landmarks, replace=False)]
        for m in range(2)
    )
    cross = nystrom_cross_cov(pk, data, points)
    return cross.frobenius(), cross


def mmd_v(spec: KernelSpec, x: Dataset, y: Dataset) -> float:
    """Biased plug-in MMD^2 between two samples under one kernel:

        mean k(X, X) + mean k(Y, Y) - 2 mean k(X, Y), floored at 0.
    """
    if x.d != y.d:
        raise ValueError(f"dimension mismatch: {x.d} vs {y.d}")
    kxx = float(gram(spec, x.values, x.values).mean())
    kyy = float(gram(spec, y.values, y.values).mean())
    kxy = float(gram(spec, x.values, y.values).mean())
    return max(0.0, kxx + kyy - 2.0 * kxy)
