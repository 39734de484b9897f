import math

import numpy as np
import pytest

from hsiclab import (
    BlockStructure,
    Dataset,
    KernelFamily,
    KernelSpec,
    ProductKernel,
    eval_kernel,
    gram,
    product_gram,
    spectral_sample,
)

GAUSS1 = KernelSpec(KernelFamily.GAUSSIAN, 1.0)
LAP2 = KernelSpec(KernelFamily.LAPLACE, 2.0)


class TestKernelSpec:
    def test_accepts_family_names(self):
        assert KernelSpec("gaussian", 1.0).family is KernelFamily.GAUSSIAN
        assert KernelSpec("laplace", 0.5).family is KernelFamily.LAPLACE

    def test_rejects_bad_gamma_and_family(self):
        with pytest.raises(ValueError):
            KernelSpec("gaussian", 0.0)
        with pytest.raises(ValueError):
            KernelSpec("cauchy", 1.0)


class TestEvalKernel:
    def test_zero_lag_is_one(self):
        x = np.array([0.3, -1.2])
        assert eval_kernel(GAUSS1, x, x) == 1.0
        assert eval_kernel(LAP2, x, x) == 1.0

    def test_gaussian_unit_lag(self):
        assert eval_kernel(GAUSS1, [0.0], [1.0]) == pytest.approx(math.exp(-0.5), rel=1e-12)

    def test_laplace_value(self):
        assert eval_kernel(LAP2, [0.0, 0.0], [1.0, 1.0]) == pytest.approx(
            math.exp(-4.0), rel=1e-12
        )

    def test_symmetry_and_translation_invariance(self):
        rng = np.random.default_rng(9)
        for spec in (GAUSS1, LAP2, KernelSpec("gaussian", 0.25)):
            for _ in range(20):
                x, y, c = rng.normal(size=(3, 4))
                assert eval_kernel(spec, x, y) == eval_kernel(spec, y, x)
                assert eval_kernel(spec, x + c, y + c) == pytest.approx(
                    eval_kernel(spec, x, y), abs=1e-12
                )

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            eval_kernel(GAUSS1, [0.0], [0.0, 1.0])


class TestGram:
    def test_single_point(self):
        assert np.array_equal(gram(GAUSS1, [[0.5]], [[0.5]]), [[1.0]])

    def test_one_by_one_consistency(self):
        x = np.array([[0.1, 2.0]])
        y = np.array([[-1.0, 0.4]])
        assert gram(LAP2, x, y)[0, 0] == pytest.approx(
            eval_kernel(LAP2, x[0], y[0]), rel=1e-14
        )

    def test_symmetric_psd_small(self):
        x = np.array([[0.0], [1.0], [-2.0]])
        k = gram(GAUSS1, x, x)
        assert np.array_equal(k, k.T)
        assert np.all(np.diag(k) == 1.0)
        assert np.linalg.eigvalsh(k).min() >= -1e-10

    @pytest.mark.parametrize("spec", [GAUSS1, LAP2])
    def test_psd_random(self, spec):
        rng = np.random.default_rng(17)
        for _ in range(5):
            n = int(rng.integers(2, 51))
            x = rng.normal(size=(n, 3))
            k = gram(spec, x, x)
            assert np.linalg.eigvalsh((k + k.T) / 2).min() >= -1e-8

    def test_column_mismatch(self):
        with pytest.raises(ValueError):
            gram(GAUSS1, np.zeros((2, 2)), np.zeros((2, 3)))


class TestProductGram:
    def _dataset(self, rng, n=6, dims=(1, 2)):
        block = BlockStructure(dims)
        return Dataset(rng.normal(size=(n, block.total)), block)

    def test_constant_block_is_multiplicative_identity(self):
        rng = np.random.default_rng(3)
        block = BlockStructure((1, 1))
        vals = rng.normal(size=(5, 2))
        vals[:, 0] = 2.5
        pk = ProductKernel.homogeneous(block, KernelFamily.GAUSSIAN, 1.0)
        grams, prod = product_gram(pk, Dataset(vals, block))
        assert np.array_equal(grams[0], np.ones((5, 5)))
        assert np.array_equal(prod, grams[1])

    def test_two_sample_hand_evaluation(self):
        block = BlockStructure((1, 1))
        vals = np.array([[0.0, 0.0], [1.0, 2.0]])
        pk = ProductKernel(block, (GAUSS1, KernelSpec("gaussian", 0.5)))
        _, prod = product_gram(pk, Dataset(vals, block))
        expected = math.exp(-0.5 * 1.0) * math.exp(-0.25 * 4.0)
        assert prod[0, 1] == pytest.approx(expected, rel=1e-12)
        assert np.all(np.diag(prod) == 1.0)

    @pytest.mark.parametrize("family", [KernelFamily.GAUSSIAN, KernelFamily.LAPLACE])
    def test_matches_tensor_kernel_on_concatenated_coordinates(self, family):
        # with one shared bandwidth the product over blocks equals the same
        # kernel evaluated on the full vectors
        rng = np.random.default_rng(8)
        block = BlockStructure((2, 1, 3))
        vals = rng.normal(size=(7, block.total))
        spec = KernelSpec(family, 0.8)
        pk = ProductKernel.homogeneous(block, family, 0.8)
        _, prod = product_gram(pk, Dataset(vals, block))
        full = gram(spec, vals, vals)
        assert np.allclose(prod, full, atol=1e-12)

    def test_structure_mismatch(self):
        rng = np.random.default_rng(0)
        ds = self._dataset(rng, dims=(1, 2))
        pk = ProductKernel.homogeneous(BlockStructure((2, 1)), KernelFamily.GAUSSIAN, 1.0)
        with pytest.raises(ValueError):
            product_gram(pk, ds)

    def test_spec_count_mismatch(self):
        with pytest.raises(ValueError):
            ProductKernel(BlockStructure((1, 1)), (GAUSS1,))


class TestSpectralSample:
    def test_shape_and_determinism(self):
        w1 = spectral_sample(GAUSS1, 3, 100, 5)
        w2 = spectral_sample(GAUSS1, 3, 100, 5)
        assert w1.shape == (100, 3)
        assert np.array_equal(w1, w2)

    def test_zero_lag_average_is_exactly_one(self):
        omegas = spectral_sample(LAP2, 2, 1000, 1)
        assert np.cos(omegas @ np.zeros(2)).mean() == 1.0

    def test_gaussian_cosine_average_recovers_kernel(self):
        n = 1_000_000
        omegas = spectral_sample(GAUSS1, 2, n, 123)
        lag = np.array([1.0, 0.0])
        vals = np.cos(omegas @ lag)
        se = vals.std(ddof=1) / math.sqrt(n)
        assert abs(vals.mean() - math.exp(-0.5)) <= 4 * se

    def test_laplace_cosine_average_recovers_kernel(self):
        n = 1_000_000
        omegas = spectral_sample(KernelSpec("laplace", 1.0), 1, n, 321)
        vals = np.cos(omegas[:, 0])
        se = vals.std(ddof=1) / math.sqrt(n)
        assert abs(vals.mean() - math.exp(-1.0)) <= 4 * se

    @pytest.mark.parametrize("spec", [GAUSS1, LAP2, KernelSpec("laplace", 0.5)])
    def test_bochner_consistency_on_random_lags(self, spec):
        n = 100_000
        rng = np.random.default_rng(77)
        omegas = spectral_sample(spec, 3, n, 999)
        for _ in range(10):
            x, y = rng.normal(size=(2, 3))
            avg = np.cos(omegas @ (x - y)).mean()
            assert abs(avg - eval_kernel(spec, x, y)) <= 4.0 / math.sqrt(n)

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            spectral_sample(GAUSS1, 0, 10, 0)
        with pytest.raises(ValueError):
            spectral_sample(GAUSS1, 1, 0, 0)
