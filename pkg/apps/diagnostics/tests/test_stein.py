import numpy as np
import pytest
from hamcrest import assert_that, close_to, contains_exactly, equal_to, less_than

from apps.core.exceptions import InvalidParameterError, NumericsError
from apps.diagnostics.stein import imq_stein_kernel, ksd, ksd_series


def gaussian_score(points):
    return -np.asarray(points)


def imq(x, y, c, beta):
    return (c**2 + np.sum((x - y) ** 2)) ** beta


def stein_kernel_by_differences(x, y, sx, sy, c, beta, eps=1e-4):
    dim = x.shape[0]
    eye = np.eye(dim) * eps
    grad_x = np.array([(imq(x + e, y, c, beta) - imq(x - e, y, c, beta)) / (2 * eps) for e in eye])
    grad_y = np.array([(imq(x, y + e, c, beta) - imq(x, y - e, c, beta)) / (2 * eps) for e in eye])
    mixed = sum(
        (imq(x + e, y + e, c, beta) - imq(x + e, y - e, c, beta) - imq(x - e, y + e, c, beta) + imq(x - e, y - e, c, beta))
        / (4 * eps**2)
        for e in eye
    )
    return mixed + grad_x @ sy + grad_y @ sx + imq(x, y, c, beta) * (sx @ sy)


class TestSteinKernel:
    @pytest.mark.parametrize("c, beta", [(1.0, -0.5), (2.0, -0.3)])
    def test_matches_finite_differences(self, c, beta):
        rng = np.random.default_rng(11)
        x, y = rng.normal(size=(2, 3))
        sx, sy = rng.normal(size=(2, 3))
        value = imq_stein_kernel(x[None], y[None], sx[None], sy[None], c, beta)[0, 0]
        assert_that(value, close_to(stein_kernel_by_differences(x, y, sx, sy, c, beta), 1e-6))

    def test_is_symmetric(self):
        points = np.random.default_rng(3).normal(size=(6, 2))
        matrix = imq_stein_kernel(points, points, -points, -points)
        assert np.allclose(matrix, matrix.T, rtol=0, atol=1e-14)


class TestKsd:
    def test_single_point_at_the_mode(self):
        value = ksd(np.zeros((1, 2)), gaussian_score, c=1.0, beta=-0.5)
        assert_that(value, close_to(np.sqrt(2.0), 1e-15))

    def test_permutation_invariance(self):
        points = np.random.default_rng(5).normal(size=(300, 2))
        permuted = points[np.random.default_rng(6).permutation(300)]
        assert_that(ksd(permuted, gaussian_score), equal_to(ksd(points, gaussian_score)))

    def test_block_size_and_jobs_do_not_change_the_value(self):
        points = np.random.default_rng(9).normal(size=(250, 2))
        reference = ksd(points, gaussian_score)
        assert_that(ksd(points, gaussian_score, block_size=7), equal_to(reference))
        assert_that(ksd(points, gaussian_score, block_size=16, jobs=3), equal_to(reference))

    def test_matches_the_direct_double_sum(self):
        points = np.random.default_rng(2).normal(size=(333, 3))
        matrix = imq_stein_kernel(points, points, -points, -points)
        assert_that(ksd(points, gaussian_score, block_size=50), close_to(np.sqrt(np.mean(matrix)), 1e-12))
        off_diagonal = (np.sum(matrix) - np.trace(matrix)) / (333 * 332)
        assert_that(ksd(points, gaussian_score, u_statistic=True), close_to(np.sqrt(max(off_diagonal, 0.0)), 1e-12))

    def test_precomputed_scores(self):
        points = np.random.default_rng(1).normal(size=(40, 2))
        assert_that(ksd(points, -points), equal_to(ksd(points, gaussian_score)))

    def test_offset_samples_are_further(self):
        for seed in range(20):
            points = np.random.default_rng(seed).standard_normal((1000, 2))
            assert_that(ksd(points, gaussian_score), less_than(ksd(points + 2.0, gaussian_score)))

    def test_u_statistic_drops_the_diagonal(self):
        # two copies of the mode: the off-diagonal terms equal the diagonal value 2
        value = ksd(np.zeros((2, 2)), gaussian_score, u_statistic=True)
        assert_that(value, close_to(np.sqrt(2.0), 1e-15))

    def test_u_statistic_needs_two_points(self):
        with pytest.raises(InvalidParameterError):
            ksd(np.zeros((1, 2)), gaussian_score, u_statistic=True)

    def test_nonfinite_score(self):
        points = np.zeros((3, 2))
        scores = np.zeros((3, 2))
        scores[1, 0] = np.nan
        with pytest.raises(NumericsError, match="point 1"):
            ksd(points, scores)

    @pytest.mark.parametrize("c, beta", [(0.0, -0.5), (1.0, 0.0), (1.0, 0.5)])
    def test_invalid_kernel(self, c, beta):
        with pytest.raises(InvalidParameterError):
            ksd(np.zeros((2, 2)), gaussian_score, c=c, beta=beta)

    def test_score_shape(self):
        with pytest.raises(InvalidParameterError):
            ksd(np.zeros((2, 2)), np.zeros((2, 3)))


class TestKsdSeries:
    def test_final_entry_is_the_full_ksd(self):
        points = np.random.default_rng(4).normal(size=(200, 2))
        series = ksd_series(points, gaussian_score, [10, 50, 200])
        assert_that([size for size, _ in series], contains_exactly(10, 50, 200))
        assert_that(series[-1][1], equal_to(ksd(points, gaussian_score)))
        assert_that(series[0][1], equal_to(ksd(points[:10], gaussian_score)))

    def test_sizes_are_checked(self):
        with pytest.raises(InvalidParameterError):
            ksd_series(np.zeros((5, 2)), gaussian_score, [6])
