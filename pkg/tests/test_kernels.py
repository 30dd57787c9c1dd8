import math

import numpy as np
import pytest

from wgpbandit.errors import InputError
from wgpbandit.kernels import (
    DomainGrid,
    KernelFamily,
    KernelSpec,
    apply_jitter,
    grid_kernel_matrix,
    kernel_matrix,
    kernel_vector,
    se_kernel,
)

from oracles import se_gram


def test_se_kernel_hand_value():
    # exp(-0.01 / (2 * 0.04))
    assert se_kernel(0.0, 0.1, 0.2) == pytest.approx(math.exp(-0.125), rel=1e-12)


def test_se_kernel_symmetric_and_unit_at_zero_distance():
    assert se_kernel(0.3, 0.7, 0.5) == pytest.approx(se_kernel(0.7, 0.3, 0.5))
    assert se_kernel(0.42, 0.42, 0.5) == 1.0


def test_uniform_grid_covers_unit_interval():
    d = DomainGrid.uniform(5)
    np.testing.assert_allclose(d.points.ravel(), [0.0, 0.25, 0.5, 0.75, 1.0])
    assert d.dimension == 1
    assert d.size == 5


def test_indexed_domain_spans_unit_interval():
    d = DomainGrid.indexed(3)
    np.testing.assert_allclose(d.points.ravel(), [0.0, 0.5, 1.0])


def test_kernel_matrix_matches_dense_oracle(bench_domain, bench_spec):
    pts = bench_domain.points[[0, 10, 55, 99]]
    K = kernel_matrix(pts, bench_spec)
    np.testing.assert_allclose(K, se_gram(pts, pts, 0.2), atol=1e-14)


def test_kernel_matrix_positive_semidefinite(bench_domain, bench_spec):
    K = grid_kernel_matrix(bench_domain, bench_spec)
    eigs = np.linalg.eigvalsh(K)
    assert eigs.min() > -1e-10
    np.testing.assert_allclose(np.diag(K), 1.0)


def test_kernel_vector_is_matrix_column(bench_domain, bench_spec):
    pts = bench_domain.points[[3, 40, 77]]
    K = kernel_matrix(pts, bench_spec)
    v = kernel_vector(pts, pts[1], bench_spec)
    np.testing.assert_allclose(v, K[:, 1])


def test_se_bound_constants():
    spec = KernelSpec.squared_exponential(0.2)
    assert spec.kdot == 1.0
    assert spec.variance_cap == 1.0


def test_empirical_covariance_normalized_by_max_variance():
    cov = np.array([[2.0, 0.5], [0.5, 1.0]])
    spec = KernelSpec.empirical_covariance(cov)
    assert spec.family is KernelFamily.EMPIRICAL_COVARIANCE
    np.testing.assert_allclose(
        spec.covariance_table, [[1.0, 0.25], [0.25, 0.5]]
    )
    assert spec.kdot == 1.0
    assert spec.variance_cap == 1.0


def test_empirical_covariance_zero_table_falls_back_to_identity():
    # Degenerate (constant-price) covariance: jitter keeps the kernel usable
    # and normalization lands on the identity.
    spec = KernelSpec.empirical_covariance(np.zeros((3, 3)))
    np.testing.assert_allclose(spec.covariance_table, np.eye(3))


def test_empirical_covariance_rejects_non_square():
    with pytest.raises(InputError):
        KernelSpec.empirical_covariance(np.zeros((5, 3)))


def test_table_kernel_indexed_by_integers():
    spec = KernelSpec.empirical_covariance(np.eye(4))
    K = kernel_matrix([0, 2], spec)
    np.testing.assert_allclose(K, np.eye(2))
    with pytest.raises(InputError):
        kernel_matrix([0.5], spec)
    with pytest.raises(InputError):
        kernel_matrix([7], spec)


def test_apply_jitter_restores_factorizability():
    # A singular PSD matrix becomes Cholesky-factorizable after jitter.
    K = np.ones((3, 3))
    np.linalg.cholesky(apply_jitter(K))


def test_grid_kernel_matrix_table_family():
    spec = KernelSpec.empirical_covariance(np.eye(3) + 0.1)
    d = DomainGrid.indexed(3)
    K = grid_kernel_matrix(d, spec)
    assert K.shape == (3, 3)
    np.testing.assert_allclose(K, K.T)
