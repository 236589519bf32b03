"""
Tests for the elementary symmetric kernel: values, identities, derivative
tensor and cone queries.
"""

import os
import sys
from fractions import Fraction

import numpy as np
import pytest
from pydantic import ValidationError

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from exterior_hessian.errors import DomainError, PreconditionError
from exterior_hessian.components.symfun import (
    Spectrum,
    SymMatrix,
    batch_sk_gradient,
    batch_sk_matrix,
    deleted_spectrum,
    elem_sym,
    elem_sym_by_subsets,
    elem_sym_exact,
    elementary_symmetric,
    in_gamma_k,
    maclaurin_chain_holds,
    maclaurin_means,
    sk_gradient,
    sk_matrix,
    sk_root,
    sk_values,
)

TRIALS = 10_000


def _random_symmetric(rng, count, n):
    a = rng.normal(size=(count, n, n))
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def test_known_values():
    spectrum = Spectrum.of([1.0, 2.0, 3.0])
    assert elem_sym(spectrum, 0) == 1.0
    assert elem_sym(spectrum, 1) == 6.0
    assert elem_sym(spectrum, 2) == 11.0
    assert elem_sym(spectrum, 3) == 6.0


def test_homogeneity():
    rng = np.random.default_rng(0)
    for n in (2, 3, 5, 8):
        lams = rng.normal(size=(TRIALS, n))
        t = rng.uniform(0.1, 3.0, size=TRIALS)
        for k in range(1, n + 1):
            lhs = sk_values(t[:, None] * lams, k)
            rhs = t ** k * sk_values(lams, k)
            assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-10)


def test_expansion_identity():
    """S_k(λ) = λ_i S_{k−1}(λ|i) + S_k(λ|i) for every i"""
    rng = np.random.default_rng(1)
    n = 6
    lams = rng.normal(size=(TRIALS, n))
    for k in range(1, n + 1):
        full = sk_values(lams, k)
        for i in range(n):
            rest = np.delete(lams, i, axis=-1)
            expanded = lams[:, i] * sk_values(rest, k - 1) + (sk_values(rest, k) if k < n else 0.0)
            assert np.allclose(full, expanded, atol=1e-9)


def test_deleted_spectrum():
    spectrum = Spectrum.of([4.0, 5.0, 6.0])
    assert deleted_spectrum(spectrum, 2).values == (4.0, 6.0)
    planar = deleted_spectrum(Spectrum.of([5.0, 4.0]), 2)
    assert planar.values == (5.0,) and planar.n == 1
    assert elem_sym(planar, 1) == 5.0
    with pytest.raises(ValidationError):
        Spectrum.of([1.0])
    with pytest.raises(DomainError):
        deleted_spectrum(planar, 1)
    with pytest.raises(DomainError):
        deleted_spectrum(spectrum, 4)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    h = 1e-6
    for n in (2, 3, 4):
        matrices = _random_symmetric(rng, 50, n)
        for k in range(1, n + 1):
            tensor = batch_sk_gradient(matrices, k)
            for i in range(n):
                for j in range(i, n):
                    e = np.zeros((n, n))
                    e[i, j] = e[j, i] = 1.0
                    fd = (batch_sk_matrix(matrices + h * e, k) - batch_sk_matrix(matrices - h * e, k)) / (2 * h)
                    expected = tensor[:, i, j] * (1.0 if i == j else 2.0)
                    assert np.allclose(fd, expected, rtol=1e-5, atol=1e-5)


def test_gradient_euler_identity():
    """S_k^{ij} M_ij = k S_k(M)"""
    rng = np.random.default_rng(3)
    matrices = _random_symmetric(rng, 200, 5)
    for k in range(1, 6):
        contracted = np.einsum("...ij,...ij->...", batch_sk_gradient(matrices, k), matrices)
        assert np.allclose(contracted, k * batch_sk_matrix(matrices, k), atol=1e-9)


def test_gradient_with_repeated_eigenvalues():
    m = SymMatrix(entries=np.diag([2.0, 2.0, 2.0]))
    g = sk_gradient(m, 2)
    assert np.allclose(g.entries, 4.0 * np.eye(3))


def test_rotation_invariance():
    rng = np.random.default_rng(4)
    matrices = _random_symmetric(rng, TRIALS, 4)
    q, _ = np.linalg.qr(rng.normal(size=(TRIALS, 4, 4)))
    rotated = q @ matrices @ np.swapaxes(q, -1, -2)
    for k in range(1, 5):
        assert np.allclose(batch_sk_matrix(rotated, k), batch_sk_matrix(matrices, k), atol=1e-8)


def test_sk_root_concave_on_cone():
    rng = np.random.default_rng(5)
    n = 5
    for k in range(1, n + 1):
        a = rng.uniform(0.01, 2.0, size=(TRIALS, n))
        b = rng.uniform(0.01, 2.0, size=(TRIALS, n))
        s = rng.uniform(size=(TRIALS, 1))
        mixed = sk_root(s * a + (1 - s) * b, k)
        chord = s[:, 0] * sk_root(a, k) + (1 - s[:, 0]) * sk_root(b, k)
        assert np.all(mixed >= chord - 1e-10)


def test_exact_rational_oracle():
    rng = np.random.default_rng(6)
    for trial in range(TRIALS):
        n = int(rng.integers(1, 9))
        values = [Fraction(int(p), int(q)) for p, q in zip(rng.integers(-9, 10, n), rng.integers(1, 6, n))]
        k = int(rng.integers(0, n + 1))
        assert elem_sym_exact(values, k) == elem_sym_by_subsets(values, k)


def test_float_recurrence_matches_exact():
    rng = np.random.default_rng(7)
    values = rng.integers(-5, 6, size=8)
    e = elementary_symmetric(values.astype(float), 8)
    for k in range(9):
        assert e[k] == float(elem_sym_by_subsets([int(v) for v in values], k))


def test_gamma_k_membership():
    assert in_gamma_k(Spectrum.of([1.0, 1.0, -0.4]), 2)
    assert not in_gamma_k(Spectrum.of([1.0, 1.0, -0.4]), 3)
    assert in_gamma_k(Spectrum.of([1.0, 0.0, 0.0]), 1)
    assert not in_gamma_k(Spectrum.of([1.0, 0.0, 0.0]), 2)
    assert in_gamma_k(Spectrum.of([1.0, 0.0, 0.0]), 2, strict=False)


def test_maclaurin_chain():
    rng = np.random.default_rng(8)
    for _ in range(200):
        spectrum = Spectrum.of(rng.uniform(0.0, 3.0, size=5))
        assert maclaurin_chain_holds(maclaurin_means(spectrum, 5))
    with pytest.raises(PreconditionError):
        maclaurin_means(Spectrum.of([1.0, -2.0, 0.5]), 2)


def test_order_out_of_range():
    with pytest.raises(DomainError):
        elem_sym(Spectrum.of([1.0, 2.0]), 3)
    with pytest.raises(DomainError):
        sk_matrix(SymMatrix(entries=np.eye(2)), -1)
    with pytest.raises(ValueError):
        SymMatrix(entries=np.ones((2, 3)))


def test_symmetrizes_input():
    m = SymMatrix(entries=[[1.0, 2.0], [0.0, 1.0]])
    assert np.allclose(m.entries, [[1.0, 1.0], [1.0, 1.0]])
    assert sk_matrix(m, 2) == pytest.approx(0.0, abs=1e-12)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
