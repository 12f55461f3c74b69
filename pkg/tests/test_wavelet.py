"""The internal db6 filter bank: coefficients, orthogonality, reconstruction."""

from math import comb, sqrt

import numpy as np
import pytest

from ecgbyte import _wavelet


def daubechies_scaling_reference(p: int) -> np.ndarray:
    """Independent derivation via spectral factorization (minimal phase)."""
    poly = [comb(p - 1 + k, k) for k in range(p)][::-1]
    roots = np.roots(poly)
    q = np.poly1d([1.0])
    for y in roots:
        part = 2 * np.sqrt(y * (y - 1))
        z1 = 1 - 2 * y + part
        if abs(z1) > 1:
            z1 = 1 - 2 * y - part
        q = q * np.poly1d([1, -z1])
    h = (np.poly1d([1, 1]) ** p) * np.real(q.coeffs)
    h = h / np.sum(h.coeffs) * sqrt(2)
    return h.coeffs


class TestFilterBank:
    def test_matches_independent_derivation(self):
        ref = daubechies_scaling_reference(6)
        np.testing.assert_allclose(_wavelet.DB6_SCALING, ref, atol=1e-12)

    def test_orthonormal_filter(self):
        h = _wavelet.DB6_SCALING
        assert abs(h.sum() - sqrt(2)) < 1e-12
        assert abs((h * h).sum() - 1.0) < 1e-12
        for k in range(1, 6):
            assert abs(np.dot(h[:-2 * k], h[2 * k:])) < 1e-12

    def test_analysis_matrix_is_orthogonal(self):
        n = 32
        rows = []
        for k in range(n // 2):
            basis = np.zeros(n)
            for m, _ in enumerate(_wavelet._DEC_LO):
                basis[(2 * k + m) % n] += _wavelet._DEC_LO[m]
            rows.append(basis)
        for k in range(n // 2):
            basis = np.zeros(n)
            for m, _ in enumerate(_wavelet._DEC_HI):
                basis[(2 * k + m) % n] += _wavelet._DEC_HI[m]
            rows.append(basis)
        w = np.stack(rows)
        np.testing.assert_allclose(w @ w.T, np.eye(n), atol=1e-12)


class TestTransform:
    @pytest.mark.parametrize("n", [16, 17, 101, 500, 2500])
    @pytest.mark.parametrize("level", [1, 2, 4])
    def test_perfect_reconstruction(self, n, level):
        if n < 2 ** level:
            pytest.skip("too short")
        rng = np.random.default_rng(n * 10 + level)
        x = rng.normal(size=n)
        approx, details, lengths = _wavelet.wavedec(x, level)
        y = _wavelet.waverec(approx, details, lengths)
        np.testing.assert_allclose(y, x, atol=1e-10)

    def test_constant_signal_has_no_detail(self):
        _, details, _ = _wavelet.wavedec(np.full(128, 5.0), 3)
        for d in details:
            assert np.abs(d).max() < 1e-12

    def test_too_short_raises(self):
        with pytest.raises(Exception):
            _wavelet.wavedec(np.zeros(8), 4)

    def test_energy_preserved(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=256)
        approx, details, _ = _wavelet.wavedec(x, 4)
        total = np.sum(approx ** 2) + sum(np.sum(d ** 2) for d in details)
        assert abs(total - np.sum(x ** 2)) < 1e-8


class TestSoftThreshold:
    def test_contraction(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=1000) * 3
        for lam in (0.0, 0.1, 1.0, 10.0):
            shrunk = _wavelet.soft_threshold(x, lam)
            assert np.all(np.abs(shrunk) <= np.abs(x) + 1e-15)

    def test_zeroes_below_threshold(self):
        out = _wavelet.soft_threshold(np.array([-0.5, 0.2, 0.9]), 0.6)
        np.testing.assert_allclose(out, [0.0, 0.0, 0.3], atol=1e-15)
