import numpy as np
import pytest

from shapelab.mapping import (
    ComplexSymbolFrame,
    SignSource,
    generate_uniform_frame,
    map_to_qam,
    normalize_power,
)


class TestMapToQam:
    def test_single_symbol(self):
        f = map_to_qam(np.array([1, 3]), np.array([1, -1]))
        assert f.symbols[0] == 1 - 3j

    def test_block_length_pairing(self):
        f = map_to_qam(np.ones(108), np.ones(108))
        assert len(f) == 54

    def test_energy(self):
        f = map_to_qam(np.array([7, 7]), np.array([1, 1]))
        assert f.symbols[0] == 7 + 7j
        assert abs(f.symbols[0]) ** 2 == 98

    def test_odd_length_rejected(self):
        with pytest.raises(ValueError):
            map_to_qam(np.array([1, 3, 5]), np.array([1, 1, 1]))

    def test_energy_bookkeeping_exact(self):
        rng = np.random.default_rng(5)
        amps = rng.choice([1, 3, 5, 7], size=200)
        signs = rng.integers(0, 2, size=200) * 2 - 1
        f = map_to_qam(amps, signs)
        assert np.sum(np.abs(f.symbols) ** 2) == np.sum(amps.astype(np.int64) ** 2)

    def test_magnitudes_independent_of_signs(self):
        amps = np.array([1, 3, 5, 7])
        a = map_to_qam(amps, np.array([1, 1, 1, 1]))
        b = map_to_qam(amps, np.array([-1, 1, -1, -1]))
        assert np.allclose(np.abs(a.symbols), np.abs(b.symbols))


class TestSignSource:
    def test_deterministic(self):
        assert np.array_equal(SignSource(7).draw(64), SignSource(7).draw(64))

    def test_values_and_balance(self):
        s = SignSource(11).draw(100_000)
        assert set(np.unique(s)) == {-1, 1}
        assert abs(s.mean()) < 4 / np.sqrt(s.size)


class TestUniformFrames:
    def test_mean_energy_is_42(self):
        # 2 * mean of {1,9,25,49}
        f = generate_uniform_frame(200_000, np.random.default_rng(3))
        e = np.abs(f.symbols) ** 2
        assert e.mean() == pytest.approx(42.0, rel=5e-3)

    def test_histogram_uniform_over_64_points(self):
        from scipy.stats import chisquare
        f = generate_uniform_frame(10 ** 6, np.random.default_rng(4))
        pts = (f.symbols.real + 7) / 2 * 8 + (f.symbols.imag + 7) / 2
        counts = np.bincount(pts.astype(int), minlength=64)
        assert chisquare(counts).pvalue > 1e-4

    def test_seed_determinism(self):
        a = generate_uniform_frame(512, np.random.default_rng(9))
        b = generate_uniform_frame(512, np.random.default_rng(9))
        assert np.array_equal(a.symbols, b.symbols)


class TestNormalizePower:
    def test_uniform_scale_sqrt_42(self):
        f = generate_uniform_frame(1000, np.random.default_rng(1))
        (g,) = normalize_power([f], 42.0)
        assert g.scale == pytest.approx(np.sqrt(42.0), abs=1e-15)
        # exact ensemble expectation: E|x|^2/42 == 1 to float precision
        assert np.mean(np.abs(g.symbols) ** 2) == pytest.approx(
            np.mean(np.abs(f.symbols) ** 2) / 42.0, rel=1e-12)

    def test_constant_unit_frame_unchanged(self):
        f = ComplexSymbolFrame(np.ones(16, dtype=complex))
        (g,) = normalize_power([f], 1.0)
        assert np.array_equal(g.symbols, f.symbols)

    def test_scale_invariance_of_normalized_output(self):
        rng = np.random.default_rng(2)
        x = rng.choice([1.0, 3.0], 4096) + 1j * rng.choice([1.0, 3.0], 4096)
        (a,) = normalize_power([ComplexSymbolFrame(x)], np.mean(np.abs(x) ** 2))
        (b,) = normalize_power([ComplexSymbolFrame(2 * x)], np.mean(np.abs(2 * x) ** 2))
        assert np.allclose(a.symbols, b.symbols)

    def test_rejects_nonpositive_energy(self):
        with pytest.raises(ValueError):
            normalize_power([ComplexSymbolFrame(np.ones(4, dtype=complex))], 0.0)
