import numpy as np
import pytest

from shapelab.mapping import ComplexSymbolFrame, generate_uniform_frame
from shapelab.metrics import acf, edi, moments, moving_window_angle, windowed_energy


def frame(arr):
    return ComplexSymbolFrame(np.asarray(arr, dtype=complex))


class TestWindowedEnergy:
    def test_constant_energy(self):
        f = frame(np.full(32, 1 + 1j))
        g = windowed_energy(f, 4)
        assert np.array_equal(g, np.full(32 - 4, 5 * 2.0))

    def test_hand_sum(self):
        # energies (1,2,3,4,5), W=2 -> (6,9,12)
        f = frame(np.sqrt([1, 2, 3, 4, 5]))
        assert np.allclose(windowed_energy(f, 2), [6, 9, 12])

    def test_single_full_window(self):
        f = frame(np.sqrt([1, 2, 3, 4]))
        g = windowed_energy(f, 3 - 1)  # hmm W must be even; use W=2 on len 3
        assert g.size == 2

    def test_whole_frame_window(self):
        f = frame(np.sqrt([1.0, 2.0, 3.0]))
        g = windowed_energy(f, 2)
        assert g.size == 1 and g[0] == pytest.approx(6.0)

    def test_odd_or_oversize_window_rejected(self):
        f = frame(np.ones(8))
        with pytest.raises(ValueError):
            windowed_energy(f, 3)
        with pytest.raises(ValueError):
            windowed_energy(f, 8)


class TestEdi:
    def test_constant_envelope_exactly_zero(self):
        f = frame(np.full(500, 1 + 1j))
        for w in (2, 10, 40):
            assert edi([f], w).psi == 0.0

    def test_iid_uniform_qam_analytic(self):
        # unnormalized uniform 64-QAM: Var(|x|^2)/E(|x|^2) = 672/42 = 16
        frames = [generate_uniform_frame(2 ** 15, np.random.default_rng(s))
                  for s in range(8)]
        for w in (10, 50, 150):
            assert edi(frames, w).psi == pytest.approx(16.0, rel=0.05)

    def test_power_scaling_is_exact(self):
        rng = np.random.default_rng(5)
        f = generate_uniform_frame(4096, rng)
        doubled = ComplexSymbolFrame(2.0 * f.symbols)  # 4x power, exact in binary
        a = edi([f], 20).psi
        b = edi([doubled], 20).psi
        assert b == 4.0 * a

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            edi([], 10)

    def test_per_frame_series_on_request(self):
        f = generate_uniform_frame(512, np.random.default_rng(0))
        rep = edi([f, f], 10, keep_series=True)
        assert len(rep.per_frame) == 2
        assert np.array_equal(rep.per_frame[0], windowed_energy(f, 10))


class TestMovingWindowAngle:
    def test_identity_gives_zero(self):
        f = generate_uniform_frame(256, np.random.default_rng(1))
        theta = moving_window_angle(f, f, 5)
        assert np.max(np.abs(theta)) == 0.0

    def test_constant_rotation(self):
        f = generate_uniform_frame(256, np.random.default_rng(2))
        g = ComplexSymbolFrame(f.symbols * np.exp(0.7j))
        theta = moving_window_angle(f, g, 5)
        assert np.allclose(theta, 0.7, atol=1e-12)

    def test_window_size_and_validity(self):
        f = generate_uniform_frame(101, np.random.default_rng(3))
        theta = moving_window_angle(f, f, 5)
        assert theta.size == 101 - 4
        with pytest.raises(ValueError):
            moving_window_angle(f, f, 4)


class TestAcf:
    def test_zero_lag_exactly_one(self):
        rng = np.random.default_rng(4)
        rep = acf(rng.normal(size=3000), 20)
        assert rep.values[0] == 1.0

    def test_white_noise_bound(self):
        n = 10 ** 5
        rep = acf(np.random.default_rng(6).normal(size=n), 50)
        assert np.max(np.abs(rep.values[1:])) < 4 / np.sqrt(n)

    def test_moving_average_memory(self):
        # w-window moving average of white noise: R > 0 for tau < w,
        # R ~ 0 for tau > w (tau = w sits exactly at zero and is skipped)
        w, n = 5, 200_000
        x = np.random.default_rng(7).normal(size=n + w)
        theta = np.convolve(x, np.ones(w) / w, mode="valid")
        rep = acf(theta, 3 * w)
        assert all(rep.values[tau] > 3 / np.sqrt(n) for tau in range(1, w))
        assert all(abs(rep.values[tau]) < 4 / np.sqrt(n) for tau in range(w + 1, 3 * w))

    def test_constant_offset_invariance(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=5000)
        a = acf(x, 10).values
        b = acf(x + 123.456, 10).values
        assert np.allclose(a, b, atol=1e-9)

    def test_constant_series_rejected(self):
        with pytest.raises(ValueError):
            acf(np.ones(100), 5)


class TestMoments:
    def test_uniform_amplitudes(self):
        # uniform 8-ASK amplitude draws: E a^2 = 21, E a^4 = 777
        rng = np.random.default_rng(9)
        amps = rng.choice([1, 3, 5, 7], size=10 ** 6)
        rep = moments([np.array([a]) for a in amps[:200_000]])
        assert rep.mean_energy == pytest.approx(21.0, rel=0.01)
        assert rep.mean_fourth_sum == pytest.approx(777.0, rel=0.02)

    def test_constant_amplitude(self):
        rep = moments([np.full(64, 3)])
        assert rep.energy_variance == 0.0
        assert rep.kurtosis_ratio == 1.0

    def test_complex_frames(self):
        f = frame([1 + 1j, 3 - 1j])
        rep = moments([f])
        assert rep.mean_energy == pytest.approx((2 + 10) / 2)
        assert rep.mean_fourth_sum == pytest.approx(1 + 1 + 81 + 1)

    def test_kurtosis_ratio_at_least_one(self):
        f = generate_uniform_frame(10000, np.random.default_rng(10))
        assert moments([f]).kurtosis_ratio >= 1.0


class TestEdiStationarity:
    def test_iid_flat_in_window(self):
        # slope of psi across W stays inside Monte-Carlo bands for iid input
        rng = np.random.default_rng(11)
        groups = [[generate_uniform_frame(2 ** 14, rng) for _ in range(4)]
                  for _ in range(10)]
        for w in (10, 100, 200):
            vals = [edi(g, w).psi for g in groups]
            se = np.std(vals, ddof=1) / np.sqrt(len(vals))
            assert np.mean(vals) == pytest.approx(16.0, abs=3 * se + 0.02)


class TestWindowLinearity:
    def test_no_cross_frame_leakage(self):
        rng = np.random.default_rng(21)
        a = generate_uniform_frame(100, rng)
        b = generate_uniform_frame(100, rng)
        cat = frame(np.concatenate([a.symbols, b.symbols]))
        w = 10
        ga = windowed_energy(a, w)
        gcat = windowed_energy(cat, w)
        # interior windows of the first frame appear verbatim in the
        # concatenated series at the same offsets
        assert np.array_equal(gcat[: len(ga)], ga)
        gb = windowed_energy(b, w)
        assert np.array_equal(gcat[-len(gb):], gb)
