import math
from fractions import Fraction

import numpy as np
import pytest

from guided_dbf.channel import (CarrierConfig,
                                DegenerateGeometryError, LinkBudget,
                                RiceanKModel, k_at_distance, los_gain,
                                los_gains, received_snr, ricean_sample)
from guided_dbf.geometry import Position3


@pytest.fixture
def carrier():
    return CarrierConfig(900e6)


class TestCarrierConfig:
    def test_wavelength(self, carrier):
        assert carrier.wavelength_m == pytest.approx(0.3331, abs=5e-5)

    def test_rejects_nonpositive_frequency(self):
        with pytest.raises(ValueError):
            CarrierConfig(0.0)


class TestLosGain:
    def test_full_wavelength_is_unity(self, carrier):
        g = los_gain(Position3(0, 0, 0), Position3(carrier.wavelength_m, 0, 0),
                     carrier)
        assert g == pytest.approx(1.0 + 0.0j, abs=1e-12)

    def test_half_wavelength_inverts(self, carrier):
        g = los_gain(Position3(0, 0, 0),
                     Position3(carrier.wavelength_m / 2, 0, 0), carrier)
        assert g == pytest.approx(-1.0 + 0.0j, abs=1e-12)

    def test_long_range_phase_against_exact_rationals(self, carrier):
        # 10 km at 900 MHz: lambda = 2.998e8/9e8 = 1499/4500 m exactly, so
        # d / lambda = 45e6/1499 and the reduced phase follows from the
        # exact integer remainder.
        cycles = Fraction(10_000) / (Fraction(2998, 9000))
        frac = cycles - (cycles.numerator // cycles.denominator)
        expected = 2.0 * math.pi * float(frac)
        g = los_gain(Position3(0, 0, 0), Position3(10_000.0, 0, 0), carrier)
        assert math.atan2(g.imag, g.real) % (2 * math.pi) == pytest.approx(expected, abs=1e-9)

    def test_unit_magnitude(self, carrier):
        rng = np.random.default_rng(3)
        for _ in range(100):
            p = Position3(*rng.uniform(1.0, 25_000.0, 3))
            assert abs(los_gain(Position3(0, 0, 0), p, carrier)) == pytest.approx(1.0, abs=1e-12)

    def test_periodicity_at_long_range(self, carrier):
        # d and d + lambda give equal phase within 1e-6 rad up to 25 km
        lam = carrier.wavelength_m
        for d in (1.0, 100.0, 10_000.0, 25_000.0):
            g1 = los_gain(Position3(0, 0, 0), Position3(d, 0, 0), carrier)
            g2 = los_gain(Position3(0, 0, 0), Position3(d + lam, 0, 0), carrier)
            dphi = np.angle(g2 / g1)
            assert abs(dphi) < 1e-6

    def test_coincident_positions_rejected(self, carrier):
        with pytest.raises(DegenerateGeometryError):
            los_gain(Position3(1, 2, 3), Position3(1, 2, 3), carrier)

    def test_vectorized_matches_scalar(self, carrier):
        rng = np.random.default_rng(4)
        pos = rng.uniform(-20, 0, (5, 3))
        rx = np.array([10_000.0, 0.0, 0.0])
        vec = los_gains(pos, rx, carrier.wavelength_m)
        for i, p in enumerate(pos):
            # the two paths compute the distance differently; an ulp of
            # error at 10 km range moves the reduced phase by ~1e-11 rad
            scalar = los_gain(Position3(*p), Position3(*rx), carrier)
            assert vec[i] == pytest.approx(scalar, abs=1e-9)


class TestRiceanSample:
    def test_pure_los_flag(self):
        h_los = np.exp(1j * np.linspace(0, 5, 11))
        ch = ricean_sample(h_los, math.inf, 1)
        assert np.array_equal(ch.h, h_los)
        assert np.all(ch.h_nlos == 0)

    def test_decomposition_identity(self):
        h_los = np.exp(1j * np.linspace(0, 5, 11))
        for k_db in (0.0, 10.0, 25.0):
            ch = ricean_sample(h_los, k_db, 2)
            k = ch.k_linear
            rebuilt = (math.sqrt(k / (k + 1)) * ch.h_los
                       + math.sqrt(1 / (k + 1)) * ch.h_nlos)
            assert np.max(np.abs(ch.h - rebuilt)) < 1e-12

    def test_unit_average_power_at_0db(self):
        # equal LOS/NLOS power split, E|h|^2 = 1 within 1%
        rng = np.random.default_rng(11)
        h_los = np.ones(100_000, dtype=complex)
        ch = ricean_sample(h_los, 0.0, rng)
        assert np.mean(np.abs(ch.h) ** 2) == pytest.approx(1.0, rel=0.01)

    def test_nlos_residual_power_at_25db(self):
        # E|h - sqrt(K/(K+1)) h_los|^2 = 1/(K+1) ~ 3.15e-3
        rng = np.random.default_rng(12)
        h_los = np.ones(100_000, dtype=complex)
        ch = ricean_sample(h_los, 25.0, rng)
        k = 10 ** 2.5
        resid = ch.h - math.sqrt(k / (k + 1)) * ch.h_los
        assert np.mean(np.abs(resid) ** 2) == pytest.approx(1 / (k + 1), rel=0.02)
        assert 1 / (k + 1) == pytest.approx(3.15e-3, abs=5e-5)

    def test_unit_average_power_any_k(self):
        rng = np.random.default_rng(13)
        for k_db in (-5.0, 5.0, 15.0):
            ch = ricean_sample(np.ones(100_000, dtype=complex), k_db, rng)
            assert np.mean(np.abs(ch.h) ** 2) == pytest.approx(1.0, rel=0.01)

    def test_los_part_unit_magnitude(self):
        ch = ricean_sample(np.exp(1j * np.arange(5)), 10.0, 3)
        assert np.allclose(np.abs(ch.h_los), 1.0)


class TestKModel:
    def test_reference_distance(self):
        model = RiceanKModel(sigma_y_db=0.0)
        assert k_at_distance(3.4, model, 1) == pytest.approx(29.9)

    def test_25km(self):
        model = RiceanKModel(sigma_y_db=0.0)
        assert k_at_distance(25.0, model, 1) == pytest.approx(29.468, abs=1e-3)

    def test_shadowing_variance(self):
        model = RiceanKModel()
        rng = np.random.default_rng(17)
        draws = np.array([k_at_distance(10.0, model, rng) for _ in range(40_000)])
        assert draws.var() == pytest.approx(2.2 ** 2, rel=0.03)

    def test_rejects_nonpositive_distance(self):
        with pytest.raises(ValueError):
            k_at_distance(0.0, RiceanKModel(), 1)


class TestLinkBudget:
    def test_noise_floor(self):
        assert LinkBudget().noise_floor_dbm == pytest.approx(-109.0, abs=1e-9)

    def test_anchor_snr_at_25km(self):
        # 11 perfectly combining 0 dBm radios reach 1.0 dB at 25 km
        gain_db = 20 * math.log10(11)
        assert received_snr(25_000.0, LinkBudget(), 0.0, gain_db) == pytest.approx(1.0, abs=1e-9)

    def test_reference_loss_value(self):
        assert LinkBudget().reference_loss_db == pytest.approx(27.7, abs=0.1)

    def test_distance_doubling_drop(self):
        budget = LinkBudget()
        drop = received_snr(1000.0, budget, 0.0) - received_snr(2000.0, budget, 0.0)
        assert drop == pytest.approx(23 * math.log10(2), rel=1e-9)
        assert drop == pytest.approx(6.92, abs=5e-3)

    def test_strictly_decreasing(self):
        budget = LinkBudget()
        d = np.geomspace(1.0, 25_000.0, 40)
        snrs = [received_snr(x, budget, 0.0) for x in d]
        assert all(b < a for a, b in zip(snrs, snrs[1:]))

    def test_rejects_subreference_distance(self):
        with pytest.raises(ValueError):
            received_snr(0.5, LinkBudget(), 0.0)
