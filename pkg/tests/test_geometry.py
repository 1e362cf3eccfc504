import math

import numpy as np
import pytest

from guided_dbf.channel import CarrierConfig
from guided_dbf.geometry import (DeploymentSpec, InvalidToleranceError,
                                 LocalizationError, Position3,
                                 apply_localization_error, path_mismatch,
                                 sample_placement, separation_bound,
                                 worst_case_mismatch)

LAMBDA_900 = CarrierConfig(900e6).wavelength_m
LAMBDA_915 = CarrierConfig(915e6).wavelength_m


class TestSeparationBound:
    def test_reference_geometry(self):
        # ((0.5)^2 - delta^2) / (2 delta) at delta = 0.2 lambda, 900 MHz
        assert separation_bound(1.0, 0.2 * LAMBDA_900) == pytest.approx(1.843, abs=1e-3)

    def test_collinear_needs_no_separation(self):
        assert separation_bound(0.0, 0.05) == 0.0
        assert separation_bound(0.0, 2.0) == 0.0

    def test_desk_scale_geometry(self):
        assert separation_bound(0.1, 0.1 * LAMBDA_915) == pytest.approx(0.0218, abs=2e-4)

    def test_negative_bound_clamps_to_zero(self):
        # ly/2 < delta: any nonnegative separation already satisfies it
        assert separation_bound(0.1, 0.2) == 0.0

    def test_rejects_nonpositive_tolerance(self):
        with pytest.raises(InvalidToleranceError):
            separation_bound(1.0, 0.0)
        with pytest.raises(InvalidToleranceError):
            separation_bound(1.0, -0.1)

    def test_monotone_in_spread_and_tolerance(self):
        lys = np.linspace(0.5, 8.0, 16)
        deltas = np.linspace(0.01, 0.3, 12)
        for d in deltas:
            bounds = [separation_bound(ly, d) for ly in lys]
            assert all(b2 >= b1 for b1, b2 in zip(bounds, bounds[1:]))
        for ly in lys:
            bounds = [separation_bound(ly, d) for d in deltas]
            assert all(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:]))


class TestPathMismatch:
    def test_on_axis_follower_has_zero_mismatch(self):
        assert path_mismatch(Position3(-5.0, 0.0, 0.0)) == pytest.approx(0.0, abs=1e-12)
        assert path_mismatch(Position3(-0.32, 0.0, 0.0)) == pytest.approx(0.0, abs=1e-12)

    def test_rectangle_corner(self):
        dx, ly = 1.843, 1.0
        expected = math.hypot(dx, ly / 2) - dx
        assert path_mismatch(Position3(-dx, ly / 2, 0.0)) == pytest.approx(expected, rel=1e-12)

    def test_never_negative(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            p = Position3(*rng.uniform(-20, 20, 3))
            assert path_mismatch(p) >= 0.0


class TestWorstCaseMismatch:
    def test_no_separation(self):
        spec = DeploymentSpec(lx_m=10.0, ly_m=2.0, dx_m=0.0, n_followers=10)
        assert worst_case_mismatch(spec).e_max_m == pytest.approx(1.0)

    def test_bound_inverts_separation(self):
        # the separation computed for delta = 0.2 lambda attains e_max <= delta
        delta = 0.2 * LAMBDA_900
        dx = separation_bound(1.0, delta)
        spec = DeploymentSpec(lx_m=10.0, ly_m=1.0, dx_m=dx, n_followers=10)
        bound = worst_case_mismatch(spec, LAMBDA_900)
        assert bound.e_max_m == pytest.approx(delta, rel=1e-9)
        assert bound.e_max_m <= 0.0666 + 1e-4
        assert bound.phi_max_rad == pytest.approx(2 * math.pi * 0.2, rel=1e-9)

    def test_vanishes_for_large_separation(self):
        e = [worst_case_mismatch(DeploymentSpec(10.0, 1.0, dx, 10)).e_max_m
             for dx in (1.0, 10.0, 100.0, 1000.0)]
        assert all(b < a for a, b in zip(e, e[1:]))
        assert e[-1] < 1e-3

    def test_bounds_every_sampled_follower(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            lx, ly = rng.uniform(0.5, 12.0), rng.uniform(0.0, 6.0)
            dx = rng.uniform(0.0, 10.0)
            spec = DeploymentSpec(lx, ly, dx, 100)
            e_max = worst_case_mismatch(spec).e_max_m
            placement = sample_placement(spec, rng)
            for f in placement.followers:
                assert path_mismatch(f) <= e_max + 1e-12


class TestSamplePlacement:
    def test_containment(self):
        spec = DeploymentSpec(10.0, 1.0, 1.843, 10)
        placement = sample_placement(spec, 123)
        assert placement.guide == Position3(0.0, 0.0, 0.0)
        assert len(placement.followers) == 10
        for f in placement.followers:
            assert -spec.dx_m - spec.lx_m <= f.x <= -spec.dx_m
            assert abs(f.y) <= spec.ly_m / 2
            assert f.z == 0.0

    def test_zero_spread_is_exactly_collinear(self):
        placement = sample_placement(DeploymentSpec(10.0, 0.0, 0.0, 10), 7)
        assert all(f.y == 0.0 for f in placement.followers)

    def test_uniform_mean(self):
        # empirical mean of y over 1e5 draws within 3 sigma of zero
        n = 100_000
        big = sample_placement(DeploymentSpec(10.0, 1.0, 0.0, n),
                               np.random.default_rng(2024))
        ys = np.array([f.y for f in big.followers])
        sigma = 1.0 / math.sqrt(12.0)
        assert abs(ys.mean()) < 3 * sigma / math.sqrt(n)

    def test_seed_reproducibility(self):
        spec = DeploymentSpec(10.0, 2.0, 1.0, 10)
        a = sample_placement(spec, 99)
        b = sample_placement(spec, 99)
        assert a == b

    def test_rejects_invalid_spec(self):
        with pytest.raises(ValueError):
            DeploymentSpec(-1.0, 1.0, 0.0, 10)
        with pytest.raises(ValueError):
            DeploymentSpec(1.0, 1.0, 0.0, 0)


class TestLocalizationError:
    def test_zero_range_is_identity(self):
        placement = sample_placement(DeploymentSpec(10.0, 1.0, 1.0, 10), 5)
        perturbed = apply_localization_error(placement, LocalizationError(0.0), 6)
        assert perturbed == placement

    def test_offsets_within_range(self):
        placement = sample_placement(DeploymentSpec(10.0, 1.0, 1.0, 10), 5)
        rng = np.random.default_rng(8)
        for _ in range(200):
            p = apply_localization_error(placement, LocalizationError(1.0), rng)
            assert abs(p.guide.x) <= 0.5 and abs(p.guide.y) <= 0.5
            for f0, f1 in zip(placement.followers, p.followers):
                assert abs(f1.x - f0.x) <= 0.5
                assert abs(f1.y - f0.y) <= 0.5

    def test_mean_absolute_offset(self):
        # E|uniform(-dP/2, dP/2)| = dP/4
        placement = sample_placement(DeploymentSpec(10.0, 1.0, 1.0, 50), 5)
        rng = np.random.default_rng(31)
        offs = []
        for _ in range(400):
            p = apply_localization_error(placement, LocalizationError(1.0), rng)
            offs.extend(abs(f1.x - f0.x)
                        for f0, f1 in zip(placement.followers, p.followers))
        assert np.mean(offs) == pytest.approx(0.25, abs=0.01)

    def test_perfect_guide_keeps_guide_fixed(self):
        placement = sample_placement(DeploymentSpec(10.0, 1.0, 1.0, 10), 5)
        p = apply_localization_error(placement, LocalizationError(2.0), 9,
                                     perfect_guide=True)
        assert p.guide == placement.guide
        assert p.followers != placement.followers

    def test_destination_untouched(self):
        placement = sample_placement(DeploymentSpec(10.0, 1.0, 1.0, 10), 5)
        p = apply_localization_error(placement, LocalizationError(1.0), 9)
        assert p.destination == placement.destination
