import math
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from cvmemory.errors import InvalidArgument, PhysicsViolation
from cvmemory.physics import (
    AMU,
    PhysicalConfig,
    beam_area,
    consistency_report,
    cooperativity,
    derive_couplings,
    derive_g2,
    doppler_rms,
    fiber_loss_rate,
    fiber_transmission,
    fixture_params,
    rescale,
    storage_loss,
)

# a normalization that brings the ion config to realistic kappa / eps values
SMALL_NORM = 1.6e-8

ratios = st.floats(min_value=0.05, max_value=20.0)


class TestG2:
    def test_vapour_cell_row(self):
        assert derive_g2(852e-9, 5e6, 6e-4) == pytest.approx(34.5e3, rel=0.03)

    def test_ion_row(self):
        assert derive_g2(422e-9, 20e6, 1.1e-8) == pytest.approx(1.8e9, rel=0.05)

    def test_angular_linewidth_misses(self):
        # gamma in rad/s would overshoot by 2 pi
        assert derive_g2(422e-9, 2 * math.pi * 20e6, 1.1e-8) > 1.8e9 * 1.5

    def test_area_proportionality(self):
        assert derive_g2(422e-9, 20e6, 2.2e-8) == pytest.approx(
            derive_g2(422e-9, 20e6, 1.1e-8) / 2, rel=1e-15
        )

    def test_rejects_nonpositive(self):
        with pytest.raises(InvalidArgument):
            derive_g2(0.0, 1.0, 1.0)


class TestDeriveCouplings:
    def test_literal_si_evaluation_is_unphysical(self):
        with pytest.raises(PhysicsViolation) as exc:
            derive_couplings(PhysicalConfig())
        assert exc.value.values["eps_a"] > 1

    def test_identities(self):
        cfg = PhysicalConfig()
        p = derive_couplings(cfg, SMALL_NORM)
        assert p.provenance == "derived"
        assert p.eps_a / p.eps_p == pytest.approx(cfg.n_photons / cfg.n_atoms, rel=1e-12)
        assert p.kappa**2 / (p.eps_a * p.eps_p) == pytest.approx(
            4 * cfg.detuning_over_linewidth**2, rel=1e-12
        )

    def test_photon_scaling(self):
        cfg = PhysicalConfig()
        p1 = derive_couplings(cfg, SMALL_NORM)
        p4 = derive_couplings(replace(cfg, n_photons=4 * cfg.n_photons), SMALL_NORM)
        assert p4.kappa == pytest.approx(2 * p1.kappa, rel=1e-12)
        assert p4.eps_a == pytest.approx(4 * p1.eps_a, rel=1e-12)
        assert p4.eps_p == pytest.approx(p1.eps_p, rel=1e-12)

    def test_g2_is_unnormalized(self):
        p = derive_couplings(PhysicalConfig(), SMALL_NORM)
        assert p.g2 == pytest.approx(derive_g2(422e-9, 20e6, 1.1e-8))

    def test_bad_normalization(self):
        with pytest.raises(InvalidArgument):
            derive_couplings(PhysicalConfig(), 0.0)

    @given(
        n_p=st.floats(1e6, 1e14), n_a=st.floats(1e3, 1e12),
        det=st.floats(1e3, 1e6), norm=st.floats(1e-25, 1e-5),
    )
    def test_identities_hold_whenever_physical(self, n_p, n_a, det, norm):
        cfg = PhysicalConfig(n_photons=n_p, n_atoms=n_a, detuning=det * 20e6)
        try:
            p = derive_couplings(cfg, norm)
        except PhysicsViolation:
            return
        rep = consistency_report(p, cfg)
        assert abs(rep.kappa_deviation) < 1e-12
        assert abs(rep.ratio_deviation) < 1e-12


class TestFixtures:
    def test_ion(self):
        p = fixture_params("ion")
        assert (p.kappa, p.eps_a, p.eps_p, p.g2) == (0.64, 0.09, 1.4e-8, 1.8e9)
        assert p.provenance == "fixture-override"

    def test_polzik(self):
        p = fixture_params("polzik")
        assert (p.kappa, p.eps_a, p.eps_p, p.g2) == (0.37, 5e-3, 3.5e-4, 34.5e3)

    def test_unknown(self):
        with pytest.raises(InvalidArgument):
            fixture_params("rubidium")


class TestConsistency:
    def test_derived_passes(self):
        cfg = PhysicalConfig()
        rep = consistency_report(derive_couplings(cfg, SMALL_NORM), cfg)
        assert rep.kappa_ok and rep.ratio_ok
        assert abs(rep.kappa_deviation) < 1e-12 and abs(rep.ratio_deviation) < 1e-12

    def test_ion_fixture_flags_both_identities(self):
        rep = consistency_report(fixture_params("ion"), PhysicalConfig())
        # 0.64^2 against 4 * 0.09 * 1.4e-8 * 8000^2 = 0.32256
        assert rep.kappa_sq_implied == pytest.approx(0.32256, rel=1e-12)
        assert rep.kappa_deviation == pytest.approx(0.4096 / 0.32256 - 1, rel=1e-12)
        assert rep.kappa_deviation == pytest.approx(0.27, abs=0.005)
        # 0.09 / 1.4e-8 = 6.43e6 against 2.1e12 / 1.5e6 = 1.4e6
        assert rep.ratio_mismatch_factor == pytest.approx((0.09 / 1.4e-8) / 1.4e6, rel=1e-12)
        assert rep.ratio_mismatch_factor == pytest.approx(4.59, abs=0.01)
        assert not rep.kappa_ok and not rep.ratio_ok

    def test_polzik_smoke(self):
        cfg = PhysicalConfig(n_photons=4e12, n_atoms=3e11, wavelength=852e-9,
                             linewidth=5e6, detuning=700e6, beam_area=6e-4)
        rep = consistency_report(fixture_params("polzik"), cfg)
        assert math.isfinite(rep.kappa_deviation)


class TestRescale:
    def test_identity(self):
        p = fixture_params("ion")
        q = rescale(p, 1.0, 1.0)
        assert (q.kappa, q.eps_a, q.eps_p, q.g2) == (p.kappa, p.eps_a, p.eps_p, p.g2)

    def test_larger_detuning(self):
        q = rescale(fixture_params("ion"), 1.0, 30000 / 8000)
        assert q.kappa == pytest.approx(0.64 / 3.75, rel=1e-12)
        assert q.kappa == pytest.approx(0.171, abs=5e-4)
        assert q.eps_a == pytest.approx(0.0064, rel=1e-12)
        assert q.eps_p == pytest.approx(1.0e-9, rel=0.01)
        assert q.g2 == 1.8e9
        assert q.provenance == "fixture-override" and q.rescaling == (1.0, 3.75)

    def test_constant_photon_to_detuning_squared(self):
        p = fixture_params("ion")
        q = rescale(p, 4.0, 2.0)
        assert q.kappa == pytest.approx(p.kappa, rel=1e-15)
        assert q.eps_a == pytest.approx(p.eps_a, rel=1e-15)

    def test_violation(self):
        with pytest.raises(PhysicsViolation):
            rescale(fixture_params("ion"), 100.0, 1.0)

    @given(a=ratios, b=ratios, c=ratios, d=ratios)
    def test_group_action(self, a, b, c, d):
        p = fixture_params("ion")
        try:
            two = rescale(rescale(p, a, b), c, d)
            one = rescale(p, a * c, b * d)
        except PhysicsViolation:
            return
        for name in ("kappa", "eps_a", "eps_p"):
            assert getattr(two, name) == pytest.approx(getattr(one, name), rel=1e-12)
        assert two.rescaling == pytest.approx(one.rescaling, rel=1e-12)

    def test_preserves_identities(self):
        cfg = PhysicalConfig()
        p = derive_couplings(cfg, SMALL_NORM)
        q = rescale(p, 0.5, 1.7)
        moved = replace(cfg, n_photons=0.5 * cfg.n_photons, detuning=1.7 * cfg.detuning)
        rep = consistency_report(q, moved)
        assert abs(rep.kappa_deviation) < 1e-12 and abs(rep.ratio_deviation) < 1e-12
        again = derive_couplings(moved, SMALL_NORM)
        assert q.kappa == pytest.approx(again.kappa, rel=1e-12)


class TestStorageLoss:
    def test_zero(self):
        assert storage_loss(0.0, 10.0) == 0.0

    def test_nine_seconds(self):
        assert storage_loss(9.0, 1 / 0.03) == pytest.approx(1 - math.exp(-0.54), abs=1e-15)
        assert storage_loss(9.0, 1 / 0.03) == pytest.approx(0.417, abs=0.001)

    def test_half_tau(self):
        assert storage_loss(5.0, 10.0) == pytest.approx(1 - math.exp(-1))

    def test_negative_time(self):
        with pytest.raises(InvalidArgument):
            storage_loss(-1.0, 10.0)

    @given(t1=st.floats(0, 100), t2=st.floats(0, 100), tau=st.floats(0.1, 100))
    def test_composes_like_lossy_channels(self, t1, t2, tau):
        e1, e2 = storage_loss(t1, tau), storage_loss(t2, tau)
        assert storage_loss(t1 + t2, tau) == pytest.approx(1 - (1 - e1) * (1 - e2), abs=1e-12)

    @given(t=st.floats(0, 50), dt=st.floats(0.01, 50))
    def test_monotone(self, t, dt):
        assert storage_loss(t + dt, 10.0) >= storage_loss(t, 10.0)


class TestFiber:
    def test_rate(self):
        assert fiber_loss_rate(0.2, 1.5) * 1e-6 == pytest.approx(0.04, rel=0.005)

    def test_hundredfold_per_500us(self):
        assert 1 / fiber_transmission(500e-6) == pytest.approx(100.0, abs=0.5)

    def test_zero_time(self):
        assert fiber_transmission(0.0) == 1.0

    @given(t1=st.floats(0, 1e-3), t2=st.floats(0, 1e-3))
    def test_multiplicative(self, t1, t2):
        assert fiber_transmission(t1 + t2) == pytest.approx(
            fiber_transmission(t1) * fiber_transmission(t2), rel=1e-12
        )


class TestDoppler:
    def test_strontium(self):
        f = doppler_rms(0.1, 88 * AMU, 422e-9)
        assert 7e6 <= f <= 10e6
        assert f < 20e6
        assert f < 8e3 * 20e6

    def test_three_dimensional_convention_also_near_10mhz(self):
        assert 10e6 <= math.sqrt(3) * doppler_rms(0.1, 88 * AMU, 422e-9) <= 13e6

    def test_sqrt_temperature(self):
        assert doppler_rms(0.4, 88 * AMU, 422e-9) == pytest.approx(
            2 * doppler_rms(0.1, 88 * AMU, 422e-9), rel=1e-12
        )


class TestCooperativity:
    def test_tabulated_g2(self):
        c = cooperativity(1.8e9, 1.5e6, 20e6, 0.1)
        assert 28 <= c <= 30

    def test_effective_area_doubles(self):
        c_full = cooperativity(derive_g2(422e-9, 20e6, beam_area(60e-6)), 1.5e6, 20e6, 0.1)
        c_eff = cooperativity(
            derive_g2(422e-9, 20e6, beam_area(60e-6, "effective")), 1.5e6, 20e6, 0.1
        )
        assert c_eff == pytest.approx(2 * c_full, rel=1e-12)
        assert 50 <= c_eff <= 60

    def test_mirror_scaling(self):
        assert cooperativity(1.8e9, 1.5e6, 20e6, 1.0) == pytest.approx(
            cooperativity(1.8e9, 1.5e6, 20e6, 0.1) / 10, rel=1e-12
        )

    def test_g2_scaling(self):
        assert cooperativity(3.6e9, 1.5e6, 20e6, 0.1) == pytest.approx(
            2 * cooperativity(1.8e9, 1.5e6, 20e6, 0.1), rel=1e-12
        )

    def test_fixture_carries_it(self):
        assert fixture_params("ion").cooperativity == pytest.approx(
            cooperativity(1.8e9, 1.5e6, 20e6, 0.1)
        )

    def test_unknown_area_convention(self):
        with pytest.raises(InvalidArgument):
            beam_area(1e-5, "waist")


class TestPhysicalConfig:
    def test_defaults_match_ion_setup(self):
        cfg = PhysicalConfig()
        assert cfg.detuning_over_linewidth == pytest.approx(8000)
        assert cfg.collision_time == pytest.approx(33.333, abs=1e-3)

    @pytest.mark.parametrize("field,value", [
        ("loss_in", 1.5), ("wavelength", 0.0), ("n_atoms", -1.0), ("mirror_transmission", 0.0),
    ])
    def test_invalid(self, field, value):
        with pytest.raises(InvalidArgument):
            PhysicalConfig(**{field: value})
