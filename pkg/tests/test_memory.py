"""Closed-form physics layer against the independent high-precision oracle."""

import math

import pytest

import _oracle as oracle
from vaporlink.errors import InfeasibleConfigError, ParameterError
from vaporlink.memory import (calibrate_zeta1, cavity_decay, cavity_geometry,
                              complex_detunings, fwm_suppression_factor,
                              optimal_reflectivity, readout_fidelity,
                              readout_g2, storage_efficiency, validity_report)
from vaporlink.params import CavityParams, MemoryParams

SEC5 = MemoryParams(d=100, gamma_e=13.5e9, delta_s=2700e9, delta_hf=0.46e9,
                    J=1000.0, gamma_s=17.5, gamma_k=1e-4)


def sec5_cavity(zeta1=1.0):
    r = optimal_reflectivity(SEC5)
    length = cavity_geometry(SEC5, r).roundtrip_length
    return CavityParams(r=r, roundtrip_length=length, zeta1=zeta1)


def test_complex_detunings_paper_values():
    det = complex_detunings(SEC5)
    assert det.gamma_s == complex(13.5e9, -2700e9)
    assert det.gamma_a == complex(13.5e9, -2700.46e9)
    assert det.gamma_a_plus == complex(13.5e9, -2700.92e9)


def test_complex_detunings_zero_detuning_degenerate():
    m = MemoryParams(d=1, gamma_e=1.0, delta_s=1e-12, delta_hf=1e-12,
                     J=1.0, gamma_s=0.0, gamma_k=0.0)
    det = complex_detunings(m)
    for g in det:
        assert g.real == 1.0
        assert abs(g.imag) < 1e-11


def test_detuning_ratio_matches_oracle():
    det = complex_detunings(SEC5)
    ratio = abs(det.gamma_s) ** 2 / abs(det.gamma_a) ** 2
    gs, ga, _ = oracle.complex_detunings()
    assert ratio == pytest.approx(float(abs(gs) ** 2 / abs(ga) ** 2),
                                  rel=1e-12)


def test_storage_efficiency_oracle_values():
    eff = storage_efficiency(SEC5)
    e1, e2, es = oracle.storage_efficiency()
    assert eff.eta1 == pytest.approx(float(e1), rel=1e-12)
    assert eff.eta2 == pytest.approx(float(e2), rel=1e-12)
    assert eff.eta_s == pytest.approx(float(es), rel=1e-12)
    # quoted implementation value: around 93.8%
    assert eff.eta_s == pytest.approx(0.938, abs=1e-3)


def test_storage_efficiency_no_decoherence_is_lossless_transfer():
    m = MemoryParams(d=100, gamma_e=13.5e9, delta_s=2700e9, delta_hf=0.46e9,
                     J=123.0, gamma_s=0.0, gamma_k=0.0)
    assert storage_efficiency(m).eta2 == 1.0


def test_storage_efficiency_rejects_eta1_nonpositive():
    m = MemoryParams(d=900, gamma_e=1.0, delta_s=20.0, delta_hf=1.0,
                     J=1.0, gamma_s=0.0, gamma_k=0.0)
    with pytest.raises(ParameterError, match="eta1"):
        storage_efficiency(m)


def test_storage_efficiency_requires_far_detuned():
    m = MemoryParams(d=1.0, gamma_e=1.0, delta_s=5.0, delta_hf=1.0,
                     J=1.0, gamma_s=0.0, gamma_k=0.0)
    with pytest.raises(ParameterError, match="far-detuned"):
        storage_efficiency(m)


def test_cavity_decay_roundtrip_transmission():
    c = sec5_cavity()
    dec = cavity_decay(SEC5, c)
    assert dec.kappa_s.real * c.roundtrip_time == pytest.approx(
        float(oracle.D_OPT * oracle.GAMMA_E ** 2
              / abs(oracle.complex_detunings()[0]) ** 2), rel=1e-12)
    assert dec.mu_s == pytest.approx(float(oracle.mu_s_exact(
        oracle.optimal_reflectivity())), rel=1e-10)
    # kappa_a uses the shifted anti-Stokes detuning
    assert dec.kappa_a.imag != dec.kappa_s.imag


def test_cavity_decay_lossless_ring_limit():
    m = MemoryParams(d=1e-9, gamma_e=1.0, delta_s=100.0, delta_hf=1.0,
                     J=1.0, gamma_s=0.0, gamma_k=0.0)
    c = CavityParams(r=0.999999, roundtrip_length=0.1, phi_s=0.0,
                     phi_a=math.pi)
    dec = cavity_decay(m, c)
    assert dec.mu_s == pytest.approx(1.0, abs=2e-6)
    assert 0 < dec.kappa_tilde_s.real < 10.0 / c.roundtrip_time * 1e-5


def test_cavity_decay_antiresonant_rate_is_negative_real():
    c = sec5_cavity()
    dec = cavity_decay(SEC5, c)
    expected_mag = (1 + dec.mu_a) / (c.roundtrip_time * dec.mu_a)
    assert dec.kappa_tilde_a.real == pytest.approx(-expected_mag, rel=1e-12)
    assert dec.kappa_tilde_a.imag == pytest.approx(0.0, abs=1e-3)


def test_cavity_decay_divergent_resonance_rejected():
    m = MemoryParams(d=1e-4, gamma_e=1.0, delta_s=1e7, delta_hf=1.0,
                     J=1.0, gamma_s=0.0, gamma_k=0.0)
    c = CavityParams(r=0.9999999999999999, roundtrip_length=0.1, phi_s=0.0,
                     phi_a=math.pi)
    with pytest.raises(InfeasibleConfigError, match="divergent"):
        cavity_decay(m, c)


def test_suppression_factor_oracle_value():
    c = sec5_cavity()
    x = fwm_suppression_factor(SEC5, c)
    assert x == pytest.approx(float(oracle.suppression(
        oracle.optimal_reflectivity())), rel=1e-12)


def test_suppression_factor_algebraic_half():
    # negligible absorption: mu_s = r, so x = (1-r)/(2r) = 0.5 at r = 0.5
    m = MemoryParams(d=1e-12, gamma_e=1.0, delta_s=1e3, delta_hf=1.0,
                     J=1.0, gamma_s=0.0, gamma_k=0.0)
    c = CavityParams(r=0.5, roundtrip_length=0.1)
    assert fwm_suppression_factor(m, c) == pytest.approx(0.5, rel=1e-12)


def test_suppression_factor_vanishes_at_perfect_roundtrip():
    m = MemoryParams(d=1e-12, gamma_e=1.0, delta_s=1e3, delta_hf=1.0,
                     J=1.0, gamma_s=0.0, gamma_k=0.0)
    c = CavityParams(r=1 - 1e-12, roundtrip_length=0.1)
    assert fwm_suppression_factor(m, c) == pytest.approx(0.0, abs=1e-11)


def test_suppression_factor_requires_tuned_cavity():
    c = CavityParams(r=0.9, roundtrip_length=0.1, phi_s=0.3, phi_a=math.pi)
    with pytest.raises(ParameterError, match="tuned"):
        fwm_suppression_factor(SEC5, c)


def test_eq13_consistency_with_cavity_decay():
    # same alpha_s convention: x from the formula == (1-mu)/(2mu) from the
    # decay rates, to 1e-12 relative
    c = sec5_cavity()
    dec = cavity_decay(SEC5, c)
    x_exact = fwm_suppression_factor(SEC5, c, exact_alpha=True)
    assert x_exact == pytest.approx((1 - dec.mu_s) / (2 * dec.mu_s),
                                    rel=1e-12)


def test_optimal_reflectivity_oracle_value():
    r = optimal_reflectivity(SEC5)
    assert r == pytest.approx(float(oracle.optimal_reflectivity()), rel=1e-12)
    assert r == pytest.approx(0.932, abs=1e-3)  # quoted: 93.2%


def test_optimal_reflectivity_lossless_limit():
    m = MemoryParams(d=1e-15, gamma_e=1.0, delta_s=1e6, delta_hf=1.0,
                     J=1.0, gamma_s=0.0, gamma_k=0.0)
    assert optimal_reflectivity(m) == pytest.approx(1.0, abs=1e-7)


def test_cavity_geometry_oracle_values():
    r = optimal_reflectivity(SEC5)
    geom = cavity_geometry(SEC5, r)
    kc, bw, length, tau = oracle.cavity_geometry(oracle.optimal_reflectivity())
    assert geom.kappa_c == pytest.approx(float(kc), rel=1e-12)
    assert geom.bandwidth == pytest.approx(float(bw), rel=1e-12)
    assert geom.roundtrip_length == pytest.approx(float(length), rel=1e-12)
    assert geom.roundtrip_time == pytest.approx(float(tau), rel=1e-12)
    # quoted values: 0.27 GHz, ~80 MHz, 160 mm
    assert geom.kappa_c == pytest.approx(0.27e9, abs=5e6)
    assert geom.bandwidth == pytest.approx(80e6, abs=2e6)
    assert geom.roundtrip_length == pytest.approx(0.160, abs=5e-3)


def test_cavity_geometry_closed_cavity_limit():
    geom = cavity_geometry(SEC5, 1 - 1e-12)
    assert geom.kappa_c == pytest.approx(0.0, abs=1e-1)


def test_readout_chain_oracle_values():
    z1 = float(oracle.zeta1_for_target(oracle.optimal_reflectivity()))
    c = sec5_cavity(zeta1=z1)
    g2 = readout_g2(SEC5, c)
    assert g2 == pytest.approx(float(oracle.readout_g2(
        oracle.optimal_reflectivity(), oracle.zeta1_for_target(
            oracle.optimal_reflectivity()))), rel=1e-12)
    assert readout_fidelity(g2) == pytest.approx(0.986, rel=1e-9)


def test_readout_g2_linear_in_zeta1():
    g2a = readout_g2(SEC5, sec5_cavity(zeta1=3.0))
    g2b = readout_g2(SEC5, sec5_cavity(zeta1=6.0))
    assert g2b == pytest.approx(2 * g2a, rel=1e-12)


def test_readout_fidelity_limits():
    assert readout_fidelity(0.0) == 1.0
    assert readout_fidelity(2.0) == 0.5
    with pytest.raises(ParameterError):
        readout_fidelity(-0.1)


def test_calibrate_zeta1_roundtrip_and_bounds():
    c0 = sec5_cavity()
    z1 = calibrate_zeta1(SEC5, c0, 0.986)
    c = sec5_cavity(zeta1=z1)
    assert readout_fidelity(readout_g2(SEC5, c)) == pytest.approx(0.986,
                                                                  rel=1e-9)
    with pytest.raises(ParameterError):
        calibrate_zeta1(SEC5, c0, 1.0)
    with pytest.raises(ParameterError):
        calibrate_zeta1(SEC5, c0, 0.0)


def test_calibrate_zeta1_algebraic_identity():
    # x = 1 (mu_s = 1/3) and |Gamma_s| ~ |Gamma_a| gives zeta1 = 1 at F = 1/2
    m = MemoryParams(d=1e-10, gamma_e=1.0, delta_s=1e6, delta_hf=1e-6,
                     J=1.0, gamma_s=0.0, gamma_k=0.0)
    c = CavityParams(r=1.0 / 3.0, roundtrip_length=0.1)
    assert calibrate_zeta1(m, c, 0.5) == pytest.approx(1.0, rel=1e-9)


def test_validity_report_flags():
    c = sec5_cavity(zeta1=9.8)
    notes = validity_report(SEC5, c)
    assert any("zeta1" in n for n in notes)
    m = MemoryParams(d=1.0, gamma_e=1.0, delta_s=5.0, delta_hf=1.0, J=1.0,
                     gamma_s=0.5, gamma_k=0.0)
    notes = validity_report(m, CavityParams(r=0.9, roundtrip_length=0.1,
                                            zeta1=100.0))
    assert any("far-detuned" in n for n in notes)
    assert any("strong coupling" in n for n in notes)


def test_memory_params_invariants():
    with pytest.raises(ParameterError):
        MemoryParams(d=-1, gamma_e=1.0, delta_s=10.0, delta_hf=1.0, J=1.0,
                     gamma_s=0.0, gamma_k=0.0)
    with pytest.raises(ParameterError, match="gamma_k"):
        MemoryParams(d=1, gamma_e=1.0, delta_s=10.0, delta_hf=1.0, J=1.0,
                     gamma_s=1.0, gamma_k=2.0)
    with pytest.raises(ParameterError):
        CavityParams(r=1.0, roundtrip_length=0.1)
