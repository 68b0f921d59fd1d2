"""Derived rates: frozen reference numbers, identities, error paths."""

import numpy as np
import pytest

from memlat.errors import (
    DetuningSmall,
    NonPositiveInput,
    ReflectivityZero,
    TrapFrequencyImaginary,
)
from memlat.params import (
    ModelParams,
    derive_model,
    derive_qsse_couplings,
    is_physical_config,
    model_from_dict,
    model_to_dict,
    physical_from_dict,
    preset_case_study,
    resonant,
)

from dataclasses import replace


def test_case_study_rates():
    """Natural-trap reference setup, values frozen from an independent run."""
    m = derive_model(preset_case_study())
    assert m.V0 == pytest.approx(3.427856e-26, rel=1e-6)
    assert m.omega_at == pytest.approx(5.550347e6, rel=1e-6)
    assert m.omega_at / m.omega_m == pytest.approx(1.027169, rel=1e-6)
    assert m.g == pytest.approx(4.083128e4, rel=1e-6)
    assert m.gamma_m == pytest.approx(0.5403539, rel=1e-6)
    assert m.nbar == pytest.approx(4.845725e4, rel=1e-6)
    assert m.gamma_m * m.nbar == pytest.approx(2.618407e4, rel=1e-6)
    assert m.gamma_diff_at == pytest.approx(1.684530e4, rel=1e-6)
    assert m.gamma_diff_m == pytest.approx(53.936383, rel=1e-6)
    assert m.gamma_cool == 2e4
    assert m.transmittivity == pytest.approx(0.69)


def test_resonant_case_study_rates():
    """Trap pinned to the membrane frequency; atom-side rates shift."""
    m = derive_model(resonant(preset_case_study()))
    assert m.omega_at == m.omega_m
    assert m.g == pytest.approx(3.9751287084e4, rel=1e-9)
    assert m.nbar == pytest.approx(4.8457253775e4, rel=1e-9)
    assert m.gamma_diff_at == pytest.approx(1.7302968927e4, rel=1e-9)
    assert m.gamma_diff_m == pytest.approx(5.3936382639e1, rel=1e-9)


def test_case_study_couplings():
    phys = preset_case_study()
    m = derive_model(phys)
    g_mR, g_mL, g_atR, g_atL, alpha_sq = derive_qsse_couplings(phys, m)
    assert alpha_sq == pytest.approx(1.727547e17, rel=1e-6)
    assert g_mR == pytest.approx(16.720279, rel=1e-6)
    assert g_mL == pytest.approx(37.216104, rel=1e-6)
    assert g_atR == pytest.approx(2.460638e6, rel=1e-6)
    assert g_atL == pytest.approx(5.476904e6, rel=1e-6)
    assert m.g_mR == g_mR and m.g_atL == g_atL


def test_coupling_identities_case_study():
    phys = preset_case_study()
    m = derive_model(phys)
    g_mR, g_mL, g_atR, g_atL, _ = derive_qsse_couplings(phys, m)
    t_over_r = m.transmittivity / m.reflectivity
    assert g_mL / g_mR == pytest.approx(t_over_r, rel=1e-12)
    assert g_atL / g_atR == pytest.approx(t_over_r, rel=1e-12)
    assert g_mR + g_mL == pytest.approx(m.gamma_diff_m, rel=1e-9)
    # Off resonance the coupling identity misses by sqrt(omega_at/omega_m) - 1.
    ident = 2 * (np.sqrt(g_mR * g_atR) + np.sqrt(g_mL * g_atL))
    assert ident / m.g - 1 == pytest.approx(
        np.sqrt(m.omega_at / m.omega_m) - 1, rel=1e-9)


def test_resonant_coupling_identity():
    phys = resonant(preset_case_study())
    m = derive_model(phys)
    g_mR, g_mL, g_atR, g_atL, _ = derive_qsse_couplings(phys, m)
    ident = 2 * (np.sqrt(g_mR * g_atR) + np.sqrt(g_mL * g_atL))
    assert ident == pytest.approx(m.g, rel=1e-9)


def test_identity_suite_random():
    """Coupling identities across a broad seeded parameter scan."""
    rng = np.random.default_rng(7)
    base = preset_case_study()

    def logu(lo, hi):
        return np.exp(rng.uniform(np.log(lo), np.log(hi)))

    for _ in range(300):
        phys = replace(
            base,
            laser_power=logu(1e-3, 30e-3),
            beam_waist=rng.uniform(120e-6, 500e-6),
            detuning=2 * np.pi * logu(0.3e9, 5e9),
            atom_number=logu(1e7, 1e9),
            membrane_freq=2 * np.pi * logu(0.2e6, 3e6),
            membrane_mass=logu(1e-13, 3e-12),
            membrane_Q=logu(1e5, 1e8),
            reflectivity=rng.uniform(0.02, 0.98),
            temperature=logu(0.5, 300.0),
        )
        phys = resonant(phys)
        m = derive_model(phys)
        g_mR, g_mL, g_atR, g_atL, _ = derive_qsse_couplings(phys, m)
        for rate in (m.g, m.gamma_m, m.gamma_diff_at, m.gamma_diff_m,
                     m.nbar, g_mR, g_mL, g_atR, g_atL):
            assert rate > 0
        t_over_r = m.transmittivity / m.reflectivity
        assert g_mL / g_mR == pytest.approx(t_over_r, rel=1e-12)
        assert g_atL / g_atR == pytest.approx(t_over_r, rel=1e-12)
        assert g_mR + g_mL == pytest.approx(m.gamma_diff_m, rel=1e-9)
        ident = 2 * (np.sqrt(g_mR * g_atR) + np.sqrt(g_mL * g_atL))
        assert ident == pytest.approx(m.g, rel=1e-9)


def test_atom_number_scaling():
    """g tracks sqrt(N) at fixed trap frequency."""
    phys = resonant(preset_case_study())
    m1 = derive_model(phys)
    m4 = derive_model(replace(phys, atom_number=4 * phys.atom_number))
    assert m4.g == pytest.approx(2 * m1.g, rel=1e-12)
    assert m4.gamma_diff_at == pytest.approx(m1.gamma_diff_at, rel=1e-12)
    m_qs1 = derive_qsse_couplings(phys, m1)
    m_qs4 = derive_qsse_couplings(
        replace(phys, atom_number=4 * phys.atom_number), m4)
    assert m_qs4[2] == pytest.approx(4 * m_qs1[2], rel=1e-12)


def test_power_monotonicity():
    """Deeper lattice with power: V0, trap frequency, g, both diffusions."""
    phys = preset_case_study()
    lo = derive_model(phys)
    hi = derive_model(replace(phys, laser_power=2 * phys.laser_power))
    assert hi.V0 > lo.V0
    assert hi.omega_at > lo.omega_at
    assert hi.g > lo.g
    assert hi.gamma_diff_m == pytest.approx(2 * lo.gamma_diff_m, rel=1e-12)
    assert hi.gamma_diff_at > lo.gamma_diff_at


def test_zero_reflectivity_no_trap():
    phys = replace(preset_case_study(), reflectivity=0.0)
    with pytest.raises(TrapFrequencyImaginary):
        derive_model(phys)


def test_zero_reflectivity_couplings_raise():
    phys = resonant(replace(preset_case_study(), reflectivity=0.0))
    m = derive_model(phys)  # override bypasses the trap, V0 = 0 is fine
    assert m.V0 == 0
    assert m.gamma_diff_at == 0
    with pytest.raises(ReflectivityZero):
        derive_qsse_couplings(phys, m)


def test_full_mirror_kills_left_couplings():
    phys = resonant(replace(preset_case_study(), reflectivity=1.0))
    m = derive_model(phys)
    g_mR, g_mL, g_atR, g_atL, _ = derive_qsse_couplings(phys, m)
    assert g_mL == 0
    assert g_atL == 0
    assert g_mR == pytest.approx(m.gamma_diff_m, rel=1e-9)
    assert 2 * np.sqrt(g_mR * g_atR) == pytest.approx(m.g, rel=1e-9)


def test_nonpositive_inputs():
    base = preset_case_study()
    bad = [
        replace(base, laser_power=0.0),
        replace(base, beam_waist=-1e-6),
        replace(base, detuning=0.0),
        replace(base, atom_number=0.0),
        replace(base, membrane_Q=-1.0),
        replace(base, reflectivity=1.2),
        replace(base, temperature=0.0),
        replace(base, cool_rate=-1.0),
        replace(base, trap_freq_override=0.0),
    ]
    for phys in bad:
        with pytest.raises(NonPositiveInput):
            derive_model(phys)


def test_small_detuning_warns():
    phys = replace(preset_case_study(), detuning=5 * preset_case_study().atom_linewidth)
    with pytest.warns(DetuningSmall):
        derive_model(phys)


def test_physical_config_unit_strings():
    d = {
        "laser_wavelength": "780.241e-9 m",
        "laser_power": 7e-3,
        "beam_waist": "230e-6 m",
        "detuning": "6.283185307179586e9 rad/s",
        "atom_mass": 1.44316e-25,
        "atom_linewidth": 3.8139359495e7,
        "atom_number": 3e8,
        "membrane_freq": 5.403539364e6,
        "membrane_mass": "8e-13 kg",
        "membrane_Q": 1e7,
        "reflectivity": 0.31,
        "temperature": "2.0 K",
        "cool_rate": 2e4,
    }
    assert is_physical_config(d)
    phys = physical_from_dict(d)
    assert phys.beam_waist == 230e-6
    assert phys.temperature == 2.0

    with pytest.raises(NonPositiveInput):
        physical_from_dict({**d, "beam_waist": "230 um"})
    with pytest.raises(NonPositiveInput):
        physical_from_dict({**d, "bogus_field": 1.0})
    with pytest.raises(NonPositiveInput):
        physical_from_dict({k: v for k, v in d.items() if k != "laser_power"})


def test_model_config_roundtrip():
    d = {
        "omega_m": 5.4e6,
        "omega_at": 5.4e6,
        "g": 4e4,
        "reflectivity": 0.31,
        "gamma_cool": 2e4,
        "gamma_m": 0.54,
        "gamma_diff_at": 1.6e4,
        "gamma_diff_m": 52.0,
        "nbar": 4.8e4,
    }
    assert not is_physical_config(d)
    m = model_from_dict(d)
    assert isinstance(m, ModelParams)
    assert m.transmittivity == pytest.approx(0.69)
    out = model_to_dict(m)
    assert out["g"] == 4e4
    assert out["g_over_2pi"] == pytest.approx(4e4 / (2 * np.pi))
    assert "g_mR" not in out  # couplings were never derived

    with pytest.raises(NonPositiveInput):
        model_from_dict({k: v for k, v in d.items() if k != "nbar"})
    with pytest.raises(NonPositiveInput):
        model_from_dict({**d, "reflectivity": -0.1})
