"""Truncated-basis solver: operators, known states, cross-solver checks."""

import warnings

import numpy as np
import pytest

from memlat import gaussian as G
from memlat.errors import (
    CapExceeded,
    DegenerateKernel,
    InvalidInput,
    NumericalError,
    StepTooLarge,
    TruncationLeak,
)
from memlat.fock import (
    DensityMatrix,
    FockConfig,
    build_liouvillian,
    evolve_fock,
    level_populations,
    mode_operators,
    moments,
    steady_state_fock,
    truncation_convergence,
)
from memlat.params import model_from_dict


def mk(**over):
    d = {
        "omega_at": 1.0, "omega_m": 1.0, "g": 0.2, "reflectivity": 0.31,
        "gamma_cool": 0.18, "gamma_m": 0.06, "gamma_diff_at": 0.03,
        "gamma_diff_m": 0.012, "nbar": 0.5,
    }
    d.update(over)
    return model_from_dict(d)


def closed(**over):
    return mk(gamma_cool=0.0, gamma_m=0.0, gamma_diff_at=0.0,
              gamma_diff_m=0.0, nbar=0.0, **over)


def test_config_guards():
    with pytest.raises(InvalidInput):
        FockConfig(1, 8).validate()
    with pytest.raises(CapExceeded):
        build_liouvillian(mk(), FockConfig(70, 70))
    FockConfig(64, 64).validate()  # exactly at the cap


def test_mode_operators():
    ops = mode_operators(FockConfig(3, 4))
    num_at = (ops["a_at"].conj().T @ ops["a_at"]).diagonal().real
    num_m = (ops["a_m"].conj().T @ ops["a_m"]).diagonal().real
    assert np.allclose(num_at, np.repeat(np.arange(3), 4))
    assert np.allclose(num_m, np.tile(np.arange(4), 3))
    a = ops["a_at"].toarray()
    assert a[0 * 4, 1 * 4] == pytest.approx(1.0)
    assert a[1 * 4, 2 * 4] == pytest.approx(np.sqrt(2))
    # canonical commutator away from the atom truncation edge
    comm = (ops["x_at"] @ ops["p_at"] - ops["p_at"] @ ops["x_at"]).toarray()
    interior = np.arange(2 * 4)  # atom levels 0, 1
    sub = comm[np.ix_(interior, interior)]
    assert np.allclose(sub, 1j * np.eye(8), atol=1e-12)


def test_closed_spectrum_is_imaginary():
    """No dissipation: eigenvalues are level-difference frequencies."""
    m = closed(omega_at=1.3, omega_m=0.7, g=0.0)
    liou = build_liouvillian(m, FockConfig(3, 3))
    lam = np.linalg.eigvals(liou.matrix.toarray())
    assert np.abs(lam.real).max() < 1e-12
    energies = np.add.outer(1.3 * np.arange(3), 0.7 * np.arange(3)).ravel()
    expected = np.sort(np.subtract.outer(energies, energies).ravel())
    assert np.allclose(np.sort(lam.imag), expected, atol=1e-10)


def test_thermal_membrane_and_cooled_atom():
    """Decoupled steady state: Boltzmann membrane, ground-state atom."""
    m = mk(g=0.0, gamma_diff_at=0.0, gamma_diff_m=0.0,
           gamma_cool=0.3, gamma_m=0.4, nbar=0.5)
    dm = steady_state_fock(build_liouvillian(m, FockConfig(3, 18)))
    pop_at, pop_m = level_populations(dm)
    assert pop_at[0] > 1 - 1e-8
    assert (pop_m * np.arange(18)).sum() == pytest.approx(0.5, abs=1e-6)
    ratio = m.nbar / (m.nbar + 1)
    assert np.allclose(pop_m[1:8] / pop_m[:7], ratio, rtol=1e-6)


def test_degenerate_kernel_paths():
    # closed system, dense path with singular-spectrum gate
    with pytest.raises(DegenerateKernel):
        steady_state_fock(build_liouvillian(closed(), FockConfig(3, 8)))
    # cooling only: any membrane state is stationary
    lonely = mk(g=0.0, gamma_m=0.0, gamma_diff_at=0.0, gamma_diff_m=0.0,
                gamma_cool=0.3, nbar=0.0)
    with pytest.raises(DegenerateKernel):
        steady_state_fock(build_liouvillian(lonely, FockConfig(2, 20)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        with pytest.raises((DegenerateKernel, NumericalError)):
            steady_state_fock(build_liouvillian(lonely, FockConfig(5, 15)))


def test_truncation_leak_raises():
    m = mk(g=0.0, gamma_diff_at=0.0, gamma_diff_m=0.0,
           gamma_cool=0.2, gamma_m=0.5, nbar=2.0)
    with pytest.raises(TruncationLeak):
        steady_state_fock(build_liouvillian(m, FockConfig(3, 6)))


def test_steady_state_matches_gaussian_iterative():
    """Coupled instance through the preconditioned large-dim path."""
    m = mk(g=0.12, reflectivity=0.5, gamma_cool=0.2, gamma_m=0.1,
           gamma_diff_at=0.02, gamma_diff_m=0.01, nbar=0.3)
    dm = steady_state_fock(build_liouvillian(m, FockConfig(10, 12)))
    st = moments(dm)
    gs = G.steady_state(G.drift_diffusion(m))
    floor = np.maximum(np.abs(gs.cov), 1e-6 * np.abs(gs.cov).max())
    assert (np.abs(st.cov - gs.cov) / floor).max() < 1e-4
    assert G.occupation(st, "atom") == pytest.approx(0.1533044, rel=1e-4)
    assert G.occupation(st, "membrane") == pytest.approx(0.2497767, rel=1e-4)


def test_truncation_convergence_report():
    m = mk(g=0.12, reflectivity=0.5, gamma_cool=0.2, gamma_m=0.1,
           gamma_diff_at=0.02, gamma_diff_m=0.01, nbar=0.3)
    rep = truncation_convergence(m, FockConfig(10, 12))
    assert rep.converged
    assert rep.delta < 1e-5
    assert rep.check.n_at == 15 and rep.check.n_m == 18
    assert rep.occ[1] == pytest.approx(0.2497767, rel=1e-4)


def test_moments_known_states():
    vac = np.zeros((6, 6), complex)
    vac[0, 0] = 1.0
    st = moments(DensityMatrix(rho=vac, n_at=2, n_m=3))
    assert np.allclose(st.cov, 0.5 * np.eye(4), atol=1e-12)
    assert np.allclose(st.mean, 0.0, atol=1e-12)

    one = np.zeros((12, 12), complex)
    one[1, 1] = 1.0  # |0>_at |1>_m
    st = moments(DensityMatrix(rho=one, n_at=3, n_m=4))
    assert np.allclose(st.cov[2:, 2:], 1.5 * np.eye(2), atol=1e-12)
    assert np.allclose(st.cov[:2, :2], 0.5 * np.eye(2), atol=1e-12)

    nb = 0.5
    pops = (nb / (1 + nb)) ** np.arange(25)
    pops /= pops.sum()
    th = np.zeros((50, 50), complex)
    th[np.arange(25), np.arange(25)] = pops  # atom level 0
    st = moments(DensityMatrix(rho=th, n_at=2, n_m=25))
    assert np.allclose(st.cov[2:, 2:], (nb + 0.5) * np.eye(2), atol=1e-10)


def test_evolve_closed_preserves_purity():
    liou = build_liouvillian(closed(g=0.2), FockConfig(6, 6))
    rho0 = np.zeros((36, 36), complex)
    rho0[0, 0] = 1.0
    out = evolve_fock(liou, DensityMatrix(rho=rho0, n_at=6, n_m=6), 1.0, 0.008)
    purity = np.trace(out.rho @ out.rho).real
    assert purity == pytest.approx(1.0, abs=1e-8)
    assert np.trace(out.rho).real == pytest.approx(1.0, abs=1e-10)


def test_evolve_guards_and_t0():
    liou = build_liouvillian(mk(), FockConfig(4, 4))
    rho0 = np.zeros((16, 16), complex)
    rho0[0, 0] = 1.0
    dm0 = DensityMatrix(rho=rho0, n_at=4, n_m=4)
    same = evolve_fock(liou, dm0, 0.0, 0.01)
    assert np.array_equal(same.rho, rho0)
    with pytest.raises(StepTooLarge):
        evolve_fock(liou, dm0, 1.0, 0.5)
    with pytest.raises(InvalidInput):
        evolve_fock(liou, DensityMatrix(np.eye(9, dtype=complex) / 9, 3, 3), 1.0, 0.01)


def test_evolve_occupations_match_gaussian():
    """Occupation traces against the moment propagator, thermal start."""
    m = mk(g=0.18, gamma_cool=0.25, gamma_m=0.08, gamma_diff_at=0.01,
           gamma_diff_m=0.01, nbar=0.2)
    liou = build_liouvillian(m, FockConfig(6, 10))
    nb0 = 0.4
    pops = (nb0 / (1 + nb0)) ** np.arange(10)
    pops /= pops.sum()
    rho0 = np.zeros((60, 60), complex)
    rho0[np.arange(10), np.arange(10)] = pops
    cur = DensityMatrix(rho=rho0, n_at=6, n_m=10)
    start = G.thermal_state(0.0, nb0)
    dd = G.drift_diffusion(m)
    t_now = 0.0
    for t_target in (1.5, 3.0, 6.0):
        cur = evolve_fock(liou, cur, t_target - t_now, 0.005)
        ref = G.evolve(dd, start, t_target, 0.005)
        st = moments(cur)
        for mode in ("atom", "membrane"):
            assert abs(G.occupation(st, mode) - G.occupation(ref, mode)) < 1e-3
        t_now = t_target


def test_cascade_scale_hook():
    m = mk()
    cfg = FockConfig(4, 4)
    base = build_liouvillian(m, cfg).matrix
    bent = build_liouvillian(m, cfg, cascade_scale=1.01).matrix
    diff = (bent - base).toarray()
    assert np.abs(diff).max() > 1e-5
    again = build_liouvillian(m, cfg, cascade_scale=1.0).matrix
    assert (again - base).nnz == 0
