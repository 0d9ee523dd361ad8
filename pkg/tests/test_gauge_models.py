import cmath
import math

import numpy as np
import pytest

import gauge_models as gm
from common import ConfigError
from multimode import ModeProfile
from numal import eigvalsh_lowest, is_unitary, max_abs_diff, spectrum_distance
from quantum_ops import FockSpace, embed, identity, number, pauli
from schrodinger1d import TlsParams


def make_cfg(eta=0.5, n_max=16, delta=1.0, eps=0.0, omega=1.0, gauge="coulomb_gi"):
    tls = TlsParams.from_gap(delta=delta, eps=eps, a=1.0, q=1.0)
    mode = gm.ModeSpec(omega_ph=omega, A0=0.0, fock=FockSpace(n_max))
    return gm.ModelConfig(tls=tls, modes=(mode,), gauge=gauge).with_eta(eta)


def bare_plus_field(cfg, bare):
    n = cfg.mode.fock.n_max
    field = cfg.mode.omega_ph * number(cfg.mode.fock)
    return embed(bare, identity(n)) + embed(identity(2), field)


def test_eta_from_amplitude():
    cfg = make_cfg(eta=0.3)
    assert cfg.eta == pytest.approx(0.3)
    assert cfg.mode.A0 == pytest.approx(0.6)
    assert cfg.dimension == 32


def test_config_validation():
    tls = TlsParams.from_gap(delta=1.0)
    mode = gm.ModeSpec(omega_ph=1.0, A0=0.1, fock=FockSpace(4))
    with pytest.raises(ConfigError):
        gm.ModelConfig(tls=tls, modes=(mode,), gauge="velocity")
    with pytest.raises(ConfigError):
        gm.ModelConfig(tls=tls, modes=())
    with pytest.raises(ConfigError):
        gm.ModeSpec(omega_ph=0.0, A0=0.1, fock=FockSpace(4))
    with pytest.raises(ConfigError):
        gm.ModeSpec(omega_ph=1.0, A0=float("nan"), fock=FockSpace(4))


def test_decoupled_symmetric_spectrum():
    cfg = make_cfg(eta=0.0, n_max=8)
    h = gm.h_coulomb_gi_symmetric(cfg)
    expected = sorted([s * 0.5 + n for s in (-1, 1) for n in range(8)])
    assert np.allclose(np.linalg.eigvalsh(h), expected, atol=1e-12)
    assert np.allclose(h, bare_plus_field(cfg, 0.5 * pauli("sigma", "z")), atol=1e-12)


@pytest.mark.parametrize("n_max", [8, 32, 128])
def test_symmetric_construction_identity(n_max):
    cfg = make_cfg(eta=0.7, n_max=n_max)
    h = gm.h_coulomb_gi_symmetric(cfg)
    u = gm.gauge_unitary(cfg, "sigma_x")

    assert max_abs_diff(h, h.conj().T) <= 1e-12
    expected = u @ embed(0.5 * cfg.tls.delta * pauli("sigma", "z"), identity(n_max)) @ u.conj().T
    expected = expected + embed(identity(2), number(cfg.mode.fock))
    assert max_abs_diff(h, expected) <= 1e-10

    conjugated = u.conj().T @ h @ u
    assert spectrum_distance(np.linalg.eigvalsh(h), np.linalg.eigvalsh(conjugated)) <= 1e-10


def test_symmetric_builder_routes_nonzero_eps(capsys):
    cfg = make_cfg(eta=0.4, eps=0.3, n_max=8)
    assert np.allclose(gm.h_coulomb_gi_symmetric(cfg), gm.h_coulomb_gi_asymmetric(cfg))
    assert "asymmetric" in capsys.readouterr().out


def test_asymmetric_reduces_to_symmetric_at_zero_eps():
    cfg = make_cfg(eta=0.6, eps=0.0, n_max=20)
    sym = np.linalg.eigvalsh(gm.h_coulomb_gi_symmetric(cfg))
    asym = np.linalg.eigvalsh(gm.h_coulomb_gi_asymmetric(cfg))
    assert spectrum_distance(sym, asym) <= 1e-10


@pytest.mark.parametrize("eps", [0.0, 0.5, 2.0])
def test_asymmetric_bare_tls_levels(eps):
    cfg = make_cfg(eta=0.0, eps=eps, n_max=4)
    levels = eigvalsh_lowest(gm.h_coulomb_gi_asymmetric(cfg), 8)
    omega_q = math.hypot(1.0, eps)
    tls_levels = sorted([-omega_q / 2, omega_q / 2])
    assert levels[0] == pytest.approx(tls_levels[0], abs=1e-10)
    assert np.min(np.abs(levels - omega_q / 2)) < 1e-10


def test_asymmetric_construction_identity():
    cfg = make_cfg(eta=0.45, eps=0.8, n_max=24)
    h = gm.h_coulomb_gi_asymmetric(cfg)
    u = gm.gauge_unitary(cfg, "rho_z")
    bare = 0.5 * 0.8 * pauli("rho", "z") - 0.5 * pauli("rho", "x")
    expected = u @ embed(bare, identity(24)) @ u.conj().T
    expected = expected + embed(identity(2), number(FockSpace(24)))
    assert max_abs_diff(h, expected) <= 1e-10


def test_gauge_unitary_properties():
    assert np.allclose(gm.gauge_unitary(make_cfg(eta=0.0, n_max=6)), np.eye(12))
    cfg = make_cfg(eta=1.3, n_max=30)
    for family in gm.UNITARY_FAMILIES:
        assert is_unitary(gm.gauge_unitary(cfg, family), tol=1e-12)
    with pytest.raises(ConfigError):
        gm.gauge_unitary(cfg, "sigma_z")


def test_dipole_hamiltonian_structure():
    cfg = make_cfg(eta=0.0, eps=0.5, n_max=6, gauge="dipole")
    omega_q = math.hypot(1.0, 0.5)
    expected = sorted([s * omega_q / 2 + n for s in (-1, 1) for n in range(6)])
    assert np.allclose(np.linalg.eigvalsh(gm.h_dipole(cfg)), expected, atol=1e-12)

    h = gm.h_dipole(make_cfg(eta=0.8, eps=0.2, n_max=12, gauge="dipole"))
    assert max_abs_diff(h, h.conj().T) <= 1e-12


@pytest.mark.parametrize("eta", [0.5, 1.0, 2.0])
def test_dipole_displaced_oscillator(eta):
    tls = TlsParams.from_gap(delta=0.0)
    mode = gm.ModeSpec(omega_ph=1.0, A0=0.0, fock=FockSpace(96))
    cfg = gm.ModelConfig(tls=tls, modes=(mode,), gauge="dipole").with_eta(eta)
    levels = eigvalsh_lowest(gm.h_dipole(cfg), 10)
    expected = np.repeat(np.arange(5, dtype=float), 2)
    assert np.allclose(levels, expected, atol=1e-8)


def test_linearized_baseline():
    cfg0 = make_cfg(eta=0.0, n_max=10)
    assert np.allclose(gm.h_coulomb_linearized(cfg0), gm.h_coulomb_gi(cfg0), atol=1e-12)

    # first-order agreement: deviation scales as eta^2
    deviations = []
    for eta in (0.01, 0.02, 0.04):
        cfg = make_cfg(eta=eta, n_max=16)
        gi = eigvalsh_lowest(gm.h_coulomb_gi(cfg), 4)
        lin = eigvalsh_lowest(gm.h_coulomb_linearized(cfg), 4)
        deviations.append(spectrum_distance(gi, lin))
    assert max(d / eta**2 for d, eta in zip(deviations, (0.01, 0.02, 0.04))) < 20.0
    assert 8.0 < deviations[2] / deviations[0] < 32.0


def test_build_hamiltonian_dispatch():
    cfg = make_cfg(eta=0.2, n_max=6)
    assert np.array_equal(gm.build_hamiltonian(cfg), gm.h_coulomb_gi(cfg))
    assert np.array_equal(gm.build_hamiltonian(cfg.with_gauge("dipole")), gm.h_dipole(cfg))
    linear = cfg.with_gauge("coulomb_linearized")
    assert np.array_equal(gm.build_hamiltonian(linear), gm.h_coulomb_linearized(linear))


def test_single_mode_builders_reject_two_modes():
    cfg = make_cfg(eta=0.2, n_max=4)
    two = gm.ModelConfig(tls=cfg.tls, modes=cfg.modes * 2)
    with pytest.raises(ConfigError):
        gm.h_coulomb_gi(two)
    with pytest.raises(ConfigError):
        gm.build_hamiltonian(two.with_gauge("coulomb_linearized"))


def test_oversampled_functions_stay_close():
    cfg = make_cfg(eta=0.3, n_max=24)
    plain = eigvalsh_lowest(gm.h_coulomb_gi(cfg), 4)
    over = eigvalsh_lowest(gm.h_coulomb_gi(gm.ModelConfig(cfg.tls, cfg.modes, oversample=2)), 4)
    assert spectrum_distance(plain, over) < 1e-6


def test_mode_coupling_from_profile():
    tls = TlsParams.from_gap(delta=1.0, a=2.0, q=1.0)
    profile = ModeProfile(kind="cosine", k=1.0)
    mode = gm.ModeSpec(omega_ph=1.0, A0=0.5, fock=FockSpace(4), profile=profile)
    assert mode.coupling(tls, dipole_approx=True) == pytest.approx(0.5)
    assert mode.coupling(tls, dipole_approx=False) == pytest.approx(0.5 * math.sin(1.0))


def test_parallel_transporter_constant_and_zero():
    assert gm.parallel_transporter_classical(ModeProfile("constant", 0.0), -0.5, 0.5, 1.0) == 1
    u = gm.parallel_transporter_classical(ModeProfile("constant", 0.3), -1.0, 1.0, 2.0)
    assert u == pytest.approx(cmath.exp(1j * 2.0 * 2.0 * 0.3), abs=1e-14)


def test_parallel_transporter_gauge_covariance():
    def field(x):
        return 0.4 * math.cos(1.3 * x)

    def theta(x):
        return 0.2 * x**3 - 0.5 * x

    def shifted(x):
        return field(x) + 0.6 * x**2 - 0.5

    q, x_l, x_r = 1.5, -0.7, 0.9
    u = gm.parallel_transporter_classical(field, x_l, x_r, q)
    u_shifted = gm.parallel_transporter_classical(shifted, x_l, x_r, q)
    expected = cmath.exp(1j * q * theta(x_r)) * u * cmath.exp(-1j * q * theta(x_l))
    assert abs(u) == pytest.approx(1.0, abs=1e-14)
    assert abs(u_shifted - expected) < 1e-10
    g = gm.TwoSiteGauge(theta_L=theta(x_l), theta_R=theta(x_r))
    assert abs(g.transform_transporter(u, q) - expected) < 1e-14


def test_two_site_gauge_factorization_and_invariance():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        theta_l, theta_r = rng.uniform(-np.pi, np.pi, size=2)
        q = rng.uniform(0.2, 2.0)
        a_const = rng.uniform(-1.0, 1.0)
        g = gm.TwoSiteGauge(theta_L=theta_l, theta_R=theta_r)
        assert max_abs_diff(g.phase_matrix(q), g.factored_matrix(q)) <= 1e-12

        psi = rng.normal(size=2) + 1j * rng.normal(size=2)
        phi = rng.normal(size=2) + 1j * rng.normal(size=2)
        u = gm.parallel_transporter_classical(ModeProfile("constant", a_const), -0.5, 0.5, q)
        before = np.vdot(psi, gm.hopping_operator(u) @ phi)
        after = np.vdot(
            gm.apply_two_site_gauge(psi, g, q),
            gm.hopping_operator(g.transform_transporter(u, q)) @ gm.apply_two_site_gauge(phi, g, q),
        )
        assert abs(after - before) <= 1e-10


def test_uniform_two_site_gauge_is_global_phase():
    g = gm.TwoSiteGauge(theta_L=0.7, theta_R=0.7)
    state = np.array([0.6, 0.8j, 0.0, 0.0])
    assert np.allclose(gm.apply_two_site_gauge(state, g, 2.0), cmath.exp(1.4j) * state)
    with pytest.raises(ConfigError):
        gm.apply_two_site_gauge(np.ones(3), g, 1.0)


def test_transported_tls_matches_minimal_coupling_rotation():
    tls = TlsParams.from_gap(delta=1.0, eps=0.4, a=1.0, q=1.0)
    a_const = 0.35
    u = gm.parallel_transporter_classical(ModeProfile("constant", a_const), tls.x_L, tls.x_R, tls.q)
    angle = tls.q * tls.a * a_const
    rot = math.cos(angle / 2) * np.eye(2) + 1j * math.sin(angle / 2) * pauli("rho", "z")
    bare = 0.5 * tls.eps * pauli("rho", "z") - 0.5 * tls.delta * pauli("rho", "x")
    assert max_abs_diff(gm.h_tls_transported(tls, u), rot @ bare @ rot.conj().T) <= 1e-12
    assert np.allclose(gm.h_tls_transported(tls, 1.0), bare)
