import numpy as np
import pytest

import quantum_ops as qo
from common import ConfigError


def test_fock_space_validation():
    assert qo.FockSpace(4).doubled().n_max == 8
    with pytest.raises(ConfigError):
        qo.FockSpace(1)


def test_ladder_operators():
    f = qo.FockSpace(5)
    a = qo.annihilation(f)
    ad = qo.creation(f)
    assert a[0, 1] == pytest.approx(1.0)
    assert a[3, 4] == pytest.approx(2.0)
    assert np.allclose(ad, a.conj().T)
    assert np.allclose(ad @ a, qo.number(f))
    # [a, a^dagger] = 1 except the truncation corner
    comm = a @ ad - ad @ a
    assert np.allclose(np.diag(comm)[:-1], 1.0)
    assert np.diag(comm)[-1] == pytest.approx(-4.0)


def test_quadrature_is_hermitian_and_tridiagonal():
    x = qo.quadrature(qo.FockSpace(6))
    assert np.allclose(x, x.conj().T)
    assert np.count_nonzero(np.triu(x, 2)) == 0


def test_pauli_algebra():
    for family in qo.FAMILIES:
        x, y, z = (qo.pauli(family, axis) for axis in qo.AXES)
        assert np.allclose(x @ y, 1j * z)
        assert np.allclose(y @ z, 1j * x)
        assert np.allclose(z @ x, 1j * y)
        for m in (x, y, z):
            assert np.allclose(m @ m, np.eye(2))


def test_cross_family_identities():
    assert np.array_equal(qo.pauli("rho", "z"), qo.pauli("sigma", "x"))
    assert np.array_equal(qo.pauli("rho", "x"), -qo.pauli("sigma", "z"))
    assert np.array_equal(qo.pauli("rho", "y"), qo.pauli("sigma", "y"))
    assert np.array_equal(qo.pauli(qo.OperatorLabel("rho", "z")), qo.pauli("rho", "z"))


def test_pauli_label_validation():
    with pytest.raises(ConfigError):
        qo.OperatorLabel("tau", "x")
    with pytest.raises(ConfigError):
        qo.pauli("sigma", "w")
    with pytest.raises(ConfigError):
        qo.pauli("sigma")


def test_localized_basis_rho_family_is_site_diagonal():
    # rho_z = |R><R| - |L><L|, rho_x = |R><L| + |L><R|
    assert np.allclose(qo.to_localized_basis(qo.pauli("rho", "z")), np.diag([1, -1]))
    assert np.allclose(qo.to_localized_basis(qo.pauli("rho", "x")), [[0, 1], [1, 0]])
    op = np.array([[0.3, 1 - 2j], [1 + 2j, -0.7]])
    assert np.allclose(qo.from_localized_basis(qo.to_localized_basis(op)), op)


def test_embed_and_field_operator():
    f = qo.FockSpace(3)
    e = qo.embed(qo.pauli("sigma", "z"), qo.number(f))
    assert e.shape == (6, 6)
    assert np.allclose(np.diag(e).real, [0, 1, 2, 0, -1, -2])
    with pytest.raises(ConfigError):
        qo.embed(np.eye(3), qo.number(f))

    dims = [2, 3]
    n1 = qo.field_operator(qo.number(f), 1, dims)
    assert np.allclose(np.diag(n1).real, [0, 1, 2, 0, 1, 2])
    n0 = qo.field_operator(qo.number(qo.FockSpace(2)), 0, dims)
    assert np.allclose(np.diag(n0).real, [0, 0, 0, 1, 1, 1])
    with pytest.raises(ConfigError):
        qo.field_operator(qo.number(f), 0, dims)
    with pytest.raises(ConfigError):
        qo.field_operator(qo.number(f), 2, dims)
