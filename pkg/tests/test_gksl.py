import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascadenet.coefficients import CoefficientSet, gaussian_coefficients
from cascadenet.errors import InconsistentCoefficients
from cascadenet.gksl import (assemble_gksl, build_coefficient_generator, coupling_amplitude,
                             kappa_closed_form_mz, mz_transfer, node_operators, omega_matrix,
                             pair_hamiltonian)
from cascadenet.operators import annihilation, embed, hermiticity_defect, partial_trace
from cascadenet.presets import mach_zehnder, three_node
from helpers import random_density, random_hermitian_unit_trace, random_network


def _generators(net):
    coeffs = gaussian_coefficients(net)
    return build_coefficient_generator(net, coeffs), assemble_gksl(net, coeffs)


def test_mz_upstream_dissipator_is_thermal():
    n1 = 0.4
    net = mach_zehnder(n1, 0.1, phi=0.8)
    cg, _ = _generators(net)
    theta = cg.locals[0].theta
    # diagonal entries: absorption rate N and emission rate N + 1
    assert np.allclose(np.sort(np.diag(theta).real), [n1, n1 + 1])
    assert hermiticity_defect(theta) < 1e-12


def test_mz_hamiltonian_closed_form():
    phi = 1.3
    net = mach_zehnder(0.2, 0.6, phi=phi)
    _, gen = _generators(net)
    c, _ = mz_transfer(0.5, 0.5, phi)
    a1 = embed(annihilation(2), net.layout, 0).entries
    a2 = embed(annihilation(2), net.layout, 1).entries
    expected = -0.5j * (c * a2.conj().T @ a1 - np.conj(c) * a1.conj().T @ a2)
    assert np.allclose(gen.hamiltonian.entries, expected, atol=1e-12)


def test_mz_chirality():
    phi = 2.1
    net = mach_zehnder(0.0, 0.0, phi=phi)
    _, gen = _generators(net)
    c, _ = mz_transfer(0.5, 0.5, phi)
    n1 = embed(annihilation(2), net.layout, 0)
    n1 = (n1.dag() @ n1).entries
    r = np.diag(np.exp(1j * np.angle(c) * np.diag(n1)))
    h = r @ gen.hamiltonian.entries @ r.conj().T
    swap = np.eye(4)[[0, 2, 1, 3]]
    assert np.allclose(swap @ h @ swap, -h, atol=1e-12)


@pytest.mark.parametrize("phi", [0.0, 0.7, np.pi])
def test_zero_temperature_kappas(phi):
    _, gen = _generators(mach_zehnder(phi=phi))
    c, _ = mz_transfer(0.5, 0.5, phi)
    assert np.allclose(np.sort(gen.eigenvalues), np.sort([1 + abs(c), 1 - abs(c), 0, 0]), atol=1e-12)


def test_kappa_closed_form_special_cases():
    assert np.allclose(kappa_closed_form_mz(0, 0, 1, 1, 0), (2, 0, 0, 0))
    n, phi = 0.7, 1.9
    c = abs(mz_transfer(0.5, 0.5, phi)[0])
    assert np.allclose(kappa_closed_form_mz(n, n, 0.5, 0.5, phi),
                       (n + 1 + (n + 1) * c, n + 1 - (n + 1) * c, n + n * c, n - n * c))
    k = kappa_closed_form_mz(0.3, 0.9, 0.5, 0.5, 0.0)  # c = 0
    assert np.allclose(sorted(k), sorted([1.3, 1.9, 0.3, 0.9]))
    with pytest.raises(ValueError):
        kappa_closed_form_mz(-1, 0, 0.5, 0.5, 0)
    with pytest.raises(ValueError):
        kappa_closed_form_mz(0, 0, 1.5, 0.5, 0)


def test_delta_omega_spectrum():
    n1, phi = 0.6, 1.2
    _, gen = _generators(mach_zehnder(n1, 0.3, phi=phi))
    c = abs(mz_transfer(0.5, 0.5, phi)[0])
    values = np.linalg.eigvalsh(gen.delta_omega)
    assert np.allclose(np.sort(values), np.sort([n1 * c, -n1 * c, (n1 + 1) * c, -(n1 + 1) * c]))


def test_omega_reconstruction_and_jumps():
    _, gen = _generators(three_node(0.2, 0.5, 0.4, 0.6, 0.9))
    v, k = gen.eigenvectors, gen.eigenvalues
    assert np.allclose((v * k) @ v.conj().T, gen.omega, atol=1e-10)
    assert all(kappa >= 1e-12 for kappa, _ in gen.jumps)


def test_inconsistent_coefficients_rejected():
    net = mach_zehnder(0.2, 0.2, phi=0.5)
    c = gaussian_coefficients(net)
    zeta = c.zeta.copy()
    zeta[0, 1, 0, 0, 0, 1] += 1e-3
    broken = CoefficientSet(c.first_order, c.local, zeta, c.xi)
    with pytest.raises(InconsistentCoefficients):
        assemble_gksl(net, broken)
    with pytest.raises(InconsistentCoefficients):
        build_coefficient_generator(net, broken)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_generator_forms_agree_random(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng)
    cg, gen = _generators(net)
    rho = random_hermitian_unit_trace(net.layout.total_dim, rng)
    scale = max(1.0, np.max(np.abs(cg.rhs(rho))))
    assert np.max(np.abs(cg.rhs(rho) - gen.rhs(rho))) <= 1e-9 * scale
    vec = rho.ravel()
    assert np.allclose(cg.superoperator @ vec, cg.rhs(rho).ravel(), atol=1e-11 * scale)
    assert np.allclose(gen.superoperator @ vec, gen.rhs(rho).ravel(), atol=1e-11 * scale)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_omega_positive_random(seed):
    net = random_network(np.random.default_rng(seed), max_occupation=3.0)
    omega, _ = omega_matrix(net, gaussian_coefficients(net))
    assert np.linalg.eigvalsh(omega).min() >= -1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_cross_terms_are_causal(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng)
    cg, _ = _generators(net)
    rho = random_density(net.layout.total_dim, rng)
    factors = net.layout.factors
    for term in cg.crossings:
        out = cg.cross_rhs(term.node, term.node_prime, rho)
        keep = [i for i in range(net.n_nodes) if i != term.node_prime]
        assert np.max(np.abs(partial_trace(out, factors, keep))) <= 1e-10


def test_hamiltonian_hermitian_and_pairwise_sum():
    net = three_node(0.3, 0.1, phi=0.5)
    _, gen = _generators(net)
    coeffs = gaussian_coefficients(net)
    ops = node_operators(net)
    total = sum(pair_hamiltonian(net, coeffs, m, mp, ops).entries for m, mp in [(0, 1), (0, 2), (1, 2)])
    assert np.allclose(total, gen.hamiltonian.entries)
    assert hermiticity_defect(gen.hamiltonian) < 1e-12


def test_coupling_amplitude_three_node_at_pi():
    net = three_node(phi=np.pi)
    _, gen = _generators(net)
    assert abs(coupling_amplitude(net, gen.hamiltonian, 0, 2)) == pytest.approx(0.5, abs=1e-12)


def test_json_export():
    net = mach_zehnder(0.1, 0.2, phi=0.3)
    _, gen = _generators(net)
    data = json.loads(gen.to_json())
    assert data["provenance"]["network_sha256"] == net.fingerprint()
    assert data["provenance"]["backend"] == "gaussian"
    assert len(data["hamiltonian"]["re"]) == 16
    assert len(data["jumps"]) == len(data["kappas"]) == 4
