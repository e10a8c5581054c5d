from __future__ import annotations

import numpy as np
import pytest

from ffqaoa import ed
from ffqaoa.evolution import QaoaParams
from ffqaoa.models import uniform_chain
from ffqaoa.nambu import CouplingConfig, FermionParity
from ffqaoa.spectrum import many_body_gap
from ffqaoa.verify import random_config


def test_two_site_classical_ring():
    c = CouplingConfig(2, (1.0, 1.0))
    w = np.linalg.eigvalsh(ed.dense_hamiltonian(c, 1.0))
    # both bonds join sites 1 and 2: energies -2 (aligned) and +2 (anti-aligned)
    np.testing.assert_allclose(w, [-2, -2, 2, 2])


def test_uniform_field_ground_energy():
    w = np.linalg.eigvalsh(ed.dense_hamiltonian(uniform_chain(3), 0.0))
    assert w[0] == pytest.approx(-3.0)


def test_classical_spectrum_flip_symmetric():
    rng = np.random.default_rng(1)
    c = CouplingConfig(5, tuple(rng.uniform(-1, 1, 5)))
    d = np.diag(ed.dense_hamiltonian(c, 1.0)).real
    np.testing.assert_allclose(d, d[::-1])


def test_zero_angles_give_plus_state():
    c = uniform_chain(4)
    psi = ed.dense_qaoa_state(c, QaoaParams.zeros(2))
    np.testing.assert_allclose(psi, np.full(16, 0.25))


def test_norm_preserved_deep_circuit():
    rng = np.random.default_rng(4)
    c = CouplingConfig(6, tuple(rng.uniform(-1, 1, 6)))
    psi = ed.dense_qaoa_state(c, QaoaParams.from_vector(rng.uniform(0, 2 * np.pi, 20)))
    assert abs(np.linalg.norm(psi) - 1) < 1e-12


def test_gap_matches_free_fermions():
    rng = np.random.default_rng(5)
    for _ in range(10):
        c = random_config(rng, 2, 10)
        s = float(rng.uniform())
        assert abs(ed.dense_gap(c, s) - many_body_gap(c, s)) < 1e-9


def test_random_n8_gap():
    rng = np.random.default_rng(8)
    c = CouplingConfig(8, tuple(rng.uniform(-1.5, 1.5, 8)))
    assert abs(ed.dense_gap(c, 0.37) - many_body_gap(c, 0.37)) < 1e-10


def test_gap_endpoints():
    assert ed.dense_gap(uniform_chain(5, field_h=0.8), 0.0) == pytest.approx(1.6)
    assert ed.dense_gap(uniform_chain(6), 1.0) == pytest.approx(0.0, abs=1e-12)


def test_sector_blocks_reproduce_full_spectrum():
    rng = np.random.default_rng(9)
    c = CouplingConfig(6, tuple(rng.uniform(-1, 1, 6)), 0.7)
    full = np.linalg.eigvalsh(ed.dense_hamiltonian(c, 0.6))
    parts = np.r_[
        np.linalg.eigvalsh(ed.sector_hamiltonian(c, 0.6, FermionParity.EVEN)),
        np.linalg.eigvalsh(ed.sector_hamiltonian(c, 0.6, FermionParity.ODD)),
    ]
    np.testing.assert_allclose(np.sort(parts), full, atol=1e-12)
    p = ed.dense_parity_operator(6)
    h = ed.dense_hamiltonian(c, 0.6)
    np.testing.assert_allclose(p @ h, h @ p, atol=1e-14)


def test_size_limits():
    with pytest.raises(ed.OracleSizeError):
        ed.dense_hamiltonian(uniform_chain(13), 0.5)
    with pytest.raises(ed.OracleSizeError):
        ed.dense_qaoa_state(uniform_chain(11), QaoaParams.zeros(1))
