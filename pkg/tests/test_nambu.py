from __future__ import annotations

import numpy as np
import pytest

from ffqaoa import ed
from ffqaoa.models import frustrated_ring, uniform_chain
from ffqaoa.nambu import (
    CouplingConfig,
    FermionParity,
    NambuError,
    build_h,
    build_hx,
    build_hz,
    diagonalize,
    hermitian,
    omega,
    unitary,
    z_blocks,
)
from ffqaoa.spectrum import many_body_gap, majorana_block, sector_levels


def ring3() -> CouplingConfig:
    return CouplingConfig(3, (1.0, 1.0, 1.0))


def test_coupling_config_validation():
    with pytest.raises(ValueError):
        CouplingConfig(1, (1.0,))
    with pytest.raises(ValueError):
        CouplingConfig(3, (1.0, 1.0))
    with pytest.raises(ValueError):
        CouplingConfig(3, (1.0, np.nan, 1.0))


def test_nambu_matrix_rejects_non_hermitian_and_non_unitary():
    with pytest.raises(NambuError):
        hermitian(np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(NambuError):
        unitary(2 * np.eye(2))


def test_build_hx_examples():
    np.testing.assert_array_equal(build_hx(CouplingConfig(2, (1.0, 1.0))).entries, np.diag([1, 1, -1, -1]))
    np.testing.assert_array_equal(
        build_hx(CouplingConfig(3, (1.0,) * 3, -0.5)).entries, np.diag([-0.5] * 3 + [0.5] * 3)
    )
    w = np.linalg.eigvalsh(build_hx(uniform_chain(5)).entries)
    np.testing.assert_allclose(np.sort(w), [-1] * 5 + [1] * 5)


def test_build_hz_even_and_odd_entries():
    a, b = z_blocks(ring3(), FermionParity.EVEN)
    assert a[0, 1] == -0.5 and a[0, 2] == 0.5
    assert b[0, 1] == -0.5 and b[2, 0] == 0.5
    a, _ = z_blocks(ring3(), FermionParity.ODD)
    assert a[0, 2] == -0.5
    m = build_hz(ring3()).entries
    assert np.max(np.abs(m - m.conj().T)) == 0.0


def test_build_h_endpoints_and_midpoint():
    c = ring3()
    np.testing.assert_array_equal(build_h(c, 0.0).entries, build_hx(c).entries)
    np.testing.assert_array_equal(build_h(c, 1.0).entries, build_hz(c).entries)
    assert build_h(c, 0.5).entries[0, 0] == 0.5
    with pytest.raises(ValueError):
        build_h(c, 1.5)


def test_two_site_ring_matches_ed():
    # both boundary contributions land on the same entries for N=2
    c = CouplingConfig(2, (0.7, -0.4), 0.9)
    for s in (0.0, 0.3, 1.0):
        assert abs(many_body_gap(c, s) - ed.dense_gap(c, s)) < 1e-12


def test_diagonalize_hx():
    spec = diagonalize(build_hx(uniform_chain(4)))
    np.testing.assert_allclose(spec.epsilons, 1.0)
    assert spec.vacuum_energy == pytest.approx(-4.0)


def test_diagonalize_frustrated_ring_matches_ed_even_sector():
    c = frustrated_ring(5)
    spec = diagonalize(build_h(c, 1.0, FermionParity.EVEN), FermionParity.EVEN)
    ref = ed.sector_levels(c, 1.0, FermionParity.EVEN)[0]
    assert abs(spec.ground_energy - ref) < 1e-10


def test_diagonalize_ph_spectrum_random():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = int(rng.integers(2, 9))
        c = CouplingConfig(n, tuple(rng.uniform(-2, 2, n)), float(rng.uniform(-1.5, 1.5)))
        m = build_h(c, float(rng.uniform()), FermionParity(int(rng.integers(2))))
        spec = diagonalize(m)
        ev = np.linalg.eigvalsh(m.entries)
        np.testing.assert_allclose(np.sort(np.r_[spec.epsilons, -spec.epsilons]), ev, atol=1e-10)
        assert spec.vacuum_energy == pytest.approx(-spec.epsilons.sum())
        assert spec.transform.has_ph_structure()


def test_diagonalize_with_zero_modes():
    # uniform chain at s=1 in the odd sector has exact zero modes
    c = uniform_chain(6)
    spec = diagonalize(build_h(c, 1.0, FermionParity.ODD), FermionParity.ODD)
    ref = ed.sector_levels(c, 1.0, FermionParity.ODD)
    assert abs(spec.ground_energy - ref[0]) < 1e-10


def test_omega_is_unitary():
    w = omega(4)
    np.testing.assert_allclose(w @ w.conj().T, np.eye(8), atol=1e-15)


def test_vacuum_parity_is_sign_of_det_x():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(2, 8))
        c = CouplingConfig(n, tuple(rng.uniform(-2, 2, n)), float(rng.choice([1.0, -0.6])))
        s = float(rng.uniform())
        sector = FermionParity(int(rng.integers(2)))
        x = majorana_block(c, s, sector)
        spec = diagonalize(build_h(c, s, sector), sector)
        assert (np.linalg.det(x) > 0) == (spec.vacuum_parity is FermionParity.EVEN)
        # closed form of the cyclic bidiagonal determinant
        diag = (1 - s) * c.field_h
        sub = -s * c.j[:-1]
        corner = sector.sign * s * c.j[-1]
        closed = diag**n + (-1) ** (n + 1) * corner * np.prod(sub)
        assert closed == pytest.approx(np.linalg.det(x), rel=1e-10, abs=1e-12)


def test_sector_levels_match_ed():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.integers(3, 9))
        c = CouplingConfig(n, tuple(rng.uniform(-1.5, 1.5, n)), 1.0)
        s = float(rng.uniform())
        for sector in FermionParity:
            np.testing.assert_allclose(sector_levels(c, s, sector), ed.sector_levels(c, s, sector), atol=1e-10)


def test_parity_parse():
    assert FermionParity.parse("odd") is FermionParity.ODD
    assert FermionParity.parse(0) is FermionParity.EVEN
    assert FermionParity.ODD.sign == -1
