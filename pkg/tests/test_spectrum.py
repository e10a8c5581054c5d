from __future__ import annotations

import mpmath as mp
import numpy as np
import pytest

from ffqaoa import ed
from ffqaoa.models import frustrated_ring, uniform_chain
from ffqaoa.nambu import CouplingConfig, FermionParity
from ffqaoa.spectrum import (
    find_bottleneck,
    gap_scan,
    lowest_levels,
    majorana_block,
    many_body_gap,
    mp_sector_gap,
    mp_sector_levels,
    precise_bottleneck,
    sector_levels,
)

EVEN = FermionParity.EVEN


def test_gap_at_s0_is_twice_field():
    for h in (1.0, 0.6):
        assert many_body_gap(frustrated_ring(7, field_h=h), 0.0) == pytest.approx(2 * h)


def test_lowest_levels_sectors_match_ed():
    rng = np.random.default_rng(0)
    c = CouplingConfig(7, tuple(rng.uniform(-1, 1, 7)))
    levels = lowest_levels(c, 0.7)
    h = ed.dense_hamiltonian(c, 0.7)
    w, v = np.linalg.eigh(h)
    p = ed.dense_parity_operator(7)
    np.testing.assert_allclose([e for e, _ in levels], w[:2], atol=1e-10)
    for (_, sector), k in zip(levels, range(2)):
        parity = np.real(v[:, k].conj() @ p @ v[:, k])
        assert parity == pytest.approx(sector.sign, abs=1e-6)


def test_empty_scan():
    scan = gap_scan(uniform_chain(4), [])
    assert scan.points == () and scan.delta_min is None and scan.argmin is None


def test_uniform_chain_transition_near_half():
    scan = gap_scan(uniform_chain(12), np.linspace(0, 1, 201), EVEN)
    assert abs(scan.s_min - 0.5) < 0.05
    assert abs(scan.delta_min - ed.dense_gap(uniform_chain(12), scan.s_min, EVEN)) < 1e-9


def test_bottleneck_n101_grid_and_refined():
    c = frustrated_ring(101)
    scan = gap_scan(c, np.linspace(0, 1, 501), EVEN)
    assert abs(scan.s_min - 0.8544) < 1e-3
    b = find_bottleneck(c)
    assert abs(b.s - 0.8544) < 1e-3


def test_mp_levels_agree_with_double_precision():
    rng = np.random.default_rng(12)
    for _ in range(5):
        n = int(rng.integers(4, 12))
        c = CouplingConfig(n, tuple(rng.uniform(0.5, 1.5, n)))
        s = float(rng.uniform(0.1, 0.9))
        for sector in FermionParity:
            with mp.workdps(30):
                e1, e2, split, vacuum = mp_sector_levels(c, s, sector)
                gap = mp_sector_gap(c, s, sector)
            eps = np.linalg.svd(majorana_block(c, s, sector), compute_uv=False)[::-1]
            np.testing.assert_allclose([float(e1), float(e2)], eps[:2], atol=1e-12)
            assert float(split) == pytest.approx(eps[1] - eps[0], abs=1e-12)
            assert (vacuum is EVEN) == (np.linalg.det(majorana_block(c, s, sector)) > 0)
            lv = sector_levels(c, s, sector)
            assert float(gap) == pytest.approx(lv[1] - lv[0], abs=1e-10)


def test_precise_bottleneck_small_ring_matches_double():
    c = frustrated_ring(15)
    b = find_bottleneck(c)
    p = precise_bottleneck(c, (b.s - 0.01, b.s + 0.01))
    assert float(p.delta_min) == pytest.approx(b.delta_min, rel=1e-6)
    assert float(p.s_min) == pytest.approx(b.s, abs=1e-6)
    with mp.workdps(40):
        assert float(mp_sector_gap(c, p.s_min, EVEN)) == pytest.approx(float(p.delta_min), rel=1e-8)


def test_precise_gap_below_double_precision_floor():
    c = frustrated_ring(61)
    b = find_bottleneck(c, precise=True)
    assert b.log10_delta < -17
    assert abs(b.s - 0.8544) < 0.02
