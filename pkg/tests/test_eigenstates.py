import csv

import numpy as np
import pytest

from magicspread import oracles
from magicspread.complexity import haar_pe_k2
from magicspread.eigenstates import (
    DegenerateSpectrumError,
    dense_hamiltonian,
    eigenstate_complexity_scan,
    gap_ratio_statistic,
    gap_ratios,
    reflection_parities,
    reflection_permutation,
    sample_goe_energies,
    sector_gap_ratio,
)
from magicspread.models import IsingParams


@pytest.fixture(scope="module")
def scan8():
    return eigenstate_complexity_scan(IsingParams(8))


def test_dense_hamiltonian_matches_oracle(rng):
    p = IsingParams.disordered(5, 0.5, rng)
    assert np.allclose(dense_hamiltonian(p), oracles.dense_mfim(5, p.b, p.h, p.J).real)


def test_dense_hamiltonian_size_limit():
    with pytest.raises(ValueError):
        dense_hamiltonian(IsingParams(15))


def test_reflection_permutation():
    perm = reflection_permutation(3)
    assert perm[0b001] == 0b100 and perm[0b011] == 0b110 and perm[0b101] == 0b101


def test_parities_are_signs(scan8):
    assert np.allclose(np.abs(scan8.parities), 1, atol=1e-8)
    assert (scan8.parities > 0).sum() > (scan8.parities < 0).sum()


def test_parities_of_explicit_vectors():
    v = np.zeros((4, 2))
    v[1, 0] = v[2, 0] = 1 / np.sqrt(2)
    v[1, 1], v[2, 1] = 1 / np.sqrt(2), -1 / np.sqrt(2)
    assert np.allclose(reflection_parities(v, 2), [1, -1])


def test_scan_fields(scan8, tmp_path):
    assert scan8.energies.size == 256
    assert np.all(np.diff(scan8.energies) >= 0)
    assert scan8.energy_density[0] == 0 and scan8.energy_density[-1] == 1
    assert np.all(scan8.per_state_pe <= 8) and np.all(scan8.per_state_se >= 0)
    path = tmp_path / "scan.csv"
    scan8.to_csv(path)
    rows = list(csv.DictReader(open(path)))
    assert list(rows[0]) == ["index", "energy", "energy_density", "pe_k2", "se_k2"]
    assert float(rows[5]["pe_k2"]) == scan8.per_state_pe[5]


def test_mid_spectrum_more_delocalised_than_edges(scan8):
    n = scan8.energies.size
    mid = scan8.per_state_pe[int(0.45 * n):int(0.55 * n)].mean()
    low = scan8.per_state_pe[:int(0.02 * n) + 1].mean()
    assert mid > low + 1.0
    assert mid < haar_pe_k2(8)


def test_scan_limit():
    with pytest.raises(ValueError):
        eigenstate_complexity_scan(IsingParams(13))


def test_gap_ratio_poisson(rng):
    levels = np.cumsum(rng.exponential(size=20000))
    assert gap_ratio_statistic(levels) == pytest.approx(2 * np.log(2) - 1, abs=0.01)


def test_gap_ratio_goe(rng):
    vals = np.concatenate([gap_ratios(sample_goe_energies(400, rng)) for _ in range(20)])
    assert vals.mean() == pytest.approx(0.5307, abs=0.01)


def test_gap_ratio_degenerate():
    with pytest.raises(DegenerateSpectrumError):
        gap_ratio_statistic(np.repeat(np.arange(100.0), 2))


def test_gap_ratio_too_few_levels():
    with pytest.raises(ValueError):
        gap_ratio_statistic(np.arange(50.0))


def test_unresolved_reflection_symmetry_is_degenerate_looking(scan8):
    # mixing both sectors gives Poisson-like statistics; sector pooling restores level repulsion
    mixed = gap_ratio_statistic(scan8.energies)
    assert mixed < 0.47
    # only the even sector keeps 100 levels after trimming at N = 8
    assert sector_gap_ratio(scan8.energies, scan8.parities) > mixed
    with pytest.raises(ValueError):
        sector_gap_ratio(scan8.energies[:150], scan8.parities[:150])


def test_sector_gap_ratio_at_n10():
    scan = eigenstate_complexity_scan(IsingParams(10), with_se=False)
    assert sector_gap_ratio(scan.energies, scan.parities) == pytest.approx(0.53, abs=0.03)
