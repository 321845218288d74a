import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from zlab.errors import NonContiguous
from zlab.models import (
    Grid1D,
    RegionMask,
    SeededGenerator,
    dirichlet_laplacian,
    gaussian_packet,
    indicator_projection,
    periodic_laplacian_1d,
    random_hermitian,
    random_projection,
    random_psd,
    random_state,
    rotating_family,
)
from zlab.operators import HermitianOperator, OrthogonalProjection, operator_norm


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid1D(3)
    with pytest.raises(ValueError):
        Grid1D(8, spacing=0.0)
    assert Grid1D(5, 0.5).x.tolist() == [0.0, 0.5, 1.0, 1.5, 2.0]


def test_region_must_be_proper_subset():
    g = Grid1D(6)
    with pytest.raises(ValueError):
        RegionMask(g, np.ones(6, bool))
    with pytest.raises(ValueError):
        RegionMask(g, np.zeros(6, bool))
    assert RegionMask.interval(g, 1, 3).indices.tolist() == [1, 2, 3]


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 64), st.floats(0.1, 3.0))
def test_periodic_laplacian_spectrum(n, h):
    lap = periodic_laplacian_1d(Grid1D(n, h))
    expected = np.sort(4.0 / h**2 * np.sin(np.pi * np.arange(n) / n) ** 2)
    assert np.allclose(lap.spectrum.eigenvalues, expected, atol=1e-10 / h**2)
    assert lap.is_psd


@pytest.mark.parametrize("lo,hi,spacing", [(32, 95, 1.0), (0, 9, 0.5), (3, 3, 1.0)])
def test_dirichlet_stencil_both_ways(lo, hi, spacing):
    grid = Grid1D(128, spacing)
    mask = RegionMask.interval(grid, lo, hi)
    hd = dirichlet_laplacian(mask)
    idx = mask.indices
    hand = oracles.dirichlet_stencil(len(idx), spacing)
    assert np.max(np.abs(hd.matrix[np.ix_(idx, idx)] - hand)) <= 1e-13
    outside = np.setdiff1d(np.arange(128), idx)
    assert not np.any(hd.matrix[outside, :]) and not np.any(hd.matrix[:, outside])
    p = indicator_projection(mask).matrix
    lap = periodic_laplacian_1d(grid).matrix
    assert np.max(np.abs((p @ lap @ p)[np.ix_(idx, idx)] - hand)) <= 1e-13


def test_dirichlet_spectrum_is_sine_modes():
    mask = RegionMask.interval(Grid1D(40), 10, 19)
    w = dirichlet_laplacian(mask).spectrum.eigenvalues
    k = np.arange(1, 11)
    expected = np.sort(np.concatenate([np.zeros(30), 4 * np.sin(k * np.pi / 22) ** 2]))
    assert np.allclose(w, expected, atol=1e-12)


def test_dirichlet_rejects_split_region():
    g = Grid1D(10)
    inside = np.zeros(10, bool)
    inside[[1, 2, 5, 6]] = True
    with pytest.raises(NonContiguous):
        dirichlet_laplacian(RegionMask(g, inside))


def test_seeded_streams_are_independent_and_reproducible():
    a, b = SeededGenerator(7), SeededGenerator(7)
    assert np.array_equal(random_psd(4, a).matrix, random_psd(4, b).matrix)
    # drawing from one tag does not shift another
    random_state(4, a, tag="extra")
    assert np.array_equal(random_projection(4, 2, a).matrix, random_projection(4, 2, b).matrix)
    assert not np.array_equal(random_state(4, SeededGenerator(8)), random_state(4, SeededGenerator(7)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 10), st.floats(0.1, 5.0))
def test_random_operators(seed, dim, cap):
    gen = SeededGenerator(seed)
    h = random_psd(dim, gen, cap)
    assert h.is_psd
    assert h.norm() == pytest.approx(cap, rel=1e-10)
    a = random_hermitian(dim, gen, cap)
    assert operator_norm(a.matrix) == pytest.approx(cap, rel=1e-10)
    rank = 1 + seed % (dim - 1)
    p = random_projection(dim, rank, gen)
    assert p.rank == rank
    assert np.linalg.norm(random_state(dim, gen)) == pytest.approx(1.0, abs=1e-14)


def test_rotating_family_is_conjugation():
    gen = SeededGenerator(4)
    p = random_projection(4, 2, gen)
    a = random_hermitian(4, gen, 1.0)
    fam = rotating_family(p, a)
    u = oracles.expm(1j * 0.3 * a.matrix)
    assert np.allclose(fam.at(0.3).matrix, u @ p.matrix @ u.conj().T, atol=1e-12)
    assert fam.at(0) is p


def test_rotating_family_with_zero_generator_is_constant():
    p = OrthogonalProjection(np.diag([1.0, 0.0]))
    fam = rotating_family(p, HermitianOperator(np.zeros((2, 2))))
    assert fam.constant


def test_gaussian_packet():
    grid = Grid1D(128)
    psi = gaussian_packet(grid, 64.0, 4.0, 0.5)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-14)
    assert np.argmax(np.abs(psi)) == 64
    assert np.allclose(np.abs(psi), np.abs(gaussian_packet(grid, 64.0, 4.0)), atol=1e-15)
    with pytest.raises(ValueError):
        gaussian_packet(grid, 0.0, 0.0)
