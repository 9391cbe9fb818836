import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dirac_qpm.assembly import (
    AssemblyError,
    PencilTriple,
    assemble,
    galerkin_eigenvalues,
    galerkin_matrix,
    read_pencil,
    write_pencil,
)
from dirac_qpm.kernels import build_kernel_table
from dirac_qpm.problem import BasisSpec, PotentialSpec, RadialProblem
from dirac_qpm.reference import CoulombSpectrum
from pencil_oracle import entrywise_rel, quadrature_pencil


@pytest.fixture(scope="module", params=["coulomb", "subcoulomb", "invharm"])
def oracle_pair(request):
    from conftest import BENCHMARKS

    problem = RadialProblem(-1, BENCHMARKS[request.param])
    basis = BasisSpec(6, 6)
    return assemble(problem, basis), quadrature_pencil(problem, basis)


def test_pencil_matches_quadrature_assembly(oracle_pair):
    triple, (l_ref, k_ref) = oracle_pair
    assert entrywise_rel(triple.l_matrix, l_ref) < 1e-8
    assert entrywise_rel(triple.k_matrix, k_ref) < 1e-8


@pytest.mark.parametrize("kappa", [-2, 1, 3])
def test_other_kappa_matches_quadrature_assembly(kappa):
    problem = RadialProblem(kappa, PotentialSpec.coulomb(-0.5))
    basis = BasisSpec(4, 3)
    triple = assemble(problem, basis)
    l_ref, k_ref = quadrature_pencil(problem, basis)
    assert entrywise_rel(triple.l_matrix, l_ref) < 1e-8
    assert entrywise_rel(triple.k_matrix, k_ref) < 1e-8


def test_free_small_example():
    problem = RadialProblem(-1, PotentialSpec.free())
    triple = assemble(problem, BasisSpec(2, 2))
    tab = build_kernel_table(PotentialSpec.free(), 2)
    assert np.array_equal(triple.b_matrix, np.eye(4))
    assert np.allclose(triple.l_matrix[:2, :2], np.eye(2))
    assert np.allclose(triple.l_matrix[2:, 2:], -np.eye(2))
    k11 = tab.t1 + tab.t4 - (tab.t5 + tab.t5.T) + tab.t6
    assert np.allclose(triple.k_matrix[:2, :2], k11, atol=1e-14)


def test_rectangular_blocks_come_from_one_table():
    pot = PotentialSpec.coulomb(-0.5)
    tab = build_kernel_table(pot, 9)
    triple = assemble(RadialProblem(-1, pot), BasisSpec(9, 4), kernels=tab)
    l12 = triple.l_matrix[:9, 9:]
    assert l12.shape == (9, 4)
    assert np.allclose(l12, (tab.t2 - tab.t3)[:9, :4], atol=1e-14)
    # symmetric L means the (2,1) block is the transposed (1,2) block
    assert np.allclose(triple.l_matrix[9:, :9], l12.T, atol=1e-12)
    assert np.allclose(l12 + triple.l_matrix[9:, :9].T, 2.0 * (tab.t2 - tab.t3)[:9, :4], atol=1e-12)


def test_kernel_table_mismatch_rejected():
    small = build_kernel_table(PotentialSpec.coulomb(-0.5), 3)
    with pytest.raises(AssemblyError, match="extent"):
        assemble(RadialProblem(-1, PotentialSpec.coulomb(-0.5)), BasisSpec(5, 5), kernels=small)
    with pytest.raises(AssemblyError, match="kernel table is for"):
        assemble(RadialProblem(-1, PotentialSpec.coulomb(-0.3)), BasisSpec(2, 2), kernels=small)


def test_check_reports_offending_entry():
    t = assemble(RadialProblem(-1, PotentialSpec.coulomb(-0.5)), BasisSpec(3, 3))
    lmat = np.array(t.l_matrix)
    lmat[1, 4] += 0.5
    with pytest.raises(AssemblyError, match=r"L\[1,4\]|L\[4,1\]"):
        PencilTriple(t.b_matrix, lmat, t.k_matrix, t.basis, t.problem).check()
    kmat = np.array(t.k_matrix) - 10.0 * np.eye(6)
    with pytest.raises(AssemblyError, match="positive semidefinite"):
        PencilTriple(t.b_matrix, t.l_matrix, kmat, t.basis, t.problem).check()
    with pytest.raises(AssemblyError, match="identity"):
        PencilTriple(2.0 * t.b_matrix, t.l_matrix, t.k_matrix, t.basis, t.problem).check()


def test_pencil_round_trip(tmp_path, benchmark_potential):
    t = assemble(RadialProblem(-1, benchmark_potential), BasisSpec(5, 3))
    path = tmp_path / "pencil.txt"
    write_pencil(t, path)
    lines = path.read_text().splitlines()
    assert lines[:5] == ["dirac-pencil v1", "dim 8", "N 5", "M 3", "kappa -1"]
    back = read_pencil(path)
    assert back.problem == t.problem and back.basis == t.basis
    for a, b in ((back.l_matrix, t.l_matrix), (back.k_matrix, t.k_matrix), (back.b_matrix, t.b_matrix)):
        assert np.array_equal(a, b)


def test_read_pencil_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("not a pencil\n")
    with pytest.raises(AssemblyError):
        read_pencil(bad)
    t = assemble(RadialProblem(-1, PotentialSpec.coulomb(-0.5)), BasisSpec(2, 2))
    good = tmp_path / "good.txt"
    write_pencil(t, good)
    lines = good.read_text().splitlines()
    lines[1] = "dim 5"
    bad.write_text("\n".join(lines))
    with pytest.raises(AssemblyError, match="dim"):
        read_pencil(bad)


def test_triple_is_immutable():
    t = assemble(RadialProblem(-1, PotentialSpec.coulomb(-0.5)), BasisSpec(2, 2))
    with pytest.raises(ValueError):
        t.k_matrix[0, 0] = 1.0


def test_quadratic_form_definition():
    t = assemble(RadialProblem(-1, PotentialSpec.coulomb(-0.5)), BasisSpec(3, 3))
    z = 0.3 + 0.2j
    assert np.allclose(t.quadratic(z), z * z * np.eye(6) - 2 * z * t.l_matrix + t.k_matrix)


def test_galerkin_matrix_is_l():
    t = assemble(RadialProblem(-1, PotentialSpec.coulomb(-0.5)), BasisSpec(3, 3))
    assert galerkin_matrix(t) is t.l_matrix


def test_free_galerkin_has_no_gap_states():
    t = assemble(RadialProblem(-1, PotentialSpec.free()), BasisSpec(30, 30))
    eigs = galerkin_eigenvalues(t)
    assert np.all(np.abs(eigs) >= 1.0 - 1e-10)


def test_galerkin_pollution_witness_for_unbalanced_basis():
    t = assemble(RadialProblem(-1, PotentialSpec.coulomb(-0.5)), BasisSpec(150, 50))
    spec = CoulombSpectrum(-0.5)
    eigs = galerkin_eigenvalues(t)
    gap = eigs[np.abs(eigs) < 1.0]
    assert max(spec.distance(x) for x in gap) > 0.05


def test_balanced_galerkin_ground_level():
    t = assemble(RadialProblem(-1, PotentialSpec.coulomb(-0.5)), BasisSpec(100, 100))
    eigs = galerkin_eigenvalues(t)
    assert np.min(np.abs(eigs - 0.8660254)) < 1e-2


@settings(max_examples=25, deadline=None)
@given(
    n_up=st.integers(1, 25),
    n_lo=st.integers(1, 25),
    kappa=st.sampled_from([-3, -2, -1, 1, 2]),
    which=st.sampled_from(["free", "coulomb", "subcoulomb", "invharm"]),
    gamma=st.floats(-0.8, 0.8),
    beta=st.floats(0.05, 1.0),
)
def test_pencil_invariants_property(n_up, n_lo, kappa, which, gamma, beta):
    pot = {
        "free": PotentialSpec.free(),
        "coulomb": PotentialSpec.coulomb(gamma),
        "subcoulomb": PotentialSpec.subcoulomb(gamma, beta),
        "invharm": PotentialSpec.inverse_harmonic(6.0 * gamma),
    }[which]
    t = assemble(RadialProblem(kappa, pot), BasisSpec(n_up, n_lo))
    n = n_up + n_lo
    assert t.dim == n and t.l_matrix.shape == (n, n)
    assert np.array_equal(t.l_matrix, t.l_matrix.T)
    w = np.linalg.eigvalsh(t.k_matrix)
    assert w[0] >= -1e-10 * max(abs(w[-1]), 1.0)
    # K - L^2 is the Gram matrix of the part of H b_a outside the test space
    assert np.linalg.eigvalsh(t.k_matrix - t.l_matrix @ t.l_matrix)[0] >= -1e-9 * max(abs(w[-1]), 1.0)
