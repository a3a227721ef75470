import math

import numpy as np
import pytest
from scipy import sparse

from schwinger import (
    ConfigError,
    GaugeGrid,
    ModelParams,
    build_full_hamiltonian,
    build_HDa_reg,
    build_Q,
    build_Q5_naive,
    build_zero_mode_kinetic,
    gauge_invariance_full,
    spectrum,
)
from schwinger.assembly import SolverError, fermion_block, zero_mode_field_operator
from schwinger.fock import make_sector

L = 2 * math.pi


@pytest.fixture(scope="module")
def n2():
    return make_sector(2, 2)


@pytest.fixture(scope="module")
def n4():
    return make_sector(4, 4)


def _ground(sector, boundary, M, n_cut=2, mp=2):
    p = ModelParams(N_cut=n_cut, max_particles=mp, e=1.0, M_grid=M)
    H = build_full_hamiltonian(p, sector, boundary=boundary)
    return spectrum(H, k=1)[0][0]


@pytest.mark.parametrize("M", [3, 8, 17])
@pytest.mark.parametrize("length, e", [(L, 1.0), (3.0, 0.7)])
def test_periodic_stencil_eigenvalues(M, length, e):
    p = ModelParams(L=length, e=e)
    grid = GaugeGrid(M, length, "periodic")
    K = build_zero_mode_kinetic(grid, p).toarray()
    q = np.arange(M)
    want = np.sort(e * e / length * (2 - 2 * np.cos(2 * math.pi * q / M)) / grid.h ** 2)
    assert np.allclose(np.linalg.eigvalsh(K), want, rtol=1e-12, atol=1e-9)


def test_spectral_matches_continuum_on_low_modes():
    M, p = 16, ModelParams(L=3.0, e=1.0)
    grid = GaugeGrid(M, p.L, "periodic")
    K = build_zero_mode_kinetic(grid, p, "spectral").toarray()
    w = np.sort(np.linalg.eigvalsh(K))
    q = np.fft.fftfreq(M, d=1.0 / M) * 2 * math.pi / grid.period
    assert np.allclose(w, np.sort(p.e ** 2 / p.L * q ** 2), atol=1e-9)


def test_stencil_preconditions():
    p = ModelParams()
    with pytest.raises(ConfigError):
        build_zero_mode_kinetic(GaugeGrid(2, L, "periodic"), p)
    with pytest.raises(ConfigError):
        build_zero_mode_kinetic(GaugeGrid(8, L, "gamma-twisted"), p, "spectral", wrap=False)
    with pytest.raises(ConfigError):
        build_zero_mode_kinetic(GaugeGrid(8, L, "periodic"), p, "chebyshev")
    with pytest.raises(ConfigError):
        GaugeGrid(8, L, "dirichlet")


def test_zero_coupling_has_no_kinetic_term():
    K = build_zero_mode_kinetic(GaugeGrid(8, L, "periodic"), ModelParams(e=0.0))
    assert K.nnz == 0 or abs(K).max() == 0


def test_field_commutator_on_smooth_functions():
    # [E, a] = -i e^2/L, checked on a smooth periodic test function away from the seam
    p = ModelParams(L=3.0, e=1.2)
    for M in (32, 64):
        grid = GaugeGrid(M, p.L, "periodic")
        E = zero_mode_field_operator(grid, p)
        A = sparse.diags(grid.points)
        f = np.cos(grid.points * p.L)
        comm = E @ (A @ f) - A @ (E @ f)
        inner = slice(2, M - 2)
        err = np.max(np.abs(comm[inner] - (-1j * p.e ** 2 / p.L) * f[inner]))
        assert err <= 2 * grid.h ** 2 * p.L ** 2


def test_free_spectrum_with_single_point(n2):
    p = ModelParams(N_cut=2, max_particles=2, e=0.0, M_grid=1)
    H = build_full_hamiltonian(p, n2, boundary="periodic")
    w = [x for x, _ in spectrum(H, k=n2.dim)]
    want = np.sort(np.diag(build_HDa_reg(n2, p).toarray()).real)
    assert np.allclose(w, want, atol=1e-12)


def test_diagonal_blocks_match_closed_form(n2):
    p = ModelParams(N_cut=2, max_particles=2, e=1.0, M_grid=8)
    H = build_full_hamiltonian(p, n2, include_kinetic=False).matrix
    grid = GaugeGrid(8, p.L)
    n = n2.dim
    coul = H[:n, :n] - fermion_block(n2, p, 0.0)
    for j, a in enumerate(grid.points):
        blk = H[j * n:(j + 1) * n, j * n:(j + 1) * n] - coul
        d = build_HDa_reg(n2, p.with_(a=a)).matrix
        assert abs(blk - d).max() <= 1e-14
    # without the zero-mode kinetic term nothing couples different grid points
    off = H.tolil()
    for j in range(8):
        off[j * n:(j + 1) * n, j * n:(j + 1) * n] = 0
    assert off.tocsr().count_nonzero() == 0


@pytest.mark.parametrize("boundary", ["periodic", "gamma-twisted"])
def test_full_hamiltonian_is_hermitian_and_charge_conserving(n2, boundary):
    p = ModelParams(N_cut=2, max_particles=2, e=1.3, M_grid=10)
    H = build_full_hamiltonian(p, n2, boundary=boundary)
    assert H.hermiticity_residual() <= 1e-12
    q = H.lift(build_Q(n2).matrix)
    comm = H.matrix @ q - q @ H.matrix
    assert comm.nnz == 0 or abs(comm).max() == 0


def test_naive_chirality_only_conserved_without_twist(n2):
    p = ModelParams(N_cut=2, max_particles=2, e=1.0, M_grid=8)
    out = {}
    for boundary in ("periodic", "gamma-twisted"):
        H = build_full_hamiltonian(p, n2, boundary=boundary)
        q5 = H.lift(build_Q5_naive(n2).matrix)
        comm = H.matrix @ q5 - q5 @ H.matrix
        out[boundary] = float(abs(comm).max()) if comm.nnz else 0.0
    assert out["periodic"] == 0
    assert out["gamma-twisted"] > 0.1


def test_non_neutral_sector_rejected():
    with pytest.raises(ConfigError):
        build_full_hamiltonian(ModelParams(), make_sector(2, 3, 1))
    with pytest.raises(ConfigError):
        build_full_hamiltonian(ModelParams(N_cut=2, max_particles=2), make_sector(2, 2), coupling_mode="x")


def test_dense_and_iterative_agree():
    sector = make_sector(2, 2)
    p = ModelParams(N_cut=2, max_particles=2, e=1.0, M_grid=20)
    H = build_full_hamiltonian(p, sector)
    assert H.dim == 520
    dense = spectrum(H, k=4, method="dense")
    lanczos = spectrum(H, k=4, method="iterative")
    for (x, _), (y, r) in zip(dense, lanczos):
        assert abs(x - y) <= 1e-9
        assert r <= 1e-8 * 100


def test_spectrum_on_identity():
    out = spectrum(sparse.identity(6, format="csr"), k=3)
    assert [w for w, _ in out] == [1.0, 1.0, 1.0]
    assert all(r == 0 for _, r in out)


def test_spectrum_argument_checks():
    A = sparse.diags(np.arange(5.0)).tocsr()
    with pytest.raises(ConfigError):
        spectrum(A, k=6)
    with pytest.raises(ConfigError):
        spectrum(A, k=0)
    with pytest.raises(ConfigError):
        spectrum(A, method="qr")


def test_solver_failure_is_reported():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((600, 600))
    A = sparse.csr_matrix(X + X.T)
    with pytest.raises(SolverError):
        spectrum(A, k=3, method="iterative", maxiter=1)


def test_gauge_invariance_full_regularized(n4):
    p = ModelParams(N_cut=4, max_particles=4, a=0.2 * 2 * math.pi / L)
    for a_values in (None, [0.0], [-0.9, 0.33]):
        rep = gauge_invariance_full(p, n4, a_values=a_values)
        assert rep["passed"], rep
        assert rep["interior_dim"] > 0 and rep["boundary_dim"] > 0


@pytest.mark.parametrize("mode", ["naive", "literal-ham"])
def test_gauge_invariance_full_fails_for_unregularized_couplings(n4, mode):
    p = ModelParams(N_cut=4, max_particles=4, a=0.4)
    rep = gauge_invariance_full(p, n4, coupling_mode=mode)
    assert not rep["passed"]
    assert rep["witness"] is not None


def test_coulomb_breaks_truncated_invariance(n4):
    # the j0 modes are clipped differently on G's range and its image
    p = ModelParams(N_cut=4, max_particles=4, a=0.4)
    rep = gauge_invariance_full(p, n4, include_coulomb=True)
    assert rep["residual"] > 1e-3


def test_coulomb_defaults_recorded(n2):
    p = ModelParams(N_cut=2, max_particles=2, e=1.0, M_grid=6)
    H = build_full_hamiltonian(p, n2, include_kinetic=False)
    assert H.coulomb_vacuum > 0
    assert H.m_max == 4


@pytest.mark.parametrize("boundary, direction", [("periodic", -1), ("gamma-twisted", 1)])
def test_ground_state_refinement_is_monotone(n2, boundary, direction):
    # periodic closure approaches from above, the twisted seam from below
    e0 = [_ground(n2, boundary, M) for M in (8, 16, 32)]
    steps = np.diff(e0)
    assert np.all(direction * steps > 0), e0
    # and the steps shrink
    assert abs(steps[1]) < abs(steps[0])


def test_ground_state_values_for_small_truncation(n2):
    assert _ground(n2, "periodic", 8) == pytest.approx(-0.2627, abs=1e-4)
    assert _ground(n2, "gamma-twisted", 8) == pytest.approx(0.2719, abs=1e-4)
