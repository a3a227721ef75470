"""Full Hamiltonian on (zero-mode grid) x (charge-0 fermion sector) and its low spectrum.

The gauge zero mode ``a`` lives on ``[0, 2*pi/L)`` sampled at ``M`` points.
Its kinetic term ``-(e^2/L) d^2/da^2`` is a second-order central difference
(or a Fourier second derivative). Every fermionic term is block diagonal in
the grid index with ``a = a_j``.

Boundary closure at ``a = 2*pi/L``:

``"periodic"``
    ``Psi(a + 2*pi/L) = Psi(a)``.
``"gamma-twisted"``
    ``Psi(a + 2*pi/L) = G^dagger Psi(a)`` with ``G`` the large gauge map, so
    the closure is compatible with ``G H(a + 2*pi/L) G^dagger = H(a)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from schwinger.fock import BasisSector
from schwinger.gauge import FORWARD, gamma_matrix
from schwinger.operators import (
    build_coulomb,
    build_HD0_reg,
    build_HDa_reg,
    build_Q,
    build_Q5_naive,
    default_m_max,
)
from schwinger.params import ConfigError, ModelParams

BOUNDARIES = ("periodic", "gamma-twisted")
COUPLING_MODES = ("krf2", "literal-ham", "naive")
SCHEMES = ("fd", "spectral")
DENSE_CROSSOVER = 4000


class SolverError(RuntimeError):
    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)


@dataclass(frozen=True)
class GaugeGrid:
    M: int
    L: float
    boundary: str = "gamma-twisted"

    def __post_init__(self):
        if self.M < 1:
            raise ConfigError("grid needs M >= 1")
        if self.boundary not in BOUNDARIES:
            raise ConfigError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")

    @property
    def period(self) -> float:
        return 2 * math.pi / self.L

    @property
    def h(self) -> float:
        return self.period / self.M

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.M) * self.h


def _second_difference(M: int, periodic: bool) -> sparse.csr_matrix:
    main = -2.0 * np.ones(M)
    off = np.ones(M - 1)
    d2 = sparse.diags([off, main, off], [-1, 0, 1], shape=(M, M), format="lil")
    if periodic:
        d2[0, M - 1] = 1.0
        d2[M - 1, 0] = 1.0
    return d2.tocsr()


def _spectral_second_derivative(M: int, period: float) -> np.ndarray:
    q = 2 * np.pi / period * np.fft.fftfreq(M, d=1.0 / M)
    # Fourier second derivative as a real circulant
    col = np.real(np.fft.ifft(-(q ** 2)))
    idx = (np.arange(M)[:, None] - np.arange(M)[None, :]) % M
    return col[idx]


def build_zero_mode_kinetic(grid: GaugeGrid, params: ModelParams, scheme: str = "fd",
                            wrap: bool = True) -> sparse.csr_matrix:
    """``-(e^2/L) d^2/da^2`` on the grid alone.

    ``wrap=False`` omits the ``j = M-1 <-> 0`` couplings so the caller can
    close the boundary through the gauge map.
    """
    if grid.M < 3:
        raise ConfigError("zero-mode stencil needs M >= 3")
    if scheme not in SCHEMES:
        raise ConfigError(f"scheme must be one of {SCHEMES}")
    coeff = -params.e ** 2 / params.L
    if scheme == "spectral":
        if not wrap or grid.boundary != "periodic":
            raise ConfigError("spectral zero-mode derivative supports the periodic closure only")
        return sparse.csr_matrix(coeff * _spectral_second_derivative(grid.M, grid.period))
    return (coeff / grid.h ** 2 * _second_difference(grid.M, wrap)).tocsr()


def zero_mode_field_operator(grid: GaugeGrid, params: ModelParams) -> sparse.csr_matrix:
    """``E = -i (e^2/L) d/da`` by the periodic central first difference."""
    M, h = grid.M, grid.h
    d1 = sparse.diags([np.ones(M - 1), -np.ones(M - 1)], [1, -1], shape=(M, M), format="lil")
    d1[M - 1, 0] = 1.0
    d1[0, M - 1] = -1.0
    return (-1j * params.e ** 2 / params.L / (2 * h) * d1.tocsr()).tocsr()


def fermion_block(sector: BasisSector, params: ModelParams, a: float,
                  coupling_mode: str = "krf2") -> sparse.csr_matrix:
    """Dirac part of the Hamiltonian at fixed ``a`` (no Coulomb term)."""
    p = params.with_(a=a)
    if coupling_mode == "krf2":
        return build_HDa_reg(sector, p).matrix
    n = sector.dim
    ident = sparse.identity(n, dtype=complex, format="csr")
    kinetic = build_HD0_reg(sector, p.with_(a=0.0)).matrix
    if coupling_mode == "literal-ham":
        # sum |k|(b†b + c†c) + a*(sum b†b - sum c†c) + a^2 L/(2 pi) + a
        return (kinetic + a * build_Q(sector).matrix
                + (a * a * params.L / (2 * math.pi) + a) * ident).tocsr()
    if coupling_mode == "naive":
        return (kinetic - a * build_Q5_naive(sector).matrix
                - (a * a * params.L / (2 * math.pi)) * ident).tocsr()
    raise ConfigError(f"coupling_mode must be one of {COUPLING_MODES}, got {coupling_mode!r}")


@dataclass(frozen=True)
class FullHamiltonian:
    grid: GaugeGrid
    sector: BasisSector
    matrix: sparse.csr_matrix
    params: ModelParams
    coupling_mode: str
    m_max: int
    scheme: str
    coulomb_vacuum: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_residual(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        scale = max(1.0, float(abs(self.matrix).max()))
        return (float(abs(diff).max()) if diff.nnz else 0.0) / scale

    def lift(self, op: sparse.spmatrix) -> sparse.csr_matrix:
        """Fermionic operator acting identically on every grid block."""
        return sparse.kron(sparse.identity(self.grid.M, format="csr"), op, format="csr")


def build_full_hamiltonian(params: ModelParams, sector: BasisSector, m_max: int | None = None,
                           *, coupling_mode: str = "krf2", boundary: str = "gamma-twisted",
                           scheme: str = "fd", include_kinetic: bool = True) -> FullHamiltonian:
    """Assemble the gauge-invariant Hamiltonian on ``grid x sector``.

    Blocks ``j`` carry the Dirac operator at ``a_j`` plus the vacuum-subtracted
    Coulomb term; the zero-mode kinetic term couples neighbouring blocks.
    """
    if sector.charge != 0:
        raise ConfigError("the Hamiltonian acts on the charge-0 sector")
    if coupling_mode not in COUPLING_MODES:
        raise ConfigError(f"coupling_mode must be one of {COUPLING_MODES}, got {coupling_mode!r}")
    grid = GaugeGrid(params.M_grid, params.L, boundary)
    if m_max is None:
        m_max = default_m_max(sector)
    coulomb = build_coulomb(sector, params, m_max)
    n = sector.dim
    blocks = [fermion_block(sector, params, a, coupling_mode) + coulomb.matrix for a in grid.points]
    H = sparse.block_diag(blocks, format="csr")

    if include_kinetic and params.e != 0:
        twisted = boundary == "gamma-twisted"
        K = build_zero_mode_kinetic(grid, params, scheme, wrap=not twisted)
        H = H + sparse.kron(K, sparse.identity(n, format="csr"), format="csr")
        if twisted:
            g = gamma_matrix(sector, FORWARD).matrix
            c = -params.e ** 2 / params.L / grid.h ** 2
            M = grid.M
            corner = sparse.lil_matrix((M, M))
            corner[M - 1, 0] = 1.0
            H = H + c * sparse.kron(corner, g.conj().T, format="csr")
            H = H + c * sparse.kron(corner.T, g, format="csr")
    H = H.tocsr()
    H.sum_duplicates()
    H.eliminate_zeros()
    full = FullHamiltonian(grid, sector, H, params, coupling_mode, m_max, scheme,
                           coulomb.params["vacuum_energy"])
    res = full.hermiticity_residual()
    if res > 1e-12:
        raise AssertionError(f"assembled Hamiltonian not Hermitian (residual {res:.3g})")
    return full


def _norm_estimate(A) -> float:
    if sparse.issparse(A):
        return float(abs(A).sum(axis=1).max()) if A.nnz else 0.0
    return float(np.abs(A).sum(axis=1).max()) if A.size else 0.0


def spectrum(H, k: int = 1, method: str = "auto", tol: float = 1e-8,
             maxiter: int | None = None) -> list[tuple[float, float]]:
    """Lowest ``k`` eigenvalues with residual norms ``||Hv - lambda v||``.

    ``method="auto"`` uses a dense solve up to dimension 4000 and Lanczos
    (ARPACK) above. Raises :class:`SolverError` if a residual exceeds
    ``tol * ||H||``.
    """
    A = H.matrix if isinstance(H, FullHamiltonian) else H
    n = A.shape[0]
    if not 1 <= k <= n:
        raise ConfigError(f"k must lie in [1, {n}], got {k}")
    if method == "auto":
        method = "dense" if n <= DENSE_CROSSOVER else "iterative"
    if method == "iterative" and k >= n - 1:
        method = "dense"
    if method == "dense":
        dense = A.toarray() if sparse.issparse(A) else np.asarray(A)
        w, v = linalg.eigh(dense, subset_by_index=[0, k - 1])
    elif method == "iterative":
        As = sparse.csr_matrix(A)
        try:
            w, v = splinalg.eigsh(As, k=k, which="SA", tol=0, maxiter=maxiter)
        except splinalg.ArpackNoConvergence as exc:
            raise SolverError("Lanczos did not converge", exc.eigenvalues) from None
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    else:
        raise ConfigError(f"unknown method {method!r}")
    norm = max(_norm_estimate(A), 1e-300)
    out = []
    for i in range(k):
        r = A @ v[:, i] - w[i] * v[:, i]
        out.append((float(w[i]), float(np.linalg.norm(r))))
    worst = max(r for _, r in out)
    if worst > tol * norm:
        raise SolverError(f"residual {worst:.3g} exceeds {tol:g} * ||H||", [r for _, r in out])
    return out


def gauge_invariance_full(params: ModelParams, sector: BasisSector, *,
                          coupling_mode: str = "krf2", a_values=None,
                          include_coulomb: bool = False, tol: float = 1e-10) -> dict:
    """Spectral check of ``H(a)`` against ``G H(a + 2*pi/L) G^dagger`` on the range of ``G``.

    Sorted eigenvalues of the two restricted blocks must agree elementwise
    within ``tol`` for every ``a`` in ``a_values`` (default: ``params.a``).
    """
    if sector.charge != 0:
        raise ConfigError("gauge invariance is checked on the charge-0 sector")
    gam = gamma_matrix(sector, FORWARD)
    g = gam.matrix
    mask = gam.range_mask
    idx = np.flatnonzero(mask)
    a_values = [params.a] if a_values is None else list(a_values)
    coul = build_coulomb(sector, params).matrix if include_coulomb else None
    worst, witness = 0.0, None
    for a in a_values:
        h_a = fermion_block(sector, params, a, coupling_mode)
        h_s = fermion_block(sector, params, a + 2 * math.pi / params.L, coupling_mode)
        if coul is not None:
            h_a = h_a + coul
            h_s = h_s + coul
        lhs = (g @ h_s @ g.conj().T).toarray()[np.ix_(idx, idx)]
        rhs = h_a.toarray()[np.ix_(idx, idx)]
        ev_l = np.linalg.eigvalsh(lhs)
        ev_r = np.linalg.eigvalsh(rhs)
        diff = np.abs(ev_l - ev_r)
        if diff.size and diff.max() > worst:
            worst = float(diff.max())
            witness = {"a": a, "eigenvalue": float(ev_r[int(np.argmax(diff))]),
                       "transformed": float(ev_l[int(np.argmax(diff))])}
    return {
        "identity": f"spectrum H(a) == spectrum G H(a+2pi/L) G^dag [{coupling_mode}]",
        "residual": worst,
        "interior_dim": int(mask.sum()),
        "boundary_dim": int(sector.dim - mask.sum()),
        "passed": bool(worst <= tol),
        "witness": witness,
    }
