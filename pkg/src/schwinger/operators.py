r"""Sparse matrices of the regularized fermion bilinears on a basis sector.

All matrices are complex CSR over a :class:`~schwinger.fock.BasisSector`.
Momenta are kept as integer wave numbers and multiplied by ``2*pi/L`` only
when the matrix is formed. Point splitting leaves two c-number anomalies::

    Q5_reg   = Q5 - a*L/pi - 1
    H_D0_reg = sum |k_n| (b†_n b_n + c†_n c_n) - a^2 L / (2*pi)
    H_Da_reg = H_D0_reg - a * Q5_reg

Off-diagonal current modes are assembled from their four ladder blocks.
Terms that need a mode outside the window are dropped, and every nonzero
action lost this way is counted per basis state (``leak_window``); images
beyond the particle cap are counted in ``leak_cap``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np
from scipy import sparse

from schwinger.fock import (
    BasisSector,
    FockState,
    Ladder,
    act_on_word,
    bann,
    bdag,
    cann,
    cdag,
    in_window,
    slot,
)
from schwinger.params import ConfigError, ModelParams


@dataclass(frozen=True)
class OperatorMatrix:
    sector: BasisSector
    matrix: sparse.csr_matrix
    provenance: str
    params: dict = field(default_factory=dict)
    leak_window: np.ndarray | None = None
    leak_cap: np.ndarray | None = None

    @property
    def shape(self):
        return self.matrix.shape

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def expectation(self, state: FockState) -> complex:
        i = self.sector.index_of(state)
        if i is None:
            raise KeyError(f"{state} not in sector")
        return complex(self.matrix[i, i])

    @property
    def leakage(self) -> dict:
        w = 0 if self.leak_window is None else int(self.leak_window.sum())
        c = 0 if self.leak_cap is None else int(self.leak_cap.sum())
        return {"window": w, "cap": c}

    def interior_mask(self) -> np.ndarray:
        """States on which no term of this operator was clipped."""
        mask = np.ones(self.sector.dim, dtype=bool)
        for leak in (self.leak_window, self.leak_cap):
            if leak is not None:
                mask &= leak == 0
        return mask

    def hermiticity_residual(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def dump(self) -> str:
        params = " ".join(f"{k}={v!r}" for k, v in sorted(self.params.items()))
        lines = [
            f"# provenance={self.provenance} dim={self.sector.dim} charge={self.sector.charge} "
            f"N_cut={self.sector.n_cut} max_particles={self.sector.max_particles} {params}".rstrip()
        ]
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        for k in order:
            v = coo.data[k]
            lines.append(f"{coo.row[k]} {coo.col[k]} {v.real:.17g} {v.imag:.17g}")
        return "\n".join(lines) + "\n"


def ladder_matrix(space: BasisSector, op: Ladder) -> sparse.csr_matrix:
    """Matrix of one ladder operator on a Fock space; images beyond the particle cap are dropped.

    ``space`` is normally the all-charge space from
    :func:`~schwinger.fock.make_fock_space`.
    """
    if not in_window(op.n, space.n_cut):
        raise ConfigError(f"{op} outside window [-{space.n_cut}, {space.n_cut}]")
    sl = slot(op.species, op.n, space.n_cut)
    rows, cols, vals = [], [], []
    for i, state in enumerate(space.states):
        out = act_on_word(state.word, sl, op.dagger)
        if out is None:
            continue
        j = space.index_of(FockState.from_word(out[1], space.n_cut))
        if j is not None:
            rows.append(j)
            cols.append(i)
            vals.append(out[0])
    n = space.dim
    return sparse.csr_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(n, n))


def _diag(sector: BasisSector, values: np.ndarray) -> sparse.csr_matrix:
    return sparse.diags(np.asarray(values, dtype=complex), 0, shape=(sector.dim, sector.dim),
                        format="csr")


def _counts(sector: BasisSector):
    """Per-state occupation counts used by all diagonal operators."""
    fb, ab = sector.occupation_arrays()
    n = sector.modes()
    return fb, ab, n


def _chirality_counts(sector: BasisSector) -> np.ndarray:
    fb, ab, n = _counts(sector)
    wb = np.where(n >= 0, 1, -1)
    wc = np.where(n > 0, -1, 1)
    return fb @ wb + ab @ wc


def _abs_momentum_counts(sector: BasisSector) -> np.ndarray:
    fb, ab, n = _counts(sector)
    return (fb.astype(np.int64) + ab) @ np.abs(n)


def _params_dict(params: ModelParams, *keys) -> dict:
    return {k: getattr(params, k) for k in keys}


def build_Q(sector: BasisSector) -> OperatorMatrix:
    """Charge ``sum b†b - c†c``."""
    fb, ab, _ = _counts(sector)
    q = fb.sum(axis=1) - ab.sum(axis=1)
    return OperatorMatrix(sector, _diag(sector, q), "charge Q")


def build_Q5_naive(sector: BasisSector) -> OperatorMatrix:
    """Unregularized chirality: +1 per b_{n>=0}, -1 per b_{n<0}, -1 per c_{n>0}, +1 per c_{n<=0}."""
    return OperatorMatrix(sector, _diag(sector, _chirality_counts(sector)), "naive axial charge Q5")


def axial_anomaly_constant(a: float, L: float) -> float:
    return -a * L / math.pi - 1.0


def kinetic_anomaly_constant(a: float, L: float) -> float:
    return -a * a * L / (2 * math.pi)


def build_Q5_reg(sector: BasisSector, params: ModelParams) -> OperatorMatrix:
    vals = _chirality_counts(sector) + axial_anomaly_constant(params.a, params.L)
    return OperatorMatrix(sector, _diag(sector, vals), "regularized axial charge Q5_reg",
                          _params_dict(params, "a", "L"))


def build_HD0_reg(sector: BasisSector, params: ModelParams) -> OperatorMatrix:
    vals = params.k_unit * _abs_momentum_counts(sector) + kinetic_anomaly_constant(params.a, params.L)
    return OperatorMatrix(sector, _diag(sector, vals), "regularized kinetic energy H_D0_reg",
                          _params_dict(params, "a", "L"))


def _hda_mode_by_mode(sector: BasisSector, params: ModelParams) -> np.ndarray:
    """Diagonal of H_Da_reg from per-mode energies (k_n -+ a) with signs by chirality."""
    fb, ab, n = _counts(sector)
    a, L = params.a, params.L
    k = params.k_unit * n
    eb = np.where(n >= 0, k - a, -(k - a))
    ec = np.where(n > 0, k + a, -(k + a))
    return fb @ eb + ab @ ec + a * a * L / (2 * math.pi) + a


def build_HDa_reg(sector: BasisSector, params: ModelParams) -> OperatorMatrix:
    """Dirac Hamiltonian in the background ``a``: ``H_D0_reg - a * Q5_reg``.

    Also assembles the mode-by-mode form and requires entrywise agreement.
    """
    h0 = build_HD0_reg(sector, params).matrix.diagonal()
    q5 = build_Q5_reg(sector, params).matrix.diagonal()
    vals = h0 - params.a * q5
    alt = _hda_mode_by_mode(sector, params)
    scale = max(1.0, float(np.max(np.abs(vals))) if vals.size else 1.0)
    if vals.size and np.max(np.abs(vals - alt)) > 64 * np.finfo(float).eps * scale:
        raise AssertionError("H_Da_reg assemblies disagree")
    return OperatorMatrix(sector, _diag(sector, vals), "regularized Dirac Hamiltonian H_Da_reg",
                          _params_dict(params, "a", "L"))


# Current modes. Each block: (word builder, index relation, (region_a, sign), (region_b, sign)).

def _block_specs(m: int, axial: bool):
    s = -1 if axial else 1
    return [
        # b†_{n'} b_n, n' = n - m
        (lambda n, p: [bdag(p), bann(n)], lambda n: n - m,
         ((lambda n, p: n >= 0 and p >= 0), 1), ((lambda n, p: n < 0 and p < 0), s)),
        # b†_{n'} c†_n, n' = -m - n
        (lambda n, p: [bdag(p), cdag(n)], lambda n: -m - n,
         ((lambda n, p: n > 0 and p >= 0), 1), ((lambda n, p: n <= 0 and p < 0), s)),
        # c_{n'} b_n, n' = m - n
        (lambda n, p: [cann(p), bann(n)], lambda n: m - n,
         ((lambda n, p: n >= 0 and p > 0), 1), ((lambda n, p: n < 0 and p <= 0), s)),
        # c†_n c_{n'}, n' = m + n
        (lambda n, p: [cdag(n), cann(p)], lambda n: m + n,
         ((lambda n, p: n <= 0 and p <= 0), 1 if axial else -1),
         ((lambda n, p: n > 0 and p > 0), -1)),
    ]


def current_terms(m: int, n_cut: int, axial: bool) -> Iterator[tuple[int, list[Ladder]]]:
    """Signed ladder words of ``L * j(m)``, including words that leave the window."""
    reach = n_cut + abs(m) + 1
    for word_of, partner, *regions in _block_specs(m, axial):
        for n in range(-reach, reach + 1):
            p = partner(n)
            for pred, sign in regions:
                if pred(n, p):
                    yield sign, word_of(n, p)


def _apply_terms(sector: BasisSector, terms: list[tuple[complex, list[Ladder]]]):
    """Accumulate ``sum coeff * word`` into a sector matrix, counting clipped actions."""
    n_cut = sector.n_cut
    rows, cols, vals = [], [], []
    leak_window = np.zeros(sector.dim, dtype=np.int64)
    leak_cap = np.zeros(sector.dim, dtype=np.int64)
    compiled = []
    for coeff, word in terms:
        ops = []
        clipped = False
        for op in reversed(word):
            if in_window(op.n, n_cut):
                ops.append((slot(op.species, op.n, n_cut), op.dagger))
            elif op.dagger:
                # creating outside the window: nonzero in the full space
                clipped = True
            else:
                # out-of-window modes are empty; the term vanishes
                ops = None
                break
        if ops is not None:
            compiled.append((coeff, ops, clipped))
    for i, state in enumerate(sector.states):
        w0 = state.word
        for coeff, ops, clipped in compiled:
            w, sign = w0, 1
            for sl, dag in ops:
                out = act_on_word(w, sl, dag)
                if out is None:
                    break
                s, w = out
                sign *= s
            else:
                if clipped:
                    leak_window[i] += 1
                    continue
                j = sector.index_of(FockState.from_word(w, n_cut))
                if j is None:
                    leak_cap[i] += 1
                    continue
                rows.append(j)
                cols.append(i)
                vals.append(coeff * sign)
    n = sector.dim
    mat = sparse.csr_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(n, n))
    mat.sum_duplicates()
    mat.eliminate_zeros()
    return mat, leak_window, leak_cap


def _check_mode(sector: BasisSector, m) -> int:
    if isinstance(m, bool) or int(m) != m:
        raise ConfigError(f"current mode must be an integer, got {m!r}")
    m = int(m)
    if abs(m) > 2 * sector.n_cut:
        raise ConfigError(f"|m|={abs(m)} exceeds the largest representable transfer {2 * sector.n_cut}")
    return m


def build_j0_mode(sector: BasisSector, m: int, L: float = 2 * math.pi) -> OperatorMatrix:
    """Fourier mode ``j0(m)`` of the charge density; ``j0(0) = Q / L``."""
    m = _check_mode(sector, m)
    if m == 0:
        q = build_Q(sector).matrix / L
        return OperatorMatrix(sector, q.tocsr(), "charge density mode j0(0) = Q/L", {"L": L, "m": 0})
    terms = [(sign / L, word) for sign, word in current_terms(m, sector.n_cut, axial=False)]
    mat, lw, lc = _apply_terms(sector, terms)
    return OperatorMatrix(sector, mat, f"charge density mode j0({m})", {"L": L, "m": m}, lw, lc)


def build_j1_mode(sector: BasisSector, m: int, params: ModelParams) -> OperatorMatrix:
    """Fourier mode ``j1(m)`` of the axial density; ``j1(0) = Q5_reg / L``, no constant for m != 0."""
    m = _check_mode(sector, m)
    L = params.L
    if m == 0:
        q5 = build_Q5_reg(sector, params).matrix / L
        return OperatorMatrix(sector, q5.tocsr(), "axial density mode j1(0) = Q5_reg/L",
                              {"L": L, "a": params.a, "m": 0})
    terms = [(sign / L, word) for sign, word in current_terms(m, sector.n_cut, axial=True)]
    mat, lw, lc = _apply_terms(sector, terms)
    return OperatorMatrix(sector, mat, f"axial density mode j1({m})", {"L": L, "m": m}, lw, lc)


def default_m_max(sector: BasisSector) -> int:
    return 2 * sector.n_cut


def coulomb_unsubtracted(sector: BasisSector, params: ModelParams, m_max: int | None = None):
    if m_max is None:
        m_max = default_m_max(sector)
    if not 1 <= m_max <= 2 * sector.n_cut:
        raise ConfigError(f"m_max must lie in [1, {2 * sector.n_cut}], got {m_max}")
    L, e = params.L, params.e
    n = sector.dim
    total = sparse.csr_matrix((n, n), dtype=complex)
    lw = np.zeros(n, dtype=np.int64)
    lc = np.zeros(n, dtype=np.int64)
    for m in range(-m_max, m_max + 1):
        if m == 0:
            continue
        jp = build_j0_mode(sector, m, L)
        jm = build_j0_mode(sector, -m, L)
        k2 = (2 * math.pi * m / L) ** 2
        total = total + (e * e * L / 2 / k2) * (jm.matrix @ jp.matrix)
        lw += jp.leak_window
        lc += jp.leak_cap
    return total.tocsr(), lw, lc


def build_coulomb(sector: BasisSector, params: ModelParams, m_max: int | None = None) -> OperatorMatrix:
    """Coulomb energy ``(e^2 L/2) sum_{0<|m|<=m_max} j0(-m) j0(m) / k_m^2`` minus its vacuum value.

    Products are taken within the sector. The vacuum value is computed in
    the same truncation and subtracted as a multiple of the identity.
    """
    if m_max is None:
        m_max = default_m_max(sector)
    mat, lw, lc = coulomb_unsubtracted(sector, params, m_max)
    vac_state = FockState.vacuum(sector.n_cut)
    i0 = sector.index_of(vac_state)
    vac = 0.0
    if i0 is not None:
        vac = float(mat[i0, i0].real)
    elif sector.charge == 0:
        raise ConfigError("charge-0 sector lacks the vacuum")
    n = sector.dim
    mat = (mat - vac * sparse.identity(n, dtype=complex, format="csr")).tocsr()
    mat.eliminate_zeros()
    return OperatorMatrix(sector, mat, "Coulomb energy (vacuum subtracted)",
                          {"L": params.L, "e": params.e, "m_max": m_max, "vacuum_energy": vac},
                          lw, lc)


BUILDERS: dict[str, Callable] = {
    "Q": lambda sector, params, m: build_Q(sector),
    "Q5": lambda sector, params, m: build_Q5_naive(sector),
    "Q5_reg": lambda sector, params, m: build_Q5_reg(sector, params),
    "HD0_reg": lambda sector, params, m: build_HD0_reg(sector, params),
    "HDa_reg": lambda sector, params, m: build_HDa_reg(sector, params),
    "j0": lambda sector, params, m: build_j0_mode(sector, m, params.L),
    "j1": lambda sector, params, m: build_j1_mode(sector, m, params),
    "coulomb": lambda sector, params, m: build_coulomb(sector, params, m or None),
}
