"""Large gauge transformation as a signed partial permutation of the basis.

The unitary ``G`` implementing ``psi -> psi * exp(2*pi*i*x/L)`` acts on
ladder operators by a shift with pair creation at the spectral boundary::

    G b†_n G^-1 = b†_{n-1}  (n != 0)      G b†_0 G^-1 = c_1
    G c†_n G^-1 = c†_{n+1}  (n != 0)      G c†_0 G^-1 = b_{-1}
    G Omega_0   = b†_{-1} c†_1 Omega_0

so that ``G Omega_P = Omega_{P-1}``. A basis state is written as its
canonical creation word, each factor is conjugated, and the word is applied
to ``G Omega_0`` with exact fermionic signs. The phase on excited states is
fixed by this construction; it is a convention.

Orientation: with this ``G`` the naive chirality obeys ``Q5 G = G (Q5 - 2)``
and the regularized operators satisfy ``G X(a + 2*pi/L) G^-1 = X(a)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from schwinger.fock import (
    BasisSector,
    FockState,
    Ladder,
    TruncationError,
    apply_word,
    bann,
    bdag,
    cann,
    cdag,
    in_window,
)
from schwinger.operators import (
    OperatorMatrix,
    build_HDa_reg,
    build_Q5_naive,
    build_Q5_reg,
)
from schwinger.params import ConfigError, ModelParams

FORWARD = "forward"
INVERSE = "inverse"


def _conjugate(op: Ladder, direction: str) -> Ladder:
    """Image of a creation operator under conjugation by G (or G^-1)."""
    assert op.dagger
    n = op.n
    if direction == FORWARD:
        if op.species == "b":
            return cann(1) if n == 0 else bdag(n - 1)
        return bann(-1) if n == 0 else cdag(n + 1)
    if op.species == "b":
        return cann(0) if n == -1 else bdag(n + 1)
    return bann(0) if n == 1 else cdag(n - 1)


def _image_of_vacuum(direction: str) -> list[Ladder]:
    if direction == FORWARD:
        return [bdag(-1), cdag(1)]
    return [bdag(0), cdag(0)]


def _check_direction(direction: str) -> str:
    if direction not in (FORWARD, INVERSE):
        raise ValueError(f"direction must be {FORWARD!r} or {INVERSE!r}, got {direction!r}")
    return direction


def gamma_apply(state: FockState, direction: str = FORWARD) -> tuple[int, FockState]:
    """Apply G (``"forward"``) or G^-1 (``"inverse"``) to a basis state.

    Raises :class:`TruncationError` when a shifted mode leaves the window.
    A zero result cannot happen for a unitary map and raises RuntimeError.
    """
    _check_direction(direction)
    word = [_conjugate(op, direction) for op in state.creation_word()]
    word += _image_of_vacuum(direction)
    for op in word:
        if not in_window(op.n, state.n_cut):
            raise TruncationError(f"{op} leaves window N_cut={state.n_cut}")
    out = apply_word(FockState.vacuum(state.n_cut), word)
    if out is None:
        raise RuntimeError(f"gauge map annihilated {state}; sign bookkeeping is broken")
    return out


@dataclass(frozen=True)
class GaugeUnitary:
    """Matrix of G or G^-1 on a charge-0 sector.

    ``mapping[i]`` is ``(sign, j)`` when the image of state ``i`` is basis
    state ``j``, else ``None``; ``boundary`` lists states whose image leaves
    the window or the particle cap.
    """

    sector: BasisSector
    direction: str
    mapping: tuple
    matrix: sparse.csr_matrix
    boundary: tuple[int, ...]

    @property
    def domain_mask(self) -> np.ndarray:
        return np.array([m is not None for m in self.mapping])

    @property
    def range_mask(self) -> np.ndarray:
        mask = np.zeros(self.sector.dim, dtype=bool)
        for m in self.mapping:
            if m is not None:
                mask[m[1]] = True
        return mask


def gamma_matrix(sector: BasisSector, direction: str = FORWARD) -> GaugeUnitary:
    """Signed partial permutation ``G[j, i] = sign`` for ``G|i> = sign |j>``."""
    _check_direction(direction)
    if sector.charge != 0:
        raise ConfigError("the gauge map is built on the charge-0 sector")
    mapping, boundary = [], []
    rows, cols, vals = [], [], []
    for i, s in enumerate(sector.states):
        try:
            sign, t = gamma_apply(s, direction)
        except TruncationError:
            mapping.append(None)
            boundary.append(i)
            continue
        j = sector.index_of(t)
        if j is None:
            mapping.append(None)
            boundary.append(i)
            continue
        mapping.append((sign, j))
        rows.append(j)
        cols.append(i)
        vals.append(sign)
    n = sector.dim
    mat = sparse.csr_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(n, n))
    return GaugeUnitary(sector, direction, tuple(mapping), mat, tuple(boundary))


def _restricted_residual(diff, mask: np.ndarray) -> tuple[float, int | None]:
    sub = diff.tocsr()[mask][:, mask]
    if sub.nnz == 0:
        return 0.0, None
    absval = abs(sub).tocoo()
    k = int(np.argmax(absval.data))
    witness = int(np.flatnonzero(mask)[absval.col[k]])
    return float(absval.data[k]), witness


def _report(identity: str, residual: float, witness, sector, mask, tol: float) -> dict:
    return {
        "identity": identity,
        "residual": residual,
        "interior_dim": int(mask.sum()),
        "boundary_dim": int(sector.dim - mask.sum()),
        "passed": bool(residual <= tol),
        "witness": None if witness is None else str(sector.states[witness]),
    }


def verify_chirality_shift(sector: BasisSector, literal: bool = False) -> dict:
    """Check that G lowers the naive chirality by two.

    Default form: ``Q5 G^-1 - G^-1 (Q5 + 2) = 0`` on states where G^-1 is
    defined (equivalently ``Q5 G = G (Q5 - 2)``). ``literal=True`` evaluates
    ``Q5 G^-1 - G^-1 (Q5 - 2)`` instead, which is nonzero on every state.
    """
    ginv = gamma_matrix(sector, INVERSE)
    q5 = build_Q5_naive(sector).matrix
    ident = sparse.identity(sector.dim, dtype=complex, format="csr")
    shift = -2.0 if literal else 2.0
    diff = q5 @ ginv.matrix - ginv.matrix @ (q5 + shift * ident)
    mask = ginv.domain_mask
    res, wit = _restricted_residual(diff, mask)
    name = "Q5 G^-1 = G^-1 (Q5 - 2)" if literal else "Q5 G^-1 = G^-1 (Q5 + 2)"
    return _report(name, res, wit, sector, mask, 0.0)


def _conjugation_residual(sector, gam: GaugeUnitary, shifted: OperatorMatrix,
                          unshifted: OperatorMatrix, literal: bool):
    g = gam.matrix
    if literal:
        # G^dagger X G on states where G is defined
        lhs = g.conj().T @ shifted.matrix @ g
        mask = gam.domain_mask
    else:
        lhs = g @ shifted.matrix @ g.conj().T
        mask = gam.range_mask
    diff = lhs - unshifted.matrix
    res, wit = _restricted_residual(diff, mask)
    scale = max(1.0, float(abs(unshifted.matrix).max()) if unshifted.matrix.nnz else 1.0)
    return res, wit, mask, scale


def verify_gauge_invariance(sector: BasisSector, params: ModelParams, *, naive: bool = False,
                            literal: bool = False, tol: float = 1e-12) -> list[dict]:
    """Invariance of Q5_reg and H_D^{a,reg} under G combined with ``a -> a + 2*pi/L``.

    Checks ``G X(a + 2*pi/L) G^-1 = X(a)`` on the range of G. ``naive=True``
    substitutes the unregularized chirality (negative control);
    ``literal=True`` uses ``G^dagger X(a + 2*pi/L) G`` instead.
    Residuals are relative to ``max(1, max|X(a)|)``.
    """
    if sector.charge != 0:
        raise ConfigError("gauge invariance is checked on the charge-0 sector")
    gam = gamma_matrix(sector, FORWARD)
    shifted_params = params.with_(a=params.a + 2 * math.pi / params.L)
    reports = []
    if naive:
        pairs = [("Q5_naive", build_Q5_naive(sector), build_Q5_naive(sector))]
    else:
        pairs = [
            ("Q5_reg", build_Q5_reg(sector, shifted_params), build_Q5_reg(sector, params)),
            ("H_D_reg", build_HDa_reg(sector, shifted_params), build_HDa_reg(sector, params)),
        ]
    for name, shifted, unshifted in pairs:
        res, wit, mask, scale = _conjugation_residual(sector, gam, shifted, unshifted, literal)
        form = "G^dag X(a+2pi/L) G" if literal else "G X(a+2pi/L) G^dag"
        rep = _report(f"{form} = X(a) for {name}", res / scale, wit, sector, mask, tol)
        rep["absolute_residual"] = res
        reports.append(rep)
    return reports
