r"""Truncated positive-energy fermionic Fock space.

Modes carry an integer wave number ``n`` in the window ``[-N_cut, N_cut]``
(momentum ``k_n = 2*pi*n/L``) and a species: ``"b"`` for fermions, ``"c"``
for anti-fermions.

Canonical ordering
------------------
Every mode owns a slot in a single word of ``2*(2*N_cut + 1)`` bits::

    slot(b_n) = n + N_cut                       (0 .. W-1)
    slot(c_n) = W + n + N_cut                   (W .. 2W-1),   W = 2*N_cut + 1

A basis vector is the product of creation operators in ascending slot order
acting on the vacuum, so all fermion modes come first (ascending ``n``) and
then all anti-fermion modes (ascending ``n``). A ladder operator on slot
``s`` picks up ``(-1)**popcount(word & (2**s - 1))``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, NamedTuple

import numpy as np

from schwinger.params import ConfigError, ModelParams, check_positive_int

SPECIES = ("b", "c")


class TruncationError(IndexError):
    """A ladder operator or transformation left the mode window.

    Distinct from a genuine zero result (annihilating an empty mode).
    """


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _width(n_cut: int) -> int:
    return 2 * n_cut + 1


def slot(species: str, n: int, n_cut: int) -> int:
    if species == "b":
        return n + n_cut
    if species == "c":
        return _width(n_cut) + n + n_cut
    raise ValueError(f"unknown species {species!r}")


def in_window(n: int, n_cut: int) -> bool:
    return -n_cut <= n <= n_cut


class Ladder(NamedTuple):
    """One creation (``dagger=True``) or annihilation operator."""

    species: str
    n: int
    dagger: bool

    def adjoint(self) -> "Ladder":
        return Ladder(self.species, self.n, not self.dagger)

    def __str__(self):
        return f"{self.species}{'†' if self.dagger else ''}_{self.n}"


def bdag(n: int) -> Ladder:
    return Ladder("b", n, True)


def bann(n: int) -> Ladder:
    return Ladder("b", n, False)


def cdag(n: int) -> Ladder:
    return Ladder("c", n, True)


def cann(n: int) -> Ladder:
    return Ladder("c", n, False)


@dataclass(frozen=True, order=True)
class FockState:
    """Occupation bitsets for fermions and anti-fermions on a fixed window.

    Bit ``n + n_cut`` of ``fermion_bits`` (resp. ``antifermion_bits``) is set
    when ``b_n`` (resp. ``c_n``) is occupied.
    """

    fermion_bits: int
    antifermion_bits: int
    n_cut: int

    @classmethod
    def from_modes(cls, fermions: Iterable[int] = (), antifermions: Iterable[int] = (),
                   n_cut: int = 1) -> "FockState":
        fb = ab = 0
        for bits_name, modes in (("f", fermions), ("a", antifermions)):
            modes = list(modes)
            if len(set(modes)) != len(modes):
                raise ValueError(f"repeated mode in {modes} violates exclusion")
            for n in modes:
                if not in_window(n, n_cut):
                    raise TruncationError(f"mode {n} outside window [-{n_cut}, {n_cut}]")
                if bits_name == "f":
                    fb |= 1 << (n + n_cut)
                else:
                    ab |= 1 << (n + n_cut)
        return cls(fb, ab, n_cut)

    @classmethod
    def vacuum(cls, n_cut: int) -> "FockState":
        return cls(0, 0, n_cut)

    @classmethod
    def from_word(cls, word: int, n_cut: int) -> "FockState":
        w = _width(n_cut)
        return cls(word & ((1 << w) - 1), word >> w, n_cut)

    @property
    def word(self) -> int:
        return self.fermion_bits | (self.antifermion_bits << _width(self.n_cut))

    def _modes(self, bits: int) -> tuple[int, ...]:
        return tuple(i - self.n_cut for i in range(_width(self.n_cut)) if bits >> i & 1)

    @property
    def fermion_occ(self) -> tuple[int, ...]:
        return self._modes(self.fermion_bits)

    @property
    def antifermion_occ(self) -> tuple[int, ...]:
        return self._modes(self.antifermion_bits)

    @property
    def charge(self) -> int:
        return _popcount(self.fermion_bits) - _popcount(self.antifermion_bits)

    @property
    def n_particles(self) -> int:
        return _popcount(self.fermion_bits) + _popcount(self.antifermion_bits)

    def occupied(self, species: str, n: int) -> bool:
        bits = self.fermion_bits if species == "b" else self.antifermion_bits
        return in_window(n, self.n_cut) and bool(bits >> (n + self.n_cut) & 1)

    def creation_word(self) -> list[Ladder]:
        """Creation operators whose product (left to right) on the vacuum gives this state."""
        return [bdag(n) for n in self.fermion_occ] + [cdag(n) for n in self.antifermion_occ]

    def widen(self, n_cut: int) -> "FockState":
        """Same occupations on a larger window."""
        return FockState.from_modes(self.fermion_occ, self.antifermion_occ, n_cut)

    def __str__(self):
        f = ",".join(map(str, self.fermion_occ))
        a = ",".join(map(str, self.antifermion_occ))
        return f"F:{{{f}}};A:{{{a}}}"


def act_on_word(word: int, slot_index: int, dagger: bool) -> tuple[int, int] | None:
    """Ladder action on a raw occupation word; returns ``(sign, new_word)`` or None."""
    bit = 1 << slot_index
    if bool(word & bit) == dagger:
        return None
    sign = -1 if _popcount(word & (bit - 1)) & 1 else 1
    return sign, word ^ bit


def apply_ladder(state: FockState, op: Ladder) -> tuple[int, FockState] | None:
    """Apply one ladder operator to a basis state.

    Returns ``(sign, new_state)`` or ``None`` when the state is annihilated.
    Raises :class:`TruncationError` if the mode lies outside the window.
    """
    if not in_window(op.n, state.n_cut):
        raise TruncationError(f"{op} outside window [-{state.n_cut}, {state.n_cut}]")
    out = act_on_word(state.word, slot(op.species, op.n, state.n_cut), op.dagger)
    if out is None:
        return None
    sign, word = out
    return sign, FockState.from_word(word, state.n_cut)


def apply_word(state: FockState, word: Iterable[Ladder]) -> tuple[int, FockState] | None:
    """Apply a product of ladder operators; the rightmost factor acts first."""
    sign = 1
    for op in reversed(list(word)):
        out = apply_ladder(state, op)
        if out is None:
            return None
        s, state = out
        sign *= s
    return sign, state


@dataclass(frozen=True)
class BasisSector:
    """Fixed-charge basis with deterministic order and index lookup.

    ``charge=None`` marks the union of all charges (see :func:`make_fock_space`).
    """

    states: tuple[FockState, ...]
    charge: int | None
    n_cut: int
    max_particles: int
    index: dict = field(repr=False, compare=False, hash=False)

    def __len__(self):
        return len(self.states)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def width(self) -> int:
        return _width(self.n_cut)

    def index_of(self, state: FockState) -> int | None:
        return self.index.get(state)

    def __contains__(self, state) -> bool:
        return state in self.index

    @property
    def words(self) -> np.ndarray:
        return np.array([s.word for s in self.states], dtype=np.int64)

    def occupation_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Boolean arrays ``(dim, W)`` of fermion and anti-fermion occupations, column ``n + N_cut``."""
        w = self.width
        words = self.words
        cols = np.arange(w)
        fb = (words[:, None] >> cols) & 1
        ab = (words[:, None] >> (cols + w)) & 1
        return fb.astype(bool), ab.astype(bool)

    def modes(self) -> np.ndarray:
        return np.arange(-self.n_cut, self.n_cut + 1)

    def dump(self) -> str:
        header = f"# N_cut={self.n_cut} max_particles={self.max_particles} charge={self.charge}"
        return "\n".join([header, *map(str, self.states)]) + "\n"


def _validate_cutoffs(n_cut, max_particles) -> tuple[int, int]:
    n_cut = check_positive_int(n_cut, "N_cut", 1)
    max_particles = check_positive_int(max_particles, "max_particles", 0)
    return n_cut, max_particles


@lru_cache(maxsize=64)
def _enumerate(n_cut: int, max_particles: int, charge: int) -> BasisSector:
    modes = range(-n_cut, n_cut + 1)
    states = []
    for total in range(max_particles + 1):
        if (total + charge) % 2:
            continue
        nf = (total + charge) // 2
        na = total - nf
        if nf < 0 or na < 0 or nf > len(modes) or na > len(modes):
            continue
        for f in itertools.combinations(modes, nf):
            for a in itertools.combinations(modes, na):
                states.append(FockState.from_modes(f, a, n_cut))
    index = {s: i for i, s in enumerate(states)}
    return BasisSector(tuple(states), charge, n_cut, max_particles, index)


def enumerate_basis(params: ModelParams, charge: int = 0) -> BasisSector:
    """All states of the given charge within the mode window and particle cap.

    Order: total particle number ascending, then fermion modes
    lexicographically, then anti-fermion modes lexicographically. A charge
    with no admissible state yields an empty sector.
    """
    n_cut, max_particles = _validate_cutoffs(params.N_cut, params.max_particles)
    return _enumerate(n_cut, max_particles, int(charge))


def make_sector(n_cut: int, max_particles: int, charge: int = 0) -> BasisSector:
    n_cut, max_particles = _validate_cutoffs(n_cut, max_particles)
    return _enumerate(n_cut, max_particles, int(charge))


@lru_cache(maxsize=16)
def make_fock_space(n_cut: int, max_particles: int) -> BasisSector:
    """Every state with at most ``max_particles`` particles, all charges.

    Ladder operators change the charge, so their matrices live here rather
    than on a single sector. Order: particle number, then fermion modes,
    then anti-fermion modes.
    """
    n_cut, max_particles = _validate_cutoffs(n_cut, max_particles)
    modes = range(-n_cut, n_cut + 1)
    states = []
    for total in range(max_particles + 1):
        for nf in range(total + 1):
            for f in itertools.combinations(modes, nf):
                for a in itertools.combinations(modes, total - nf):
                    states.append(FockState.from_modes(f, a, n_cut))
    index = {s: i for i, s in enumerate(states)}
    return BasisSector(tuple(states), None, n_cut, max_particles, index)


def unexcited_modes(P: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Fermion and anti-fermion modes of the unexcited state with chirality ``2P``."""
    if P > 0:
        return tuple(range(P)), tuple(-i for i in range(P))
    if P < 0:
        return tuple(range(-1, P - 1, -1)), tuple(range(1, -P + 1))
    return (), ()


def unexcited_fits(P: int, n_cut: int) -> bool:
    f, a = unexcited_modes(P)
    return all(in_window(n, n_cut) for n in f + a)


def unexcited_state(P: int, n_cut: int) -> FockState:
    """Filled-block state: P >= 1 fills b_0..b_{P-1}, c_0..c_{-(P-1)}; P <= -1 fills b_{-1}..b_P, c_1..c_{-P}."""
    if not unexcited_fits(P, n_cut):
        raise TruncationError(f"unexcited state P={P} does not fit window N_cut={n_cut}")
    f, a = unexcited_modes(P)
    return FockState.from_modes(f, a, n_cut)


def unexcited_pair_word(P: int) -> list[Ladder]:
    """Creation word of the unexcited state in pair order b†c† b†c† ..., innermost pair first."""
    f, a = unexcited_modes(P)
    word = []
    for nf, na in zip(f, a):
        word += [bdag(nf), cdag(na)]
    return word


def unexcited_phase(P: int, n_cut: int) -> int:
    """Sign of the pair-ordered product relative to the canonical basis vector."""
    out = apply_word(FockState.vacuum(n_cut), unexcited_pair_word(P))
    assert out is not None
    return out[0]
