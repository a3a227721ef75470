import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schwinger import ConfigError, FockState, ModelParams, TruncationError, apply_ladder, enumerate_basis
from schwinger.fock import (
    Ladder,
    apply_word,
    bann,
    bdag,
    cann,
    cdag,
    make_fock_space,
    make_sector,
    unexcited_phase,
    unexcited_state,
)


def test_vacuum_only_without_particles():
    sector = enumerate_basis(ModelParams(N_cut=1, max_particles=0))
    assert sector.dim == 1
    assert sector.states[0] == FockState.vacuum(1)


def test_charge_zero_two_particles_by_hand():
    sector = enumerate_basis(ModelParams(N_cut=1, max_particles=2))
    expected = {FockState.vacuum(1)} | {
        FockState.from_modes([i], [j], 1) for i in (-1, 0, 1) for j in (-1, 0, 1)
    }
    assert sector.dim == 10
    assert set(sector.states) == expected


def test_charge_one_single_particles():
    sector = make_sector(1, 1, charge=1)
    assert [s.fermion_occ for s in sector.states] == [(-1,), (0,), (1,)]
    assert all(s.antifermion_occ == () for s in sector.states)


def test_unrepresentable_charge_gives_empty_sector():
    assert make_sector(1, 1, charge=3).dim == 0


def test_enumeration_matches_combinatorics():
    # dim = sum_k C(W, k)^2 over 2k <= max_particles for charge 0
    from math import comb

    for n_cut, mp in [(1, 4), (2, 3), (3, 4), (4, 4)]:
        W = 2 * n_cut + 1
        want = sum(comb(W, k) ** 2 for k in range(mp // 2 + 1))
        assert make_sector(n_cut, mp).dim == want


def test_order_is_deterministic_and_indexed():
    a = make_sector(2, 2)
    b = enumerate_basis(ModelParams(N_cut=2, max_particles=2))
    assert a.states == b.states
    for i, s in enumerate(a.states):
        assert a.index_of(s) == i
    counts = [s.n_particles for s in a.states]
    assert counts == sorted(counts)


@pytest.mark.parametrize("n_cut, mp", [(0, 2), (-1, 2), (1, -1), (1.5, 2), (1, "2")])
def test_invalid_cutoffs_rejected(n_cut, mp):
    with pytest.raises(ConfigError):
        make_sector(n_cut, mp)


def test_dump_format():
    text = make_sector(1, 2).dump().splitlines()
    assert text[0] == "# N_cut=1 max_particles=2 charge=0"
    assert text[1] == "F:{};A:{}"
    assert "F:{-1};A:{1}" in text
    assert len(text) == 11


def test_unexcited_examples():
    assert unexcited_state(0, 2) == FockState.vacuum(2)
    s = unexcited_state(-1, 2)
    assert s.fermion_occ == (-1,) and s.antifermion_occ == (1,)
    s = unexcited_state(1, 2)
    assert s.fermion_occ == (0,) and s.antifermion_occ == (0,)
    s = unexcited_state(3, 3)
    assert s.fermion_occ == (0, 1, 2) and s.antifermion_occ == (-2, -1, 0)
    s = unexcited_state(-2, 3)
    assert s.fermion_occ == (-2, -1) and s.antifermion_occ == (1, 2)
    with pytest.raises(TruncationError):
        unexcited_state(-3, 2)


def test_pair_ordered_unexcited_states_carry_plus_sign():
    for P in range(-3, 4):
        assert unexcited_phase(P, 3) == 1


def test_ladder_examples():
    vac = FockState.vacuum(2)
    assert apply_ladder(vac, bdag(0)) == (1, FockState.from_modes([0], [], 2))
    assert apply_ladder(vac, bann(0)) is None
    s0 = FockState.from_modes([0], [], 2)
    sign1, s1 = apply_ladder(s0, bdag(1))
    assert s1.fermion_occ == (0, 1)
    assert sign1 == -1  # b_0 precedes b_1
    sign2, s2 = apply_ladder(s1, bdag(-1))
    assert sign2 == 1  # no occupied slot below b_{-1}
    # destroying b_1 right after creating it on {0} gives -1 (one predecessor);
    # after b_{-1} is also filled there are two predecessors and the sign is +1
    assert apply_ladder(s1, bann(1))[0] == -1
    assert apply_ladder(s2, bann(1))[0] == 1


def test_out_of_window_is_truncation_not_zero():
    vac = FockState.vacuum(1)
    with pytest.raises(TruncationError):
        apply_ladder(vac, bdag(2))
    with pytest.raises(TruncationError):
        apply_ladder(vac, cann(-2))


def test_antifermion_sign_counts_all_fermions():
    s = FockState.from_modes([-1, 1], [], 1)
    sign, t = apply_ladder(s, cdag(-1))
    assert sign == 1 and t.antifermion_occ == (-1,)
    s = FockState.from_modes([-1], [], 1)
    assert apply_ladder(s, cdag(0))[0] == -1


def test_apply_word_acts_right_to_left():
    vac = FockState.vacuum(1)
    # the canonical product b†_1 c†_0 needs no reordering
    assert apply_word(vac, [bdag(1), cdag(0)]) == (1, FockState.from_modes([1], [0], 1))
    # c†_0 b†_1: b†_1 acts first, then c†_0 passes the occupied b_1
    assert apply_word(vac, [cdag(0), bdag(1)]) == (-1, FockState.from_modes([1], [0], 1))
    assert apply_word(vac, [bdag(1), bdag(1)]) is None


def test_all_charge_space_counts():
    from math import comb

    space = make_fock_space(1, 2)
    assert space.dim == sum(comb(6, k) for k in range(3))
    assert space.charge is None


modes = st.integers(min_value=-2, max_value=2)
species = st.sampled_from(["b", "c"])
occupations = st.sets(modes, max_size=5)


@st.composite
def states(draw):
    return FockState.from_modes(sorted(draw(occupations)), sorted(draw(occupations)), 2)


def _apply_sum(state, first, second):
    """Return {state: coefficient} for first(second(state))."""
    out = {}
    r = apply_ladder(state, second)
    if r is not None:
        s1, t = r
        r2 = apply_ladder(t, first)
        if r2 is not None:
            out[r2[1]] = out.get(r2[1], 0) + s1 * r2[0]
    return out


@settings(max_examples=300, deadline=None)
@given(states(), species, modes, st.booleans(), species, modes, st.booleans())
def test_anticommutator_on_basis_states(state, sp1, n1, d1, sp2, n2, d2):
    x, y = Ladder(sp1, n1, d1), Ladder(sp2, n2, d2)
    total = _apply_sum(state, x, y)
    for k, v in _apply_sum(state, y, x).items():
        total[k] = total.get(k, 0) + v
    total = {k: v for k, v in total.items() if v}
    if y == x.adjoint():
        assert total == {state: 1}
    else:
        assert total == {}


@settings(max_examples=200, deadline=None)
@given(states())
def test_creation_word_rebuilds_state(state):
    sign, rebuilt = apply_word(FockState.vacuum(2), state.creation_word())
    assert rebuilt == state and sign == 1
    assert FockState.from_word(state.word, 2) == state


def test_occupation_arrays_match_states():
    sector = make_sector(2, 4)
    fb, ab = sector.occupation_arrays()
    for row, s in enumerate(sector.states):
        assert tuple(np.flatnonzero(fb[row]) - 2) == s.fermion_occ
        assert tuple(np.flatnonzero(ab[row]) - 2) == s.antifermion_occ


def test_states_are_immutable():
    s = FockState.vacuum(1)
    with pytest.raises(Exception):
        s.fermion_bits = 3


def test_repeated_mode_rejected():
    with pytest.raises(ValueError):
        FockState.from_modes([0, 0], [], 1)


def test_widen_keeps_occupations():
    s = FockState.from_modes([-1, 1], [0], 1).widen(3)
    assert s.n_cut == 3 and s.fermion_occ == (-1, 1) and s.antifermion_occ == (0,)


def test_exhaustive_small_space_anticommutators():
    space_modes = [Ladder(sp, n, d) for sp in "bc" for n in (-1, 0, 1) for d in (False, True)]
    for state in make_fock_space(1, 6).states:
        for x, y in itertools.product(space_modes, repeat=2):
            total = _apply_sum(state, x, y)
            for k, v in _apply_sum(state, y, x).items():
                total[k] = total.get(k, 0) + v
            total = {k: v for k, v in total.items() if v}
            assert total == ({state: 1} if y == x.adjoint() else {})
