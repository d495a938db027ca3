import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinmarket import (
    FieldSchedule,
    MarketState,
    ModelParams,
    SpinSpace,
    UndefinedReturnError,
    agent_energy,
    build_fcc,
    count_sides,
    gross_return,
    price,
    total_energy,
)
from conftest import random_spins

spaces = st.sampled_from([SpinSpace.discrete(1), SpinSpace.discrete(2), SpinSpace.continuous()])


def brute_total_energy(spins, graph, J, a, H):
    n = spins.size
    imb = (np.sum(spins > 0) - np.sum(spins < 0)) / n
    e = 0.0
    for i, j in graph.edges():
        e -= J * spins[i] * spins[j]
    return e + a * imb * spins.sum() - H * spins.sum()


def test_agent_energy_by_hand(ring4):
    # site 0 has neighbours 1 and 3; imbalance (2 up, 1 down) / 4
    st_ = MarketState(np.array([1.0, 1.0, 0.0, -1.0]))
    p = ModelParams(SpinSpace.discrete(1), J=2.0, a=4.0, T=1.0)
    # value * (-J*(1 - 1) + a*0.25 - H)
    assert agent_energy(st_, 0, 1.0, ring4, p, H=0.5) == pytest.approx(1.0 * (0.0 + 1.0 - 0.5))
    assert agent_energy(st_, 2, -1.0, ring4, p, H=0.0) == pytest.approx(-1.0 * (-2.0 * 0.0 + 1.0))
    with pytest.raises(ValueError):
        agent_energy(st_, 0, 2.0, ring4, p, H=0.0)


@given(spaces, st.integers(0, 2**32 - 1), st.floats(0, 5), st.floats(-1, 1))
def test_total_energy_matches_bond_sum(space, seed, a, H):
    g = build_fcc(2)
    rng = np.random.default_rng(seed)
    s = random_spins(rng, g.n_sites, space)
    p = ModelParams(space, J=1.3, a=a, T=1.0)
    got = total_energy(MarketState(s), g, p, H)
    assert got == pytest.approx(brute_total_energy(s, g, 1.3, a, H), abs=1e-9)


@given(spaces, st.integers(0, 2**32 - 1), st.floats(-1, 1))
def test_single_move_energy_change_without_price_coupling(space, seed, H):
    # with a = 0 the change of total energy equals the change of the mover's own energy
    g = build_fcc(2)
    rng = np.random.default_rng(seed)
    s = random_spins(rng, g.n_sites, space)
    p = ModelParams(space, J=1.0, a=0.0, T=1.0)
    i = int(rng.integers(g.n_sites))
    new = random_spins(rng, 1, space)[0]
    before = MarketState(s)
    s2 = s.copy()
    s2[i] = new
    dtot = total_energy(MarketState(s2), g, p, H) - total_energy(before, g, p, H)
    dloc = agent_energy(before, i, new, g, p, H) - agent_energy(before, i, s[i], g, p, H)
    assert dtot == pytest.approx(dloc, abs=1e-9)


def test_count_sides_uses_sign():
    assert count_sides([0.3, -0.01, 0.0, 2.0]) == (0.5, 0.25)
    assert count_sides([]) == (0.0, 0.0)


def test_market_state_caches_counts():
    st_ = MarketState(np.array([1.0, -1.0, -1.0, 0.0]))
    assert st_.imbalance == pytest.approx(-0.25)
    assert st_.is_consistent()
    c = st_.copy()
    c.spins[0] = -1.0
    assert st_.spins[0] == 1.0


def test_price_and_return():
    assert price(0.3, 0.3, a=3.0, A=3.0) == 3.0
    assert price(0.6, 0.4, a=3.0, A=3.0) == pytest.approx(3.6)
    assert gross_return(3.3, 3.0) == pytest.approx(0.1)
    np.testing.assert_allclose(gross_return(np.array([2.0, 4.0]), np.array([1.0, 2.0])), [1.0, 1.0])
    with pytest.raises(UndefinedReturnError):
        gross_return(1.0, 0.0)


def test_spin_space():
    s2 = SpinSpace.discrete(2)
    assert s2.states().tolist() == [-2, -1, 0, 1, 2]
    assert s2.contains(2.0) and not s2.contains(0.5) and not s2.contains(3)
    c = SpinSpace.continuous()
    assert c.contains(-1.0) and c.contains(0.123) and not c.contains(1.01)
    with pytest.raises(ValueError):
        c.states()
    with pytest.raises(ValueError):
        SpinSpace.discrete(0)


def test_field_schedule_half_open():
    f = FieldSchedule.pulse(400, 600, 0.2)
    assert f.field_at(399) == 0.0
    assert f.field_at(400) == 0.2
    assert f.field_at(599) == 0.2
    assert f.field_at(600) == 0.0
    arr = f.as_array(700)
    assert arr.size == 701 and arr.sum() == pytest.approx(200 * 0.2)
    with pytest.raises(ValueError):
        FieldSchedule(((0, 10, 1.0), (5, 20, 1.0)))
    with pytest.raises(ValueError):
        FieldSchedule(((10, 10, 1.0),))


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(T=0.0)
    with pytest.raises(ValueError):
        ModelParams(a=-1.0)
