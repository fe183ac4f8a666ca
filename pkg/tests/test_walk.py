import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import dense_survival, path_sum_amplitudes
from trapwalk.errors import ConfigurationError
from trapwalk.walk import (
    HADAMARD,
    ChiralAmplitudeField,
    Chirality,
    CoinSpec,
    InitialCondition,
    absorb,
    batch_survival,
    chirality_vector,
    coin_step,
    evolve_survival,
    shift_step,
    walk_trace,
)

S2 = 1 / np.sqrt(2)
H = [[S2, S2], [S2, -S2]]


def field_with(K, site, pair):
    amps = np.zeros((K, 2), dtype=complex)
    amps[site] = pair
    return ChiralAmplitudeField(amps)


def random_unitary(rng):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


class TestCoinStep:
    def test_up_goes_to_first_column(self):
        out = coin_step(field_with(1, 0, (1, 0)))
        np.testing.assert_allclose(out.amps[0], [S2, S2], atol=1e-15)

    def test_hadamard_squared_is_identity(self):
        out = coin_step(field_with(1, 0, (S2, S2)))
        np.testing.assert_allclose(out.amps[0], [1, 0], atol=1e-15)

    def test_norm_preserved(self):
        rng = np.random.default_rng(0)
        amps = rng.normal(size=(17, 2)) + 1j * rng.normal(size=(17, 2))
        fld = ChiralAmplitudeField(amps / np.linalg.norm(amps))
        assert abs(coin_step(fld).norm() - 1) < 1e-12

    def test_non_unitary_coin_rejected(self):
        with pytest.raises(ConfigurationError):
            CoinSpec(np.array([[1, 1], [1, 1]]) / np.sqrt(2))
        with pytest.raises(ConfigurationError):
            CoinSpec(np.eye(2) * (1 + 1e-9))


class TestShiftStep:
    # sites here are 0-based: site 2 -> index 1, etc.
    def test_up_moves_right(self):
        out = shift_step(field_with(4, 1, (1, 0)))
        np.testing.assert_array_equal(out.amps, field_with(4, 2, (1, 0)).amps)

    def test_up_wraps_from_last_site(self):
        out = shift_step(field_with(4, 3, (1, 0)))
        np.testing.assert_array_equal(out.amps, field_with(4, 0, (1, 0)).amps)

    def test_down_wraps_from_first_site(self):
        out = shift_step(field_with(4, 0, (0, 1)))
        np.testing.assert_array_equal(out.amps, field_with(4, 3, (0, 1)).amps)


class TestAbsorb:
    def test_no_traps(self):
        fld = field_with(5, 2, (S2, S2))
        out, mass = absorb(fld, [])
        np.testing.assert_array_equal(out.amps, fld.amps)
        assert mass == 0

    def test_everything_on_trap(self):
        out, mass = absorb(field_with(5, 2, (S2, S2)), [2])
        assert not np.any(out.amps)
        assert mass == pytest.approx(1.0, abs=1e-15)

    def test_absorbed_quarter_after_two_steps(self):
        # K=5, trap at site 3 (index 2), walker up at site 1 (index 0)
        fld = field_with(5, 0, (1, 0))
        masses = []
        for _ in range(2):
            fld, m = absorb(shift_step(coin_step(fld)), [2])
            masses.append(m)
        assert masses[0] == 0
        assert masses[1] == pytest.approx(0.25, abs=1e-15)


class TestEvolveSurvival:
    def test_no_traps_is_one(self):
        for chi in ("up", "down", "symmetric"):
            s = evolve_survival(InitialCondition(3, chi), 9, [], T=50)
            np.testing.assert_allclose(s, 1.0, atol=1e-10)

    def test_single_trap_three_quarters(self):
        s = evolve_survival(InitialCondition(0, "up"), 5, [2], T=2)
        np.testing.assert_allclose(s, [1, 1, 0.75], atol=1e-15)

    def test_path_sum_oracle_agrees(self):
        # amplitudes from the explicit path expansion reproduce the survival sequence
        for T in range(0, 7):
            amps = path_sum_amplitudes(5, {2}, H, 0, (1, 0), T)
            expected = sum(abs(a) ** 2 for a in amps.values())
            got = evolve_survival(InitialCondition(0, "up"), 5, [2], T=T)[-1]
            assert got == pytest.approx(expected, abs=1e-12)

    def test_both_neighbours_trapped(self):
        s = evolve_survival(InitialCondition(0, "up"), 3, [1, 2], T=1)
        assert s[1] == pytest.approx(0.0, abs=1e-15)

    def test_start_on_trap_rejected(self):
        with pytest.raises(ConfigurationError):
            evolve_survival(InitialCondition(2), 5, [2], T=3)

    def test_mixed_needs_rng(self):
        with pytest.raises(ConfigurationError):
            evolve_survival(InitialCondition(0, "mixed"), 5, [2], T=3)
        rng = np.random.default_rng(3)
        s = evolve_survival(InitialCondition(0, "mixed"), 5, [2], T=3, rng=rng)
        assert s[0] == 1.0

    def test_conservation_ledger(self):
        norm, absorbed = walk_trace(InitialCondition(4, "symmetric"), 23, [0, 7, 11, 19], T=300)
        np.testing.assert_allclose(norm + np.cumsum(absorbed), 1.0, atol=1e-10)


@pytest.mark.parametrize("K", [1, 2, 3, 4, 5])
def test_dense_oracle_small_lattices(K):
    rng = np.random.default_rng(K)
    for r in range(K + 1):
        for traps in itertools.combinations(range(K), r):
            for start in set(range(K)) - set(traps):
                for chi in (Chirality.UP, Chirality.DOWN, Chirality.SYMMETRIC, Chirality.MIXED):
                    init = InitialCondition(start, chi).resolve(np.random.default_rng(start))
                    got = evolve_survival(init, K, traps, T=6)
                    ref = dense_survival(K, traps, H, start, chirality_vector(init.chirality), 6)
                    np.testing.assert_allclose(got, ref, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    K=st.integers(1, 40),
    T=st.integers(0, 200),
    seed=st.integers(0, 2**32 - 1),
)
def test_unitarity_any_coin(K, T, seed):
    rng = np.random.default_rng(seed)
    coin = CoinSpec(random_unitary(rng))
    chi = rng.choice(["up", "down", "symmetric"])
    s = evolve_survival(InitialCondition(int(rng.integers(K)), chi), K, [], coin, T)
    np.testing.assert_allclose(s, 1.0, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(K=st.integers(2, 30), T=st.integers(1, 120), seed=st.integers(0, 2**32 - 1))
def test_monotone_and_bounded(K, T, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, K))
    traps = rng.choice(K, n, replace=False)
    start = int(rng.choice(np.setdiff1d(np.arange(K), traps)))
    s = evolve_survival(InitialCondition(start, "symmetric"), K, traps, T=T)
    assert np.all(np.diff(s) <= 1e-12)
    assert np.all((s >= -1e-15) & (s <= 1 + 1e-12))


@settings(max_examples=30, deadline=None)
@given(K=st.integers(2, 25), T=st.integers(1, 60), seed=st.integers(0, 2**32 - 1))
def test_batch_matches_individual_runs(K, T, seed):
    rng = np.random.default_rng(seed)
    traps = rng.choice(K, int(rng.integers(0, K)), replace=False)
    starts = np.setdiff1d(np.arange(K), traps)
    chir = [rng.choice(["up", "down", "symmetric"]) for _ in starts]
    total = batch_survival(K, starts, chir, traps, HADAMARD, T)
    ref = sum(evolve_survival(InitialCondition(int(s), c), K, traps, T=T) for s, c in zip(starts, chir))
    np.testing.assert_allclose(total, ref, atol=1e-11)


def test_unitarity_long_run_batch():
    s = batch_survival(101, np.arange(101), "up", [], HADAMARD, 10_000)
    np.testing.assert_allclose(s / 101, 1.0, atol=1e-10)
