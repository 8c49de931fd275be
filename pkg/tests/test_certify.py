import itertools
import json
import math

import numpy as np
import pytest
from conftest import INV_SQRT2

from nlcert.certify import (
    CertifyError,
    anticommutator_rhs,
    certify,
    check_anticommutator,
    check_bipartite_bounds,
    check_frobenius_intertwiner,
    check_nxor_bounds,
    check_permutation_bounds,
    check_second_bound,
    check_sqrt_bounds,
    check_uv_bound,
    measure_epsilon,
    nxor_rhs,
    parity_factor,
    permutation_rhs,
    second_bound_rhs,
    uv_pair_keys,
)
from nlcert.games import build_chsh, pair_label
from nlcert.jsonio import dumps, report_to_dict
from nlcert.perturb import perturbed_chsh
from nlcert.repetition import repeat_game, repeat_strategy
from nlcert.strategies import SX, SZ, QuantumStrategy, optimal_chsh_strategy, pad_identity_player, phi_plus


def chsh_like(alice, bob, psi=None):
    d = alice[0].shape[0]
    psi = phi_plus(d) if psi is None else psi
    a = {str(i + 1): m for i, m in enumerate(alice)}
    return QuantumStrategy((d, d), psi, (a, bob))


# -- epsilon ---------------------------------------------------------------------

def test_epsilon_zero_at_optimum():
    assert measure_epsilon(optimal_chsh_strategy(2), build_chsh(2), INV_SQRT2) <= 1e-12


def test_epsilon_one_for_zero_bias():
    psi = np.kron([1, 0], [1, 0]).astype(complex)
    s = QuantumStrategy((2, 2), psi, ({"1": SZ, "2": SZ}, {"1:2": SX, "2:1": SX}))
    assert measure_epsilon(s, build_chsh(2), INV_SQRT2) == pytest.approx(1.0, abs=1e-12)


def test_epsilon_of_deterministic_optimum():
    one = np.eye(1)
    s = QuantumStrategy((1, 1), np.ones(1), ({"1": one, "2": one}, {"1:2": one, "2:1": one}))
    assert measure_epsilon(s, build_chsh(2), INV_SQRT2) == pytest.approx(1 - 0.5 / INV_SQRT2, abs=1e-12)
    assert measure_epsilon(s, build_chsh(2), INV_SQRT2) == pytest.approx(0.29289, abs=1e-5)


def test_epsilon_needs_positive_optimum():
    with pytest.raises(CertifyError):
        measure_epsilon(optimal_chsh_strategy(2), build_chsh(2), 0.0)


# -- right-hand sides ------------------------------------------------------------------

def test_rhs_formulas():
    s = optimal_chsh_strategy(2)
    assert check_bipartite_bounds(s, 2, 0.1)[0].rhs == pytest.approx(0.4)
    assert nxor_rhs(3, 3, 0.01) == pytest.approx(0.36)
    assert anticommutator_rhs("ffl", 2, 2, 0.1) == pytest.approx(2 * 49 / 9 * 2 * 0.1)
    assert anticommutator_rhs("ffl", 2, 2, 0.1) == pytest.approx(2.178, abs=1e-3)
    assert permutation_rhs("perm.swap", 2, 2, 0.09, 1.0) == pytest.approx(100 / 9 * 4 * 0.3)
    assert second_bound_rhs("second.squared", 2, 3, 0.01) == pytest.approx(800)
    assert parity_factor(2, 4) == 128
    assert parity_factor(2, 5) == 2 ** 7
    frob = check_frobenius_intertwiner(s, eps=0.01)
    assert [e for e in frob if e.bound_id == "frob.aggregate"][0].rhs == pytest.approx(32)


def test_rhs_monotone_in_epsilon():
    eps = [0.0, 1e-4, 0.01, 0.3]
    s = perturbed_chsh(3, 0.05, np.random.default_rng(0))
    game = build_chsh(3)
    prev = None
    for e in eps:
        cur = {}
        for entry in (
            check_bipartite_bounds(s, None, e)
            + check_anticommutator(s, "ffl", None, 2, e)
            + check_sqrt_bounds(s, e)
            + check_permutation_bounds(s, e)
            + check_second_bound(s, "ffl", e)
            + check_frobenius_intertwiner(s, eps=e)
        ):
            cur[entry.bound_id] = entry.rhs
        if prev:
            assert all(cur[k] >= prev[k] for k in cur)
        prev = cur
    assert game is not None


# -- left-hand sides ----------------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 4])
def test_every_lhs_vanishes_at_optimum(n):
    r = certify(optimal_chsh_strategy(n), build_chsh(n), INV_SQRT2)
    assert r.epsilon <= 1e-9
    assert all(e.lhs <= 1e-8 for e in r.entries)
    assert r.all_pass


def test_forward_reversed_sums_are_an_identity():
    # forward and reversed sums both equal 2n(n-1) eps at the measured eps
    rng = np.random.default_rng(5)
    for n in (2, 3):
        s = perturbed_chsh(n, 0.2, rng)
        eps = measure_epsilon(s, build_chsh(n), INV_SQRT2)
        for e in check_bipartite_bounds(s, None, eps):
            assert e.lhs == pytest.approx(e.rhs, rel=1e-9, abs=1e-12)


def test_anticommutator_examples():
    fam = [SZ, SX]
    bob = {"1:2": SZ, "2:1": SX}
    assert check_anticommutator(chsh_like(fam, bob), "ffl", 2, 2, 0.0)[0].lhs <= 1e-15
    same = chsh_like([SZ, SZ], bob)
    assert check_anticommutator(same, "ffl", 2, 2, 0.0)[0].lhs == pytest.approx(1.0)
    with pytest.raises(CertifyError):
        check_anticommutator(same, "bogus", 2, 2, 0.0)


def test_degenerate_combination_is_flagged_not_failed():
    s = chsh_like([SZ, SX], {"1:2": SZ, "2:1": -SZ})
    (e,) = check_sqrt_bounds(s, 0.5)
    assert e.degenerate >= 1
    assert "degenerate" in e.note


def test_permutation_lhs_vanishes_for_anticommuting_family():
    for e in check_permutation_bounds(optimal_chsh_strategy(3), 0.0):
        assert e.lhs <= 1e-12


def test_uv_bound():
    s = optimal_chsh_strategy(3)
    keys = uv_pair_keys(3)
    zero = check_uv_bound(s, [np.zeros(3)], [np.zeros(len(keys))], 0.0, INV_SQRT2)
    assert zero[0].lhs == 0
    u = np.zeros(3)
    u[0] = 1
    v = np.zeros(len(keys))
    v[keys.index((1, 2))] = v[keys.index((2, 1))] = INV_SQRT2
    assert check_uv_bound(s, [u], [v], 0.0, INV_SQRT2)[0].lhs <= 1e-9
    with pytest.raises(CertifyError):
        check_uv_bound(s, [u], [], 0.0, 1.0)
    with pytest.raises(CertifyError):
        check_uv_bound(s, [np.zeros(2)], [v], 0.0, 1.0)


def test_frobenius_shape_checked():
    with pytest.raises(CertifyError):
        check_frobenius_intertwiner(optimal_chsh_strategy(2), T=np.eye(3))


def test_frobenius_with_explicit_t():
    s = optimal_chsh_strategy(2)
    for e in check_frobenius_intertwiner(s, T=np.eye(2) / math.sqrt(2)):
        assert e.lhs <= 1e-12


def test_missing_observables():
    s = QuantumStrategy((2, 2), phi_plus(2), ({"1": SZ, "2": SX}, {"1:2": SZ}))
    with pytest.raises(CertifyError):
        check_bipartite_bounds(s, None, 0.0)


# -- three players -----------------------------------------------------------------------

def _padded(n):
    labels = [pair_label(*t) for t in itertools.permutations(range(1, n + 1), 3)]
    return pad_identity_player(optimal_chsh_strategy(n), labels)


def test_padded_third_player_interchange_vanishes():
    n = 3
    entries = {e.bound_id: e for e in check_nxor_bounds(_padded(n), 3, n, 0.0)}
    assert entries["nxor.interchange.3"].lhs == 0
    assert entries["nxor.link.2"].lhs <= 1e-12
    assert entries["nxor.link.3"].rhs == 0


def test_nxor_arity_errors():
    with pytest.raises(CertifyError):
        check_nxor_bounds(optimal_chsh_strategy(3), 3, 3, 0.0)
    s = pad_identity_player(optimal_chsh_strategy(3), ["1:2:3"])
    with pytest.raises(CertifyError):
        check_nxor_bounds(s, 3, 3, 0.0)


def test_random_three_player_link_sums_hold():
    # an eps-perturbed two-player strategy padded with a trivial third player
    rng = np.random.default_rng(11)
    n = 3
    for _ in range(5):
        base = perturbed_chsh(n, 0.05, rng)
        eps = measure_epsilon(base, build_chsh(n), INV_SQRT2)
        labels = [pair_label(*t) for t in itertools.permutations(range(1, n + 1), 3)]
        s = pad_identity_player(base, labels)
        entries = {e.bound_id: e for e in check_nxor_bounds(s, 3, n, eps)}
        assert entries["nxor.link.2"].passed
        assert entries["nxor.interchange.3"].passed


# -- repeated strategies ----------------------------------------------------------------------

def test_wedge_report_at_optimum():
    g = repeat_game(build_chsh(2), 2, "xor_combine")
    s = repeat_strategy(optimal_chsh_strategy(2), 2, "xor_combine")
    r = certify(s, g, 0.5)
    assert r.family == "wedge"
    ids = {e.bound_id for e in r.entries}
    assert {"sqrt.wedge_xor", "sqrt.copy_sum", "perm.wedge", "perm.wedge_single", "second.copies"} <= ids
    assert all(e.lhs <= 1e-8 for e in r.entries)


def test_wedge_sqrt_on_perturbed_copies():
    rng = np.random.default_rng(2)
    g = repeat_game(build_chsh(2), 2, "xor_combine")
    for _ in range(5):
        s = repeat_strategy(perturbed_chsh(2, 0.05, rng), 2)
        r = certify(s, g, 0.5)
        for e in r.entries:
            assert e.lhs >= 0
        assert r.entry("sqrt.wedge_xor").passed


# -- reports -------------------------------------------------------------------------------------

def test_report_json_is_deterministic():
    s = perturbed_chsh(3, 0.1, np.random.default_rng(9))
    a = dumps(report_to_dict(certify(s, build_chsh(3), INV_SQRT2)))
    b = dumps(report_to_dict(certify(s, build_chsh(3), INV_SQRT2)))
    assert a == b
    d = json.loads(a)
    assert [e["bound_id"] for e in d["entries"]] == sorted(e["bound_id"] for e in d["entries"])


def test_pass_flag_follows_margin():
    s = perturbed_chsh(2, 0.1, np.random.default_rng(4))
    r = certify(s, build_chsh(2), INV_SQRT2, tol=1e-8)
    for e in r.entries:
        assert e.passed == (e.margin >= -1e-8)
    assert r.epsilon == pytest.approx(max(0.0, 1 - r.strategy_bias / INV_SQRT2), abs=1e-12)
