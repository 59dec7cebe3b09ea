"""Branch enumeration and the branch-search generator fit."""

import itertools

import numpy as np
import pytest
from scipy.linalg import expm

from lindbladfit.channels import (
    ChannelSpec,
    TomographyConfig,
    is_lindbladian,
    random_lindblad_generator,
    simulate_process_tomography,
    unital_transfer,
    unitary_transfer,
    x_gate,
)
from lindbladfit.errors import DegenerateSpectrum, OutOfRange
from lindbladfit.fitting import BranchPolicy, best_fit_lindbladian, enumerate_branches
from lindbladfit.linalg import eig_full, frobenius, matrix_log_principal


# ----------------------------------------------------------------------
# branch enumeration
# ----------------------------------------------------------------------

def test_branch_counts():
    assert len(list(enumerate_branches(BranchPolicy(0), 4))) == 1
    assert len(list(enumerate_branches(BranchPolicy(1), 4))) == 81
    assert len(list(enumerate_branches(BranchPolicy(2), 2))) == 25
    assert len(list(enumerate_branches(BranchPolicy(1), 2))) == 9


def test_branch_order_starts_at_zero():
    first = next(iter(enumerate_branches(BranchPolicy(3), 4)))
    assert first == (0, 0, 0, 0)


def test_branch_order_by_total_then_lex():
    got = list(enumerate_branches(BranchPolicy(1), 2))
    totals = [sum(abs(v) for v in b) for b in got]
    assert totals == sorted(totals)
    for t in set(totals):
        shell = [b for b in got if sum(abs(v) for v in b) == t]
        assert shell == sorted(shell)


def test_branches_unique_and_in_box():
    got = list(enumerate_branches(BranchPolicy(2), 3))
    assert len(got) == len(set(got)) == 125
    assert all(max(abs(v) for v in b) <= 2 for b in got)


def test_branch_cap_is_a_prefix():
    full = list(enumerate_branches(BranchPolicy(2), 3))
    capped = list(enumerate_branches(BranchPolicy(2, max_branches=40), 3))
    assert capped == full[:40]


def test_branch_cap_is_lazy():
    # a full m_max=3 grid in dim 16 would have 7^16 elements; slicing ten
    # must return instantly
    got = list(
        itertools.islice(enumerate_branches(BranchPolicy(3, max_branches=10), 16), 10)
    )
    assert len(got) == 10
    assert got[0] == (0,) * 16


def test_low_shells_shared_across_m_max():
    """Any two policies agree on every branch with all |m_j| below both caps."""
    small = list(enumerate_branches(BranchPolicy(1), 3))
    large = list(enumerate_branches(BranchPolicy(2), 3))
    in_box = [b for b in large if max(abs(v) for v in b) <= 1]
    assert in_box == small


def test_branch_policy_validation():
    with pytest.raises(OutOfRange):
        BranchPolicy(m_max=-1).validate()
    with pytest.raises(OutOfRange):
        BranchPolicy(m_max=1, max_branches=0).validate()
    with pytest.raises(OutOfRange):
        list(enumerate_branches(BranchPolicy(1), 0))


# ----------------------------------------------------------------------
# the fit itself
# ----------------------------------------------------------------------

def test_exact_markovian_snapshot_recovered():
    gen = random_lindblad_generator(2, np.random.default_rng(0))
    m = expm(gen.mat)
    res = best_fit_lindbladian(m, m, 1e-6)
    assert res is not None
    assert res.branch == (0, 0, 0, 0)
    assert res.distance <= 1e-9
    assert frobenius(res.lindbladian - gen.mat) <= 1e-7
    assert is_lindbladian(res.lindbladian, tol=1e-8).ok


def test_acceptance_radius_is_honest():
    """No result is returned when every branch exponential misses the
    snapshot by more than epsilon."""
    gen = random_lindblad_generator(2, np.random.default_rng(0))
    r = expm(gen.mat)
    rng = np.random.default_rng(1)
    noise = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    m = r + 0.5 * noise / frobenius(noise)
    assert best_fit_lindbladian(m, r, 0.1) is None
    res = best_fit_lindbladian(m, r, 1.0)
    assert res is not None
    assert res.distance == pytest.approx(0.5, abs=1e-6)


def test_wider_branch_search_never_hurts():
    t = unital_transfer((0.9, 0.7, -0.1))  # negative rate: log is not CCP
    dists = [
        best_fit_lindbladian(t.mat, t.mat, np.inf, BranchPolicy(m)).distance
        for m in (0, 1, 2)
    ]
    assert dists[0] > 1e-3
    assert dists[1] <= dists[0] + 1e-12
    assert dists[2] <= dists[1] + 1e-12


def test_chunk_size_does_not_change_the_answer():
    snap = simulate_process_tomography(
        ChannelSpec("unital", {"gamma": [0.3, 0.5, 0.8]}),
        TomographyConfig(shots=10**4, seed=3),
    )
    a = best_fit_lindbladian(snap.mat, snap.mat, np.inf, BranchPolicy(1))
    b = best_fit_lindbladian(snap.mat, snap.mat, np.inf, BranchPolicy(1), chunk_size=1)
    assert a.branch == b.branch
    assert np.allclose(a.lindbladian, b.lindbladian, atol=1e-12)


def test_transfer_matrix_accepted_as_snapshot():
    t = unital_transfer((0.3, 0.5, 0.8))
    res = best_fit_lindbladian(t, t.mat, 1e-6)
    assert res is not None and res.distance <= 1e-9


def test_basis_sample_id_passthrough():
    t = unital_transfer((0.3, 0.5, 0.8))
    res = best_fit_lindbladian(t.mat, t.mat, 1e-6, basis_sample_id=17)
    assert res.basis_sample_id == 17


def test_fit_input_validation():
    t = unital_transfer((0.3, 0.5, 0.8))
    with pytest.raises(OutOfRange):
        best_fit_lindbladian(t.mat, t.mat, 0.0)
    with pytest.raises(OutOfRange):
        best_fit_lindbladian(t.mat, np.eye(9, dtype=complex), 1e-3)


def test_degenerate_snapshot_is_rejected():
    m = unitary_transfer(x_gate()).mat  # eigenvalues {1, 1, -1, -1}
    with pytest.raises(DegenerateSpectrum):
        best_fit_lindbladian(m, m, 1e-3)


def test_exponential_perturbation_bound():
    """The fitted generator C and the principal log L differ little for a
    Markovian channel, and the exponential gap obeys
    |e^C - e^L| <= |C-L| e^|C-L| e^|L|."""
    t = unital_transfer((0.3, 0.5, 0.8))
    l_r = matrix_log_principal(eig_full(t.mat))
    res = best_fit_lindbladian(t.mat, t.mat, 1e-6)
    gap = frobenius(res.lindbladian - l_r)
    lhs = frobenius(expm(res.lindbladian) - expm(l_r))
    assert lhs <= gap * np.exp(gap) * np.exp(frobenius(l_r)) + 1e-15


def test_noisy_snapshot_fit_quality_tracks_noise():
    """With open acceptance radius the best exponential is at least as close
    to the snapshot as the exact channel is (the endpoints differ by shot
    noise only)."""
    exact = unital_transfer((0.3, 0.5, 0.8)).mat
    snap = simulate_process_tomography(
        ChannelSpec("unital", {"gamma": [0.3, 0.5, 0.8]}),
        TomographyConfig(shots=10**4, seed=5),
    )
    noise = frobenius(snap.mat - exact)
    res = best_fit_lindbladian(snap.mat, snap.mat, np.inf, BranchPolicy(1))
    assert res.distance <= noise
    assert is_lindbladian(res.lindbladian, tol=1e-6).ok
