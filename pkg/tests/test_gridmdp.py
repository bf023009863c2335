import numpy as np
import pytest

from dockirl.gridmdp import (ACTIONS, GridMDP, N_ACTIONS, demo_svf,
                             expected_svf, feature_expectations,
                             linear_maxent_irl, maxent_gradient,
                             soft_value_iteration, soft_vi_chain)
from dockirl.oracles import (boltzmann_distribution, chain_distribution,
                             enumeration_svf, rollout_sequences,
                             enumerate_action_sequences)


def test_actions_cover_8_neighborhood():
    assert N_ACTIONS == 9
    assert tuple(ACTIONS[0]) == (0, 0)
    assert len({tuple(a) for a in ACTIONS}) == 9
    assert all(abs(dy) <= 1 and abs(dx) <= 1 for dy, dx in ACTIONS)


def test_transitions_obstacle_and_edges():
    obst = np.zeros((3, 3), dtype=bool)
    obst[1, 1] = True
    mdp = GridMDP(3, 3, obstacles=obst)
    center = 1 * 3 + 1
    # obstacle cells absorb under every action
    assert np.all(mdp.next_state[:, center] == center)
    # moving into the obstacle resolves to stay
    a_up = next(i for i, (dy, dx) in enumerate(ACTIONS) if (dy, dx) == (1, 0))
    assert mdp.next_state[a_up, 0 * 3 + 1] == 0 * 3 + 1
    # off-grid moves resolve to stay
    a_left = next(i for i, (dy, dx) in enumerate(ACTIONS) if (dy, dx) == (0, -1))
    assert mdp.next_state[a_left, 0] == 0


def test_uniform_policy_on_zero_reward():
    mdp = GridMDP(4, 4, gamma=0.9)
    v, pol = soft_value_iteration(mdp, np.zeros((4, 4)))
    assert np.allclose(pol, 1.0 / N_ACTIONS)
    assert np.allclose(v, np.log(N_ACTIONS) * (1 - 0.9 ** 16) / (1 - 0.9), atol=1e-3)


def test_reward_shift_leaves_policy_invariant():
    rng = np.random.default_rng(0)
    mdp = GridMDP(4, 3, gamma=1.0)
    r = rng.normal(size=(3, 4))
    _, pols_a = soft_vi_chain(mdp, r, horizon=5)
    _, pols_b = soft_vi_chain(mdp, r + 3.7, horizon=5)
    for pa, pb in zip(pols_a, pols_b):
        assert np.allclose(pa, pb, atol=1e-9)


def test_chain_matches_boltzmann_enumeration():
    rng = np.random.default_rng(4)
    mdp = GridMDP(3, 3, gamma=1.0)
    r = rng.normal(size=(3, 3))
    _, pols = soft_vi_chain(mdp, r, horizon=4)
    states, p_oracle = boltzmann_distribution(mdp, r, start=4, horizon=4)
    _, p_chain = chain_distribution(mdp, pols, start=4, horizon=4)
    assert np.abs(p_chain - p_oracle).max() < 1e-9


def test_expected_svf_matches_enumeration_any_gamma():
    rng = np.random.default_rng(5)
    mdp = GridMDP(3, 2, gamma=0.8)
    r = rng.normal(size=(2, 3))
    _, pols = soft_vi_chain(mdp, r, horizon=4)
    init = np.zeros((2, 3))
    init[0, 0] = 1.0
    svf = expected_svf(mdp, pols, init, horizon=4)
    states, probs = chain_distribution(mdp, pols, start=0, horizon=4)
    svf_o = enumeration_svf(mdp, states, probs, 0.8)
    assert np.abs(svf - svf_o).max() < 1e-9


def test_svf_slice_conservation_gamma_one():
    rng = np.random.default_rng(6)
    mdp = GridMDP(5, 5, gamma=1.0)
    _, pols = soft_vi_chain(mdp, rng.normal(size=(5, 5)), horizon=7)
    init = np.full((5, 5), 1.0 / 25)
    svf = expected_svf(mdp, pols, init, horizon=7)
    assert svf.sum() == pytest.approx(7.0, abs=1e-9)


def test_stay_policy_geometric_series():
    mdp = GridMDP(3, 3, gamma=0.9)
    pol = np.zeros((N_ACTIONS, 3, 3))
    pol[0] = 1.0
    init = np.zeros((3, 3))
    init[1, 2] = 1.0
    svf = expected_svf(mdp, pol, init, horizon=20)
    expect = (1 - 0.9 ** 20) / (1 - 0.9)
    assert svf[1, 2] == pytest.approx(expect)
    assert svf.sum() == pytest.approx(expect)


def test_expected_svf_validates_initial():
    mdp = GridMDP(3, 3)
    with pytest.raises(ValueError):
        expected_svf(mdp, np.full((N_ACTIONS, 3, 3), 1 / 9), np.ones((3, 3)), 3)


def test_terminal_cells_absorb_in_chain():
    term = np.zeros((3, 3), dtype=bool)
    term[2, 2] = True
    mdp = GridMDP(3, 3, gamma=1.0, terminal=term)
    r = np.zeros((3, 3))
    r[2, 2] = 5.0
    _, pols = soft_vi_chain(mdp, r, horizon=6)
    init = np.zeros((3, 3))
    init[0, 0] = 1.0
    svf = expected_svf(mdp, pols, init, horizon=6)
    # mass that reaches the terminal stays there; nothing flows back out
    states, probs = chain_distribution(mdp, pols, start=0, horizon=6)
    svf_o = enumeration_svf(mdp, states, probs, 1.0)
    assert np.abs(svf - svf_o).max() < 1e-9
    assert svf[2, 2] > svf[0, 1]


def test_maxent_gradient_shape_check():
    with pytest.raises(ValueError):
        maxent_gradient(np.zeros((3, 3)), np.zeros((2, 2)))
    g = maxent_gradient(np.ones((2, 2)), np.zeros((2, 2)))
    assert np.array_equal(g, np.ones((2, 2)))


def test_demo_svf_discounting():
    mdp = GridMDP(3, 1, gamma=0.5)
    out = demo_svf(mdp, [[0, 1, 2]])
    assert out.ravel().tolist() == [1.0, 0.5, 0.25]
    with pytest.raises(ValueError):
        demo_svf(mdp, [])


def test_feature_expectations_one_hot():
    mdp = GridMDP(2, 2, gamma=1.0)
    pol = np.zeros((N_ACTIONS, 2, 2))
    pol[0] = 1.0  # stay
    feats = np.eye(4).reshape(4, 2, 2)
    init = np.zeros((2, 2))
    init[0, 1] = 1.0
    fe = feature_expectations(mdp, pol, feats, init, horizon=3)
    assert fe.tolist() == [0.0, 3.0, 0.0, 0.0]


def test_linear_irl_single_stay_demo():
    mdp = GridMDP(3, 3, gamma=0.9)
    demos = [[4] * 6]  # stays on the center cell
    feats = np.eye(9).reshape(9, 3, 3)
    theta = linear_maxent_irl(mdp, demos, feats, learning_rate=0.2, iters=60)
    assert int(np.argmax(theta)) == 4


def test_linear_irl_divergence_guard():
    mdp = GridMDP(3, 3, gamma=0.9)
    feats = np.eye(9).reshape(9, 3, 3)
    with pytest.raises(FloatingPointError):
        linear_maxent_irl(mdp, [[0, 1, 2]], feats, learning_rate=1e9, iters=50)


def test_enumeration_helpers():
    seqs = enumerate_action_sequences(2)
    assert seqs.shape == (81, 2)
    mdp = GridMDP(2, 2)
    states = rollout_sequences(mdp, 0, seqs)
    assert states.shape == (81, 3)
    assert np.all(states[:, 0] == 0)
