"""Independent brute-force oracles for the MDP and network machinery.

These deliberately avoid the dynamic-programming code paths they validate:
trajectory distributions come from explicit enumeration of all action
sequences, and gradients come from central finite differences.
"""

import numpy as np

from . import rewardnet
from .gridmdp import (GridMDP, N_ACTIONS, expected_svf, maxent_gradient,
                      soft_vi_chain)


def enumerate_action_sequences(n_steps):
    """All action sequences of a given length, shape [9**n_steps, n_steps]."""
    if n_steps == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.meshgrid(*[np.arange(N_ACTIONS)] * n_steps, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def rollout_sequences(mdp, start, seqs):
    """Deterministic state sequences for each action sequence; [n, T+1]."""
    n, t = seqs.shape
    states = np.empty((n, t + 1), dtype=np.int64)
    states[:, 0] = start
    for k in range(t):
        states[:, k + 1] = mdp.next_state[seqs[:, k], states[:, k]]
    return states


def boltzmann_distribution(mdp, reward, start, horizon):
    """P(traj) ~ exp(sum of state rewards) over all (horizon-1)-step
    action sequences from ``start``. Valid oracle for gamma = 1 chains."""
    r = np.asarray(reward, dtype=float).ravel()
    seqs = enumerate_action_sequences(horizon - 1)
    states = rollout_sequences(mdp, start, seqs)
    scores = r[states].sum(axis=1)
    scores -= scores.max()
    p = np.exp(scores)
    return states, p / p.sum()


def chain_distribution(mdp, policies, start, horizon):
    """Trajectory probabilities from explicit products of per-step policy
    entries (works for any gamma and terminal set)."""
    seqs = enumerate_action_sequences(horizon - 1)
    states = rollout_sequences(mdp, start, seqs)
    p = np.ones(len(seqs))
    for k in range(horizon - 1):
        pol = np.asarray(policies[k]).reshape(N_ACTIONS, mdp.n_states)
        p *= pol[seqs[:, k], states[:, k]]
    return states, p


def enumeration_svf(mdp, states, probs, gamma):
    """Discounted visitation mass aggregated over enumerated trajectories."""
    out = np.zeros(mdp.n_states)
    for k in range(states.shape[1]):
        np.add.at(out, states[:, k], probs * gamma ** k)
    return out.reshape(mdp.height, mdp.width)


def check_svf_enumeration(max_side=4, max_horizon=6, rewards_per_grid=5,
                          tol=1e-6, seed=0):
    """Expected SVF and trajectory distribution vs exhaustive enumeration on
    every grid up to max_side x max_side. Returns the worst absolute error."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for h in range(1, max_side + 1):
        for w in range(1, max_side + 1):
            if h * w < 2:
                continue
            horizon = min(max_horizon, 6)
            mdp = GridMDP(w, h, gamma=1.0)
            for _ in range(rewards_per_grid):
                reward = rng.normal(scale=0.7, size=(h, w))
                start = int(rng.integers(mdp.n_states))
                _, policies = soft_vi_chain(mdp, reward, horizon)

                states, p_oracle = boltzmann_distribution(mdp, reward, start, horizon)
                _, p_chain = chain_distribution(mdp, policies, start, horizon)
                worst = max(worst, float(np.abs(p_chain - p_oracle).max()))

                init = np.zeros(mdp.n_states)
                init[start] = 1.0
                svf = expected_svf(mdp, policies, init.reshape(h, w), horizon)
                svf_oracle = enumeration_svf(mdp, states, p_oracle, mdp.gamma)
                worst = max(worst, float(np.abs(svf - svf_oracle).max()))
    if worst > tol:
        raise AssertionError(f"enumeration mismatch: max abs error {worst:.3e}")
    return worst


def log_likelihood(mdp, reward, demo, horizon):
    """Exact finite-horizon log P(demo states) under the gamma=1 soft chain:
    sum of rewards along the demo minus the log-partition at its start."""
    r = np.asarray(reward, dtype=float).ravel()
    v0, _ = soft_vi_chain(mdp, reward, horizon)
    return float(r[list(demo)].sum() - v0.ravel()[demo[0]])


def check_maxent_gradient_fd(height=4, width=4, horizon=5, tol=1e-4, seed=1):
    """Analytic mu_D - E[mu] vs central finite differences of the exact
    log-likelihood over per-cell rewards. Returns the worst relative error."""
    rng = np.random.default_rng(seed)
    mdp = GridMDP(width, height, gamma=1.0)
    reward = rng.normal(scale=0.5, size=(height, width))

    start = int(rng.integers(mdp.n_states))
    _, policies = soft_vi_chain(mdp, reward, horizon)
    demo = [start]
    for k in range(horizon - 1):
        pol = np.asarray(policies[k]).reshape(N_ACTIONS, mdp.n_states)
        a = int(rng.choice(N_ACTIONS, p=pol[:, demo[-1]]))
        demo.append(int(mdp.next_state[a, demo[-1]]))

    mu_d = np.zeros(mdp.n_states)
    for s in demo:
        mu_d[s] += 1.0
    init = np.zeros(mdp.n_states)
    init[start] = 1.0
    mu_model = expected_svf(mdp, policies, init.reshape(height, width), horizon)
    grad = maxent_gradient(mu_d.reshape(height, width), mu_model).ravel()

    h = 1e-5
    worst = 0.0
    for s in range(mdp.n_states):
        rp = reward.copy().ravel()
        rp[s] += h
        lp = log_likelihood(mdp, rp.reshape(height, width), demo, horizon)
        rp[s] -= 2 * h
        lm = log_likelihood(mdp, rp.reshape(height, width), demo, horizon)
        fd = (lp - lm) / (2 * h)
        denom = max(abs(fd), abs(grad[s]), 1e-6)
        worst = max(worst, abs(fd - grad[s]) / denom)
    if worst > tol:
        raise AssertionError(f"maxent gradient FD mismatch: {worst:.3e}")
    return worst


def check_rewardnet_fd(n_params=200, side=8, tol=1e-4, seed=2):
    """Network backprop vs central finite differences on sampled parameters."""
    rng = np.random.default_rng(seed)
    params = rewardnet.init_params(seed)
    x = rng.normal(size=(9, side, side))
    d = rng.normal(size=(side, side))

    _, cache = rewardnet.forward(params, x)
    params.zero_grads()
    rewardnet.backward(params, cache, d)

    names = list(rewardnet.PARAM_ORDER)
    sizes = np.array([params.values[n].size for n in names])
    picks = rng.choice(sizes.sum(), size=min(n_params, sizes.sum()), replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    h = 1e-4
    worst = 0.0
    for flat in picks:
        ni = int(np.searchsorted(offsets, flat, side="right")) - 1
        arr = params.values[names[ni]]
        idx = np.unravel_index(flat - offsets[ni], arr.shape)
        orig = arr[idx]
        arr[idx] = orig + h
        fp = float(np.sum(d * rewardnet.forward(params, x)[0]))
        arr[idx] = orig - h
        fm = float(np.sum(d * rewardnet.forward(params, x)[0]))
        arr[idx] = orig
        fd = (fp - fm) / (2 * h)
        an = params.grads[names[ni]][idx]
        worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), 1e-6))
    if worst > tol:
        raise AssertionError(f"rewardnet FD mismatch: {worst:.3e}")
    return worst


def check_deep_gradient_fd(side=8, horizon=5, n_params=40, tol=1e-3, seed=3):
    """End-to-end dL_D/dtheta through the network and the soft chain vs
    central finite differences of the exact gamma=1 log-likelihood."""
    rng = np.random.default_rng(seed)
    params = rewardnet.init_params(seed)
    x = rng.normal(scale=0.3, size=(9, side, side))
    x[0] = (rng.random((side, side)) < 0.15).astype(float)
    start = (side // 2) * side + side // 2
    x[0].ravel()[start] = 0.0
    x[2] = 0.0  # no terminal cells: every step stays differentiable

    def reward_of(p):
        return rewardnet.forward(p, x)

    reward, cache = reward_of(params)
    from .gridmdp import GridMDP as _G
    mdp = _G(side, side, gamma=1.0, obstacles=x[0] > 0.5)
    _, policies = soft_vi_chain(mdp, reward, horizon)

    demo = [start]
    for k in range(horizon - 1):
        pol = np.asarray(policies[k]).reshape(N_ACTIONS, mdp.n_states)
        a = int(rng.choice(N_ACTIONS, p=pol[:, demo[-1]]))
        demo.append(int(mdp.next_state[a, demo[-1]]))

    mu_d = np.zeros(mdp.n_states)
    for s in demo:
        mu_d[s] += 1.0
    init = np.zeros(mdp.n_states)
    init[start] = 1.0
    mu_model = expected_svf(mdp, policies, init.reshape(side, side), horizon)
    grad_r = maxent_gradient(mu_d.reshape(side, side), mu_model)
    params.zero_grads()
    rewardnet.backward(params, cache, grad_r)

    names = list(rewardnet.PARAM_ORDER)
    sizes = np.array([params.values[n].size for n in names])
    picks = rng.choice(sizes.sum(), size=min(n_params, sizes.sum()), replace=False)
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    h = 1e-4
    worst = 0.0
    for flat in picks:
        ni = int(np.searchsorted(offsets, flat, side="right")) - 1
        arr = params.values[names[ni]]
        idx = np.unravel_index(flat - offsets[ni], arr.shape)
        orig = arr[idx]
        arr[idx] = orig + h
        lp = log_likelihood(mdp, reward_of(params)[0], demo, horizon)
        arr[idx] = orig - h
        lm = log_likelihood(mdp, reward_of(params)[0], demo, horizon)
        arr[idx] = orig
        fd = (lp - lm) / (2 * h)
        an = params.grads[names[ni]][idx]
        worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), 1e-6))
    if worst > tol:
        raise AssertionError(f"deep gradient FD mismatch: {worst:.3e}")
    return worst


ORACLE_SUITES = {
    "svf-enumeration": check_svf_enumeration,
    "maxent-gradient-fd": check_maxent_gradient_fd,
    "rewardnet-fd": check_rewardnet_fd,
    "deep-gradient-fd": check_deep_gradient_fd,
}


def run_all(report=print):
    """Run every oracle suite; returns True iff all pass."""
    ok = True
    for name, fn in ORACLE_SUITES.items():
        try:
            worst = fn()
            report(f"PASS {name} (max error {worst:.3e})")
        except AssertionError as exc:
            report(f"FAIL {name}: {exc}")
            ok = False
    return ok
