"""Tabular MDP over a cell grid: soft (maximum-entropy) value iteration,
expected state-visitation frequencies, the MaxEnt gradient, and the linear
IRL baseline.

Actions are the 8-connected moves plus "stay"; transitions are deterministic
and total: a move into an obstacle cell or off the grid resolves to "stay".
Terminal cells are absorbing with value pinned to their reward.
"""

import numpy as np
from scipy.special import logsumexp

# (dy, dx) per action; index 0 is "stay"
ACTIONS = np.array([(0, 0), (0, 1), (0, -1), (1, 0), (-1, 0),
                    (1, 1), (1, -1), (-1, 1), (-1, -1)])
N_ACTIONS = len(ACTIONS)


class GridMDP:
    """Deterministic grid MDP. ``obstacles`` and ``terminal`` are boolean
    [height, width] masks (terminal may be None)."""

    def __init__(self, width, height, gamma=0.99, obstacles=None, terminal=None):
        if not (0.0 <= gamma <= 1.0):
            raise ValueError("gamma must be in [0, 1]")
        self.width = width
        self.height = height
        self.gamma = gamma
        self.n_states = width * height
        self.obstacles = (np.zeros((height, width), dtype=bool)
                          if obstacles is None else np.asarray(obstacles, dtype=bool))
        self.terminal = (None if terminal is None
                         else np.asarray(terminal, dtype=bool))
        self.next_state = self._build_transitions()

    def _build_transitions(self):
        h, w = self.height, self.width
        iy, ix = np.mgrid[0:h, 0:w]
        s = (iy * w + ix).ravel()
        ns = np.empty((N_ACTIONS, self.n_states), dtype=np.int64)
        obst = self.obstacles.ravel()
        for a, (dy, dx) in enumerate(ACTIONS):
            ty, tx = iy + dy, ix + dx
            valid = (ty >= 0) & (ty < h) & (tx >= 0) & (tx < w)
            t = np.where(valid.ravel(), (ty.clip(0, h - 1) * w
                                         + tx.clip(0, w - 1)).ravel(), s)
            t = np.where(obst[t], s, t)      # move into obstacle => stay
            t = np.where(obst, s, t)         # obstacle source cells absorb
            ns[a] = t
        return ns

    @property
    def terminal_flat(self):
        if self.terminal is None:
            return np.zeros(self.n_states, dtype=bool)
        return self.terminal.ravel()


def _q_values(mdp, r, v):
    return r[None, :] + mdp.gamma * v[mdp.next_state]


def _policy_from_q(mdp, q):
    logz = logsumexp(q, axis=0)
    pol = np.exp(q - logz[None, :])
    term = mdp.terminal_flat
    if term.any():
        pol[:, term] = 0.0
        pol[0, term] = 1.0  # stay
    return pol


def soft_value_iteration(mdp, reward, n_iters=None):
    """Stationary soft VI: V <- logsumexp_a [r(s) + gamma V(s')], terminal
    cells pinned to their reward. Returns (values [h,w], policy [9,h,w])."""
    if n_iters is None:
        n_iters = 2 * (mdp.width + mdp.height)
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    r = np.asarray(reward, dtype=float).ravel()
    term = mdp.terminal_flat
    v = np.zeros(mdp.n_states)
    for _ in range(n_iters):
        q = _q_values(mdp, r, v)
        v = logsumexp(q, axis=0)
        v[term] = r[term]
    q = _q_values(mdp, r, v)
    pol = _policy_from_q(mdp, q)
    shape = (mdp.height, mdp.width)
    return v.reshape(shape), pol.reshape((N_ACTIONS,) + shape)


def soft_vi_chain(mdp, reward, horizon):
    """Finite-horizon soft VI with one policy per step.

    Backs up from V = r at the final step, yielding time-varying policies
    whose trajectory distribution is exactly the Boltzmann distribution
    P(traj) ~ exp(sum of rewards) when gamma = 1. Returns (initial values
    [h,w], list of horizon-1 policies [9,h,w] in forward time order).
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    r = np.asarray(reward, dtype=float).ravel()
    term = mdp.terminal_flat
    shape = (mdp.height, mdp.width)
    v = r.copy()
    v[term] = r[term]
    policies = []
    for _ in range(horizon - 1):
        q = _q_values(mdp, r, v)
        policies.append(_policy_from_q(mdp, q).reshape((N_ACTIONS,) + shape))
        v = logsumexp(q, axis=0)
        v[term] = r[term]
    policies.reverse()
    return v.reshape(shape), policies


def expected_svf(mdp, policy, initial, horizon):
    """Discounted expected visitation mass per cell.

    ``policy`` is either a single [9,h,w] table used at every step or a list
    of per-step tables (length >= horizon-1). ``initial`` must sum to 1.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    init = np.asarray(initial, dtype=float).ravel()
    if not np.isclose(init.sum(), 1.0, atol=1e-9):
        raise ValueError("initial distribution must sum to 1")
    chain = isinstance(policy, (list, tuple))
    d = init.copy()
    out = np.zeros(mdp.n_states)
    for k in range(horizon):
        out += (mdp.gamma ** k) * d
        if k == horizon - 1:
            break
        pol = policy[k] if chain else policy
        pol = np.asarray(pol).reshape(N_ACTIONS, mdp.n_states)
        nxt = np.zeros(mdp.n_states)
        for a in range(N_ACTIONS):
            np.add.at(nxt, mdp.next_state[a], d * pol[a])
        d = nxt
    return out.reshape(mdp.height, mdp.width)


def maxent_gradient(expert_svf_map, expected_svf_map):
    """dL_D/dR: elementwise difference of expert and model visitation mass."""
    e = np.asarray(expert_svf_map, dtype=float)
    m = np.asarray(expected_svf_map, dtype=float)
    if e.shape != m.shape:
        raise ValueError(f"shape mismatch: {e.shape} vs {m.shape}")
    return e - m


def feature_expectations(mdp, policy, features, initial, horizon):
    """Discounted expected cumulative feature vector: sum_s mu(s) f(s).

    ``features`` has shape [n_features, height, width].
    """
    f = np.asarray(features, dtype=float)
    if f.shape[1:] != (mdp.height, mdp.width):
        raise ValueError("feature grid does not match MDP dimensions")
    mu = expected_svf(mdp, policy, initial, horizon)
    return np.tensordot(f, mu, axes=([1, 2], [0, 1]))


def demo_svf(mdp, demos, gamma=None):
    """Mean discounted empirical visitation of demonstrated cell sequences."""
    if len(demos) == 0:
        raise ValueError("at least one demonstration is required")
    g = mdp.gamma if gamma is None else gamma
    out = np.zeros(mdp.n_states)
    for demo in demos:
        for k, s in enumerate(demo):
            out[s] += g ** k
    return (out / len(demos)).reshape(mdp.height, mdp.width)


def linear_maxent_irl(mdp, demos, features, learning_rate=0.1, iters=100):
    """Gradient ascent on the MaxEnt likelihood with R(s) = theta . f(s).

    ``demos`` are sequences of flat state indices. Returns the weight vector
    after ``iters`` steps.
    """
    f = np.asarray(features, dtype=float)
    n_feat = f.shape[0]
    mu_d = demo_svf(mdp, demos)
    f_expert = np.tensordot(f, mu_d, axes=([1, 2], [0, 1]))

    horizon = max(len(d) for d in demos)
    init = np.zeros(mdp.n_states)
    for d in demos:
        init[d[0]] += 1.0 / len(demos)
    init = init.reshape(mdp.height, mdp.width)

    theta = np.zeros(n_feat)
    for _ in range(iters):
        reward = np.tensordot(theta, f, axes=([0], [0]))
        _, policies = soft_vi_chain(mdp, reward, horizon)
        f_model = feature_expectations(mdp, policies, f, init, horizon)
        theta = theta + learning_rate * (f_expert - f_model)
        if np.abs(theta).max() > 1e6:
            raise FloatingPointError("linear IRL diverged (|theta| > 1e6)")
    return theta
