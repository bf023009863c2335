"""MEDIRL training and evaluation: reward network + soft MDP in the
vessel-centered window, matching policy visitation to the expert's."""

import math
import os
import time
from dataclasses import dataclass, fields

import numpy as np
from scipy import ndimage

from . import rewardnet
from .features import GridSpec, expert_svf_window, extract_features, position_to_cell
from .gridmdp import ACTIONS, GridMDP, N_ACTIONS, expected_svf, maxent_gradient, soft_vi_chain
from .io import write_pgm
from .rewardnet import AdamState, apply_update, backward, forward, save_checkpoint

REWARD_CLIP = 50.0
MINIBATCH = 8


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    samples_per_trajectory: int = 8
    learning_rate: float = 1e-3
    l2_lambda: float = 1e-4
    gamma: float = 0.99
    svf_horizon: int = 64
    soft_vi_iters: int = 128
    seed: int = 0
    checkpoint_every: int = 10
    # per-epoch learning-rate schedule: linear warmup then geometric decay
    lr_warmup_epochs: int = 0
    lr_decay: float = 1.0
    # control steps per MDP step; at 0.1 s control stepping a stride of 4
    # makes one grid cell roughly one MDP step
    mdp_stride: int = 4

    def __post_init__(self):
        if self.epochs < 0 or self.samples_per_trajectory < 1 or self.svf_horizon < 1:
            raise ValueError("counts must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError("gamma must be in [0, 1]")


def config_to_file(config, path):
    with open(path, "w", encoding="utf-8") as f:
        for fld in fields(TrainConfig):
            f.write(f"{fld.name}={getattr(config, fld.name)}\n")


def config_from_file(path):
    kinds = {f.name: f.type for f in fields(TrainConfig)}
    kwargs = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in kinds:
                raise ValueError(f"unknown config key: {key}")
            caster = float if kinds[key] in ("float", float) else int
            kwargs[key] = caster(val.strip())
    return TrainConfig(**kwargs)


def build_local_mdp(stack, gamma):
    """Window MDP from the feature stack: environment cells block, goal-region
    cells (if any fall inside the window) absorb."""
    n = stack.shape[1]
    obstacles = stack[0] > 0.5
    goal = (stack[2] > 0.5) & ~obstacles
    terminal = goal if goal.any() else None
    return GridMDP(n, n, gamma=gamma, obstacles=obstacles, terminal=terminal)


def _center_init(n):
    init = np.zeros((n, n))
    init[n // 2, n // 2] = 1.0
    return init


def _strided_future(trajectory, t_index, stride):
    """The demonstration from t_index onward, subsampled to the MDP timestep."""
    from .control import Trajectory
    return Trajectory(states=trajectory.states[t_index::max(stride, 1)],
                      world=trajectory.world)


def _expert_cells(trajectory, t_index, spec, horizon):
    """Window cells of the demonstrated future, truncated at window exit."""
    st = trajectory.states[t_index]
    cells = []
    for k in range(horizon):
        j = t_index + k
        if j >= len(trajectory.states):
            break
        s = trajectory.states[j]
        cell = position_to_cell(spec, st.x, st.y, s.x, s.y)
        if cell is None:
            break
        cells.append(cell)
    return cells


_ACTION_INDEX = {(dy, dx): i for i, (dy, dx) in enumerate(map(tuple, ACTIONS))}


def expert_nll(policies, mdp, cells):
    """Mean negative log-probability of the expert's (clamped) moves.

    Steps starting from a terminal (goal-region) cell are skipped: there the
    model has docked and its policy is pinned to "stay", so residual expert
    micro-motion inside the bay carries no action information.
    """
    term = mdp.terminal_flat
    total, count = 0.0, 0
    for k in range(len(cells) - 1):
        s = cells[k][0] * mdp.width + cells[k][1]
        if term[s]:
            continue
        dy = max(-1, min(1, cells[k + 1][0] - cells[k][0]))
        dx = max(-1, min(1, cells[k + 1][1] - cells[k][1]))
        a = _ACTION_INDEX[(dy, dx)]
        pol = np.asarray(policies[k]).reshape(N_ACTIONS, mdp.n_states)
        total -= math.log(max(pol[a, s], 1e-300))
        count += 1
    return total / count if count else 0.0


def train_step(params, world, trajectory, t_index, config, spec=GridSpec()):
    """One sample of the MEDIRL chain; accumulates the descent gradient of
    -L_D into the parameter buffers and returns per-sample stats."""
    stack = extract_features(world, trajectory, t_index, spec)
    reward, cache = forward(params, stack)
    if not np.all(np.isfinite(reward)):
        raise FloatingPointError("non-finite reward map")
    clip_mask = (np.abs(reward) < REWARD_CLIP).astype(float)
    reward = np.clip(reward, -REWARD_CLIP, REWARD_CLIP)

    mdp = build_local_mdp(stack, config.gamma)
    # Horizon stops where the expert's future leaves the window, so expert
    # and model visitation carry identical total mass and the gradient has
    # no spurious uniform component.
    sub = _strided_future(trajectory, t_index, config.mdp_stride)
    cells = _expert_cells(sub, 0, spec, config.svf_horizon)
    horizon = max(len(cells), 1)

    _, policies = soft_vi_chain(mdp, reward, horizon)
    n = spec.cells_per_side
    model_svf = expected_svf(mdp, policies, _center_init(n), horizon)
    exp_svf = expert_svf_window(sub, 0, spec, horizon, config.gamma)
    grad_r = maxent_gradient(exp_svf, model_svf)

    backward(params, cache, -grad_r * clip_mask)

    return {
        "nll": expert_nll(policies, mdp, cells),
        "svf_l1": float(np.abs(grad_r).sum()),
        "reward": reward,
        "model_svf": model_svf,
        "expert_svf": exp_svf,
    }


def probe_nll(params, records, config, spec=GridSpec()):
    """Mean expert NLL over a fixed, deterministic probe set of timesteps.

    Used for the per-epoch report so the learning curve is not confounded by
    the randomly resampled training indices.
    """
    vals = []
    for world, traj in records:
        for t_index in eval_indices(len(traj.states)):
            stack = extract_features(world, traj, t_index, spec)
            reward, _ = forward(params, stack)
            reward = np.clip(reward, -REWARD_CLIP, REWARD_CLIP)
            mdp = build_local_mdp(stack, config.gamma)
            sub = _strided_future(traj, t_index, config.mdp_stride)
            cells = _expert_cells(sub, 0, spec, config.svf_horizon)
            horizon = max(len(cells), 1)
            _, policies = soft_vi_chain(mdp, reward, horizon)
            vals.append(expert_nll(policies, mdp, cells))
    return float(np.mean(vals)) if vals else 0.0


@dataclass
class TrainReport:
    rows: list  # dicts: epoch, mean_nll, mean_svf_l1, grad_norm, wall_time_s
    initial_nll: float = 0.0  # probe NLL of the untrained network

    def to_csv(self, path):
        header = "epoch,mean_nll,mean_svf_l1,grad_norm,wall_time_s"
        lines = [header]
        for r in self.rows:
            lines.append(f"{r['epoch']},{r['mean_nll']:.6g},{r['mean_svf_l1']:.6g},"
                         f"{r['grad_norm']:.6g},{r['wall_time_s']:.6g}")
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")


def train(dataset, config, out_dir=None, params=None, spec=GridSpec(),
          log=None):
    """Train the reward network on the dataset's train split.

    Each epoch visits every training record, samples time indices uniformly,
    and applies Adam updates per minibatch of accumulated sample gradients.
    Fully deterministic given (dataset, config).
    """
    records = dataset.subset("train")
    if not records:
        raise ValueError("dataset has no training records")
    if params is None:
        params = rewardnet.init_params(config.seed)
    adam = AdamState(lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)
    report = TrainReport(rows=[], initial_nll=probe_nll(params, records, config, spec))

    # Uniform seeded draw of training timesteps, fixed across epochs: the
    # objective stays the same every epoch, so the learning curve reflects
    # optimization progress rather than resampling noise.
    sample_plan = [
        (world, traj,
         rng.integers(0, len(traj.states), size=config.samples_per_trajectory))
        for world, traj in records
    ]

    for epoch in range(config.epochs):
        t0 = time.time()
        warm = (min(1.0, (epoch + 1) / config.lr_warmup_epochs)
                if config.lr_warmup_epochs > 0 else 1.0)
        adam.lr = config.learning_rate * warm * config.lr_decay ** epoch
        l1s, gnorms = [], []
        batch_count = 0
        params.zero_grads()
        for world, traj, idx in sample_plan:
            for t_index in idx:
                stats = train_step(params, world, traj, int(t_index), config, spec)
                l1s.append(stats["svf_l1"])
                batch_count += 1
                if batch_count == MINIBATCH:
                    gnorms.append(_flush_update(params, adam, config, batch_count))
                    batch_count = 0
        if batch_count:
            gnorms.append(_flush_update(params, adam, config, batch_count))

        row = {
            "epoch": epoch,
            "mean_nll": probe_nll(params, records, config, spec),
            "mean_svf_l1": float(np.mean(l1s)),
            "grad_norm": float(np.mean(gnorms)) if gnorms else 0.0,
            "wall_time_s": time.time() - t0,
        }
        report.rows.append(row)
        if log is not None:
            log(f"epoch {epoch}: nll={row['mean_nll']:.4f} "
                f"svf_l1={row['mean_svf_l1']:.4f}")
        if out_dir is not None and config.checkpoint_every > 0 and \
                (epoch + 1) % config.checkpoint_every == 0:
            save_checkpoint(params, os.path.join(out_dir, f"epoch_{epoch:04d}.ckpt"))

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        save_checkpoint(params, os.path.join(out_dir, "final.ckpt"))
        report.to_csv(os.path.join(out_dir, "train_report.csv"))
    return params, report


def _flush_update(params, adam, config, batch_count):
    for g in params.grads.values():
        g /= batch_count
    norm = math.sqrt(sum(float((g * g).sum()) for g in params.grads.values()))
    apply_update(params, adam, l2_lambda=config.l2_lambda)
    params.zero_grads()
    return norm


def eval_indices(n_states):
    """Index-stable evaluation timesteps: start, quartiles, and terminal."""
    idx = {0, n_states // 4, n_states // 2, (3 * n_states) // 4, n_states - 1}
    return sorted(i for i in idx if 0 <= i < n_states)


def evaluate(params, dataset, config, out_dir=None, spec=GridSpec()):
    """Per-sample evaluation over the test split.

    Emits reward / SVF / environment maps and computes expert NLL, the L1
    distance between normalized SVF maps, and (for terminal samples) the
    fraction of policy SVF mass inside the goal region.
    """
    records = dataset.subset("test")
    results = []
    for rec_i, (world, traj) in enumerate(records):
        for t_index in eval_indices(len(traj.states)):
            stack = extract_features(world, traj, t_index, spec)
            reward, _ = forward(params, stack)
            reward = np.clip(reward, -REWARD_CLIP, REWARD_CLIP)
            mdp = build_local_mdp(stack, config.gamma)
            sub = _strided_future(traj, t_index, config.mdp_stride)
            cells = _expert_cells(sub, 0, spec, config.svf_horizon)
            horizon = max(len(cells), 1)
            _, policies = soft_vi_chain(mdp, reward, horizon)
            n = spec.cells_per_side
            model_svf = expected_svf(mdp, policies, _center_init(n), horizon)
            exp_svf = expert_svf_window(sub, 0, spec, horizon, config.gamma)
            ms = model_svf / max(model_svf.sum(), 1e-300)
            es = exp_svf / max(exp_svf.sum(), 1e-300)
            goal_mask = stack[2] > 0.5
            terminal = bool(goal_mask[n // 2, n // 2])
            res = {
                "record": rec_i,
                "t_index": t_index,
                "nll": expert_nll(policies, mdp, cells),
                "svf_l1": float(np.abs(ms - es).sum()),
                "terminal": terminal,
                "goal_mass": float(model_svf[goal_mask].sum() / model_svf.sum())
                             if goal_mask.any() else 0.0,
                "reward": reward,
                "model_svf": model_svf,
                "expert_svf": exp_svf,
                "env": stack[0],
                "world": world,
                "state": traj.states[t_index],
            }
            results.append(res)
            if out_dir is not None:
                stem = os.path.join(out_dir, f"{rec_i:04d}_{t_index:04d}")
                write_pgm(stack[0], stem + "_env.pgm")
                write_pgm(reward, stem + "_reward.pgm")
                write_pgm(model_svf, stem + "_svf.pgm")
    return results


def svf_components(svf, support_frac=0.01, mass_frac=0.05, exclude_radius=0):
    """Count disjoint connected components of SVF support carrying at least
    ``mass_frac`` of the total mass. Support = cells above support_frac of
    the peak cell.

    ``exclude_radius`` masks out cells near the window center first: all
    rollouts share the start cell, so distinct path branches only separate
    once the common stem is removed.
    """
    svf = np.asarray(svf, dtype=float)
    if exclude_radius > 0:
        n = svf.shape[0]
        iy, ix = np.mgrid[0:n, 0:n]
        svf = svf * (((iy - n // 2) ** 2 + (ix - n // 2) ** 2)
                     > exclude_radius ** 2)
    total = svf.sum()
    if total <= 0:
        return 0
    mask = svf > support_frac * svf.max()
    labels, n = ndimage.label(mask)
    count = 0
    for i in range(1, n + 1):
        if svf[labels == i].sum() >= mass_frac * total:
            count += 1
    return count


def svf_mean_displacement(svf):
    """SVF-weighted mean cell offset (dy, dx) from the window center."""
    svf = np.asarray(svf, dtype=float)
    n = svf.shape[0]
    iy, ix = np.mgrid[0:n, 0:n]
    total = svf.sum()
    return (float(((iy - n // 2) * svf).sum() / total),
            float(((ix - n // 2) * svf).sum() / total))
