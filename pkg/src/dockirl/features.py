"""Vessel-centered feature rasterization for the reward network.

Nine channels over a square window translated (not rotated) to the vessel
position:

  0 environment   binary obstacle / occupied-bay / out-of-world mask
  1 goal prox     1 - d(cell, goal center)/d_max, clipped to [0, 1]
  2 goal region   binary goal-bay mask
  3 past traj     binary mask of the last PAST_MEMORY positions
  4 vx            world-frame x velocity, uniform
  5 vy            world-frame y velocity, uniform
  6 omega         yaw rate, uniform
  7 pos-enc X     cell-center local x offset normalized to [-1, 1]
  8 pos-enc Y     cell-center local y offset normalized to [-1, 1]
"""

import math
from dataclasses import dataclass

import numpy as np

N_CHANNELS = 9
PAST_MEMORY = 20


@dataclass(frozen=True)
class GridSpec:
    cells_per_side: int = 32
    window_m: float = 4.0

    def __post_init__(self):
        if self.cells_per_side < 8 or self.cells_per_side % 2 != 0:
            raise ValueError("cells_per_side must be even and >= 8")
        if self.window_m <= 0:
            raise ValueError("window_m must be positive")

    @property
    def resolution(self):
        return self.window_m / self.cells_per_side


def cell_centers(spec, cx, cy):
    """World coordinates of cell centers for a window centered at (cx, cy).

    Returns (X, Y) arrays indexed [iy, ix] with iy increasing along +y.
    """
    n = spec.cells_per_side
    res = spec.resolution
    offs = (np.arange(n) + 0.5) * res - 0.5 * spec.window_m
    X = cx + offs[None, :].repeat(n, axis=0)
    Y = cy + offs[:, None].repeat(n, axis=1)
    return X, Y


def _in_rect_mask(X, Y, rect):
    x0, y0, x1, y1 = rect
    return (X >= x0) & (X <= x1) & (Y >= y0) & (Y <= y1)


def environment_mask(world, spec, cx, cy):
    """Binary mask of cells whose center lies in any blocked region."""
    X, Y = cell_centers(spec, cx, cy)
    c = world.config
    mask = (X < 0) | (X > c.world_width) | (Y < 0) | (Y > c.world_height)
    blocked = list(world.piers) + list(world.walls)
    blocked += [world.bays[i] for i in range(len(world.bays)) if world.occupied[i]]
    for rect in blocked:
        mask |= _in_rect_mask(X, Y, rect)
    return mask.astype(float)


def position_to_cell(spec, cx, cy, px, py):
    """Cell index (iy, ix) of world point (px, py), or None if off-window."""
    n = spec.cells_per_side
    ix = int(math.floor((px - cx + 0.5 * spec.window_m) / spec.resolution))
    iy = int(math.floor((py - cy + 0.5 * spec.window_m) / spec.resolution))
    if 0 <= ix < n and 0 <= iy < n:
        return iy, ix
    return None


def extract_features(world, trajectory, t_index, spec=GridSpec()):
    """Rasterize the 9-channel feature stack at one trajectory timestep."""
    if not (0 <= t_index < len(trajectory.states)):
        raise IndexError("t_index out of range")
    st = trajectory.states[t_index]
    cx, cy = st.x, st.y
    n = spec.cells_per_side
    stack = np.zeros((N_CHANNELS, n, n))

    stack[0] = environment_mask(world, spec, cx, cy)

    c = world.config
    gx, gy = world.goal_center
    X, Y = cell_centers(spec, cx, cy)
    d_max = 0.5 * math.hypot(c.world_width, c.world_height)
    stack[1] = np.clip(1.0 - np.hypot(X - gx, Y - gy) / d_max, 0.0, 1.0)

    stack[2] = _in_rect_mask(X, Y, world.bays[world.goal_bay]).astype(float)

    first = max(0, t_index - (PAST_MEMORY - 1))
    for k in range(first, t_index + 1):
        s = trajectory.states[k]
        cell = position_to_cell(spec, cx, cy, s.x, s.y)
        if cell is not None:
            stack[3][cell] = 1.0

    cp, sp = math.cos(st.psi), math.sin(st.psi)
    stack[4] = st.u * cp - st.v * sp
    stack[5] = st.u * sp + st.v * cp
    stack[6] = st.r

    offs = (np.arange(n) + 0.5) * spec.resolution - 0.5 * spec.window_m
    enc = offs / (0.5 * spec.window_m)
    stack[7] = enc[None, :]
    stack[8] = enc[:, None]
    return stack


def expert_svf_window(trajectory, t_index, spec=GridSpec(), horizon=64, gamma=0.99):
    """Discounted visit counts of the demonstrated future inside the window.

    Accumulates gamma**k on the cell of state t_index+k; truncates at the end
    of the demonstration or at the first step that leaves the window.
    """
    if not (0 <= t_index < len(trajectory.states)):
        raise IndexError("t_index out of range")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    st = trajectory.states[t_index]
    n = spec.cells_per_side
    svf = np.zeros((n, n))
    for k in range(horizon):
        j = t_index + k
        if j >= len(trajectory.states):
            break
        s = trajectory.states[j]
        cell = position_to_cell(spec, st.x, st.y, s.x, s.y)
        if cell is None:
            break
        svf[cell] += gamma ** k
    return svf
