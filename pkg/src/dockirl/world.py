"""Dock environment construction, collision queries, and 3-DOF vessel dynamics.

The world is a rectangular basin: two rows of docking bays (default 4 per
side) facing each other across a waterway, separated by rectangular piers,
with an open-water margin around the quay block. Four of the eight bays are
occupied by parked vessels; the goal is the unoccupied bay nearest the spawn.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

WALL_THICKNESS = 0.1
PARKED_INSET = 0.5  # parked vessels sit fully inside their bay
SPAWN_ATTEMPTS = 1000


class DegenerateWorldError(Exception):
    """No collision-free spawn found; geometry leaves no room in the waterway."""


@dataclass(frozen=True)
class WorldConfig:
    dock_size_m: float = 3.0
    docks_per_side: int = 4
    waterway_width_m: float = 8.0
    pier_width_m: float = 1.0
    margin_m: float = 2.0
    vessel_length_m: float = 1.0
    vessel_beam_m: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for name in ("dock_size_m", "waterway_width_m", "pier_width_m",
                     "margin_m", "vessel_length_m", "vessel_beam_m"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.docks_per_side < 1:
            raise ValueError("docks_per_side must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 unsigned bits")

    @property
    def world_width(self):
        n = self.docks_per_side
        return n * self.dock_size_m + (n - 1) * self.pier_width_m + 2 * self.margin_m

    @property
    def world_height(self):
        return 2 * self.dock_size_m + self.waterway_width_m + 2 * self.margin_m


@dataclass(frozen=True)
class VesselState:
    x: float
    y: float
    psi: float
    u: float = 0.0
    v: float = 0.0
    r: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        vals = (self.x, self.y, self.psi, self.u, self.v, self.r, self.t)
        if not all(math.isfinite(w) for w in vals):
            raise ValueError("vessel state must be finite")
        if not (-math.pi < self.psi <= math.pi):
            raise ValueError("psi must be wrapped to (-pi, pi]")

    def as_array(self):
        return np.array([self.t, self.x, self.y, self.psi, self.u, self.v, self.r])


def wrap_angle(a):
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, 2 * math.pi)
    if a <= -math.pi:
        a += 2 * math.pi
    elif a > math.pi:
        a -= 2 * math.pi
    return a


# Rigid-body parameters: diagonal mass matrix and linear damping, sized for
# well-damped PD tracking at this world scale.
MASS = 20.0
YAW_INERTIA = 5.0
DAMP_SURGE = 10.0
DAMP_SWAY = 10.0
DAMP_YAW = 2.0


@dataclass(frozen=True)
class World:
    config: WorldConfig
    bays: tuple          # 2n axis-aligned rects (xmin, ymin, xmax, ymax); south row first
    piers: tuple
    walls: tuple         # thin back walls behind each bay row
    occupied: tuple      # bool per bay
    goal_bay: int
    spawn_pose: tuple    # (x, y, psi)
    parked: tuple = field(default=())  # rects of vessels berthed in occupied bays

    @property
    def obstacles(self):
        """Rects the hull must not touch: piers, walls, parked vessels."""
        return self.piers + self.walls + self.parked

    @property
    def goal_center(self):
        x0, y0, x1, y1 = self.bays[self.goal_bay]
        return (0.5 * (x0 + x1), 0.5 * (y0 + y1))

    def bay_center(self, i):
        x0, y0, x1, y1 = self.bays[i]
        return (0.5 * (x0 + x1), 0.5 * (y0 + y1))

    @property
    def waterway_rect(self):
        c = self.config
        y0 = c.margin_m + c.dock_size_m
        return (0.0, y0, c.world_width, y0 + c.waterway_width_m)


def _layout(config):
    c = config
    n = c.docks_per_side
    w, h = c.world_width, c.world_height
    south_y0, south_y1 = c.margin_m, c.margin_m + c.dock_size_m
    north_y0, north_y1 = h - c.margin_m - c.dock_size_m, h - c.margin_m

    bays, piers = [], []
    for (y0, y1) in ((south_y0, south_y1), (north_y0, north_y1)):
        for i in range(n):
            x0 = c.margin_m + i * (c.dock_size_m + c.pier_width_m)
            bays.append((x0, y0, x0 + c.dock_size_m, y1))
        for i in range(n - 1):
            x0 = c.margin_m + i * (c.dock_size_m + c.pier_width_m) + c.dock_size_m
            piers.append((x0, y0, x0 + c.pier_width_m, y1))

    walls = (
        (c.margin_m, south_y0 - WALL_THICKNESS, w - c.margin_m, south_y0),
        (c.margin_m, north_y1, w - c.margin_m, north_y1 + WALL_THICKNESS),
    )
    return tuple(bays), tuple(piers), walls


def footprint_corners(x, y, psi, length, beam):
    """World-frame corners of the oriented hull rectangle."""
    c, s = math.cos(psi), math.sin(psi)
    hl, hb = 0.5 * length, 0.5 * beam
    corners = []
    for dx, dy in ((hl, hb), (hl, -hb), (-hl, -hb), (-hl, hb)):
        corners.append((x + dx * c - dy * s, y + dx * s + dy * c))
    return corners


def _rects_overlap_sat(corners, rect):
    """Closed-set intersection test between an oriented quad and an AABB."""
    xmin, ymin, xmax, ymax = rect
    xs = [p[0] for p in corners]
    ys = [p[1] for p in corners]
    if max(xs) < xmin or min(xs) > xmax or max(ys) < ymin or min(ys) > ymax:
        return False
    # remaining separating axes: the oriented rectangle's own edge normals
    rect_pts = ((xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax))
    for i in (0, 1):
        ax = corners[i + 1][0] - corners[i][0]
        ay = corners[i + 1][1] - corners[i][1]
        own = [ax * p[0] + ay * p[1] for p in corners]
        other = [ax * p[0] + ay * p[1] for p in rect_pts]
        if max(own) < min(other) or min(own) > max(other):
            return False
    return True


def is_collision(world, state):
    """True iff the hull footprint hits any obstacle or leaves the basin."""
    c = world.config
    corners = footprint_corners(state.x, state.y, state.psi,
                                c.vessel_length_m, c.vessel_beam_m)
    w, h = c.world_width, c.world_height
    for px, py in corners:
        if px < 0.0 or px > w or py < 0.0 or py > h:
            return True
    for rect in world.obstacles:
        if _rects_overlap_sat(corners, rect):
            return True
    return False


def build_world(config):
    """Deterministically build a World from a config; all randomness flows
    from ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    bays, piers, walls = _layout(config)
    n_bays = 2 * config.docks_per_side

    n_occupied = n_bays // 2
    occ_idx = rng.choice(n_bays, size=n_occupied, replace=False)
    occupied = tuple(i in set(int(j) for j in occ_idx) for i in range(n_bays))

    parked = []
    for i, (x0, y0, x1, y1) in enumerate(bays):
        if occupied[i]:
            parked.append((x0 + PARKED_INSET, y0 + PARKED_INSET,
                           x1 - PARKED_INSET, y1 - PARKED_INSET))
    parked = tuple(parked)

    probe = World(config=config, bays=bays, piers=piers, walls=walls,
                  occupied=occupied, goal_bay=0, spawn_pose=(0, 0, 0),
                  parked=parked)

    c = config
    clearance = c.vessel_length_m
    x_lo, x_hi = clearance, c.world_width - clearance
    y_lo = c.margin_m + c.dock_size_m + clearance
    y_hi = c.world_height - c.margin_m - c.dock_size_m - clearance
    if x_hi <= x_lo or y_hi <= y_lo:
        raise DegenerateWorldError("waterway too small for spawn clearance")

    spawn = None
    for _ in range(SPAWN_ATTEMPTS):
        x = rng.uniform(x_lo, x_hi)
        y = rng.uniform(y_lo, y_hi)
        psi = wrap_angle(rng.uniform(-math.pi, math.pi))
        if not is_collision(probe, VesselState(x=x, y=y, psi=psi)):
            spawn = (x, y, psi)
            break
    if spawn is None:
        raise DegenerateWorldError(
            f"no collision-free spawn in {SPAWN_ATTEMPTS} attempts")

    free = [i for i in range(n_bays) if not occupied[i]]
    dists = []
    for i in free:
        bx, by = 0.5 * (bays[i][0] + bays[i][2]), 0.5 * (bays[i][1] + bays[i][3])
        dists.append(math.hypot(bx - spawn[0], by - spawn[1]))
    goal_bay = free[int(np.argmin(dists))]

    return World(config=config, bays=bays, piers=piers, walls=walls,
                 occupied=occupied, goal_bay=goal_bay, spawn_pose=spawn,
                 parked=parked)


def step_vessel(state, force, dt):
    """Semi-implicit Euler step of the damped 3-DOF rigid body.

    ``force`` is (surge force, sway force, yaw moment) in the body frame.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    fx, fy, mz = force
    if not all(math.isfinite(f) for f in (fx, fy, mz)):
        raise ValueError("forces must be finite")
    u = state.u + dt * (fx - DAMP_SURGE * state.u) / MASS
    v = state.v + dt * (fy - DAMP_SWAY * state.v) / MASS
    r = state.r + dt * (mz - DAMP_YAW * state.r) / YAW_INERTIA
    cp, sp = math.cos(state.psi), math.sin(state.psi)
    x = state.x + dt * (u * cp - v * sp)
    y = state.y + dt * (u * sp + v * cp)
    psi = wrap_angle(state.psi + dt * r)
    return VesselState(x=x, y=y, psi=psi, u=u, v=v, r=r, t=state.t + dt)


def _f6(x):
    # 6 significant digits, round-tripped so json prints the short form
    return float(f"{float(x):.6g}")


def world_to_json(world):
    """Single-line JSON with fixed field order and 6-digit floats."""
    c = world.config
    obj = {
        "config": {
            "dock_size_m": _f6(c.dock_size_m),
            "docks_per_side": c.docks_per_side,
            "waterway_width_m": _f6(c.waterway_width_m),
            "pier_width_m": _f6(c.pier_width_m),
            "margin_m": _f6(c.margin_m),
            "vessel_length_m": _f6(c.vessel_length_m),
            "vessel_beam_m": _f6(c.vessel_beam_m),
            "seed": c.seed,
        },
        "bays": [[_f6(v) for v in b] for b in world.bays],
        "occupied": [int(o) for o in world.occupied],
        "goal_bay": world.goal_bay,
        "spawn_pose": [_f6(v) for v in world.spawn_pose],
    }
    return json.dumps(obj, separators=(",", ":"))


def world_from_json(line):
    obj = json.loads(line)
    cfg = obj["config"]
    config = WorldConfig(**cfg)
    bays, piers, walls = _layout(config)
    occupied = tuple(bool(o) for o in obj["occupied"])
    parked = tuple(
        (x0 + PARKED_INSET, y0 + PARKED_INSET, x1 - PARKED_INSET, y1 - PARKED_INSET)
        for (x0, y0, x1, y1), occ in zip(bays, occupied) if occ)
    return World(config=config, bays=bays, piers=piers, walls=walls,
                 occupied=occupied, goal_bay=int(obj["goal_bay"]),
                 spawn_pose=tuple(obj["spawn_pose"]), parked=parked)
