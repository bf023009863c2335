"""Carrot-following PD tracking of a planned path with the 3-DOF vessel."""

import math
from dataclasses import dataclass

import numpy as np

from .world import VesselState, is_collision, step_vessel, wrap_angle


@dataclass(frozen=True)
class PDGains:
    kp_xy: float = 40.0
    kd_xy: float = 25.0
    kp_psi: float = 10.0
    kd_psi: float = 6.0
    f_max: float = 50.0
    m_max: float = 20.0


DEFAULT_DT = 0.1
LOOKAHEAD = 0.5
FINISH_TOLERANCE = 0.15
CROSS_TRACK_LIMIT = 1.0
TIME_BUDGET = 300.0
BAY_BLEND_DIST = 1.5


class TrackingDiverged(Exception):
    """Cross-track error or time budget exceeded while following the path."""


@dataclass(frozen=True)
class Trajectory:
    states: tuple  # time-ordered VesselState at fixed dt
    world: object

    def __len__(self):
        return len(self.states)

    def positions(self):
        return np.array([(s.x, s.y) for s in self.states])


def _arc_lengths(wps):
    seg = np.hypot(np.diff(wps[:, 0]), np.diff(wps[:, 1]))
    return np.concatenate([[0.0], np.cumsum(seg)])


def _point_at(wps, arcs, s):
    s = min(max(s, 0.0), arcs[-1])
    i = int(np.searchsorted(arcs, s, side="right")) - 1
    i = min(i, len(wps) - 2)
    seg = arcs[i + 1] - arcs[i]
    f = 0.0 if seg < 1e-12 else (s - arcs[i]) / seg
    p = wps[i] + f * (wps[i + 1] - wps[i])
    d = wps[i + 1] - wps[i]
    heading = math.atan2(d[1], d[0]) if np.hypot(*d) > 1e-12 else 0.0
    return p, heading


def _bay_entry_heading(world):
    """Heading that points into the goal bay (south bays face -y, north +y)."""
    n = world.config.docks_per_side
    return -math.pi / 2 if world.goal_bay < n else math.pi / 2


def track_path(world, path, gains=PDGains(), dt=DEFAULT_DT):
    """Follow the path with a carrot PD law; returns the recorded Trajectory.

    The desired heading follows the path tangent and blends to the bay entry
    direction over the final stretch. Raises TrackingDiverged if the vessel
    strays more than CROSS_TRACK_LIMIT from the path or runs out of time.
    """
    wps = np.asarray(path.waypoints, dtype=float)
    x0, y0, psi0 = world.spawn_pose
    if len(wps) == 1:
        return Trajectory(states=(VesselState(x=x0, y=y0, psi=psi0),), world=world)

    arcs = _arc_lengths(wps)
    total = arcs[-1]
    goal = wps[-1]
    bay_psi = _bay_entry_heading(world)

    state = VesselState(x=x0, y=y0, psi=psi0)
    states = [state]
    n_steps = int(TIME_BUDGET / dt)
    for _ in range(n_steps):
        p = np.array([state.x, state.y])
        if np.hypot(*(p - goal)) < FINISH_TOLERANCE:
            return Trajectory(states=tuple(states), world=world)

        # closest point on the polyline (by dense arc sampling near last progress)
        d2 = (wps[:, 0] - p[0]) ** 2 + (wps[:, 1] - p[1]) ** 2
        near = int(np.argmin(d2))
        s_near, cross = _project(wps, arcs, near, p)
        if cross > CROSS_TRACK_LIMIT:
            raise TrackingDiverged(f"cross-track error {cross:.2f} m")

        carrot, tangent = _point_at(wps, arcs, s_near + LOOKAHEAD)
        remaining = total - s_near
        if remaining < BAY_BLEND_DIST:
            w = remaining / BAY_BLEND_DIST
            psi_des = wrap_angle(bay_psi + w * wrap_angle(tangent - bay_psi))
        else:
            psi_des = tangent

        ex, ey = carrot - p
        cp, sp = math.cos(state.psi), math.sin(state.psi)
        ex_b = cp * ex + sp * ey
        ey_b = -sp * ex + cp * ey
        fx = gains.kp_xy * ex_b - gains.kd_xy * state.u
        fy = gains.kp_xy * ey_b - gains.kd_xy * state.v
        mz = gains.kp_psi * wrap_angle(psi_des - state.psi) - gains.kd_psi * state.r
        fx = min(max(fx, -gains.f_max), gains.f_max)
        fy = min(max(fy, -gains.f_max), gains.f_max)
        mz = min(max(mz, -gains.m_max), gains.m_max)

        state = step_vessel(state, (fx, fy, mz), dt)
        states.append(state)

    raise TrackingDiverged(f"time budget {TIME_BUDGET:.0f} s exceeded")


def _project(wps, arcs, near, p):
    """Arc-length of the closest polyline point to p, and the distance to it."""
    best_s, best_d = arcs[near], math.hypot(*(wps[near] - p))
    for i in (near - 1, near):
        if 0 <= i < len(wps) - 1:
            a, b = wps[i], wps[i + 1]
            ab = b - a
            L2 = float(ab @ ab)
            if L2 < 1e-18:
                continue
            f = min(max(float((p - a) @ ab) / L2, 0.0), 1.0)
            q = a + f * ab
            d = math.hypot(*(q - p))
            if d < best_d:
                best_d = d
                best_s = arcs[i] + f * math.sqrt(L2)
    return best_s, best_d


def trajectory_is_valid(world, traj, goal_tolerance=0.3):
    """Collision-free at every state and terminates at the goal bay center."""
    for s in traj.states:
        if is_collision(world, s):
            return False
    gx, gy = world.goal_center
    last = traj.states[-1]
    return math.hypot(last.x - gx, last.y - gy) <= goal_tolerance
