"""RRT* path planning over the dock basin.

The vessel is planned as a point against obstacles inflated by the hull
circumradius plus a tracking-error margin, so any heading along the path is
collision-free with slack for the controller. The inner loop is numba-jitted;
all randomness is drawn up front from a seeded numpy generator so plans are
reproducible.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .world import VesselState, is_collision

STEP_SIZE = 0.3
NEIGHBOR_RADIUS = 1.0
GOAL_BIAS = 0.05
GOAL_TOLERANCE = 0.3
EDGE_CHECK_RES = 0.05
TRACKING_MARGIN = 0.25


class NoPathFound(Exception):
    """The tree never reached the goal tolerance within the iteration budget."""


@dataclass(frozen=True)
class Path:
    waypoints: np.ndarray  # (n, 2)
    cost: float


def inflated_obstacles(world):
    c = world.config
    rad = 0.5 * math.hypot(c.vessel_length_m, c.vessel_beam_m) + TRACKING_MARGIN
    rects = []
    for x0, y0, x1, y1 in world.obstacles:
        rects.append((x0 - rad, y0 - rad, x1 + rad, y1 + rad))
    return np.array(rects, dtype=float).reshape(-1, 4), rad


@njit(cache=True)
def _point_free(px, py, rects, xmax, ymax, clear):
    if px < clear or px > xmax - clear or py < clear or py > ymax - clear:
        return False
    for k in range(rects.shape[0]):
        if rects[k, 0] <= px <= rects[k, 2] and rects[k, 1] <= py <= rects[k, 3]:
            return False
    return True


@njit(cache=True)
def _edge_free(ax, ay, bx, by, rects, xmax, ymax, clear, res):
    d = math.hypot(bx - ax, by - ay)
    n = int(d / res) + 1
    for i in range(n + 1):
        s = i / n
        if not _point_free(ax + s * (bx - ax), ay + s * (by - ay),
                           rects, xmax, ymax, clear):
            return False
    return True


@njit(cache=True)
def _chain_cost(idx, parents, edge_len):
    c = 0.0
    while idx >= 0:
        c += edge_len[idx]
        idx = parents[idx]
    return c


@njit(cache=True)
def _rrt_star(samples, start, goal, rects, xmax, ymax, clear,
              step, radius, goal_tol, res):
    max_iters = samples.shape[0]
    nodes = np.empty((max_iters + 1, 2))
    parents = np.full(max_iters + 1, -1, dtype=np.int64)
    edge_len = np.zeros(max_iters + 1)
    nodes[0] = start
    n = 1

    for it in range(max_iters):
        rx, ry = samples[it, 0], samples[it, 1]
        if samples[it, 2] < GOAL_BIAS:
            rx, ry = goal[0], goal[1]

        # nearest node
        best_d, near = 1e18, 0
        for j in range(n):
            d = (nodes[j, 0] - rx) ** 2 + (nodes[j, 1] - ry) ** 2
            if d < best_d:
                best_d, near = d, j
        nx, ny = nodes[near, 0], nodes[near, 1]
        d = math.hypot(rx - nx, ry - ny)
        if d < 1e-9:
            continue
        if d > step:
            rx = nx + step * (rx - nx) / d
            ry = ny + step * (ry - ny) / d
        if not _point_free(rx, ry, rects, xmax, ymax, clear):
            continue
        if not _edge_free(nx, ny, rx, ry, rects, xmax, ymax, clear, res):
            continue

        # choose parent among neighbors within the rewiring radius
        best_parent = near
        best_cost = _chain_cost(near, parents, edge_len) + math.hypot(rx - nx, ry - ny)
        for j in range(n):
            dj = math.hypot(nodes[j, 0] - rx, nodes[j, 1] - ry)
            if dj <= radius and j != near:
                cj = _chain_cost(j, parents, edge_len) + dj
                if cj < best_cost and _edge_free(nodes[j, 0], nodes[j, 1],
                                                rx, ry, rects, xmax, ymax,
                                                clear, res):
                    best_cost, best_parent = cj, j
        nodes[n, 0], nodes[n, 1] = rx, ry
        parents[n] = best_parent
        edge_len[n] = math.hypot(rx - nodes[best_parent, 0], ry - nodes[best_parent, 1])
        new = n
        n += 1

        # rewire neighbors through the new node when cheaper
        for j in range(new):
            dj = math.hypot(nodes[j, 0] - rx, nodes[j, 1] - ry)
            if dj <= radius:
                through = best_cost + dj
                if through < _chain_cost(j, parents, edge_len) and \
                        _edge_free(rx, ry, nodes[j, 0], nodes[j, 1],
                                   rects, xmax, ymax, clear, res):
                    parents[j] = new
                    edge_len[j] = dj

    # best goal-reaching node by exact chain cost
    best_idx, best_cost = -1, 1e18
    for j in range(n):
        if math.hypot(nodes[j, 0] - goal[0], nodes[j, 1] - goal[1]) <= goal_tol:
            cj = _chain_cost(j, parents, edge_len)
            if cj < best_cost:
                best_cost, best_idx = cj, j
    return nodes[:n], parents[:n], edge_len[:n], best_idx


def plan_rrt_star(world, start, goal, max_iters=10000, rng_seed=0):
    """Plan a point path from start to goal with a fixed iteration budget.

    Runs exactly ``max_iters`` sampling iterations and returns the cheapest
    path whose endpoint reached the goal tolerance, with the exact goal
    appended as the final waypoint.
    """
    rects, rad = inflated_obstacles(world)
    c = world.config
    xmax, ymax = c.world_width, c.world_height
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)

    rng = np.random.default_rng(rng_seed)
    samples = np.empty((max_iters, 3))
    samples[:, 0] = rng.uniform(0.0, xmax, size=max_iters)
    samples[:, 1] = rng.uniform(0.0, ymax, size=max_iters)
    samples[:, 2] = rng.uniform(0.0, 1.0, size=max_iters)

    nodes, parents, edge_len, best = _rrt_star(
        samples, start, goal, rects, xmax, ymax, rad,
        STEP_SIZE, NEIGHBOR_RADIUS, GOAL_TOLERANCE, EDGE_CHECK_RES)
    if best < 0:
        raise NoPathFound(f"goal not reached after {max_iters} iterations")

    idx, chain = best, []
    while idx >= 0:
        chain.append(idx)
        idx = parents[idx]
    chain.reverse()
    wps = [nodes[i] for i in chain]
    tail = math.hypot(goal[0] - wps[-1][0], goal[1] - wps[-1][1])
    if tail > 1e-9:
        wps.append(goal)
    waypoints = np.array(wps)
    cost = float(np.sum(np.hypot(np.diff(waypoints[:, 0]), np.diff(waypoints[:, 1]))))
    return Path(waypoints=waypoints, cost=cost)


def path_is_collision_free(world, path, resolution=0.05):
    """Sweep the true hull footprint along the path, heading along each segment."""
    wps = path.waypoints
    for i in range(len(wps) - 1):
        ax, ay = wps[i]
        bx, by = wps[i + 1]
        seg = math.hypot(bx - ax, by - ay)
        if seg < 1e-12:
            continue
        psi = math.atan2(by - ay, bx - ax)
        n = int(seg / resolution) + 1
        for k in range(n + 1):
            s = k / n
            st = VesselState(x=ax + s * (bx - ax), y=ay + s * (by - ay), psi=psi)
            if is_collision(world, st):
                return False
    return True
