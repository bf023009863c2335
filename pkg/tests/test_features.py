import math

import numpy as np
import pytest

from dockirl.control import Trajectory
from dockirl.features import (GridSpec, N_CHANNELS, PAST_MEMORY, cell_centers,
                              environment_mask, expert_svf_window,
                              extract_features, position_to_cell)
from dockirl.world import VesselState


def _line_traj(world, x0, y0, psi=0.0, n=40, step=0.05):
    states = tuple(VesselState(x=x0 + k * step, y=y0, psi=psi,
                               u=0.5, v=0.1, r=0.2, t=0.1 * k)
                   for k in range(n))
    return Trajectory(states=states, world=world)


def test_grid_spec_validation():
    assert GridSpec().resolution == pytest.approx(0.125)
    with pytest.raises(ValueError):
        GridSpec(cells_per_side=7)
    with pytest.raises(ValueError):
        GridSpec(window_m=0.0)


def test_cell_centers_and_inverse():
    spec = GridSpec()
    cx, cy = 7.3, 8.1
    X, Y = cell_centers(spec, cx, cy)
    assert X.shape == (32, 32)
    for iy, ix in ((0, 0), (5, 20), (31, 31)):
        assert position_to_cell(spec, cx, cy, X[iy, ix], Y[iy, ix]) == (iy, ix)
    assert position_to_cell(spec, cx, cy, cx + 3.0, cy) is None


def test_feature_stack_shapes_and_ranges(basin):
    traj = _line_traj(basin, *basin.spawn_pose[:2])
    stack = extract_features(basin, traj, 10)
    assert stack.shape == (N_CHANNELS, 32, 32)
    assert set(np.unique(stack[0])) <= {0.0, 1.0}
    assert stack[1].min() >= 0.0 and stack[1].max() <= 1.0
    assert set(np.unique(stack[2])) <= {0.0, 1.0}
    assert set(np.unique(stack[3])) <= {0.0, 1.0}
    assert stack[7].min() >= -1.0 and stack[7].max() <= 1.0


def test_kinematic_channels_world_frame(basin):
    traj = _line_traj(basin, *basin.spawn_pose[:2], psi=0.7)
    st = traj.states[3]
    stack = extract_features(basin, traj, 3)
    vx = st.u * math.cos(st.psi) - st.v * math.sin(st.psi)
    vy = st.u * math.sin(st.psi) + st.v * math.cos(st.psi)
    assert np.allclose(stack[4], vx)
    assert np.allclose(stack[5], vy)
    assert np.allclose(stack[6], st.r)


def test_position_encoding_structure(basin):
    traj = _line_traj(basin, *basin.spawn_pose[:2])
    stack = extract_features(basin, traj, 0)
    # X encoding constant along rows, Y along columns, antisymmetric ends
    assert np.allclose(stack[7], stack[7][0][None, :])
    assert np.allclose(stack[8], stack[8][:, 0][:, None])
    assert stack[7][0, 0] == pytest.approx(-stack[7][0, -1])


def test_environment_mask_translation_consistency(basin):
    spec = GridSpec()
    cx, cy = 7.31, 8.27
    a = environment_mask(basin, spec, cx, cy)
    b = environment_mask(basin, spec, cx + spec.resolution, cy)
    # shifting the window one cell right shifts the mask one column left
    assert np.array_equal(a[:, 1:], b[:, :-1])


def test_environment_mask_marks_occupied_bays(basin):
    spec = GridSpec()
    occ = next(i for i in range(8) if basin.occupied[i])
    bx, by = basin.bay_center(occ)
    mask = environment_mask(basin, spec, bx, by)
    assert mask[16, 16] == 1.0
    free = basin.goal_bay
    fx, fy = basin.bay_center(free)
    assert environment_mask(basin, spec, fx, fy)[16, 16] == 0.0


def test_goal_region_channel_centered_on_goal(basin):
    traj = Trajectory(states=(VesselState(x=basin.goal_center[0],
                                          y=basin.goal_center[1], psi=0.0),),
                      world=basin)
    stack = extract_features(basin, traj, 0)
    assert stack[2][16, 16] == 1.0
    # nearest cell center sits half a resolution off the goal point
    assert stack[1][16, 16] > 0.99
    assert stack[1][16, 16] == stack[1].max()


def test_past_trajectory_channel(basin):
    traj = _line_traj(basin, *basin.spawn_pose[:2], n=60)
    t = 40
    stack = extract_features(basin, traj, t)
    assert stack[3][16, 16] == 1.0  # current position always marked
    # only the last PAST_MEMORY states contribute
    marked = int(stack[3].sum())
    assert 1 <= marked <= PAST_MEMORY
    older = extract_features(basin, traj, t)[3]
    assert np.array_equal(older, stack[3])  # deterministic


def test_extract_features_bad_index(basin):
    traj = _line_traj(basin, *basin.spawn_pose[:2], n=5)
    with pytest.raises(IndexError):
        extract_features(basin, traj, 5)


def test_expert_svf_window_weights(basin):
    spec = GridSpec()
    x0, y0 = basin.spawn_pose[:2]
    # three states, one cell apart along +x
    states = tuple(VesselState(x=x0 + k * spec.resolution, y=y0, psi=0.0)
                   for k in range(3))
    traj = Trajectory(states=states, world=basin)
    svf = expert_svf_window(traj, 0, spec, horizon=10, gamma=0.5)
    cells = [position_to_cell(spec, x0, y0, s.x, s.y) for s in states]
    assert svf[cells[0]] == pytest.approx(1.0)
    assert svf[cells[1]] == pytest.approx(0.5)
    assert svf[cells[2]] == pytest.approx(0.25)
    assert svf.sum() == pytest.approx(1.75)


def test_expert_svf_window_truncates_at_exit(basin):
    spec = GridSpec()
    x0, y0 = basin.spawn_pose[:2]
    # jumps out of the window at the third state
    states = (VesselState(x=x0, y=y0, psi=0.0),
              VesselState(x=x0 + 0.5, y=y0, psi=0.0),
              VesselState(x=x0 + 10.0, y=y0, psi=0.0),
              VesselState(x=x0, y=y0, psi=0.0))
    traj = Trajectory(states=states, world=basin)
    svf = expert_svf_window(traj, 0, spec, horizon=10, gamma=1.0)
    assert svf.sum() == pytest.approx(2.0)  # states after the exit ignored
