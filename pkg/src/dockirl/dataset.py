"""Expert demonstration dataset: generation, persistence, loading.

One JSON record per line: {"world": {...}, "states": [[t,x,y,psi,u,v,r],...],
"split": "train"|"test"}. Floats are printed with 6 significant digits so
identical seeds produce byte-identical files.
"""

import json
import os
import tempfile
from dataclasses import dataclass

from .control import TrackingDiverged, Trajectory, track_path, trajectory_is_valid
from .planner import NoPathFound, plan_rrt_star
from .world import (VesselState, WorldConfig, _f6, build_world,
                    world_from_json, world_to_json)

STALL_FAILURE_FRACTION = 0.2
MIN_ATTEMPTS_BEFORE_STALL = 20


class GenerationStalled(Exception):
    """Too large a fraction of attempted seeds failed planning or tracking."""


@dataclass(frozen=True)
class Dataset:
    records: tuple  # (World, Trajectory) pairs
    splits: tuple   # "train" | "test" per record

    def __len__(self):
        return len(self.records)

    def subset(self, split):
        return [rec for rec, s in zip(self.records, self.splits) if s == split]


def _record_line(world, traj, split):
    states = [[_f6(v) for v in s.as_array()] for s in traj.states]
    return json.dumps({"world": json.loads(world_to_json(world)),
                       "states": states, "split": split},
                      separators=(",", ":"))


def generate_record(seed, max_iters=10000):
    """Build one (world, trajectory) pair, or raise on plan/track failure."""
    world = build_world(WorldConfig(seed=seed))
    start = world.spawn_pose[:2]
    path = plan_rrt_star(world, start, world.goal_center,
                         max_iters=max_iters, rng_seed=seed)
    traj = track_path(world, path)
    if not trajectory_is_valid(world, traj):
        raise TrackingDiverged("recorded trajectory failed validity check")
    return world, traj


def generate_dataset(n_train, n_test, base_seed, out_path=None, max_iters=10000,
                     progress=None):
    """Generate n_train + n_test demonstrations starting from base_seed.

    Seeds that fail planning or tracking are skipped and the seed stream
    advances until the requested counts are met. Raises GenerationStalled if
    more than 20% of attempted seeds fail.
    """
    if n_train <= 0 or n_test < 0:
        raise ValueError("counts must be positive")
    total = n_train + n_test
    records, splits = [], []
    seed = base_seed
    failures = 0
    while len(records) < total:
        attempts = (seed - base_seed) + 1
        try:
            world, traj = generate_record(seed, max_iters=max_iters)
        except (NoPathFound, TrackingDiverged):
            failures += 1
            if attempts >= MIN_ATTEMPTS_BEFORE_STALL and \
                    failures > STALL_FAILURE_FRACTION * attempts:
                raise GenerationStalled(
                    f"{failures}/{attempts} seeds failed planning/tracking")
            seed += 1
            continue
        records.append((world, traj))
        splits.append("train" if len(records) <= n_train else "test")
        if progress is not None:
            progress(len(records), total)
        seed += 1

    ds = Dataset(records=tuple(records), splits=tuple(splits))
    if out_path is not None:
        save_dataset(ds, out_path)
    return ds


def save_dataset(dataset, path):
    """Atomic write (temp + rename) of the line-delimited JSON dataset."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            for (world, traj), split in zip(dataset.records, dataset.splits):
                f.write(_record_line(world, traj, split))
                f.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_dataset(path):
    records, splits = [], []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            world = world_from_json(json.dumps(obj["world"]))
            states = tuple(
                VesselState(t=row[0], x=row[1], y=row[2], psi=row[3],
                            u=row[4], v=row[5], r=row[6])
                for row in obj["states"])
            records.append((world, Trajectory(states=states, world=world)))
            splits.append(obj["split"])
    return Dataset(records=tuple(records), splits=tuple(splits))
