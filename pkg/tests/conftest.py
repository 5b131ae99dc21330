import math
from types import SimpleNamespace

import numpy as np
import pytest

from borderforge.geometry import Point2, Pose2
from borderforge.gridmap import Occupancy, OccupancyGrid
from borderforge.interaction import InteractionSession, Mode, RobotSim
from borderforge.perception import CameraIntrinsics, CameraKind, CameraModel, camera_pose


def make_nadir_camera(cam_id, x, y, height=2.95, fx=1500.0, width=1920, height_px=1080):
    return CameraModel(
        id=cam_id,
        intrinsics=CameraIntrinsics(
            fx=fx, fy=fx, cx=width / 2, cy=height_px / 2, width=width, height=height_px
        ),
        pose=camera_pose(x, y, height, yaw=math.pi / 2, pitch=math.pi / 2),
        kind=CameraKind.STATIONARY,
    )


@pytest.fixture
def mini_world():
    """6 m x 4 m empty room with one ceiling camera over the center."""
    grid = OccupancyGrid.filled(240, 160, 0.025)
    cells = np.array(grid.cells)
    cells[0, :] = Occupancy.OCCUPIED
    cells[-1, :] = Occupancy.OCCUPIED
    cells[:, 0] = Occupancy.OCCUPIED
    cells[:, -1] = Occupancy.OCCUPIED
    grid = grid.with_cells(cells)
    cam = make_nadir_camera("ceil", 3.0, 2.0)
    world = SimpleNamespace(walls=[], noise_sigma={"stationary": 0.0, "mobile": 0.0})
    return SimpleNamespace(grid=grid, camera=cam, world=world)


def make_session(mini, mode=Mode.NRS, seed=0, **kwargs):
    robot = RobotSim(pose=Pose2(Point2(1.0, 1.0), 0.0))
    return InteractionSession(
        prior=mini.grid,
        robot=robot,
        world=mini.world,
        cameras=[mini.camera],
        mode=mode,
        rng_seed=seed,
        **kwargs,
    )
