"""borderforge: interactive restriction of a simulated mobile robot's
workspace through laser-pointer virtual borders, fused multi-camera
perception, occupancy-grid map integration and path-planning enforcement."""

from .extraction import (
    Cluster,
    ExtractionError,
    ExtractionParams,
    dbscan,
    extract_border,
    extract_seed,
    generate_polygon,
    select_border_cluster,
    thin,
)
from .geometry import Point2, Polyline, Pose2, RigidTransform3, distance, polyline_length
from .gridmap import (
    BorderKind,
    Occupancy,
    OccupancyGrid,
    VirtualBorder,
    extend_to_physical_borders,
    integrate_border,
    jsi,
    load_map,
    rasterize_chain,
    save_map,
)
from .harness import (
    RunReport,
    Scenario,
    ScriptedStroke,
    batch_report,
    builtin_scenarios,
    load_scenario,
    run_scenario,
    save_scenario,
)
from .interaction import Command, InteractionSession, Mode, RobotSim, SessionState
from .perception import (
    CameraIntrinsics,
    CameraKind,
    CameraModel,
    GroundPoint,
    backproject_ground,
    camera_pose,
    fov_polygon,
    fuse,
    project_to_image,
    simulate_detection,
)
from .planner import Path, plan, reachable

__version__ = "0.1.0"

__all__ = [
    "BorderKind",
    "CameraIntrinsics",
    "CameraKind",
    "CameraModel",
    "Cluster",
    "Command",
    "ExtractionError",
    "ExtractionParams",
    "GroundPoint",
    "InteractionSession",
    "Mode",
    "Occupancy",
    "OccupancyGrid",
    "Path",
    "Point2",
    "Polyline",
    "Pose2",
    "RigidTransform3",
    "RobotSim",
    "RunReport",
    "Scenario",
    "ScriptedStroke",
    "SessionState",
    "VirtualBorder",
    "backproject_ground",
    "batch_report",
    "builtin_scenarios",
    "camera_pose",
    "dbscan",
    "distance",
    "extend_to_physical_borders",
    "extract_border",
    "extract_seed",
    "fov_polygon",
    "fuse",
    "generate_polygon",
    "integrate_border",
    "jsi",
    "load_map",
    "load_scenario",
    "plan",
    "polyline_length",
    "project_to_image",
    "rasterize_chain",
    "reachable",
    "run_scenario",
    "save_map",
    "save_scenario",
    "select_border_cluster",
    "simulate_detection",
    "thin",
]
