"""Hand-to-robot teleoperation retargeting, recording, and retrieval."""

from .calibration import (
    AnchorSet,
    CalibrationFrame,
    DwellDetector,
    SharedMap,
    build_frame,
    pair_frames,
)
from .control import (
    SerialScheduler,
    SerialSchedulerConfig,
    SmoothingConfig,
    smooth,
)
from .episode import (
    EpisodeManifest,
    EpisodeRecord,
    episode_stats,
    read_episode,
    write_episode,
)
from .geometry import Pose, orthonormalize, rotation_angle
from .retarget import (
    GripperConfig,
    GripperState,
    HandKeypoints,
    HandSample,
    Mu,
    RobotCommand,
    TrackedPointStrategy,
    compute_basis_change,
    gripper_from_pinch,
    map_position,
    map_rotation,
    project_mu,
    retarget_step,
    select_tracked_point,
)
from .retrieval import FeatureVector, KnnIndex, index_build, knn_query
from .session import Session, SessionConfig
from .simulator import SimArmConfig, SimArmState, arm_tick

__version__ = "0.1.0"

__all__ = [
    "AnchorSet", "CalibrationFrame", "DwellDetector", "SharedMap",
    "build_frame", "pair_frames",
    "SerialScheduler", "SerialSchedulerConfig", "SmoothingConfig", "smooth",
    "EpisodeManifest", "EpisodeRecord", "episode_stats", "read_episode",
    "write_episode",
    "Pose", "orthonormalize", "rotation_angle",
    "GripperConfig", "GripperState", "HandKeypoints", "HandSample", "Mu",
    "RobotCommand", "TrackedPointStrategy", "compute_basis_change",
    "gripper_from_pinch", "map_position", "map_rotation", "project_mu",
    "retarget_step", "select_tracked_point",
    "FeatureVector", "KnnIndex", "index_build", "knn_query",
    "Session", "SessionConfig",
    "SimArmConfig", "SimArmState", "arm_tick",
]
