"""Hand-to-robot retargeting: position projection, rotation transport,
tracked-point selection, and pinch-driven gripper inference.

Position: the hand displacement from the human calibration origin is
projected onto the human axes, giving dimensionless coefficients that are
replayed in the robot basis, with the z coefficient scaled by eta.

Rotation: the hand rotation relative to its latched initial orientation is
transported to the robot side by conjugation with a basis-change rotation,
so equal relative rotations are reproduced on the arm.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .calibration import CalibrationFrame, SharedMap
from .errors import BadConfig, MissingKeypoint, NotCalibrated

# 21-joint hand layout (MediaPipe ordering).
HAND_JOINT_NAMES = (
    "wrist",
    "thumb_cmc", "thumb_mcp", "thumb_ip", "thumb_tip",
    "index_mcp", "index_pip", "index_dip", "index_tip",
    "middle_mcp", "middle_pip", "middle_dip", "middle_tip",
    "ring_mcp", "ring_pip", "ring_dip", "ring_tip",
    "pinky_mcp", "pinky_pip", "pinky_dip", "pinky_tip",
)
JOINT_INDEX = {name: i for i, name in enumerate(HAND_JOINT_NAMES)}
NUM_JOINTS = len(HAND_JOINT_NAMES)


class TrackedPointStrategy(enum.Enum):
    WRIST = "wrist"
    THUMB_INDEX_MIDPOINT = "midpoint"
    INDEX_MCP = "mcp"


class HandKeypoints:
    """A (21, 3) array of joint positions with named access."""

    __slots__ = ("points",)

    def __init__(self, points: np.ndarray):
        points = np.asarray(points, dtype=float)
        if points.shape != (NUM_JOINTS, 3):
            raise MissingKeypoint(f"expected ({NUM_JOINTS}, 3) keypoints, got {points.shape}")
        if not np.all(np.isfinite(points)):
            raise MissingKeypoint("keypoints must be finite")
        self.points = points

    def joint(self, name: str) -> np.ndarray:
        try:
            return self.points[JOINT_INDEX[name]]
        except KeyError:
            raise MissingKeypoint(name) from None


@dataclass(frozen=True)
class HandSample:
    """One frame from the operator stream."""

    t_ns: int
    keypoints: HandKeypoints
    transform: np.ndarray  # 4x4 hand pose in the human world frame

    def rotation(self) -> np.ndarray:
        return np.asarray(self.transform, dtype=float)[:3, :3]


@dataclass(frozen=True)
class GripperState:
    aperture: float  # 1 = fully open
    closed: bool  # binary command after hysteresis

    OPEN = None  # set below


GripperState.OPEN = GripperState(aperture=1.0, closed=False)


@dataclass(frozen=True)
class GripperConfig:
    d_close: float = 0.02  # m, pinch distance for fully closed
    d_open: float = 0.08  # m, pinch distance for fully open
    hysteresis: float = 0.01  # m, dead zone around the flip point

    def __post_init__(self):
        if not (self.d_open > self.d_close > 0) or self.hysteresis < 0:
            raise BadConfig("need d_open > d_close > 0 and hysteresis >= 0")


@dataclass(frozen=True)
class Mu:
    mu_x: float
    mu_y: float
    mu_z: float


def project_mu(p_h: np.ndarray, frame_h: CalibrationFrame) -> Mu:
    """Projection coefficients of the hand displacement onto the human axes:
    mu_i = e_i . (p_h - o) / |e_i|^2."""
    d = np.asarray(p_h, dtype=float) - frame_h.o
    vals = []
    for e in (frame_h.ex, frame_h.ey, frame_h.ez):
        vals.append(geo.dot(e, d) / geo.dot(e, e))
    return Mu(*vals)


def map_position(p_h: np.ndarray, m: SharedMap) -> np.ndarray:
    """p_r = o_r + mu_x e_r^x + mu_y e_r^y + eta mu_z e_r^z."""
    mu = project_mu(p_h, m.human)
    r = m.robot
    return r.o + mu.mu_x * r.ex + mu.mu_y * r.ey + m.eta * mu.mu_z * r.ez


def compute_basis_change(m: SharedMap, m_h0: np.ndarray, m_r0: np.ndarray) -> np.ndarray:
    """Basis-change rotation relating the two initial body frames through the
    calibration bases: P = (M_h^0)^-1 E_h E_r^-1 M_r^0. Also stored on the map."""
    m_h0 = geo.check_rotation(m_h0)
    m_r0 = geo.check_rotation(m_r0)
    e_h = m.human.basis()
    e_r = m.robot.basis()
    p = geo.orthonormalize(m_h0.T @ e_h @ e_r.T @ m_r0)
    m.p_basis = p
    return p


def map_rotation(m_ht: np.ndarray, m_h0: np.ndarray, m_r0: np.ndarray, p: np.ndarray) -> np.ndarray:
    """M_r^t = M_r^0 P^-1 (M_h^0)^-1 M_h^t P, re-orthonormalized."""
    for r in (m_ht, m_h0, m_r0, p):
        geo.check_rotation(r)
    if np.array_equal(m_ht, m_h0):
        # t = 0: the relative rotation is exactly identity.
        return np.asarray(m_r0, dtype=float).copy()
    return geo.orthonormalize(m_r0 @ p.T @ m_h0.T @ m_ht @ p)


def select_tracked_point(kp: HandKeypoints, strategy: TrackedPointStrategy) -> np.ndarray:
    if strategy is TrackedPointStrategy.WRIST:
        return kp.joint("wrist")
    if strategy is TrackedPointStrategy.THUMB_INDEX_MIDPOINT:
        return (kp.joint("thumb_tip") + kp.joint("index_tip")) / 2.0
    if strategy is TrackedPointStrategy.INDEX_MCP:
        return kp.joint("index_mcp")
    raise MissingKeypoint(f"unknown strategy {strategy}")


def pinch_distance(kp: HandKeypoints) -> float:
    return geo.norm(kp.joint("thumb_tip") - kp.joint("index_tip"))


def gripper_from_pinch(kp: HandKeypoints, cfg: GripperConfig, prev: GripperState) -> GripperState:
    d = pinch_distance(kp)
    span = cfg.d_open - cfg.d_close
    aperture = float(np.clip((d - cfg.d_close) / span, 0.0, 1.0))
    band = cfg.hysteresis / span
    closed = prev.closed
    if aperture < 0.5 - band:
        closed = True
    elif aperture > 0.5 + band:
        closed = False
    return GripperState(aperture=aperture, closed=closed)


@dataclass(frozen=True)
class RobotCommand:
    position: np.ndarray
    rotation: np.ndarray
    gripper: GripperState


@dataclass
class RetargetSession:
    """Immutable map + latched rotation references; one retarget step per
    hand sample."""

    shared: SharedMap
    m_h0: np.ndarray
    m_r0: np.ndarray
    strategy: TrackedPointStrategy = TrackedPointStrategy.INDEX_MCP
    gripper_cfg: GripperConfig = GripperConfig()

    def __post_init__(self):
        if self.shared.p_basis is None:
            compute_basis_change(self.shared, self.m_h0, self.m_r0)

    def step(self, sample: HandSample, prev_gripper: GripperState = GripperState.OPEN) -> RobotCommand:
        return retarget_step(
            sample, self.shared, self.m_h0, self.m_r0, self.shared.p_basis,
            self.strategy, self.gripper_cfg, prev_gripper,
        )


def retarget_step(
    sample: HandSample,
    m: SharedMap,
    m_h0: np.ndarray,
    m_r0: np.ndarray,
    p: np.ndarray | None,
    strategy: TrackedPointStrategy,
    gripper_cfg: GripperConfig,
    prev_gripper: GripperState = GripperState.OPEN,
) -> RobotCommand:
    if m is None or p is None or m_h0 is None or m_r0 is None:
        raise NotCalibrated("calibration frames and rotation references required")
    tracked = select_tracked_point(sample.keypoints, strategy)
    position = map_position(tracked, m)
    rotation = map_rotation(sample.rotation(), m_h0, m_r0, p)
    gripper = gripper_from_pinch(sample.keypoints, gripper_cfg, prev_gripper)
    return RobotCommand(position=position, rotation=rotation, gripper=gripper)
