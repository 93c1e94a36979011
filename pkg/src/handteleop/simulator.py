"""Deterministic task-space arm simulation and synthetic hand streams.

The arm tracks end-effector targets directly (the retargeting math is
entirely end-effector level); a fixed mixing matrix synthesizes a 7-joint
vector so episode logs carry joint velocities with consistent semantics.
Scripted hand streams pose a rigid 21-point hand template along smooth
parametric paths at the 30 Hz capture cadence.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry as geo
from .errors import CorruptEpisode, ReplayExhausted
from .geometry import Pose
from .retarget import (
    HAND_JOINT_NAMES,
    HandKeypoints,
    HandSample,
    JOINT_INDEX,
    RobotCommand,
)

TICK_RATE = 30.0  # Hz, matches the capture cadence
DT = 1.0 / TICK_RATE


@dataclass(frozen=True)
class SimArmConfig:
    v_max: float = 0.5  # m/s
    w_max: float = 2.0  # rad/s
    workspace_min: tuple = (-1.0, -1.0, -1.0)
    workspace_max: tuple = (1.0, 1.0, 1.0)
    exec_latency: float = 0.05  # s per command execution
    tick_rate: float = TICK_RATE

    def __post_init__(self):
        if min(self.v_max, self.w_max, self.exec_latency, self.tick_rate) <= 0:
            raise ValueError("config values must be positive")


# Fixed pseudo-joint mixing: joints = JOINT_MIX @ [x, y, z, roll, pitch, yaw, grip].
# Any fixed full-rank matrix works; this one spreads every task-space channel
# across several joints so joint velocities are non-trivial.
JOINT_MIX = np.array(
    [
        [1.0, 0.2, 0.0, 0.0, 0.1, 0.0, 0.0],
        [0.0, 1.0, 0.3, 0.0, 0.0, 0.1, 0.0],
        [0.2, 0.0, 1.0, 0.1, 0.0, 0.0, 0.0],
        [0.0, 0.1, 0.0, 1.0, 0.2, 0.0, 0.0],
        [0.1, 0.0, 0.0, 0.0, 1.0, 0.3, 0.0],
        [0.0, 0.0, 0.1, 0.2, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ]
)


def _pseudo_joints(pose: Pose, gripper: float) -> np.ndarray:
    rpy = geo.rpy_from_rotation(pose.rotation)
    q = np.concatenate([pose.position, rpy, [gripper]])
    return JOINT_MIX @ q


@dataclass
class SimArmState:
    pose: Pose
    gripper: float = 1.0
    pseudo_joints: np.ndarray = None
    pseudo_joint_vel: np.ndarray = field(default_factory=lambda: np.zeros(7))

    def __post_init__(self):
        if self.pseudo_joints is None:
            self.pseudo_joints = _pseudo_joints(self.pose, self.gripper)


def arm_tick(state: SimArmState, target: RobotCommand, cfg: SimArmConfig, dt: float) -> SimArmState:
    """Advance one tick toward target, rate- and workspace-limited."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    delta = target.position - state.pose.position
    dist = float(np.linalg.norm(delta))
    step = min(dist, cfg.v_max * dt)
    position = state.pose.position + (delta / dist * step if dist > 0 else 0.0)
    position = np.clip(position, cfg.workspace_min, cfg.workspace_max)

    rel = state.pose.rotation.T @ target.rotation
    ang = geo.rotation_angle(rel)
    max_ang = cfg.w_max * dt
    if ang <= max_ang:
        rotation = geo.orthonormalize(target.rotation)
    else:
        rotation = geo.slerp(state.pose.rotation, target.rotation, max_ang / ang)

    gripper = 0.0 if target.gripper.closed else float(np.clip(target.gripper.aperture, 0, 1))
    pose = Pose(position, rotation)
    joints = _pseudo_joints(pose, gripper)
    vel = (joints - state.pseudo_joints) / dt
    return SimArmState(pose=pose, gripper=gripper, pseudo_joints=joints, pseudo_joint_vel=vel)


# ---------------------------------------------------------------------------
# Hand template and scripted streams
# ---------------------------------------------------------------------------

def _finger(base_x, base_y, lengths):
    pts = []
    x = base_x
    for ln in lengths:
        pts.append((x, base_y, 0.0))
        x += ln
    return pts


def _build_template() -> np.ndarray:
    """Rigid right-hand template in the hand frame, wrist at the origin,
    fingers along +x, thumb offset in -y."""
    pts = {"wrist": (0.0, 0.0, 0.0)}
    thumb = _finger(0.02, -0.04, [0.03, 0.03, 0.025])
    for name, p in zip(("thumb_cmc", "thumb_mcp", "thumb_ip", "thumb_tip"),
                       [(0.02, -0.04, 0.0)] + thumb[1:] + [(0.105, -0.04, 0.0)]):
        pts[name] = p
    rows = {"index": 0.02, "middle": 0.0, "ring": -0.02, "pinky": -0.04}
    starts = {"index": 0.09, "middle": 0.095, "ring": 0.09, "pinky": 0.08}
    seglen = {"index": 0.025, "middle": 0.027, "ring": 0.025, "pinky": 0.02}
    for f, y in rows.items():
        x0, ln = starts[f], seglen[f]
        for j, joint in enumerate(("mcp", "pip", "dip", "tip")):
            pts[f"{f}_{joint}"] = (x0 + j * ln, y, 0.0)
    return np.array([pts[n] for n in HAND_JOINT_NAMES], dtype=float)


HAND_TEMPLATE = _build_template()
# Template thumb/index tips define the default pinch geometry.
_PINCH_MID = (HAND_TEMPLATE[JOINT_INDEX["thumb_tip"]] + HAND_TEMPLATE[JOINT_INDEX["index_tip"]]) / 2
_PINCH_AXIS = HAND_TEMPLATE[JOINT_INDEX["index_tip"]] - HAND_TEMPLATE[JOINT_INDEX["thumb_tip"]]
_PINCH_AXIS = _PINCH_AXIS / np.linalg.norm(_PINCH_AXIS)


def pose_template(position: np.ndarray, rotation: np.ndarray, pinch: float) -> HandKeypoints:
    """Pose the rigid template in the world with the given pinch distance
    between thumb and index tips."""
    local = HAND_TEMPLATE.copy()
    local[JOINT_INDEX["thumb_tip"]] = _PINCH_MID - 0.5 * pinch * _PINCH_AXIS
    local[JOINT_INDEX["index_tip"]] = _PINCH_MID + 0.5 * pinch * _PINCH_AXIS
    world = local @ rotation.T + np.asarray(position, dtype=float)
    return HandKeypoints(world)


def hand_sample_at(position, rotation, pinch, t: float) -> HandSample:
    tf = np.eye(4)
    tf[:3, :3] = rotation
    tf[:3, 3] = position
    return HandSample(
        t_ns=int(round(t * 1e9)),
        keypoints=pose_template(position, rotation, pinch),
        transform=tf,
    )


def _smoothstep(u: float) -> float:
    u = min(max(u, 0.0), 1.0)
    return u * u * (3.0 - 2.0 * u)


@dataclass(frozen=True)
class LissajousParams:
    center: tuple = (0.3, 0.0, 0.2)
    amplitude: tuple = (0.1, 0.08, 0.04)
    freq: tuple = (0.25, 0.2, 0.15)  # Hz per axis
    pinch: float = 0.08  # open throughout
    yaw_amplitude: float = 0.3  # rad
    yaw_freq: float = 0.1  # Hz


@dataclass(frozen=True)
class PickPlaceParams:
    home: tuple = (0.25, 0.0, 0.25)
    pick: tuple = (0.35, 0.1, 0.1)
    place: tuple = (0.35, -0.1, 0.1)
    max_speed: float = 0.25  # m/s peak along transit segments
    hold: float = 1.0  # s at pick/place
    pinch_open: float = 0.08
    pinch_closed: float = 0.015


@dataclass(frozen=True)
class PickPlaceSchedule:
    """Segment boundaries of the scripted motion, all in seconds."""

    t_reach_pick: float
    t_grasp: float  # pinch fully closed
    t_leave_pick: float
    t_reach_place: float
    t_release: float
    t_end: float


def pick_place_schedule(p: PickPlaceParams) -> PickPlaceSchedule:
    def seg_time(a, b):
        d = float(np.linalg.norm(np.asarray(b) - np.asarray(a)))
        # smoothstep peak speed is 1.5 * d / T
        return 1.5 * d / p.max_speed if d > 0 else 0.0

    t1 = seg_time(p.home, p.pick)
    t_grasp = t1 + p.hold / 2.0
    t2 = t1 + p.hold
    t3 = t2 + seg_time(p.pick, p.place)
    t_release = t3 + p.hold / 2.0
    t4 = t3 + p.hold
    return PickPlaceSchedule(
        t_reach_pick=t1, t_grasp=t_grasp, t_leave_pick=t2,
        t_reach_place=t3, t_release=t_release, t_end=t4 + p.hold,
    )


class ScriptedHandStream:
    """Deterministic synthetic operator stream; sample(t) is a pure function."""

    def __init__(self, kind: str, params=None):
        if kind == "lissajous":
            self.params = params or LissajousParams()
        elif kind == "pick_place":
            self.params = params or PickPlaceParams()
            self.schedule = pick_place_schedule(self.params)
        else:
            raise ValueError(f"unknown script kind '{kind}'")
        self.kind = kind

    def position(self, t: float) -> np.ndarray:
        if self.kind == "lissajous":
            p = self.params
            c = np.asarray(p.center)
            a = np.asarray(p.amplitude)
            w = 2 * np.pi * np.asarray(p.freq)
            return c + a * np.sin(w * t)
        p, s = self.params, self.schedule
        home, pick, place = (np.asarray(x, dtype=float) for x in (p.home, p.pick, p.place))
        if t < s.t_reach_pick:
            u = _smoothstep(t / s.t_reach_pick) if s.t_reach_pick > 0 else 1.0
            return home + u * (pick - home)
        if t < s.t_leave_pick:
            return pick
        if t < s.t_reach_place:
            u = _smoothstep((t - s.t_leave_pick) / (s.t_reach_place - s.t_leave_pick))
            return pick + u * (place - pick)
        return place

    def rotation(self, t: float) -> np.ndarray:
        if self.kind == "lissajous":
            p = self.params
            return geo.rot_z(p.yaw_amplitude * np.sin(2 * np.pi * p.yaw_freq * t))
        # gentle yaw during transit only, flat during holds
        s = self.schedule
        if t < s.t_leave_pick or t >= s.t_reach_place:
            return np.eye(3)
        u = (t - s.t_leave_pick) / (s.t_reach_place - s.t_leave_pick)
        return geo.rot_z(0.2 * np.sin(np.pi * u))

    def pinch(self, t: float) -> float:
        if self.kind == "lissajous":
            return self.params.pinch
        p, s = self.params, self.schedule
        close_span = min(0.3, p.hold / 2.0)
        if t < s.t_grasp - close_span:
            return p.pinch_open
        if t < s.t_grasp:
            u = _smoothstep((t - (s.t_grasp - close_span)) / close_span)
            return p.pinch_open + u * (p.pinch_closed - p.pinch_open)
        if t < s.t_release - close_span:
            return p.pinch_closed
        if t < s.t_release:
            u = _smoothstep((t - (s.t_release - close_span)) / close_span)
            return p.pinch_closed + u * (p.pinch_open - p.pinch_closed)
        return p.pinch_open

    def sample(self, t: float) -> HandSample:
        if t < 0:
            raise ValueError("t must be >= 0")
        return hand_sample_at(self.position(t), self.rotation(t), self.pinch(t), t)


class ReplayHandStream:
    """Re-emits the hand channel of a recorded episode at speed x."""

    def __init__(self, records: list, speed: float = 1.0):
        if speed <= 0:
            raise ValueError("speed must be positive")
        if not records:
            raise CorruptEpisode("episode has no records")
        self.records = records
        self.speed = speed
        self.t0_ns = records[0].timestamp_ns

    def sample(self, t: float) -> HandSample:
        if t < 0:
            raise ValueError("t must be >= 0")
        src_ns = self.t0_ns + int(round(t * self.speed * 1e9))
        idx = None
        for i, rec in enumerate(self.records):
            if rec.timestamp_ns <= src_ns:
                idx = i
            else:
                break
        if idx is None or src_ns > self.records[-1].timestamp_ns:
            raise ReplayExhausted(f"replay time {t:.3f}s beyond recorded span")
        rec = self.records[idx]
        return HandSample(
            t_ns=int(round(t * 1e9)),
            keypoints=HandKeypoints(np.asarray(rec.hand_keypoints, dtype=float)),
            transform=np.asarray(rec.hand_transform, dtype=float),
        )

    @property
    def duration(self) -> float:
        return (self.records[-1].timestamp_ns - self.t0_ns) / 1e9 / self.speed
