"""Teleoperation session: the transport-independent message protocol that
binds hand streams to calibration, retargeting, control, the simulated arm,
and episode recording.

Every inbound message is one dict with a "type" field; handle_message
returns the outbound messages it produced. Rejected messages never mutate
session state. The session clock is driven entirely by hand-sample
timestamps, so serving the same stream twice is bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import geometry as geo
from .calibration import (
    AnchorSet,
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
from .episode import EpisodeManifest, EpisodeRecord, write_episode
from .errors import HandTeleopError, ProtocolViolation
from .geometry import Pose
from .retarget import (
    GripperConfig,
    GripperState,
    HandKeypoints,
    HandSample,
    RobotCommand,
    TrackedPointStrategy,
    compute_basis_change,
    retarget_step,
    select_tracked_point,
)
from .retrieval import DEFAULT_N, embed_scene, knn_query
from .simulator import SimArmConfig, SimArmState, arm_tick

ANCHOR_LABELS = ("a0", "a1", "a2")

INBOUND_TYPES = (
    "hand_sample", "calibrate_begin", "anchor_point", "robot_anchor_config",
    "go_live", "record_start", "record_stop", "set_config", "knn_query",
)


def _err(code: str, detail: str) -> dict:
    return {"type": "error", "code": code, "detail": detail}


@dataclass
class SessionConfig:
    eta: float = 1.0
    strategy: TrackedPointStrategy = TrackedPointStrategy.INDEX_MCP
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    scheduler: SerialSchedulerConfig = field(default_factory=SerialSchedulerConfig)
    gripper: GripperConfig = field(default_factory=GripperConfig)
    arm: SimArmConfig = field(default_factory=SimArmConfig)
    dwell_radius: float = 0.005
    dwell_time: float = 1.0
    episode_dir: Path = Path(".")


class Session:
    """One operator session; processes messages in strict arrival order."""

    def __init__(self, config: SessionConfig | None = None, knn_index=None):
        self.cfg = config or SessionConfig()
        self.knn_index = knn_index
        self.state = "idle"
        self.captured: dict[str, np.ndarray] = {}
        self.robot_anchors: dict | None = None
        self.robot_initial_pose: Pose | None = None
        self.dwell = DwellDetector(self.cfg.dwell_radius, self.cfg.dwell_time)
        self.shared: SharedMap | None = None
        self.m_h0 = self.m_r0 = self.p_basis = None
        self.arm_state = SimArmState(pose=Pose.identity())
        self.scheduler = SerialScheduler(cfg=self.cfg.scheduler)
        self.current_target: RobotCommand | None = None
        self.smoothed: Pose | None = None
        self.gripper_prev = GripperState.OPEN
        self.last_sample: HandSample | None = None
        self.last_t_ns: int | None = None
        self.recording: dict | None = None  # {"task_name", "records", "path"}
        self.episode_counter = 0
        self.last_queue_delay_ms = 0.0

    # -- introspection ------------------------------------------------------

    def state_fingerprint(self) -> tuple:
        """Comparable summary of all protocol-visible state; used to verify
        that rejected messages mutate nothing."""
        return (
            self.state,
            tuple(sorted((k, tuple(v)) for k, v in self.captured.items())),
            self.robot_anchors is not None,
            self.cfg.eta,
            self.cfg.strategy.value,
            None if self.shared is None else self.shared.eta,
            None if self.m_h0 is None else self.m_h0.tobytes(),
            self.scheduler.drops,
            self.scheduler.stale,
            None if self.recording is None else len(self.recording["records"]),
            self.last_t_ns,
            self.episode_counter,
            self.arm_state.pose.position.tobytes(),
        )

    def _session_state_msg(self, **extra) -> dict:
        msg = {
            "type": "session_state",
            "state": self.state,
            "captured_anchors": sorted(self.captured.keys()),
            "robot_configured": self.robot_anchors is not None,
        }
        msg.update(extra)
        return msg

    # -- message dispatch ---------------------------------------------------

    def handle_message(self, msg: dict) -> list[dict]:
        if not isinstance(msg, dict) or "type" not in msg:
            return [_err("bad_message", "message must be an object with a 'type' field")]
        mtype = msg["type"]
        handler = getattr(self, f"_on_{mtype}", None)
        if handler is None:
            return [_err("unknown_type", f"unknown message type '{mtype}'")]
        try:
            return handler(msg)
        except ProtocolViolation as exc:
            return [_err("protocol_violation", str(exc))]
        except HandTeleopError as exc:
            return [_err(type(exc).__name__, str(exc))]
        except (KeyError, TypeError, ValueError) as exc:
            return [_err("bad_message", f"{type(exc).__name__}: {exc}")]

    # -- handlers ------------------------------------------------------------

    def _on_calibrate_begin(self, msg) -> list[dict]:
        if self.state != "idle":
            raise ProtocolViolation(self.state, "calibrate_begin")
        side = msg.get("side", "human")
        if side != "human":
            return [_err("bad_message", "only human-side dwell calibration is supported")]
        self.state = "calibrating"
        self.captured = {}
        self.dwell.reset()
        return [self._session_state_msg()]

    def _on_robot_anchor_config(self, msg) -> list[dict]:
        if self.state not in ("idle", "calibrating"):
            raise ProtocolViolation(self.state, "robot_anchor_config")
        anchors = {k: np.asarray(msg[k], dtype=float) for k in ANCHOR_LABELS}
        # Validate the anchor geometry before accepting anything.
        build_frame(AnchorSet(anchors["a0"], anchors["a1"], anchors["a2"]))
        pose = None
        if "initial_pose" in msg:
            ip = msg["initial_pose"]
            pose = Pose(
                np.asarray(ip["position"], dtype=float),
                geo.orthonormalize(np.asarray(ip["rotation"], dtype=float).reshape(3, 3)),
            )
        self.robot_anchors = anchors
        if pose is not None:
            self.robot_initial_pose = pose
            self.arm_state = SimArmState(pose=pose.copy())
        return [self._session_state_msg()]

    def _on_anchor_point(self, msg) -> list[dict]:
        if self.state != "calibrating":
            raise ProtocolViolation(self.state, "anchor_point")
        label = msg["label"]
        if label not in ANCHOR_LABELS:
            return [_err("bad_message", f"label must be one of {ANCHOR_LABELS}")]
        xyz = np.asarray(msg["xyz"], dtype=float)
        if xyz.shape != (3,) or not np.all(np.isfinite(xyz)):
            return [_err("bad_message", "xyz must be 3 finite numbers")]
        self.captured[label] = xyz
        out = [{"type": "anchor_captured", "label": label, "xyz": xyz.tolist()}]
        out.extend(self._maybe_go_live())
        return out

    def _on_go_live(self, msg) -> list[dict]:
        if self.state != "calibrating":
            raise ProtocolViolation(self.state, "go_live")
        out = self._maybe_go_live()
        if not out:
            missing = [l for l in ANCHOR_LABELS if l not in self.captured]
            detail = f"missing anchors {missing}" if missing else "robot anchors not configured"
            return [_err("not_ready", detail)]
        return out

    def _maybe_go_live(self) -> list[dict]:
        if self.state != "calibrating":
            return []
        if any(l not in self.captured for l in ANCHOR_LABELS) or self.robot_anchors is None:
            return []
        human = build_frame(AnchorSet(*(self.captured[l] for l in ANCHOR_LABELS)))
        robot = build_frame(AnchorSet(*(self.robot_anchors[l] for l in ANCHOR_LABELS)))
        shared = pair_frames(human, robot, self.cfg.eta)
        # Latch rotation references at the Live transition.
        if self.last_sample is not None:
            m_h0 = geo.orthonormalize(self.last_sample.rotation())
        else:
            m_h0 = np.eye(3)
        m_r0 = self.arm_state.pose.rotation.copy()
        p = compute_basis_change(shared, m_h0, m_r0)
        self.shared, self.m_h0, self.m_r0, self.p_basis = shared, m_h0, m_r0, p
        self.smoothed = None
        self.gripper_prev = GripperState.OPEN
        self.state = "live"
        return [self._session_state_msg()]

    def _on_record_start(self, msg) -> list[dict]:
        if self.state != "live":
            raise ProtocolViolation(self.state, "record_start")
        task_name = str(msg.get("task_name", "untitled"))
        self.episode_counter += 1
        path = Path(self.cfg.episode_dir) / f"{task_name}_{self.episode_counter:04d}.h2r.jsonl"
        self.recording = {"task_name": task_name, "records": [], "path": path}
        self.state = "recording"
        return [self._session_state_msg(episode_path=str(path))]

    def _on_record_stop(self, msg) -> list[dict]:
        if self.state != "recording":
            raise ProtocolViolation(self.state, "record_stop")
        rec = self.recording
        records = rec["records"]
        # created_at derives from the first frame so replays are byte-identical.
        if records:
            created = datetime.fromtimestamp(
                records[0].timestamp_ns / 1e9, tz=timezone.utc
            ).isoformat()
        else:
            created = "1970-01-01T00:00:00+00:00"
        manifest = EpisodeManifest(
            task_name=rec["task_name"],
            source="sim",
            eta=self.shared.eta,
            anchors=self.anchor_dict(),
            created_at=created,
            frame_count=len(records),
        )
        write_episode(manifest, records, rec["path"])
        self.recording = None
        self.state = "live"
        return [self._session_state_msg(episode_path=str(rec["path"]), frames=len(records))]

    def anchor_dict(self) -> dict:
        return {
            "human": {l: self.captured[l].tolist() for l in ANCHOR_LABELS},
            "robot": {l: self.robot_anchors[l].tolist() for l in ANCHOR_LABELS},
        }

    def _on_set_config(self, msg) -> list[dict]:
        updates = {}
        if "eta" in msg:
            eta = float(msg["eta"])
            if eta <= 0:
                return [_err("bad_message", "eta must be positive")]
            updates["eta"] = eta
        if "alpha" in msg:
            alpha = float(msg["alpha"])
            updates["smoothing"] = SmoothingConfig(
                alpha_pos=alpha, alpha_rot=alpha, deadband=self.cfg.smoothing.deadband
            )
        if "latency_budget_ms" in msg:
            updates["scheduler"] = SerialSchedulerConfig(float(msg["latency_budget_ms"]) / 1e3)
        if "strategy" in msg:
            updates["strategy"] = TrackedPointStrategy(msg["strategy"])
        # All validated; now apply.
        if "eta" in updates:
            self.cfg.eta = updates["eta"]
            if self.shared is not None:
                self.shared.eta = updates["eta"]
        if "smoothing" in updates:
            self.cfg.smoothing = updates["smoothing"]
        if "scheduler" in updates:
            self.cfg.scheduler = updates["scheduler"]
            self.scheduler.cfg = updates["scheduler"]
        if "strategy" in updates:
            self.cfg.strategy = updates["strategy"]
        return [self._session_state_msg()]

    def _on_knn_query(self, msg) -> list[dict]:
        if self.knn_index is None:
            return [_err("no_index", "no KNN index loaded")]
        scene = np.asarray(msg["scene"], dtype=float)
        n = int(msg.get("n", DEFAULT_N))
        result = knn_query(self.knn_index, embed_scene(scene), n)
        return [{
            "type": "knn_result",
            "chosen_episode_id": result.chosen_episode_id,
            "chosen_task_label": result.chosen_task_label,
            "neighbors": [list(nb) for nb in result.neighbors],
        }]

    # -- the hand-sample path -------------------------------------------------

    def _parse_sample(self, msg) -> HandSample:
        kp = HandKeypoints(np.asarray(msg["keypoints"], dtype=float))
        tf = np.asarray(msg["transform"], dtype=float).reshape(4, 4)
        return HandSample(t_ns=int(msg["t_ns"]), keypoints=kp, transform=tf)

    def _on_hand_sample(self, msg) -> list[dict]:
        sample = self._parse_sample(msg)
        if self.last_t_ns is not None and sample.t_ns <= self.last_t_ns:
            return [_err("NonMonotonicTimestamp",
                         f"sample t_ns {sample.t_ns} <= previous {self.last_t_ns}")]
        if self.state == "idle":
            self.last_sample = sample
            self.last_t_ns = sample.t_ns
            return []
        if self.state == "calibrating":
            return self._calibrating_sample(sample)
        return self._live_sample(sample)

    def _calibrating_sample(self, sample: HandSample) -> list[dict]:
        tracked = select_tracked_point(sample.keypoints, self.cfg.strategy)
        hit = self.dwell.feed(sample.t_ns / 1e9, tracked)
        self.last_sample = sample
        self.last_t_ns = sample.t_ns
        if hit is None:
            return []
        nxt = next((l for l in ANCHOR_LABELS if l not in self.captured), None)
        if nxt is None:
            return []
        self.captured[nxt] = hit
        out = [{"type": "anchor_captured", "label": nxt, "xyz": hit.tolist()}]
        out.extend(self._maybe_go_live())
        return out

    def _live_sample(self, sample: HandSample) -> list[dict]:
        t = sample.t_ns / 1e9
        dt = 0.0 if self.last_t_ns is None else (sample.t_ns - self.last_t_ns) / 1e9
        self.last_sample = sample
        self.last_t_ns = sample.t_ns

        # Retire any command whose execution window has elapsed.
        exec_s = self.cfg.arm.exec_latency
        while (self.scheduler.in_flight is not None
               and self.scheduler.in_flight.dispatched_at + exec_s <= t):
            done = self.scheduler.in_flight
            nxt = self.scheduler.complete(done.ticket_id, done.dispatched_at + exec_s)
            if nxt is not None:
                self.current_target = nxt.command
                self.last_queue_delay_ms = (nxt.dispatched_at - nxt.submitted_at) * 1e3

        # Retarget the raw command; this is what gets recorded as the action.
        command = retarget_step(
            sample, self.shared, self.m_h0, self.m_r0, self.p_basis,
            self.cfg.strategy, self.cfg.gripper, self.gripper_prev,
        )
        self.gripper_prev = command.gripper

        # Smooth, then submit to the serial scheduler.
        raw_pose = Pose(command.position, command.rotation)
        if self.smoothed is None:
            self.smoothed = raw_pose
        else:
            self.smoothed = smooth(self.smoothed, raw_pose, self.cfg.smoothing)
        submitted = RobotCommand(
            position=self.smoothed.position,
            rotation=self.smoothed.rotation,
            gripper=command.gripper,
        )
        ticket = self.scheduler.submit(submitted, t)
        if ticket is not None:
            self.current_target = ticket.command
            self.last_queue_delay_ms = (ticket.dispatched_at - ticket.submitted_at) * 1e3

        # Advance the arm toward the currently dispatched target.
        if dt > 0 and self.current_target is not None:
            self.arm_state = arm_tick(self.arm_state, self.current_target, self.cfg.arm, dt)

        out = []
        if self.state == "recording":
            rec = EpisodeRecord(
                timestamp_ns=sample.t_ns,
                hand_transform=np.asarray(sample.transform, dtype=float),
                hand_keypoints=sample.keypoints.points,
                robot_position=self.arm_state.pose.position.copy(),
                robot_rotation=self.arm_state.pose.rotation.copy(),
                robot_gripper=self.arm_state.gripper,
                joint_velocity=self.arm_state.pseudo_joint_vel.copy(),
                action_position=command.position,
                action_rotation=command.rotation,
                action_gripper=command.gripper.aperture,
                frame_index=len(self.recording["records"]),
            )
            self.recording["records"].append(rec)
        out.append({
            "type": "robot_state",
            "pose": {
                "position": self.arm_state.pose.position.tolist(),
                "rotation": self.arm_state.pose.rotation.reshape(9).tolist(),
            },
            "gripper": self.arm_state.gripper,
            "pseudo_joints": self.arm_state.pseudo_joints.tolist(),
        })
        out.append({
            "type": "telemetry",
            "queue_delay_ms": self.last_queue_delay_ms,
            "drops": self.scheduler.drops,
            "stale": self.scheduler.stale,
        })
        return out
