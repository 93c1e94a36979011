"""Offline pipelines: scripted recording sessions and batch retargeting.

The scripted runner drives a full Session through the same message
protocol the console uses: configure robot anchors, dwell-calibrate the
three human anchors by holding the virtual hand still, go live, record.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import geometry as geo
from .calibration import AnchorSet, build_frame, pair_frames
from .episode import EpisodeRecord, load_calibration, save_calibration
from .retarget import (
    GripperConfig,
    GripperState,
    HandKeypoints,
    HandSample,
    JOINT_INDEX,
    TrackedPointStrategy,
    compute_basis_change,
    retarget_step,
)
from .session import Session, SessionConfig
from .simulator import DT, HAND_TEMPLATE, ScriptedHandStream, hand_sample_at

# Default square calibration: identical 0.4 m frames on both sides, so the
# scripted hand space maps one-to-one onto the arm workspace.
DEFAULT_HUMAN_ANCHORS = {
    "a0": (0.0, 0.0, 0.0),
    "a1": (0.4, 0.0, 0.0),
    "a2": (0.0, 0.4, 0.0),
}
DEFAULT_ROBOT_ANCHORS = DEFAULT_HUMAN_ANCHORS

DWELL_HOLD = 1.3  # s per anchor; dwell_time is 1.0 s


def tracked_offset(strategy: TrackedPointStrategy) -> np.ndarray:
    """Hand-frame offset from the hand origin to the tracked point."""
    if strategy is TrackedPointStrategy.WRIST:
        return HAND_TEMPLATE[JOINT_INDEX["wrist"]].copy()
    if strategy is TrackedPointStrategy.INDEX_MCP:
        return HAND_TEMPLATE[JOINT_INDEX["index_mcp"]].copy()
    mid = (HAND_TEMPLATE[JOINT_INDEX["thumb_tip"]] + HAND_TEMPLATE[JOINT_INDEX["index_tip"]]) / 2
    return mid


def _sample_msg(sample: HandSample) -> dict:
    return {
        "type": "hand_sample",
        "t_ns": sample.t_ns,
        "keypoints": sample.keypoints.points.tolist(),
        "transform": np.asarray(sample.transform).reshape(16).tolist(),
    }


def run_scripted_session(
    kind: str,
    frames: int,
    out_path,
    task_name: str | None = None,
    config: SessionConfig | None = None,
    params=None,
    human_anchors: dict = DEFAULT_HUMAN_ANCHORS,
    robot_anchors: dict = DEFAULT_ROBOT_ANCHORS,
):
    """Record one scripted episode through the session protocol.

    Returns (episode_path, calib_path, telemetry_trace) where the trace is a
    list of (t, queue_delay_ms, drops, stale) rows.
    """
    out_path = Path(out_path)
    config = config or SessionConfig()
    config.episode_dir = out_path.parent
    stream = ScriptedHandStream(kind, params)
    r0 = stream.rotation(0.0)
    offset = tracked_offset(config.strategy)
    session = Session(config=config)

    def send(msg):
        out = session.handle_message(msg)
        errs = [m for m in out if m.get("type") == "error"]
        if errs:
            raise RuntimeError(f"session rejected {msg.get('type')}: {errs[0]}")
        return out

    send({
        "type": "robot_anchor_config",
        **{k: list(v) for k, v in robot_anchors.items()},
        "initial_pose": {
            # Start the arm where the first live command will land.
            "position": (stream.position(0.0) + r0 @ offset).tolist(),
            "rotation": r0.reshape(9).tolist(),
        },
    })
    send({"type": "calibrate_begin", "side": "human"})

    # Dwell-calibrate: hold the hand so the tracked point sits on each anchor,
    # moving on as soon as the capture is confirmed.
    t = 0.0
    for label in ("a0", "a1", "a2"):
        anchor = np.asarray(human_anchors[label], dtype=float)
        pos = anchor - r0 @ offset
        for _ in range(int(round(DWELL_HOLD / DT))):
            t += DT
            out = send(_sample_msg(hand_sample_at(pos, r0, 0.08, t)))
            if any(m.get("type") == "anchor_captured" for m in out):
                break
        else:
            raise RuntimeError(f"dwell capture for {label} did not fire")
    if session.state != "live":
        raise RuntimeError(f"calibration did not reach live state (state={session.state})")

    send({"type": "record_start", "task_name": task_name or kind})
    trace = []
    for i in range(frames):
        t += DT
        s = stream.sample(i * DT)
        sample = HandSample(t_ns=int(round(t * 1e9)), keypoints=s.keypoints,
                            transform=s.transform)
        out = send(_sample_msg(sample))
        tel = next((m for m in out if m.get("type") == "telemetry"), None)
        if tel:
            trace.append((t, tel["queue_delay_ms"], tel["drops"], tel["stale"]))
    out = send({"type": "record_stop"})
    written = Path(next(m["episode_path"] for m in out if m.get("type") == "session_state"))
    if written != out_path:
        written.replace(out_path)

    calib_path = out_path.with_suffix("").with_suffix("")  # strip .h2r.jsonl
    calib_path = calib_path.parent / (calib_path.name + ".calib.json")
    save_calibration(
        calib_path,
        anchors=session.anchor_dict(),
        eta=session.shared.eta,
        m_h0=session.m_h0,
        m_r0=session.m_r0,
        strategy=config.strategy.value,
        gripper_cfg={
            "d_close": config.gripper.d_close,
            "d_open": config.gripper.d_open,
            "hysteresis": config.gripper.hysteresis,
        },
    )
    return out_path, calib_path, trace


def retarget_offline(records: list[EpisodeRecord], calib: dict):
    """Re-run the retargeting math over an episode's hand channel.

    Returns one RobotCommand per record; with the episode's own calibration
    these reproduce the stored actions exactly.
    """
    anchors = calib["anchors"]
    human = build_frame(AnchorSet(*(np.asarray(anchors["human"][l], dtype=float)
                                    for l in ("a0", "a1", "a2"))))
    robot = build_frame(AnchorSet(*(np.asarray(anchors["robot"][l], dtype=float)
                                    for l in ("a0", "a1", "a2"))))
    shared = pair_frames(human, robot, calib["eta"])
    m_h0, m_r0 = calib["m_h0"], calib["m_r0"]
    p = compute_basis_change(shared, m_h0, m_r0)
    strategy = TrackedPointStrategy(calib["strategy"])
    g = calib["gripper"]
    gripper_cfg = GripperConfig(d_close=g["d_close"], d_open=g["d_open"],
                                hysteresis=g["hysteresis"])
    commands = []
    prev = GripperState.OPEN
    for rec in records:
        sample = HandSample(
            t_ns=rec.timestamp_ns,
            keypoints=HandKeypoints(rec.hand_keypoints),
            transform=rec.hand_transform,
        )
        cmd = retarget_step(sample, shared, m_h0, m_r0, p, strategy, gripper_cfg, prev)
        prev = cmd.gripper
        commands.append(cmd)
    return commands


def calibration_from_file(path) -> dict:
    return load_calibration(path)
