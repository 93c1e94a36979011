"""Serve a recorded hand channel back through the live pipeline."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .episode import load_calibration, read_episode
from .errors import CorruptEpisode
from .retarget import TrackedPointStrategy
from .session import Session, SessionConfig
from .simulator import DT, ReplayHandStream


def replay_episode(episode_path, speed: float = 1.0, calib_path=None,
                   report_dir=None, config: SessionConfig | None = None) -> dict:
    """Rebuild a session from an episode's calibration and stream its hand
    channel at `speed`x. Returns a summary with tracking stats."""
    manifest, records = read_episode(episode_path)
    if not records:
        raise CorruptEpisode("episode has no records")
    config = config or SessionConfig(eta=manifest.eta)
    config.eta = manifest.eta
    session = Session(config=config)
    anchors = manifest.anchors
    calib = load_calibration(calib_path) if calib_path else None
    if calib is not None:
        config.strategy = TrackedPointStrategy(calib["strategy"])

    def send(msg):
        out = session.handle_message(msg)
        errs = [m for m in out if m.get("type") == "error"]
        if errs:
            raise CorruptEpisode(f"replay session rejected {msg.get('type')}: {errs[0]}")
        return out

    first = records[0]
    send({
        "type": "robot_anchor_config",
        **{k: list(v) for k, v in anchors["robot"].items()},
        "initial_pose": {
            "position": first.robot_position.tolist(),
            "rotation": first.robot_rotation.reshape(9).tolist(),
        },
    })
    send({"type": "calibrate_begin", "side": "human"})
    # Seed the rotation latch with the first recorded hand pose, then place
    # the anchors manually from the manifest.
    send({
        "type": "hand_sample",
        "t_ns": first.timestamp_ns - int(DT * 1e9),
        "keypoints": first.hand_keypoints.tolist(),
        "transform": first.hand_transform.reshape(16).tolist(),
    })
    for label in ("a0", "a1", "a2"):
        send({"type": "anchor_point", "label": label, "xyz": list(anchors["human"][label])})
    if calib is not None:
        # Exact references from the sidecar beat the first-frame latch.
        session.m_h0 = calib["m_h0"]
        session.m_r0 = calib["m_r0"]
        from .retarget import compute_basis_change

        session.p_basis = compute_basis_change(session.shared, session.m_h0, session.m_r0)

    stream = ReplayHandStream(records, speed=speed)
    n_out = int(np.floor(stream.duration / DT)) + 1
    times, targets, actuals, delays = [], [], [], []
    t0 = first.timestamp_ns / 1e9
    for i in range(n_out):
        t = i * DT
        s = stream.sample(t)
        out = send({
            "type": "hand_sample",
            "t_ns": int(round((t0 + t) * 1e9)),
            "keypoints": s.keypoints.points.tolist(),
            "transform": np.asarray(s.transform).reshape(16).tolist(),
        })
        state = next((m for m in out if m.get("type") == "robot_state"), None)
        tel = next((m for m in out if m.get("type") == "telemetry"), None)
        if state and session.current_target is not None:
            times.append(t)
            targets.append(session.current_target.position.copy())
            actuals.append(np.asarray(state["pose"]["position"]))
            delays.append(tel["queue_delay_ms"] if tel else 0.0)

    err = (np.linalg.norm(np.asarray(targets) - np.asarray(actuals), axis=1)
           if targets else np.zeros(0))
    summary = {
        "episode": str(episode_path),
        "task_name": manifest.task_name,
        "frames_replayed": n_out,
        "speed": speed,
        "mean_tracking_error_m": float(err.mean()) if err.size else 0.0,
        "max_tracking_error_m": float(err.max()) if err.size else 0.0,
        "drops": session.scheduler.drops,
        "stale": session.scheduler.stale,
    }
    if report_dir:
        from .report import save_tracking_figure

        report_dir = Path(report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)
        fig_path = report_dir / (Path(episode_path).name.split(".")[0] + "_tracking.png")
        save_tracking_figure(times, targets, actuals, fig_path, queue_delays_ms=delays)
        summary["figure"] = str(fig_path)
    return summary
