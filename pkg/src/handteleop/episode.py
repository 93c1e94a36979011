"""Paired human-robot episode logs.

Newline-delimited JSON, extension `.h2r.jsonl`: line 1 is the manifest
(`"kind":"manifest"`), every following line one record (`"kind":"record"`)
with fixed key order. Reals are written with 17 significant digits so a
write/read round trip is value-exact for doubles, and identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry as geo
from .errors import (
    InvariantViolation,
    IoFailure,
    MalformedLine,
    NonMonotonicTimestamp,
    SchemaVersionUnsupported,
)

SCHEMA_VERSION = 1
EPISODE_SUFFIX = ".h2r.jsonl"
# Appendix-figure frame range used for validation; the narrower 300-600
# range also appears upstream, we check against the looser bound.
DEFAULT_FRAME_RANGE = (200, 600)


@dataclass
class EpisodeManifest:
    task_name: str
    source: str  # "sim" | "live"
    eta: float
    anchors: dict  # {"human": {"a0": [..], "a1": [..], "a2": [..]}, "robot": {...}}
    created_at: str
    frame_count: int
    schema_version: int = SCHEMA_VERSION


@dataclass
class EpisodeRecord:
    timestamp_ns: int
    hand_transform: np.ndarray  # 4x4 row-major
    hand_keypoints: np.ndarray  # 21x3
    robot_position: np.ndarray  # 3
    robot_rotation: np.ndarray  # 3x3 row-major
    robot_gripper: float
    joint_velocity: np.ndarray  # 7
    action_position: np.ndarray  # 3
    action_rotation: np.ndarray  # 3x3 row-major
    action_gripper: float
    frame_index: int

    def validate(self, index: int | None = None):
        where = f" (record {index})" if index is not None else ""
        shapes = {
            "hand_transform": (self.hand_transform, (4, 4)),
            "hand_keypoints": (self.hand_keypoints, (21, 3)),
            "robot_position": (self.robot_position, (3,)),
            "robot_rotation": (self.robot_rotation, (3, 3)),
            "joint_velocity": (self.joint_velocity, (7,)),
            "action_position": (self.action_position, (3,)),
            "action_rotation": (self.action_rotation, (3, 3)),
        }
        for name, (arr, shape) in shapes.items():
            arr = np.asarray(arr)
            if arr.shape != shape or not np.all(np.isfinite(arr)):
                raise InvariantViolation(f"{name} must be finite {shape}{where}", index=index)
        for name, rot in (
            ("hand_transform rotation", np.asarray(self.hand_transform)[:3, :3]),
            ("robot_rotation", self.robot_rotation),
            ("action_rotation", self.action_rotation),
        ):
            if not geo.is_rotation(rot):
                raise InvariantViolation(f"{name} is not orthonormal{where}", index=index)


def _fmt(value) -> str:
    """Deterministic JSON with 17-significant-digit reals and stable key order."""
    if isinstance(value, (bool,)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not np.isfinite(v):
            raise InvariantViolation("non-finite real in episode data")
        return format(v, ".17g")
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, np.ndarray):
        return _fmt(value.tolist())
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_fmt(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ",".join(f"{json.dumps(k)}:{_fmt(v)}" for k, v in value.items()) + "}"
    raise InvariantViolation(f"unserializable value of type {type(value)!r}")


def manifest_line(m: EpisodeManifest) -> str:
    return _fmt({
        "kind": "manifest",
        "schema_version": m.schema_version,
        "task_name": m.task_name,
        "source": m.source,
        "eta": float(m.eta),
        "anchors": m.anchors,
        "created_at": m.created_at,
        "frame_count": int(m.frame_count),
    })


def record_line(r: EpisodeRecord) -> str:
    return _fmt({
        "kind": "record",
        "timestamp_ns": int(r.timestamp_ns),
        "hand_transform": np.asarray(r.hand_transform, dtype=float),
        "hand_keypoints": np.asarray(r.hand_keypoints, dtype=float),
        "robot_state": {
            "position": np.asarray(r.robot_position, dtype=float),
            "rotation": np.asarray(r.robot_rotation, dtype=float).reshape(9),
            "gripper": float(r.robot_gripper),
        },
        "joint_velocity": np.asarray(r.joint_velocity, dtype=float),
        "action": {
            "position": np.asarray(r.action_position, dtype=float),
            "rotation": np.asarray(r.action_rotation, dtype=float).reshape(9),
            "gripper": float(r.action_gripper),
        },
        "frame_index": int(r.frame_index),
    })


def write_episode(manifest: EpisodeManifest, records, sink) -> int:
    """Writes manifest + records as JSONL; returns byte count.

    `sink` is a path or a binary file object. frame_count in the manifest is
    overridden by the actual record count.
    """
    records = list(records)
    prev_ts = None
    for i, rec in enumerate(records):
        rec.validate(index=i)
        if prev_ts is not None and rec.timestamp_ns <= prev_ts:
            raise InvariantViolation(
                f"timestamps must be strictly increasing (record {i})", index=i
            )
        prev_ts = rec.timestamp_ns
    manifest.frame_count = len(records)
    lines = [manifest_line(manifest)]
    lines.extend(record_line(r) for r in records)
    data = ("\n".join(lines) + "\n").encode("utf-8")
    try:
        if hasattr(sink, "write"):
            sink.write(data)
        else:
            Path(sink).write_bytes(data)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return len(data)


def _parse_manifest(obj: dict) -> EpisodeManifest:
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionUnsupported(f"schema_version {version!r}")
    return EpisodeManifest(
        task_name=obj["task_name"],
        source=obj["source"],
        eta=float(obj["eta"]),
        anchors=obj["anchors"],
        created_at=obj["created_at"],
        frame_count=int(obj["frame_count"]),
        schema_version=version,
    )


def _parse_record(obj: dict) -> EpisodeRecord:
    rs, act = obj["robot_state"], obj["action"]
    return EpisodeRecord(
        timestamp_ns=int(obj["timestamp_ns"]),
        hand_transform=np.asarray(obj["hand_transform"], dtype=float),
        hand_keypoints=np.asarray(obj["hand_keypoints"], dtype=float),
        robot_position=np.asarray(rs["position"], dtype=float),
        robot_rotation=np.asarray(rs["rotation"], dtype=float).reshape(3, 3),
        robot_gripper=float(rs["gripper"]),
        joint_velocity=np.asarray(obj["joint_velocity"], dtype=float),
        action_position=np.asarray(act["position"], dtype=float),
        action_rotation=np.asarray(act["rotation"], dtype=float).reshape(3, 3),
        action_gripper=float(act["gripper"]),
        frame_index=int(obj["frame_index"]),
    )


def read_episode(source) -> tuple[EpisodeManifest, list[EpisodeRecord]]:
    """Inverse of write_episode; revalidates all invariants.

    Error line numbers are 1-based file lines (line 1 is the manifest).
    """
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
    else:
        try:
            data = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
    if not data.endswith("\n"):
        # A well-formed file is LF-terminated; a missing trailing newline
        # means the last line was truncated mid-write.
        raise MalformedLine(data.count("\n") + 1, "truncated final line")
    lines = data.split("\n")[:-1]
    if not lines:
        raise MalformedLine(1, "empty file")
    try:
        head = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise MalformedLine(1, str(exc)) from exc
    if not isinstance(head, dict) or head.get("kind") != "manifest":
        raise MalformedLine(1, "first line must be the manifest")
    manifest = _parse_manifest(head)
    records = []
    prev_ts = None
    for lineno, raw in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MalformedLine(lineno, str(exc)) from exc
        if not isinstance(obj, dict) or obj.get("kind") != "record":
            raise MalformedLine(lineno, "expected a record line")
        try:
            rec = _parse_record(obj)
            rec.validate(index=lineno - 2)
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedLine(lineno, str(exc)) from exc
        if prev_ts is not None and rec.timestamp_ns <= prev_ts:
            raise NonMonotonicTimestamp(line=lineno)
        prev_ts = rec.timestamp_ns
        records.append(rec)
    if manifest.frame_count != len(records):
        raise InvariantViolation(
            f"manifest frame_count {manifest.frame_count} != record count {len(records)}"
        )
    return manifest, records


@dataclass
class CorpusStats:
    episode_count: int = 0
    frame_histogram: dict = field(default_factory=dict)  # path -> frames
    per_task: dict = field(default_factory=dict)  # task -> episode count
    flagged: list = field(default_factory=list)  # (path, frames, reason)
    errors: list = field(default_factory=list)  # (path, error string)


def episode_stats(corpus_dir, frame_range=DEFAULT_FRAME_RANGE) -> CorpusStats:
    """Aggregate stats over a directory of episode files; per-file errors are
    reported, not fatal."""
    stats = CorpusStats()
    lo, hi = frame_range
    for path in sorted(Path(corpus_dir).glob(f"*{EPISODE_SUFFIX}")):
        try:
            manifest, records = read_episode(path)
        except Exception as exc:
            stats.errors.append((str(path), f"{type(exc).__name__}: {exc}"))
            continue
        stats.episode_count += 1
        stats.frame_histogram[str(path)] = len(records)
        stats.per_task[manifest.task_name] = stats.per_task.get(manifest.task_name, 0) + 1
        if not (lo <= len(records) <= hi):
            side = "below" if len(records) < lo else "above"
            stats.flagged.append((str(path), len(records), f"{side} expected range {lo}-{hi}"))
    return stats


# ---------------------------------------------------------------------------
# Calibration sidecar (anchors + eta + latched rotation references), used by
# the offline retarget path to reproduce recorded actions exactly.
# ---------------------------------------------------------------------------

def save_calibration(path, anchors: dict, eta: float, m_h0, m_r0,
                     strategy: str, gripper_cfg: dict) -> None:
    payload = {
        "kind": "calibration",
        "schema_version": SCHEMA_VERSION,
        "anchors": anchors,
        "eta": float(eta),
        "m_h0": np.asarray(m_h0, dtype=float).reshape(9),
        "m_r0": np.asarray(m_r0, dtype=float).reshape(9),
        "strategy": strategy,
        "gripper": gripper_cfg,
    }
    Path(path).write_text(_fmt(payload) + "\n", encoding="utf-8")


def load_calibration(path) -> dict:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise MalformedLine(1, str(exc)) from exc
    if obj.get("kind") != "calibration":
        raise MalformedLine(1, "not a calibration file")
    obj["m_h0"] = np.asarray(obj["m_h0"], dtype=float).reshape(3, 3)
    obj["m_r0"] = np.asarray(obj["m_r0"], dtype=float).reshape(3, 3)
    return obj
