"""Command-line interface.

Subcommands: serve, replay, retarget, record, knn build, knn query,
validate. Machine-readable errors go to stderr as one JSON object and the
exit code is nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .control import SerialSchedulerConfig
from .episode import (
    DEFAULT_FRAME_RANGE,
    EPISODE_SUFFIX,
    episode_stats,
    load_calibration,
    read_episode,
)
from .errors import HandTeleopError
from .pipeline import retarget_offline, run_scripted_session
from .retarget import TrackedPointStrategy
from .retrieval import (
    DEFAULT_N,
    FeatureVector,
    embed_first_frame,
    embed_scene,
    index_build,
    knn_query,
    read_features,
    scene_from_first_frame,
    write_features,
)
from .session import SessionConfig

STRATEGIES = {s.value: s for s in TrackedPointStrategy}


def _fail(code: str, detail: str) -> int:
    print(json.dumps({"error": code, "detail": detail}), file=sys.stderr)
    return 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="handteleop")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the WebSocket session server")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--latency-budget", type=float, default=200.0, metavar="MS")
    p.add_argument("--tracked-point", choices=sorted(STRATEGIES), default="mcp")
    p.add_argument("--episode-dir", default=".")
    p.add_argument("--knn-index", default=None, help="feature file to serve knn_query from")

    p = sub.add_parser("replay", help="replay a recorded episode through the pipeline")
    p.add_argument("--episode", required=True)
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument("--calib", default=None)
    p.add_argument("--report-dir", default=None, help="write tracking figure here")

    p = sub.add_parser("retarget", help="offline batch: hand samples -> commands")
    p.add_argument("--input", required=True, help="episode file providing the hand channel")
    p.add_argument("--calib", required=True)
    p.add_argument("--output", required=True, help="JSONL of retargeted commands")

    p = sub.add_parser("record", help="record a scripted episode")
    p.add_argument("--script", choices=["lissajous", "pick_place"], required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frames", type=int, default=300)
    p.add_argument("--task-name", default=None)

    knn = sub.add_parser("knn", help="first-frame feature index")
    knn_sub = knn.add_subparsers(dest="knn_command", required=True)
    p = knn_sub.add_parser("build", help="embed a corpus into a feature index")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p = knn_sub.add_parser("query", help="choose a demonstration episode for a scene")
    p.add_argument("--index", required=True)
    p.add_argument("--scene", required=True,
                   help="episode file (first frame used) or JSON {\"grid\": [[...]]}")
    p.add_argument("--n", type=int, default=DEFAULT_N)
    p.add_argument("--corpus", default=None, help="resolve the chosen id to a file here")

    p = sub.add_parser("validate", help="aggregate corpus stats")
    p.add_argument("--corpus", required=True)
    p.add_argument("--min-frames", type=int, default=DEFAULT_FRAME_RANGE[0])
    p.add_argument("--max-frames", type=int, default=DEFAULT_FRAME_RANGE[1])
    p.add_argument("--report-dir", default=None,
                   help="write stats CSV + frame histogram figure here")
    return ap


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    config = SessionConfig(
        eta=args.eta,
        strategy=STRATEGIES[args.tracked_point],
        scheduler=SerialSchedulerConfig(args.latency_budget / 1e3),
        episode_dir=Path(args.episode_dir),
    )
    index = index_build(read_features(args.knn_index)) if args.knn_index else None
    uvicorn.run(create_app(config, index), host=args.host, port=args.port)
    return 0


def cmd_record(args) -> int:
    out = Path(args.out)
    if not out.name.endswith(EPISODE_SUFFIX):
        out = out.parent / (out.name + EPISODE_SUFFIX)
    episode_path, calib_path, _ = run_scripted_session(
        args.script, args.frames, out, task_name=args.task_name
    )
    print(json.dumps({"episode": str(episode_path), "calibration": str(calib_path),
                      "frames": args.frames}))
    return 0


def cmd_retarget(args) -> int:
    _, records = read_episode(args.input)
    calib = load_calibration(args.calib)
    commands = retarget_offline(records, calib)
    with open(args.output, "w") as fh:
        for rec, cmd in zip(records, commands):
            fh.write(json.dumps({
                "timestamp_ns": rec.timestamp_ns,
                "position": cmd.position.tolist(),
                "rotation": cmd.rotation.reshape(9).tolist(),
                "gripper": cmd.gripper.aperture,
                "gripper_closed": cmd.gripper.closed,
            }) + "\n")
    print(json.dumps({"commands": len(commands), "output": args.output}))
    return 0


def cmd_replay(args) -> int:
    from .replay import replay_episode

    summary = replay_episode(args.episode, speed=args.speed, calib_path=args.calib,
                             report_dir=args.report_dir)
    print(json.dumps(summary))
    return 0


def _load_scene(path: str) -> np.ndarray:
    if path.endswith(EPISODE_SUFFIX):
        _, records = read_episode(path)
        if not records:
            raise HandTeleopError("scene episode has no records")
        first = records[0]
        return scene_from_first_frame(first.hand_keypoints, first.robot_position,
                                      first.robot_gripper)
    obj = json.loads(Path(path).read_text())
    return np.asarray(obj["grid"], dtype=float)


def cmd_knn(args) -> int:
    if args.knn_command == "build":
        corpus = Path(args.corpus)
        features = []
        for path in sorted(corpus.glob(f"*{EPISODE_SUFFIX}")):
            manifest, records = read_episode(path)
            if not records:
                continue
            episode_id = path.name[: -len(EPISODE_SUFFIX)]
            features.append(FeatureVector(
                episode_id=episode_id,
                task_label=manifest.task_name,
                values=embed_first_frame(records[0]),
            ))
        index_build(features)  # validates before writing
        write_features(features, args.out)
        print(json.dumps({"indexed": len(features), "out": args.out}))
        return 0

    index = index_build(read_features(args.index))
    scene = _load_scene(args.scene)
    result = knn_query(index, embed_scene(scene), args.n)
    payload = {
        "chosen_episode_id": result.chosen_episode_id,
        "chosen_task_label": result.chosen_task_label,
        "neighbors": [list(nb) for nb in result.neighbors],
    }
    if args.corpus:
        payload["episode_path"] = str(
            Path(args.corpus) / (result.chosen_episode_id + EPISODE_SUFFIX)
        )
    print(json.dumps(payload))
    return 0


def cmd_validate(args) -> int:
    stats = episode_stats(args.corpus, frame_range=(args.min_frames, args.max_frames))
    summary = {
        "episode_count": stats.episode_count,
        "per_task": stats.per_task,
        "flagged": [{"path": p, "frames": f, "reason": r} for p, f, r in stats.flagged],
        "errors": [{"path": p, "error": e} for p, e in stats.errors],
    }
    if args.report_dir:
        from .report import save_frame_histogram, write_stats_csv

        report_dir = Path(args.report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)
        write_stats_csv(stats, report_dir / "corpus_stats.csv")
        save_frame_histogram(stats, report_dir / "frame_histogram.png",
                             frame_range=(args.min_frames, args.max_frames))
        summary["report_dir"] = str(report_dir)
    print(json.dumps(summary))
    return 0


COMMANDS = {
    "serve": cmd_serve,
    "record": cmd_record,
    "retarget": cmd_retarget,
    "replay": cmd_replay,
    "knn": cmd_knn,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except HandTeleopError as exc:
        return _fail(type(exc).__name__, str(exc))
    except FileNotFoundError as exc:
        return _fail("FileNotFound", str(exc))


if __name__ == "__main__":
    sys.exit(main())
