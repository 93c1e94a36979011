import itertools
import json

import numpy as np
import pytest

from handteleop.retarget import TrackedPointStrategy
from handteleop.session import INBOUND_TYPES, Session, SessionConfig
from handteleop.simulator import DT, ScriptedHandStream, hand_sample_at

ROBOT_ANCHORS = {"a0": [0.0, 0.0, 0.0], "a1": [0.4, 0.0, 0.0], "a2": [0.0, 0.4, 0.0]}
HUMAN_ANCHORS = {"a0": [0.0, 0.0, 0.0], "a1": [0.4, 0.0, 0.0], "a2": [0.0, 0.4, 0.0]}


def sample_msg(t, pos=(0.1, 0.1, 0.1), rot=None, pinch=0.08):
    s = hand_sample_at(np.asarray(pos, float),
                       np.eye(3) if rot is None else rot, pinch, t)
    return {
        "type": "hand_sample",
        "t_ns": s.t_ns,
        "keypoints": s.keypoints.points.tolist(),
        "transform": np.asarray(s.transform).reshape(16).tolist(),
    }


def fixed_messages(tmp_path=None):
    """One representative payload per inbound type, for enumeration."""
    return {
        "hand_sample": sample_msg(1.0),
        "calibrate_begin": {"type": "calibrate_begin", "side": "human"},
        "anchor_point": {"type": "anchor_point", "label": "a0", "xyz": [0, 0, 0]},
        "robot_anchor_config": {"type": "robot_anchor_config", **ROBOT_ANCHORS},
        "go_live": {"type": "go_live"},
        "record_start": {"type": "record_start", "task_name": "t"},
        "record_stop": {"type": "record_stop"},
        "set_config": {"type": "set_config", "eta": 1.5},
        "knn_query": {"type": "knn_query", "scene": [[0.0] * 8] * 8, "n": 1},
    }


def calibrated_session(tmp_path) -> Session:
    cfg = SessionConfig(episode_dir=tmp_path)
    s = Session(config=cfg)
    out = s.handle_message({"type": "robot_anchor_config", **ROBOT_ANCHORS,
                            "initial_pose": {"position": [0.1, 0.1, 0.1],
                                             "rotation": list(np.eye(3).ravel())}})
    assert out[0]["type"] == "session_state"
    assert s.handle_message({"type": "calibrate_begin", "side": "human"})[0]["state"] == "calibrating"
    for label in ("a0", "a1", "a2"):
        out = s.handle_message({"type": "anchor_point", "label": label,
                                "xyz": HUMAN_ANCHORS[label]})
        assert out[0]["type"] == "anchor_captured"
    assert s.state == "live"
    return s


class TestTransitions:
    def test_idle_calibrate_begin(self, tmp_path):
        s = Session(SessionConfig(episode_dir=tmp_path))
        out = s.handle_message({"type": "calibrate_begin", "side": "human"})
        assert s.state == "calibrating"
        assert out[0]["state"] == "calibrating"

    def test_third_dwell_anchor_goes_live(self, tmp_path):
        cfg = SessionConfig(episode_dir=tmp_path)
        s = Session(config=cfg)
        s.handle_message({"type": "robot_anchor_config", **ROBOT_ANCHORS})
        s.handle_message({"type": "calibrate_begin", "side": "human"})
        from handteleop.pipeline import tracked_offset

        offset = tracked_offset(cfg.strategy)
        t = 0.0
        for label in ("a0", "a1", "a2"):
            pos = np.asarray(HUMAN_ANCHORS[label]) - offset
            captured = False
            for _ in range(45):
                t += DT
                out = s.handle_message(sample_msg(t, pos=pos))
                if any(m.get("type") == "anchor_captured" for m in out):
                    captured = True
                    break
            assert captured, label
        assert s.state == "live"
        assert s.m_h0 is not None and s.p_basis is not None

    def test_go_live_not_ready(self, tmp_path):
        s = Session(SessionConfig(episode_dir=tmp_path))
        s.handle_message({"type": "calibrate_begin", "side": "human"})
        out = s.handle_message({"type": "go_live"})
        assert out[0]["type"] == "error" and out[0]["code"] == "not_ready"
        assert s.state == "calibrating"

    def test_record_cycle(self, tmp_path):
        s = calibrated_session(tmp_path)
        out = s.handle_message({"type": "record_start", "task_name": "demo"})
        assert s.state == "recording"
        t = 2.0
        for i in range(5):
            t += DT
            s.handle_message(sample_msg(t, pos=(0.1 + 0.001 * i, 0.1, 0.1)))
        out = s.handle_message({"type": "record_stop"})
        assert s.state == "live"
        done = next(m for m in out if m["type"] == "session_state")
        assert done["frames"] == 5
        from handteleop.episode import read_episode

        manifest, recs = read_episode(done["episode_path"])
        assert manifest.task_name == "demo" and len(recs) == 5

    def test_rejects_out_of_order(self, tmp_path):
        s = Session(SessionConfig(episode_dir=tmp_path))
        for bad in ("record_start", "record_stop", "go_live", "anchor_point"):
            out = s.handle_message(fixed_messages()[bad])
            assert out[0]["type"] == "error"
            assert s.state == "idle"

    def test_non_monotonic_sample_rejected(self, tmp_path):
        s = calibrated_session(tmp_path)
        s.handle_message(sample_msg(2.0))
        before = s.state_fingerprint()
        out = s.handle_message(sample_msg(1.5))
        assert out[0]["type"] == "error"
        assert s.state_fingerprint() == before


class TestLivePipeline:
    def test_telemetry_and_tracking(self, tmp_path):
        s = calibrated_session(tmp_path)
        stream = ScriptedHandStream("pick_place")
        t = 1.0
        last_state = None
        for i in range(90):
            t += DT
            smp = stream.sample(i * DT)
            out = s.handle_message({
                "type": "hand_sample", "t_ns": int(round(t * 1e9)),
                "keypoints": smp.keypoints.points.tolist(),
                "transform": np.asarray(smp.transform).reshape(16).tolist(),
            })
            types = [m["type"] for m in out]
            assert "robot_state" in types and "telemetry" in types
            last_state = next(m for m in out if m["type"] == "robot_state")
            tel = next(m for m in out if m["type"] == "telemetry")
            assert tel["queue_delay_ms"] <= s.cfg.scheduler.latency_budget * 1e3
        pos = np.asarray(last_state["pose"]["position"])
        assert np.all(np.abs(pos) <= 1.0)  # workspace bound

    def test_set_config_eta(self, tmp_path):
        s = calibrated_session(tmp_path)
        s.handle_message({"type": "set_config", "eta": 2.0})
        assert s.shared.eta == 2.0

    def test_set_config_bad_value_no_mutation(self, tmp_path):
        s = calibrated_session(tmp_path)
        before = s.state_fingerprint()
        out = s.handle_message({"type": "set_config", "eta": -1.0})
        assert out[0]["type"] == "error"
        assert s.state_fingerprint() == before

    def test_knn_query_without_index(self, tmp_path):
        s = Session(SessionConfig(episode_dir=tmp_path))
        out = s.handle_message(fixed_messages()["knn_query"])
        assert out[0]["type"] == "error" and out[0]["code"] == "no_index"


class TestProtocolSafety:
    def test_exhaustive_small_sequences(self, tmp_path):
        """No message sequence of length <= 4 hits an undefined transition,
        and rejected messages never mutate state."""
        msgs = fixed_messages()
        alphabet = list(INBOUND_TYPES)
        valid_states = {"idle", "calibrating", "live", "recording"}
        checked = 0
        for length in (1, 2, 3, 4):
            for combo in itertools.product(alphabet, repeat=length):
                s = Session(SessionConfig(episode_dir=tmp_path))
                for mtype in combo:
                    before = s.state_fingerprint()
                    out = s.handle_message(dict(msgs[mtype]))
                    assert isinstance(out, list)
                    assert s.state in valid_states
                    if any(m.get("type") == "error" for m in out):
                        assert s.state_fingerprint() == before, (combo, mtype)
                checked += 1
        assert checked == 9 + 81 + 729 + 6561

    def test_replay_determinism(self, tmp_path):
        def run():
            s = calibrated_session(tmp_path)
            stream = ScriptedHandStream("lissajous")
            outs = []
            t = 1.0
            for i in range(60):
                t += DT
                smp = stream.sample(i * DT)
                outs.append(json.dumps(s.handle_message({
                    "type": "hand_sample", "t_ns": int(round(t * 1e9)),
                    "keypoints": smp.keypoints.points.tolist(),
                    "transform": np.asarray(smp.transform).reshape(16).tolist(),
                }), sort_keys=True))
            return outs

        assert run() == run()


class TestServerTransport:
    def test_websocket_round_trip(self, tmp_path):
        from fastapi.testclient import TestClient

        from handteleop.server import create_app

        app = create_app(SessionConfig(episode_dir=tmp_path))
        client = TestClient(app)
        with client.websocket_connect("/ws") as ws:
            ws.send_text(json.dumps({"type": "calibrate_begin", "side": "human"}))
            msg = json.loads(ws.receive_text())
            assert msg["type"] == "session_state" and msg["state"] == "calibrating"
            ws.send_text("not json")
            assert json.loads(ws.receive_text())["code"] == "bad_json"
            ws.send_text(json.dumps({"type": "go_live"}))
            assert json.loads(ws.receive_text())["type"] == "error"

    def test_health(self):
        from fastapi.testclient import TestClient

        from handteleop.server import create_app

        assert TestClient(create_app()).get("/health").json() == {"status": "ok"}
