import { describe, expect, it } from "vitest";
import {
  anchorPoint,
  calibrateBegin,
  goLive,
  handSample,
  knnQuery,
  parseServerMessage,
  recordStart,
  recordStop,
  robotAnchorConfig,
  setConfig,
} from "../src/protocol.js";

const identity9 = [1, 0, 0, 0, 1, 0, 0, 0, 1];

describe("server message parsing", () => {
  it("parses session_state", () => {
    const msg = parseServerMessage(
      JSON.stringify({
        type: "session_state",
        state: "calibrating",
        captured_anchors: ["a0"],
        robot_configured: true,
      }),
    );
    expect(msg.type).toBe("session_state");
    if (msg.type === "session_state") {
      expect(msg.state).toBe("calibrating");
      expect(msg.captured_anchors).toEqual(["a0"]);
    }
  });

  it("parses anchor_captured", () => {
    const msg = parseServerMessage(
      JSON.stringify({ type: "anchor_captured", label: "a1", xyz: [0.4, 0, 0] }),
    );
    expect(msg).toMatchObject({ label: "a1", xyz: [0.4, 0, 0] });
  });

  it("parses robot_state", () => {
    const msg = parseServerMessage(
      JSON.stringify({
        type: "robot_state",
        pose: { position: [0.1, 0.2, 0.3], rotation: identity9 },
        gripper: 0.5,
        pseudo_joints: [0, 0, 0, 0, 0, 0, 0],
      }),
    );
    expect(msg.type).toBe("robot_state");
  });

  it("parses telemetry and error", () => {
    expect(
      parseServerMessage(
        JSON.stringify({ type: "telemetry", queue_delay_ms: 12.5, drops: 3, stale: 0 }),
      ).type,
    ).toBe("telemetry");
    expect(
      parseServerMessage(
        JSON.stringify({ type: "error", code: "not_ready", detail: "missing anchors" }),
      ).type,
    ).toBe("error");
  });

  it("parses knn_result", () => {
    const msg = parseServerMessage(
      JSON.stringify({
        type: "knn_result",
        chosen_episode_id: "pick_place_0001",
        chosen_task_label: "pick_place",
        neighbors: [["pick_place_0001", 0.0]],
      }),
    );
    expect(msg.type).toBe("knn_result");
  });

  it("rejects unknown types and malformed payloads", () => {
    expect(() => parseServerMessage(JSON.stringify({ type: "nope" }))).toThrow();
    expect(() =>
      parseServerMessage(
        JSON.stringify({ type: "session_state", state: "flying" }),
      ),
    ).toThrow();
    expect(() =>
      parseServerMessage(
        JSON.stringify({
          type: "robot_state",
          pose: { position: [0, 0], rotation: identity9 },
          gripper: 0,
          pseudo_joints: [0, 0, 0, 0, 0, 0, 0],
        }),
      ),
    ).toThrow();
    expect(() => parseServerMessage("not json")).toThrow();
  });
});

describe("client message builders", () => {
  it("builds every inbound type with the wire field names", () => {
    expect(calibrateBegin()).toEqual({ type: "calibrate_begin", side: "human" });
    expect(anchorPoint("a1", [0.4, 0, 0])).toEqual({
      type: "anchor_point",
      label: "a1",
      xyz: [0.4, 0, 0],
    });
    expect(goLive()).toEqual({ type: "go_live" });
    expect(recordStart("demo")).toEqual({ type: "record_start", task_name: "demo" });
    expect(recordStop()).toEqual({ type: "record_stop" });
    expect(setConfig({ eta: 1.5, latencyBudgetMs: 150 })).toEqual({
      type: "set_config",
      eta: 1.5,
      latency_budget_ms: 150,
    });
    expect(knnQuery([[0, 0]], 5)).toEqual({
      type: "knn_query",
      scene: [[0, 0]],
      n: 5,
    });
    const cfg = robotAnchorConfig(
      { a0: [0, 0, 0], a1: [0.4, 0, 0], a2: [0, 0.4, 0] },
      { position: [0.1, 0.1, 0.1], rotation: identity9 },
    );
    expect(cfg.type).toBe("robot_anchor_config");
    expect(cfg.a1).toEqual([0.4, 0, 0]);
    expect(cfg.initial_pose?.position).toEqual([0.1, 0.1, 0.1]);
  });

  it("validates hand_sample shapes", () => {
    const kp = Array.from({ length: 21 }, () => [0, 0, 0]);
    const tf = Array.from({ length: 16 }, () => 0);
    expect(handSample(1, kp, tf).t_ns).toBe(1);
    expect(() => handSample(1, kp.slice(1), tf)).toThrow();
    expect(() => handSample(1, kp, tf.slice(1))).toThrow();
  });
});
