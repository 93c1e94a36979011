/**
 * Wire protocol for the teleoperation session server: zod schemas for every
 * server-to-client message plus typed builders for client-to-server messages.
 * One JSON object per WebSocket text frame, discriminated by "type".
 */
import { z } from "zod";

const vec3 = z.tuple([z.number(), z.number(), z.number()]);
const rotation9 = z.array(z.number()).length(9);

export const SessionStateMsg = z.object({
  type: z.literal("session_state"),
  state: z.enum(["idle", "calibrating", "live", "recording"]),
  captured_anchors: z.array(z.enum(["a0", "a1", "a2"])),
  robot_configured: z.boolean(),
  episode_path: z.string().optional(),
  frames: z.number().int().optional(),
});

export const AnchorCapturedMsg = z.object({
  type: z.literal("anchor_captured"),
  label: z.enum(["a0", "a1", "a2"]),
  xyz: vec3,
});

export const RobotStateMsg = z.object({
  type: z.literal("robot_state"),
  pose: z.object({ position: vec3, rotation: rotation9 }),
  gripper: z.number().min(0).max(1),
  pseudo_joints: z.array(z.number()).length(7),
});

export const TelemetryMsg = z.object({
  type: z.literal("telemetry"),
  queue_delay_ms: z.number(),
  drops: z.number().int().nonnegative(),
  stale: z.number().int().nonnegative(),
});

export const KnnResultMsg = z.object({
  type: z.literal("knn_result"),
  chosen_episode_id: z.string(),
  chosen_task_label: z.string(),
  neighbors: z.array(z.tuple([z.string(), z.number()])),
});

export const ErrorMsg = z.object({
  type: z.literal("error"),
  code: z.string(),
  detail: z.string(),
});

export const ServerMessage = z.discriminatedUnion("type", [
  SessionStateMsg,
  AnchorCapturedMsg,
  RobotStateMsg,
  TelemetryMsg,
  KnnResultMsg,
  ErrorMsg,
]);

export type SessionState = z.infer<typeof SessionStateMsg>;
export type AnchorCaptured = z.infer<typeof AnchorCapturedMsg>;
export type RobotState = z.infer<typeof RobotStateMsg>;
export type Telemetry = z.infer<typeof TelemetryMsg>;
export type KnnResult = z.infer<typeof KnnResultMsg>;
export type ErrorMessage = z.infer<typeof ErrorMsg>;
export type ServerMsg = z.infer<typeof ServerMessage>;

/** Parse one WebSocket text frame; throws ZodError on violations. */
export function parseServerMessage(text: string): ServerMsg {
  return ServerMessage.parse(JSON.parse(text));
}

// ---------------------------------------------------------------------------
// Client-to-server builders
// ---------------------------------------------------------------------------

export type Vec3 = [number, number, number];
export type AnchorLabel = "a0" | "a1" | "a2";

export interface HandSampleMsg {
  type: "hand_sample";
  t_ns: number;
  keypoints: number[][]; // 21 x 3
  transform: number[]; // 4x4 row-major
}

export function handSample(
  tNs: number,
  keypoints: number[][],
  transform: number[],
): HandSampleMsg {
  if (keypoints.length !== 21) throw new Error("keypoints must be 21 x 3");
  if (transform.length !== 16) throw new Error("transform must have 16 entries");
  return { type: "hand_sample", t_ns: tNs, keypoints, transform };
}

export const calibrateBegin = () =>
  ({ type: "calibrate_begin", side: "human" }) as const;

export const anchorPoint = (label: AnchorLabel, xyz: Vec3) =>
  ({ type: "anchor_point", label, xyz }) as const;

export interface RobotAnchorConfigMsg {
  type: "robot_anchor_config";
  a0: Vec3;
  a1: Vec3;
  a2: Vec3;
  initial_pose?: { position: Vec3; rotation: number[] };
}

export function robotAnchorConfig(
  anchors: Record<AnchorLabel, Vec3>,
  initialPose?: { position: Vec3; rotation: number[] },
): RobotAnchorConfigMsg {
  return {
    type: "robot_anchor_config" as const,
    a0: anchors.a0,
    a1: anchors.a1,
    a2: anchors.a2,
    ...(initialPose ? { initial_pose: initialPose } : {}),
  };
}

export const goLive = () => ({ type: "go_live" }) as const;

export const recordStart = (taskName: string) =>
  ({ type: "record_start", task_name: taskName }) as const;

export const recordStop = () => ({ type: "record_stop" }) as const;

export interface SetConfigOptions {
  eta?: number;
  alpha?: number;
  latencyBudgetMs?: number;
  strategy?: "wrist" | "midpoint" | "mcp";
}

export function setConfig(opts: SetConfigOptions) {
  const msg: Record<string, unknown> = { type: "set_config" };
  if (opts.eta !== undefined) msg.eta = opts.eta;
  if (opts.alpha !== undefined) msg.alpha = opts.alpha;
  if (opts.latencyBudgetMs !== undefined) msg.latency_budget_ms = opts.latencyBudgetMs;
  if (opts.strategy !== undefined) msg.strategy = opts.strategy;
  return msg as { type: "set_config" } & Record<string, unknown>;
}

export const knnQuery = (scene: number[][], n: number) =>
  ({ type: "knn_query", scene, n }) as const;
