/**
 * Client-side mirror of the server's session state machine, used to enable
 * and disable controls without a round trip. The server remains the source
 * of truth: every session_state message overwrites the local prediction.
 */

export type State = "idle" | "calibrating" | "live" | "recording";

export type ClientMessageType =
  | "hand_sample"
  | "calibrate_begin"
  | "anchor_point"
  | "robot_anchor_config"
  | "go_live"
  | "record_start"
  | "record_stop"
  | "set_config"
  | "knn_query";

/** Message types the server accepts in each state (everything else errors
 * and leaves server state untouched). */
const ALLOWED: Record<State, ReadonlySet<ClientMessageType>> = {
  idle: new Set([
    "hand_sample",
    "calibrate_begin",
    "robot_anchor_config",
    "set_config",
    "knn_query",
  ]),
  calibrating: new Set([
    "hand_sample",
    "anchor_point",
    "robot_anchor_config",
    "go_live",
    "set_config",
    "knn_query",
  ]),
  live: new Set(["hand_sample", "record_start", "set_config", "knn_query"]),
  recording: new Set(["hand_sample", "record_stop", "set_config", "knn_query"]),
};

export function isAllowed(state: State, msgType: ClientMessageType): boolean {
  return ALLOWED[state].has(msgType);
}

export interface PredictionContext {
  capturedLabels: readonly string[]; // anchor labels captured so far
  robotConfigured: boolean;
  /** label about to be sent with an anchor_point message, if any */
  anchorLabel?: string;
}

/**
 * Predict the state after sending msgType, assuming the server accepts it.
 * Disallowed messages are rejected server-side without mutation, so they
 * predict no change.
 */
export function predictNext(
  state: State,
  msgType: ClientMessageType,
  ctx: PredictionContext,
): State {
  if (!isAllowed(state, msgType)) return state;
  switch (msgType) {
    case "calibrate_begin":
      return "calibrating";
    case "anchor_point": {
      // completing the anchor set auto-transitions when the robot side is set
      const after = new Set(ctx.capturedLabels);
      if (ctx.anchorLabel !== undefined) after.add(ctx.anchorLabel);
      if (state === "calibrating" && after.size >= 3 && ctx.robotConfigured)
        return "live";
      return state;
    }
    case "go_live":
      return ctx.capturedLabels.length >= 3 && ctx.robotConfigured
        ? "live"
        : state;
    case "record_start":
      return "recording";
    case "record_stop":
      return "live";
    default:
      return state;
  }
}

export const ALL_STATES: readonly State[] = [
  "idle",
  "calibrating",
  "live",
  "recording",
];

export const ALL_CLIENT_TYPES: readonly ClientMessageType[] = [
  "hand_sample",
  "calibrate_begin",
  "anchor_point",
  "robot_anchor_config",
  "go_live",
  "record_start",
  "record_stop",
  "set_config",
  "knn_query",
];
