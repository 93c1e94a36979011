/**
 * Rigid 21-joint hand template mirroring the server simulator: wrist at the
 * origin, fingers along +x, thumb offset in -y. The console poses this
 * template from the 2-D drag position, z slider, yaw dial, and pinch toggle,
 * and streams the resulting keypoints as hand_sample messages.
 */
import { handSample, HandSampleMsg } from "./protocol.js";

export const HAND_JOINT_NAMES = [
  "wrist",
  "thumb_cmc", "thumb_mcp", "thumb_ip", "thumb_tip",
  "index_mcp", "index_pip", "index_dip", "index_tip",
  "middle_mcp", "middle_pip", "middle_dip", "middle_tip",
  "ring_mcp", "ring_pip", "ring_dip", "ring_tip",
  "pinky_mcp", "pinky_pip", "pinky_dip", "pinky_tip",
] as const;

export const JOINT_INDEX: Record<string, number> = Object.fromEntries(
  HAND_JOINT_NAMES.map((n, i) => [n, i]),
);

export type Vec3 = [number, number, number];
export type Mat3 = number[]; // 9 entries, row-major

function buildTemplate(): Vec3[] {
  const pts: Record<string, Vec3> = { wrist: [0, 0, 0] };
  // thumb: cmc at (0.02,-0.04), segments 0.03/0.03, tip pinned at x=0.105
  pts.thumb_cmc = [0.02, -0.04, 0];
  pts.thumb_mcp = [0.05, -0.04, 0];
  pts.thumb_ip = [0.08, -0.04, 0];
  pts.thumb_tip = [0.105, -0.04, 0];
  const rows: Record<string, number> = { index: 0.02, middle: 0, ring: -0.02, pinky: -0.04 };
  const starts: Record<string, number> = { index: 0.09, middle: 0.095, ring: 0.09, pinky: 0.08 };
  const seglen: Record<string, number> = { index: 0.025, middle: 0.027, ring: 0.025, pinky: 0.02 };
  for (const f of ["index", "middle", "ring", "pinky"]) {
    ["mcp", "pip", "dip", "tip"].forEach((joint, j) => {
      pts[`${f}_${joint}`] = [starts[f] + j * seglen[f], rows[f], 0];
    });
  }
  return HAND_JOINT_NAMES.map((n) => pts[n]);
}

export const HAND_TEMPLATE: readonly Vec3[] = buildTemplate();

const THUMB_TIP = JOINT_INDEX.thumb_tip;
const INDEX_TIP = JOINT_INDEX.index_tip;

const pinchMid: Vec3 = [
  (HAND_TEMPLATE[THUMB_TIP][0] + HAND_TEMPLATE[INDEX_TIP][0]) / 2,
  (HAND_TEMPLATE[THUMB_TIP][1] + HAND_TEMPLATE[INDEX_TIP][1]) / 2,
  (HAND_TEMPLATE[THUMB_TIP][2] + HAND_TEMPLATE[INDEX_TIP][2]) / 2,
];
const pinchAxisRaw: Vec3 = [
  HAND_TEMPLATE[INDEX_TIP][0] - HAND_TEMPLATE[THUMB_TIP][0],
  HAND_TEMPLATE[INDEX_TIP][1] - HAND_TEMPLATE[THUMB_TIP][1],
  HAND_TEMPLATE[INDEX_TIP][2] - HAND_TEMPLATE[THUMB_TIP][2],
];
const pinchNorm = Math.hypot(...pinchAxisRaw);
const pinchAxis: Vec3 = [
  pinchAxisRaw[0] / pinchNorm,
  pinchAxisRaw[1] / pinchNorm,
  pinchAxisRaw[2] / pinchNorm,
];

export function rotZ(theta: number): Mat3 {
  const c = Math.cos(theta);
  const s = Math.sin(theta);
  return [c, -s, 0, s, c, 0, 0, 0, 1];
}

export const IDENTITY3: Mat3 = [1, 0, 0, 0, 1, 0, 0, 0, 1];

function applyRotation(r: Mat3, p: Vec3): Vec3 {
  return [
    r[0] * p[0] + r[1] * p[1] + r[2] * p[2],
    r[3] * p[0] + r[4] * p[1] + r[5] * p[2],
    r[6] * p[0] + r[7] * p[1] + r[8] * p[2],
  ];
}

/**
 * Pose the rigid template in the world with a given thumb-to-index pinch
 * separation (meters). world = R * local + position.
 */
export function poseTemplate(position: Vec3, rotation: Mat3, pinch: number): Vec3[] {
  const local: Vec3[] = HAND_TEMPLATE.map((p) => [...p]);
  local[THUMB_TIP] = [
    pinchMid[0] - 0.5 * pinch * pinchAxis[0],
    pinchMid[1] - 0.5 * pinch * pinchAxis[1],
    pinchMid[2] - 0.5 * pinch * pinchAxis[2],
  ];
  local[INDEX_TIP] = [
    pinchMid[0] + 0.5 * pinch * pinchAxis[0],
    pinchMid[1] + 0.5 * pinch * pinchAxis[1],
    pinchMid[2] + 0.5 * pinch * pinchAxis[2],
  ];
  return local.map((p) => {
    const r = applyRotation(rotation, p);
    return [r[0] + position[0], r[1] + position[1], r[2] + position[2]];
  });
}

export function pinchDistance(keypoints: Vec3[]): number {
  const a = keypoints[THUMB_TIP];
  const b = keypoints[INDEX_TIP];
  return Math.hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}

/** Build a hand_sample message for a posed template. */
export function sampleAt(
  position: Vec3,
  rotation: Mat3,
  pinch: number,
  tNs: number,
): HandSampleMsg {
  const keypoints = poseTemplate(position, rotation, pinch).map((p) => [...p]);
  const transform = [
    rotation[0], rotation[1], rotation[2], position[0],
    rotation[3], rotation[4], rotation[5], position[1],
    rotation[6], rotation[7], rotation[8], position[2],
    0, 0, 0, 1,
  ];
  return handSample(tNs, keypoints, transform);
}

/** Pinch separation presets matching the gripper mapping's open/closed band. */
export const PINCH_OPEN = 0.08;
export const PINCH_CLOSED = 0.015;
