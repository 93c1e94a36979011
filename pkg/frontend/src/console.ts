/**
 * Browser console: canvas workspace view with a draggable virtual hand,
 * z slider, yaw dial, pinch toggle, calibration wizard, record controls, and
 * a telemetry strip. Speaks only the WebSocket session protocol.
 */
import { SampleEmitter } from "./emitter.js";
import {
  Mat3,
  PINCH_CLOSED,
  PINCH_OPEN,
  Vec3,
  poseTemplate,
  rotZ,
} from "./hand.js";
import {
  RobotState,
  ServerMsg,
  calibrateBegin,
  parseServerMessage,
  recordStart,
  recordStop,
  robotAnchorConfig,
  setConfig,
} from "./protocol.js";
import { TelemetryBuffer, LATENCY_BAND_MS } from "./telemetry.js";
import { State } from "./transitions.js";
import { CalibrationWizard } from "./wizard.js";

const WORKSPACE_EXTENT = 0.6; // meters rendered across the canvas
const ROBOT_ANCHORS = {
  a0: [0, 0, 0] as Vec3,
  a1: [0.4, 0, 0] as Vec3,
  a2: [0, 0.4, 0] as Vec3,
};

interface SocketLike {
  send(data: string): void;
  addEventListener(type: "message", cb: (ev: { data: string }) => void): void;
  addEventListener(type: "open" | "close" | "error", cb: () => void): void;
}

export class TeleopConsole {
  state: State = "idle";
  capturedAnchors: string[] = [];
  robotConfigured = false;
  lastRobot: RobotState | null = null;
  lastError: string | null = null;
  episodePath: string | null = null;

  readonly telemetry = new TelemetryBuffer();
  readonly wizard = new CalibrationWizard();

  // virtual hand pose, driven by drag / slider / dial / toggle
  handXY: [number, number] = [0.2, 0.2];
  handZ = 0.1;
  yaw = 0;
  pinched = false;

  readonly emitter: SampleEmitter;

  constructor(private readonly socket: SocketLike) {
    this.emitter = new SampleEmitter(
      {
        position: () => [this.handXY[0], this.handXY[1], this.handZ],
        rotation: () => rotZ(this.yaw),
        pinch: () => (this.pinched ? PINCH_CLOSED : PINCH_OPEN),
      },
      (msg) => {
        this.wizard.onPose(msg.t_ns / 1e9, [
          this.handXY[0],
          this.handXY[1],
          this.handZ,
        ]);
        socket.send(JSON.stringify(msg));
      },
    );
    socket.addEventListener("message", (ev) => this.onMessage(ev.data));
  }

  onMessage(data: string): void {
    let msg: ServerMsg;
    try {
      msg = parseServerMessage(data);
    } catch (err) {
      this.lastError = `unparseable server frame: ${err}`;
      return;
    }
    switch (msg.type) {
      case "session_state":
        this.state = msg.state;
        this.capturedAnchors = msg.captured_anchors;
        this.robotConfigured = msg.robot_configured;
        if (msg.episode_path) this.episodePath = msg.episode_path;
        break;
      case "anchor_captured":
        this.wizard.onAnchorCaptured(msg.label);
        break;
      case "robot_state":
        this.lastRobot = msg;
        break;
      case "telemetry":
        this.telemetry.push(msg);
        break;
      case "knn_result":
        break;
      case "error":
        this.lastError = `${msg.code}: ${msg.detail}`;
        break;
    }
  }

  // -- operator actions -----------------------------------------------------

  beginCalibration(): void {
    this.wizard.reset();
    this.socket.send(
      JSON.stringify(
        robotAnchorConfig(ROBOT_ANCHORS, {
          position: [0.2, 0.2, 0.1],
          rotation: [1, 0, 0, 0, 1, 0, 0, 0, 1],
        }),
      ),
    );
    this.socket.send(JSON.stringify(calibrateBegin()));
    this.emitter.start();
  }

  startRecording(taskName: string): void {
    this.socket.send(JSON.stringify(recordStart(taskName)));
  }

  stopRecording(): void {
    this.socket.send(JSON.stringify(recordStop()));
  }

  setEta(eta: number): void {
    this.socket.send(JSON.stringify(setConfig({ eta })));
  }

  togglePinch(): void {
    this.pinched = !this.pinched;
  }
}

// ---------------------------------------------------------------------------
// Canvas rendering (pure function of console state, easy to call at 60 fps)
// ---------------------------------------------------------------------------

function toCanvas(
  p: [number, number],
  width: number,
  height: number,
): [number, number] {
  const sx = (p[0] / WORKSPACE_EXTENT + 0.1) * width;
  const sy = height - (p[1] / WORKSPACE_EXTENT + 0.1) * height;
  return [sx, sy];
}

export function drawWorkspace(
  ctx: CanvasRenderingContext2D,
  app: TeleopConsole,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);

  // anchors
  for (const [label, p] of Object.entries(ROBOT_ANCHORS)) {
    const [x, y] = toCanvas([p[0], p[1]], width, height);
    ctx.fillStyle = app.capturedAnchors.includes(label) ? "#2a9d4a" : "#888";
    ctx.beginPath();
    ctx.arc(x, y, 6, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillText(label, x + 8, y - 8);
  }

  // virtual hand skeleton
  const pose: Vec3 = [app.handXY[0], app.handXY[1], app.handZ];
  const rot: Mat3 = rotZ(app.yaw);
  const kps = poseTemplate(pose, rot, app.pinched ? PINCH_CLOSED : PINCH_OPEN);
  ctx.strokeStyle = "#3264c8";
  ctx.beginPath();
  const [wx, wy] = toCanvas([kps[0][0], kps[0][1]], width, height);
  for (const kp of kps.slice(1)) {
    const [x, y] = toCanvas([kp[0], kp[1]], width, height);
    ctx.moveTo(wx, wy);
    ctx.lineTo(x, y);
  }
  ctx.stroke();

  // robot end-effector
  if (app.lastRobot) {
    const p = app.lastRobot.pose.position;
    const [x, y] = toCanvas([p[0], p[1]], width, height);
    ctx.fillStyle = "#c83232";
    ctx.fillRect(x - 5, y - 5, 10, 10);
  }
}

export function drawTelemetryStrip(
  ctx: CanvasRenderingContext2D,
  app: TeleopConsole,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  const maxMs = 400;
  const yOf = (ms: number) => height - (Math.min(ms, maxMs) / maxMs) * height;

  // acceptable latency band
  ctx.fillStyle = "rgba(50, 160, 70, 0.15)";
  const yHi = yOf(LATENCY_BAND_MS[1]);
  const yLo = yOf(LATENCY_BAND_MS[0]);
  ctx.fillRect(0, yHi, width, yLo - yHi);

  const values = app.telemetry.values();
  ctx.strokeStyle = "#3264c8";
  ctx.beginPath();
  values.forEach((v, i) => {
    const x = (i / Math.max(values.length - 1, 1)) * width;
    const y = yOf(v);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
}
