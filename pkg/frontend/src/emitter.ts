/**
 * Fixed-rate hand-sample emitter. Timestamps derive from a monotonic
 * frame counter (not wall clock), so the stream the server sees is strictly
 * monotonic even when the browser timer jitters or fires late.
 */
import { Mat3, Vec3, sampleAt } from "./hand.js";
import { HandSampleMsg } from "./protocol.js";

export const EMIT_RATE_HZ = 30;

export interface HandPoseSource {
  position(): Vec3;
  rotation(): Mat3;
  pinch(): number;
}

type Send = (msg: HandSampleMsg) => void;
type Timer = (cb: () => void, ms: number) => unknown;
type CancelTimer = (handle: unknown) => void;

export class SampleEmitter {
  private frame = 0;
  private handle: unknown = null;
  readonly intervalMs = 1000 / EMIT_RATE_HZ;

  constructor(
    private readonly source: HandPoseSource,
    private readonly send: Send,
    private readonly setTimer: Timer = (cb, ms) => setInterval(cb, ms),
    private readonly clearTimer: CancelTimer = (h) =>
      clearInterval(h as ReturnType<typeof setInterval>),
  ) {}

  get running(): boolean {
    return this.handle !== null;
  }

  /** Frames emitted since start. */
  get framesEmitted(): number {
    return this.frame;
  }

  tick(): HandSampleMsg {
    this.frame += 1;
    const tNs = Math.round((this.frame * 1e9) / EMIT_RATE_HZ);
    const msg = sampleAt(
      this.source.position(),
      this.source.rotation(),
      this.source.pinch(),
      tNs,
    );
    this.send(msg);
    return msg;
  }

  start(): void {
    if (this.handle !== null) return;
    this.handle = this.setTimer(() => this.tick(), this.intervalMs);
  }

  stop(): void {
    if (this.handle === null) return;
    this.clearTimer(this.handle);
    this.handle = null;
  }
}
