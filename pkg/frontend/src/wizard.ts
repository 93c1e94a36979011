/**
 * Three-step calibration wizard: guides the operator to hold the virtual
 * hand still at the origin, the +x anchor, and the +y anchor. Anchor capture
 * itself happens server-side via dwell detection on the streamed samples; the
 * wizard just tracks which anchor is next and renders hold progress.
 */
import { AnchorLabel } from "./protocol.js";
import { Vec3 } from "./hand.js";

export const ANCHOR_SEQUENCE: readonly AnchorLabel[] = ["a0", "a1", "a2"];

export const ANCHOR_PROMPTS: Record<AnchorLabel, string> = {
  a0: "Hold the hand still at the workspace origin",
  a1: "Hold the hand still at the +x reference point",
  a2: "Hold the hand still at the +y reference point",
};

export interface WizardView {
  step: number; // 0..3 (3 = done)
  currentLabel: AnchorLabel | null;
  prompt: string;
  done: boolean;
}

export class CalibrationWizard {
  private captured = new Set<AnchorLabel>();
  /** dwell hold progress in [0,1] for the UI ring */
  holdProgress = 0;

  constructor(
    readonly dwellTimeS = 1.0,
    readonly dwellRadiusM = 0.005,
  ) {}

  private holdStart: number | null = null;
  private holdAnchor: Vec3 | null = null;

  reset(): void {
    this.captured.clear();
    this.holdProgress = 0;
    this.holdStart = null;
    this.holdAnchor = null;
  }

  /** Server confirmed an anchor; advance the wizard. */
  onAnchorCaptured(label: AnchorLabel): void {
    this.captured.add(label);
    this.holdProgress = 0;
    this.holdStart = null;
    this.holdAnchor = null;
  }

  /**
   * Track the local pose each emitted frame to estimate hold progress.
   * Mirrors the server's trailing-window dwell: progress resets whenever the
   * hand leaves the dwell radius around where the hold started.
   */
  onPose(tS: number, position: Vec3): void {
    if (this.holdStart === null || this.holdAnchor === null) {
      this.holdStart = tS;
      this.holdAnchor = [...position];
      this.holdProgress = 0;
      return;
    }
    const d = Math.hypot(
      position[0] - this.holdAnchor[0],
      position[1] - this.holdAnchor[1],
      position[2] - this.holdAnchor[2],
    );
    if (d > this.dwellRadiusM) {
      this.holdStart = tS;
      this.holdAnchor = [...position];
      this.holdProgress = 0;
      return;
    }
    this.holdProgress = Math.min(1, (tS - this.holdStart) / this.dwellTimeS);
  }

  view(): WizardView {
    const next = ANCHOR_SEQUENCE.find((l) => !this.captured.has(l)) ?? null;
    const step = this.captured.size;
    return {
      step,
      currentLabel: next,
      prompt: next ? ANCHOR_PROMPTS[next] : "Calibration complete",
      done: next === null,
    };
  }
}
