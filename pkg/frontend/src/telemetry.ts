/**
 * Rolling telemetry buffer behind the latency strip: queue delay per frame,
 * drop/stale counters, and how the delays sit against the scheduler's
 * acceptable latency band.
 */
import { Telemetry } from "./protocol.js";

export const LATENCY_BAND_MS: readonly [number, number] = [100, 300];

export interface TelemetrySummary {
  count: number;
  maxDelayMs: number;
  meanDelayMs: number;
  /** fraction of frames with queue delay within the acceptable band or below */
  withinBudgetFraction: number;
  drops: number;
  stale: number;
}

export class TelemetryBuffer {
  private delays: number[] = [];
  private drops = 0;
  private stale = 0;

  constructor(readonly capacity = 300) {}

  push(msg: Telemetry): void {
    this.delays.push(msg.queue_delay_ms);
    if (this.delays.length > this.capacity) this.delays.shift();
    this.drops = msg.drops;
    this.stale = msg.stale;
  }

  values(): readonly number[] {
    return this.delays;
  }

  summary(budgetMs = LATENCY_BAND_MS[1]): TelemetrySummary {
    const n = this.delays.length;
    if (n === 0) {
      return {
        count: 0,
        maxDelayMs: 0,
        meanDelayMs: 0,
        withinBudgetFraction: 1,
        drops: this.drops,
        stale: this.stale,
      };
    }
    let sum = 0;
    let max = 0;
    let within = 0;
    for (const d of this.delays) {
      sum += d;
      if (d > max) max = d;
      if (d <= budgetMs) within += 1;
    }
    return {
      count: n,
      maxDelayMs: max,
      meanDelayMs: sum / n,
      withinBudgetFraction: within / n,
      drops: this.drops,
      stale: this.stale,
    };
  }
}
