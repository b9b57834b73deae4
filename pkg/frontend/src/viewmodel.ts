import type { FinishedFrame, StepFrame } from "./types.js";

export interface TrailPoint {
  p1: number;
  p2: number;
  rho: number;
}

export type ConnectionState = "connecting" | "open" | "closed" | "retrying";

/**
 * DOM-free state behind the cockpit: the latest frame, the slider's
 * pending value until the server echoes it, a bounded trail of recent
 * positions, and the final metrics once the session ends.
 */
export class CockpitViewModel {
  connection: ConnectionState = "connecting";
  latest: StepFrame | null = null;
  finished: FinishedFrame | null = null;
  sliderValue = 0.5;
  pendingRho: number | null = null;
  mode: "manual" | "heuristic" = "manual";
  readonly trail: TrailPoint[] = [];
  readonly trailLimit: number;

  constructor(trailLimit = 2000) {
    this.trailLimit = trailLimit;
  }

  applyFrame(frame: StepFrame): void {
    this.latest = frame;
    this.mode = frame.mode === "heuristic" ? "heuristic" : "manual";
    // the server's value wins once it reflects the request
    if (this.pendingRho !== null && Math.abs(frame.rho - this.pendingRho) < 1e-9) {
      this.pendingRho = null;
    }
    if (this.mode === "heuristic") {
      this.sliderValue = frame.rho;
      this.pendingRho = null;
    }
    this.trail.push({ p1: frame.state.p1, p2: frame.state.p2, rho: frame.rho });
    if (this.trail.length > this.trailLimit) {
      this.trail.splice(0, this.trail.length - this.trailLimit);
    }
  }

  applyFinished(frame: FinishedFrame): void {
    this.finished = frame;
  }

  /** Clamp to [0, 1] at 0.01 resolution; returns the value to send. */
  requestRho(raw: number): number {
    const snapped = Math.round(Math.min(Math.max(raw, 0), 1) * 100) / 100;
    this.sliderValue = snapped;
    this.pendingRho = snapped;
    return snapped;
  }

  displayedRho(): number {
    if (this.pendingRho !== null) return this.pendingRho;
    return this.latest ? this.latest.rho : this.sliderValue;
  }
}
