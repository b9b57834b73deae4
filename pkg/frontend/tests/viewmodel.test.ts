import { describe, expect, it } from "vitest";
import { CockpitViewModel } from "../src/viewmodel.js";
import type { StepFrame } from "../src/types.js";

function step(overrides: Partial<StepFrame> = {}): StepFrame {
  return {
    type: "step",
    time: 0,
    state: { p1: 1, p2: 2, theta: 0, v_y: 0, r: 0 },
    reduced: { v_y: 0, r: 0, xi: 0, d: 0, kappa: 0, mirrored: false },
    rho: 0.5,
    mode: "manual",
    control: 0,
    front: [
      [0, -15],
      [1, -16],
    ],
    selected_index: 0,
    progress: 0,
    metrics: { elapsed: 0, integrated_distance: 0, constraint_max: 0 },
    ...overrides,
  };
}

describe("cockpit view model", () => {
  it("keeps the pending preference until the server echoes it", () => {
    const model = new CockpitViewModel();
    model.applyFrame(step({ rho: 0.5 }));
    const sent = model.requestRho(0.731);
    expect(sent).toBe(0.73); // snapped to 0.01 resolution
    expect(model.displayedRho()).toBe(0.73);
    model.applyFrame(step({ rho: 0.5 })); // frame in flight, not echoed yet
    expect(model.displayedRho()).toBe(0.73);
    model.applyFrame(step({ rho: 0.73 }));
    expect(model.pendingRho).toBeNull();
    expect(model.displayedRho()).toBe(0.73);
  });

  it("clamps slider requests into [0, 1]", () => {
    const model = new CockpitViewModel();
    expect(model.requestRho(1.7)).toBe(1);
    expect(model.requestRho(-0.4)).toBe(0);
  });

  it("tracks the heuristic staircase instead of the slider", () => {
    const model = new CockpitViewModel();
    model.requestRho(0.9);
    model.applyFrame(step({ mode: "heuristic", rho: 0.45 }));
    expect(model.mode).toBe("heuristic");
    expect(model.sliderValue).toBe(0.45);
    expect(model.pendingRho).toBeNull();
  });

  it("bounds the trail ring", () => {
    const model = new CockpitViewModel(50);
    for (let i = 0; i < 120; i++) {
      model.applyFrame(step({ state: { p1: i, p2: 0, theta: 0, v_y: 0, r: 0 } }));
    }
    expect(model.trail.length).toBe(50);
    expect(model.trail[0].p1).toBe(70);
    expect(model.trail[49].p1).toBe(119);
  });

  it("stores final metrics", () => {
    const model = new CockpitViewModel();
    model.applyFinished({
      type: "finished",
      status: "finished",
      metrics: {
        lap_time: 30.9,
        integrated_distance: 12.5,
        constraint_max: 1.9,
        completed: true,
        aborted: false,
        steps: 620,
      },
    });
    expect(model.finished?.metrics.lap_time).toBe(30.9);
  });
});
