import { describe, expect, it } from "vitest";
import { createFrontChart } from "../src/frontChart.js";
import type { StepFrame } from "../src/types.js";

function frameWithFront(front: [number, number][], selected: number): StepFrame {
  return {
    type: "step",
    time: 0.5,
    state: { p1: 0, p2: 0, theta: 0, v_y: 0, r: 0 },
    reduced: { v_y: 0, r: 0, xi: 0, d: 0, kappa: 0, mirrored: false },
    rho: 0.5,
    mode: "manual",
    control: 0,
    front,
    selected_index: selected,
    progress: 10,
    metrics: { elapsed: 0.5, integrated_distance: 0, constraint_max: 0 },
  };
}

function syntheticFront(n: number): [number, number][] {
  return Array.from({ length: n }, (_, i) => [i * 0.7, -15 - 0.2 * (n - i)] as [number, number]);
}

describe("front chart", () => {
  it("renders one marker per front point with the selection highlighted", () => {
    const chart = createFrontChart(document);
    document.body.appendChild(chart.element);
    chart.render(frameWithFront(syntheticFront(20), 7));

    const markers = chart.element.querySelectorAll("circle.front-marker");
    expect(markers.length).toBe(20);
    const selected = chart.element.querySelectorAll("circle.front-marker.selected");
    expect(selected.length).toBe(1);
    // the highlighted marker is exactly the server-reported index
    expect(markers[7].classList.contains("selected")).toBe(true);
  });

  it("re-renders without accumulating markers", () => {
    const chart = createFrontChart(document);
    chart.render(frameWithFront(syntheticFront(20), 0));
    chart.render(frameWithFront(syntheticFront(12), 3));
    expect(chart.element.querySelectorAll("circle.front-marker").length).toBe(12);
  });

  it("handles a single-point front", () => {
    const chart = createFrontChart(document);
    chart.render(frameWithFront(syntheticFront(1), 0));
    const markers = chart.element.querySelectorAll("circle.front-marker");
    expect(markers.length).toBe(1);
    expect(markers[0].classList.contains("selected")).toBe(true);
  });

  it("labels the axes with the two objectives", () => {
    const chart = createFrontChart(document);
    const labels = Array.from(chart.element.querySelectorAll("text")).map((t) => t.textContent);
    expect(labels).toContain("∫ d² dt");
    expect(labels).toContain("− driven distance");
  });
});
