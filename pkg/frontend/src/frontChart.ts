import type { StepFrame } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 320;
const HEIGHT = 240;
const PAD = 34;

export interface FrontChart {
  element: SVGSVGElement;
  render(frame: StepFrame): void;
}

/**
 * Scatter of the current cell's objective pairs.  Markers are SVG
 * circles; the server-reported selection gets the `selected` class and
 * a larger radius.  Axes are labeled with the two objectives.
 */
export function createFrontChart(doc: Document = document): FrontChart {
  const svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("class", "front-chart");

  const axes = doc.createElementNS(SVG_NS, "g");
  const frame = doc.createElementNS(SVG_NS, "rect");
  frame.setAttribute("x", String(PAD));
  frame.setAttribute("y", String(PAD / 2));
  frame.setAttribute("width", String(WIDTH - PAD - 8));
  frame.setAttribute("height", String(HEIGHT - 1.5 * PAD));
  frame.setAttribute("class", "chart-frame");
  frame.setAttribute("fill", "none");
  frame.setAttribute("stroke", "#445");
  axes.appendChild(frame);

  const xLabel = doc.createElementNS(SVG_NS, "text");
  xLabel.textContent = "∫ d² dt";
  xLabel.setAttribute("x", String(WIDTH / 2));
  xLabel.setAttribute("y", String(HEIGHT - 6));
  xLabel.setAttribute("class", "axis-label x");
  axes.appendChild(xLabel);

  const yLabel = doc.createElementNS(SVG_NS, "text");
  yLabel.textContent = "− driven distance";
  yLabel.setAttribute("transform", `translate(12 ${HEIGHT / 2}) rotate(-90)`);
  yLabel.setAttribute("class", "axis-label y");
  axes.appendChild(yLabel);
  svg.appendChild(axes);

  const markerLayer = doc.createElementNS(SVG_NS, "g");
  markerLayer.setAttribute("class", "markers");
  svg.appendChild(markerLayer);

  function render(step: StepFrame): void {
    while (markerLayer.firstChild) markerLayer.removeChild(markerLayer.firstChild);
    const points = step.front;
    if (points.length === 0) return;
    const xs = points.map((p) => p[0]);
    const ys = points.map((p) => p[1]);
    const xMin = Math.min(...xs);
    const xMax = Math.max(...xs);
    const yMin = Math.min(...ys);
    const yMax = Math.max(...ys);
    const xSpan = xMax - xMin || 1;
    const ySpan = yMax - yMin || 1;
    const plotW = WIDTH - PAD - 8;
    const plotH = HEIGHT - 1.5 * PAD;

    points.forEach(([j1, j2], index) => {
      const cx = PAD + ((j1 - xMin) / xSpan) * plotW;
      const cy = PAD / 2 + (1 - (j2 - yMin) / ySpan) * plotH;
      const marker = doc.createElementNS(SVG_NS, "circle");
      marker.setAttribute("cx", String(cx));
      marker.setAttribute("cy", String(cy));
      const selected = index === step.selected_index;
      marker.setAttribute("r", selected ? "6" : "3.5");
      marker.setAttribute(
        "class",
        selected ? "front-marker selected" : "front-marker",
      );
      marker.setAttribute("fill", selected ? "#ff9f1c" : "#4cc9f0");
      markerLayer.appendChild(marker);
    });
  }

  return { element: svg, render };
}
