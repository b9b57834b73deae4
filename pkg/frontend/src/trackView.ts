import type { TrackInfo } from "./types.js";
import type { CockpitViewModel } from "./viewmodel.js";

export interface TrackView {
  element: HTMLCanvasElement;
  setTrack(track: TrackInfo): void;
  render(model: CockpitViewModel): void;
}

function rhoColor(rho: number): string {
  // blue (safe) to orange (fast)
  const t = Math.min(Math.max(rho, 0), 1);
  const r = Math.round(60 + 195 * t);
  const g = Math.round(140 + 40 * t);
  const b = Math.round(240 - 210 * t);
  return `rgb(${r},${g},${b})`;
}

/** Canvas view: centerline, recent trail colored by preference, vehicle. */
export function createTrackView(doc: Document = document): TrackView {
  const canvas = doc.createElement("canvas");
  canvas.width = 900;
  canvas.height = 600;
  canvas.className = "track-view";

  let track: TrackInfo | null = null;
  let scale = 1;
  let offsetX = 0;
  let offsetY = 0;

  function setTrack(next: TrackInfo): void {
    track = next;
    const xs = next.waypoints.map((p) => p[0]);
    const ys = next.waypoints.map((p) => p[1]);
    const minX = Math.min(...xs) - 12;
    const maxX = Math.max(...xs) + 12;
    const minY = Math.min(...ys) - 12;
    const maxY = Math.max(...ys) + 12;
    scale = Math.min(canvas.width / (maxX - minX), canvas.height / (maxY - minY));
    offsetX = minX;
    offsetY = minY;
  }

  function toPx(x: number, y: number): [number, number] {
    return [(x - offsetX) * scale, canvas.height - (y - offsetY) * scale];
  }

  function render(model: CockpitViewModel): void {
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    ctx.fillStyle = "#10141c";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    if (!track) return;

    ctx.strokeStyle = "#3a4458";
    ctx.lineWidth = 2;
    ctx.beginPath();
    track.waypoints.forEach(([x, y], i) => {
      const [px, py] = toPx(x, y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    if (track.closed) ctx.closePath();
    ctx.stroke();

    for (let i = 1; i < model.trail.length; i++) {
      const a = model.trail[i - 1];
      const b = model.trail[i];
      ctx.strokeStyle = rhoColor(b.rho);
      ctx.lineWidth = 2.5;
      ctx.beginPath();
      const [ax, ay] = toPx(a.p1, a.p2);
      const [bx, by] = toPx(b.p1, b.p2);
      ctx.moveTo(ax, ay);
      ctx.lineTo(bx, by);
      ctx.stroke();
    }

    const frame = model.latest;
    if (frame) {
      const [vx, vy] = toPx(frame.state.p1, frame.state.p2);
      const heading = -frame.state.theta;
      ctx.save();
      ctx.translate(vx, vy);
      ctx.rotate(heading);
      ctx.fillStyle = "#f5f7ff";
      ctx.beginPath();
      ctx.moveTo(9, 0);
      ctx.lineTo(-6, 4.5);
      ctx.lineTo(-6, -4.5);
      ctx.closePath();
      ctx.fill();
      ctx.restore();
    }
  }

  return { element: canvas, setTrack, render };
}
