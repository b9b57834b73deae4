import { SessionStream } from "./client.js";
import { createControls, createMetricsPanel } from "./controls.js";
import { createFrontChart } from "./frontChart.js";
import { createTrackView } from "./trackView.js";
import type { StreamFrame, TrackInfo } from "./types.js";
import { CockpitViewModel } from "./viewmodel.js";

const API = (path: string) => `${location.origin.replace(/^ws/, "http")}${path}`;
const WS = (path: string) => `${location.origin.replace(/^http/, "ws")}${path}`;

export async function startCockpit(root: HTMLElement): Promise<void> {
  const model = new CockpitViewModel();

  const tracksResponse = await fetch(API("/tracks"));
  const tracks: TrackInfo[] = (await tracksResponse.json()).tracks;
  const params = new URLSearchParams(location.search);
  const trackName = params.get("track") ?? tracks[0].name;
  const track = tracks.find((t) => t.name === trackName) ?? tracks[0];

  const session = await fetch(API("/sessions"), {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({
      track: track.name,
      speed: Number(params.get("speed") ?? "1"),
      policy: { mode: "manual", rho: 0.5, t_max: 600 },
    }),
  }).then((r) => r.json());

  const trackView = createTrackView();
  trackView.setTrack(track);
  const frontChart = createFrontChart();
  const metrics = createMetricsPanel();

  let paused = false;
  const stream = new SessionStream(
    WS(`/sessions/${session.id}/stream`),
    {
      onFrame(frame: StreamFrame) {
        if (frame.type === "step") {
          model.applyFrame(frame);
          frontChart.render(frame);
          metrics.update({
            elapsed: frame.metrics.elapsed,
            integrated: frame.metrics.integrated_distance,
            maxOffset: frame.metrics.constraint_max,
          });
          controls.setGhost(frame.rho);
          controls.setHeuristic(model.mode === "heuristic");
        } else if (frame.type === "finished") {
          model.applyFinished(frame);
          metrics.update({
            elapsed: frame.metrics.steps * 0.05,
            integrated: frame.metrics.integrated_distance,
            maxOffset: frame.metrics.constraint_max,
            lapTime: frame.metrics.lap_time,
          });
          controls.setStatus(`finished: ${frame.status}`);
        }
      },
      onStatus(status) {
        model.connection = status;
        controls.setStatus(status);
      },
    },
  );

  const controls = createControls({
    onRho(value) {
      const snapped = model.requestRho(value);
      stream.send({ type: "set_rho", value: snapped });
      controls.setGhost(snapped);
    },
    onToggleHeuristic() {
      const next = model.mode === "heuristic" ? "manual" : "heuristic";
      stream.send({ type: "set_mode", value: next });
      controls.setHeuristic(next === "heuristic");
    },
    onPause() {
      paused = !paused;
      stream.send({ type: paused ? "pause" : "resume" });
      controls.pauseButton.textContent = paused ? "resume" : "pause";
    },
    onReset() {
      stream.send({ type: "reset" });
      model.trail.length = 0;
    },
  });

  const layout = document.createElement("div");
  layout.className = "cockpit-layout";
  const side = document.createElement("div");
  side.className = "side-panel";
  side.append(controls.element, frontChart.element, metrics.element);
  layout.append(trackView.element, side);
  root.append(layout);

  stream.connect();

  function paint(): void {
    trackView.render(model);
    requestAnimationFrame(paint);
  }
  requestAnimationFrame(paint);
}

if (typeof document !== "undefined" && document.getElementById("cockpit-root")) {
  void startCockpit(document.getElementById("cockpit-root") as HTMLElement);
}
