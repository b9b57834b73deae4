export interface ControlPanel {
  element: HTMLElement;
  slider: HTMLInputElement;
  modeToggle: HTMLButtonElement;
  pauseButton: HTMLButtonElement;
  resetButton: HTMLButtonElement;
  statusLabel: HTMLElement;
  setGhost(rho: number): void;
  setHeuristic(on: boolean): void;
  setStatus(text: string): void;
}

export interface ControlHandlers {
  onRho(value: number): void;
  onToggleHeuristic(): void;
  onPause(): void;
  onReset(): void;
}

/** Preference slider, mode toggle and session controls. */
export function createControls(handlers: ControlHandlers, doc: Document = document): ControlPanel {
  const root = doc.createElement("div");
  root.className = "control-panel";

  const sliderRow = doc.createElement("div");
  sliderRow.className = "slider-row";
  const safeLabel = doc.createElement("span");
  safeLabel.textContent = "safe";
  const fastLabel = doc.createElement("span");
  fastLabel.textContent = "fast";

  const slider = doc.createElement("input");
  slider.type = "range";
  slider.min = "0";
  slider.max = "1";
  slider.step = "0.01";
  slider.value = "0.5";
  slider.className = "rho-slider";
  slider.addEventListener("input", () => handlers.onRho(Number(slider.value)));

  const ghost = doc.createElement("span");
  ghost.className = "rho-ghost";
  ghost.textContent = "ρ = 0.50";

  sliderRow.append(safeLabel, slider, fastLabel, ghost);

  const buttons = doc.createElement("div");
  buttons.className = "button-row";
  const modeToggle = doc.createElement("button");
  modeToggle.textContent = "heuristic: off";
  modeToggle.addEventListener("click", () => handlers.onToggleHeuristic());
  const pauseButton = doc.createElement("button");
  pauseButton.textContent = "pause";
  pauseButton.addEventListener("click", () => handlers.onPause());
  const resetButton = doc.createElement("button");
  resetButton.textContent = "reset";
  resetButton.addEventListener("click", () => handlers.onReset());
  buttons.append(modeToggle, pauseButton, resetButton);

  const statusLabel = doc.createElement("div");
  statusLabel.className = "connection-status";
  statusLabel.textContent = "connecting";

  root.append(sliderRow, buttons, statusLabel);

  return {
    element: root,
    slider,
    modeToggle,
    pauseButton,
    resetButton,
    statusLabel,
    setGhost(rho: number) {
      ghost.textContent = `ρ = ${rho.toFixed(2)}`;
    },
    setHeuristic(on: boolean) {
      slider.disabled = on;
      modeToggle.textContent = on ? "heuristic: on" : "heuristic: off";
    },
    setStatus(text: string) {
      statusLabel.textContent = text;
    },
  };
}

export interface MetricsPanel {
  element: HTMLElement;
  update(values: { elapsed: number; integrated: number; maxOffset: number; lapTime?: number | null }): void;
}

export function createMetricsPanel(doc: Document = document): MetricsPanel {
  const root = doc.createElement("dl");
  root.className = "metrics-panel";
  const fields: Record<string, HTMLElement> = {};
  for (const [key, label] of [
    ["elapsed", "t (s)"],
    ["integrated", "∫ d² dt"],
    ["maxOffset", "max |d| (m)"],
    ["lapTime", "lap (s)"],
  ] as const) {
    const dt = doc.createElement("dt");
    dt.textContent = label;
    const dd = doc.createElement("dd");
    dd.textContent = "–";
    dd.dataset.metric = key;
    fields[key] = dd;
    root.append(dt, dd);
  }
  return {
    element: root,
    update(values) {
      fields.elapsed.textContent = values.elapsed.toFixed(2);
      fields.integrated.textContent = values.integrated.toFixed(4);
      fields.maxOffset.textContent = values.maxOffset.toFixed(3);
      fields.lapTime.textContent =
        values.lapTime === undefined || values.lapTime === null ? "–" : values.lapTime.toFixed(3);
    },
  };
}
