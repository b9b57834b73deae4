/** Wire types mirroring the session service's stream schema. */

export interface VehicleStateFrame {
  p1: number;
  p2: number;
  theta: number;
  v_y: number;
  r: number;
}

export interface ReducedFrame {
  v_y: number;
  r: number;
  xi: number;
  d: number;
  kappa: number;
  mirrored: boolean;
}

export interface StepFrame {
  type: "step";
  time: number;
  state: VehicleStateFrame;
  reduced: ReducedFrame;
  rho: number;
  mode: string;
  control: number;
  front: [number, number][];
  selected_index: number;
  progress: number;
  metrics: {
    elapsed: number;
    integrated_distance: number;
    constraint_max: number;
  };
}

export interface FinishedFrame {
  type: "finished";
  status: string;
  metrics: {
    lap_time: number | null;
    integrated_distance: number;
    constraint_max: number;
    completed: boolean;
    aborted: boolean;
    steps: number;
  };
}

export interface ErrorFrame {
  type: "error";
  error: string;
}

export type StreamFrame = StepFrame | FinishedFrame | ErrorFrame;

export type OutboundMessage =
  | { type: "set_rho"; value: number }
  | { type: "set_mode"; value: "manual" | "heuristic" }
  | { type: "pause" }
  | { type: "resume" }
  | { type: "reset" }
  | { type: "step" };

export interface TrackInfo {
  name: string;
  closed: boolean;
  length: number;
  waypoints: [number, number][];
}
