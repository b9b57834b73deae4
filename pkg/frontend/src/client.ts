import type { OutboundMessage, StreamFrame } from "./types.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
}

export interface StreamCallbacks {
  onFrame(frame: StreamFrame): void;
  onStatus?(status: "connecting" | "open" | "closed" | "retrying"): void;
}

export interface StreamOptions {
  /** Base delay before a reconnect attempt, doubled per failure. */
  backoffMs?: number;
  maxBackoffMs?: number;
  maxRetries?: number;
  socketFactory?: (url: string) => SocketLike;
  scheduler?: (fn: () => void, ms: number) => void;
}

/**
 * Bidirectional session stream with exponential-backoff reconnect.
 * Outbound messages sent while disconnected are queued and flushed on
 * the next open socket.
 */
export class SessionStream {
  private socket: SocketLike | null = null;
  private retries = 0;
  private queue: string[] = [];
  private closedByUser = false;

  constructor(
    private readonly url: string,
    private readonly callbacks: StreamCallbacks,
    private readonly options: StreamOptions = {},
  ) {}

  connect(): void {
    const factory =
      this.options.socketFactory ?? ((url: string) => new WebSocket(url) as unknown as SocketLike);
    this.callbacks.onStatus?.(this.retries === 0 ? "connecting" : "retrying");
    const socket = factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.retries = 0;
      this.callbacks.onStatus?.("open");
      for (const raw of this.queue.splice(0)) {
        socket.send(raw);
      }
    };
    socket.onmessage = (ev) => {
      let frame: StreamFrame;
      try {
        frame = JSON.parse(ev.data) as StreamFrame;
      } catch {
        return;
      }
      this.callbacks.onFrame(frame);
    };
    socket.onclose = () => {
      this.socket = null;
      if (this.closedByUser) {
        this.callbacks.onStatus?.("closed");
        return;
      }
      const maxRetries = this.options.maxRetries ?? 8;
      if (this.retries >= maxRetries) {
        this.callbacks.onStatus?.("closed");
        return;
      }
      const base = this.options.backoffMs ?? 250;
      const cap = this.options.maxBackoffMs ?? 5000;
      const delay = Math.min(base * 2 ** this.retries, cap);
      this.retries += 1;
      this.callbacks.onStatus?.("retrying");
      const schedule = this.options.scheduler ?? ((fn, ms) => setTimeout(fn, ms));
      schedule(() => {
        if (!this.closedByUser) this.connect();
      }, delay);
    };
  }

  send(message: OutboundMessage): void {
    const raw = JSON.stringify(message);
    if (this.socket) {
      this.socket.send(raw);
    } else {
      this.queue.push(raw);
    }
  }

  close(): void {
    this.closedByUser = true;
    this.socket?.close();
  }
}
