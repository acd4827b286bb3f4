import type {
  BatchAck,
  ProbeConfig,
  ProbeStats,
  SceneSnapshot,
  TickEvent,
  Transport,
} from "./types";

const DEFAULT_BATCH_THRESHOLD = 4000;
const DEFAULT_SAMPLE_STRIDE = 1000;

function pseudonym(prefix: string): string {
  return `${prefix}-${Math.random().toString(36).slice(2, 10)}${Date.now().toString(36)}`;
}

function fetchTransport(endpoint: string): Transport {
  return async (body) => {
    const response = await fetch(endpoint, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body,
      keepalive: true,
    });
    if (!response.ok) {
      return null;
    }
    return (await response.json()) as BatchAck;
  };
}

function vec(values: readonly number[] | undefined, length: number): number[] | null {
  if (!values || values.length !== length) {
    return null;
  }
  const out: number[] = [];
  for (const value of values) {
    if (typeof value !== "number" || !Number.isFinite(value)) {
      return null;
    }
    out.push(value);
  }
  return out;
}

/**
 * Samples every Nth render tick into schema-conformant events and delivers
 * them in bulk POSTs of `batchThreshold` events. `onTick` only buffers;
 * all network happens in the pump, one request in flight at a time. A
 * failed POST is retried once, then its batch is dropped with a warning:
 * the render loop must never pay for a sick collector.
 */
export class TelemetryProbe {
  readonly clientSessionId: string;
  readonly userId: string;

  private readonly threshold: number;
  private readonly stride: number;
  private readonly transport: Transport;
  private readonly warn: (message: string) => void;

  private buffer: TickEvent[] = [];
  private outbox: TickEvent[][] = [];
  private inFlight = false;
  private drain: Promise<void> = Promise.resolve();
  private counters: ProbeStats = {
    ticksSeen: 0,
    buffered: 0,
    skipped: 0,
    posts: 0,
    accepted: 0,
    rejected: 0,
    dropped: 0,
  };

  constructor(config: ProbeConfig) {
    const threshold = config.batchThreshold ?? DEFAULT_BATCH_THRESHOLD;
    const stride = config.sampleStride ?? DEFAULT_SAMPLE_STRIDE;
    if (!Number.isInteger(threshold) || threshold < 1) {
      throw new RangeError(`batchThreshold must be an integer >= 1, got ${threshold}`);
    }
    if (!Number.isInteger(stride) || stride < 1) {
      throw new RangeError(`sampleStride must be an integer >= 1, got ${stride}`);
    }
    this.threshold = threshold;
    this.stride = stride;
    this.clientSessionId = config.clientSessionId ?? pseudonym("s");
    this.userId = config.userId ?? pseudonym("u");
    this.transport = config.transport ?? fetchTransport(config.endpoint);
    this.warn = config.warn ?? ((message) => console.warn(`[proxilog-probe] ${message}`));
  }

  /** Buffer every stride-th tick. Constant-time; never touches the network. */
  onTick(snapshot: SceneSnapshot): void {
    this.counters.ticksSeen += 1;
    if (this.counters.ticksSeen % this.stride !== 0) {
      return;
    }
    const event = this.sample(snapshot);
    if (event === null) {
      this.counters.skipped += 1;
      return;
    }
    this.buffer.push(event);
    this.counters.buffered += 1;
    if (this.buffer.length >= this.threshold) {
      this.outbox.push(this.buffer);
      this.buffer = [];
      void this.pump();
    }
  }

  /** Queue the remainder regardless of threshold and start delivery. */
  flush(): Promise<void> {
    if (this.buffer.length > 0) {
      this.outbox.push(this.buffer);
      this.buffer = [];
    }
    return this.pump();
  }

  /** Flush when the page hides or unloads. */
  attach(target: {
    addEventListener(type: string, listener: () => void): void;
    visibilityState?: string;
  }): void {
    target.addEventListener("pagehide", () => {
      void this.flush();
    });
    target.addEventListener("visibilitychange", () => {
      if (target.visibilityState === "hidden") {
        void this.flush();
      }
    });
  }

  get stats(): ProbeStats {
    return { ...this.counters };
  }

  private sample(snapshot: SceneSnapshot): TickEvent | null {
    const position = vec(snapshot.position, 3);
    const direction = vec(snapshot.direction, 3);
    const orientation = vec(snapshot.orientation, 4);
    if (
      position === null ||
      direction === null ||
      orientation === null ||
      typeof snapshot.entered !== "boolean" ||
      typeof snapshot.muted !== "boolean" ||
      typeof snapshot.fps !== "number" ||
      !Number.isFinite(snapshot.fps) ||
      typeof snapshot.roomId !== "string" ||
      snapshot.roomId === ""
    ) {
      return null;
    }
    return {
      user_id: this.userId,
      ts_utc: Math.trunc(snapshot.timestampMs ?? Date.now()),
      entered: snapshot.entered,
      position: position as [number, number, number],
      direction: direction as [number, number, number],
      orientation: orientation as [number, number, number, number],
      fps: snapshot.fps,
      muted: snapshot.muted,
      mic_level: snapshot.micLevel ?? null,
      audio_dampened: snapshot.audioDampened ?? null,
      room_id: snapshot.roomId,
    };
  }

  /** Deliver queued batches in order, one POST in flight at a time. */
  private pump(): Promise<void> {
    if (this.inFlight) {
      return this.drain;
    }
    this.inFlight = true;
    this.drain = (async () => {
      try {
        while (this.outbox.length > 0) {
          const events = this.outbox[0];
          const body = JSON.stringify({
            client_session_id: this.clientSessionId,
            events,
          });
          let ack = await this.attempt(body);
          if (ack === null) {
            ack = await this.attempt(body); // retained once, retried once
          }
          this.outbox.shift();
          if (ack === null) {
            this.counters.dropped += events.length;
            this.warn(`dropped a batch of ${events.length} events after one retry`);
          } else {
            this.counters.accepted += ack.accepted;
            this.counters.rejected += ack.rejected;
          }
        }
      } finally {
        this.inFlight = false;
      }
    })();
    return this.drain;
  }

  private async attempt(body: string): Promise<BatchAck | null> {
    this.counters.posts += 1;
    try {
      return await this.transport(body);
    } catch {
      return null;
    }
  }
}
