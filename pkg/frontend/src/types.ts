/** Wire types shared with the ingest server. Field names are the contract. */

export interface TickEvent {
  user_id: string;
  ts_utc: number;
  entered: boolean;
  position: [number, number, number];
  direction: [number, number, number];
  orientation: [number, number, number, number];
  fps: number;
  muted: boolean;
  mic_level: number | null;
  audio_dampened: boolean | null;
  room_id: string;
}

export interface BatchEnvelope {
  client_session_id: string;
  events: TickEvent[];
}

export interface BatchAck {
  accepted: number;
  rejected: number;
}

/** What the render loop hands the probe on each tick. */
export interface SceneSnapshot {
  position?: readonly number[];
  direction?: readonly number[];
  orientation?: readonly number[];
  entered?: boolean;
  fps?: number;
  muted?: boolean;
  micLevel?: number | null;
  audioDampened?: boolean | null;
  roomId?: string;
  /** Defaults to Date.now(); epoch milliseconds. */
  timestampMs?: number;
}

/** Posts one serialised BatchEnvelope. Resolve null (or throw) on failure. */
export type Transport = (body: string) => Promise<BatchAck | null>;

export interface ProbeConfig {
  endpoint: string;
  /** Events per POST. Default 4000. */
  batchThreshold?: number;
  /** Log every Nth rendered tick. Default 1000. */
  sampleStride?: number;
  /** Pseudonym attached to every event. Default: random per session. */
  userId?: string;
  clientSessionId?: string;
  /** Injectable for tests; defaults to fetch against `endpoint`. */
  transport?: Transport;
  warn?: (message: string) => void;
}

export interface ProbeStats {
  ticksSeen: number;
  buffered: number;
  skipped: number;
  posts: number;
  accepted: number;
  rejected: number;
  dropped: number;
}
