export { TelemetryProbe } from "./probe";
export type {
  BatchAck,
  BatchEnvelope,
  ProbeConfig,
  ProbeStats,
  SceneSnapshot,
  TickEvent,
  Transport,
} from "./types";
