// Wire types for the lanepilot service WebSocket (JSON text frames).

export interface Pose {
  x: number;
  y: number;
  heading: number;
}

export interface ZoneDistances {
  left: number;
  center: number;
  right: number;
}

export interface ObstacleDot {
  x: number;
  y: number;
  radius: number;
}

export interface TelemetryMessage {
  kind: "telemetry";
  tick: number;
  t: number;
  pose: Pose;
  speed: number;
  lane: number;
  mode: string;
  source: string;
  zones: ZoneDistances;
  zone_clear_m: number;
  autonomy_pct: number;
  interventions: number;
  recording: boolean;
  collision: boolean;
  session_mode: "teleop_record" | "autonomous_eval";
  obstacles: ObstacleDot[];
  you_have_authority?: boolean;
}

export interface FrameMessage {
  kind: "frame";
  tick: number;
  pgm_base64: string;
}

export interface ErrorMessage {
  kind: "error";
  tick: number;
  message: string;
}

export type ServerMessage = TelemetryMessage | FrameMessage | ErrorMessage;

export interface ControlMessage {
  kind: "control";
  steering: number;
  throttle: number;
}

export interface SimpleClientMessage {
  kind: "takeover_begin" | "takeover_end" | "record_begin" | "record_end";
}

export type ClientMessage = ControlMessage | SimpleClientMessage;

export interface TrackInfo {
  points: [number, number][];
  lane_width: number;
  lane_count: number;
  length: number;
  closed: boolean;
}

export function parseServerMessage(data: string): ServerMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(data);
  } catch {
    return null;
  }
  const msg = raw as { kind?: string };
  if (msg.kind === "telemetry" || msg.kind === "frame" || msg.kind === "error") {
    return raw as ServerMessage;
  }
  return null;
}
