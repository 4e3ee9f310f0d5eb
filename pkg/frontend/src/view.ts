// Client-side state: a pure reducer over server messages, so the console can
// be rebuilt from scratch on reconnect and unit-tested without a DOM.

import type { ServerMessage, TelemetryMessage } from "./protocol.js";

export const STALE_AFTER_MS = 500;

export interface DecodedFrame {
  tick: number;
  width: number;
  height: number;
  pixels: Uint8Array; // grayscale, row-major
}

export interface InterventionEntry {
  tick: number;
  simTime: number;
  count: number;
}

export interface ClientView {
  connected: boolean;
  telemetry: TelemetryMessage | null;
  frame: DecodedFrame | null;
  lastMessageAt: number; // wall-clock ms of the latest server message
  hasAuthority: boolean;
  warnings: string[];
  interventionLog: InterventionEntry[];
}

export function emptyView(): ClientView {
  return {
    connected: false,
    telemetry: null,
    frame: null,
    lastMessageAt: 0,
    hasAuthority: true, // assume yes until the server says otherwise
    warnings: [],
    interventionLog: [],
  };
}

export function applyMessage(view: ClientView, msg: ServerMessage, nowMs: number): ClientView {
  const next: ClientView = { ...view, lastMessageAt: nowMs };
  if (msg.kind === "telemetry") {
    const prevCount = view.telemetry ? view.telemetry.interventions : 0;
    next.telemetry = msg;
    if (msg.you_have_authority !== undefined) {
      next.hasAuthority = msg.you_have_authority;
    }
    if (msg.interventions > prevCount) {
      next.interventionLog = [
        ...view.interventionLog,
        { tick: msg.tick, simTime: msg.t, count: msg.interventions },
      ];
    }
  } else if (msg.kind === "frame") {
    const decoded = decodePgmBase64(msg.pgm_base64);
    if (decoded) {
      next.frame = { tick: msg.tick, ...decoded };
    }
  } else {
    next.warnings = [...view.warnings.slice(-9), msg.message];
    if (msg.message.includes("authority")) {
      next.hasAuthority = false;
    }
  }
  return next;
}

export function isStale(view: ClientView, nowMs: number): boolean {
  return view.lastMessageAt > 0 && nowMs - view.lastMessageAt > STALE_AFTER_MS;
}

export function formatAutonomy(pct: number): string {
  return `${pct.toFixed(2)}%`;
}

export function decodePgmBase64(
  b64: string,
): { width: number; height: number; pixels: Uint8Array } | null {
  const bytes = base64ToBytes(b64);
  // header: "P5\n<w> <h>\n255\n" then raw pixels
  let pos = 0;
  const readToken = (): string => {
    while (pos < bytes.length && isWhitespace(bytes[pos])) pos++;
    const start = pos;
    while (pos < bytes.length && !isWhitespace(bytes[pos])) pos++;
    return asciiSlice(bytes, start, pos);
  };
  if (readToken() !== "P5") return null;
  const width = parseInt(readToken(), 10);
  const height = parseInt(readToken(), 10);
  const maxval = parseInt(readToken(), 10);
  pos++; // single whitespace after maxval
  if (!Number.isFinite(width) || !Number.isFinite(height) || maxval !== 255) return null;
  const pixels = bytes.subarray(pos, pos + width * height);
  if (pixels.length !== width * height) return null;
  return { width, height, pixels: new Uint8Array(pixels) };
}

function isWhitespace(b: number): boolean {
  return b === 0x20 || b === 0x0a || b === 0x0d || b === 0x09;
}

function asciiSlice(bytes: Uint8Array, start: number, end: number): string {
  let s = "";
  for (let i = start; i < end; i++) s += String.fromCharCode(bytes[i]);
  return s;
}

function base64ToBytes(b64: string): Uint8Array {
  if (typeof atob === "function") {
    const bin = atob(b64);
    const out = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
    return out;
  }
  return new Uint8Array(Buffer.from(b64, "base64"));
}
