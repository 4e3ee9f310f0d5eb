// Canvas drawing: camera strip (nearest-neighbor upscale), top-down map with
// zone rays, readouts, and the intervention log.

import type { TrackInfo } from "./protocol.js";
import { ClientView, formatAutonomy, isStale } from "./view.js";

const MAP_SCALE = 9; // px per meter
const ZONE_RAY_ANGLES: { name: "left" | "center" | "right"; deg: number }[] = [
  { name: "left", deg: 37.5 },
  { name: "center", deg: 0 },
  { name: "right", deg: -37.5 },
];

export function drawCamera(canvas: HTMLCanvasElement, view: ClientView): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.imageSmoothingEnabled = false; // show the network's actual input pixels
  ctx.fillStyle = "#000";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const frame = view.frame;
  if (!frame) return;
  const image = new ImageData(frame.width, frame.height);
  for (let i = 0; i < frame.pixels.length; i++) {
    const v = frame.pixels[i];
    image.data[i * 4] = v;
    image.data[i * 4 + 1] = v;
    image.data[i * 4 + 2] = v;
    image.data[i * 4 + 3] = 255;
  }
  const off = new OffscreenCanvas(frame.width, frame.height);
  const offCtx = off.getContext("2d")!;
  offCtx.putImageData(image, 0, 0);
  ctx.drawImage(off, 0, 0, frame.width, frame.height, 0, 0, canvas.width, canvas.height);
  if (isStale(view, performance.now())) {
    banner(ctx, canvas, "STALE FRAME");
  }
}

export function drawMap(canvas: HTMLCanvasElement, view: ClientView, track: TrackInfo | null): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.fillStyle = "#10141c";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const t = view.telemetry;
  if (!t) return;

  // follow camera centered on the ego pose, north-up
  const toPx = (x: number, y: number): [number, number] => [
    canvas.width / 2 + (x - t.pose.x) * MAP_SCALE,
    canvas.height / 2 - (y - t.pose.y) * MAP_SCALE,
  ];

  if (track) {
    drawLaneLines(ctx, track, toPx);
  }

  for (const o of t.obstacles) {
    const [px, py] = toPx(o.x, o.y);
    ctx.beginPath();
    ctx.arc(px, py, Math.max(o.radius * MAP_SCALE, 2), 0, Math.PI * 2);
    ctx.fillStyle = "#d9763d";
    ctx.fill();
  }

  // zone rays: length is the measured distance, color by clear/blocked
  for (const ray of ZONE_RAY_ANGLES) {
    const reading = t.zones[ray.name];
    const clear = reading >= t.zone_clear_m;
    const angle = t.pose.heading + (ray.deg * Math.PI) / 180;
    const [x0, y0] = toPx(t.pose.x, t.pose.y);
    const [x1, y1] = toPx(t.pose.x + reading * Math.cos(angle), t.pose.y + reading * Math.sin(angle));
    ctx.beginPath();
    ctx.moveTo(x0, y0);
    ctx.lineTo(x1, y1);
    ctx.strokeStyle = clear ? "rgba(90, 200, 120, 0.5)" : "rgba(230, 80, 80, 0.9)";
    ctx.lineWidth = clear ? 1 : 2;
    ctx.stroke();
  }

  // ego triangle
  const [ex, ey] = toPx(t.pose.x, t.pose.y);
  ctx.save();
  ctx.translate(ex, ey);
  ctx.rotate(-t.pose.heading);
  ctx.beginPath();
  ctx.moveTo(8, 0);
  ctx.lineTo(-6, 5);
  ctx.lineTo(-6, -5);
  ctx.closePath();
  ctx.fillStyle = t.collision ? "#ff4040" : "#4aa3ff";
  ctx.fill();
  ctx.restore();

  if (!view.connected) {
    banner(ctx, canvas, "DISCONNECTED");
  } else if (isStale(view, performance.now())) {
    banner(ctx, canvas, "NO DATA");
  }
}

function drawLaneLines(
  ctx: CanvasRenderingContext2D,
  track: TrackInfo,
  toPx: (x: number, y: number) => [number, number],
): void {
  const pts = track.points;
  const half = track.lane_count / 2;
  for (let lane = 0; lane <= track.lane_count; lane++) {
    const offset = (half - lane) * track.lane_width;
    ctx.beginPath();
    for (let i = 0; i < pts.length; i++) {
      const [nx, ny] = normalAt(pts, i);
      const [px, py] = toPx(pts[i][0] + nx * offset, pts[i][1] + ny * offset);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    }
    const isEdge = lane === 0 || lane === track.lane_count;
    ctx.strokeStyle = isEdge ? "rgba(220,220,220,0.8)" : "rgba(150,150,150,0.35)";
    ctx.lineWidth = 1;
    ctx.stroke();
  }
}

function normalAt(pts: [number, number][], i: number): [number, number] {
  const a = pts[Math.max(i - 1, 0)];
  const b = pts[Math.min(i + 1, pts.length - 1)];
  const dx = b[0] - a[0];
  const dy = b[1] - a[1];
  const len = Math.hypot(dx, dy) || 1;
  return [-dy / len, dx / len]; // left normal
}

function banner(ctx: CanvasRenderingContext2D, canvas: HTMLCanvasElement, text: string): void {
  ctx.fillStyle = "rgba(200, 40, 40, 0.85)";
  ctx.fillRect(0, 0, canvas.width, 22);
  ctx.fillStyle = "#fff";
  ctx.font = "bold 13px monospace";
  ctx.fillText(text, 8, 16);
}

export function renderReadouts(view: ClientView, els: {
  autonomy: HTMLElement;
  mode: HTMLElement;
  speed: HTMLElement;
  steering: HTMLElement;
  recording: HTMLElement;
  authority: HTMLElement;
  interventions: HTMLElement;
  log: HTMLElement;
  warnings: HTMLElement;
}, mapperSteering: number, takeoverActive: boolean): void {
  const t = view.telemetry;
  els.autonomy.textContent = t ? formatAutonomy(t.autonomy_pct) : "--";
  els.mode.textContent = t ? `${t.session_mode} / ${t.mode}` : "--";
  els.speed.textContent = t ? `${t.speed.toFixed(2)} m/s` : "--";
  els.steering.textContent = `${mapperSteering.toFixed(2)} rad${takeoverActive ? " [TAKEOVER]" : ""}`;
  els.recording.textContent = t && t.recording ? "REC" : "";
  els.authority.textContent = view.hasAuthority ? "control: you" : "control: other client";
  els.interventions.textContent = t ? String(t.interventions) : "0";
  els.log.textContent = view.interventionLog
    .map((e) => `#${e.count} at t=${e.simTime.toFixed(1)}s`)
    .join("\n");
  els.warnings.textContent = view.warnings.slice(-3).join("\n");
}
