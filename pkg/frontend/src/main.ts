// Console wiring: WebSocket in, keyboard out, canvases on animation frames.

import { InputMapper, KeyState, emptyKeys } from "./input.js";
import { TrackInfo, parseServerMessage } from "./protocol.js";
import { drawCamera, drawMap, renderReadouts } from "./render.js";
import { ClientView, applyMessage, emptyView } from "./view.js";

let view: ClientView = emptyView();
let track: TrackInfo | null = null;
const keys: KeyState = emptyKeys();
const mapper = new InputMapper();
let socket: WebSocket | null = null;

const $ = (id: string): HTMLElement => document.getElementById(id)!;

const KEYMAP: Record<string, keyof KeyState> = {
  ArrowLeft: "left",
  ArrowRight: "right",
  ArrowUp: "up",
  ArrowDown: "down",
  " ": "space",
};

function connect(): void {
  const url = `ws://${location.host}/ws`;
  socket = new WebSocket(url);
  socket.addEventListener("open", () => {
    view = { ...view, connected: true };
  });
  socket.addEventListener("close", () => {
    view = { ...view, connected: false };
    setTimeout(connect, 1000); // reconnect; the view rebuilds from messages
  });
  socket.addEventListener("message", (event) => {
    const msg = parseServerMessage(String(event.data));
    if (!msg) return;
    view = applyMessage(view, msg, performance.now());
    if (msg.kind === "telemetry") {
      // one input batch per received tick keeps commands at the sensor rate
      const evalMode = msg.session_mode === "autonomous_eval";
      for (const out of mapper.tick(keys, evalMode)) {
        socket?.send(JSON.stringify(out));
      }
    }
  });
}

async function fetchTrack(): Promise<void> {
  try {
    const resp = await fetch("/api/track");
    if (resp.ok) track = (await resp.json()) as TrackInfo;
  } catch {
    track = null;
  }
}

function onKey(event: KeyboardEvent, down: boolean): void {
  const key = KEYMAP[event.key];
  if (!key) return;
  event.preventDefault();
  keys[key] = down;
}

function frame(): void {
  drawCamera($("camera") as HTMLCanvasElement, view);
  drawMap($("map") as HTMLCanvasElement, view, track);
  renderReadouts(view, {
    autonomy: $("autonomy"),
    mode: $("mode"),
    speed: $("speed"),
    steering: $("steering"),
    recording: $("recording"),
    authority: $("authority"),
    interventions: $("interventions"),
    log: $("intervention-log"),
    warnings: $("warnings"),
  }, mapper.steering, mapper.takeoverActive);
  requestAnimationFrame(frame);
}

window.addEventListener("keydown", (e) => onKey(e, true));
window.addEventListener("keyup", (e) => onKey(e, false));
window.addEventListener("load", () => {
  void fetchTrack();
  connect();
  requestAnimationFrame(frame);
});
