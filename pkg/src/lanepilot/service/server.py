"""Telemetry/teleop service: HTTP endpoints plus a WebSocket at /ws.

One background task owns the simulation and ticks it at the decision rate,
wall-clock paced (divided by time_scale). Clients receive JSON telemetry
every tick and camera frames as base64 PGM; frames are dropped for slow
clients, telemetry never is. The first connected client holds control
authority; control messages from anyone else get an error reply.

Persistence (datasets, models, run logs) roots at $LANEPILOT_DATA_DIR.
"""

import asyncio
import base64
import contextlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

from aiohttp import WSMsgType, web

from ..dataset.records import DatasetManifest, SamplePair
from ..evalrun.episode import EpisodeEngine
from ..evalrun.replay import save_log
from ..avoidance import AvoidanceController
from ..nncore.modelio import load_model
from ..nncore.network import predict_steering
from ..simworld.vehicle import MAX_STEERING, steering_to_omega
from ..simworld.world import build_world

DATA_DIR_ENV = "LANEPILOT_DATA_DIR"
SERVICE_KEY = web.AppKey("service", object)
FRAME_QUEUE_SOFT_LIMIT = 5
TICK_US = 100_000

CLIENT_KINDS = {"control", "takeover_begin", "takeover_end", "record_begin", "record_end"}


@dataclass
class ServiceConfig:
    scenario: dict
    model_path: str | None = None
    mode: str = "teleop_record"
    host: str = "127.0.0.1"
    port: int = 8750
    time_scale: float = 1.0
    data_dir: str | None = None

    def resolve_data_dir(self) -> Path:
        root = self.data_dir or os.environ.get(DATA_DIR_ENV) or "lanepilot-data"
        return Path(root)


class Client:
    _next_id = 0

    def __init__(self, ws: web.WebSocketResponse):
        Client._next_id += 1
        self.id = Client._next_id
        self.ws = ws
        self.queue: asyncio.Queue = asyncio.Queue()

    def offer(self, text: str, droppable: bool) -> None:
        if droppable and self.queue.qsize() >= FRAME_QUEUE_SOFT_LIMIT:
            return
        self.queue.put_nowait(text)


class Session:
    """Simulation state behind the service; one per mode switch."""

    def __init__(self, cfg: ServiceConfig, run_id: str):
        self.cfg = cfg
        self.run_id = run_id
        self.mode = cfg.mode
        world = build_world(cfg.scenario)
        if self.mode == "autonomous_eval":
            if not cfg.model_path:
                raise ValueError("autonomous_eval requires a model path")
            net = load_model(cfg.model_path)

            def policy(frame):
                return predict_steering(net, (frame.astype("float32") / 255.0)[None])

            controller = AvoidanceController(world.track, world.cfg, policy,
                                             start_lane=world.ego_lane)
            self.engine = EpisodeEngine(world, controller, scenario_name=run_id,
                                        seed=0, mode="human")
        else:
            self.engine = EpisodeEngine(world, None, scenario_name=run_id,
                                        seed=0, mode="human")
        self.recording = self.mode == "teleop_record"
        self.samples: list[SamplePair] = []
        self.last_control: tuple[float, float] | None = None  # (steering, throttle)

    @property
    def world(self):
        return self.engine.world

    def apply_control(self, steering: float, throttle: float) -> None:
        steering = min(max(float(steering), -MAX_STEERING), MAX_STEERING)
        throttle = min(max(float(throttle), 0.0), 1.0)
        self.last_control = (steering, throttle)

    def external_command(self) -> tuple[float, float] | None:
        if self.last_control is None:
            return None
        steering, throttle = self.last_control
        omega = steering_to_omega(steering, self.world.ego.speed,
                                  self.world.cfg.wheelbase_m, self.world.cfg.omega_max)
        return omega, throttle * self.world.cfg.v_max

    def tick(self) -> dict:
        human_active = self.mode == "teleop_record" or self.engine.takeover_active
        record = self.engine.tick(self.external_command() if human_active else None)
        if self.recording and self.mode == "teleop_record":
            steering = self.last_control[0] if self.last_control else 0.0
            self.samples.append(SamplePair(
                timestamp_us=(self.engine.tick_index - 1) * TICK_US,
                frame=self.engine.last_frame,
                steering=steering,
                speed=self.world.ego.speed,
            ))
        return record

    def telemetry(self, record: dict) -> dict:
        return {
            "kind": "telemetry",
            "tick": record["tick"],
            "t": record["t"],
            "pose": {"x": record["x"], "y": record["y"], "heading": record["heading"]},
            "speed": record["speed"],
            "lane": record["lane"],
            "mode": record["mode"],
            "source": record["source"],
            "zones": {"left": record["zones"][0], "center": record["zones"][1],
                      "right": record["zones"][2]},
            "zone_clear_m": self.world.cfg.sensor_range_m,
            "autonomy_pct": self.engine.autonomy_so_far(),
            "interventions": len(self.engine.log.interventions),
            "recording": self.recording,
            "collision": self.world.collision,
            "session_mode": self.mode,
            "obstacles": [{"x": o.pose.x, "y": o.pose.y, "radius": o.radius}
                          for o in self.world.obstacles],
        }

    def frame_message(self, record: dict) -> dict:
        frame = self.engine.last_frame
        h, w = frame.shape
        pgm = f"P5\n{w} {h}\n255\n".encode() + frame.tobytes()
        return {"kind": "frame", "tick": record["tick"],
                "pgm_base64": base64.b64encode(pgm).decode("ascii")}

    def save_artifacts(self, data_dir: Path) -> dict:
        saved = {}
        if self.samples:
            ds_dir = data_dir / "datasets" / self.run_id
            manifest = DatasetManifest(
                samples=self.samples, frame_height=self.world.cfg.frame_height,
                frame_width=self.world.cfg.frame_width, provenance="ingested", seed=0)
            manifest.save(ds_dir)
            saved["dataset"] = str(ds_dir)
        if self.engine.log.ticks:
            run_dir = data_dir / "runs" / self.run_id
            run_dir.mkdir(parents=True, exist_ok=True)
            save_log(self.engine.log, run_dir / "run.jsonl")
            with open(run_dir / "report.json", "w") as f:
                json.dump(self.engine.log.report().to_dict(), f, indent=2, sort_keys=True)
                f.write("\n")
            saved["run"] = str(run_dir)
        return saved


class Service:
    def __init__(self, cfg: ServiceConfig):
        self.cfg = cfg
        self.data_dir = cfg.resolve_data_dir()
        self.clients: list[Client] = []
        self.inbox: asyncio.Queue = asyncio.Queue()
        self.run_counter = 0
        self.session = self._new_session(cfg.mode, cfg.scenario, cfg.model_path)
        self._loop_task: asyncio.Task | None = None
        self._stopping = False

    def _new_session(self, mode: str, scenario: dict, model_path: str | None) -> Session:
        self.run_counter += 1
        cfg = ServiceConfig(scenario=scenario, model_path=model_path, mode=mode,
                            time_scale=self.cfg.time_scale, data_dir=self.cfg.data_dir)
        return Session(cfg, run_id=f"run-{self.run_counter:04d}")

    @property
    def authority(self) -> Client | None:
        return self.clients[0] if self.clients else None

    def broadcast(self, message: dict, droppable: bool = False,
                  personalize_authority: bool = False) -> None:
        for client in self.clients:
            if personalize_authority:
                msg = dict(message)
                msg["you_have_authority"] = client is self.authority
                client.offer(json.dumps(msg), droppable)
            else:
                client.offer(json.dumps(message), droppable)

    def send_error(self, client: Client, tick: int, text: str) -> None:
        client.offer(json.dumps({"kind": "error", "tick": tick, "message": text}),
                     droppable=False)

    def _handle_client_message(self, client: Client, msg: dict) -> None:
        kind = msg.get("kind")
        tick = self.session.engine.tick_index
        if kind not in CLIENT_KINDS:
            self.send_error(client, tick, f"unknown message kind {kind!r}")
            return
        if client is not self.authority:
            self.send_error(client, tick, "you do not hold control authority")
            return
        session = self.session
        if kind == "control":
            session.apply_control(msg.get("steering", 0.0), msg.get("throttle", 0.0))
        elif kind == "takeover_begin":
            if session.mode != "autonomous_eval":
                self.send_error(client, tick, "takeover only applies to autonomous_eval")
            elif not session.engine.takeover_active:
                session.engine.begin_takeover()
        elif kind == "takeover_end":
            if session.engine.takeover_active:
                session.engine.end_takeover()
        elif kind == "record_begin":
            session.recording = True
        elif kind == "record_end":
            session.recording = False

    async def tick_loop(self) -> None:
        loop = asyncio.get_running_loop()
        tick_wall = self.session.world.cfg.decision_dt / self.cfg.time_scale
        next_t = loop.time()
        while not self._stopping:
            while not self.inbox.empty():
                client, msg = self.inbox.get_nowait()
                self._handle_client_message(client, msg)
            record = self.session.tick()
            self.broadcast(self.session.telemetry(record), droppable=False,
                           personalize_authority=True)
            self.broadcast(self.session.frame_message(record), droppable=True)
            next_t += tick_wall
            delay = next_t - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_t = loop.time()  # fell behind; do not bunch ticks
                await asyncio.sleep(0)  # still yield to the event loop

    async def switch_session(self, mode: str, scenario: dict | None,
                             model_path: str | None) -> dict:
        saved = self.session.save_artifacts(self.data_dir)
        self.session = self._new_session(
            mode, scenario or self.cfg.scenario, model_path or self.cfg.model_path)
        return {"run_id": self.session.run_id, "mode": mode, "previous": saved}

    async def shutdown(self) -> None:
        self._stopping = True
        if self._loop_task:
            self._loop_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await self._loop_task
        self.session.save_artifacts(self.data_dir)


async def _client_sender(client: Client) -> None:
    while True:
        text = await client.queue.get()
        await client.ws.send_str(text)


async def ws_handler(request: web.Request) -> web.WebSocketResponse:
    service: Service = request.app[SERVICE_KEY]
    ws = web.WebSocketResponse(heartbeat=30)
    await ws.prepare(request)
    client = Client(ws)
    service.clients.append(client)
    sender = asyncio.create_task(_client_sender(client))
    try:
        async for msg in ws:
            if msg.type == WSMsgType.TEXT:
                try:
                    payload = json.loads(msg.data)
                except json.JSONDecodeError:
                    service.send_error(client, service.session.engine.tick_index,
                                       "malformed JSON")
                    continue
                service.inbox.put_nowait((client, payload))
            elif msg.type == WSMsgType.ERROR:
                break
    finally:
        sender.cancel()
        with contextlib.suppress(asyncio.CancelledError):
            await sender
        if client in service.clients:
            service.clients.remove(client)
    return ws


async def status_handler(request: web.Request) -> web.Response:
    service: Service = request.app[SERVICE_KEY]
    session = service.session
    return web.json_response({
        "mode": session.mode,
        "run_id": session.run_id,
        "tick": session.engine.tick_index,
        "sim_time_s": session.engine.sim_time,
        "clients": len(service.clients),
        "autonomy_pct": session.engine.autonomy_so_far(),
        "interventions": len(session.engine.log.interventions),
        "recording": session.recording,
        "scenario": session.engine.log.scenario_name,
    })


async def track_handler(request: web.Request) -> web.Response:
    service: Service = request.app[SERVICE_KEY]
    track = service.session.world.track
    return web.json_response({
        "points": [[float(x), float(y)] for x, y in track.centerline.points],
        "lane_width": track.lane_width,
        "lane_count": track.lane_count,
        "length": track.length,
        "closed": track.closed,
    })


async def models_handler(request: web.Request) -> web.Response:
    service: Service = request.app[SERVICE_KEY]
    models_dir = service.data_dir / "models"
    names = sorted(p.name for p in models_dir.glob("*.strn")) if models_dir.is_dir() else []
    return web.json_response({"models": names})


async def run_report_handler(request: web.Request) -> web.Response:
    service: Service = request.app[SERVICE_KEY]
    run_id = request.match_info["run_id"]
    path = service.data_dir / "runs" / run_id / "report.json"
    if run_id == service.session.run_id:
        return web.json_response(service.session.engine.log.report().to_dict())
    if not path.exists():
        raise web.HTTPNotFound(text=f"no report for run {run_id}")
    return web.json_response(json.loads(path.read_text()))


async def session_handler(request: web.Request) -> web.Response:
    service: Service = request.app[SERVICE_KEY]
    body = await request.json()
    mode = body.get("mode")
    if mode not in ("teleop_record", "autonomous_eval"):
        raise web.HTTPBadRequest(text=f"bad mode {mode!r}")
    scenario = body.get("scenario")
    if isinstance(scenario, str):
        from ..simworld.world import builtin_scenario
        scenario = builtin_scenario(scenario)
    try:
        info = await service.switch_session(mode, scenario, body.get("model"))
    except (ValueError, OSError) as e:
        raise web.HTTPBadRequest(text=str(e))
    return web.json_response(info)


def create_app(cfg: ServiceConfig) -> web.Application:
    app = web.Application()
    service = Service(cfg)
    app[SERVICE_KEY] = service
    app.router.add_get("/api/status", status_handler)
    app.router.add_get("/api/track", track_handler)
    app.router.add_get("/api/models", models_handler)
    app.router.add_get("/api/runs/{run_id}/report", run_report_handler)
    app.router.add_post("/api/session", session_handler)
    app.router.add_get("/ws", ws_handler)

    frontend = Path(__file__).resolve().parents[3] / "frontend" / "dist"
    if frontend.is_dir():
        async def index(_request):
            return web.FileResponse(frontend / "index.html")
        app.router.add_get("/", index)
        app.router.add_static("/assets", frontend / "assets")

    async def start_loop(app):
        service._loop_task = asyncio.create_task(service.tick_loop())

    async def stop_loop(app):
        await service.shutdown()

    app.on_startup.append(start_loop)
    app.on_cleanup.append(stop_loop)
    return app


def run_server(cfg: ServiceConfig) -> None:
    app = create_app(cfg)
    print(f"lanepilot service on http://{cfg.host}:{cfg.port} "
          f"(mode {cfg.mode}, x{cfg.time_scale} pace)")
    web.run_app(app, host=cfg.host, port=cfg.port, print=None)
