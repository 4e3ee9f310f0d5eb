"""Headless service tests: HTTP endpoints and the WebSocket protocol,
driven through aiohttp's test utilities at an accelerated tick pace."""

import asyncio
import base64
import json

import pytest
from aiohttp.test_utils import TestClient, TestServer

from lanepilot.dataset import load_manifest
from lanepilot.nncore import NetConfig, init_network, save_model
from lanepilot.service.server import SERVICE_KEY, ServiceConfig, create_app
from lanepilot.simworld.world import builtin_scenario

TIME_SCALE = 200.0


def run(coro):
    return asyncio.run(coro)


def teleop_config(tmp_path, **kw):
    return ServiceConfig(scenario=builtin_scenario("straight-empty"),
                         mode="teleop_record", time_scale=TIME_SCALE,
                         data_dir=str(tmp_path / "data"), **kw)


def eval_config(tmp_path):
    model = tmp_path / "data" / "models" / "tiny.strn"
    model.parent.mkdir(parents=True, exist_ok=True)
    save_model(init_network(NetConfig.from_profile("tiny", seed=0)), model)
    return ServiceConfig(scenario=builtin_scenario("straight-empty"),
                         mode="autonomous_eval", model_path=str(model),
                         time_scale=TIME_SCALE, data_dir=str(tmp_path / "data"))


async def recv_kind(ws, kind, limit=600):
    for _ in range(limit):
        msg = json.loads((await asyncio.wait_for(ws.receive(), 10)).data)
        if msg["kind"] == kind:
            return msg
    raise AssertionError(f"no {kind} message within {limit} messages")


async def telemetry_at_or_after(ws, tick):
    while True:
        msg = await recv_kind(ws, "telemetry")
        if msg["tick"] >= tick:
            return msg


class TestHttp:
    def test_status(self, tmp_path):
        async def impl():
            app = create_app(teleop_config(tmp_path))
            async with TestClient(TestServer(app)) as client:
                resp = await client.get("/api/status")
                assert resp.status == 200
                body = await resp.json()
                assert body["mode"] == "teleop_record"
                assert body["recording"] is True
                assert body["clients"] == 0
        run(impl())

    def test_models_listing(self, tmp_path):
        async def impl():
            cfg = teleop_config(tmp_path)
            models = tmp_path / "data" / "models"
            models.mkdir(parents=True)
            save_model(init_network(NetConfig.from_profile("tiny", seed=1)),
                       models / "a.strn")
            app = create_app(cfg)
            async with TestClient(TestServer(app)) as client:
                body = await (await client.get("/api/models")).json()
                assert body["models"] == ["a.strn"]
        run(impl())

    def test_current_run_report(self, tmp_path):
        async def impl():
            app = create_app(teleop_config(tmp_path))
            async with TestClient(TestServer(app)) as client:
                status = await (await client.get("/api/status")).json()
                await asyncio.sleep(0.3)  # let some ticks elapse
                resp = await client.get(f"/api/runs/{status['run_id']}/report")
                assert resp.status == 200
                body = await resp.json()
                assert body["autonomy_pct"] == 100.0
            resp_404 = True
        run(impl())

    def test_track_endpoint(self, tmp_path):
        async def impl():
            app = create_app(teleop_config(tmp_path))
            async with TestClient(TestServer(app)) as client:
                body = await (await client.get("/api/track")).json()
                assert body["lane_count"] == 3
                assert body["lane_width"] == 1.0
                assert len(body["points"]) >= 2
                assert body["closed"] is False
        run(impl())

    def test_unknown_run_is_404(self, tmp_path):
        async def impl():
            app = create_app(teleop_config(tmp_path))
            async with TestClient(TestServer(app)) as client:
                resp = await client.get("/api/runs/run-9999/report")
                assert resp.status == 404
        run(impl())

    def test_session_switch_saves_previous(self, tmp_path):
        async def impl():
            cfg = teleop_config(tmp_path)
            app = create_app(cfg)
            async with TestClient(TestServer(app)) as client:
                ws = await client.ws_connect("/ws")
                await ws.send_str(json.dumps({"kind": "control",
                                              "steering": 0.1, "throttle": 0.5}))
                await telemetry_at_or_after(ws, 10)
                resp = await client.post("/api/session", json={"mode": "teleop_record"})
                assert resp.status == 200
                info = await resp.json()
                assert "dataset" in info["previous"]
                manifest = load_manifest(info["previous"]["dataset"])
                assert len(manifest) >= 10
                await ws.close()
        run(impl())

    def test_session_switch_to_eval_requires_model(self, tmp_path):
        async def impl():
            app = create_app(teleop_config(tmp_path))
            async with TestClient(TestServer(app)) as client:
                resp = await client.post("/api/session", json={"mode": "autonomous_eval"})
                assert resp.status == 400
        run(impl())


class TestTeleop:
    def test_control_drives_vehicle_and_records(self, tmp_path):
        async def impl():
            app = create_app(teleop_config(tmp_path))
            service = app[SERVICE_KEY]
            async with TestClient(TestServer(app)) as client:
                ws = await client.ws_connect("/ws")
                await ws.send_str(json.dumps({"kind": "control",
                                              "steering": 0.1, "throttle": 0.3}))
                t = await telemetry_at_or_after(ws, 20)
                assert t["speed"] == pytest.approx(0.3 * 30.0 / 3.6, rel=1e-6)
                assert t["source"] == "teleop"
                pairs = service.session.samples
                assert len(pairs) >= 20
                recorded = {p.steering for p in pairs[12:]}
                assert recorded == {0.1}
                await ws.close()
        run(impl())

    def test_zero_order_hold(self, tmp_path):
        async def impl():
            app = create_app(teleop_config(tmp_path))
            async with TestClient(TestServer(app)) as client:
                ws = await client.ws_connect("/ws")
                await ws.send_str(json.dumps({"kind": "control",
                                              "steering": 0.0, "throttle": 0.5}))
                want = 0.5 * 30.0 / 3.6
                first = await recv_kind(ws, "telemetry")
                while abs(first["speed"] - want) > 1e-6:  # command absorbed
                    first = await recv_kind(ws, "telemetry")
                later = await telemetry_at_or_after(ws, first["tick"] + 30)
                assert later["speed"] == pytest.approx(want)  # held, no further input
                await ws.close()
        run(impl())

    def test_telemetry_cadence_exact(self, tmp_path):
        async def impl():
            app = create_app(teleop_config(tmp_path))
            async with TestClient(TestServer(app)) as client:
                ws = await client.ws_connect("/ws")
                ticks = []
                while len(ticks) < 12:
                    msg = await recv_kind(ws, "telemetry")
                    ticks.append((msg["tick"], msg["t"]))
                for (t0, s0), (t1, s1) in zip(ticks, ticks[1:]):
                    assert t1 == t0 + 1  # no gaps for a fast client
                    assert s1 - s0 == pytest.approx(0.1, abs=1e-9)
                await ws.close()
        run(impl())

    def test_frame_messages_decode_to_pgm(self, tmp_path):
        async def impl():
            app = create_app(teleop_config(tmp_path))
            async with TestClient(TestServer(app)) as client:
                ws = await client.ws_connect("/ws")
                msg = await recv_kind(ws, "frame")
                blob = base64.b64decode(msg["pgm_base64"])
                assert blob.startswith(b"P5\n64 32\n255\n")
                assert len(blob) == len(b"P5\n64 32\n255\n") + 64 * 32
                await ws.close()
        run(impl())

    def test_record_end_stops_recording(self, tmp_path):
        async def impl():
            app = create_app(teleop_config(tmp_path))
            service = app[SERVICE_KEY]
            async with TestClient(TestServer(app)) as client:
                ws = await client.ws_connect("/ws")
                await telemetry_at_or_after(ws, 5)
                await ws.send_str(json.dumps({"kind": "record_end"}))
                t = await recv_kind(ws, "telemetry")
                while t["recording"]:
                    t = await recv_kind(ws, "telemetry")
                count = len(service.session.samples)
                start = service.session.engine.tick_index
                while service.session.engine.tick_index < start + 20:
                    await asyncio.sleep(0.01)
                assert len(service.session.samples) == count
                await ws.close()
        run(impl())

    def test_second_client_lacks_authority(self, tmp_path):
        async def impl():
            app = create_app(teleop_config(tmp_path))
            service = app[SERVICE_KEY]
            async with TestClient(TestServer(app)) as client:
                ws1 = await client.ws_connect("/ws")
                ws2 = await client.ws_connect("/ws")
                await ws2.send_str(json.dumps({"kind": "control",
                                               "steering": 0.3, "throttle": 1.0}))
                err = await recv_kind(ws2, "error")
                assert "authority" in err["message"]
                t1 = await recv_kind(ws1, "telemetry")
                assert t1["you_have_authority"] is True
                t2 = await recv_kind(ws2, "telemetry")
                assert t2["you_have_authority"] is False
                # the rejected command must not drive the vehicle
                assert service.session.last_control is None
                await ws1.close()
                await ws2.close()
        run(impl())

    def test_session_duration_yields_ten_pairs_per_second(self, tmp_path):
        async def impl():
            app = create_app(teleop_config(tmp_path))
            service = app[SERVICE_KEY]
            async with TestClient(TestServer(app)) as client:
                ws = await client.ws_connect("/ws")
                await ws.send_str(json.dumps({"kind": "control",
                                              "steering": 0.05, "throttle": 0.4}))
                target_ticks = 50  # 5 simulated seconds
                await telemetry_at_or_after(ws, target_ticks)
                n = len(service.session.samples)
                sim_seconds = service.session.engine.tick_index / 10.0
                assert abs(n - 10 * sim_seconds) <= 1
                await ws.close()
        run(impl())


class TestEvalMode:
    def test_takeover_creates_intervention_and_drops_autonomy(self, tmp_path):
        async def impl():
            app = create_app(eval_config(tmp_path))
            service = app[SERVICE_KEY]
            async with TestClient(TestServer(app)) as client:
                ws = await client.ws_connect("/ws")
                await telemetry_at_or_after(ws, 5)
                await ws.send_str(json.dumps({"kind": "takeover_begin"}))
                await ws.send_str(json.dumps({"kind": "control",
                                              "steering": 0.0, "throttle": 0.2}))
                t = await telemetry_at_or_after(ws, 20)
                assert t["interventions"] == 1
                elapsed = t["t"] + 0.1
                want = (1.0 - 5.0 / elapsed) * 100.0
                assert t["autonomy_pct"] == pytest.approx(want, abs=0.5)
                await ws.send_str(json.dumps({"kind": "takeover_end"}))
                t2 = await telemetry_at_or_after(ws, t["tick"] + 10)
                assert t2["interventions"] == 1  # end does not add a record
                rec = service.session.engine.log.interventions[0]
                assert rec.source == "human"
                assert rec.duration_s == 5.0
                assert rec.actual_span_s is not None
                await ws.close()
        run(impl())

    def test_takeover_edge_triggered(self, tmp_path):
        async def impl():
            app = create_app(eval_config(tmp_path))
            service = app[SERVICE_KEY]
            async with TestClient(TestServer(app)) as client:
                ws = await client.ws_connect("/ws")
                await telemetry_at_or_after(ws, 3)
                for _ in range(3):  # repeated begins while active: one record
                    await ws.send_str(json.dumps({"kind": "takeover_begin"}))
                await telemetry_at_or_after(ws, 12)
                assert len(service.session.engine.log.interventions) == 1
                await ws.close()
        run(impl())

    def test_network_drives_between_takeovers(self, tmp_path):
        async def impl():
            app = create_app(eval_config(tmp_path))
            async with TestClient(TestServer(app)) as client:
                ws = await client.ws_connect("/ws")
                t = await telemetry_at_or_after(ws, 5)
                assert t["source"] == "stack"
                assert t["mode"] in ("cnn_follow", "speed_match", "stopped",
                                     "lane_change_left", "lane_change_right")
                await ws.close()
        run(impl())

    def test_takeover_in_teleop_mode_is_error(self, tmp_path):
        async def impl():
            app = create_app(teleop_config(tmp_path))
            async with TestClient(TestServer(app)) as client:
                ws = await client.ws_connect("/ws")
                await ws.send_str(json.dumps({"kind": "takeover_begin"}))
                err = await recv_kind(ws, "error")
                assert "autonomous_eval" in err["message"]
                await ws.close()
        run(impl())
