"""Acceptance suite: one test per release criterion, each printing a
pass/fail line (run with `pytest -s tests/test_acceptance.py -v`).

Criteria and tolerances are pinned here; nothing is deferred to later
calibration. The suite is fully headless and independent of the browser
frontend.
"""

import math
import time

import numpy as np
import pytest

from lanepilot.avoidance import ControllerMode, Mode, ObstacleEstimate, Thresholds, decide
from lanepilot.dataset import pair_by_timestamp, split_80_20
from lanepilot.evalrun import compute_autonomy, load_log, replay_hash, run_episode
from lanepilot.nncore import (
    ConvLayer,
    DenseLayer,
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
    mse_loss,
    write_loss_csv,
)
from lanepilot.simworld import VehicleState, ZoneReadings
from lanepilot.simworld.track import straight_track

from oracles import (
    conv2d_direct,
    decision_truth_table,
    finite_difference_gradient,
    max_relative_error,
)
from test_dataset import flat_manifest
from test_golden import GOLDEN_DIGEST, GOLDEN_PATH


def report(name: str, detail: str = ""):
    print(f"\n[PASS] {name}" + (f" -- {detail}" if detail else ""))


class TestAcceptance:
    def test_gradient_correctness(self):
        """All layer gradients match 64-bit central finite differences
        within relative error 1e-4, 20+ random instances per layer type."""
        t0 = time.perf_counter()
        worst = 0.0
        checked = 0
        for i in range(20):
            rng = np.random.Generator(np.random.PCG64(1000 + i))

            # conv: input, kernels, bias
            c_in, c_out = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            k, stride = (3, 1) if i % 2 else (5, 2)
            h, w = int(rng.integers(k, k + 4)), int(rng.integers(k, k + 4))
            x = rng.uniform(-1, 1, size=(c_in, h, w))
            layer = ConvLayer(rng.uniform(-1, 1, size=(c_out, c_in, k, k)),
                              rng.uniform(-1, 1, size=c_out), stride)
            proj = rng.uniform(-1, 1, size=conv2d_forward(x, layer).shape)
            gi, gk, gb = conv2d_backward(x, layer, proj)
            for got, val, fn in (
                (gi, x, lambda v: float(np.sum(conv2d_forward(v, layer) * proj))),
                (gk, layer.kernels, lambda v: float(np.sum(
                    conv2d_forward(x, ConvLayer(v, layer.bias, layer.stride)) * proj))),
                (gb, layer.bias, lambda v: float(np.sum(
                    conv2d_forward(x, ConvLayer(layer.kernels, v, layer.stride)) * proj))),
            ):
                err = max_relative_error(got, finite_difference_gradient(fn, val))
                assert err < 1e-4
                worst = max(worst, err)
                checked += 1

            # dense: input, weights, bias
            n_in, n_out = int(rng.integers(1, 8)), int(rng.integers(1, 6))
            xd = rng.uniform(-1, 1, size=n_in)
            dl = DenseLayer(rng.uniform(-1, 1, size=(n_out, n_in)),
                            rng.uniform(-1, 1, size=n_out))
            pd = rng.uniform(-1, 1, size=n_out)
            gi, gw, gb = dense_backward(xd, dl, pd)
            for got, val, fn in (
                (gi, xd, lambda v: float(np.sum(dense_forward(v, dl) * pd))),
                (gw, dl.weights, lambda v: float(np.sum(
                    dense_forward(xd, DenseLayer(v, dl.bias)) * pd))),
                (gb, dl.bias, lambda v: float(np.sum(
                    dense_forward(xd, DenseLayer(dl.weights, v)) * pd))),
            ):
                err = max_relative_error(got, finite_difference_gradient(fn, val))
                assert err < 1e-4
                worst = max(worst, err)
                checked += 1

            # loss
            n = int(rng.integers(1, 12))
            pred = rng.uniform(-1, 1, size=n)
            target = rng.uniform(-1, 1, size=n)
            _, grad = mse_loss(pred, target)
            err = max_relative_error(
                grad, finite_difference_gradient(lambda v: mse_loss(v, target)[0], pred))
            assert err < 1e-4
            worst = max(worst, err)
            checked += 1

        elapsed = time.perf_counter() - t0
        assert elapsed < 30.0
        report("gradient correctness",
               f"{checked} gradient tensors, worst rel err {worst:.2e}, {elapsed:.1f}s")

    def test_convolution_oracle_equivalence(self):
        """conv2d_forward matches the nested-loop oracle within 1e-6,
        including both production layer configs."""
        t0 = time.perf_counter()
        cases = [(1, 24, 10, 14, 5, 2), (24, 36, 8, 8, 5, 2), (16, 16, 6, 9, 3, 1)]
        rng = np.random.Generator(np.random.PCG64(77))
        for _ in range(12):
            k, stride = (5, 2) if rng.random() < 0.5 else (3, 1)
            cases.append((int(rng.integers(1, 5)), int(rng.integers(1, 5)),
                          int(rng.integers(k, k + 6)), int(rng.integers(k, k + 6)),
                          k, stride))
        worst = 0.0
        for c_in, c_out, h, w, k, stride in cases:
            x = rng.uniform(-1, 1, size=(c_in, h, w))
            layer = ConvLayer(rng.uniform(-1, 1, size=(c_out, c_in, k, k)),
                              rng.uniform(-1, 1, size=c_out), stride)
            got = conv2d_forward(x, layer)
            want = conv2d_direct(x, layer.kernels, layer.bias, layer.stride)
            err = float(np.max(np.abs(got - want)))
            assert err <= 1e-6
            worst = max(worst, err)
            # production float32 path: same agreement up to float32 rounding
            layer32 = ConvLayer(layer.kernels.astype(np.float32),
                                layer.bias.astype(np.float32), stride)
            got32 = conv2d_forward(x.astype(np.float32), layer32)
            np.testing.assert_allclose(got32, want, atol=1e-4, rtol=1e-5)
        elapsed = time.perf_counter() - t0
        assert elapsed < 10.0
        report("convolution oracle equivalence",
               f"{len(cases)} shapes incl. 5x5/s2 and 3x3/s1, worst abs err {worst:.2e}, "
               f"{elapsed:.1f}s")

    def test_training_descent(self, tiny_dataset, trained_tiny, tmp_path):
        """30 epochs at batch 100 on the 500x9 synthetic set cut validation
        MSE to <= 10% of its pre-training value; loss CSV emitted."""
        assert len(tiny_dataset) >= 500 * 9
        net, curve, seconds = trained_tiny
        ratio = curve.final_val() / curve.initial_val()
        assert ratio <= 0.10
        assert seconds < 300.0
        csv_path = tmp_path / "loss.csv"
        write_loss_csv(curve, csv_path)
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "epoch,train_mse,val_mse"
        assert len(lines) == 1 + 31  # epochs 0..30
        report("training descent",
               f"val MSE {curve.initial_val():.5f} -> {curve.final_val():.5f} "
               f"(ratio {ratio:.4f}) in {seconds:.0f}s")

    def test_decision_tree_conformance(self):
        """decide agrees with the independent truth table on the exhaustive
        grid, reproduces the blocked-left scenario, and mirrors cleanly."""
        t0 = time.perf_counter()
        th = Thresholds()
        track = straight_track(200.0)
        distances = (5.0, 14.0, 19.0, 20.0, 21.0, 25.0, 30.0)
        cases = 0
        for center in distances:
            for left in distances:
                for right in distances:
                    for kind in ("none", "static", "moving"):
                        for lane in (1, 2, 3):
                            est = ObstacleEstimate(kind=kind, speed=1.0,
                                                   distance=min(center, 30.0), n_readings=5)
                            zones = ZoneReadings(left=left, center=center, right=right)
                            state = VehicleState(track.lane_pose(lane, 50.0), speed=2.0)
                            cmd, mode = decide(zones, est, ControllerMode(lane=lane),
                                               0.05, state, track, th, 2.0)
                            want_mode, want_omega, _ = decision_truth_table(
                                center, left, right, kind, lane)
                            assert mode.kind.value == want_mode
                            if want_omega is not None:
                                assert cmd.omega == pytest.approx(want_omega)
                            cases += 1
        assert cases >= 300

        # blocked-left scenario: obstacle at 14, left occupied within 20
        zones = ZoneReadings(left=10.0, center=14.0, right=30.0)
        est = ObstacleEstimate(kind="static", speed=0.0, distance=14.0, n_readings=5)
        state = VehicleState(track.lane_pose(2, 50.0), speed=2.0)
        cmd, mode = decide(zones, est, ControllerMode(lane=2), 0.0, state, track, th, 2.0)
        assert mode.kind is Mode.LANE_CHANGE_RIGHT
        assert cmd.omega == pytest.approx(-0.5)

        # mirror symmetry (tie-break cases exempt by design)
        mirror_lane = {1: 3, 2: 2, 3: 1}
        mirror_mode = {Mode.LANE_CHANGE_LEFT: Mode.LANE_CHANGE_RIGHT,
                       Mode.LANE_CHANGE_RIGHT: Mode.LANE_CHANGE_LEFT}
        mirrored = 0
        for center in distances:
            for left in distances:
                for right in distances:
                    for kind in ("none", "static", "moving"):
                        for lane in (1, 2, 3):
                            if lane == 2 and left >= th.lane_clear_m and \
                                    right >= th.lane_clear_m:
                                continue
                            est = ObstacleEstimate(kind=kind, speed=1.0,
                                                   distance=min(center, 30.0), n_readings=5)
                            a_cmd, a_mode = decide(
                                ZoneReadings(left, center, right), est,
                                ControllerMode(lane=lane), 0.0,
                                VehicleState(track.lane_pose(lane, 50.0), speed=2.0),
                                track, th, 2.0)
                            m_lane = mirror_lane[lane]
                            b_cmd, b_mode = decide(
                                ZoneReadings(right, center, left), est,
                                ControllerMode(lane=m_lane), 0.0,
                                VehicleState(track.lane_pose(m_lane, 50.0), speed=2.0),
                                track, th, 2.0)
                            assert b_mode.kind == mirror_mode.get(a_mode.kind, a_mode.kind)
                            if a_mode.kind in mirror_mode:
                                assert b_cmd.omega == pytest.approx(-a_cmd.omega)
                            mirrored += 1
        elapsed = time.perf_counter() - t0
        assert elapsed < 5.0
        report("decision-tree conformance",
               f"{cases} grid cases + {mirrored} mirror pairs, {elapsed:.1f}s")

    def test_autonomy_formula_exactness(self):
        """The intervention metric reproduces the published reference points."""
        for elapsed in (1.0, 60.0, 995.0, 1e6):
            assert compute_autonomy(0, elapsed) == 100.0
        assert compute_autonomy(2, 100.0) == pytest.approx(90.0, abs=1e-12)
        value = compute_autonomy(27, 995.0)
        assert value == pytest.approx(86.43, abs=0.005)
        report("autonomy formula exactness",
               f"(0,T)->100, (2,100)->90, (27,995)->{value:.4f}")

    def test_closed_loop_autonomy(self, trained_tiny):
        """Trained tiny model holds >= 80% autonomy over 300 simulated
        seconds on the held-out curve loop with oracle interventions."""
        net, _, _ = trained_tiny
        t0 = time.perf_counter()
        log = run_episode("eval-curves", net, mode="oracle", duration_s=300.0, seed=0)
        elapsed = time.perf_counter() - t0
        rep = log.report()
        assert rep.elapsed_s == pytest.approx(300.0)
        assert rep.autonomy_pct >= 80.0
        assert elapsed < 120.0
        report("closed-loop autonomy",
               f"{rep.autonomy_pct:.2f}% over {rep.elapsed_s:.0f}s "
               f"({rep.interventions} interventions, {rep.distance_m:.0f} m, "
               f"{elapsed:.0f}s wall)")

    def test_deterministic_replay(self, trained_tiny):
        """Identical (scenario, model, seed) give identical digests; the
        committed golden digest still verifies."""
        net, _, _ = trained_tiny
        a = run_episode("eval-curves", net, duration_s=20.0, seed=5)
        b = run_episode("eval-curves", net, duration_s=20.0, seed=5)
        da, db = replay_hash(a), replay_hash(b)
        assert da == db
        _, stored = load_log(GOLDEN_PATH)
        assert stored == GOLDEN_DIGEST
        from lanepilot.evalrun import verify_log
        assert verify_log(GOLDEN_PATH)
        report("deterministic replay", f"digest {da}; golden {GOLDEN_DIGEST} verified")

    def test_dataset_pipeline(self):
        """Split sizes exact by the floor rule; pairing respects max skew
        including the documented tie-break."""
        for n, want_train in ((5, 4), (10, 8), (33478, 26782)):
            train, val = split_80_20(flat_manifest(n), seed=0)
            assert len(train) == want_train
            assert len(val) == n - want_train
            assert len(train) == math.floor(0.8 * n)

        res = pair_by_timestamp([(1_000_000, "a")],
                                [(990_000, 0.1), (1_020_000, 0.2)], max_skew_us=20_000)
        assert res.pairs[0].steering == 0.1
        res = pair_by_timestamp([(1_000_000, "a")],
                                [(990_000, 0.1), (1_010_000, 0.2)], max_skew_us=50_000)
        assert res.pairs[0].steering == 0.1  # exact tie -> earlier record
        res = pair_by_timestamp([(0, "a"), (10_000_000, "b")], [(30_000, 0.3)],
                                max_skew_us=50_000)
        assert len(res.pairs) == 1 and res.dropped == 1
        for p in res.pairs:
            assert abs(p.timestamp_us - 30_000) <= 50_000
        report("dataset pipeline", "splits {5,10,33478} exact; skew + tie respected")
