"""Command-line front door for the whole pipeline.

Subcommands: gen-data, train, eval, replay, serve. Everything accepts
--seed/--profile/--scenario/--out where meaningful; exit status is 0 on
success, nonzero with a message otherwise.
"""

import argparse
import json
import sys
from pathlib import Path

from .. import nncore
from ..dataset import AugmentSpec, generate_synthetic, load_manifest, split_80_20
from ..evalrun import run_episode, save_log, verify_log
from ..simworld.world import build_world, builtin_scenario, load_scenario


def _load_scenario_arg(ref: str) -> dict:
    if ref.endswith(".json") or "/" in ref:
        doc = load_scenario(ref)
    else:
        doc = builtin_scenario(ref)
    doc.setdefault("name", ref)
    return doc


def cmd_gen_data(args) -> int:
    scenario = _load_scenario_arg(args.scenario)
    world = build_world(scenario)
    augment = AugmentSpec() if args.augment else AugmentSpec((), ())
    manifest = generate_synthetic(world, args.frames, augment, seed=args.seed,
                                  lane=args.lane, out_dir=args.out)
    print(f"wrote {len(manifest)} samples "
          f"({args.frames} base x {1 + augment.count()}) to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = nncore.NetConfig.from_profile(args.profile, seed=args.seed)
    if args.data:
        manifest = load_manifest(args.data)
    else:
        scenario = _load_scenario_arg(args.scenario)
        world = build_world(scenario)
        if (world.cfg.frame_height, world.cfg.frame_width) != (cfg.input_height,
                                                               cfg.input_width):
            print(f"error: scenario frames {world.cfg.frame_height}x{world.cfg.frame_width} "
                  f"do not match the {args.profile} profile input", file=sys.stderr)
            return 2
        print(f"generating synthetic dataset ({args.frames} base frames)...")
        manifest = generate_synthetic(world, args.frames, AugmentSpec(), seed=args.seed)
    train_m, val_m = split_80_20(manifest, seed=args.seed)
    x_train, y_train = train_m.load_arrays()
    x_val, y_val = val_m.load_arrays()

    net = nncore.init_network(cfg)
    tcfg = nncore.TrainConfig(batch_size=args.batch, epochs=args.epochs,
                              learning_rate=args.lr, seed=args.seed)
    print(f"training {args.profile} network ({net.parameter_count()} parameters) "
          f"on {len(x_train)}/{len(x_val)} train/val samples...")
    net, curve = nncore.train(net, (x_train, y_train), (x_val, y_val), tcfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    nncore.save_model(net, out, training_meta={
        "epochs": tcfg.epochs, "batch_size": tcfg.batch_size,
        "learning_rate": tcfg.learning_rate, "seed": tcfg.seed,
        "final_train_mse": curve.rows[-1][1], "final_val_mse": curve.final_val(),
    })
    csv_path = args.loss_csv or str(out) + ".loss.csv"
    nncore.write_loss_csv(curve, csv_path)
    print(f"initial val MSE {curve.initial_val():.6f} -> final {curve.final_val():.6f}")
    print(f"model: {out}\nloss curve: {csv_path}")
    return 0


def cmd_eval(args) -> int:
    net = nncore.load_model(args.model)
    scenario = _load_scenario_arg(args.scenario)
    log = run_episode(scenario, net, mode="oracle",
                      duration_s=args.duration, seed=args.seed)
    report = log.report()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    digest = save_log(log, out / "run.jsonl")
    with open(out / "report.json", "w") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"autonomy {report.autonomy_pct:.2f}% "
          f"({report.interventions} interventions over {report.elapsed_s:.1f} s, "
          f"{report.distance_m:.1f} m, {report.collisions} collisions)")
    print(f"log digest {digest}")
    return 0


def cmd_replay(args) -> int:
    ok = verify_log(args.log)
    if args.expect:
        from ..evalrun import load_log, replay_hash
        log, _ = load_log(args.log)
        ok = ok and replay_hash(log) == args.expect
    print(f"{args.log}: {'verified' if ok else 'DIGEST MISMATCH'}")
    return 0 if ok else 1


def cmd_serve(args) -> int:
    from .server import ServiceConfig, run_server
    cfg = ServiceConfig(
        scenario=_load_scenario_arg(args.scenario),
        model_path=args.model,
        mode=args.mode,
        host=args.host,
        port=args.port,
        time_scale=args.time_scale,
        data_dir=args.data_dir,
    )
    run_server(cfg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lanepilot")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate a synthetic dataset")
    g.add_argument("--scenario", default="tiny-train")
    g.add_argument("--frames", type=int, default=500)
    g.add_argument("--lane", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--no-augment", dest="augment", action="store_false")
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_gen_data)

    t = sub.add_parser("train", help="train a steering network")
    t.add_argument("--profile", default="tiny", choices=["tiny", "full"])
    t.add_argument("--data", help="dataset directory (default: generate synthetic)")
    t.add_argument("--scenario", default="tiny-train")
    t.add_argument("--frames", type=int, default=500)
    t.add_argument("--epochs", type=int, default=30)
    t.add_argument("--batch", type=int, default=100)
    t.add_argument("--lr", type=float, default=None)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", default="model.strn")
    t.add_argument("--loss-csv")
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("eval", help="closed-loop evaluation with oracle interventions")
    e.add_argument("--model", required=True)
    e.add_argument("--scenario", default="eval-curves")
    e.add_argument("--duration", type=float, default=300.0)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", default="run-out")
    e.set_defaults(fn=cmd_eval)

    r = sub.add_parser("replay", help="verify a run log digest")
    r.add_argument("--verify", dest="log", required=True)
    r.add_argument("--expect", help="additionally require this digest value")
    r.set_defaults(fn=cmd_replay)

    s = sub.add_parser("serve", help="run the telemetry/teleop service")
    s.add_argument("--scenario", default="straight-empty")
    s.add_argument("--model")
    s.add_argument("--mode", default="teleop_record",
                   choices=["teleop_record", "autonomous_eval"])
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8750)
    s.add_argument("--time-scale", type=float, default=1.0)
    s.add_argument("--data-dir")
    s.set_defaults(fn=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "lr", None) is None and args.command == "train":
        args.lr = 0.3 if args.profile == "tiny" else 1e-3
    try:
        return args.fn(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
