"""Command-line front end for training, testing, and parameter sweeps.

Examples:
    vecfed --mode train --scheme fgnn --seed 3 --out results/fgnn3
    vecfed --mode test --model results/fgnn3/model.npz --out results/fgnn3
    vecfed --mode sweep --sweep-axis lambda --sweep-values 0.0625,0.125,0.25 \
           --scheme fgnn --out results/sweep
"""

from __future__ import annotations

import argparse
import sys

from . import harness, scenario


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vecfed", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config", metavar="PATH",
                   help="flat key = value config file; defaults to the desk profile")
    p.add_argument("--full-scale", action="store_true",
                   help="start from the full-scale defaults instead of the desk profile")
    p.add_argument("--scheme", choices=harness.SCHEMES, default="fgnn")
    p.add_argument("--seed", type=int, default=0, metavar="N")
    p.add_argument("--slots", type=int, metavar="N",
                   help="override the slot count of the selected mode")
    p.add_argument("--lg", type=float, metavar="METERS",
                   help="road-segment length override")
    p.add_argument("--lambda", dest="arrival_rate", type=float, metavar="RATE",
                   help="total vehicle arrival rate, split evenly over lanes")
    p.add_argument("--speed", type=float, metavar="MPS",
                   help="uniform lane speed override")
    p.add_argument("--out", metavar="DIR", default="results")
    p.add_argument("--mode", choices=("train", "test", "sweep"), default="train")
    p.add_argument("--model", metavar="PATH",
                   help="checkpoint to load (test) or save (train); "
                        "defaults to OUT/model.npz")
    p.add_argument("--sweep-axis", choices=("lambda", "speed"), default="lambda")
    p.add_argument("--sweep-values", metavar="LIST",
                   help="comma-separated axis values for sweep mode")
    p.add_argument("--seeds", metavar="LIST",
                   help="comma-separated seeds for sweep mode (default: --seed)")
    p.add_argument("--progress", type=int, default=0, metavar="N",
                   help="print a status line every N slots")
    return p


def _build_config(args) -> scenario.ScenarioConfig:
    base = scenario.ScenarioConfig() if args.full_scale else scenario.desk_config()
    cfg = scenario.load_config(args.config, base=base) if args.config else base
    if args.lg is not None:
        cfg.segment_len = args.lg
    if args.arrival_rate is not None:
        cfg = scenario.with_total_arrival_rate(cfg, args.arrival_rate)
    if args.speed is not None:
        cfg = scenario.with_uniform_speed(cfg, args.speed)
    if args.slots is not None:
        if args.mode == "test":
            cfg.test_slots = args.slots
        else:
            cfg.train_slots = args.slots
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _build_config(args)
        model_path = args.model or f"{args.out}/model.npz"
        if args.mode == "train":
            store, summary, records = harness.run_training(
                cfg, args.seed, args.scheme, progress_every=args.progress)
            paths = harness.emit_results(records, summary, args.out, prefix="train",
                                         slot_seconds=cfg.slot)
            if store is not None:
                harness.save_store(model_path, store)
                paths.append(model_path)
            print("\n".join(paths))
            print(f"train avg_aoi={summary.avg_aoi:.4f} avg_power={summary.avg_power:.3f} "
                  f"throughput={summary.throughput:.3e}")
        elif args.mode == "test":
            store = None
            if args.scheme in harness.SAC_SCHEMES:
                store = harness.load_store(model_path)
            summary, records = harness.run_test(cfg, args.seed, store, args.scheme)
            paths = harness.emit_results(records, summary, args.out, prefix="test")
            print("\n".join(paths))
            print(f"test avg_aoi={summary.avg_aoi:.4f} avg_power={summary.avg_power:.3f} "
                  f"throughput={summary.throughput:.3e}")
        else:
            if not args.sweep_values:
                raise scenario.ConfigError("sweep mode requires --sweep-values")
            values = [float(v) for v in args.sweep_values.split(",") if v.strip()]
            seeds = ([int(s) for s in args.seeds.split(",") if s.strip()]
                     if args.seeds else [args.seed])
            rows = harness.sweep(cfg, args.sweep_axis, values, [args.scheme], seeds,
                                 out_dir=args.out, progress_every=args.progress)
            print(f"wrote {len(rows)} sweep rows to {args.out}/sweep.csv")
        return 0
    except scenario.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
