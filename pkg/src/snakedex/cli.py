"""Command line entry point: ``snakedex {gen-scene,eval,optimize,report}``."""
import argparse
import logging
import sys

from .dexterity import EvalSettings
from .pipeline import PRESETS, SCENE_PRESETS, cmd_eval, cmd_gen_scene, cmd_optimize, cmd_report, replay_manifest

log = logging.getLogger("snakedex")


def _shared(p):
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--samples", type=int, default=100_000, help="Monte-Carlo configurations per evaluation")
    p.add_argument("--ntheta", type=int, default=18)
    p.add_argument("--nh", type=int, default=9)
    p.add_argument("--dilation", type=float, default=2.0, help="obstacle inflation radius in mm")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)


def _settings(args):
    if args.samples < 1:
        raise ValueError("--samples must be >= 1")
    return EvalSettings(sample_size=args.samples, n_theta=args.ntheta, n_h=args.nh, seed=args.seed,
                        dilation_radius=args.dilation)


def build_parser():
    parser = argparse.ArgumentParser(prog="snakedex", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-scene", help="write a synthetic task-space grid")
    g.add_argument("--preset", default="cavity-wall-shelf", choices=sorted(SCENE_PRESETS))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="grid file to write")

    e = sub.add_parser("eval", help="dexterity of one design")
    e.add_argument("grid", nargs="?")
    e.add_argument("--design", default="single", help=f"preset ({', '.join(PRESETS)}) or design file")
    e.add_argument("--label")
    e.add_argument("--ply", action="store_true", help="also write field.ply")
    e.add_argument("--manifest", help="replay a previous run's manifest.json")
    _shared(e)

    o = sub.add_parser("optimize", help="differential evolution over designs")
    o.add_argument("grid")
    o.add_argument("--segments", type=int, default=1)
    o.add_argument("--pop", type=int, help="population size (default 10 per parameter)")
    o.add_argument("--de-f", type=float, default=0.8)
    o.add_argument("--de-cr", type=float, default=0.7)
    o.add_argument("--generations", type=int, default=50)
    o.add_argument("--time-budget-s", type=float, default=600.0)
    o.add_argument("--repeats", type=int, default=10)
    _shared(o)

    r = sub.add_parser("report", help="tables, convergence bands and rank test")
    r.add_argument("inputs", nargs="+", help="report.json / summary.json files")
    r.add_argument("--out", required=True)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")
    try:
        if args.command == "gen-scene":
            grid = cmd_gen_scene(args.out, args.preset, args.seed)
            log.info("wrote %s: dims %s, %d ROI voxels", args.out, grid.dims, int((grid.labels == 2).sum()))
        elif args.command == "eval":
            if args.manifest:
                doc = replay_manifest(args.manifest, args.out, workers=args.workers)
            else:
                if not args.grid:
                    raise ValueError("eval needs a grid file or --manifest")
                doc = cmd_eval(args.grid, args.design, args.out, _settings(args), workers=args.workers,
                               ply=args.ply, label=args.label)
            log.info("%s: mean dexterity %.4f, max %.4f (%d/%d samples accepted, %.2fs)", doc["model"],
                     doc["mean_dexterity"], doc["max_dexterity"], doc["samples_accepted"],
                     doc["samples_total"], doc.get("wall_time", 0.0))
        elif args.command == "optimize":
            def progress(rec):
                log.debug("repeat %d gen %d best %.5f mean %.5f", rec.repeat, rec.gen, rec.best_F, rec.mean_F)

            doc = cmd_optimize(args.grid, args.segments, args.out, _settings(args), workers=args.workers,
                               F_weight=args.de_f, CR=args.de_cr, NP=args.pop, generations=args.generations,
                               time_budget_s=args.time_budget_s, repeats=args.repeats, progress=progress)
            for row in doc["repeats"]:
                log.info("repeat %d: mean dexterity %.4f, max %.4f, genome %s", row["repeat"],
                         row["mean_dexterity"], row["max_dexterity"], [round(v, 3) for v in row["genome"]])
        else:
            res = cmd_report(args.inputs, args.out)
            for row in res["table"]:
                log.info("%-12s %-30s %.4f %.4f", row["model"], row["parameters"], row["mean_dexterity"],
                         row["max_dexterity"])
            if res["comparison"]:
                c = res["comparison"]
                log.info("Mann-Whitney %s vs %s: U=%g Z=%.4f", c["label_a"], c["label_b"], c["U"], c["Z"])
    except (ValueError, OSError) as exc:
        log.error("error: %s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
