"""End-to-end workflow: scene -> preprocessing -> evaluation/optimization -> reports.

Each ``cmd_*`` function writes its outputs plus a ``manifest.json`` into an
output directory and returns the main result document. The CLI in
:mod:`snakedex.cli` is a thin argument parser over these.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .dexterity import EvalSettings, evaluate_fitness
from .evolution import config_for_segments, decode, read_traces, run_repeats, write_traces
from .kinematics import DesignParams, SegmentSpec
from .stats import Z_99_TWO_SIDED, mann_whitney_z
from .voxels import default_scene_spec, gen_synthetic_scene, load_grid, preprocess, save_grid

__all__ = [
    "PRESETS",
    "SCENE_PRESETS",
    "preset_design",
    "design_to_text",
    "design_from_text",
    "write_design",
    "read_design",
    "cmd_gen_scene",
    "cmd_eval",
    "cmd_optimize",
    "cmd_report",
    "replay_manifest",
]

# segment tuples are (alpha rad, d mm, n disks); values of the optimized
# designs reported for the knee-arthroscopy study
PRESETS = {
    "rigid": (),
    "single": ((1.24, 1.62, 3),),
    "double": ((1.34, 6.0, 1), (1.18, 0.41, 3)),
}

SCENE_PRESETS = {"cavity-wall-shelf": default_scene_spec}

MANIFEST = "manifest.json"


def preset_design(name):
    try:
        segs = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown design preset {name!r}; choose from {sorted(PRESETS)}") from None
    return DesignParams(tuple(SegmentSpec(*s) for s in segs))


# -- design files ------------------------------------------------------------


def design_to_text(p):
    lines = [f"segments={p.n_segments}"]
    for k, s in enumerate(p.segments, start=1):
        lines += [f"segment.{k}.alpha={s.alpha!r}", f"segment.{k}.d={s.d!r}", f"segment.{k}.n={s.n}"]
    lines += [
        f"w={p.w!r}",
        f"tool_length={p.tool_length!r}",
        f"shaft_clearance={p.shaft_clearance!r}",
        f"pivot_limit={p.pivot_limit!r}",
    ]
    return "\n".join(lines) + "\n"


def design_from_text(text):
    kv = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        k, v = (t.strip() for t in line.split("=", 1))
        kv[k] = v
    try:
        n_seg = int(kv.pop("segments"))
        segs = []
        for k in range(1, n_seg + 1):
            segs.append(
                SegmentSpec(
                    float(kv.pop(f"segment.{k}.alpha")),
                    float(kv.pop(f"segment.{k}.d")),
                    int(kv.pop(f"segment.{k}.n")),
                )
            )
    except KeyError as exc:
        raise ValueError(f"design file is missing key {exc.args[0]!r}") from None
    extra = {k: float(kv.pop(k)) for k in ("w", "tool_length", "shaft_clearance", "pivot_limit") if k in kv}
    if kv:
        raise ValueError(f"unknown design keys: {sorted(kv)}")
    return DesignParams(tuple(segs), **extra)


def write_design(p, path):
    Path(path).write_text(design_to_text(p), encoding="utf-8")


def read_design(path):
    return design_from_text(Path(path).read_text(encoding="utf-8"))


def design_to_dict(p):
    return {
        "segments": [{"alpha": s.alpha, "d": s.d, "n": s.n} for s in p.segments],
        "w": p.w,
        "tool_length": p.tool_length,
        "shaft_clearance": p.shaft_clearance,
        "pivot_limit": p.pivot_limit,
    }


def design_from_dict(d):
    segs = tuple(SegmentSpec(s["alpha"], s["d"], s["n"]) for s in d["segments"])
    return DesignParams(segs, **{k: d[k] for k in ("w", "tool_length", "shaft_clearance", "pivot_limit")})


def _resolve_design(design):
    """DesignParams from an instance, a preset name or a design file path."""
    if isinstance(design, DesignParams):
        return design, "custom"
    if design in PRESETS:
        return preset_design(design), design
    path = Path(design)
    if not path.exists():
        raise ValueError(f"{design!r} is neither a preset ({', '.join(PRESETS)}) nor a design file")
    return read_design(path), path.stem


def _dump(doc, path):
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def _load_preprocessed(grid_path, radius):
    grid = load_grid(grid_path)
    return grid, preprocess(grid, radius)


# -- commands -----------------------------------------------------------------


def cmd_gen_scene(out_path, preset="cavity-wall-shelf", seed=0):
    try:
        spec = SCENE_PRESETS[preset]()
    except KeyError:
        raise ValueError(f"unknown scene preset {preset!r}") from None
    grid = gen_synthetic_scene(spec, seed)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_grid(grid, out_path)
    return grid


def cmd_eval(grid_path, design, out_dir, settings=None, workers=1, ply=False, label=None):
    """Evaluate one design; writes report.json, field.csv (and field.ply)."""
    settings = settings or EvalSettings()
    p, default_label = _resolve_design(design)
    label = label or default_label
    grid, pre = _load_preprocessed(grid_path, settings.dilation_radius)
    rep = evaluate_fitness(p, pre, settings, workers=workers)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "kind": "eval",
        "model": label,
        "design": design_to_dict(p),
        "genome": [float(v) for v in p.genome()],
        "scene_hash": grid.fingerprint(),
        "dilation_radius": settings.dilation_radius,
        **rep.to_dict(),
    }
    _dump(doc, out / "report.json")
    rep.field.to_csv(out / "field.csv", pre)
    if ply:
        rep.field.to_ply(out / "field.ply", pre)
    _dump(
        {
            "tool": "snakedex",
            "version": __version__,
            "command": "eval",
            "grid_path": str(Path(grid_path).resolve()),
            "grid_sha256": doc["scene_hash"],
            "label": label,
            "design": design_to_dict(p),
            "settings": asdict(settings),
            "workers": workers,
            "ply": ply,
        },
        out / MANIFEST,
    )
    doc["wall_time"] = rep.wall_time
    return doc


def _check_monotone(trace):
    h = trace.best_history
    return bool(np.all(np.diff(h) <= 0))


def cmd_optimize(grid_path, segments, out_dir, settings=None, workers=1, F_weight=0.8, CR=0.7,
                 NP=None, generations=50, time_budget_s=600.0, repeats=10, progress=None):
    """DE search over ``segments``-segment designs.

    Writes trace.jsonl (per-generation records and per-repeat summaries),
    summary.json, best_design.txt and the manifest. Repeat ``r`` uses seed
    ``settings.seed + r`` for both the DE and the Monte-Carlo stream.
    """
    settings = settings or EvalSettings()
    if segments < 1:
        raise ValueError("segments must be >= 1")
    if generations is not None and generations <= 0:
        raise ValueError("generations must be > 0")
    if time_budget_s is not None and time_budget_s <= 0:
        raise ValueError("time budget must be > 0")
    grid, pre = _load_preprocessed(grid_path, settings.dilation_radius)
    cfg_kw = dict(F_weight=F_weight, CR=CR, max_generations=generations, time_budget_s=time_budget_s,
                  seed=settings.seed, repeats=repeats)
    if NP is not None:
        cfg_kw["NP"] = NP
    cfg = config_for_segments(segments, **cfg_kw)

    def make_fitness(seed):
        st = replace(settings, seed=seed)
        return lambda x: evaluate_fitness(decode(x, cfg.integer_genes), pre, st).fitness

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        traces = run_repeats(make_fitness, cfg, mapper=pool.map if pool else None, on_generation=progress)
    finally:
        if pool is not None:
            pool.shutdown()

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_traces(traces, out / "trace.jsonl")
    rows = []
    for tr in traces:
        p = decode(tr.best_genome, cfg.integer_genes)
        rep = evaluate_fitness(p, pre, replace(settings, seed=tr.seed))
        rows.append({
            "repeat": tr.repeat,
            "seed": tr.seed,
            "best_F": tr.best_F,
            "mean_dexterity": rep.mean_dexterity,
            "max_dexterity": rep.max_dexterity,
            "genome": [float(v) for v in tr.best_genome],
            "design": design_to_dict(p),
            "generations": len(tr.records) - 1,
            "monotone": _check_monotone(tr),
        })
    best = min(rows, key=lambda r: r["best_F"])
    write_design(design_from_dict(best["design"]), out / "best_design.txt")
    doc = {
        "kind": "optimize",
        "model": f"{segments}-segment",
        "segments": segments,
        "NP": cfg.NP,
        "F_weight": cfg.F_weight,
        "CR": cfg.CR,
        "scene_hash": grid.fingerprint(),
        "trace": "trace.jsonl",
        "repeats": rows,
        "best": best,
    }
    _dump(doc, out / "summary.json")
    _dump(
        {
            "tool": "snakedex",
            "version": __version__,
            "command": "optimize",
            "grid_path": str(Path(grid_path).resolve()),
            "grid_sha256": doc["scene_hash"],
            "segments": segments,
            "settings": asdict(settings),
            "de": {"F_weight": F_weight, "CR": CR, "NP": cfg.NP, "generations": generations,
                   "time_budget_s": time_budget_s, "repeats": repeats},
            "workers": workers,
        },
        out / MANIFEST,
    )
    return doc


def replay_manifest(manifest_path, out_dir, workers=None):
    """Re-run the command recorded in a manifest into ``out_dir``."""
    m = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    grid = load_grid(m["grid_path"])
    if grid.fingerprint() != m["grid_sha256"]:
        raise ValueError(f"grid {m['grid_path']} changed since the manifest was written")
    settings = EvalSettings(**m["settings"])
    workers = m["workers"] if workers is None else workers
    if m["command"] == "eval":
        return cmd_eval(m["grid_path"], design_from_dict(m["design"]), out_dir, settings,
                        workers=workers, ply=m["ply"], label=m["label"])
    if m["command"] == "optimize":
        de = m["de"]
        return cmd_optimize(m["grid_path"], m["segments"], out_dir, settings, workers=workers,
                            F_weight=de["F_weight"], CR=de["CR"], NP=de["NP"], generations=de["generations"],
                            time_budget_s=de["time_budget_s"], repeats=de["repeats"])
    raise ValueError(f"cannot replay command {m['command']!r}")


# -- reporting ----------------------------------------------------------------


def _fmt_params(design):
    if not design["segments"]:
        return "NA"
    return ", ".join(f"{s['alpha']:.2f}, {s['d']:.2f}, {s['n']}" for s in design["segments"])


def _convergence(trace_path):
    traces = read_traces(trace_path)
    n_gen = min(len(t.records) for t in traces)
    best = np.array([[r.best_F for r in t.records[:n_gen]] for t in traces])
    mean = np.array([[r.mean_F for r in t.records[:n_gen]] for t in traces])
    return [
        (g, float(best[:, g].mean()), float(best[:, g].std()), float(mean[:, g].mean()), len(traces))
        for g in range(n_gen)
    ]


def cmd_report(paths, out_dir):
    """Table of results, convergence bands and (for two optimize runs) a rank test.

    Inputs are eval ``report.json`` or optimize ``summary.json`` files; all
    must come from the same scene.
    """
    if not paths:
        raise ValueError("need at least one report")
    docs = []
    for p in paths:
        d = json.loads(Path(p).read_text(encoding="utf-8"))
        if d.get("kind") not in ("eval", "optimize"):
            raise ValueError(f"{p}: not an eval report or optimize summary")
        docs.append((Path(p), d))
    hashes = {d["scene_hash"] for _, d in docs}
    if len(hashes) > 1:
        first = docs[0][1]["scene_hash"]
        other = next(d["scene_hash"] for _, d in docs if d["scene_hash"] != first)
        raise ValueError(f"reports come from different scenes: {first} vs {other}")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    repeat_sets = []
    for path, d in docs:
        if d["kind"] == "eval":
            rows.append({"model": d["model"], "parameters": _fmt_params(d["design"]),
                         "mean_dexterity": d["mean_dexterity"], "max_dexterity": d["max_dexterity"]})
        else:
            b = d["best"]
            rows.append({"model": d["model"], "parameters": _fmt_params(b["design"]),
                         "mean_dexterity": b["mean_dexterity"], "max_dexterity": b["max_dexterity"]})
            values = [r["mean_dexterity"] for r in d["repeats"]]
            repeat_sets.append((d["model"], values))
            conv = _convergence(path.parent / d["trace"])
            with open(out / f"convergence_{d['model']}.csv", "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["gen", "best_F_mean", "best_F_std", "mean_F_mean", "repeats"])
                w.writerows(conv)
    rows.sort(key=lambda r: -r["mean_dexterity"])

    with open(out / "table.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=["model", "parameters", "mean_dexterity", "max_dexterity"])
        w.writeheader()
        w.writerows(rows)
    md = ["| Model | Parameters | Mean Dexterity | Maximum Dexterity |", "|---|---|---|---|"]
    md += [f"| {r['model']} | {r['parameters']} | {r['mean_dexterity']:.4f} | {r['max_dexterity']:.4f} |" for r in rows]

    result = {"table": rows, "comparison": None}
    if len(repeat_sets) == 2:
        (la, a), (lb, b) = sorted(repeat_sets, key=lambda s: -float(np.median(s[1])))
        cmp_ = mann_whitney_z(a, b, threshold=Z_99_TWO_SIDED, label_a=la, label_b=lb)
        result["comparison"] = cmp_.to_dict()
        _dump(result["comparison"], out / "comparison.json")
        verdict = "significant" if cmp_.significant else "not significant"
        md += ["", f"Mann-Whitney {la} vs {lb}: U = {cmp_.U:g}, Z = {cmp_.Z:.4f} ({verdict} at Z > {cmp_.threshold})"]
    (out / "table.md").write_text("\n".join(md) + "\n", encoding="utf-8")
    return result
