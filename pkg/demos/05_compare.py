"""
Comparing designs end to end
============================

The pipeline functions behind the command line write files you can diff,
replay and tabulate. Here two short optimizations are compared with a
Mann-Whitney test on their per-repeat best dexterities.

Equivalent shell session::

    snakedex gen-scene --out run/scene.vox
    snakedex eval run/scene.vox --design rigid --out run/rigid
    snakedex optimize run/scene.vox --segments 1 --generations 5 --repeats 4 --out run/seg1
    snakedex optimize run/scene.vox --segments 2 --generations 5 --repeats 4 --out run/seg2
    snakedex report run/rigid/report.json run/seg1/summary.json run/seg2/summary.json --out run/report
"""

import json
import tempfile
from pathlib import Path

from snakedex import EvalSettings
from snakedex.pipeline import cmd_eval, cmd_gen_scene, cmd_optimize, cmd_report

run = Path(tempfile.mkdtemp())
cmd_gen_scene(run / "scene.vox")
st = EvalSettings(sample_size=20_000, seed=1)
cmd_eval(run / "scene.vox", "rigid", run / "rigid", st)
for s in (1, 2):
    cmd_optimize(run / "scene.vox", s, run / f"seg{s}", st, generations=5, repeats=4, NP=10 * s)

result = cmd_report([run / "rigid/report.json", run / "seg1/summary.json", run / "seg2/summary.json"],
                    run / "report")
print((run / "report/table.md").read_text())
print(json.dumps(result["comparison"], indent=1))
