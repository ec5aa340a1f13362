"""
Acceptance ratio versus utilization
===================================

A reduced version of the synthetic sweep: four processors, four locks,
short critical sections, twenty task sets per level.  Pass ``--full`` for
the 100-replicate version.
"""

import sys

from dga.generator import H_LOW, GenConfig
from dga.harness import acceptance_sweep

replicates = 100 if "--full" in sys.argv else 20
res = acceptance_sweep(
    GenConfig(processors=4, resources=4, h_range=H_LOW),
    replicates=replicates,
    variants=("JS-LEDF-P", "JS-PEDF-NP"),
)
for variant in ("JS-LEDF-P", "JS-PEDF-NP"):
    curve = res.ratio(variant)
    print(variant)
    for level, ratio in curve.items():
        print(f"  {level:3d}%  {'#' * round(ratio * 40):40s} {ratio:.2f}")
