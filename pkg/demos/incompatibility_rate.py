"""
How often does a random change break a 6x6 block?
=================================================

Take blocks from synthetic images, change ``p`` coefficients by one and
count the blocks that have no pixel antecedent any more.  A few hundred
blocks per point keep this under a minute; the CLI command
``jpegcompat incompat-rate`` runs the full-size version.
"""

from jpegcompat.experiments import ExperimentConfig, cmd_incompat_rate
from jpegcompat.transform import BlockShape

cfg = ExperimentConfig(seed=2024, shape=BlockShape(6, 6), samples=200, image_size=64,
                       max_changes=4)
rows = cmd_incompat_rate(cfg)

for r in rows:
    if r.statistic == "incompatible_fraction":
        p = r.params.split(";")[0]
        bar = "#" * int(round(50 * r.value))
        print(f"{p:>4}  {r.value:.3f} +/- {r.half_width:.3f}  {bar}")

# p=0 is the cover itself, which always has an antecedent
