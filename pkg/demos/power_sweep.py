"""Mean sum rate versus AP power at desk scale.

Averages a few paired trials per power level and prints the table the CLI
would write. Expect small absolute numbers: with unit antenna gains the
two-hop THz pathloss leaves the links close to the noise floor.

    python3 demos/power_sweep.py [trials]
"""
import sys

from irsthz.config import ExperimentConfig
from irsthz.runner import sweep
from irsthz.serialize import to_csv

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 10
cfg = ExperimentConfig(antennas=16, irs_side=20)
table = sweep(cfg, "power_dbm", [10, 14, 18, 23], trials=trials)
print(to_csv(table), end="")

for algo in cfg.algos:
    means = table.means(algo)
    print(f"{algo:>6}: gain from 10 to 23 dBm x{means[-1] / means[0]:.1f}")
