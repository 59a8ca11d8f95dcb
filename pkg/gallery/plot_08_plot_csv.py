"""
Plotting emitted CSV files
==========================

The library and the ``lincap`` command only write data. This script
plots any of the CSV files they produce (photon sweep, detector sweep,
alphabet sweep), using the first column as x and the second as y.

    lincap sweep --restarts 50 --output sweep.csv
    python plot_08_plot_csv.py sweep.csv
"""

import csv
import sys

path = sys.argv[1] if len(sys.argv) > 1 else "photon_sweep.csv"
with open(path) as fh:
    lines = [l for l in fh if not l.startswith("#")]
reader = csv.reader(lines)
header = next(reader)
data = [[float(x) for x in row[:2]] for row in reader]
xs, ys = zip(*data)

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    for x, y in data:
        print(f"{x:8.4f}  {y:8.4f}")
    sys.exit(0)

fig, ax = plt.subplots(figsize=(5, 3.5))
ax.plot(xs, ys, "o-")
ax.set_xlabel(header[0])
ax.set_ylabel(header[1])
fig.tight_layout()
out = path.rsplit(".", 1)[0] + ".png"
fig.savefig(out, dpi=120)
print("wrote", out)
