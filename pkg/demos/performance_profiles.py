"""Performance profiles from the command-line benchmark harness.

Runs a slice of the IVOCP sweep through ``lcqp bench`` and reads back the
CSV files. The full sweep has 110 grid points per suite.
"""

# %% run a short sweep
import csv
import subprocess
import sys
import tempfile
from pathlib import Path

out = Path(tempfile.mkdtemp())
subprocess.run([sys.executable, "-m", "lcqp", "bench", "ivocp", "--limit", "6", "-o", str(out)],
               check=True)

# %% per-run records
with open(out / "ivocp_runs.csv") as fh:
    for row in csv.DictReader(fh):
        print(f"{row['problem']:>22} {row['solver']:>19} {row['status']:>8} "
              f"{float(row['time']):.3f}s  objective {float(row['objective']):.6f}")

# %% fraction solved within a factor tau of the fastest
with open(out / "ivocp_profile.csv") as fh:
    rows = list(csv.reader(fh))
print(rows[0])
for row in rows[1::10]:
    print([f"{float(v):.3f}" for v in row])
