"""Real-data replication for one protocol (wine, pima or liver).

The CSVs are not shipped; see scripts/fetch_data.py. The data directory is
taken from DPDRO_DATA_DIR, else ./data.

Run: python demos/04_real_data.py liver
"""
import os
import sys

from dpdro.experiments.datasets import DataError
from dpdro.experiments.protocols import run_real_data, table_csv
from dpdro.sampling import RngStream

name = sys.argv[1] if len(sys.argv) > 1 else "liver"
try:
    res = run_real_data(name, os.environ.get("DPDRO_DATA_DIR", "data"), RngStream(4))
except DataError as exc:
    sys.exit(f"cannot run {name}: {exc}")
print("alpha chosen by CV:", res.alpha_cv["best"], " lambda:", res.lambda_cv["best"])
print(table_csv(res.table()))
