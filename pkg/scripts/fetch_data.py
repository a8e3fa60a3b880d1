"""Download and convert the real datasets into the package CSV schema.

    python scripts/fetch_data.py --dataset wine --data-dir data
    python scripts/fetch_data.py --dataset pima --raw ~/Downloads/diabetes.csv

Wine and liver come from the UCI archive as zip files. The Pima file sits
behind a Kaggle login, so it has to be downloaded by hand and passed with
``--raw``; the script then only converts and validates it.
"""
from __future__ import annotations

import argparse
import io
import sys
import tempfile
import urllib.request
import zipfile
from pathlib import Path

from dpdro.experiments.datasets import REGISTRY, DataError, convert_raw, load_protocol_data

UCI = {
    "wine": ("https://archive.ics.uci.edu/static/public/186/wine+quality.zip", "winequality-white.csv"),
    "liver": ("https://archive.ics.uci.edu/static/public/60/liver+disorders.zip", "bupa.data"),
}


def download(name: str, workdir: Path) -> Path:
    url, member = UCI[name]
    with urllib.request.urlopen(url, timeout=60) as resp:
        blob = resp.read()
    with zipfile.ZipFile(io.BytesIO(blob)) as zf:
        hits = [m for m in zf.namelist() if m.endswith(member)]
        if not hits:
            raise DataError(f"{member} not found in {url}")
        out = workdir / member
        out.write_bytes(zf.read(hits[0]))
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dataset", required=True, choices=sorted(REGISTRY))
    ap.add_argument("--data-dir", default="data")
    ap.add_argument("--raw", help="already downloaded original file")
    args = ap.parse_args(argv)

    protocol = REGISTRY[args.dataset]
    data_dir = Path(args.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        if args.raw:
            raw = Path(args.raw)
        elif args.dataset in UCI:
            raw = download(args.dataset, Path(tmp))
        else:
            print(f"{args.dataset}: manual download required from {protocol.source}; "
                  f"then rerun with --raw <file>", file=sys.stderr)
            return 3
        dst = convert_raw(args.dataset, raw, data_dir / protocol.filename)
    data, names = load_protocol_data(protocol, data_dir)
    if len(data) != protocol.n_rows:
        print(f"warning: expected {protocol.n_rows} rows, found {len(data)}", file=sys.stderr)
    print(f"wrote {dst} ({len(data)} rows, {len(names)} features)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
