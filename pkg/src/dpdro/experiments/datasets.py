"""CSV ingestion and the three real-data replication protocols.

Input CSV schema: a header row, numeric feature columns, then a ``target``
column. Classification targets are 0/1 and are mapped to -1/+1.

The datasets are not bundled. :data:`REGISTRY` records where each one comes
from, and :func:`convert_raw` turns the original downloads into the schema
above (see ``scripts/fetch_data.py``).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..losses import Dataset, LossKind


class DataError(ValueError):
    pass


def load_csv(path, task: str = "regression") -> tuple[Dataset, list[str]]:
    """Read a feature/target CSV; returns the dataset and the feature names.

    ``task`` is ``regression``, ``classification`` or ``location`` (a single
    ``target`` column, no features).
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[-1] != "target":
        raise DataError(f"{path}: last header column must be 'target', got {header[-1:]}")
    body = [r for r in rows[1:] if any(c.strip() for c in r)]
    if not body:
        raise DataError(f"{path}: no data rows")
    try:
        arr = np.array([[float(c) for c in r] for r in body])
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric cell ({exc})") from exc
    if arr.ndim != 2 or arr.shape[1] != len(header):
        raise DataError(f"{path}: ragged rows (header has {len(header)} columns)")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{path}: non-finite values")
    names = header[:-1]
    y = arr[:, -1]
    if task == "classification":
        if not np.all(np.isin(y, (0.0, 1.0))):
            raise DataError(f"{path}: classification targets must be 0 or 1")
        y = 2.0 * y - 1.0
    if task == "location":
        if names:
            raise DataError(f"{path}: location data takes a single 'target' column")
        return Dataset(None, y), names
    if not names:
        raise DataError(f"{path}: no feature columns")
    return Dataset(arr[:, :-1], y), names


def write_csv(data: Dataset, path, names=None, task: str = "regression") -> Path:
    path = Path(path)
    y = (data.y + 1.0) / 2.0 if task == "classification" else data.y
    d = 0 if data.X is None else data.X.shape[1]
    names = list(names) if names is not None else [f"x{j}" for j in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["target"])
        for i in range(len(data)):
            feats = [] if data.X is None else [repr(float(v)) for v in data.X[i]]
            w.writerow(feats + [repr(float(y[i]))])
    return path


@dataclass(frozen=True)
class RealDataProtocol:
    name: str
    kind: LossKind
    n_rows: int
    n_features: int
    n_train: int
    folds: int
    fold_size: int
    filename: str
    source: str
    published_table: dict  # method -> (average, std) as published

    @property
    def task(self) -> str:
        return "classification" if self.kind is LossKind.LOGISTIC else "regression"

    def download_hint(self) -> str:
        return (f"place {self.filename} ({self.n_rows} rows, {self.n_features} features + target) in the data "
                f"directory; source: {self.source}; run scripts/fetch_data.py --dataset {self.name}")


REGISTRY = {
    "pima": RealDataProtocol(
        "pima", LossKind.LOGISTIC, 768, 8, 300, 15, 20, "pima.csv",
        "https://www.kaggle.com/datasets/kandij/diabetes-dataset",
        {"Unregularized": (0.0142, 0.0127), "L1 Regularized": (0.0007, 6.2253e-05),
         "DP Robust": (0.0006, 3.9742e-05)},
    ),
    "wine": RealDataProtocol(
        "wine", LossKind.SQUARED, 4898, 11, 300, 10, 30, "wine.csv",
        "https://archive.ics.uci.edu/dataset/186/wine+quality (winequality-white.csv)",
        {"Unregularized": (0.0014, 0.0004), "L1 Regularized": (0.0009, 8.0192e-05),
         "DP Robust": (0.0009, 6.0076e-05)},
    ),
    "liver": RealDataProtocol(
        "liver", LossKind.SQUARED, 345, 5, 200, 10, 20, "liver.csv",
        "https://archive.ics.uci.edu/dataset/60/liver+disorders (bupa.data)",
        {"Unregularized": (0.0012, 0.0005), "L1 Regularized": (0.0009, 0.0001),
         "DP Robust": (0.0007, 6.6597e-05)},
    ),
}


def load_protocol_data(protocol: RealDataProtocol, data_dir) -> tuple[Dataset, list[str]]:
    path = Path(data_dir) / protocol.filename
    if not path.is_file():
        raise DataError(f"data file not found: {path}; {protocol.download_hint()}")
    data, names = load_csv(path, protocol.task)
    validate_schema(protocol, data, names)
    return data, names


def validate_schema(protocol: RealDataProtocol, data: Dataset, names) -> None:
    if len(names) != protocol.n_features:
        raise DataError(f"{protocol.name}: expected {protocol.n_features} features, found {len(names)}")
    if len(data) <= protocol.n_train:
        raise DataError(f"{protocol.name}: {len(data)} rows cannot hold a {protocol.n_train}-row training sample")
    if protocol.folds * protocol.fold_size > protocol.n_train:
        raise DataError(f"{protocol.name}: batches exceed the training sample")


LIVER_COLUMNS = ["mcv", "alkphos", "sgpt", "sgot", "gammagt"]


def convert_raw(name: str, src, dst) -> Path:
    """Convert an original download to the package CSV schema.

    wine: semicolon-separated ``winequality-white.csv`` with a ``quality`` column.
    pima: ``diabetes.csv`` with an ``Outcome`` column.
    liver: headerless ``bupa.data``; target is ``drinks`` (column 6), the
    selector column is dropped.
    """
    src = Path(src)
    if not src.is_file():
        raise DataError(f"raw file not found: {src}")
    text = src.read_text()
    if name == "wine":
        rows = list(csv.reader(text.splitlines(), delimiter=";"))
        header = [h.strip().strip('"') for h in rows[0]]
        t = header.index("quality")
        names = [h.replace(" ", "_") for j, h in enumerate(header) if j != t]
        body = [[float(c) for j, c in enumerate(r) if j != t] + [float(r[t])] for r in rows[1:] if r]
    elif name == "pima":
        rows = list(csv.reader(text.splitlines()))
        header = [h.strip() for h in rows[0]]
        t = header.index("Outcome")
        names = [h for j, h in enumerate(header) if j != t]
        body = [[float(c) for j, c in enumerate(r) if j != t] + [float(r[t])] for r in rows[1:] if r]
    elif name == "liver":
        rows = [r for r in csv.reader(text.splitlines()) if r]
        names = list(LIVER_COLUMNS)
        body = [[float(c) for c in r[:5]] + [float(r[5])] for r in rows]
    else:
        raise DataError(f"unknown dataset {name!r}")
    dst = Path(dst)
    with open(dst, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["target"])
        for r in body:
            w.writerow([repr(v) for v in r])
    return dst
