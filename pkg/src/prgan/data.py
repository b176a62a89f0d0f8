"""Labeled datasets, label derivation and dataset loaders (MNIST IDX, UJI CSV)."""

from __future__ import annotations

import enum
import gzip
import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import MissingCoordinates, OutOfRange, SchemaMismatch, TooFewPoints

UJI_SIGNAL_COLUMNS = [f"WAP{i:03d}" for i in range(1, 521)]
UJI_LOCATION_COLUMNS = ["LONGITUDE", "LATITUDE", "FLOOR", "BUILDINGID"]
UJI_NO_SIGNAL = 100
UJI_CLUSTERS_PER_FLOOR = 8

MNIST_IMAGE_SHAPE = (1, 28, 28)


class DatasetKind(str, enum.Enum):
    REAL_VALUED = "real_valued"
    BINARY = "binary"


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Feature matrix with per-record target (``y_L``) and sensitive (``y_P``) labels.

    Arrays are copied and made read-only on construction. ``target_classes`` and
    ``sensitive_classes`` are the alphabet sizes; they default to ``max + 1`` and
    are carried through subsets so a slice missing a class keeps its label space.
    """

    features: np.ndarray
    target_labels: np.ndarray
    sensitive_labels: np.ndarray
    kind: DatasetKind
    name: str = ""
    input_shape: tuple[int, ...] | None = None
    target_classes: int = 0
    sensitive_classes: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = _frozen(self.features, np.float32)
        if x.ndim != 2:
            raise ValueError(f"features must be 2-D (records x dims), got shape {x.shape}")
        yl = _frozen(self.target_labels, np.int64)
        yp = _frozen(self.sensitive_labels, np.int64)
        if not (len(x) == len(yl) == len(yp)):
            raise ValueError(
                f"record count mismatch: features {len(x)}, target {len(yl)}, sensitive {len(yp)}"
            )
        kind = DatasetKind(self.kind)
        if kind is DatasetKind.BINARY:
            if not np.isin(x, (0.0, 1.0)).all():
                raise ValueError("binary dataset features must be 0/1")
        elif x.size and (x.min() < 0.0 or x.max() > 1.0):
            raise ValueError("real-valued features must lie in [0, 1]")
        tc = self.target_classes or (int(yl.max()) + 1 if len(yl) else 0)
        sc = self.sensitive_classes or (int(yp.max()) + 1 if len(yp) else 0)
        for name, y, k in (("target", yl, tc), ("sensitive", yp, sc)):
            if len(y) and (y.min() < 0 or y.max() >= k):
                raise ValueError(f"{name} labels must lie in [0, {k})")
        shape = tuple(self.input_shape) if self.input_shape else (x.shape[1],)
        if int(np.prod(shape)) != x.shape[1]:
            raise ValueError(f"input_shape {shape} does not match {x.shape[1]} features")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "target_labels", yl)
        object.__setattr__(self, "sensitive_labels", yp)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "input_shape", shape)
        object.__setattr__(self, "target_classes", tc)
        object.__setattr__(self, "sensitive_classes", sc)

    def __len__(self):
        return len(self.features)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> LabeledDataset:
        idx = np.asarray(indices, dtype=np.int64)
        return self._replace(
            features=self.features[idx],
            target_labels=self.target_labels[idx],
            sensitive_labels=self.sensitive_labels[idx],
        )

    def with_features(self, features, name=None) -> LabeledDataset:
        return self._replace(features=features, name=name or self.name)

    def _replace(self, **changes) -> LabeledDataset:
        kw = dict(
            features=self.features,
            target_labels=self.target_labels,
            sensitive_labels=self.sensitive_labels,
            kind=self.kind,
            name=self.name,
            input_shape=self.input_shape,
            target_classes=self.target_classes,
            sensitive_classes=self.sensitive_classes,
            meta=dict(self.meta),
        )
        kw.update(changes)
        return LabeledDataset(**kw)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for a in (self.features, self.target_labels, self.sensitive_labels):
            h.update(np.ascontiguousarray(a).tobytes())
        h.update(self.kind.value.encode())
        return h.hexdigest()

    def save(self, path) -> None:
        path = Path(path)
        header = {
            "kind": self.kind.value,
            "name": self.name,
            "input_shape": list(self.input_shape),
            "target_classes": self.target_classes,
            "sensitive_classes": self.sensitive_classes,
            "meta": self.meta,
        }
        with open(path, "wb") as fh:
            np.savez_compressed(
                fh,
                features=self.features,
                target_labels=self.target_labels,
                sensitive_labels=self.sensitive_labels,
                header=np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8),
            )

    @classmethod
    def load(cls, path) -> LabeledDataset:
        with np.load(path, allow_pickle=False) as z:
            header = json.loads(bytes(z["header"]).decode())
            return cls(
                features=z["features"],
                target_labels=z["target_labels"],
                sensitive_labels=z["sensitive_labels"],
                kind=header["kind"],
                name=header["name"],
                input_shape=tuple(header["input_shape"]),
                target_classes=header["target_classes"],
                sensitive_classes=header["sensitive_classes"],
                meta=header.get("meta", {}),
            )


# --------------------------------------------------------------------------- MNIST

def derive_mnist_labels(digit: int) -> tuple[int, int]:
    """Map a digit to ``(parity, digit > 5)``, the (target, sensitive) pair."""
    if isinstance(digit, bool) or not isinstance(digit, (int, np.integer)):
        raise OutOfRange(f"digit must be an integer, got {digit!r}")
    if not 0 <= digit <= 9:
        raise OutOfRange(f"digit must be in 0..9, got {digit}")
    return int(digit) % 2, int(digit > 5)


def mnist_labels(digits) -> tuple[np.ndarray, np.ndarray]:
    d = np.asarray(digits, dtype=np.int64)
    if d.size and (d.min() < 0 or d.max() > 9):
        raise OutOfRange("digits must be in 0..9")
    return d % 2, (d > 5).astype(np.int64)


_IDX_DTYPES = {
    0x08: np.uint8,
    0x09: np.int8,
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


def _open(path, mode="rb"):
    path = Path(path)
    return gzip.open(path, mode) if path.suffix == ".gz" else open(path, mode)


def read_idx(path) -> np.ndarray:
    with _open(path) as fh:
        raw = fh.read()
    if len(raw) < 4 or raw[0] != 0 or raw[1] != 0:
        raise SchemaMismatch(f"{path}: not an IDX file (bad magic)")
    dtype = _IDX_DTYPES.get(raw[2])
    if dtype is None:
        raise SchemaMismatch(f"{path}: unsupported IDX type code {raw[2]:#x}")
    ndim = raw[3]
    dims = struct.unpack(f">{ndim}I", raw[4:4 + 4 * ndim])
    data = np.frombuffer(raw, dtype=dtype, offset=4 + 4 * ndim)
    if data.size != int(np.prod(dims)):
        raise SchemaMismatch(f"{path}: payload size does not match header dims {dims}")
    return data.reshape(dims)


def write_idx(path, array) -> None:
    a = np.asarray(array)
    code = {np.dtype(np.uint8): 0x08, np.dtype(np.int8): 0x09}.get(a.dtype)
    if code is None:
        raise ValueError("write_idx supports uint8/int8 arrays only")
    header = bytes([0, 0, code, a.ndim]) + struct.pack(f">{a.ndim}I", *a.shape)
    with _open(path, "wb") as fh:
        fh.write(header + a.tobytes())


def mnist_dataset(images, digits, name="mnist") -> LabeledDataset:
    images = np.asarray(images)
    x = images.reshape(len(images), -1).astype(np.float32) / 255.0
    yl, yp = mnist_labels(digits)
    return LabeledDataset(
        x, yl, yp, DatasetKind.REAL_VALUED, name=name,
        input_shape=MNIST_IMAGE_SHAPE, target_classes=2, sensitive_classes=2,
    )


def load_mnist(images_path, labels_path) -> LabeledDataset:
    images = read_idx(images_path)
    digits = read_idx(labels_path)
    if images.ndim != 3 or images.shape[1:] != (28, 28):
        raise SchemaMismatch(f"{images_path}: expected N x 28 x 28 images, got {images.shape}")
    if digits.ndim != 1 or len(digits) != len(images):
        raise SchemaMismatch(f"{labels_path}: label count does not match image count")
    return mnist_dataset(images, digits)


def load_mnist_sample() -> LabeledDataset:
    """The 5000-digit MNIST subset (500 per digit) bundled with mlxtend."""
    from mlxtend.data import mnist_data

    x, digits = mnist_data()
    return mnist_dataset(x.reshape(-1, 28, 28).astype(np.uint8), digits, name="mnist-5k")


# --------------------------------------------------------------------------- UJI

def cluster_floor_locations(coords, k: int, seed: int = 0) -> np.ndarray:
    """Partition 2-D points into ``k`` non-empty groups by k-means (10 restarts)."""
    from sklearn.cluster import KMeans

    pts = np.asarray(coords, dtype=np.float64).reshape(-1, 2)
    if k < 1:
        raise ValueError("k must be positive")
    if len(pts) < k or len(np.unique(pts, axis=0)) < k:
        raise TooFewPoints(f"need at least {k} distinct points, got {len(np.unique(pts, axis=0))}")
    if k == 1:
        return np.zeros(len(pts), dtype=np.int64)
    km = KMeans(n_clusters=k, n_init=10, random_state=seed).fit(pts)
    # relabel by first appearance so ids do not depend on restart order
    _, first = np.unique(km.labels_, return_index=True)
    order = np.argsort(first)
    remap = np.empty(k, dtype=np.int64)
    remap[np.unique(km.labels_)[order]] = np.arange(k)
    return remap[km.labels_]


def load_uji(table, seed: int = 0, clusters_per_floor: int = UJI_CLUSTERS_PER_FLOOR) -> LabeledDataset:
    """Build the WiFi dataset from a UJIIndoorLoc table (DataFrame or CSV path).

    Features are 520 presence indicators (the ``100`` sentinel means no reading).
    The target is the global floor index over sorted ``(building, floor)`` pairs;
    the sensitive label is ``floor_index * clusters_per_floor + cluster``.
    """
    df = table if isinstance(table, pd.DataFrame) else pd.read_csv(table)
    for col in UJI_SIGNAL_COLUMNS + UJI_LOCATION_COLUMNS:
        if col not in df.columns:
            raise SchemaMismatch(f"missing column {col}", column=col)
    coords = df[["LONGITUDE", "LATITUDE"]].to_numpy(dtype=np.float64)
    if np.isnan(coords).any():
        bad = int(np.isnan(coords).any(axis=1).argmax())
        raise MissingCoordinates(f"record {bad} has no coordinates")
    signals = df[UJI_SIGNAL_COLUMNS].to_numpy()
    features = (signals != UJI_NO_SIGNAL).astype(np.float32)

    pairs = df[["BUILDINGID", "FLOOR"]].to_numpy(dtype=np.int64)
    uniq, floor_idx = np.unique(pairs, axis=0, return_inverse=True)
    floor_idx = floor_idx.reshape(-1)
    sensitive = np.empty(len(df), dtype=np.int64)
    for f in range(len(uniq)):
        rows = np.flatnonzero(floor_idx == f)
        sensitive[rows] = f * clusters_per_floor + cluster_floor_locations(
            coords[rows], clusters_per_floor, seed=seed
        )
    return LabeledDataset(
        features, floor_idx, sensitive, DatasetKind.BINARY, name="uji",
        target_classes=len(uniq), sensitive_classes=len(uniq) * clusters_per_floor,
        meta={"floors": [list(map(int, p)) for p in uniq], "cluster_seed": seed},
    )
