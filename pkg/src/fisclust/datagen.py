"""Dataset CSV I/O and deterministic synthetic generators.

Generation uses splitmix64, a counter-based 64-bit generator with fixed
published constants, so a (kind, seed, params) triple reproduces the same
bytes on any platform. Gaussians come from Box-Muller on consecutive
uniforms; annulus radii and angles come from inverse-CDF sampling.
"""

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .metricspace import Dataset

__all__ = [
    "SplitMix64",
    "GenSpec",
    "generate",
    "load_csv",
    "save_csv",
    "save_labels",
    "load_labels",
    "CsvFormatError",
    "atomic_write_text",
]

GEN_KINDS = ("blobs", "imbalance", "annulus_blobs", "grid_line")


class CsvFormatError(ValueError):
    """CSV input broke the dataset format; the message carries row/column."""


def atomic_write_text(path, text: str):
    """Write text via a temp file and rename, so readers never see partial output."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".fisclust-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class SplitMix64:
    """Counter-based splitmix64 stream.

    State i maps to output mix(seed + (i+1) * 0x9E3779B97F4A7C15) with the
    standard finalizer; uniforms take the top 53 bits. Every draw advances
    the counter, so a fixed seed yields one fixed stream.
    """

    GAMMA = np.uint64(0x9E3779B97F4A7C15)
    M1 = np.uint64(0xBF58476D1CE4E5B9)
    M2 = np.uint64(0x94D049BB133111EB)

    def __init__(self, seed: int):
        self.seed = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        self.counter = 0

    def _raw(self, count: int) -> np.ndarray:
        idx = np.arange(self.counter + 1, self.counter + count + 1, dtype=np.uint64)
        self.counter += count
        z = self.seed + idx * self.GAMMA
        z = (z ^ (z >> np.uint64(30))) * self.M1
        z = (z ^ (z >> np.uint64(27))) * self.M2
        return z ^ (z >> np.uint64(31))

    def uniforms(self, count: int) -> np.ndarray:
        """count doubles uniform on [0, 1)."""
        return (self._raw(count) >> np.uint64(11)).astype(np.float64) * (2.0**-53)

    def normals(self, count: int) -> np.ndarray:
        """count standard normals via Box-Muller (consumes 2*ceil(count/2) draws)."""
        pairs = (count + 1) // 2
        u1 = ((self._raw(pairs) >> np.uint64(11)).astype(np.float64) + 1.0) * (2.0**-53)
        u2 = (self._raw(pairs) >> np.uint64(11)).astype(np.float64) * (2.0**-53)
        radius = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(theta)
        out[1::2] = radius * np.sin(theta)
        return out[:count]


@dataclass
class GenSpec:
    """A synthetic dataset recipe: kind, seed, and per-kind size parameters.

    Accepted as a flat JSON object, e.g.
    ``{"kind": "blobs", "seed": 7, "counts": [100, 100], "spread": 1.0}``.
    """

    kind: str
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in GEN_KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; expected one of {GEN_KINDS}")

    @classmethod
    def from_json(cls, text: str) -> "GenSpec":
        doc = json.loads(text)
        if not isinstance(doc, dict) or "kind" not in doc:
            raise ValueError("generator spec must be a JSON object with a 'kind' key")
        kind = doc.pop("kind")
        seed = int(doc.pop("seed", 0))
        return cls(kind, seed, doc)

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "seed": self.seed, **self.params}, sort_keys=True)


def _grid_centers(k: int, separation: float, d: int = 2) -> np.ndarray:
    """k lattice points with pairwise separation >= separation, around the origin."""
    cols = math.ceil(math.sqrt(k))
    centers = [(separation * (i % cols), separation * (i // cols)) for i in range(k)]
    arr = np.zeros((k, d))
    arr[:, :2] = np.asarray(centers)[:, :2] if d >= 2 else np.asarray(centers)[:, :1]
    return arr


def _gen_blobs(rng: SplitMix64, params: dict):
    counts = params.get("counts", [100] * int(params.get("k", 3)))
    if isinstance(counts, int):
        counts = [counts] * int(params.get("k", 3))
    k = len(counts)
    if "centers" in params:
        centers = np.asarray(params["centers"], dtype=np.float64)
    else:
        centers = _grid_centers(k, float(params.get("separation", 20.0)))
    if centers.shape[0] != k:
        raise ValueError(f"{k} counts but {centers.shape[0]} centers")
    d = centers.shape[1]
    spreads = params.get("spreads", params.get("spread", 1.0))
    if isinstance(spreads, (int, float)):
        spreads = [float(spreads)] * k
    if len(spreads) != k:
        raise ValueError(f"{k} counts but {len(spreads)} spreads")
    chunks, labels = [], []
    for b, count in enumerate(counts):
        count = int(count)
        if count < 1:
            raise ValueError("every blob needs at least 1 point")
        pts = centers[b] + spreads[b] * rng.normals(count * d).reshape(count, d)
        chunks.append(pts)
        labels.append(np.full(count, b))
    for bi, bridge in enumerate(params.get("bridges", [])):
        count = int(bridge["count"])
        a, b = centers[int(bridge["from"])], centers[int(bridge["to"])]
        jitter = float(bridge.get("jitter", 0.0))
        frac = rng.uniforms(count)
        pts = a + frac[:, None] * (b - a)[None, :]
        if jitter > 0:
            pts = pts + jitter * rng.normals(count * d).reshape(count, d)
        chunks.append(pts)
        labels.append(np.full(count, k + bi))
    return np.vstack(chunks), np.concatenate(labels)


_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def _gen_imbalance(rng: SplitMix64, params: dict):
    """Two clusters of strongly different density.

    The tight cluster is a small dense Gaussian. The diffuse cluster pairs
    a Gaussian nucleus with a sparse sunflower-spiral halo (evenly spaced,
    jittered), so its density falls off a cliff at the halo: the removal
    stage strips exactly the halo instead of shattering the nucleus.
    """
    tight_count = int(params.get("tight_count", 31))
    tight_sigma = float(params.get("tight_sigma", 0.25))
    core_count = int(params.get("core_count", 30))
    core_sigma = float(params.get("core_sigma", 0.8))
    halo_count = int(params.get("halo_count", 40))
    halo_inner = float(params.get("halo_inner", 4.0))
    halo_outer = float(params.get("halo_outer", 10.0))
    halo_jitter = float(params.get("halo_jitter", 0.35))
    separation = float(params.get("separation", 20.0))
    tight = tight_sigma * rng.normals(tight_count * 2).reshape(tight_count, 2)
    core = core_sigma * rng.normals(core_count * 2).reshape(core_count, 2)
    i = np.arange(halo_count)
    radius = np.sqrt(halo_inner**2 + (halo_outer**2 - halo_inner**2) * (i + 0.5) / halo_count)
    theta = i * _GOLDEN_ANGLE
    halo = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    halo = halo + halo_jitter * rng.normals(halo_count * 2).reshape(halo_count, 2)
    diffuse = np.vstack([core, halo])
    diffuse[:, 0] += separation
    points = np.vstack([tight, diffuse])
    labels = np.concatenate(
        [np.zeros(tight_count, int), np.ones(core_count + halo_count, int)]
    )
    return points, labels


def _gen_annulus_blobs(rng: SplitMix64, params: dict):
    """A ring plus Gaussian blobs inside it.

    Ring angles are uniform; radii follow a triangular distribution on
    [r_inner, r_outer] peaked at the midpoint (inverse-CDF), so the ring
    is densest mid-band and thins toward both edges.
    """
    annulus_count = int(params.get("annulus_count", 1561))
    r_inner = float(params.get("r_inner", 8.0))
    r_outer = float(params.get("r_outer", 10.0))
    blob_counts = [int(c) for c in params.get("blob_counts", [300, 300, 300])]
    blob_sigma = float(params.get("blob_sigma", 0.5))
    ring_radius = float(params.get("blob_ring_radius", 4.0))
    if not 0 <= r_inner < r_outer:
        raise ValueError("need 0 <= r_inner < r_outer")
    u = rng.uniforms(annulus_count)
    half = (r_outer - r_inner) / 2.0
    mid = (r_inner + r_outer) / 2.0
    radius = np.where(
        u < 0.5,
        r_inner + half * np.sqrt(2.0 * u),
        r_outer - half * np.sqrt(2.0 * (1.0 - u)),
    )
    theta = 2.0 * np.pi * rng.uniforms(annulus_count)
    ring = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    chunks, labels = [ring], [np.zeros(annulus_count, int)]
    for b, count in enumerate(blob_counts):
        angle = 2.0 * np.pi * (0.25 + b / len(blob_counts))
        center = ring_radius * np.array([math.cos(angle), math.sin(angle)])
        pts = center + blob_sigma * rng.normals(count * 2).reshape(count, 2)
        chunks.append(pts)
        labels.append(np.full(count, b + 1))
    return np.vstack(chunks), np.concatenate(labels)


def _gen_grid_line(rng: SplitMix64, params: dict):
    """Evenly spaced lattice (1-D line or 2-D grid) with optional jitter."""
    shape = params.get("shape", [10])
    if isinstance(shape, int):
        shape = [shape]
    if not 1 <= len(shape) <= 2 or any(int(s) < 1 for s in shape):
        raise ValueError(f"shape must be [nx] or [nx, ny] with positive sizes, got {shape}")
    spacing = float(params.get("spacing", 1.0))
    jitter = float(params.get("jitter", 0.0))
    if spacing <= 0:
        raise ValueError("spacing must be > 0")
    if len(shape) == 1:
        xs = spacing * np.arange(int(shape[0]), dtype=np.float64)
        points = np.column_stack([xs, np.zeros_like(xs)])
    else:
        nx, ny = int(shape[0]), int(shape[1])
        gx, gy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        points = spacing * np.column_stack([gx.ravel(), gy.ravel()]).astype(np.float64)
    if jitter > 0:
        points = points + jitter * rng.normals(points.size).reshape(points.shape)
    return points, np.zeros(points.shape[0], int)


_GENERATORS = {
    "blobs": _gen_blobs,
    "imbalance": _gen_imbalance,
    "annulus_blobs": _gen_annulus_blobs,
    "grid_line": _gen_grid_line,
}


def generate(spec: GenSpec) -> Dataset:
    """Labeled dataset from a recipe; identical (kind, seed, params) give identical bytes."""
    rng = SplitMix64(spec.seed)
    points, labels = _GENERATORS[spec.kind](rng, dict(spec.params))
    return Dataset(points, labels, name=f"{spec.kind}-{spec.seed}")


def _format_float(x: float) -> str:
    return format(float(x), ".17g")


def load_csv(path) -> Dataset:
    """Dataset from CSV: one row per point, numeric columns, optional final
    ``label`` column when a header names it so.

    Label values are remapped to contiguous ids in ascending value order.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [row for row in rows if row and any(cell.strip() for cell in row)]
    if not rows:
        raise CsvFormatError(f"{path}: empty file")
    header = None
    first = rows[0]
    if any(not _is_number(cell) for cell in first):
        header = [cell.strip() for cell in first]
        rows = rows[1:]
        if not rows:
            raise CsvFormatError(f"{path}: header but no data rows")
    has_label = header is not None and header[-1].lower() == "label"
    width = len(rows[0])
    points, labels = [], []
    for r, row in enumerate(rows, start=2 if header else 1):
        if len(row) != width:
            raise CsvFormatError(f"{path}: row {r} has {len(row)} columns, expected {width}")
        values = []
        for c, cell in enumerate(row, start=1):
            try:
                values.append(float(cell))
            except ValueError:
                raise CsvFormatError(f"{path}: row {r}, column {c}: not a number: {cell!r}") from None
        if has_label:
            label = values[-1]
            if label != int(label):
                raise CsvFormatError(f"{path}: row {r}: label must be an integer, got {row[-1]!r}")
            labels.append(int(label))
            values = values[:-1]
        if not values:
            raise CsvFormatError(f"{path}: row {r}: no feature columns")
        points.append(values)
    label_arr = None
    if has_label:
        _, label_arr = np.unique(np.asarray(labels, dtype=np.int64), return_inverse=True)
    return Dataset(np.asarray(points), label_arr, name=os.path.basename(os.fspath(path)))


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def save_csv(ds: Dataset, path):
    """Write a dataset in the load_csv format, 17 significant digits per coordinate."""
    lines = []
    names = [f"x{i}" for i in range(ds.d)]
    if ds.labels is not None:
        names.append("label")
    lines.append(",".join(names))
    for i in range(ds.n):
        cells = [_format_float(x) for x in ds.points[i]]
        if ds.labels is not None:
            cells.append(str(int(ds.labels[i])))
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def save_labels(labels_or_partition, path):
    """One integer label per line, point order preserved."""
    labels = getattr(labels_or_partition, "labels", labels_or_partition)
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("refusing to write an empty label file")
    atomic_write_text(path, "\n".join(str(int(v)) for v in labels) + "\n")


def load_labels(path) -> np.ndarray:
    with open(path) as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines:
        raise CsvFormatError(f"{path}: empty label file")
    try:
        return np.asarray([int(line) for line in lines], dtype=np.int64)
    except ValueError as exc:
        raise CsvFormatError(f"{path}: {exc}") from None
