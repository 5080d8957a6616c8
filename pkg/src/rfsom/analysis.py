"""Evaluation artifacts for trained maps: per-joint weight heatmaps, an
adjacent-neighbor distance map, and a per-neuron joint-encoding report with
inter-group cluster distances.

Weight values are reported exactly as stored (normalized input units); no
smoothing or rescaling happens anywhere except in the 8-bit PGM rendering.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .datagen import JOINT_NAMES
from .fileio import ParseError, format_float
from .lattice import LatticeSpec, distance_matrix
from .mrf import BODY_GROUPS, ReceptiveFieldMask, home_group
from .som import Codebook


@dataclass
class HeatmapSet:
    """One rows x cols weight grid per input joint.

    Cells where the neuron is not connected to the joint hold NaN in
    ``grids`` and False in ``connected``.
    """

    joints: tuple[str, ...]
    grids: np.ndarray
    connected: np.ndarray


@dataclass
class NeuronDistanceMap:
    """Per-neuron mean codebook distance to lattice-adjacent neighbors.

    Pair distances run over the union of the pair's active dimensions,
    RMS-normalized by the union size; border cells average fewer neighbors.
    """

    grid: np.ndarray


@dataclass
class NeuronEncoding:
    """What one neuron represents: its group, active joints, stored weights
    (aligned with ``active_joints``), preferred joint, and classification."""

    index: int
    group: str
    active_joints: tuple[str, ...]
    weights: tuple[float, ...]
    argmax_joint: str
    classification: str


@dataclass
class EncodingReport:
    """Per-neuron encodings plus the symmetric inter-group distance matrix."""

    neurons: list[NeuronEncoding]
    group_order: tuple[str, ...]
    group_distances: np.ndarray


def _joint_names(dims: int) -> tuple[str, ...]:
    if dims == len(JOINT_NAMES):
        return JOINT_NAMES
    return tuple(f"dim_{j}" for j in range(dims))


def _check_pair(codebook: Codebook, mask: ReceptiveFieldMask) -> None:
    if mask.mask.shape != codebook.weights.shape:
        raise ValueError(
            f"mask shape {mask.mask.shape} does not match codebook shape "
            f"{codebook.weights.shape}"
        )


def build_heatmaps(codebook: Codebook, mask: ReceptiveFieldMask) -> HeatmapSet:
    """Weight grids per joint; masked-off positions become not-connected
    markers, never zeros."""
    _check_pair(codebook, mask)
    rows, cols = codebook.lattice.rows, codebook.lattice.cols
    grids = codebook.weights.T.reshape(codebook.dims, rows, cols).copy()
    connected = mask.mask.T.reshape(codebook.dims, rows, cols).copy()
    grids[~connected] = np.nan
    return HeatmapSet(_joint_names(codebook.dims), grids, connected)


def _union_distance(W: np.ndarray, M: np.ndarray, i: int, j: int) -> float:
    """RMS codebook distance between neurons i and j over the union of their
    active dimensions."""
    union = M[i] | M[j]
    diff = W[i, union] - W[j, union]
    return float(np.sqrt((diff**2).sum()) / np.sqrt(union.sum()))


def build_distance_map(
    codebook: Codebook, mask: ReceptiveFieldMask, lattice: LatticeSpec | None = None
) -> NeuronDistanceMap:
    """Mean union-masked RMS distance from each neuron to its lattice
    neighbors (lattice distance exactly 1 under the configured metric)."""
    _check_pair(codebook, mask)
    if lattice is None:
        lattice = codebook.lattice
    if lattice.n_neurons != codebook.n_neurons:
        raise ValueError(
            f"lattice has {lattice.n_neurons} neurons, codebook has {codebook.n_neurons}"
        )
    D = distance_matrix(lattice)
    W = codebook.weights
    M = mask.mask
    grid = np.zeros((lattice.rows, lattice.cols), dtype=np.float64)
    for i in range(lattice.n_neurons):
        neighbors = np.flatnonzero(D[i] == 1)
        dists = [_union_distance(W, M, i, int(j)) for j in neighbors]
        grid[lattice.coord_of(i)] = float(np.mean(dists)) if dists else 0.0
    return NeuronDistanceMap(grid)


def build_encoding_report(
    codebook: Codebook, mask: ReceptiveFieldMask, combination_threshold: float = 0.25
) -> EncodingReport:
    """Classify every neuron and measure inter-group codebook distances.

    A joint counts toward a combination when its |weight| reaches
    ``combination_threshold`` times the neuron's largest |weight|; any
    negative active weight makes the neuron an inhibitory combination.
    """
    _check_pair(codebook, mask)
    if not 0.0 < combination_threshold <= 1.0:
        raise ValueError(
            f"combination_threshold must be in (0, 1], got {combination_threshold}"
        )
    names = _joint_names(codebook.dims)
    labels = mask.groups if mask.groups is not None else ("ungrouped",) * mask.n_neurons
    neurons = []
    for i in range(mask.n_neurons):
        active = np.flatnonzero(mask.mask[i])
        w = codebook.weights[i, active]
        top = int(np.argmax(np.abs(w)))
        if (w < 0.0).any():
            kind = "inhibitory-combination"
        elif (np.abs(w) >= combination_threshold * np.abs(w[top])).sum() >= 2:
            kind = "combination"
        else:
            kind = "single-joint"
        neurons.append(
            NeuronEncoding(
                index=i,
                group=home_group(labels[i]),
                active_joints=tuple(names[j] for j in active),
                weights=tuple(float(v) for v in w),
                argmax_joint=names[int(active[top])],
                classification=kind,
            )
        )
    if mask.groups is not None:
        order = mask.group_order()
        indices = mask.group_indices()
    else:
        order = ("ungrouped",)
        indices = {"ungrouped": np.arange(mask.n_neurons)}
    k = len(order)
    dist = np.zeros((k, k), dtype=np.float64)
    for a in range(k):
        for b in range(a + 1, k):
            pairs = [
                _union_distance(codebook.weights, mask.mask, int(i), int(j))
                for i in indices[order[a]]
                for j in indices[order[b]]
            ]
            dist[a, b] = dist[b, a] = float(np.mean(pairs))
    return EncodingReport(neurons, order, dist)


def cluster_separation_ratio(report: EncodingReport) -> float:
    """Shoulder-to-elbow cluster distance over the mean of the four distances
    from those clusters to head and wrist.

    A descriptive statistic: values near 0.5 would mean the shoulder and
    elbow clusters sit at half the distance of the others.
    """
    order = report.group_order
    for g in BODY_GROUPS:
        if g not in order:
            raise ValueError(f"report is missing group {g!r}")
    pos = {g: order.index(g) for g in BODY_GROUPS}
    d = report.group_distances
    near = d[pos["shoulder"], pos["elbow"]]
    cross = (
        d[pos["shoulder"], pos["head"]],
        d[pos["shoulder"], pos["wrist"]],
        d[pos["elbow"], pos["head"]],
        d[pos["elbow"], pos["wrist"]],
    )
    denom = float(np.mean(cross))
    if denom == 0.0:
        warnings.warn("all cross-group distances are zero; ratio undefined", stacklevel=2)
        return float("nan")
    return float(near / denom)


def heatmap_csv_text(grid: np.ndarray, connected: np.ndarray) -> str:
    """Render one joint's grid as CSV; not-connected cells become ``NC``."""
    lines = []
    for r in range(grid.shape[0]):
        cells = [
            format_float(grid[r, c]) if connected[r, c] else "NC"
            for c in range(grid.shape[1])
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def parse_heatmap_csv(text: str, source: str = "<string>") -> tuple[np.ndarray, np.ndarray]:
    """Inverse of ``heatmap_csv_text``: (grid with NaN at NC, connected)."""
    rows = text.split("\n")
    while rows and rows[-1] == "":
        rows.pop()
    if not rows:
        raise ParseError(f"{source}: empty heatmap")
    parsed = []
    flags = []
    width = None
    for r, line in enumerate(rows):
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise ParseError(f"{source}: line {r + 1}: expected {width} columns")
        vals = []
        conn = []
        for c, cell in enumerate(cells):
            if cell == "NC":
                vals.append(np.nan)
                conn.append(False)
            else:
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{source}: line {r + 1}, column {c + 1}: not a number: {cell!r}"
                    ) from None
                conn.append(True)
        parsed.append(vals)
        flags.append(conn)
    return np.array(parsed, dtype=np.float64), np.array(flags, dtype=bool)


def heatmap_pgm_bytes(grid: np.ndarray, connected: np.ndarray) -> tuple[bytes, bytes]:
    """(image, sidecar-mask) binary PGMs for one joint.

    Connected weights are min-max scaled to 0..255 per grid; not-connected
    cells render 0 in the image and 0 in the sidecar (connected cells 255).
    """
    rows, cols = grid.shape
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    pixels = np.zeros((rows, cols), dtype=np.uint8)
    if connected.any():
        vals = grid[connected]
        vmin, vmax = float(vals.min()), float(vals.max())
        if vmax > vmin:
            scaled = np.rint((grid[connected] - vmin) / (vmax - vmin) * 255.0)
            pixels[connected] = np.clip(scaled, 0, 255).astype(np.uint8)
        else:
            pixels[connected] = 255
    sidecar = np.where(connected, 255, 0).astype(np.uint8)
    return header + pixels.tobytes(), header + sidecar.tobytes()


def report_json_dict(report: EncodingReport, dmap: NeuronDistanceMap) -> dict:
    """Single JSON-ready document combining the encoding report and the
    neuron distance map (fixed key order for byte-stable export)."""
    return {
        "group_order": list(report.group_order),
        "group_distances": [list(row) for row in report.group_distances.tolist()],
        "neurons": [
            {
                "index": n.index,
                "group": n.group,
                "active_joints": list(n.active_joints),
                "weights": list(n.weights),
                "argmax_joint": n.argmax_joint,
                "classification": n.classification,
            }
            for n in report.neurons
        ],
        "distance_map": [list(row) for row in dmap.grid.tolist()],
    }
