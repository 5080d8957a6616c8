"""Restricted receptive fields for the map: masked winner search and
mask-confined updates.

Each output neuron owns a boolean receptive field over the input dimensions.
Winner search only compares active dimensions, and weight updates never touch
inactive positions. With an all-true mask, unnormalized distances, and global
winner scope the behavior reduces bit-exactly to the baseline in ``rfsom.som``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fileio import ParseError, atomic_write_text
from .lattice import LatticeSpec, distance_matrix, neighborhood_weight
from .som import (
    Codebook,
    TrainLog,
    TrainSchedule,
    _as_dataset,
    _as_sample,
    _epoch_metrics,
    shuffle_order,
)

BMU_SCOPES = ("global-masked", "per-group")
NORMALIZATIONS = ("rms-per-active-dim", "unnormalized")

# canonical body-group order used for labels and report rows
BODY_GROUPS = ("head", "shoulder", "elbow", "wrist")
GROUP_JOINTS = {"head": (0, 1), "shoulder": (2, 3), "elbow": (4, 5), "wrist": (6,)}


@dataclass(frozen=True)
class MrfConfig:
    """How masked winner search behaves.

    ``bmu_scope``: "global-masked" picks one winner over the whole map;
    "per-group" picks an independent winner inside every base group.
    ``distance_normalization``: "rms-per-active-dim" divides each masked
    distance by sqrt(active count) so small and large receptive fields
    compete on comparable scale; "unnormalized" leaves raw masked distances.
    """

    bmu_scope: str = "global-masked"
    distance_normalization: str = "rms-per-active-dim"

    def __post_init__(self) -> None:
        if self.bmu_scope not in BMU_SCOPES:
            raise ValueError(f"unknown bmu_scope {self.bmu_scope!r}, expected one of {BMU_SCOPES}")
        if self.distance_normalization not in NORMALIZATIONS:
            raise ValueError(
                f"unknown distance_normalization {self.distance_normalization!r}, "
                f"expected one of {NORMALIZATIONS}"
            )


def home_group(label: str) -> str:
    """Base group of a neuron label: "overlap-head-shoulder" belongs to "head"."""
    if label.startswith("overlap-"):
        parts = label.split("-")
        if len(parts) < 3 or not parts[1]:
            raise ValueError(f"malformed overlap label {label!r}")
        return parts[1]
    return label


@dataclass
class ReceptiveFieldMask:
    """Boolean receptive fields, one row per neuron, plus optional group labels.

    ``mask[n, d]`` is True when neuron ``n`` is connected to input dimension
    ``d``. Labels tag neurons for per-group winner search and reporting;
    overlap neurons carry an ``overlap-<home>-...`` label.
    """

    rows: int
    cols: int
    mask: np.ndarray
    groups: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"mask grid must be at least 1x1, got {self.rows}x{self.cols}")
        m = np.asarray(self.mask)
        if m.dtype != np.bool_:
            if not np.isin(m, (0, 1)).all():
                raise ValueError("mask entries must be boolean (0/1)")
            m = m.astype(bool)
        if m.ndim != 2 or m.shape[0] != self.rows * self.cols:
            raise ValueError(
                f"mask has shape {m.shape}, expected ({self.rows * self.cols}, dims)"
            )
        if not m.any(axis=1).all():
            bad = int(np.flatnonzero(~m.any(axis=1))[0])
            raise ValueError(f"neuron {bad} has no active input dimension")
        if not m.any(axis=0).all():
            bad = int(np.flatnonzero(~m.any(axis=0))[0])
            raise ValueError(f"input dimension {bad} is active for no neuron")
        self.mask = m
        if self.groups is not None:
            groups = tuple(self.groups)
            if len(groups) != m.shape[0]:
                raise ValueError(
                    f"got {len(groups)} group labels for {m.shape[0]} neurons"
                )
            for label in groups:
                if not label or "\n" in label or " " in label:
                    raise ValueError(f"invalid group label {label!r}")
                home_group(label)
            self.groups = groups

    @property
    def n_neurons(self) -> int:
        return self.mask.shape[0]

    @property
    def dims(self) -> int:
        return self.mask.shape[1]

    @property
    def active_counts(self) -> np.ndarray:
        return self.mask.sum(axis=1)

    def group_order(self) -> tuple[str, ...]:
        """Distinct base groups: canonical body groups first, then any custom
        labels in first-appearance order."""
        if self.groups is None:
            raise ValueError("mask has no group labels")
        seen = []
        for label in self.groups:
            g = home_group(label)
            if g not in seen:
                seen.append(g)
        known = [g for g in BODY_GROUPS if g in seen]
        return tuple(known + [g for g in seen if g not in BODY_GROUPS])

    def group_indices(self) -> dict[str, np.ndarray]:
        """Neuron indices per base group, ascending within each group."""
        homes = [home_group(label) for label in self.groups or ()]
        if not homes:
            raise ValueError("mask has no group labels")
        return {
            g: np.array([i for i, h in enumerate(homes) if h == g], dtype=np.intp)
            for g in self.group_order()
        }


def default_quadrant_mask() -> ReceptiveFieldMask:
    """The built-in 16-neuron x 7-joint mask.

    The 4x4 grid splits into four 2x2 quadrants, one per body group (head
    top-left, shoulder top-right, wrist bottom-left, elbow bottom-right).
    A neuron bordering a foreign quadrant additionally takes the union with
    that quadrant's joints, giving the partially overlapping fields.
    """
    rows = cols = 4

    def quadrant(r: int, c: int) -> str:
        if r < 2:
            return "head" if c < 2 else "shoulder"
        return "wrist" if c < 2 else "elbow"

    mask = np.zeros((rows * cols, 7), dtype=bool)
    labels = []
    for r in range(rows):
        for c in range(cols):
            own = quadrant(r, c)
            others = []
            for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if 0 <= nr < rows and 0 <= nc < cols:
                    q = quadrant(nr, nc)
                    if q != own and q not in others:
                        others.append(q)
            joints = set(GROUP_JOINTS[own])
            for g in others:
                joints.update(GROUP_JOINTS[g])
            mask[r * cols + c, sorted(joints)] = True
            if others:
                tail = "-".join(g for g in BODY_GROUPS if g in others)
                labels.append(f"overlap-{own}-{tail}")
            else:
                labels.append(own)
    return ReceptiveFieldMask(rows, cols, mask, tuple(labels))


def _check_mask(mask: ReceptiveFieldMask, codebook: Codebook) -> None:
    if mask.mask.shape != codebook.weights.shape:
        raise ValueError(
            f"mask shape {mask.mask.shape} does not match codebook shape "
            f"{codebook.weights.shape}"
        )


def _norms(mask: ReceptiveFieldMask, cfg: MrfConfig) -> np.ndarray | None:
    if cfg.distance_normalization == "rms-per-active-dim":
        return np.sqrt(mask.active_counts.astype(np.float64))
    return None


def masked_distance(
    sample, neuron: int, codebook: Codebook, mask: ReceptiveFieldMask, cfg: MrfConfig = MrfConfig()
) -> float:
    """Euclidean distance between sample and one neuron over its active
    dimensions only (optionally RMS-normalized by the active count)."""
    _check_mask(mask, codebook)
    x = _as_sample(sample, codebook.dims)
    if not 0 <= neuron < codebook.n_neurons:
        raise ValueError(f"neuron index {neuron} out of range")
    d = _bmu_distances(codebook.weights, x, mask.mask.astype(np.float64), _norms(mask, cfg))
    return float(d[neuron])


def _bmu_distances(W: np.ndarray, x: np.ndarray, Mf: np.ndarray, norms) -> np.ndarray:
    d = np.sqrt((((W - x) ** 2) * Mf).sum(axis=1))
    if norms is not None:
        d = d / norms
    return d


def mrf_find_bmu(
    sample, codebook: Codebook, mask: ReceptiveFieldMask, cfg: MrfConfig = MrfConfig()
):
    """Winner(s) under the masked distance.

    Returns a single neuron index under "global-masked" scope, or a dict
    mapping each base group to its internal winner under "per-group" scope.
    Ties break to the smallest row-major index either way.
    """
    _check_mask(mask, codebook)
    x = _as_sample(sample, codebook.dims)
    d = _bmu_distances(codebook.weights, x, mask.mask.astype(np.float64), _norms(mask, cfg))
    if cfg.bmu_scope == "global-masked":
        return int(np.argmin(d))
    if mask.groups is None:
        raise ValueError("per-group winner selection needs group labels on the mask")
    return {g: int(idx[np.argmin(d[idx])]) for g, idx in mask.group_indices().items()}


def mrf_train(
    codebook: Codebook,
    dataset,
    mask: ReceptiveFieldMask,
    schedule: TrainSchedule,
    cfg: MrfConfig = MrfConfig(),
) -> tuple[Codebook, TrainLog]:
    """Masked map training.

    Same loop as the baseline, except winners come from the masked search,
    each neuron's update is confined to its active dimensions (inactive
    weights stay bit-identical to initialization), and under per-group scope
    each group's winner drives only that group's neurons.
    """
    _check_mask(mask, codebook)
    X = _as_dataset(dataset, codebook.dims)
    W = codebook.weights.copy()
    D = distance_matrix(codebook.lattice)
    Mb = mask.mask
    Mf = Mb.astype(np.float64)
    norms = _norms(mask, cfg)
    per_group = cfg.bmu_scope == "per-group"
    if per_group:
        groups = mask.group_indices()
    n = X.shape[0]
    total = schedule.epochs * n
    alphas = schedule.alpha_values(total)
    sigmas = schedule.sigma_values(total)
    log = TrainLog()
    t = 0
    for epoch in range(schedule.epochs):
        for i in shuffle_order(schedule.seed, epoch, n):
            x = X[i]
            d = _bmu_distances(W, x, Mf, norms)
            if per_group:
                h = np.empty(codebook.n_neurons, dtype=np.float64)
                for idx in groups.values():
                    b = int(idx[np.argmin(d[idx])])
                    h[idx] = neighborhood_weight(D[b][idx], sigmas[t])
            else:
                b = int(np.argmin(d))
                h = neighborhood_weight(D[b], sigmas[t])
            delta = (alphas[t] * h)[:, None] * (x - W)
            # np.where keeps inactive positions bit-identical (W += 0.0 would
            # flip the sign of -0.0 entries)
            W = np.where(Mb, W + delta, W)
            t += 1
        qe, te = _epoch_metrics(_masked_sample_distances(W, X, Mf, norms), D)
        log.quantization_errors.append(qe)
        log.topographic_errors.append(te)
    return Codebook(W, codebook.lattice), log


def _masked_sample_distances(W, X, Mf, norms) -> np.ndarray:
    d = np.sqrt((((X[:, None, :] - W[None, :, :]) ** 2) * Mf[None, :, :]).sum(axis=2))
    if norms is not None:
        d = d / norms[None, :]
    return d


def masked_quantization_error(
    codebook: Codebook, dataset, mask: ReceptiveFieldMask, cfg: MrfConfig = MrfConfig()
) -> float:
    """Mean masked distance from each sample to its best-matching unit."""
    _check_mask(mask, codebook)
    X = _as_dataset(dataset, codebook.dims)
    d = _masked_sample_distances(
        codebook.weights, X, mask.mask.astype(np.float64), _norms(mask, cfg)
    )
    return float(d.min(axis=1).mean())


def masked_topographic_error(
    codebook: Codebook, dataset, mask: ReceptiveFieldMask, cfg: MrfConfig = MrfConfig()
) -> float:
    """Fraction of samples whose two best masked matches are not lattice-adjacent."""
    if codebook.n_neurons < 2:
        raise ValueError("topographic error needs at least 2 neurons")
    _check_mask(mask, codebook)
    X = _as_dataset(dataset, codebook.dims)
    d = _masked_sample_distances(
        codebook.weights, X, mask.mask.astype(np.float64), _norms(mask, cfg)
    )
    order = np.argsort(d, axis=1, kind="stable")
    D = distance_matrix(codebook.lattice)
    return float((D[order[:, 0], order[:, 1]] != 1).mean())


def save_mask(mask: ReceptiveFieldMask, path) -> None:
    """Write the plain-text mask format (see ``load_mask``)."""
    lines = [f"{mask.rows} {mask.cols} {mask.dims}"]
    for row in mask.mask:
        lines.append(" ".join("1" if v else "0" for v in row))
    if mask.groups is not None:
        for label in mask.groups:
            lines.append(f"#group {label}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_mask(path) -> ReceptiveFieldMask:
    """Read a mask file.

    Format: first line ``rows cols dims``; then rows*cols lines of
    space-separated 0/1; then optionally one ``#group <label>`` line per
    neuron. Round-trips bit-exactly through ``save_mask``.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().split("\n")
    # a single trailing newline is part of the format, not an empty record
    while raw and raw[-1] == "":
        raw.pop()
    if not raw:
        raise ParseError(f"{path}: line 1: empty mask file")
    header = raw[0].split()
    if len(header) != 3:
        raise ParseError(f"{path}: line 1: expected 'rows cols dims', got {raw[0]!r}")
    try:
        rows, cols, dims = (int(tok) for tok in header)
    except ValueError:
        raise ParseError(f"{path}: line 1: non-integer header field in {raw[0]!r}") from None
    if rows < 1 or cols < 1 or dims < 1:
        raise ParseError(f"{path}: line 1: rows, cols, dims must be positive")
    n = rows * cols
    if len(raw) - 1 < n:
        raise ParseError(f"{path}: expected {n} mask rows, file ends after line {len(raw)}")
    mask = np.zeros((n, dims), dtype=bool)
    for i in range(n):
        lineno = i + 2
        tokens = raw[1 + i].split(" ")
        if len(tokens) != dims:
            raise ParseError(
                f"{path}: line {lineno}: expected {dims} entries, got {len(tokens)}"
            )
        for j, tok in enumerate(tokens):
            if tok == "1":
                mask[i, j] = True
            elif tok != "0":
                raise ParseError(
                    f"{path}: line {lineno}: entry {j + 1} must be 0 or 1, got {tok!r}"
                )
    groups: tuple[str, ...] | None = None
    rest = raw[1 + n :]
    if rest:
        if len(rest) != n:
            raise ParseError(
                f"{path}: line {2 + n}: expected {n} '#group' lines, got {len(rest)}"
            )
        labels = []
        for k, line in enumerate(rest):
            lineno = 2 + n + k
            if not line.startswith("#group "):
                raise ParseError(f"{path}: line {lineno}: expected '#group <label>'")
            labels.append(line[len("#group ") :])
        groups = tuple(labels)
    try:
        return ReceptiveFieldMask(rows, cols, mask, groups)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
