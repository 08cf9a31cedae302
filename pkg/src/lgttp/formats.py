"""On-disk formats: embeddings container, parameter checkpoints, lexicon
files, plan JSON, and the comparison CSV.

Embeddings container (magic "LGTE", little-endian throughout):

    bytes 0..3   magic "LGTE"
    u32          format version, currently 1
    u32          n_frames
    u32          dim
    f32 matrix   n_frames * dim values, row-major
    u32          query flag, 0 or 1 (block may be absent entirely)
    f32 vector   dim values, present only when the flag is 1

Parameter checkpoint: one UTF-8 JSON header line (format tag, version,
mode, dim, max_frames, seed, training config echo, and a manifest of byte
offsets per tensor), then raw little-endian float64 tensors concatenated
in the manifest's fixed order.

Both readers fail with a typed code: io-error, bad-magic, bad-version,
truncated, non-finite, or trailing-data.  Values are stored f32 in the
embeddings container but all computation upstream runs in f64.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path
from typing import IO, Optional, Sequence, Union

import numpy as np

from .adaptation import AdaptationMode, AdapterParams, PositionEmbedParams
from .errors import FileIOError, FormatError, InvalidInputError
from .harness import ComparisonRow
from .parsing import CueCategory, MarkerLexicon
from .planner import PipelineParams, PruningPlan
from .relevance import FrameEmbeddings, QueryEmbedding, RelevanceParams
from .training import TrainConfig, TrainingSample

MAGIC = b"LGTE"
EMBEDDINGS_VERSION = 1
CHECKPOINT_FORMAT = "lgttp-checkpoint"
CHECKPOINT_VERSION = 1

#: Fixed tensor order per mode; offsets in the manifest follow this order.
CHECKPOINT_TENSOR_ORDER: dict[AdaptationMode, tuple[str, ...]] = {
    AdaptationMode.TIMESTAMP_AWARE: ("rel_scale", "rel_offset"),
    AdaptationMode.POSITION_EMBEDDING: ("pos_w", "pos_b", "rel_scale", "rel_offset"),
    AdaptationMode.LEARNED_ADAPTER: (
        "embed_table",
        "mlp_w1",
        "mlp_b1",
        "mlp_w2",
        "mlp_b2",
        "ln_gain",
        "ln_bias",
        "scale",
        "rel_scale",
        "rel_offset",
    ),
}


def _read_bytes(path: Union[str, Path]) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise FileIOError(f"cannot read {path}: {exc}") from exc


def _write_bytes(path: Union[str, Path], payload: bytes) -> None:
    try:
        Path(path).write_bytes(payload)
    except OSError as exc:
        raise FileIOError(f"cannot write {path}: {exc}") from exc


# =============================================================================
# Embeddings container
# =============================================================================


def write_embeddings(
    path: Union[str, Path],
    embeddings: FrameEmbeddings,
    query: Optional[QueryEmbedding] = None,
) -> None:
    """Serialize embeddings (and optionally the query vector) to one file."""
    matrix = embeddings.data.astype("<f4")
    if not np.all(np.isfinite(matrix)):
        raise InvalidInputError("embeddings overflow 32-bit float storage")
    parts = [
        MAGIC,
        struct.pack("<III", EMBEDDINGS_VERSION, embeddings.n_frames, embeddings.dim),
        matrix.tobytes(order="C"),
    ]
    if query is None:
        parts.append(struct.pack("<I", 0))
    else:
        if query.dim != embeddings.dim:
            raise InvalidInputError(
                f"query is {query.dim}-d but embeddings are {embeddings.dim}-d"
            )
        vector = query.vector.astype("<f4")
        if not np.all(np.isfinite(vector)):
            raise InvalidInputError("query embedding overflows 32-bit float storage")
        parts.append(struct.pack("<I", 1))
        parts.append(vector.tobytes(order="C"))
    _write_bytes(path, b"".join(parts))


def read_embeddings(
    path: Union[str, Path]
) -> tuple[FrameEmbeddings, Optional[QueryEmbedding]]:
    """Parse an embeddings container; see the module docstring for codes."""
    blob = _read_bytes(path)
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise FormatError(f"{path}: not an embeddings container", code="bad-magic")
    if len(blob) < 16:
        raise FormatError(f"{path}: header cut short", code="truncated")
    version, n_frames, dim = struct.unpack_from("<III", blob, 4)
    if version != EMBEDDINGS_VERSION:
        raise FormatError(
            f"{path}: unsupported version {version}, expected {EMBEDDINGS_VERSION}",
            code="bad-version",
        )
    if n_frames < 1 or dim < 1:
        raise InvalidInputError(f"{path}: degenerate shape ({n_frames}, {dim})")
    offset = 16
    payload_bytes = 4 * n_frames * dim
    if len(blob) < offset + payload_bytes:
        raise FormatError(
            f"{path}: payload needs {payload_bytes} bytes, "
            f"file has {len(blob) - offset}",
            code="truncated",
        )
    matrix = np.frombuffer(blob, dtype="<f4", count=n_frames * dim, offset=offset)
    matrix = matrix.reshape(n_frames, dim).astype(np.float64)
    if not np.all(np.isfinite(matrix)):
        raise FormatError(f"{path}: payload contains non-finite values", code="non-finite")
    offset += payload_bytes

    query: Optional[QueryEmbedding] = None
    if offset < len(blob):
        if len(blob) < offset + 4:
            raise FormatError(f"{path}: query flag cut short", code="truncated")
        (flag,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        if flag not in (0, 1):
            raise InvalidInputError(f"{path}: query flag must be 0 or 1, got {flag}")
        if flag == 1:
            if len(blob) < offset + 4 * dim:
                raise FormatError(f"{path}: query vector cut short", code="truncated")
            vector = np.frombuffer(blob, dtype="<f4", count=dim, offset=offset)
            offset += 4 * dim
            vector = vector.astype(np.float64)
            if not np.all(np.isfinite(vector)):
                raise FormatError(
                    f"{path}: query vector contains non-finite values", code="non-finite"
                )
            query = QueryEmbedding(vector)
    if offset != len(blob):
        raise FormatError(
            f"{path}: {len(blob) - offset} unexpected bytes after the parsed structure",
            code="trailing-data",
        )
    return FrameEmbeddings(matrix), query


# =============================================================================
# Parameter checkpoints
# =============================================================================


def _checkpoint_tensors(
    mode: AdaptationMode, params: PipelineParams
) -> dict[str, np.ndarray]:
    rel = params.relevance
    tensors: dict[str, np.ndarray] = {}
    if mode is AdaptationMode.POSITION_EMBEDDING:
        if not isinstance(params.adaptation, PositionEmbedParams):
            raise InvalidInputError("position checkpoint needs PositionEmbedParams")
        tensors["pos_w"] = np.asarray(params.adaptation.w_p)
        tensors["pos_b"] = np.asarray(params.adaptation.b_p)
    elif mode is AdaptationMode.LEARNED_ADAPTER:
        if not isinstance(params.adaptation, AdapterParams):
            raise InvalidInputError("adapter checkpoint needs AdapterParams")
        a = params.adaptation
        tensors.update(
            embed_table=np.asarray(a.embed_table),
            mlp_w1=np.asarray(a.mlp_w1),
            mlp_b1=np.asarray(a.mlp_b1),
            mlp_w2=np.asarray(a.mlp_w2),
            mlp_b2=np.asarray(a.mlp_b2),
            ln_gain=np.asarray(a.ln_gain),
            ln_bias=np.asarray(a.ln_bias),
            scale=np.array([a.scale]),
        )
    elif params.adaptation is not None:
        raise InvalidInputError("timestamp checkpoint takes no adaptation params")
    tensors["rel_scale"] = np.array([rel.scale])
    tensors["rel_offset"] = np.array([rel.offset])
    return tensors


def save_checkpoint(
    path: Union[str, Path],
    mode: AdaptationMode,
    params: PipelineParams,
    *,
    dim: int,
    seed: int = 0,
    train_config: Optional[TrainConfig] = None,
) -> None:
    """Write a parameter checkpoint: JSON header line + raw f64 tensors."""
    mode = AdaptationMode(mode)
    tensors = _checkpoint_tensors(mode, params)
    order = CHECKPOINT_TENSOR_ORDER[mode]
    manifest = []
    offset = 0
    blobs = []
    for name in order:
        arr = np.ascontiguousarray(tensors[name], dtype="<f8")
        blob = arr.tobytes(order="C")
        manifest.append({"name": name, "offset": offset, "count": int(arr.size)})
        offset += len(blob)
        blobs.append(blob)
    max_frames = None
    if isinstance(params.adaptation, AdapterParams):
        max_frames = params.adaptation.max_frames
    header: dict = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "mode": mode.value,
        "dim": int(dim),
        "max_frames": max_frames,
        "seed": int(seed),
        "train_config": None
        if train_config is None
        else {
            "learning_rate": train_config.learning_rate,
            "weight_decay": train_config.weight_decay,
            "epochs": train_config.epochs,
            "batch_size": train_config.batch_size,
            "seed": train_config.seed,
        },
        "tensors": manifest,
    }
    payload = json.dumps(header, separators=(",", ":")).encode("utf-8") + b"\n"
    _write_bytes(path, payload + b"".join(blobs))


def load_checkpoint(
    path: Union[str, Path]
) -> tuple[AdaptationMode, PipelineParams, dict]:
    """Read a checkpoint back; returns (mode, params, header)."""
    blob = _read_bytes(path)
    newline = blob.find(b"\n")
    if newline < 0:
        raise FormatError(f"{path}: missing header line", code="bad-magic")
    try:
        header = json.loads(blob[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: header is not JSON: {exc}", code="bad-magic") from exc
    if not isinstance(header, dict) or header.get("format") != CHECKPOINT_FORMAT:
        raise FormatError(f"{path}: not a parameter checkpoint", code="bad-magic")
    if header.get("version") != CHECKPOINT_VERSION:
        raise FormatError(
            f"{path}: unsupported checkpoint version {header.get('version')!r}",
            code="bad-version",
        )
    try:
        mode = AdaptationMode(header["mode"])
        dim = int(header["dim"])
        manifest = header["tensors"]
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidInputError(f"{path}: malformed header: {exc}") from exc
    if dim < 1:
        raise InvalidInputError(f"{path}: dim must be >= 1, got {dim}")

    order = CHECKPOINT_TENSOR_ORDER[mode]
    if not isinstance(manifest, list) or [t.get("name") for t in manifest] != list(order):
        raise InvalidInputError(
            f"{path}: manifest must list tensors in the order {list(order)}"
        )
    payload = blob[newline + 1 :]
    tensors: dict[str, np.ndarray] = {}
    end = 0
    for entry in manifest:
        try:
            offset = int(entry["offset"])
            count = int(entry["count"])
        except (KeyError, ValueError, TypeError) as exc:
            raise InvalidInputError(f"{path}: malformed manifest entry: {exc}") from exc
        nbytes = 8 * count
        if offset != end:
            raise InvalidInputError(
                f"{path}: tensor {entry['name']!r} offset {offset} leaves a gap"
            )
        if len(payload) < offset + nbytes:
            raise FormatError(
                f"{path}: tensor {entry['name']!r} cut short", code="truncated"
            )
        arr = np.frombuffer(payload, dtype="<f8", count=count, offset=offset).copy()
        if not np.all(np.isfinite(arr)):
            raise FormatError(
                f"{path}: tensor {entry['name']!r} contains non-finite values",
                code="non-finite",
            )
        tensors[entry["name"]] = arr
        end = offset + nbytes
    if end != len(payload):
        raise FormatError(
            f"{path}: {len(payload) - end} unexpected bytes after the last tensor",
            code="trailing-data",
        )

    relevance = RelevanceParams(
        scale=float(tensors["rel_scale"][0]), offset=float(tensors["rel_offset"][0])
    )
    if mode is AdaptationMode.TIMESTAMP_AWARE:
        params = PipelineParams(adaptation=None, relevance=relevance)
    elif mode is AdaptationMode.POSITION_EMBEDDING:
        for name in ("pos_w", "pos_b"):
            if tensors[name].shape[0] != dim:
                raise InvalidInputError(f"{path}: {name} length does not match dim")
        params = PipelineParams(
            adaptation=PositionEmbedParams(w_p=tensors["pos_w"], b_p=tensors["pos_b"]),
            relevance=relevance,
        )
    else:
        max_frames = header.get("max_frames")
        if not isinstance(max_frames, int) or max_frames < 1:
            raise InvalidInputError(f"{path}: adapter checkpoint needs max_frames")
        table = tensors["embed_table"]
        if table.size != max_frames * dim:
            raise InvalidInputError(f"{path}: embed_table size does not match header")
        adapter = AdapterParams(
            embed_table=table.reshape(max_frames, dim),
            mlp_w1=tensors["mlp_w1"].reshape(dim, dim),
            mlp_b1=tensors["mlp_b1"],
            mlp_w2=tensors["mlp_w2"].reshape(dim, dim),
            mlp_b2=tensors["mlp_b2"],
            ln_gain=tensors["ln_gain"],
            ln_bias=tensors["ln_bias"],
            scale=float(tensors["scale"][0]),
        )
        params = PipelineParams(adaptation=adapter, relevance=relevance)
    return mode, params, header


# =============================================================================
# Lexicon files
# =============================================================================


def load_lexicon(path: Union[str, Path]) -> MarkerLexicon:
    """Read a lexicon JSON document: {"explicit": {...}, "implicit": {...}}."""
    blob = _read_bytes(path)
    try:
        doc = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"{path}: lexicon is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidInputError(f"{path}: lexicon document must be a JSON object")
    unknown = set(doc) - {"explicit", "implicit"}
    if unknown:
        raise InvalidInputError(f"{path}: unknown lexicon keys: {sorted(unknown)}")
    explicit = doc.get("explicit", {})
    implicit = doc.get("implicit", {})
    if not isinstance(explicit, dict) or not isinstance(implicit, dict):
        raise InvalidInputError(f"{path}: lexicon maps must be JSON objects")
    return MarkerLexicon(explicit=explicit, implicit=implicit)


def save_lexicon(path: Union[str, Path], lexicon: MarkerLexicon) -> None:
    doc = {
        "explicit": {k: v.value for k, v in lexicon.explicit.items()},
        "implicit": {k: v.value for k, v in lexicon.implicit.items()},
    }
    _write_bytes(path, (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8"))


# =============================================================================
# Plan JSON and comparison CSV
# =============================================================================


def plan_to_json(plan: PruningPlan) -> str:
    """Stable-keyed, indented JSON text for a plan (trailing newline)."""
    return json.dumps(plan.to_json_dict(), indent=2) + "\n"


def write_plan(path: Union[str, Path], plan: PruningPlan) -> None:
    _write_bytes(path, plan_to_json(plan).encode("utf-8"))


REPORT_CSV_HEADER = (
    "strategy",
    "marker_kind",
    "n_frames",
    "alpha",
    "mean_window_retention",
    "std_window_retention",
    "mean_token_ratio",
)


def _marker_kind_name(kind: Optional[CueCategory]) -> str:
    return kind.value if kind is not None else "none"


def write_report_csv(stream: IO[str], rows: Sequence[ComparisonRow]) -> None:
    """Write comparison rows with the fixed header; deterministic bytes."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(REPORT_CSV_HEADER)
    for row in rows:
        writer.writerow(
            [
                row.strategy.value,
                _marker_kind_name(row.marker_kind),
                row.n_frames,
                repr(row.alpha),
                repr(row.mean_window_retention),
                repr(row.std_window_retention),
                repr(row.mean_token_ratio),
            ]
        )


# =============================================================================
# Training-set directories
# =============================================================================

_LABELS_SUFFIX = ".labels"


def save_training_set(directory: Union[str, Path], samples: Sequence[TrainingSample]) -> None:
    """Write one embeddings container plus one labels file per sample."""
    root = Path(directory)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise FileIOError(f"cannot create {root}: {exc}") from exc
    for k, sample in enumerate(samples):
        stem = root / f"sample_{k:04d}"
        write_embeddings(stem.with_suffix(".lgte"), sample.embeddings, sample.query)
        labels = "".join(f"{int(v)}\n" for v in sample.labels)
        _write_bytes(stem.with_suffix(_LABELS_SUFFIX), labels.encode("ascii"))


def load_training_set(directory: Union[str, Path]) -> list[TrainingSample]:
    """Read back a training-set directory (sorted by file name)."""
    root = Path(directory)
    if not root.is_dir():
        raise FileIOError(f"{root} is not a directory")
    samples = []
    paths = sorted(root.glob("*.lgte"))
    if not paths:
        raise InvalidInputError(f"no .lgte sample files under {root}")
    for path in paths:
        embeddings, query = read_embeddings(path)
        if query is None:
            raise InvalidInputError(f"{path}: training samples need a query block")
        labels_path = path.with_suffix(_LABELS_SUFFIX)
        text = _read_bytes(labels_path).decode("ascii", errors="strict")
        try:
            labels = np.array([int(line) for line in text.split()], dtype=np.float64)
        except ValueError as exc:
            raise InvalidInputError(f"{labels_path}: labels must be 0/1 integers") from exc
        samples.append(TrainingSample(embeddings=embeddings, query=query, labels=labels))
    return samples
