"""On-disk formats: chain files, dataset CSVs, trace CSVs, and JSON reports.

A chain is stored as ``<name>.json`` (the manifest) plus ``<name>.bin`` (the
payload): T consecutive p x k matrices of little-endian float64 in
column-major order, followed by T length-p residual-variance vectors when the
manifest flags them.  Every float written to CSV uses repr-exact formatting
so write -> read -> write round-trips byte-identically.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .core import Chain

__all__ = [
    "ChainFileManifest",
    "FileFormatError",
    "read_chain",
    "read_dataset",
    "read_traces",
    "write_chain",
    "write_dataset",
    "write_report",
    "write_traces",
]

FORMAT_VERSION = 1
LAYOUT = "column-major"
DTYPE = "f64-le"
FLOAT_FORMAT = "%.17g"


class FileFormatError(RuntimeError):
    """Malformed or inconsistent input file (manifest/payload/CSV)."""


@dataclass(frozen=True)
class ChainFileManifest:
    format_version: int
    p: int
    k: int
    T: int
    layout: str
    dtype: str
    has_residual_variances: bool
    seed_provenance: str | None = None


def _paths(base) -> tuple[Path, Path]:
    base = Path(base)
    if base.suffix in (".json", ".bin"):
        base = base.with_suffix("")
    return base.with_suffix(".json"), base.with_suffix(".bin")


def write_chain(base, chain: Chain, seed_provenance: str | None = None) -> ChainFileManifest:
    """Write ``chain`` as a manifest/payload pair at ``<base>.json`` / ``<base>.bin``."""
    manifest_path, payload_path = _paths(base)
    manifest = ChainFileManifest(
        format_version=FORMAT_VERSION,
        p=chain.n_variables,
        k=chain.n_factors,
        T=chain.n_samples,
        layout=LAYOUT,
        dtype=DTYPE,
        has_residual_variances=chain.residual_variances is not None,
        seed_provenance=seed_provenance,
    )
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    manifest_path.write_text(json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n")
    # transpose(0, 2, 1) then C-ravel emits each sample in column-major order
    payload = np.ascontiguousarray(chain.samples.transpose(0, 2, 1)).astype("<f8").tobytes()
    if chain.residual_variances is not None:
        payload += np.ascontiguousarray(chain.residual_variances).astype("<f8").tobytes()
    payload_path.write_bytes(payload)
    return manifest


def _read_manifest(manifest_path: Path) -> ChainFileManifest:
    try:
        raw = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"cannot read chain manifest {manifest_path}: {exc}") from exc
    try:
        manifest = ChainFileManifest(**raw)
    except TypeError as exc:
        raise FileFormatError(f"invalid manifest fields in {manifest_path}: {exc}") from exc
    if manifest.format_version != FORMAT_VERSION:
        raise FileFormatError(
            f"unsupported format_version {manifest.format_version} in {manifest_path}"
        )
    if manifest.layout != LAYOUT or manifest.dtype != DTYPE:
        raise FileFormatError(
            f"unsupported layout/dtype ({manifest.layout}, {manifest.dtype}) in {manifest_path}"
        )
    if min(manifest.p, manifest.k, manifest.T) < 1:
        raise FileFormatError(f"non-positive dimensions in {manifest_path}")
    return manifest


def read_chain(base) -> tuple[Chain, ChainFileManifest]:
    """Read a manifest/payload chain pair, verifying payload length exactly."""
    manifest_path, payload_path = _paths(base)
    manifest = _read_manifest(manifest_path)
    try:
        payload = payload_path.read_bytes()
    except OSError as exc:
        raise FileFormatError(f"cannot read chain payload {payload_path}: {exc}") from exc

    t, p, k = manifest.T, manifest.p, manifest.k
    samples_bytes = t * p * k * 8
    expected = samples_bytes + (t * p * 8 if manifest.has_residual_variances else 0)
    if len(payload) != expected:
        raise FileFormatError(
            f"payload length mismatch in {payload_path}: manifest implies {expected} bytes "
            f"but file has {len(payload)} (divergence at offset {min(expected, len(payload))})"
        )
    samples = (
        np.frombuffer(payload[:samples_bytes], dtype="<f8")
        .reshape(t, k, p)
        .transpose(0, 2, 1)
    )
    variances = None
    if manifest.has_residual_variances:
        variances = np.frombuffer(payload[samples_bytes:], dtype="<f8").reshape(t, p)
    try:
        chain = Chain(samples, variances)
    except ValueError as exc:
        raise FileFormatError(f"invalid chain content in {payload_path}: {exc}") from exc
    return chain, manifest


def write_dataset(path, data: np.ndarray) -> None:
    """Write an (n, p) data matrix as CSV with a v1..vp header row."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError(f"data must be 2-dimensional, got shape {data.shape}")
    header = ",".join(f"v{j + 1}" for j in range(data.shape[1]))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, data, fmt=FLOAT_FORMAT, delimiter=",", header=header, comments="")


def read_dataset(path) -> np.ndarray:
    """Read a dataset CSV written by :func:`write_dataset`."""
    path = Path(path)
    try:
        with path.open() as fh:
            header = fh.readline().strip()
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise FileFormatError(f"cannot read dataset {path}: {exc}") from exc
    if not header.startswith("v1"):
        raise FileFormatError(f"dataset {path} is missing the v1..vp header row")
    if data.size == 0:
        raise FileFormatError(f"dataset {path} has no data rows")
    expected_cols = header.count(",") + 1
    if data.shape[1] != expected_cols:
        raise FileFormatError(
            f"dataset {path}: header names {expected_cols} columns, rows have {data.shape[1]}"
        )
    return data


def write_traces(path, traces: np.ndarray, labels: list[str]) -> None:
    """Write trace series as CSV, one labelled column per requested entry."""
    traces = np.asarray(traces, dtype=np.float64)
    if traces.ndim != 2 or traces.shape[1] != len(labels):
        raise ValueError("traces must be (T, len(labels))")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, traces, fmt=FLOAT_FORMAT, delimiter=",", header=",".join(labels), comments="")


def read_traces(path) -> tuple[np.ndarray, list[str]]:
    path = Path(path)
    try:
        with path.open() as fh:
            labels = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise FileFormatError(f"cannot read traces {path}: {exc}") from exc
    return data, labels


def write_report(path, report: dict) -> None:
    """Write a schema-versioned JSON report with deterministic serialization."""
    payload = {"schema_version": 1, **report}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
