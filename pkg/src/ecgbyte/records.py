"""ECG record container and file I/O.

Two on-disk formats are supported:

* CSV (time-major, human-inspectable): first line is the comma-separated
  lead names, each following line holds one sample per lead. Values are
  written with 6 significant digits. CSV carries no sample rate; the
  loader takes it as an argument.
* Binary (lead-major, canonical): magic ``ECGB``, version byte ``0x01``,
  u32-LE lead count C, u32-LE sample count T, f32-LE sample rate, then
  C*T f32-LE samples, lead 0 first.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    E_BAD_FORMAT,
    E_BAD_LEADS,
    E_BAD_PARAM,
    E_DIMENSION,
    E_IO,
    E_NONFINITE,
    EcgByteError,
)

BINARY_MAGIC = b"ECGB"
BINARY_VERSION = 1

# PTB-XL lead ordering; the canonical order used throughout the toolkit.
LEAD_ORDER_PTBXL = ("I", "II", "III", "aVL", "aVR", "aVF",
                    "V1", "V2", "V3", "V4", "V5", "V6")
# MIMIC-IV ECG ships the limb leads as aVR/aVF/aVL instead.
LEAD_ORDER_MIMIC = ("I", "II", "III", "aVR", "aVF", "aVL",
                    "V1", "V2", "V3", "V4", "V5", "V6")


@dataclass(frozen=True)
class LeadOrder:
    """An ordered list of lead labels."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise EcgByteError(E_BAD_LEADS, "duplicate lead names in lead order")


CANONICAL_12_LEAD = LeadOrder(LEAD_ORDER_PTBXL)


@dataclass(frozen=True)
class EcgRecord:
    """A C x T matrix of lead voltages (millivolts) plus metadata.

    ``data`` is always float64 in memory; the binary format stores f32.
    """

    data: np.ndarray
    sample_rate_hz: float
    lead_names: tuple[str, ...]

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise EcgByteError(E_DIMENSION,
                               f"record data must be a C x T matrix, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise EcgByteError(E_NONFINITE, "record contains non-finite samples")
        if self.sample_rate_hz <= 0:
            raise EcgByteError(E_BAD_PARAM, "sample rate must be positive")
        names = tuple(self.lead_names)
        if len(names) != data.shape[0]:
            raise EcgByteError(E_BAD_LEADS,
                               f"{len(names)} lead names for {data.shape[0]} data rows")
        if len(set(names)) != len(names):
            raise EcgByteError(E_BAD_LEADS, "lead names are not unique")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "lead_names", names)

    @property
    def n_leads(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    def with_data(self, data: np.ndarray, sample_rate_hz: float | None = None) -> "EcgRecord":
        """Copy of this record with new samples (and optionally a new rate)."""
        rate = self.sample_rate_hz if sample_rate_hz is None else sample_rate_hz
        return replace(self, data=data, sample_rate_hz=rate)


def default_lead_names(n_leads: int) -> tuple[str, ...]:
    """Canonical names for 12-lead records, generic labels otherwise."""
    if n_leads == 12:
        return LEAD_ORDER_PTBXL
    return tuple(f"L{i}" for i in range(n_leads))


def reorder_leads(rec: EcgRecord, target: LeadOrder | Sequence[str]) -> EcgRecord:
    """Permute rows so lead_names matches ``target``.

    The target must be a permutation of the record's lead names.
    """
    names = tuple(target.names if isinstance(target, LeadOrder) else target)
    if sorted(names) != sorted(rec.lead_names):
        missing = set(names) - set(rec.lead_names)
        extra = set(rec.lead_names) - set(names)
        raise EcgByteError(
            E_BAD_LEADS,
            f"lead mismatch (missing {sorted(missing)}, extra {sorted(extra)})")
    index = {name: i for i, name in enumerate(rec.lead_names)}
    perm = [index[name] for name in names]
    return replace(rec, data=rec.data[perm], lead_names=names)


def _infer_format(path: Path, format: str | None) -> str:
    if format is not None:
        if format not in ("csv", "bin"):
            raise EcgByteError(E_BAD_PARAM, f"unknown record format {format!r}")
        return format
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".bin", ".ecgb"):
        return "bin"
    raise EcgByteError(E_BAD_PARAM, f"cannot infer record format from {path.name!r}")


def load_record(path: str | Path, format: str | None = None,
                sample_rate_hz: float = 500.0) -> EcgRecord:
    """Load a record from disk.

    ``sample_rate_hz`` applies to CSV only (the format carries none);
    the binary header always wins.
    """
    path = Path(path)
    fmt = _infer_format(path, format)
    if not path.is_file():
        raise EcgByteError(E_IO, f"no such record file: {path}")
    if fmt == "csv":
        return _load_csv(path, sample_rate_hz)
    return _load_bin(path)


def save_record(rec: EcgRecord, path: str | Path, format: str | None = None) -> None:
    """Write a record; binary round-trips bit-exactly for f32 data."""
    path = Path(path)
    fmt = _infer_format(path, format)
    try:
        if fmt == "csv":
            _save_csv(rec, path)
        else:
            _save_bin(rec, path)
    except OSError as exc:
        raise EcgByteError(E_IO, f"cannot write {path}: {exc}") from exc


def _load_csv(path: Path, sample_rate_hz: float) -> EcgRecord:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise EcgByteError(E_IO, f"cannot read {path}: {exc}") from exc
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise EcgByteError(E_BAD_FORMAT, f"{path.name}: empty CSV")
    names = tuple(name.strip() for name in lines[0].split(","))
    if any(not n for n in names):
        raise EcgByteError(E_BAD_FORMAT, f"{path.name}: blank lead name in header")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != len(names):
            raise EcgByteError(
                E_DIMENSION,
                f"{path.name}:{lineno}: expected {len(names)} values, got {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise EcgByteError(E_BAD_FORMAT, f"{path.name}:{lineno}: {exc}") from exc
    if not rows:
        raise EcgByteError(E_BAD_FORMAT, f"{path.name}: CSV has a header but no samples")
    data = np.asarray(rows, dtype=np.float64).T  # time-major on disk -> lead-major
    if not np.all(np.isfinite(data)):
        raise EcgByteError(E_NONFINITE, f"{path.name}: non-finite sample")
    return EcgRecord(data=data, sample_rate_hz=sample_rate_hz, lead_names=names)


def _save_csv(rec: EcgRecord, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(rec.lead_names) + "\n")
        for t in range(rec.n_samples):
            fh.write(",".join(f"{v:.6g}" for v in rec.data[:, t]) + "\n")


_BIN_HEADER = struct.Struct("<4sBIIf")


def _load_bin(path: Path) -> EcgRecord:
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise EcgByteError(E_IO, f"cannot read {path}: {exc}") from exc
    if len(blob) < _BIN_HEADER.size:
        raise EcgByteError(E_BAD_FORMAT, f"{path.name}: truncated header")
    magic, version, n_leads, n_samples, rate = _BIN_HEADER.unpack_from(blob)
    if magic != BINARY_MAGIC:
        raise EcgByteError(E_BAD_FORMAT, f"{path.name}: bad magic {magic!r}")
    if version != BINARY_VERSION:
        raise EcgByteError(E_BAD_FORMAT, f"{path.name}: unsupported version {version}")
    if n_leads < 1 or n_samples < 1:
        raise EcgByteError(E_DIMENSION, f"{path.name}: header claims {n_leads}x{n_samples}")
    expected = _BIN_HEADER.size + 4 * n_leads * n_samples
    if len(blob) != expected:
        raise EcgByteError(
            E_DIMENSION,
            f"{path.name}: payload is {len(blob)} bytes, header implies {expected}")
    flat = np.frombuffer(blob, dtype="<f4", offset=_BIN_HEADER.size)
    data = flat.reshape(n_leads, n_samples).astype(np.float64)
    if not np.all(np.isfinite(data)):
        raise EcgByteError(E_NONFINITE, f"{path.name}: non-finite sample")
    return EcgRecord(data=data, sample_rate_hz=float(np.float32(rate)),
                     lead_names=default_lead_names(n_leads))


def _save_bin(rec: EcgRecord, path: Path) -> None:
    header = _BIN_HEADER.pack(BINARY_MAGIC, BINARY_VERSION,
                              rec.n_leads, rec.n_samples, rec.sample_rate_hz)
    payload = rec.data.astype("<f4").tobytes()  # lead-major: row 0 first
    path.write_bytes(header + payload)


def iter_record_files(directory: str | Path,
                      suffixes: Iterable[str] = (".csv", ".bin", ".ecgb")) -> list[Path]:
    """Record files under a directory, sorted by name for determinism."""
    directory = Path(directory)
    if not directory.is_dir():
        raise EcgByteError(E_IO, f"not a directory: {directory}")
    wanted = {s.lower() for s in suffixes}
    return sorted(p for p in directory.iterdir()
                  if p.is_file() and p.suffix.lower() in wanted)
