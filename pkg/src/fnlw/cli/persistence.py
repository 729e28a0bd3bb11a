"""On-disk formats: run manifests (JSON), time series and summaries (CSV), snapshots (binary).

Snapshot layout, all little-endian:

    8 bytes   magic b"FNLW\\x00001"
    u64       M
    u64       snapshot count
    per snapshot:
        f64            time
        M x complex128 u coefficients, mode order 0, 1, ..., M/2, -M/2+1, ..., -1
        M x complex128 v coefficients, same order
"""

import csv
import hashlib
import json
import math
import struct
from pathlib import Path
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from fnlw import __version__
from fnlw.experiments import KINDS, RateFit, SummaryRow
from fnlw.integrator import SpectralState
from fnlw.observables import RunRecord
from fnlw.params import ModelParams

SNAPSHOT_MAGIC = b"FNLW\x00001"
_HEADER = struct.Struct("<8sQQ")
_TIME = struct.Struct("<d")
_COMPLEX = np.dtype("<c16")

TIMESERIES_COLUMNS = ("step", "time", "sobolev_pair_norm", "hamiltonian")
SUMMARY_COLUMNS = ("N", "kind", "S_sup", "delta", "e_inf")


class SchemaError(ValueError):
    """A CSV file lacks required columns or holds malformed values."""


def format_float(value: float) -> str:
    """17 significant digits: round-trips every double exactly."""
    return f"{value:.17g}"


def config_checksum(params: ModelParams) -> str:
    canonical = json.dumps(params.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class RunManifest(BaseModel):
    """Everything needed to re-execute a run bit-identically, plus its headline numbers."""

    model_config = ConfigDict(extra="forbid")

    params: ModelParams
    kind: str
    tau: float
    steps: int
    s: float
    gamma: float
    outputs: list[str]
    e_inf: float | None
    S_sup: float
    version: str
    config_checksum: str

    @classmethod
    def for_record(cls, record: RunRecord, outputs: Sequence[str]) -> "RunManifest":
        params = record.params
        e_inf = record.e_inf
        return cls(
            params=params,
            kind=record.kind,
            tau=record.tau,
            steps=record.steps,
            s=params.sobolev,
            gamma=params.gamma,
            outputs=list(outputs),
            e_inf=None if math.isnan(e_inf) else e_inf,
            S_sup=record.S_sup,
            version=__version__,
            config_checksum=config_checksum(params),
        )


def write_manifest(path: Path, manifest: RunManifest) -> None:
    path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")


def read_manifest(path: Path) -> RunManifest:
    return RunManifest.model_validate_json(path.read_text(encoding="utf-8"))


def write_timeseries(path: Path, record: RunRecord) -> None:
    intervals = len(record.times) - 1
    per_snapshot = record.steps // intervals if intervals else 0
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TIMESERIES_COLUMNS)
        for j, (time, norm, energy) in enumerate(zip(record.times, record.S, record.H, strict=True)):
            writer.writerow((j * per_snapshot, format_float(time), format_float(norm), format_float(energy)))


def write_snapshots(path: Path, states: Sequence[SpectralState]) -> None:
    if not states:
        raise ValueError("no snapshots to write")
    M = states[0].M
    with path.open("wb") as handle:
        handle.write(_HEADER.pack(SNAPSHOT_MAGIC, M, len(states)))
        for state in states:
            if state.M != M or state.v.shape[0] != M:
                raise ValueError("all snapshots must share one grid")
            handle.write(_TIME.pack(state.t))
            handle.write(np.ascontiguousarray(state.u, dtype=_COMPLEX).tobytes())
            handle.write(np.ascontiguousarray(state.v, dtype=_COMPLEX).tobytes())


def read_snapshots(path: Path) -> list[SpectralState]:
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path} is too short for a snapshot file")
    magic, M, count = _HEADER.unpack_from(data, 0)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"{path} is not a snapshot file (bad magic)")
    block = _TIME.size + 2 * M * _COMPLEX.itemsize
    if len(data) != _HEADER.size + count * block:
        raise ValueError(f"{path} has {len(data)} bytes, expected {_HEADER.size + count * block}")

    states = []
    offset = _HEADER.size
    for _ in range(count):
        (time,) = _TIME.unpack_from(data, offset)
        offset += _TIME.size
        u = np.frombuffer(data, dtype=_COMPLEX, count=M, offset=offset).astype(np.complex128)
        offset += M * _COMPLEX.itemsize
        v = np.frombuffer(data, dtype=_COMPLEX, count=M, offset=offset).astype(np.complex128)
        offset += M * _COMPLEX.itemsize
        states.append(SpectralState(u=u, v=v, t=time))
    return states


def write_summary(path: Path, rows: Sequence[SummaryRow]) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            delta = "" if row.delta is None else format_float(row.delta)
            writer.writerow((row.N, row.kind, format_float(row.S_sup), delta, format_float(row.e_inf)))


def read_summary(path: Path) -> list[SummaryRow]:
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        columns = reader.fieldnames or []
        for column in SUMMARY_COLUMNS:
            if column not in columns:
                raise SchemaError(f"summary {path} is missing column `{column}`")

        rows = []
        for line, raw in enumerate(reader, start=2):
            try:
                kind = raw["kind"]
                if kind not in KINDS:
                    raise ValueError(f"unknown kind {kind!r}")
                rows.append(
                    SummaryRow(
                        N=int(raw["N"]),
                        kind=kind,
                        S_sup=float(raw["S_sup"]),
                        delta=float(raw["delta"]) if raw["delta"] else None,
                        e_inf=float(raw["e_inf"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"summary {path}, line {line}: {exc}") from exc
    return rows


def write_rates(path: Path, rates: dict[str, RateFit]) -> None:
    payload = {
        name: {"exponent": fit.exponent, "residual": fit.residual, "points": fit.points}
        for name, fit in sorted(rates.items())
    }
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
