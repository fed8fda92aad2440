"""Binary checkpoints for long quantum runs and partially finished ensembles.

Layout::

    b"DKCP" | version (1 byte) | header length (8 bytes, little endian)
    | JSON header | raw array bytes ... | sha256 of everything before it (32 bytes)

The header lists each array's name, dtype, shape and byte offset. Loading
checks the magic, then the checksum, then the version, and refuses the file on
any mismatch.
"""
from __future__ import annotations

import hashlib
import json
import os
import struct
from pathlib import Path
from typing import Any, Union

import numpy as np

from .classical import EnsembleRun
from .output import OutputError, write_bytes
from .quantum import LatticeConfig, PhotonWavefunction, QuantumRun

MAGIC = b"DKCP"
VERSION = 1
_DIGEST = 32
_PREFIX = len(MAGIC) + 1 + 8
_PART_FIELDS = ("status", "kicks", "elapsed", "w", "phi", "sum_dw2", "n_alive")


class CheckpointError(ValueError):
    """Base class for unreadable checkpoints."""


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointCorruptError(CheckpointError):
    pass


def _pack(kind: str, meta: dict, arrays: dict[str, np.ndarray]) -> bytes:
    entries, blobs, offset = [], [], 0
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        raw = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
        entries.append({"name": name, "dtype": arr.dtype.newbyteorder("<").str,
                        "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps({"kind": kind, "meta": meta, "arrays": entries}, sort_keys=True).encode()
    body = MAGIC + bytes([VERSION]) + struct.pack("<Q", len(header)) + header + b"".join(blobs)
    return body + hashlib.sha256(body).digest()


def _unpack(data: bytes, path) -> tuple[str, dict, dict[str, np.ndarray]]:
    if len(data) < _PREFIX + _DIGEST or data[:4] != MAGIC:
        raise CheckpointCorruptError(f"{path}: not a checkpoint file (bad magic or too short)")
    body, digest = data[:-_DIGEST], data[-_DIGEST:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointCorruptError(f"{path}: checksum mismatch (truncated or corrupted)")
    version = data[4]
    if version != VERSION:
        raise CheckpointVersionError(f"{path}: checkpoint version {version}, this build reads {VERSION}")
    (hlen,) = struct.unpack("<Q", data[5:_PREFIX])
    header = json.loads(body[_PREFIX:_PREFIX + hlen])
    base = _PREFIX + hlen
    arrays = {}
    for e in header["arrays"]:
        start = base + e["offset"]
        raw = body[start:start + e["nbytes"]]
        arrays[e["name"]] = np.frombuffer(raw, dtype=np.dtype(e["dtype"])).reshape(e["shape"]).copy()
    return header["kind"], header["meta"], arrays


def _read(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise OutputError(f"cannot read checkpoint {path}: {exc.strerror or exc}") from exc


def save_quantum(run: QuantumRun, path: Union[str, os.PathLike]) -> str:
    psi = run.psi
    meta = {
        "k": run.k,
        "omega": run.omega,
        "n_ionization": run.n_ionization,
        "window": list(run.window),
        "lattice": {"pad": run.lattice.pad, "size": run.lattice.size,
                    "top_buffer": run.lattice.top_buffer, "bottom_mask": run.lattice.bottom_mask},
        "n_low": psi.n_low,
        "n0": psi.n0,
        "absorbed": psi.absorbed_probability.hex(),
        "leaked": psi.leaked_probability.hex(),
        "time": psi.time,
        "w_count": run.w_count,
    }
    curve = np.array(run.curve, dtype=np.float64).reshape(-1, 2)
    arrays = {"amplitudes": psi.amplitudes, "w_sum": run.w_sum, "curve": curve}
    return write_bytes(path, _pack("quantum", meta, arrays))


def load_quantum(path: Union[str, os.PathLike]) -> QuantumRun:
    kind, meta, arrays = _unpack(_read(path), path)
    if kind != "quantum":
        raise CheckpointCorruptError(f"{path}: holds a {kind!r} checkpoint, expected 'quantum'")
    psi = PhotonWavefunction(
        amplitudes=arrays["amplitudes"],
        n_low=int(meta["n_low"]),
        n0=int(meta["n0"]),
        absorbed_probability=float.fromhex(meta["absorbed"]),
        leaked_probability=float.fromhex(meta["leaked"]),
        time=int(meta["time"]),
    )
    curve = [(int(t), float(p)) for t, p in arrays["curve"]]
    return QuantumRun.restore(meta["k"], meta["omega"], meta["n_ionization"], tuple(meta["window"]),
                              LatticeConfig(**meta["lattice"]), psi, arrays["w_sum"],
                              meta["w_count"], curve)


def save_ensemble(job: EnsembleRun, path: Union[str, os.PathLike]) -> str:
    arrays: dict[str, Any] = {}
    for i, part in enumerate(job.parts):
        for name, arr in zip(_PART_FIELDS, part):
            arrays[f"part{i}.{name}"] = np.asarray(arr)
    meta = {"config": job.config(), "n_parts": len(job.parts)}
    return write_bytes(path, _pack("ensemble", meta, arrays))


def load_ensemble(path: Union[str, os.PathLike]) -> EnsembleRun:
    kind, meta, arrays = _unpack(_read(path), path)
    if kind != "ensemble":
        raise CheckpointCorruptError(f"{path}: holds a {kind!r} checkpoint, expected 'ensemble'")
    cfg = dict(meta["config"])
    harmonics = [tuple(h) for h in cfg.pop("harmonics")]
    w0, n_traj, max_kicks, seed = cfg.pop("w0"), cfg.pop("n_traj"), cfg.pop("max_kicks"), cfg.pop("seed")
    job = EnsembleRun(harmonics, w0, n_traj, max_kicks, seed, **cfg)
    job.parts = [
        tuple(arrays[f"part{i}.{name}"] for name in _PART_FIELDS) for i in range(meta["n_parts"])
    ]
    return job


def checkpoint_kind(path: Union[str, os.PathLike]) -> str:
    kind, _, _ = _unpack(_read(path), path)
    return kind
