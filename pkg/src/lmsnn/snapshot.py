"""Model persistence: a versioned, chunked binary snapshot format.

Layout: 4-byte magic "LMSN", uint16 format version, then sections until EOF.
Each section is a 4-byte ASCII tag, a uint64 payload length, and the
payload. Readers skip unknown tags, so future sections stay
backward-compatible; a version bump signals incompatible changes.

Arrays are stored as dtype string + shape + raw little-endian C-order bytes,
and scalars as sorted-key JSON, so identical runs produce byte-identical
files and every round trip is bit-exact (weights, state, RNG stream).
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import SimConfig, config_from_dict, config_to_dict
from .evaluation import VotingModel
from .network import Network, NeuronState
from .topology import InhibitionSchedule, build_inhibition_matrix

MAGIC = b"LMSN"
FORMAT_VERSION = 1

SEC_CONFIG = b"CFG0"
SEC_TOPOLOGY = b"TOPO"
SEC_MASK = b"MASK"
SEC_WEIGHTS = b"WGTS"
SEC_STATE = b"STAT"
SEC_RNG = b"RNGS"
SEC_PROGRESS = b"PROG"
SEC_VOTING = b"VOTE"
SEC_NGRAM = b"NGRM"
SEC_RUN_META = b"META"

STATE_FIELDS = ("v", "g_e", "g_i", "theta", "refrac_remaining", "x_pre", "x_post", "pending_inhib")


class SnapshotError(Exception):
    """Snapshot file unreadable or malformed."""


class SnapshotVersionError(SnapshotError):
    """Snapshot written by an unsupported format version."""


def _pack_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True).encode()


def _pack_array(arr: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(arr)
    if arr.dtype.byteorder == ">":
        arr = arr.astype(arr.dtype.newbyteorder("<"))
    dtype = arr.dtype.str.encode()
    head = struct.pack("<H", len(dtype)) + dtype
    head += struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape)
    return head + arr.tobytes()


def _unpack_array(buf: bytes, off: int) -> tuple[np.ndarray, int]:
    try:
        (dlen,) = struct.unpack_from("<H", buf, off)
        off += 2
        dtype = np.dtype(buf[off : off + dlen].decode())
        off += dlen
        (ndim,) = struct.unpack_from("<B", buf, off)
        off += 1
        shape = struct.unpack_from(f"<{ndim}Q", buf, off)
        off += 8 * ndim
        nbytes = int(np.prod(shape)) * dtype.itemsize
        if off + nbytes > len(buf):
            raise SnapshotError("array payload truncated")
        arr = np.frombuffer(buf[off : off + nbytes], dtype=dtype).reshape(shape).copy()
        return arr, off + nbytes
    except (struct.error, ValueError) as exc:
        raise SnapshotError(f"malformed array section: {exc}") from exc


def _pack_varjson_and_arrays(meta: dict, arrays: list[np.ndarray]) -> bytes:
    meta_bytes = _pack_json(meta)
    out = struct.pack("<Q", len(meta_bytes)) + meta_bytes
    for arr in arrays:
        out += _pack_array(arr)
    return out


def _unpack_varjson(buf: bytes) -> tuple[dict, int]:
    if len(buf) < 8:
        raise SnapshotError("truncated section header")
    (mlen,) = struct.unpack_from("<Q", buf, 0)
    if 8 + mlen > len(buf):
        raise SnapshotError("truncated JSON block")
    return json.loads(buf[8 : 8 + mlen].decode()), 8 + mlen


@dataclass
class ModelSnapshot:
    """Deserialized snapshot contents; enough to resume a run exactly."""

    version: int
    cfg: SimConfig
    schedule: InhibitionSchedule
    n_input: int
    k: int
    distance_mode: str
    sparsity: float
    current_level: float
    w_init_max: float
    mask: np.ndarray
    weights: np.ndarray
    state: NeuronState
    rng_state: dict
    examples_seen: int
    zero_norm_count: int
    voting_model: VotingModel | None = None
    run_meta: dict | None = None


def _topology_meta(net: Network) -> dict:
    topo = net.topology
    sched = topo.schedule
    return {
        "n_input": topo.n_input,
        "k": topo.k,
        "distance_mode": topo.distance_mode,
        "sparsity": topo.sparsity,
        "current_level": topo.current_level,
        "w_init_max": net.w_init_max,
        "schedule": {
            "strategy": sched.strategy,
            "c_min": sched.c_min,
            "c_max": sched.c_max,
            "p_low": sched.p_low,
            "p_grow": sched.p_grow,
            "c_inhib": sched.c_inhib,
            "total_steps": sched.total_steps,
        },
    }


def save_snapshot(
    net: Network, path, model: VotingModel | None = None, run_meta: dict | None = None
) -> Path:
    """Serialize a network (plus optional voting model and free-form run
    provenance) atomically."""
    sections: list[tuple[bytes, bytes]] = [
        (SEC_CONFIG, _pack_json(config_to_dict(net.cfg))),
        (SEC_TOPOLOGY, _pack_json(_topology_meta(net))),
        (SEC_MASK, _pack_array(net.topology.input_mask)),
        (SEC_WEIGHTS, _pack_array(net.weights)),
        (SEC_STATE, b"".join(_pack_array(net.state.arrays()[f]) for f in STATE_FIELDS)),
        (SEC_RNG, _pack_json(net.rng.bit_generator.state)),
        (SEC_PROGRESS, _pack_json({"examples_seen": net.examples_seen, "zero_norm_count": net.zero_norm_count})),
    ]
    if model is not None:
        meta = {"fallback_class": model.fallback_class, "num_classes": model.num_classes}
        sections.append(
            (SEC_VOTING, _pack_varjson_and_arrays(meta, [model.assignments, model.rates, model.proportions]))
        )
        if model.ngram_table is not None and model.n is not None:
            keys = sorted(model.ngram_table)
            key_arr = np.array(keys, dtype=np.int64).reshape(len(keys), model.n)
            val_arr = (
                np.stack([model.ngram_table[k] for k in keys])
                if keys
                else np.zeros((0, model.num_classes), dtype=np.int64)
            )
            sections.append((SEC_NGRAM, _pack_varjson_and_arrays({"n": model.n}, [key_arr, val_arr])))
    if run_meta is not None:
        sections.append((SEC_RUN_META, _pack_json(run_meta)))

    path = Path(path)
    blob = MAGIC + struct.pack("<H", FORMAT_VERSION)
    for tag, payload in sections:
        blob += tag + struct.pack("<Q", len(payload)) + payload
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)
    return path


def load_snapshot(path) -> ModelSnapshot:
    """Parse a snapshot file; raises SnapshotError (never partial data)."""
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    if len(buf) < 6 or buf[:4] != MAGIC:
        raise SnapshotError(f"{path}: not a snapshot file (bad magic)")
    (version,) = struct.unpack_from("<H", buf, 4)
    if version != FORMAT_VERSION:
        raise SnapshotVersionError(
            f"{path}: format version {version} unsupported (this build reads {FORMAT_VERSION})"
        )
    sections: dict[bytes, bytes] = {}
    off = 6
    while off < len(buf):
        if off + 12 > len(buf):
            raise SnapshotError(f"{path}: truncated section header at byte {off}")
        tag = buf[off : off + 4]
        (length,) = struct.unpack_from("<Q", buf, off + 4)
        off += 12
        if off + length > len(buf):
            raise SnapshotError(f"{path}: truncated section {tag!r} at byte {off}")
        sections[tag] = buf[off : off + length]
        off += length

    required = (SEC_CONFIG, SEC_TOPOLOGY, SEC_MASK, SEC_WEIGHTS, SEC_STATE, SEC_RNG, SEC_PROGRESS)
    for tag in required:
        if tag not in sections:
            raise SnapshotError(f"{path}: missing required section {tag!r}")

    try:
        cfg = config_from_dict(json.loads(sections[SEC_CONFIG].decode()))
        topo_meta = json.loads(sections[SEC_TOPOLOGY].decode())
        rng_state = json.loads(sections[SEC_RNG].decode())
        progress = json.loads(sections[SEC_PROGRESS].decode())
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise SnapshotError(f"{path}: malformed metadata: {exc}") from exc

    mask, _ = _unpack_array(sections[SEC_MASK], 0)
    weights, _ = _unpack_array(sections[SEC_WEIGHTS], 0)
    state_buf = sections[SEC_STATE]
    arrays = {}
    off = 0
    for name in STATE_FIELDS:
        arrays[name], off = _unpack_array(state_buf, off)
    state = NeuronState(**arrays)

    voting_model = None
    if SEC_VOTING in sections:
        meta, off = _unpack_varjson(sections[SEC_VOTING])
        assignments, off = _unpack_array(sections[SEC_VOTING], off)
        rates, off = _unpack_array(sections[SEC_VOTING], off)
        proportions, off = _unpack_array(sections[SEC_VOTING], off)
        voting_model = VotingModel(
            assignments=assignments,
            rates=rates,
            proportions=proportions,
            fallback_class=meta["fallback_class"],
            num_classes=meta["num_classes"],
        )
        if SEC_NGRAM in sections:
            nmeta, noff = _unpack_varjson(sections[SEC_NGRAM])
            key_arr, noff = _unpack_array(sections[SEC_NGRAM], noff)
            val_arr, _ = _unpack_array(sections[SEC_NGRAM], noff)
            voting_model.n = int(nmeta["n"])
            voting_model.ngram_table = {
                tuple(int(x) for x in key_arr[i]): val_arr[i].copy() for i in range(key_arr.shape[0])
            }

    run_meta = None
    if SEC_RUN_META in sections:
        try:
            run_meta = json.loads(sections[SEC_RUN_META].decode())
        except json.JSONDecodeError as exc:
            raise SnapshotError(f"{path}: malformed run metadata: {exc}") from exc

    return ModelSnapshot(
        version=version,
        cfg=cfg,
        schedule=InhibitionSchedule(**topo_meta["schedule"]),
        n_input=int(topo_meta["n_input"]),
        k=int(topo_meta["k"]),
        distance_mode=topo_meta["distance_mode"],
        sparsity=float(topo_meta["sparsity"]),
        current_level=float(topo_meta["current_level"]),
        w_init_max=float(topo_meta["w_init_max"]),
        mask=mask,
        weights=weights,
        state=state,
        rng_state=rng_state,
        examples_seen=int(progress["examples_seen"]),
        zero_norm_count=int(progress["zero_norm_count"]),
        voting_model=voting_model,
        run_meta=run_meta,
    )


def network_from_snapshot(snap: ModelSnapshot) -> Network:
    """Reconstruct a Network that continues exactly where the snapshot left
    off (same weights, state, inhibition level, and RNG stream)."""
    net = Network(
        snap.cfg,
        snap.schedule,
        snap.k,
        n_input=snap.n_input,
        sparsity=snap.sparsity,
        distance_mode=snap.distance_mode,
        w_init_max=snap.w_init_max,
    )
    net.topology.input_mask = snap.mask
    net.topology.inhib_matrix = build_inhibition_matrix(
        snap.k, snap.current_level, snap.schedule.c_max, snap.schedule.strategy, snap.distance_mode
    )
    net.topology.current_level = snap.current_level
    net.weights = np.ascontiguousarray(snap.weights)
    net.state = snap.state.copy()
    net.examples_seen = snap.examples_seen
    net.zero_norm_count = snap.zero_norm_count
    net.rng = np.random.default_rng()
    net.rng.bit_generator.state = snap.rng_state
    return net
