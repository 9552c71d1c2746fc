"""Training state persistence with per-entry corruption detection.

Layout: magic "VSCK", version u32 LE, entry count u32 LE; each entry is
name length u16, UTF-8 name, four dims u32, CRC32 of the payload u32,
then the f32 payload little-endian row-major. Every stored value is a
rank-4 f32 array; 64-bit scalars (seed, exact float hypers) travel as
two u32 halves bit-cast into a length-2 f32 payload so nothing is lost
to narrowing.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from ..errors import DataError
from ..nncore import Tensor
from .adam import AdamState
from .config import DiscriminatorConfig, GeneratorConfig, TrainHyper
from .pool import ImagePool
from .trainer import (
    DISC_KEYS,
    GEN_KEYS,
    MODEL_KEYS,
    TrainState,
    build_train_state,
    named_params,
)

_MAGIC = b"VSCK"
_VERSION = 1

_HYPER_F64 = ("lr", "beta1", "beta2", "adam_eps", "lambda_cycle", "lambda_identity")
_HYPER_INT = ("batch_per_worker", "workers", "pool_capacity")
_CFG_FIELDS = (
    ("gen_base", lambda s: s.gen_cfg.base_channels),
    ("gen_blocks", lambda s: s.gen_cfg.n_blocks),
    ("gen_in", lambda s: s.gen_cfg.in_channels),
    ("gen_out", lambda s: s.gen_cfg.out_channels),
    ("disc_base", lambda s: s.disc_cfg.base_channels),
    ("disc_layers", lambda s: s.disc_cfg.n_layers),
    ("disc_in", lambda s: s.disc_cfg.in_channels),
)


def _scalar(v: float) -> np.ndarray:
    return np.full((1, 1, 1, 1), v, dtype=np.float32)


def _u64_to_pair(bits: int) -> np.ndarray:
    u = np.array([bits], dtype="<u8").view("<u4")
    return u.view("<f4").reshape(1, 1, 1, 2).copy()


def _pair_to_u64(arr: np.ndarray) -> int:
    return int(np.frombuffer(arr.astype("<f4", copy=False).tobytes(), dtype="<u8")[0])


def _f64_to_pair(x: float) -> np.ndarray:
    u = np.array([x], dtype="<f8").view("<u4")
    return u.view("<f4").reshape(1, 1, 1, 2).copy()


def _pair_to_f64(arr: np.ndarray) -> float:
    return float(np.frombuffer(arr.astype("<f4", copy=False).tobytes(), dtype="<f8")[0])


def _encode_entries(state: TrainState) -> list[tuple[str, np.ndarray]]:
    entries: list[tuple[str, np.ndarray]] = []
    for name, getter in _CFG_FIELDS:
        entries.append((f"cfg/{name}", _scalar(getter(state))))
    for name in _HYPER_F64:
        entries.append((f"hyper/{name}", _f64_to_pair(getattr(state.hyper, name))))
    for name in _HYPER_INT:
        entries.append((f"hyper/{name}", _scalar(getattr(state.hyper, name))))
    entries.append(("hyper/seed", _u64_to_pair(state.hyper.seed)))
    entries.append(("meta/iteration", _scalar(state.iteration)))
    for name, t in named_params(state.models, MODEL_KEYS):
        entries.append((name, t.data))
    for label, adam, keys in (
        ("adam_g", state.adam_g, GEN_KEYS),
        ("adam_d", state.adam_d, DISC_KEYS),
    ):
        entries.append((f"{label}/t", _scalar(adam.t)))
        if adam.t > 0:
            for name, _ in named_params(state.models, keys):
                entries.append((f"{label}/m/{name}", adam.m[name]))
                entries.append((f"{label}/v/{name}", adam.v[name]))
    for label, pool in (("pool_a", state.pool_a), ("pool_b", state.pool_b)):
        entries.append((f"{label}/counter", _scalar(pool.counter)))
        entries.append((f"{label}/size", _scalar(len(pool.images))))
        for i, img in enumerate(pool.images):
            entries.append((f"{label}/img{i:03d}", img.data))
    return entries


def save_checkpoint(state: TrainState, path) -> None:
    entries = _encode_entries(state)
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", _VERSION))
        f.write(struct.pack("<I", len(entries)))
        for name, arr in entries:
            data = np.ascontiguousarray(arr, dtype="<f4")
            if data.ndim != 4:
                raise ValueError(f"entry {name} is not rank-4")
            payload = data.tobytes()
            raw_name = name.encode("utf-8")
            f.write(struct.pack("<H", len(raw_name)))
            f.write(raw_name)
            f.write(struct.pack("<4I", *data.shape))
            f.write(struct.pack("<I", zlib.crc32(payload)))
            f.write(payload)


def _read_entries(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 12 or raw[:4] != _MAGIC:
        raise DataError(f"not a checkpoint file: {path}")
    version, count = struct.unpack_from("<II", raw, 4)
    if version != _VERSION:
        raise DataError(f"unsupported checkpoint version {version} in {path}")
    entries: dict[str, np.ndarray] = {}
    off = 12
    for _ in range(count):
        if off + 2 > len(raw):
            raise DataError(f"truncated checkpoint: {path}")
        (nlen,) = struct.unpack_from("<H", raw, off)
        off += 2
        if off + nlen + 20 > len(raw):
            raise DataError(f"truncated checkpoint: {path}")
        name = raw[off : off + nlen].decode("utf-8")
        off += nlen
        dims = struct.unpack_from("<4I", raw, off)
        off += 16
        (crc,) = struct.unpack_from("<I", raw, off)
        off += 4
        n = dims[0] * dims[1] * dims[2] * dims[3]
        if off + 4 * n > len(raw):
            raise DataError(f"truncated checkpoint: {path}")
        payload = raw[off : off + 4 * n]
        off += 4 * n
        if zlib.crc32(payload) != crc:
            raise DataError(f"checksum mismatch for entry {name!r} in {path}")
        entries[name] = np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
    if off != len(raw):
        raise DataError(f"trailing bytes after last entry: {path}")
    return entries


def _need(entries: dict[str, np.ndarray], name: str) -> np.ndarray:
    if name not in entries:
        raise DataError(f"checkpoint missing entry {name!r}")
    return entries[name]


def load_checkpoint(path) -> TrainState:
    entries = _read_entries(path)
    cfgv = {name: int(_need(entries, f"cfg/{name}")[0, 0, 0, 0]) for name, _ in _CFG_FIELDS}
    gen_cfg = GeneratorConfig(
        base_channels=cfgv["gen_base"],
        n_blocks=cfgv["gen_blocks"],
        in_channels=cfgv["gen_in"],
        out_channels=cfgv["gen_out"],
    )
    disc_cfg = DiscriminatorConfig(
        base_channels=cfgv["disc_base"],
        n_layers=cfgv["disc_layers"],
        in_channels=cfgv["disc_in"],
    )
    hkw = {name: _pair_to_f64(_need(entries, f"hyper/{name}")) for name in _HYPER_F64}
    for name in _HYPER_INT:
        hkw[name] = int(_need(entries, f"hyper/{name}")[0, 0, 0, 0])
    hyper = TrainHyper(seed=_pair_to_u64(_need(entries, "hyper/seed")), **hkw)

    state = build_train_state(gen_cfg, disc_cfg, hyper)
    state.iteration = int(_need(entries, "meta/iteration")[0, 0, 0, 0])
    for name, t in named_params(state.models, MODEL_KEYS):
        arr = _need(entries, name)
        if arr.shape != t.shape:
            raise DataError(f"entry {name!r} has shape {arr.shape}, expected {t.shape}")
        t.data[...] = arr
    for label, adam, keys in (
        ("adam_g", state.adam_g, GEN_KEYS),
        ("adam_d", state.adam_d, DISC_KEYS),
    ):
        adam.t = int(_need(entries, f"{label}/t")[0, 0, 0, 0])
        if adam.t > 0:
            for name, t in named_params(state.models, keys):
                adam.m[name] = _need(entries, f"{label}/m/{name}")
                adam.v[name] = _need(entries, f"{label}/v/{name}")
    for label, pool in (("pool_a", state.pool_a), ("pool_b", state.pool_b)):
        pool.counter = int(_need(entries, f"{label}/counter")[0, 0, 0, 0])
        size = int(_need(entries, f"{label}/size")[0, 0, 0, 0])
        pool.images = [Tensor(_need(entries, f"{label}/img{i:03d}")) for i in range(size)]
    return state
