"""Checkpoint serialization round-trip and corruption handling."""

import numpy as np
import pytest

from restain.errors import DataError
from restain.nncore.tensor import Tensor
from restain.cyclegan import (
    DiscriminatorConfig,
    GeneratorConfig,
    TrainHyper,
    build_train_state,
    load_checkpoint,
    save_checkpoint,
    train_step,
)

SMALL_GEN = GeneratorConfig(base_channels=8, n_blocks=1)
SMALL_DISC = DiscriminatorConfig(base_channels=8)


def _trained_state(steps=2, seed=0):
    hyper = TrainHyper(seed=seed, pool_capacity=2, lr=3e-4)
    state = build_train_state(SMALL_GEN, SMALL_DISC, hyper)
    rng = np.random.default_rng(seed)
    for _ in range(steps):
        a = Tensor(rng.uniform(-1, 1, size=(1, 3, 32, 32)).astype(np.float32))
        b = Tensor(rng.uniform(-1, 1, size=(1, 3, 32, 32)).astype(np.float32))
        train_step(state, a, b)
    return state


def _all_params(state):
    return [
        (key, name, p.data)
        for key in sorted(state.models)
        for name, p in state.models[key].params()
    ]


class TestRoundTrip:
    def test_save_load_save_is_byte_identical(self, tmp_path):
        state = _trained_state()
        p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        save_checkpoint(state, p1)
        save_checkpoint(load_checkpoint(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_everything_restored(self, tmp_path):
        state = _trained_state()
        path = tmp_path / "s.ckpt"
        save_checkpoint(state, path)
        loaded = load_checkpoint(path)

        assert loaded.iteration == state.iteration
        assert loaded.hyper == state.hyper
        assert loaded.gen_cfg == state.gen_cfg
        assert loaded.disc_cfg == state.disc_cfg
        for (k1, n1, d1), (k2, n2, d2) in zip(_all_params(state), _all_params(loaded)):
            assert (k1, n1) == (k2, n2)
            assert np.array_equal(d1, d2)
        assert loaded.adam_g.t == state.adam_g.t
        for name in state.adam_g.m:
            assert np.array_equal(loaded.adam_g.m[name], state.adam_g.m[name])
            assert np.array_equal(loaded.adam_g.v[name], state.adam_g.v[name])
        assert loaded.pool_a.counter == state.pool_a.counter
        assert len(loaded.pool_a) == len(state.pool_a)
        for mine, theirs in zip(state.pool_a.images, loaded.pool_a.images):
            assert np.array_equal(mine.data, theirs.data)

    def test_resume_matches_uninterrupted_run(self, tmp_path):
        straight = _trained_state(steps=4, seed=1)

        resumed = _trained_state(steps=2, seed=1)
        path = tmp_path / "mid.ckpt"
        save_checkpoint(resumed, path)
        resumed = load_checkpoint(path)
        # replay the same data stream the straight run saw for steps 3..4
        rng = np.random.default_rng(1)
        for _ in range(2):
            for _ in range(2):
                rng.uniform(-1, 1, size=(1, 3, 32, 32))
        for _ in range(2):
            a = Tensor(rng.uniform(-1, 1, size=(1, 3, 32, 32)).astype(np.float32))
            b = Tensor(rng.uniform(-1, 1, size=(1, 3, 32, 32)).astype(np.float32))
            train_step(resumed, a, b)

        for (k1, n1, d1), (k2, n2, d2) in zip(_all_params(straight), _all_params(resumed)):
            assert (k1, n1) == (k2, n2)
            assert np.array_equal(d1, d2)


class TestCorruption:
    def test_flipped_payload_byte_raises(self, tmp_path):
        state = _trained_state()
        path = tmp_path / "s.ckpt"
        save_checkpoint(state, path)
        raw = bytearray(path.read_bytes())
        raw[len(raw) // 2] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(DataError):
            load_checkpoint(path)

    def test_bad_magic_raises(self, tmp_path):
        state = _trained_state()
        path = tmp_path / "s.ckpt"
        save_checkpoint(state, path)
        raw = bytearray(path.read_bytes())
        raw[0:4] = b"NOPE"
        path.write_bytes(bytes(raw))
        with pytest.raises(DataError, match="not a checkpoint"):
            load_checkpoint(path)

    def test_bad_version_raises(self, tmp_path):
        state = _trained_state()
        path = tmp_path / "s.ckpt"
        save_checkpoint(state, path)
        raw = bytearray(path.read_bytes())
        raw[4] = 99
        path.write_bytes(bytes(raw))
        with pytest.raises(DataError, match="version"):
            load_checkpoint(path)

    def test_truncation_raises(self, tmp_path):
        state = _trained_state()
        path = tmp_path / "s.ckpt"
        save_checkpoint(state, path)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) - 7])
        with pytest.raises(DataError):
            load_checkpoint(path)

    def test_trailing_garbage_raises(self, tmp_path):
        state = _trained_state()
        path = tmp_path / "s.ckpt"
        save_checkpoint(state, path)
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(DataError, match="trailing"):
            load_checkpoint(path)

    def test_missing_entry_raises(self, tmp_path):
        import struct
        import zlib

        from restain.cyclegan import checkpoint as ck

        state = _trained_state()
        entries = [e for e in ck._encode_entries(state) if not e[0].startswith("g_ab/")]
        path = tmp_path / "s.ckpt"
        with open(path, "wb") as fh:
            fh.write(ck._MAGIC)
            fh.write(struct.pack("<II", ck._VERSION, len(entries)))
            for name, arr in entries:
                data = np.ascontiguousarray(arr, dtype="<f4")
                payload = data.tobytes()
                raw_name = name.encode("utf-8")
                fh.write(struct.pack("<H", len(raw_name)))
                fh.write(raw_name)
                fh.write(struct.pack("<4I", *data.shape))
                fh.write(struct.pack("<I", zlib.crc32(payload)))
                fh.write(payload)
        with pytest.raises(DataError, match="missing"):
            load_checkpoint(path)
