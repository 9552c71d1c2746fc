"""Two-translator adversarial training with synchronous data-parallel workers.

Worker replicas are full private copies of all four networks. A step
runs the generator phase on every replica, one image at a time, reduces
gradients by averaging in (worker, image) order, applies exactly one
optimizer update on the master, then repeats for the critics. The
replay pools sit between the phases and are queried serially in the
same order. Per-image backward passes plus a fixed reduction order make
the update a function of the aggregate image sequence alone, so
regrouping the same images across workers or batch sizes reproduces the
parameters bitwise.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError
from ..nncore import Tape, Tensor, add, backward, scale, zero_grads
from .adam import AdamState, adam_step
from .config import DiscriminatorConfig, GeneratorConfig, TrainHyper
from .losses import cycle_loss, gan_loss
from .model import Model, build_discriminator, build_generator, forward
from .pool import ImagePool

MODEL_KEYS = ("g_ab", "g_ba", "d_a", "d_b")
_MODEL_TAGS = {"g_ab": 11, "g_ba": 12, "d_a": 13, "d_b": 14}
_POOL_TAGS = {"a": 21, "b": 22}
GEN_KEYS = ("g_ab", "g_ba")
DISC_KEYS = ("d_a", "d_b")

LOSS_KEYS = ("G_adv_AB", "G_adv_BA", "cyc_A", "cyc_B", "D_A", "D_B")


@dataclass
class TrainState:
    hyper: TrainHyper
    gen_cfg: GeneratorConfig
    disc_cfg: DiscriminatorConfig
    models: dict[str, Model]
    adam_g: AdamState
    adam_d: AdamState
    pool_a: ImagePool
    pool_b: ImagePool
    iteration: int = 0
    replicas: list[dict[str, Model]] | None = field(default=None, repr=False)


def build_train_state(
    gen_cfg: GeneratorConfig, disc_cfg: DiscriminatorConfig, hyper: TrainHyper
) -> TrainState:
    models = {}
    for key in GEN_KEYS:
        rng = np.random.default_rng((hyper.seed, _MODEL_TAGS[key]))
        models[key] = build_generator(gen_cfg, rng, key=key)
    for key in DISC_KEYS:
        rng = np.random.default_rng((hyper.seed, _MODEL_TAGS[key]))
        models[key] = build_discriminator(disc_cfg, rng, key=key)
    return TrainState(
        hyper=hyper,
        gen_cfg=gen_cfg,
        disc_cfg=disc_cfg,
        models=models,
        adam_g=AdamState(),
        adam_d=AdamState(),
        pool_a=ImagePool(hyper.pool_capacity, hyper.seed, _POOL_TAGS["a"]),
        pool_b=ImagePool(hyper.pool_capacity, hyper.seed, _POOL_TAGS["b"]),
    )


def named_params(models: dict[str, Model], keys) -> list[tuple[str, Tensor]]:
    out = []
    for key in keys:
        for n, t in models[key].params():
            out.append((f"{key}/{n}", t))
    return out


def _clone_models(state: TrainState) -> dict[str, Model]:
    clone = {}
    for key in GEN_KEYS:
        rng = np.random.default_rng(0)
        clone[key] = build_generator(state.gen_cfg, rng, key=key)
    for key in DISC_KEYS:
        rng = np.random.default_rng(0)
        clone[key] = build_discriminator(state.disc_cfg, rng, key=key)
    _copy_params(state.models, clone)
    return clone


def _copy_params(src: dict[str, Model], dst: dict[str, Model]) -> None:
    s = named_params(src, MODEL_KEYS)
    d = named_params(dst, MODEL_KEYS)
    for (sn, st), (dn, dt) in zip(s, d):
        if sn != dn or st.shape != dt.shape:
            raise ValueError("replica parameter layout mismatch")
        dt.data[...] = st.data


def _params_crc(models: dict[str, Model]) -> int:
    crc = 0
    for _, t in named_params(models, MODEL_KEYS):
        crc = zlib.crc32(np.ascontiguousarray(t.data).tobytes(), crc)
    return crc


def _collect_grads(params: list[tuple[str, Tensor]]) -> dict[str, np.ndarray]:
    out = {}
    for name, t in params:
        out[name] = t.grad if t.grad is not None else np.zeros_like(t.data)
    return out


def _reduce_mean(per_image: list[dict[str, np.ndarray]]) -> dict[str, np.ndarray]:
    """Average gradients summed in (worker, image) order."""
    k = len(per_image)
    out = {}
    for name in per_image[0]:
        acc = per_image[0][name].copy()
        for i in range(1, k):
            acc += per_image[i][name]
        acc /= acc.dtype.type(k)
        out[name] = acc
    return out


def _split_images(batch: Tensor) -> list[Tensor]:
    if batch.shape[0] == 1:
        return [batch]
    return [Tensor(np.ascontiguousarray(batch.data[i : i + 1])) for i in range(batch.shape[0])]


def _g_phase(models: dict[str, Model], a: Tensor, b: Tensor, hyper: TrainHyper):
    tape = Tape()
    fake_b = forward(models["g_ab"], a, tape)
    fake_a = forward(models["g_ba"], b, tape)
    rec_a = forward(models["g_ba"], fake_b, tape)
    rec_b = forward(models["g_ab"], fake_a, tape)
    adv_ab = gan_loss(forward(models["d_b"], fake_b, tape), True, tape)
    adv_ba = gan_loss(forward(models["d_a"], fake_a, tape), True, tape)
    cyc_a = cycle_loss(rec_a, a, hyper.lambda_cycle, tape)
    cyc_b = cycle_loss(rec_b, b, hyper.lambda_cycle, tape)
    total = add(add(adv_ab, adv_ba, tape), add(cyc_a, cyc_b, tape), tape)
    losses = {
        "G_adv_AB": adv_ab.item(),
        "G_adv_BA": adv_ba.item(),
        "cyc_A": cyc_a.item(),
        "cyc_B": cyc_b.item(),
    }
    if hyper.lambda_identity > 0:
        idt_a = cycle_loss(forward(models["g_ab"], b, tape), b, hyper.lambda_identity, tape)
        idt_b = cycle_loss(forward(models["g_ba"], a, tape), a, hyper.lambda_identity, tape)
        total = add(total, add(idt_a, idt_b, tape), tape)
        losses["idt_A"] = idt_a.item()
        losses["idt_B"] = idt_b.item()
    params = named_params(models, MODEL_KEYS)
    zero_grads([t for _, t in params])
    backward(tape, total)
    g_grads = _collect_grads(named_params(models, GEN_KEYS))
    return g_grads, fake_a.detach(), fake_b.detach(), losses


def _d_phase(
    models: dict[str, Model],
    real_a: Tensor,
    real_b: Tensor,
    pooled_fake_a: Tensor,
    pooled_fake_b: Tensor,
):
    tape = Tape()
    loss_da = scale(
        add(
            gan_loss(forward(models["d_a"], real_a, tape), True, tape),
            gan_loss(forward(models["d_a"], pooled_fake_a, tape), False, tape),
            tape,
        ),
        0.5,
        tape,
    )
    loss_db = scale(
        add(
            gan_loss(forward(models["d_b"], real_b, tape), True, tape),
            gan_loss(forward(models["d_b"], pooled_fake_b, tape), False, tape),
            tape,
        ),
        0.5,
        tape,
    )
    total = add(loss_da, loss_db, tape)
    losses = {"D_A": loss_da.item(), "D_B": loss_db.item()}
    params = named_params(models, DISC_KEYS)
    zero_grads([t for _, t in params])
    backward(tape, total)
    return _collect_grads(params), losses


def _step_impl(state: TrainState, batches_a: list[Tensor], batches_b: list[Tensor]) -> dict:
    k = len(batches_a)
    if len(batches_b) != k:
        raise ValueError("worker batch lists must have equal length")

    if k == 1:
        replicas = [state.models]
    else:
        if state.replicas is None or len(state.replicas) != k:
            state.replicas = [state.models] + [_clone_models(state) for _ in range(k - 1)]
        replicas = state.replicas
        for rep in replicas[1:]:
            _copy_params(state.models, rep)

    images_a = [_split_images(batches_a[i]) for i in range(k)]
    images_b = [_split_images(batches_b[i]) for i in range(k)]

    def run_g(i):
        # one backward per image so the reduction sees layout-independent terms
        return [
            _g_phase(replicas[i], a, b, state.hyper)
            for a, b in zip(images_a[i], images_b[i])
        ]

    if k == 1:
        g_results = [run_g(0)]
    else:
        with ThreadPoolExecutor(max_workers=k) as ex:
            g_results = list(ex.map(run_g, range(k)))

    g_flat = [r for worker in g_results for r in worker]
    g_grads = _reduce_mean([r[0] for r in g_flat])
    adam_step(named_params(state.models, GEN_KEYS), g_grads, state.adam_g, state.hyper)

    # replay pools sit between the phases, touched serially in step order
    pooled = []
    for worker in g_results:
        pooled.append(
            [(state.pool_a.query(fa), state.pool_b.query(fb)) for _, fa, fb, _ in worker]
        )

    def run_d(i):
        return [
            _d_phase(replicas[i], a, b, pa, pb)
            for a, b, (pa, pb) in zip(images_a[i], images_b[i], pooled[i])
        ]

    if k == 1:
        d_results = [run_d(0)]
    else:
        with ThreadPoolExecutor(max_workers=k) as ex:
            d_results = list(ex.map(run_d, range(k)))

    d_flat = [r for worker in d_results for r in worker]
    d_grads = _reduce_mean([r[0] for r in d_flat])
    adam_step(named_params(state.models, DISC_KEYS), d_grads, state.adam_d, state.hyper)

    if k > 1:
        for rep in replicas[1:]:
            _copy_params(state.models, rep)
        master_crc = _params_crc(state.models)
        for i, rep in enumerate(replicas[1:], start=1):
            if _params_crc(rep) != master_crc:
                raise NumericError(f"replica {i} diverged from master after update")

    state.iteration += 1
    report = {}
    for key in list(g_flat[0][3]) + list(d_flat[0][1]):
        vals = [r[3].get(key) for r in g_flat] + [r[1].get(key) for r in d_flat]
        vals = [v for v in vals if v is not None]
        report[key] = float(np.mean(vals))
    return report


def train_step(state: TrainState, batch_a: Tensor, batch_b: Tensor) -> dict:
    """Single-worker update; the K=1 special case of the sync step."""
    return _step_impl(state, [batch_a], [batch_b])


def sync_train_step(state: TrainState, batches_a: list[Tensor], batches_b: list[Tensor]) -> dict:
    if len(batches_a) != state.hyper.workers:
        raise ValueError(
            f"expected {state.hyper.workers} worker batches, got {len(batches_a)}"
        )
    return _step_impl(state, batches_a, batches_b)
