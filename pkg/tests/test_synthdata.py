"""Tests for the procedural two-domain slide generator."""

import dataclasses

import numpy as np
import pytest

from restain.synthdata import (
    DomainParams,
    child_seed,
    fiber_mask,
    gen_feature_field,
    hidden_mask,
    make_eval_set,
    make_training_set,
    nucleus_centers,
    read_pair_sidecar,
    render_domain_a,
    render_domain_b,
    true_density_b,
    validate_params,
    write_pair_sidecar,
)
from restain.synthdata.dataset import _EVAL_TAG, _TRAIN_A_TAG, _TRAIN_B_TAG

TOL = 60.0


def _color_mask(img: np.ndarray, color) -> np.ndarray:
    ref = np.asarray(color, dtype=np.float64)
    d2 = ((img.astype(np.float64) - ref) ** 2).sum(axis=-1)
    return d2 <= TOL * TOL


# ---------------------------------------------------------------- fields


def test_field_deterministic():
    f1 = gen_feature_field(7, 128, 192)
    f2 = gen_feature_field(7, 128, 192)
    assert np.array_equal(f1.blob_density, f2.blob_density)
    assert np.array_equal(f1.fiber_orientation, f2.fiber_orientation)


def test_fields_differ_across_seeds():
    f0 = gen_feature_field(0, 128, 128)
    f1 = gen_feature_field(1, 128, 128)
    assert np.abs(f0.blob_density - f1.blob_density).max() > 0.01


def test_field_value_ranges():
    f = gen_feature_field(3, 128, 128)
    assert f.blob_density.min() >= 0.0 and f.blob_density.max() <= 1.0
    assert f.fiber_orientation.min() >= 0.0
    assert f.fiber_orientation.max() < np.pi


def test_field_shapes_non_square():
    f = gen_feature_field(3, 96, 160)
    assert f.blob_density.shape == (160, 96)
    assert f.fiber_orientation.shape == (160, 96)
    assert f.width == 96 and f.height == 160


def test_field_mean_stays_in_band():
    # the per-seed mean carries the cross-pair signal but must stay
    # inside (0.2, 0.6); measured extremes 0.258 and 0.546 over these seeds
    means = [gen_feature_field(s, 128, 128).blob_density.mean() for s in range(50)]
    assert min(means) > 0.2
    assert max(means) < 0.6
    assert max(means) - min(means) > 0.1


def test_field_quantized_to_4096_steps():
    f = gen_feature_field(5, 128, 128)
    scaled = f.blob_density * 4096.0
    assert np.allclose(scaled, np.rint(scaled), atol=1e-9)


def test_field_degenerate_dims():
    with pytest.raises(ValueError):
        gen_feature_field(0, 63, 128)
    with pytest.raises(ValueError):
        gen_feature_field(0, 128, 63)


# ------------------------------------------------------------- domain A


def test_blob_zero_renders_pure_background_a():
    f = gen_feature_field(2, 128, 128)
    f0 = dataclasses.replace(f, blob_density=np.zeros_like(f.blob_density))
    p = DomainParams()
    img = render_domain_a(f0, p).data.astype(np.int64)
    bg = np.array(p.a_background, dtype=np.int64)
    assert np.abs(img - bg).max() <= p.noise_amplitude


def test_render_a_deterministic():
    f = gen_feature_field(4, 128, 128)
    assert np.array_equal(render_domain_a(f).data, render_domain_a(f).data)


def test_doubling_density_doubles_expected_nucleus_count():
    # expected count is linear in the field; pooled over 10 seeds the
    # Monte Carlo ratio lands at 2.089 for these seeds
    tot_half = tot_full = 0
    for s in range(10):
        f = gen_feature_field(s, 256, 256)
        fh = dataclasses.replace(f, blob_density=f.blob_density * 0.5)
        tot_half += len(nucleus_centers(fh))
        tot_full += len(nucleus_centers(f))
    ratio = tot_full / tot_half
    assert 1.8 <= ratio <= 2.2


def test_nuclei_appear_at_accepted_centers():
    f = gen_feature_field(6, 128, 128)
    p = DomainParams(noise_amplitude=0)
    img = render_domain_a(f, p).data
    centers = nucleus_centers(f, p)
    assert len(centers) > 0
    nucleus = _color_mask(img, p.a_nucleus)
    # the center pixel of each painted nucleus carries the nucleus color
    # unless a later marker dot lands on it; require most to survive
    hits = nucleus[centers[:, 1], centers[:, 0]]
    assert hits.mean() > 0.9


# ------------------------------------------------------------- domain B


def test_blob_zero_renders_pure_background_b():
    f = gen_feature_field(2, 128, 128)
    f0 = dataclasses.replace(f, blob_density=np.zeros_like(f.blob_density))
    p = DomainParams()
    img = render_domain_b(f0, p).data.astype(np.int64)
    bg = np.array(p.b_background, dtype=np.int64)
    assert np.abs(img - bg).max() <= p.noise_amplitude
    assert true_density_b(f0, p) == 0.0


def test_blob_one_gives_substantial_fiber_cover():
    # frozen at 0.377 for this seed; the stripe duty cycle is 3/8
    f = gen_feature_field(3, 256, 256)
    f1 = dataclasses.replace(f, blob_density=np.ones_like(f.blob_density))
    assert true_density_b(f1) > 0.2


def test_render_b_deterministic():
    f = gen_feature_field(4, 128, 128)
    assert np.array_equal(render_domain_b(f).data, render_domain_b(f).data)


def test_density_equals_fiber_pixel_fraction():
    # speckle is small against the palette spacing, so a color threshold
    # on the rendered slide recovers the mask count exactly
    f = gen_feature_field(3, 256, 256)
    p = DomainParams()
    img = render_domain_b(f, p).data
    frac = float(_color_mask(img, p.b_fiber).mean())
    assert frac == true_density_b(f, p)


def test_true_density_is_mask_mean():
    f = gen_feature_field(9, 128, 128)
    assert true_density_b(f) == fiber_mask(f).mean()


def test_b_features_respect_thresholds():
    f = gen_feature_field(8, 256, 256)
    p = DomainParams()
    img = render_domain_b(f, p).data
    purple = _color_mask(img, p.b_fiber)
    brown = _color_mask(img, p.b_epithelium)
    assert f.blob_density[purple].min() > p.theta_fiber
    assert f.blob_density[brown].min() > p.theta_epi


# --------------------------------------------------------------- params


def test_default_params_validate():
    validate_params(DomainParams())


def test_close_colors_within_domain_rejected():
    p = DomainParams(a_nucleus=(230, 230, 240))
    with pytest.raises(ValueError, match="apart"):
        validate_params(p)


def test_shared_color_across_domains_rejected():
    p = DomainParams(b_fiber=(80, 40, 130))
    with pytest.raises(ValueError, match="both"):
        validate_params(p)


def test_color_range_checked():
    with pytest.raises(ValueError, match="invalid color"):
        validate_params(DomainParams(a_marker=(300, 0, 0)))


def test_threshold_order_enforced():
    with pytest.raises(ValueError):
        validate_params(DomainParams(theta_epi=0.6, theta_fiber=0.5))
    with pytest.raises(ValueError):
        validate_params(DomainParams(theta_hidden=1.5))


def test_negative_noise_rejected():
    with pytest.raises(ValueError):
        validate_params(DomainParams(noise_amplitude=-1))


# --------------------------------------------------------- hidden field


def test_hidden_field_off_by_default():
    f = gen_feature_field(3, 128, 128)
    assert not hidden_mask(f).any()
    on = DomainParams(hidden_field=True)
    off = DomainParams()
    assert np.array_equal(fiber_mask(f, off), fiber_mask(f, DomainParams()))
    assert hidden_mask(f, on).any()


def test_hidden_field_suppresses_fibers():
    f = gen_feature_field(3, 256, 256)
    on = DomainParams(hidden_field=True)
    hm = hidden_mask(f, on)
    fm = fiber_mask(f, on)
    assert not (fm & hm).any()
    assert true_density_b(f, on) <= true_density_b(f)
    # the rendered slide still matches its own mask count exactly
    img = render_domain_b(f, on).data
    assert float(_color_mask(img, on.b_fiber).mean()) == true_density_b(f, on)


def test_hidden_field_leaves_domain_a_unchanged():
    f = gen_feature_field(3, 128, 128)
    a_off = render_domain_a(f, DomainParams())
    a_on = render_domain_a(f, DomainParams(hidden_field=True))
    assert np.array_equal(a_off.data, a_on.data)


# -------------------------------------------------------------- dataset


def test_training_set_sizes_and_shapes():
    tiles_a, tiles_b = make_training_set(100, 64, seed=11)
    assert len(tiles_a) == 100 and len(tiles_b) == 100
    assert all(t.data.shape == (64, 64, 3) for t in tiles_a + tiles_b)


def test_training_set_deterministic():
    a1, b1 = make_training_set(10, 64, seed=11)
    a2, b2 = make_training_set(10, 64, seed=11)
    assert all(np.array_equal(x.data, y.data) for x, y in zip(a1, a2))
    assert all(np.array_equal(x.data, y.data) for x, y in zip(b1, b2))


def test_training_set_minimum():
    with pytest.raises(ValueError):
        make_training_set(1, 64, seed=0)


def test_domains_separable_by_mean_color():
    tiles_a, tiles_b = make_training_set(100, 64, seed=11)
    feats = np.array([t.data.reshape(-1, 3).mean(axis=0) for t in tiles_a + tiles_b])
    labels = np.array([0] * 100 + [1] * 100)
    d2 = ((feats[:, None, :] - feats[None, :, :]) ** 2).sum(axis=-1)
    np.fill_diagonal(d2, np.inf)
    assert (labels[d2.argmin(axis=1)] == labels).all()


def test_domain_mean_colors_far_apart():
    # measured 85.3 for this seed, well past the 40 floor
    tiles_a, tiles_b = make_training_set(50, 64, seed=11)
    ma = np.mean([t.data.reshape(-1, 3).mean(axis=0) for t in tiles_a], axis=0)
    mb = np.mean([t.data.reshape(-1, 3).mean(axis=0) for t in tiles_b], axis=0)
    assert np.linalg.norm(ma - mb) > 40.0


def test_eval_set_count_and_shapes():
    pairs = make_eval_set(10, 128, 128, seed=5)
    assert len(pairs) == 10
    for p in pairs:
        assert p.slide_a.data.shape == (128, 128, 3)
        assert p.slide_b.data.shape == (128, 128, 3)


def test_eval_pairs_pixel_aligned():
    # both slides re-render byte-identically from the stored field
    pairs = make_eval_set(2, 128, 128, seed=5)
    for p in pairs:
        assert np.array_equal(render_domain_a(p.field).data, p.slide_a.data)
        assert np.array_equal(render_domain_b(p.field).data, p.slide_b.data)
        assert p.true_density_b == true_density_b(p.field)


def test_eval_set_deterministic():
    p1 = make_eval_set(3, 128, 128, seed=5)
    p2 = make_eval_set(3, 128, 128, seed=5)
    for x, y in zip(p1, p2):
        assert np.array_equal(x.slide_a.data, y.slide_a.data)
        assert np.array_equal(x.slide_b.data, y.slide_b.data)
        assert x.true_density_b == y.true_density_b


def test_eval_set_minimum():
    with pytest.raises(ValueError):
        make_eval_set(0, 128, 128, seed=0)


def test_seed_namespaces_disjoint():
    seeds = set()
    for tag in (_TRAIN_A_TAG, _TRAIN_B_TAG, _EVAL_TAG):
        for i in range(20):
            seeds.add(child_seed(11, tag, i))
    assert len(seeds) == 60


def test_sidecar_roundtrip(tmp_path):
    pair = make_eval_set(1, 128, 128, seed=5)[0]
    path = tmp_path / "pair.csv"
    write_pair_sidecar(pair, path)
    rec = read_pair_sidecar(path)
    assert rec["seed"] == pair.field.seed
    assert rec["true_density_b"] == pair.true_density_b
    assert rec["mean_blob_density"] == float(pair.field.blob_density.mean())


def test_sidecar_rejects_other_csv(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="sidecar"):
        read_pair_sidecar(path)


def test_mean_density_predicts_true_density():
    # the causal link a translator must learn; frozen at r = 0.888
    pairs = make_eval_set(50, 256, 256, seed=7)
    mb = np.array([p.field.blob_density.mean() for p in pairs])
    td = np.array([p.true_density_b for p in pairs])
    r = np.corrcoef(mb, td)[0, 1]
    assert r > 0.8
