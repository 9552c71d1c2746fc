"""Tests for density estimation, aggregation, and report emission."""

import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from restain.errors import DataError
from restain.quantify import (
    DensityReport,
    StainRef,
    StainResult,
    abs_rel_diff,
    aggregate,
    compute_report,
    density,
    emit_boxplot_svg,
    emit_csv,
    quartiles,
    read_density_csv,
    stain_mask,
)
from restain.synthdata import DomainParams, make_eval_set
from restain.tiling import Slide

SVG = "{http://www.w3.org/2000/svg}"


def _uniform_slide(color, h=8, w=8) -> Slide:
    return Slide(np.full((h, w, 3), color, dtype=np.uint8))


# ------------------------------------------------------------ stain_mask


def test_mask_all_ones_on_exact_color():
    ref = StainRef("x", (128, 0, 128))
    assert stain_mask(_uniform_slide((128, 0, 128)), ref).all()


def test_mask_excludes_distant_background():
    # lavender background sits ~277 from the purple reference
    ref = StainRef("x", (128, 0, 128), 60.0)
    assert not stain_mask(_uniform_slide((235, 230, 240)), ref).any()


def test_mask_boundary_is_inclusive():
    ref = StainRef("x", (100, 100, 100), 5.0)
    assert stain_mask(_uniform_slide((103, 104, 100)), ref).all()
    assert not stain_mask(_uniform_slide((103, 104, 101)), ref).any()


def test_tiny_tol_keeps_near_exact_matches_only():
    ref = StainRef("x", (100, 100, 100), 0.5)
    assert stain_mask(_uniform_slide((100, 100, 100)), ref).all()
    assert not stain_mask(_uniform_slide((100, 100, 101)), ref).any()


def test_stain_ref_validation():
    with pytest.raises(ValueError):
        StainRef("x", (256, 0, 0))
    with pytest.raises(ValueError):
        StainRef("x", (0, 0, 0), tol=0.0)
    with pytest.raises(ValueError):
        StainRef("x", (0, 0, 0), tol=255.0 * math.sqrt(3.0))


# --------------------------------------------------------------- density


def test_density_counts_fraction():
    mask = np.zeros((10, 10), dtype=bool)
    mask.flat[:25] = True
    assert density(mask) == 0.25


def test_density_all_false():
    assert density(np.zeros((4, 4), dtype=bool)) == 0.0


def test_density_complement():
    rng = np.random.default_rng(0)
    mask = rng.random((20, 20)) < 0.3
    assert density(mask) + density(~mask) == 1.0


def test_density_empty_rejected():
    with pytest.raises(ValueError):
        density(np.zeros((0, 4), dtype=bool))


# ---------------------------------------------------------- abs_rel_diff


def test_rel_diff_worked_example():
    assert abs_rel_diff(0.10, 0.08) == pytest.approx(0.2, rel=1e-12)


def test_rel_diff_equal_is_zero():
    assert abs_rel_diff(0.37, 0.37) == 0.0


def test_rel_diff_degenerate_rules():
    assert abs_rel_diff(0.0, 0.0) == 0.0
    assert abs_rel_diff(0.0, 0.01) == math.inf


def test_rel_diff_rejects_negative():
    with pytest.raises(ValueError):
        abs_rel_diff(-0.1, 0.1)


def test_rel_diff_scale_invariant():
    rng = np.random.default_rng(1)
    for _ in range(200):
        r, v = rng.uniform(0.01, 1.0, 2)
        alpha = rng.uniform(1e-6, 1e6)
        assert abs_rel_diff(alpha * r, alpha * v) == pytest.approx(
            abs_rel_diff(r, v), rel=1e-12
        )


# ------------------------------------------------------------- aggregate


def test_aggregate_worked_example():
    st = aggregate([0.05, 0.08, 0.20])
    assert st.median == pytest.approx(0.08, rel=1e-12)
    assert st.variance == pytest.approx(0.0063, rel=1e-12)
    assert st.n == 3 and st.n_flagged == 0


def test_aggregate_single_value():
    st = aggregate([0.42])
    assert st.median == 0.42 and st.variance == 0.0 and st.n == 1


def test_aggregate_permutation_invariant_exactly():
    rng = np.random.default_rng(2)
    vals = list(rng.uniform(0, 1, 17))
    a = aggregate(vals)
    b = aggregate(list(reversed(vals)))
    c = aggregate(sorted(vals))
    assert a == b == c


def test_aggregate_counts_inf_separately():
    st = aggregate([0.1, math.inf, 0.3])
    assert st.n == 2 and st.n_flagged == 1
    assert st.median == pytest.approx(0.2, rel=1e-12)


def test_aggregate_rejects_empty_and_all_inf():
    with pytest.raises(ValueError):
        aggregate([])
    with pytest.raises(ValueError):
        aggregate([math.inf])
    with pytest.raises(ValueError):
        aggregate([0.1, math.nan])


def test_aggregate_matches_brute_force_oracle():
    # sort + direct formulas, exact equality on 1000 random lists
    rng = np.random.default_rng(3)
    for _ in range(1000):
        n = int(rng.integers(1, 50))
        vals = rng.uniform(0, 1, n)
        st = aggregate(list(vals))
        s = np.sort(vals)
        m = n // 2
        med = s[m] if n % 2 else (s[m - 1] + s[m]) / 2.0
        mean = s.sum() / n
        var = ((s - mean) ** 2).sum() / (n - 1) if n > 1 else 0.0
        assert st.median == med
        assert st.variance == var
        assert st.n == n


def test_quartiles_linear_interpolation():
    q1, med, q3 = quartiles([1, 2, 3, 4])
    assert (q1, med, q3) == (1.75, 2.5, 3.25)


def test_quartiles_degenerate():
    assert quartiles([0.3]) == (0.3, 0.3, 0.3)


# ---------------------------------------------------- ground-truth recovery


def test_density_recovers_generator_ground_truth_exactly():
    p = DomainParams()
    pair = make_eval_set(1, 256, 256, seed=13)[0]
    ref = StainRef("purple", p.b_fiber, 60.0)
    assert density(stain_mask(pair.slide_b, ref)) == pair.true_density_b


def test_report_self_pair_is_all_zero():
    p = DomainParams()
    pair = make_eval_set(1, 128, 128, seed=13)[0]
    refs = [StainRef("purple", p.b_fiber), StainRef("brown", p.b_epithelium)]
    rep = compute_report("pair000", pair.slide_b, pair.slide_b, refs)
    assert all(r.abs_rel_diff == 0.0 for r in rep.results)
    assert all(r.density_real == r.density_virtual for r in rep.results)


def test_report_shape_mismatch_rejected():
    a = _uniform_slide((0, 0, 0), 8, 8)
    b = _uniform_slide((0, 0, 0), 8, 10)
    with pytest.raises(ValueError, match="shape"):
        compute_report("p", a, b, [StainRef("x", (0, 0, 0))])


# ------------------------------------------------------------------ CSV


def _toy_reports():
    return [
        DensityReport(
            "p000",
            (
                StainResult("purple", 0.125, 0.1, 0.2),
                StainResult("brown", 0.0, 0.01, math.inf),
            ),
        ),
        DensityReport(
            "p001",
            (
                StainResult("purple", 0.3, 0.3, 0.0),
                StainResult("brown", 0.2, 0.1, 0.5),
            ),
        ),
    ]


def test_csv_round_trip_exact(tmp_path):
    path = tmp_path / "report.csv"
    reports = _toy_reports()
    emit_csv(reports, path)
    assert read_density_csv(path) == reports


def test_csv_header(tmp_path):
    path = tmp_path / "report.csv"
    emit_csv(_toy_reports(), path)
    first = path.read_text().splitlines()[0]
    assert first == "pair_id,stain,density_real,density_virtual,abs_rel_diff"


def test_csv_rejects_foreign_file(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(DataError, match="density report"):
        read_density_csv(path)


def test_csv_rejects_malformed_row(tmp_path):
    path = tmp_path / "report.csv"
    path.write_text(
        "pair_id,stain,density_real,density_virtual,abs_rel_diff\np0,x,0.1,oops,0.2\n"
    )
    with pytest.raises(DataError, match="malformed"):
        read_density_csv(path)


# ------------------------------------------------------------------ SVG


def test_boxplot_is_valid_svg_with_one_box_per_stain(tmp_path):
    path = tmp_path / "box.svg"
    emit_boxplot_svg(_toy_reports(), path)
    root = ET.parse(path).getroot()
    assert root.tag == f"{SVG}svg"
    ids = {g.get("id") for g in root.findall(f"{SVG}g")}
    assert ids == {"box-purple", "box-brown"}


def test_boxplot_draws_outlier_circles(tmp_path):
    reports = [
        DensityReport(f"p{i:03d}", (StainResult("purple", 0.1, 0.1, v),))
        for i, v in enumerate([0.1] * 8 + [5.0])
    ]
    path = tmp_path / "box.svg"
    emit_boxplot_svg(reports, path)
    root = ET.parse(path).getroot()
    assert len(root.findall(f".//{SVG}circle")) == 1


def test_boxplot_single_datum_degenerate_box(tmp_path):
    reports = [DensityReport("p0", (StainResult("purple", 0.1, 0.12, 0.2),))]
    path = tmp_path / "box.svg"
    emit_boxplot_svg(reports, path)
    root = ET.parse(path).getroot()
    assert not root.findall(f".//{SVG}circle")
    rect = root.find(f".//{SVG}g/{SVG}rect")
    assert float(rect.get("height")) <= 0.5


def test_boxplot_states_convention(tmp_path):
    path = tmp_path / "box.svg"
    emit_boxplot_svg(_toy_reports(), path)
    desc = ET.parse(path).getroot().find(f"{SVG}desc").text
    assert "1.5 IQR" in desc and "linear interpolation" in desc


def test_boxplot_rejects_empty():
    with pytest.raises(ValueError):
        emit_boxplot_svg([], "/tmp/never.svg")
