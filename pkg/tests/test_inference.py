import numpy as np
import pytest

from helpers import facet_points, max_affine_pieces
from yann.bigm import compute_big_m_exact
from yann.compiler import (assemble_checker, assemble_yann, assemble_yann_l)
from yann.inference import (Precision, forward_batch, forward_dense,
                            forward_structured, forward_trace,
                            read_points_csv, write_batch_csv)
from yann.pwa import evaluate_naive, pwa_from_dict
from yann.synth import generate_max_affine, generate_vector_pwa

from test_compiler import ELLIPSOID_PWA


@pytest.fixture
def abs_net(abs_pwa, abs_bound):
    return assemble_yann(abs_pwa, abs_bound)


class TestForwardDense:
    def test_abs_oracle(self, abs_pwa, abs_net):
        for x in np.linspace(-1, 1, 101):
            res = forward_dense(abs_net, np.array([x]))
            ref = evaluate_naive(abs_pwa, np.array([x]))
            assert res.output[0] == pytest.approx(ref.output[0], abs=1e-12)
            assert res.region_index == ref.region_index

    def test_outside_domain_all_gates_closed(self, abs_net):
        res = forward_dense(abs_net, np.array([2.0]))
        assert np.all(res.output == 0.0)
        assert res.region_index is None

    def test_dimension_mismatch(self, abs_net):
        with pytest.raises(ValueError, match="shape"):
            forward_dense(abs_net, np.array([1.0, 2.0]))

    def test_non_finite_input(self, abs_net):
        with pytest.raises(ValueError, match="finite"):
            forward_dense(abs_net, np.array([np.nan]))

    def test_checker_on_exact_surface_points(self):
        net = assemble_checker(pwa_from_dict(ELLIPSOID_PWA))
        # lifted features [x^2, y^2, z^2, x] for (2, sqrt(5), 0): exact ints
        on = forward_dense(net, np.array([4.0, 5.0, 0.0, 2.0]))
        assert on.output[0] == 1.0 and on.region_index == 0
        off = forward_dense(net, np.zeros(4))
        assert off.output[0] == 0.0 and off.region_index is None

    def test_yann_l_matches_yann(self, abs_pwa, abs_net):
        netl = assemble_yann_l(abs_pwa)
        for x in np.linspace(-1, 1, 51):
            a = forward_dense(abs_net, np.array([x]))
            b = forward_dense(netl, np.array([x]))
            assert a.region_index == b.region_index
            np.testing.assert_allclose(a.output, b.output, atol=1e-12)

    def test_yann_l_outside_domain_exact_zero(self, abs_pwa):
        netl = assemble_yann_l(abs_pwa)
        res = forward_dense(netl, np.array([1.5]))
        assert np.all(res.output == 0.0)
        assert res.region_index is None


class TestTraceAndSelector:
    def test_layer_shapes(self, abs_net):
        trace = forward_trace(abs_net, np.array([0.5]))
        assert [o.shape[0] for o in trace.layer_outputs] == [4, 2, 2, 4, 1]
        assert trace.selected_region == 1

    def test_selector_one_hot_exact(self):
        f = generate_max_affine(19, 2, 14, (-2.0, 2.0))
        net = assemble_yann(f, compute_big_m_exact(f))
        rng = np.random.default_rng(0)
        coeffs, offsets = max_affine_pieces(f)
        pts = list(rng.uniform(-2, 2, size=(300, 2)))
        pts += list(facet_points(coeffs, offsets, f.domain_box, rng, 20))
        for x in pts:
            sel = forward_trace(net, x).layer_outputs[2]
            assert np.all(np.isin(sel, (0.0, 1.0)))
            assert np.count_nonzero(sel) <= 1


class TestForwardStructured:
    def test_matches_dense_everywhere(self):
        f = generate_vector_pwa(23, 2, 2, 18, (-2.0, 2.0))
        net = assemble_yann(f, compute_big_m_exact(f))
        rng = np.random.default_rng(1)
        for x in rng.uniform(-2, 2, size=(500, 2)):
            d = forward_dense(net, x)
            s = forward_structured(net, x)
            assert s.region_index == d.region_index
            np.testing.assert_allclose(s.output, d.output, atol=1e-12)

    def test_identical_region_at_facets(self):
        f = generate_max_affine(29, 2, 16, (-2.0, 2.0))
        net = assemble_yann(f, compute_big_m_exact(f))
        coeffs, offsets = max_affine_pieces(f)
        rng = np.random.default_rng(2)
        pts = facet_points(coeffs, offsets, f.domain_box, rng, count=40)
        assert len(pts) >= 10
        for x in pts:
            assert (forward_structured(net, x).region_index
                    == forward_dense(net, x).region_index)

    def test_p1_reduces_to_plain_affine(self, one_piece_pwa):
        net = assemble_yann(one_piece_pwa, compute_big_m_exact(one_piece_pwa))
        for x in np.linspace(0, 2, 21):
            s = forward_structured(net, np.array([x]))
            d = forward_dense(net, np.array([x]))
            assert s.output[0] == pytest.approx(3 * x + 1, abs=1e-12)
            np.testing.assert_allclose(s.output, d.output, atol=1e-12)

    def test_yann_l_structured_path(self, abs_pwa):
        netl = assemble_yann_l(abs_pwa)
        for x in np.linspace(-1, 1, 21):
            s = forward_structured(netl, np.array([x]))
            d = forward_dense(netl, np.array([x]))
            assert s.region_index == d.region_index
            np.testing.assert_allclose(s.output, d.output, atol=1e-12)

    def test_checker_unsupported(self, abs_pwa):
        net = assemble_checker(abs_pwa)
        with pytest.raises(ValueError, match="checker"):
            forward_structured(net, np.array([0.5]))

    def test_missing_structure_descriptor(self, abs_net):
        abs_net.structure = None
        abs_net.cache.clear()
        with pytest.raises(ValueError, match="structure"):
            forward_structured(abs_net, np.array([0.5]))


class TestForwardBatch:
    def test_single_row_equals_forward(self, abs_net):
        x = np.array([0.3])
        out = forward_batch(abs_net, x[None, :])
        assert out.shape == (1, 1)
        assert out[0, 0] == pytest.approx(
            forward_dense(abs_net, x).output[0], abs=1e-12)

    def test_thousand_rows_match_per_point(self):
        f = generate_vector_pwa(31, 2, 3, 12, (-2.0, 2.0))
        net = assemble_yann(f, compute_big_m_exact(f))
        rng = np.random.default_rng(3)
        X = rng.uniform(-2, 2, size=(1000, 2))
        outs, regions = forward_batch(net, X, with_regions=True)
        for i in range(X.shape[0]):
            ref = forward_dense(net, X[i])
            np.testing.assert_allclose(outs[i], ref.output, atol=1e-12)
            want = -1 if ref.region_index is None else ref.region_index
            assert regions[i] == want

    def test_structured_mode_matches_dense_mode(self):
        f = generate_max_affine(37, 2, 10, (-2.0, 2.0))
        net = assemble_yann(f, compute_big_m_exact(f))
        rng = np.random.default_rng(4)
        X = rng.uniform(-2, 2, size=(200, 2))
        a = forward_batch(net, X, mode="dense")
        b = forward_batch(net, X, mode="structured")
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_out_of_domain_rows(self, abs_net):
        X = np.array([[0.5], [5.0]])
        outs, regions = forward_batch(abs_net, X, with_regions=True)
        assert regions.tolist() == [1, -1]
        assert np.all(outs[1] == 0.0)

    def test_bad_shape(self, abs_net):
        with pytest.raises(ValueError, match="batch"):
            forward_batch(abs_net, np.zeros((4, 3)))


class TestPrecision:
    def test_fp32_conversion_cached_once(self, abs_net):
        forward_dense(abs_net, np.array([0.5]), Precision.FP32)
        cache = abs_net.cache["layers_fp32"]
        forward_dense(abs_net, np.array([0.2]), Precision.FP32)
        assert abs_net.cache["layers_fp32"] is cache
        assert cache[0][0].dtype == np.float32

    def test_fp32_error_small_on_desk_problem(self):
        f = generate_vector_pwa(41, 2, 2, 30, (-2.0, 2.0))
        net = assemble_yann(f, compute_big_m_exact(f))
        rng = np.random.default_rng(5)
        X = rng.uniform(-2, 2, size=(1000, 2))
        out32 = forward_batch(net, X, Precision.FP32)
        assert out32.dtype == np.float32
        worst = 0.0
        for i in range(X.shape[0]):
            ref = evaluate_naive(f, X[i]).output
            worst = max(worst, float(np.abs(out32[i] - ref).max()))
        assert worst <= 1e-3

    def test_fp32_selector_still_exact(self, abs_net):
        res = forward_dense(abs_net, np.array([0.0]), Precision.FP32)
        assert res.region_index == 0
        assert res.output[0] == 0.0


class TestCsvIo:
    def test_round_trip(self, tmp_path, abs_net):
        points = np.linspace(-1, 1, 7)[:, None]
        path_in = tmp_path / "pts.csv"
        with open(path_in, "w") as fh:
            fh.write("x0\n")
            for v in points.ravel():
                fh.write(f"{float(v)!r}\n")
        back = read_points_csv(path_in, 1)
        assert np.array_equal(back, points)
        outs, regions = forward_batch(abs_net, back, with_regions=True)
        path_out = tmp_path / "out.csv"
        write_batch_csv(path_out, np.asarray(outs, dtype=float), regions)
        lines = path_out.read_text().strip().splitlines()
        assert lines[0] == "u0,region"
        assert len(lines) == 8

    def test_header_mismatch(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="header"):
            read_points_csv(path, 2)
