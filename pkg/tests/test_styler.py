import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from focalstyle import (
    AlphaMap,
    ConfigurationError,
    DivergenceError,
    ImageTensor,
    StyleConfig,
    content_loss,
    gram_matrix,
    style_loss,
    stylize,
    weighted_content_loss,
    write_trace,
)
from focalstyle.backends.base import BackendDescriptor, ClassifierBackend, FeatureMap
from focalstyle.styler import TRACE_HEADER


class TestContentLoss:
    def test_zero_at_target(self, rng):
        f = rng.standard_normal((3, 4, 5))
        assert content_loss(f, f) == 0.0

    def test_hand_value(self):
        f = np.zeros((1, 1, 2))
        p = np.array([[[3.0, 4.0]]])
        assert content_loss(f, p) == pytest.approx(25.0)

    @given(
        f=hnp.arrays(np.float64, (2, 3, 3), elements=st.floats(-5, 5)),
        p=hnp.arrays(np.float64, (2, 3, 3), elements=st.floats(-5, 5)),
        c=st.floats(0, 10),
    )
    def test_constant_alpha_equals_scaled_unweighted(self, f, p, c):
        alpha = np.full((3, 3), c)
        weighted = weighted_content_loss(f, p, alpha)
        plain = c * content_loss(f, p)
        assert weighted == pytest.approx(plain, rel=1e-6, abs=1e-9)

    def test_alpha_zero_region_ignored(self, rng):
        f = rng.standard_normal((2, 4, 4))
        p = rng.standard_normal((2, 4, 4))
        alpha = np.zeros((4, 4))
        alpha[:2] = 1.0
        expected = ((f - p)[:, :2] ** 2).sum()
        assert weighted_content_loss(f, p, alpha) == pytest.approx(expected)

    def test_shape_mismatch_raises(self, rng):
        with pytest.raises(ValueError):
            weighted_content_loss(
                rng.standard_normal((2, 3, 3)), rng.standard_normal((2, 3, 3)), np.ones((2, 2))
            )


class TestGramMatrix:
    def test_hand_value(self):
        # channels [1, 0] and [0, 1] over two positions; N = 2*1*2 = 4
        f = np.array([[[1.0, 0.0]], [[0.0, 1.0]]])
        np.testing.assert_allclose(gram_matrix(f), np.eye(2) / 4.0)

    def test_matches_einsum_oracle(self, rng):
        f = rng.standard_normal((5, 6, 7))
        expected = np.einsum("chw,dhw->cd", f, f) / (5 * 6 * 7)
        np.testing.assert_allclose(gram_matrix(f), expected, rtol=1e-12)

    def test_symmetric_psd(self, rng):
        g = gram_matrix(rng.standard_normal((4, 5, 5)))
        np.testing.assert_allclose(g, g.T, rtol=1e-12)
        eigvals = np.linalg.eigvalsh(g)
        assert eigvals.min() >= -1e-12

    def test_style_loss_zero_iff_equal(self, rng):
        f = rng.standard_normal((3, 4, 4))
        g = gram_matrix(f)
        assert style_loss(g, g) == 0.0
        assert style_loss(g, g + 0.1) > 0.0


class TestStyleConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"init_mode": "sideways"},
            {"iterations": -1},
            {"step_size": 0.0},
            {"style_weight": -2.0},
            {"content_layers": {}},
            {"content_layers": {"pixels": -1.0}},
            {"style_layers": {"pixels": float("nan")}},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigurationError):
            StyleConfig(**kwargs)


class TestStylize:
    def test_zero_iterations_returns_init(self, toy_backend, rng):
        content = ImageTensor(rng.random((12, 12, 3)))
        style = ImageTensor(rng.random((12, 12, 3)))
        result = stylize(toy_backend, content, style, config=StyleConfig(iterations=0))
        assert np.array_equal(result.image.data, content.data)
        assert result.trace == ()

    def test_random_init_is_seeded(self, toy_backend, rng):
        content = ImageTensor(rng.random((10, 10, 3)))
        style = ImageTensor(rng.random((10, 10, 3)))
        cfg = StyleConfig(iterations=0, init_mode="random", random_seed=5)
        a = stylize(toy_backend, content, style, config=cfg)
        b = stylize(toy_backend, content, style, config=cfg)
        assert np.array_equal(a.image.data, b.image.data)
        c = stylize(
            toy_backend, content, style, config=StyleConfig(iterations=0, init_mode="random", random_seed=6)
        )
        assert not np.array_equal(a.image.data, c.image.data)

    def test_deterministic_full_run(self, toy_backend, rng):
        content = ImageTensor(rng.random((16, 16, 3)))
        style = ImageTensor(rng.random((16, 16, 3)))
        cfg = StyleConfig(iterations=8, init_mode="random", random_seed=3)
        a = stylize(toy_backend, content, style, config=cfg)
        b = stylize(toy_backend, content, style, config=cfg)
        assert np.array_equal(a.image.data, b.image.data)
        assert a.trace == b.trace

    def test_trace_rows_and_first_loss(self, toy_backend, rng):
        content = ImageTensor(rng.random((12, 12, 3)))
        style = ImageTensor(rng.random((12, 12, 3)))
        result = stylize(toy_backend, content, style, config=StyleConfig(iterations=6))
        assert len(result.trace) == 6
        assert [row[0] for row in result.trace] == list(range(6))
        it0, c0, s0, t0 = result.trace[0]
        assert c0 == pytest.approx(0.0, abs=1e-12)  # content init
        assert t0 == pytest.approx(c0 + s0)
        assert all(np.isfinite(v) for row in result.trace for v in row)

    def test_output_stays_in_range(self, toy_backend, rng):
        content = ImageTensor(rng.random((10, 10, 3)))
        style = ImageTensor(rng.random((10, 10, 3)))
        result = stylize(
            toy_backend, content, style, config=StyleConfig(iterations=20, step_size=0.5)
        )
        assert result.image.data.min() >= 0.0
        assert result.image.data.max() <= 1.0

    def test_loss_decreases_overall(self, toy_backend, rng):
        content = ImageTensor(rng.random((16, 16, 3)))
        style = ImageTensor(rng.random((16, 16, 3)))
        cfg = StyleConfig(iterations=60, init_mode="random", random_seed=1)
        result = stylize(toy_backend, content, style, config=cfg)
        assert result.trace[-1][3] < result.trace[0][3]

    def test_high_alpha_pins_content(self, toy_backend, rng):
        content = ImageTensor(rng.random((12, 12, 3)))
        style = ImageTensor(rng.random((12, 12, 3)))
        alpha = AlphaMap(np.full((12, 12), 1000.0, dtype=np.float32))
        result = stylize(toy_backend, content, style, alpha, StyleConfig(iterations=40))
        assert np.abs(result.image.data - content.data).max() < 0.05

    def test_alpha_resampled_to_layer_grids(self, toy_backend, rng):
        # content 20x20 but luma16 features are 16x16: alpha must be resampled
        content = ImageTensor(rng.random((20, 20, 3)))
        style = ImageTensor(rng.random((20, 20, 3)))
        alpha = AlphaMap(rng.random((20, 20)).astype(np.float32))
        result = stylize(toy_backend, content, style, alpha, StyleConfig(iterations=2))
        assert len(result.trace) == 2

    def test_alpha_shape_mismatch_raises(self, toy_backend, rng):
        content = ImageTensor(rng.random((12, 12, 3)))
        style = ImageTensor(rng.random((12, 12, 3)))
        alpha = AlphaMap(np.ones((6, 6), dtype=np.float32))
        with pytest.raises(ValueError):
            stylize(toy_backend, content, style, alpha)

    def test_unknown_layer_raises(self, toy_backend, rng):
        content = ImageTensor(rng.random((8, 8, 3)))
        style = ImageTensor(rng.random((8, 8, 3)))
        with pytest.raises(ConfigurationError):
            stylize(
                toy_backend,
                content,
                style,
                config=StyleConfig(content_layers={"conv9_9": 1.0}),
            )

    def test_custom_layer_weights(self, toy_backend, rng):
        content = ImageTensor(rng.random((8, 8, 3)))
        style = ImageTensor(rng.random((8, 8, 3)))
        cfg = StyleConfig(
            content_layers={"pixels": 2.0},
            style_layers={"quadrants": 0.5},
            iterations=3,
        )
        result = stylize(toy_backend, content, style, config=cfg)
        assert len(result.trace) == 3

    def test_style_image_size_may_differ(self, toy_backend, rng):
        content = ImageTensor(rng.random((16, 16, 3)))
        style = ImageTensor(rng.random((24, 28, 3)))
        result = stylize(toy_backend, content, style, config=StyleConfig(iterations=2))
        assert result.image.data.shape == (16, 16, 3)


class _NanBackend(ClassifierBackend):
    """Emits exploding features so the objective goes non-finite."""

    def __init__(self, blow_up_at: int):
        self.descriptor = BackendDescriptor("nan", 2, ("f",), ("f",), "flexible")
        self._calls = 0
        self._blow_up_at = blow_up_at

    @property
    def layer_names(self):
        return ("f",)

    def classify(self, image):
        raise NotImplementedError

    def features_with_vjp(self, image, layers):
        call = self._calls
        self._calls += 1
        scale = 1.0 if call < self._blow_up_at else 1e200
        data = np.full((1, 2, 2), scale) * (1.0 + image.data.mean())
        feats = {"f": FeatureMap("f", data)}

        def vjp(cotangents):
            g = np.asarray(cotangents["f"]).sum()
            return np.full((image.height, image.width, 3), g)

        return feats, vjp


class TestDivergence:
    def test_raises_with_iteration_number(self, rng):
        backend = _NanBackend(blow_up_at=5)
        content = ImageTensor(rng.random((4, 4, 3)))
        style = ImageTensor(rng.random((4, 4, 3)))
        with pytest.raises(DivergenceError) as info:
            stylize(backend, content, style, config=StyleConfig(iterations=50))
        # targets consumed 2 calls; iterate k uses call k+2
        assert info.value.iteration == 3
        assert "iteration 3" in str(info.value)


class TestWriteTrace:
    def test_header_and_rows(self, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace(path, [(0, 1.5, 2.5, 4.0), (1, 1.0, 2.0, 3.0)])
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(TRACE_HEADER)
        assert lines[0] == "iteration,content_loss,style_loss,total_loss"
        assert lines[1] == "0,1.5,2.5,4.0"
        assert len(lines) == 3

    def test_round_trips_through_csv_reader(self, tmp_path):
        import csv

        path = tmp_path / "trace.csv"
        rows = [(0, 0.1234567890123, 2.5e-8, 0.12345681401)]
        write_trace(path, rows)
        with open(path) as fh:
            parsed = list(csv.DictReader(fh))
        assert float(parsed[0]["content_loss"]) == rows[0][1]
        assert float(parsed[0]["style_loss"]) == rows[0][2]

    def test_empty_trace_writes_header_only(self, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace(path, [])
        assert path.read_text() == "iteration,content_loss,style_loss,total_loss\n"
