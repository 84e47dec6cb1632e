import numpy as np
import pytest

from vidprompt import (
    BinaryMask,
    ContractViolation,
    EmptyMarkError,
    OracleTracker,
    PromptKind,
    PromptLayer,
    PromptStyle,
    PropagationConfig,
    PropagationMode,
    RedrawMode,
    alpha_blend,
    mask_centroid,
    oracle_propagate,
    overlay_video,
    propagate_prompt,
    redraw_layer,
    synthesize_prompt,
    validate_prompt,
)
from vidprompt.geometry import min_enclosing_circle
from synthetic import make_static_clip, make_textured_clip

STYLE = PromptStyle(color=(255, 60, 0), fill_alpha=128, stroke_alpha=255,
                    stroke_width=2)


def centered_point_prompt(centers, anchor, size=64, half=6):
    cx, cy = int(centers[anchor][0]), int(centers[anchor][1])
    bits = np.zeros((size, size), dtype=bool)
    bits[cy - half:cy + half + 1, cx - half:cx + half + 1] = True
    return synthesize_prompt(BinaryMask(bits), PromptKind.POINT, STYLE, seed=0)


class TestEnclosingCircle:
    def test_345_right_triangle(self):
        c = min_enclosing_circle(np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]]))
        assert (c.x, c.y) == pytest.approx((1.5, 2.0), abs=1e-9)
        assert c.r == pytest.approx(2.5, abs=1e-9)

    def test_contains_all_points(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            pts = rng.uniform(0, 100, size=(rng.integers(1, 40), 2))
            c = min_enclosing_circle(pts)
            d = np.hypot(pts[:, 0] - c.x, pts[:, 1] - c.y)
            assert d.max() <= c.r * (1 + 1e-9)

    def test_deterministic(self):
        pts = np.random.default_rng(1).uniform(0, 50, size=(30, 2))
        assert min_enclosing_circle(pts) == min_enclosing_circle(pts)


class TestRedraw:
    def test_coincident_points_filled_dot(self):
        positions = np.tile([[20.0, 24.0]], (10, 1))
        visible = np.ones(10, dtype=bool)
        layer = redraw_layer(positions, visible, PropagationConfig(), (64, 64),
                             STYLE)
        ys, xs = np.nonzero(layer.mark)
        assert xs.mean() == pytest.approx(20.0, abs=0.5)
        assert ys.mean() == pytest.approx(24.0, abs=0.5)
        d = np.hypot(xs - 20.0, ys - 24.0)
        assert d.max() <= STYLE.stroke_width + 0.01
        # filled: the center pixel itself is marked
        assert layer.mark[24, 20]

    def test_circle_outline_at_mec(self):
        positions = np.array([[20.0, 20.0], [36.0, 20.0], [28.0, 34.0]])
        visible = np.ones(3, dtype=bool)
        layer = redraw_layer(positions, visible, PropagationConfig(), (64, 64),
                             STYLE)
        c = min_enclosing_circle(positions)
        ys, xs = np.nonzero(layer.mark)
        d = np.hypot(xs - c.x, ys - c.y)
        half = STYLE.stroke_width / 2
        assert d.min() >= c.r - half - 0.8
        assert d.max() <= c.r + half + 0.8
        # hollow center
        assert not layer.mark[int(c.y), int(c.x)]

    def test_zero_visibility_transparent(self):
        positions = np.zeros((5, 2))
        visible = np.zeros(5, dtype=bool)
        layer = redraw_layer(positions, visible, PropagationConfig(), (32, 32),
                             STYLE)
        assert layer.is_empty()

    def test_below_min_fraction_transparent(self):
        positions = np.tile([[10.0, 10.0]], (10, 1))
        visible = np.zeros(10, dtype=bool)
        visible[0] = True  # 10% < default 25%
        layer = redraw_layer(positions, visible, PropagationConfig(), (32, 32),
                             STYLE)
        assert layer.is_empty()

    def test_original_shape_translated(self):
        mask = np.zeros((64, 64), dtype=bool)
        mask[20:30, 20:30] = True
        authored = synthesize_prompt(BinaryMask(mask), PromptKind.RECTANGLE,
                                     STYLE, seed=0)
        seeds = np.array([[24.0, 24.0], [26.0, 25.0]])
        positions = seeds + np.array([5.0, -3.0])
        visible = np.ones(2, dtype=bool)
        cfg = PropagationConfig(redraw=RedrawMode.ORIGINAL)
        layer = redraw_layer(positions, visible, cfg, (64, 64), STYLE,
                             authored=authored, seed_positions=seeds)
        expected = np.zeros_like(authored.pixels)
        expected[:, :] = np.roll(np.roll(authored.pixels, -3, axis=0), 5, axis=1)
        assert np.array_equal(layer.pixels, expected)


class TestPropagateModes:
    def test_none_mode_transparent_elsewhere(self):
        clip, centers = make_static_clip(0, num_frames=5)
        layer = centered_point_prompt(centers, 2)
        pp = propagate_prompt(clip, layer, 2,
                              PropagationConfig(mode=PropagationMode.NONE))
        for i, lay in enumerate(pp.layers):
            if i == 2:
                assert np.array_equal(lay.pixels, layer.pixels)
            else:
                assert lay.is_empty()

    def test_stom_static_fixpoint(self):
        clip, centers = make_static_clip(1, num_frames=6)
        layer = centered_point_prompt(centers, 0)
        pp = propagate_prompt(clip, layer, 0, PropagationConfig())
        authored_c = mask_centroid(BinaryMask(layer.mark))
        for lay in pp.layers:
            ys, xs = np.nonzero(lay.mark)
            assert np.hypot(xs.mean() - authored_c.x,
                            ys.mean() - authored_c.y) <= 1.0

    def test_stom_follows_translating_square(self):
        clip, centers = make_textured_clip(2, num_frames=32)
        anchor = 16
        layer = centered_point_prompt(centers, anchor)
        pp = propagate_prompt(clip, layer, anchor, PropagationConfig())
        errs = [np.hypot(pp.circles[t].x - centers[t][0],
                         pp.circles[t].y - centers[t][1])
                for t in range(len(clip))]
        assert np.mean(errs) <= 1.5
        assert np.max(errs) <= 3.0

    def test_anchor_layer_verbatim(self):
        clip, centers = make_textured_clip(3, num_frames=8)
        layer = centered_point_prompt(centers, 4)
        pp = propagate_prompt(clip, layer, 4, PropagationConfig())
        assert pp.layers[4] is layer

    def test_single_frame_mode_equivalence(self):
        clip, centers = make_static_clip(2, num_frames=1)
        layer = centered_point_prompt(centers, 0)
        masks = [BinaryMask(layer.mark)]
        outs = []
        for mode, kwargs in [(PropagationMode.STOM, {}),
                             (PropagationMode.NONE, {}),
                             (PropagationMode.ORACLE, {"oracle_masks": masks})]:
            pp = propagate_prompt(clip, layer, 0,
                                  PropagationConfig(mode=mode), **kwargs)
            outs.append(overlay_video(clip, pp)[0].pixels)
        assert np.array_equal(outs[0], outs[1])
        assert np.array_equal(outs[0], outs[2])

    def test_pluggable_oracle_tracker(self):
        clip, centers = make_textured_clip(4, num_frames=12)
        anchor = 6
        layer = centered_point_prompt(centers, anchor)
        tracker = OracleTracker(offsets=centers)
        pp = propagate_prompt(clip, layer, anchor, PropagationConfig(),
                              tracker=tracker)
        errs = [np.hypot(pp.circles[t].x - centers[t][0],
                         pp.circles[t].y - centers[t][1])
                for t in range(len(clip))]
        assert max(errs) <= 0.01

    def test_contracts(self):
        clip, centers = make_static_clip(3, num_frames=4)
        layer = centered_point_prompt(centers, 0)
        with pytest.raises(ContractViolation):
            propagate_prompt(clip, layer, 9, PropagationConfig())
        with pytest.raises(EmptyMarkError):
            propagate_prompt(clip, PromptLayer.transparent(64, 64), 0,
                             PropagationConfig())
        small = PromptLayer.transparent(32, 32)
        with pytest.raises(ContractViolation):
            propagate_prompt(clip, small, 0, PropagationConfig())
        with pytest.raises(ContractViolation):
            propagate_prompt(clip, layer, 0,
                             PropagationConfig(mode=PropagationMode.ORACLE))


class TestOraclePropagate:
    def make_moving_masks(self, n=6):
        masks = []
        for t in range(n):
            bits = np.zeros((48, 48), dtype=bool)
            bits[10 + t:22 + t, 8 + 2 * t:20 + 2 * t] = True
            masks.append(BinaryMask(bits))
        return masks

    def test_per_frame_rectangles_follow_bbox(self):
        masks = self.make_moving_masks()
        pp = oracle_propagate(masks, PromptKind.RECTANGLE, STYLE, seed=5)
        for t, (m, lay) in enumerate(zip(masks, pp.layers)):
            rep = validate_prompt(lay, m, PromptKind.RECTANGLE,
                                  stroke_width=STYLE.stroke_width)
            assert rep.valid, (t, rep.violations)

    def test_empty_mask_frame_transparent(self):
        masks = self.make_moving_masks(4)
        masks[2] = BinaryMask(np.zeros((48, 48), dtype=bool))
        pp = oracle_propagate(masks, PromptKind.ELLIPSE, STYLE, seed=5)
        assert pp.layers[2].is_empty()
        assert not pp.layers[1].is_empty()

    def test_single_frame_equals_synthesize(self):
        masks = self.make_moving_masks(1)
        pp = oracle_propagate(masks, PromptKind.MASK, STYLE, seed=9)
        frame_seed = int(np.random.default_rng([9, 0]).integers(2 ** 63))
        direct = synthesize_prompt(masks[0], PromptKind.MASK, STYLE, frame_seed)
        assert np.array_equal(pp.layers[0].pixels, direct.pixels)

    def test_all_empty_raises(self):
        from vidprompt import EmptyMaskError
        empty = [BinaryMask(np.zeros((8, 8), dtype=bool))] * 3
        with pytest.raises(EmptyMaskError):
            oracle_propagate(empty, PromptKind.MASK, STYLE, seed=0)


class TestOverlay:
    def test_transparent_prompt_identity(self):
        clip, centers = make_static_clip(4, num_frames=3)
        layer = centered_point_prompt(centers, 0)
        pp = propagate_prompt(clip, layer, 0,
                              PropagationConfig(mode=PropagationMode.NONE))
        pp.layers[0] = PromptLayer.transparent(64, 64)
        out = overlay_video(clip, pp)
        for a, b in zip(out, clip):
            assert np.array_equal(a.pixels, b.pixels)

    def test_anchor_blend_exact(self):
        clip, centers = make_textured_clip(5, num_frames=4)
        layer = centered_point_prompt(centers, 1)
        pp = propagate_prompt(clip, layer, 1, PropagationConfig())
        out = overlay_video(clip, pp)
        assert np.array_equal(out[1].pixels, alpha_blend(clip[1], layer).pixels)

    def test_purity_and_repeatability(self):
        clip, centers = make_textured_clip(6, num_frames=4)
        layer = centered_point_prompt(centers, 0)
        pp = propagate_prompt(clip, layer, 0, PropagationConfig())
        before = [f.pixels.copy() for f in clip]
        out1 = overlay_video(clip, pp)
        out2 = overlay_video(clip, pp)
        for f, b in zip(clip, before):
            assert np.array_equal(f.pixels, b)
        for a, b in zip(out1, out2):
            assert np.array_equal(a.pixels, b.pixels)

    def test_length_mismatch(self):
        clip, centers = make_static_clip(5, num_frames=4)
        layer = centered_point_prompt(centers, 0)
        pp = propagate_prompt(clip, layer, 0, PropagationConfig())
        with pytest.raises(ContractViolation):
            overlay_video(clip[:3], pp)
