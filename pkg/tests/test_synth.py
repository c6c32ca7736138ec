import itertools
import math

import numpy as np
import pytest

from usdeid import font, ingest, roi, synth
from usdeid.imgbuf import BoundingBox
from usdeid.metrics import dice_score


def wedge_spec(seed=0, frames=2, texts=()):
    return synth.PhantomSpec(
        "wedge", 300, 620, frames, seed, center=(310.0, 40.0), r_outer=240.0,
        r_inner=0.0, theta_left=math.pi / 2 + 1.2,
        theta_right=math.pi / 2 - 1.2, texts=texts)


class TestRender:
    def test_rect_phantom_mask_is_rect(self):
        rect = BoundingBox(10, 12, 30, 20)
        spec = synth.PhantomSpec("rect", 60, 80, 1, 0, rect=rect)
        _, truth = synth.render(spec)
        expect = np.zeros((60, 80), dtype=bool)
        expect[rect.slices()] = True
        assert np.array_equal(truth.roi_mask, expect)

    def test_seeded_render_deterministic(self):
        spec = wedge_spec(seed=9, frames=3)
        a, _ = synth.render(spec)
        b, _ = synth.render(spec)
        assert all(np.array_equal(x, y) for x, y in zip(a.frames, b.frames))

    def test_frames_differ_between_indices(self):
        stack, _ = synth.render(wedge_spec(seed=4, frames=2))
        assert not np.array_equal(stack.frames[0], stack.frames[1])

    def test_text_constant_across_frames(self):
        spec = wedge_spec(seed=2, frames=4,
                          texts=(synth.PlantedText(6, 6, "HR 60", 2),))
        stack, truth = synth.render(spec)
        box, _ = truth.text_boxes[0]
        crops = [f[box.slices()] for f in stack.frames]
        assert all(np.array_equal(crops[0], c) for c in crops[1:])
        assert crops[0].max() == 255

    def test_overlay_map_recovers_text_pixels_exactly(self):
        from usdeid.textmask import static_overlay_map

        texts = (synth.PlantedText(8, 6, "DOE^JANE", 2),
                 synth.PlantedText(8, 280, "HR 64", 2))
        stack, _ = synth.render(wedge_spec(seed=31, frames=8, texts=texts))
        expect = np.zeros((300, 620), dtype=bool)
        for t in texts:
            ink = font.render_text(t.text, t.scale)
            expect[t.y:t.y + ink.shape[0], t.x:t.x + ink.shape[1]] |= ink
        assert np.array_equal(static_overlay_map(stack), expect)

    def test_speckle_range(self):
        stack, truth = synth.render(wedge_spec(seed=8, frames=1))
        values = stack.frames[0][truth.roi_mask]
        assert values.min() >= 40 and values.max() <= 255
        assert stack.frames[0][~truth.roi_mask].max() == 0

    def test_overlap_flag(self):
        clear = wedge_spec(texts=(synth.PlantedText(6, 6, "A", 1),))
        _, truth = synth.render(clear)
        assert not truth.texts_overlap_roi
        inside = wedge_spec(texts=(synth.PlantedText(300, 150, "A", 1),))
        _, truth = synth.render(inside)
        assert truth.texts_overlap_roi

    def test_shape_overflow_rejected(self):
        spec = synth.PhantomSpec(
            "wedge", 100, 100, 1, 0, center=(50.0, 40.0), r_outer=90.0,
            r_inner=0.0, theta_left=math.pi / 2 + 1.0,
            theta_right=math.pi / 2 - 1.0)
        with pytest.raises(ValueError):
            synth.render(spec)

    def test_text_overflow_rejected(self):
        spec = synth.PhantomSpec(
            "rect", 40, 40, 1, 0, rect=BoundingBox(5, 20, 10, 10),
            texts=(synth.PlantedText(30, 2, "LONGSTRING", 1),))
        with pytest.raises(ValueError):
            synth.render(spec)

    def test_rasterization_consistent_with_fit_rasterizer(self):
        specs = [
            wedge_spec(),
            synth.PhantomSpec(
                "notched_wedge", 300, 620, 1, 0, center=(310.0, 40.0),
                r_outer=240.0, r_inner=60.0, theta_left=math.pi / 2 + 1.2,
                theta_right=math.pi / 2 - 1.2),
            synth.PhantomSpec("rect", 300, 620, 1, 0,
                              rect=BoundingBox(100, 50, 400, 200)),
        ]
        for spec in specs:
            truth = synth.rasterize_region(spec)
            analytic = roi.shape_to_mask(spec.shape(), spec.rows, spec.cols)
            assert dice_score(truth, analytic, True) >= 0.99


class TestAuthorDicom:
    def test_round_trip_pixels(self, rng):
        frames = [rng.integers(0, 256, (6, 7), dtype=np.uint8) for _ in range(3)]
        stack = ingest.FrameStack(frames, 1)
        out = ingest.dataset_to_stack(ingest.parse_dicom(synth.author_dicom(stack)))
        assert all(np.array_equal(a, b) for a, b in zip(out.frames, frames))

    def test_patient_fields_in_header(self):
        stack, _ = synth.render(wedge_spec(frames=1))
        data = synth.author_dicom(stack, {"PatientName": "ROE^JOHN",
                                          "PatientID": "42"})
        rows = ingest.extract_header_csv(ingest.parse_dicom(data))
        assert ("0010,0010", "PN", "ROE^JOHN") in rows
        assert ("0010,0020", "LO", "42") in rows

    def test_number_of_frames_written_as_decimal_string(self):
        stack, _ = synth.render(wedge_spec(frames=3))
        ds = ingest.parse_dicom(synth.author_dicom(stack))
        elem = ds.get(ingest.TAG_NUMBER_OF_FRAMES)
        assert elem.vr == "IS"
        assert elem.value.decode("ascii").strip() == "3"

    def test_odd_length_values_padded_even(self):
        stack, _ = synth.render(wedge_spec(frames=1))
        data = synth.author_dicom(stack, {"PatientID": "123"})
        ds = ingest.parse_dicom(data)  # parser enforces structural sanity
        assert ds.get((0x0010, 0x0020)).value == b"123 "


class TestSpecSerialization:
    def test_round_trip_sector(self):
        spec = wedge_spec(seed=5, frames=4,
                          texts=(synth.PlantedText(6, 6, "HR 77", 2),))
        again = synth.spec_from_text(synth.spec_to_text(spec))
        assert again == spec

    def test_round_trip_rect(self):
        spec = synth.PhantomSpec(
            "rect", 50, 70, 2, 3, rect=BoundingBox(4, 5, 30, 20),
            texts=(synth.PlantedText(2, 2, "A B", 1),))
        assert synth.spec_from_text(synth.spec_to_text(spec)) == spec

    def test_text_value_may_contain_spaces_and_equals(self):
        spec = synth.PhantomSpec(
            "rect", 50, 120, 1, 0, rect=BoundingBox(4, 30, 30, 15),
            texts=(synth.PlantedText(2, 2, "A = B 2", 1),))
        assert synth.spec_from_text(synth.spec_to_text(spec)).texts == spec.texts


class TestCorpus:
    def test_counts_and_kinds(self):
        specs = synth.make_phantom_specs(seed=0, per_kind=2)
        assert len(specs) == 6
        assert {s.kind for s in specs} == set(synth.KINDS)

    def test_no_text_overlaps_region(self, small_corpus):
        for _, _, truth in small_corpus:
            assert not truth.texts_overlap_roi

    def test_deterministic(self):
        assert synth.make_phantom_specs(seed=6) == synth.make_phantom_specs(seed=6)


class TestFont:
    def test_all_glyphs_full_cell(self):
        for ch, bitmap in font.GLYPHS.items():
            assert bitmap.shape == (7, 5), ch
            assert bitmap.any(), ch

    def test_tight_bitmaps_pairwise_distinct(self):
        tights = {}
        for ch in font.GLYPHS:
            glyph, _, _ = font.glyph_tight(ch)
            rows = np.nonzero(glyph.any(axis=1))[0]
            tights[ch] = glyph[rows.min():rows.max() + 1]
        for a, b in itertools.combinations(tights, 2):
            if tights[a].shape == tights[b].shape:
                assert not np.array_equal(tights[a], tights[b]), (a, b)

    def test_render_size_matches_contract(self):
        ink = font.render_text("AB C", 2)
        assert ink.shape == font.text_size("AB C", 2)

    def test_unsupported_character_rejected(self):
        with pytest.raises(ValueError):
            font.render_text("é")
