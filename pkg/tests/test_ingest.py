import struct

import numpy as np
import pytest

from usdeid import ingest, synth
from usdeid.errors import (
    CorruptFileError,
    DimensionMismatchError,
    NotDicomError,
    SkippableError,
    UnsupportedDepthError,
    UnsupportedFormatError,
    UnsupportedTransferSyntaxError,
)
from usdeid.imgbuf import FrameStack


def mono_stack(rows=2, cols=2, frames=1, seed=0):
    rng = np.random.default_rng(seed)
    return FrameStack(
        [rng.integers(0, 256, (rows, cols), dtype=np.uint8) for _ in range(frames)], 1)


def read_stack(data: bytes) -> FrameStack:
    return ingest.dataset_to_stack(ingest.parse_dicom(data))


class TestParseDicom:
    def test_round_trip_bit_exact(self):
        stack = mono_stack(2, 2)
        ds = ingest.parse_dicom(synth.author_dicom(stack))
        pixel = ds.get(ingest.TAG_PIXEL_DATA)
        assert pixel.value == stack.frames[0].tobytes()

    def test_missing_magic_is_not_dicom(self):
        with pytest.raises(NotDicomError):
            ingest.parse_dicom(b"\x00" * 200)

    def test_number_of_frames_defaults_to_one(self):
        data = synth.author_dicom(mono_stack(), include_number_of_frames=False)
        ds = ingest.parse_dicom(data)
        assert ds.get(ingest.TAG_NUMBER_OF_FRAMES) is None
        assert ds.pixel_meta.frames == 1

    def test_undefined_length_pixel_data_unsupported(self):
        stack = mono_stack()
        data = synth.author_dicom(stack)
        marker = struct.pack("<HH", 0x7FE0, 0x0010)
        idx = data.index(marker)
        patched = (data[:idx + 8] + struct.pack("<I", 0xFFFFFFFF)
                   + data[idx + 12:])
        with pytest.raises(UnsupportedTransferSyntaxError):
            ingest.parse_dicom(patched)

    def test_foreign_transfer_syntax_rejected(self):
        data = synth.author_dicom(mono_stack())
        patched = data.replace(b"1.2.840.10008.1.2.1\x00",
                               b"1.2.840.10008.1.2.4\x00")
        with pytest.raises(UnsupportedTransferSyntaxError):
            ingest.parse_dicom(patched)

    def test_sixteen_bit_depth_rejected(self):
        data = synth.author_dicom(mono_stack())
        tag = struct.pack("<HH", 0x0028, 0x0100) + b"US" + struct.pack("<H", 2)
        idx = data.index(tag)
        patched = data[:idx + 8] + struct.pack("<H", 16) + data[idx + 10:]
        with pytest.raises(UnsupportedDepthError):
            ingest.parse_dicom(patched)

    def test_unknown_vr_is_corrupt(self):
        data = synth.author_dicom(mono_stack())
        idx = data.index(b"PN") if b"PN" in data else data.index(b"CS")
        patched = data[:idx] + b"ZZ" + data[idx + 2:]
        with pytest.raises(CorruptFileError):
            ingest.parse_dicom(patched)

    def test_non_increasing_tags_are_corrupt(self):
        head = b"\x00" * 128 + b"DICM"
        elem = struct.pack("<HH", 0x0010, 0x0010) + b"PN" + struct.pack("<H", 4) + b"AB^C"
        with pytest.raises(CorruptFileError):
            ingest.parse_dicom(head + elem + elem)

    def test_sequences_skipped_whole(self):
        data = synth.author_dicom(mono_stack(), {"PatientName": "X^Y",
                                                 "PatientID": "77"})
        # splice a defined-length sequence between the patient elements
        marker = struct.pack("<HH", 0x0010, 0x0020)
        idx = data.index(marker)
        seq = (struct.pack("<HH", 0x0010, 0x0018) + b"SQ" + b"\x00\x00"
               + struct.pack("<I", 8) + b"\xfe\xff\x00\xe0\x00\x00\x00\x00")
        patched = data[:idx] + seq + data[idx:]
        ds = ingest.parse_dicom(patched)
        assert ds.get((0x0010, 0x0018)) is None  # skipped, not surfaced
        assert ds.get((0x0010, 0x0020)) is not None
        assert ds.pixel_meta is not None

    def test_truncations_always_classified(self):
        data = synth.author_dicom(mono_stack(8, 8, 2), {"PatientName": "X^Y"})
        rng = np.random.default_rng(9)
        for _ in range(60):
            cut = int(rng.integers(0, len(data)))
            with pytest.raises(SkippableError):
                read_stack(data[:cut])


class TestDatasetToStack:
    def test_two_frame_mono(self):
        stack = mono_stack(4, 3, frames=2)
        out = read_stack(synth.author_dicom(stack))
        assert out.n_frames == 2
        assert all(np.array_equal(a, b) for a, b in zip(out.frames, stack.frames))

    def test_rgb_dataset_is_three_channel(self, rng):
        frames = [rng.integers(0, 256, (3, 5, 3), dtype=np.uint8)]
        out = read_stack(synth.author_dicom(FrameStack(frames, 3)))
        assert out.channels == 3
        assert np.array_equal(out.frames[0], frames[0])

    def test_frame_pixel_layout(self):
        stack = mono_stack(3, 4, frames=2, seed=5)
        data = synth.author_dicom(stack)
        ds = ingest.parse_dicom(data)
        raw = ds.get(ingest.TAG_PIXEL_DATA).value
        out = ingest.dataset_to_stack(ds)
        for f in range(2):
            for r in range(3):
                for c in range(4):
                    assert out.frames[f][r, c] == raw[f * 12 + r * 4 + c]

    def test_unsupported_photometric(self):
        data = synth.author_dicom(mono_stack())
        patched = data.replace(b"MONOCHROME2 ", b"MONOCHROME1 ")
        with pytest.raises(UnsupportedFormatError):
            read_stack(patched)


class TestHeaderCsv:
    def test_patient_name_row(self):
        data = synth.author_dicom(mono_stack(), {"PatientName": "DOE^JANE"})
        rows = ingest.extract_header_csv(ingest.parse_dicom(data))
        assert ("0010,0010", "PN", "DOE^JANE") in rows

    def test_pixel_data_never_listed(self):
        data = synth.author_dicom(mono_stack())
        rows = ingest.extract_header_csv(ingest.parse_dicom(data))
        assert all(tag != "7FE0,0010" for tag, _, _ in rows)

    def test_numeric_vrs_render_as_integers(self):
        data = synth.author_dicom(mono_stack(7, 9))
        rows = {tag: value for tag, _, value in
                ingest.extract_header_csv(ingest.parse_dicom(data))}
        assert rows["0028,0010"] == "7"
        assert rows["0028,0011"] == "9"

    def test_pixel_only_dataset(self):
        rows = ingest.extract_header_csv(ingest.parse_dicom(
            synth.author_dicom(mono_stack())))
        tags = {tag for tag, _, _ in rows}
        assert "0028,0010" in tags and "0010,0010" not in tags


class TestNetpbm:
    def test_read_pgm(self):
        img = ingest.read_pgm(b"P5\n2 2\n255\n\x01\x02\x03\x04")
        assert img.shape == (2, 2) and img[1, 1] == 4

    def test_pgm_round_trip(self, rng):
        img = rng.integers(0, 256, (5, 3), dtype=np.uint8)
        assert np.array_equal(ingest.read_pgm(ingest.write_pgm(img)), img)

    def test_ppm_round_trip(self, rng):
        img = rng.integers(0, 256, (4, 6, 3), dtype=np.uint8)
        assert np.array_equal(ingest.read_ppm(ingest.write_ppm(img)), img)

    def test_comment_in_header(self):
        img = ingest.read_pgm(b"P5\n# camera 3\n2 1 255\n\xaa\xbb")
        assert img[0, 1] == 0xBB

    def test_malformed_header_corrupt(self):
        with pytest.raises(CorruptFileError):
            ingest.read_pgm(b"P5\nx y\n255\n")

    def test_short_payload_corrupt(self):
        with pytest.raises(CorruptFileError):
            ingest.read_pgm(b"P5\n4 4\n255\n\x00")

    def test_wrong_maxval_rejected(self):
        with pytest.raises(UnsupportedDepthError):
            ingest.read_pgm(b"P5\n1 1\n65535\n\x00\x00")


class TestFrameDir(object):
    def test_directory_of_pgms(self, tmp_path, rng):
        for i in range(3):
            img = rng.integers(0, 256, (4, 4), dtype=np.uint8)
            (tmp_path / f"f{i}.pgm").write_bytes(ingest.write_pgm(img))
        stack = ingest.read_frame_dir(tmp_path)
        assert stack.n_frames == 3 and stack.channels == 1

    def test_lexicographic_order(self, tmp_path):
        for name, value in (("b.pgm", 2), ("a.pgm", 1), ("c.pgm", 3)):
            img = np.full((2, 2), value, dtype=np.uint8)
            (tmp_path / name).write_bytes(ingest.write_pgm(img))
        stack = ingest.read_frame_dir(tmp_path)
        assert [f[0, 0] for f in stack.frames] == [1, 2, 3]

    def test_mixed_dimensions_rejected(self, tmp_path):
        (tmp_path / "a.pgm").write_bytes(ingest.write_pgm(np.zeros((2, 2), np.uint8)))
        (tmp_path / "b.pgm").write_bytes(ingest.write_pgm(np.zeros((3, 2), np.uint8)))
        with pytest.raises(DimensionMismatchError):
            ingest.read_frame_dir(tmp_path)

    def test_empty_directory_rejected(self, tmp_path):
        with pytest.raises(CorruptFileError):
            ingest.read_frame_dir(tmp_path)


class TestLoadStack:
    def test_dicom_by_magic_without_extension(self, tmp_path):
        stack = mono_stack()
        path = tmp_path / "mystery"
        path.write_bytes(synth.author_dicom(stack))
        loaded, ds = ingest.load_stack(path)
        assert ds is not None and loaded.n_frames == 1

    def test_png_round_trip(self, tmp_path, rng):
        from PIL import Image

        img = rng.integers(0, 256, (5, 7), dtype=np.uint8)
        path = tmp_path / "x.png"
        Image.fromarray(img).save(path)
        stack, ds = ingest.load_stack(path)
        assert ds is None
        assert np.array_equal(stack.frames[0], img)

    def test_unsupported_extension(self, tmp_path):
        path = tmp_path / "notes.txt"
        path.write_text("hello")
        with pytest.raises(UnsupportedFormatError):
            ingest.load_stack(path)
