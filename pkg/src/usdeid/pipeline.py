"""Batch orchestration: walk an input directory, de-identify every supported
file, and emit frames, audit CSVs, logs, and a size report.

Files are independent work units: one unreadable input is recorded in
skipped.log and the run continues. All run-level artifacts (text CSV, logs,
report) are written from the main thread in deterministic order, so a seeded
run is bit-reproducible apart from log timestamps.
"""

from __future__ import annotations

import csv
import os
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from random import Random

import numpy as np

from . import ingest, roi, textmask
from .errors import EmptyRoiError, SkippableError
from .imgbuf import FrameStack, crop, mask_bbox
from .roi import StructElem, Tunables
from .textmask import Recognizer, TemplateRecognizer, TextRecord

MODES = ("deid", "deid_clean", "deid_one", "deid_us", "find_txt", "convert")

RENAME_ALPHABET = string.ascii_uppercase + string.ascii_lowercase + string.digits
RENAME_LENGTH = 10

TEXT_CSV_HEADER = ("source_file", "output_file", "frame",
                   "x", "y", "width", "height", "text", "confidence")


@dataclass
class JobConfig:
    input_path: Path
    output_path: Path
    mode: str = "deid"
    rename_files: bool = False
    threshold: int = 0
    tunables: Tunables = field(default_factory=Tunables)
    seed: int | None = None
    jobs: int | None = None
    recognizer: Recognizer | None = None

    def __post_init__(self):
        self.input_path = Path(self.input_path)
        self.output_path = Path(self.output_path)
        if self.input_path.resolve() == self.output_path.resolve():
            raise ValueError("input and output paths must differ")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0 <= self.threshold <= 255:
            raise ValueError(f"threshold {self.threshold} outside [0, 255]")


@dataclass(frozen=True)
class ProcessedFile:
    source_id: str
    output_id: str
    frames: int
    before_bytes: int
    after_bytes: int
    fallback: bool = False


@dataclass(frozen=True)
class SkippedFile:
    source_id: str
    reason: str


@dataclass
class JobResult:
    processed: list[ProcessedFile] = field(default_factory=list)
    skipped: list[SkippedFile] = field(default_factory=list)
    records: list[TextRecord] = field(default_factory=list)
    text_csv_bytes: int = 0
    meta_csv_bytes: int = 0


def _discover(input_path: Path) -> list[Path]:
    entries = sorted(p for p in input_path.iterdir() if not p.name.startswith("."))
    return entries


def _assign_output_names(files: list[Path], cfg: JobConfig) -> dict[str, str | None]:
    """Map source name -> output stem; None marks an output collision."""
    rng = Random(cfg.seed)
    names: dict[str, str | None] = {}
    taken: set[str] = set()

    def on_disk(stem: str) -> bool:
        out = cfg.output_path
        return (out / f"{stem}.png").exists() or (out / f"{stem}_f000.png").exists()

    for path in files:
        if cfg.rename_files:
            while True:
                stem = "".join(rng.choice(RENAME_ALPHABET) for _ in range(RENAME_LENGTH))
                if stem not in taken and not on_disk(stem):
                    break
        else:
            stem = path.name if path.is_dir() else path.stem
            if stem in taken or on_disk(stem):
                names[path.name] = None
                continue
        taken.add(stem)
        names[path.name] = stem
    return names


def _input_size(path: Path) -> int:
    if path.is_dir():
        return sum(p.stat().st_size for p in path.iterdir() if p.is_file())
    return path.stat().st_size


def _zero_outside(stack: FrameStack, mask: np.ndarray) -> FrameStack:
    out = stack.copy()
    for f in out.frames:
        f[~mask] = 0
    return out


def _crop_stack(stack: FrameStack, box) -> FrameStack:
    return FrameStack([crop(f, box) for f in stack.frames], stack.channels,
                      stack.source_id)


def _small_feature_mask(stack: FrameStack, thresh: int, cfg: Tunables) -> np.ndarray:
    grays = stack.gray_frames()
    proj = grays[0] if len(grays) == 1 else np.max(np.stack(grays), axis=0)
    return roi.area_filter(roi.threshold(proj, thresh), cfg.min_area_frac)


def _salient_mask(stack: FrameStack, thresh: int, cfg: Tunables) -> np.ndarray:
    grays = stack.gray_frames()
    proj = grays[0] if len(grays) == 1 else np.max(np.stack(grays), axis=0)
    sigma = roi.adaptive_sigma(stack.rows, stack.cols, cfg.sigma_divisor)
    mask = roi.close(roi.threshold(proj, thresh), StructElem(max(1, round(sigma))))
    return roi.largest_component(mask)


@dataclass
class _FileOutcome:
    processed: ProcessedFile | None = None
    skipped: SkippedFile | None = None
    records: list[TextRecord] = field(default_factory=list)
    hdr_csv_bytes: int = 0


def _write_frames(stack: FrameStack, out_dir: Path, stem: str) -> tuple[int, int]:
    """Write one PNG per frame; returns (frame count, total bytes)."""
    from PIL import Image

    total = 0
    for i, frame in enumerate(stack.frames):
        name = f"{stem}.png" if stack.n_frames == 1 else f"{stem}_f{i:03d}.png"
        path = out_dir / name
        Image.fromarray(frame).save(path, format="PNG")
        total += path.stat().st_size
    return stack.n_frames, total


def _write_hdr_csv(ds, out_dir: Path, source_stem: str) -> int:
    path = out_dir / f"{source_stem}_hdr.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("tag", "vr", "value"))
        writer.writerows(ingest.extract_header_csv(ds))
    return path.stat().st_size


def _process_one(path: Path, stem: str | None, cfg: JobConfig,
                 recognizer: Recognizer) -> _FileOutcome:
    source_id = path.name
    outcome = _FileOutcome()
    if stem is None:
        outcome.skipped = SkippedFile(source_id, "output-collision")
        return outcome
    try:
        stack, ds = ingest.load_stack(path, source_id)

        records: list[TextRecord] = []
        boxes = []
        if cfg.mode != "convert":
            overlay = textmask.static_overlay_map(
                stack, cfg.tunables.var_eps, cfg.threshold + cfg.tunables.bright_offset)
            boxes = textmask.detect_text_boxes(overlay)
            grays = stack.gray_frames()
            median = grays[0] if len(grays) == 1 else \
                np.median(np.stack(grays), axis=0).astype(np.uint8)
            for box in boxes:
                crop_img = crop(median, box)
                crop_img[~crop(overlay, box)] = 0
                text, confidence = textmask.recognize(crop_img, recognizer)
                records.append(TextRecord(source_id, 0, box, text, confidence))
        outcome.records = records

        if cfg.mode == "find_txt":
            outcome.processed = ProcessedFile(source_id, stem, 0, _input_size(path), 0)
            return outcome

        work = textmask.mask_text(stack, boxes) if cfg.mode != "convert" else stack
        fallback = False
        if cfg.mode == "deid_clean":
            work = _zero_outside(work, _small_feature_mask(work, cfg.threshold,
                                                           cfg.tunables))
        elif cfg.mode == "deid_one":
            mask = _salient_mask(work, cfg.threshold, cfg.tunables)
            box = mask_bbox(mask)
            if box is None:
                raise EmptyRoiError("no salient component above threshold")
            work = _crop_stack(_zero_outside(work, mask), box)
        elif cfg.mode == "deid_us":
            result = roi.final_roi(work, cfg.threshold, cfg.tunables)
            fallback = result.fallback
            work = _crop_stack(_zero_outside(work, result.mask),
                               mask_bbox(result.mask))

        frames, image_bytes = _write_frames(work, cfg.output_path, stem)
        if ds is not None:
            outcome.hdr_csv_bytes = _write_hdr_csv(ds, cfg.output_path,
                                                   path.stem)
        outcome.processed = ProcessedFile(source_id, stem, frames,
                                          _input_size(path), image_bytes, fallback)
    except SkippableError as exc:
        outcome.skipped = SkippedFile(source_id, exc.reason)
        outcome.records = []
    except OSError:
        outcome.skipped = SkippedFile(source_id, "read-error")
        outcome.records = []
    return outcome


def write_text_csv(records: list[TextRecord], crosswalk: dict[str, str],
                   path: Path) -> int:
    """Audit CSV: one row per recovered text line, with the output crosswalk."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TEXT_CSV_HEADER)
        for rec in records:
            writer.writerow((rec.source_id, crosswalk.get(rec.source_id, ""),
                             rec.frame, rec.box.x, rec.box.y, rec.box.w, rec.box.h,
                             rec.text, f"{rec.confidence:.6f}"))
    return path.stat().st_size


def write_log(result: JobResult, output_path: Path) -> None:
    """processed.log / skipped.log: timestamp, source, outcome per line."""
    ts = datetime.now(timezone.utc).isoformat(timespec="seconds")
    with open(output_path / "processed.log", "w", encoding="utf-8") as fh:
        for p in result.processed:
            fh.write(f"{ts}\t{p.source_id}\tprocessed -> {p.output_id}\n")
    with open(output_path / "skipped.log", "w", encoding="utf-8") as fh:
        for s in result.skipped:
            fh.write(f"{ts}\t{s.source_id}\t{s.reason}\n")


def run(cfg: JobConfig) -> JobResult:
    """Process every supported file under cfg.input_path according to cfg.mode."""
    if not cfg.input_path.is_dir():
        raise NotADirectoryError(f"input path {cfg.input_path} is not a directory")
    cfg.output_path.mkdir(parents=True, exist_ok=True)
    recognizer = cfg.recognizer if cfg.recognizer is not None else TemplateRecognizer()

    files = _discover(cfg.input_path)
    names = _assign_output_names(files, cfg)
    jobs = cfg.jobs or os.cpu_count() or 1
    serial = getattr(recognizer, "concurrent_safe", True) is False

    def work(path: Path) -> _FileOutcome:
        return _process_one(path, names[path.name], cfg, recognizer)

    if jobs == 1 or serial or len(files) <= 1:
        outcomes = [work(p) for p in files]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(work, files))

    result = JobResult()
    for outcome in outcomes:
        if outcome.processed is not None:
            result.processed.append(outcome.processed)
        if outcome.skipped is not None:
            result.skipped.append(outcome.skipped)
        result.records.extend(outcome.records)
        result.meta_csv_bytes += outcome.hdr_csv_bytes

    crosswalk = {p.source_id: p.output_id for p in result.processed}
    csv_path = cfg.output_path / f"{cfg.mode}_text.csv"
    result.text_csv_bytes = write_text_csv(result.records, crosswalk, csv_path)
    result.meta_csv_bytes += result.text_csv_bytes
    write_log(result, cfg.output_path)

    before = sum(p.before_bytes for p in result.processed)
    if before > 0:
        from .metrics import compression_report

        report = compression_report(
            before, sum(p.after_bytes for p in result.processed),
            result.meta_csv_bytes)
        (cfg.output_path / "compression_report.txt").write_text(
            report.render() + "\n", encoding="utf-8")
    return result
