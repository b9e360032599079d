"""End-to-end pipeline: ingest, align, highlight, evaluate, export, report.

Each document pair runs sequentially in its own output directory; pairs
are spread over ``jobs`` worker processes.  All artifacts are written with
fixed formatting and no timestamps so repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import re
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from .aligner import align_documents
from .applications import dump_groundtruth, export_groundtruth, transfer_highlights, write_crops
from .config import DocumentInput, PipelineConfig, config_to_json
from .errors import OcrAlignError, StageError
from .evaluator import compare_to_gold, format_kwic, score_alignment
from .highlight import detect_highlights, dump_highlights, load_backgrounds
from .hocr import parse_hocr
from .jats import parse_jats
from .model import DocumentVersion, dump_alignment, dump_document, unescape_surface
from .report import build_report
from .synth import corrupt_document, generate_document, render_backgrounds


@contextmanager
def stage(name: str):
    """Re-raise any failure as a StageError naming ``name``."""
    try:
        yield
    except StageError:
        raise
    except OcrAlignError as exc:
        raise StageError(name, str(exc), exc.exit_code, type(exc).__name__) from exc
    except OSError as exc:
        where = f" ({exc.filename})" if exc.filename else ""
        raise StageError(name, f"{exc.strerror or exc}{where}", 2, type(exc).__name__) from exc
    except ValueError as exc:
        raise StageError(name, str(exc), 2, type(exc).__name__) from exc


def safe_name(doc_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", doc_id).strip("._") or "document"


@dataclass(frozen=True)
class DocJob:
    name: str
    real: DocumentInput | None = None
    synth_index: int = -1


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def _judgments_csv(report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["xml_index", "ocr_index", "xml_id", "ocr_id", "xml_surface", "ocr_surface",
                "left_lsim", "right_lsim", "verdict"])
    for j in report.judgments:
        w.writerow([j.xml_index, j.ocr_index, j.xml_token.id, j.ocr_token.id,
                    unescape_surface(j.xml_token.surface), unescape_surface(j.ocr_token.surface),
                    f"{j.left_lsim:.4f}", f"{j.right_lsim:.4f}", j.verdict])
    return buf.getvalue()


def _ingest_real(doc: DocumentInput, cfg: PipelineConfig) -> tuple[DocumentVersion, DocumentVersion]:
    with stage("ingest-jats"):
        xml = parse_jats(doc.nxml.read_bytes(), cfg.jats, doc.doc_id, str(doc.nxml))
    with stage("ingest-hocr"):
        ocr = parse_hocr([p.read_bytes() for p in doc.hocr], doc.kind, doc.doc_id,
                         [str(p) for p in doc.hocr])
    return xml, ocr


def _synth_pair(index: int, cfg: PipelineConfig):
    s = cfg.synth
    seed = s.seed * 1000 + index
    xml = generate_document(s.tokens, seed=seed, doc_id=f"synth-{s.seed}-{index:03d}")
    noise = type(s.noise).from_json({**s.noise.to_json(), "seed": s.noise.seed * 1000 + seed})
    ocr, gold = corrupt_document(xml, noise)
    return xml, ocr, gold


def process_document(job: DocJob, cfg: PipelineConfig) -> str:
    """Run every stage for one document pair; returns its directory name."""
    out = cfg.output / job.name
    out.mkdir(parents=True, exist_ok=True)
    gold = None
    if job.real is not None:
        xml, ocr = _ingest_real(job.real, cfg)
    else:
        with stage("synth"):
            xml, ocr, gold = _synth_pair(job.synth_index, cfg)
        _write(out / "gold.json", dump_alignment(gold))
    _write(out / "xml.json", dump_document(xml))
    _write(out / "ocr.json", dump_document(ocr))

    with stage("align"):
        alignment = align_documents(xml, ocr, cfg.aligner, cfg.fixers)
    _write(out / "alignment.json", dump_alignment(alignment))

    row = {"doc_id": xml.doc_id, "xml_tokens": len(xml), "ocr_tokens": len(ocr),
           "matched": alignment.match_count(), "gaps": alignment.gap_count()}

    if cfg.highlight.enabled:
        hl = cfg.highlight
        with stage("detect-highlights"):
            if job.real is not None:
                if not job.real.backgrounds:
                    raise OSError(f"no background images configured for {job.real.doc_id}")
                backgrounds = load_backgrounds(job.real.backgrounds)
            else:
                images, _ = render_backgrounds(ocr, hl.synthetic_marks, seed=job.synth_index)
                bg_dir = out / "backgrounds"
                bg_dir.mkdir(exist_ok=True)
                from PIL import Image

                paths = []
                for k, arr in enumerate(images):
                    path = bg_dir / f"page_{k:03d}.png"
                    Image.fromarray(arr).save(path)
                    paths.append(path)
                backgrounds = load_backgrounds(paths)
            records = detect_highlights(ocr, backgrounds, None, hl.threshold, hl.min_coverage, hl.mode)
        _write(out / "highlights.json", dump_highlights(records))
        with stage("transfer-highlights"):
            result = transfer_highlights(alignment, records)
        _write(out / "transfers.json", result.dumps())
        row.update(highlights=len(records), transfers=len(result.transfers),
                   untransferable=len(result.untransferable))

    with stage("evaluate"):
        report = score_alignment(alignment, xml, ocr, cfg.evaluation)
    _write(out / "evaluation.json", report.dumps())
    _write(out / "kwic.txt", format_kwic(report))
    _write(out / "judgments.csv", _judgments_csv(report))
    row.update({k: v for k, v in report.to_json().items() if k != "doc_id"})

    if gold is not None:
        with stage("evaluate"):
            cmp = compare_to_gold(alignment, gold)
        _write(out / "gold_comparison.json", json.dumps(cmp, indent=1) + "\n")
        row.update(gold_precision=cmp["precision"], gold_recall=cmp["recall"])

    if cfg.groundtruth:
        with stage("export-gt"):
            if job.real is not None and job.real.page_images:
                items = export_groundtruth(alignment, ocr, job.real.page_images, xml)
                if cfg.crops:
                    write_crops(items, out / "crops")
            elif job.real is None:
                # synthetic pages have no images; items name the page only
                pages = [f"synthetic-page-{k:03d}" for k in range(len(ocr.pages))]
                items = export_groundtruth(alignment, ocr, pages, xml, check_exists=False)
            else:
                items = None
        if items is not None:
            _write(out / "groundtruth.json", dump_groundtruth(items))
            row["groundtruth_items"] = len(items)

    _write(out / "summary.json", json.dumps(row, ensure_ascii=False, indent=1) + "\n")
    return job.name


def plan_jobs(cfg: PipelineConfig) -> list[DocJob]:
    jobs, used = [], set()
    for doc in cfg.documents:
        name = base = safe_name(doc.doc_id)
        k = 1
        while name in used:
            k += 1
            name = f"{base}-{k}"
        used.add(name)
        jobs.append(DocJob(name, real=doc))
    if cfg.synth is not None:
        for i in range(cfg.synth.documents):
            name = f"synth-{cfg.synth.seed}-{i:03d}"
            used.add(name)
            jobs.append(DocJob(name, synth_index=i))
    return jobs


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Process every configured document pair and write the run report."""
    cfg.output.mkdir(parents=True, exist_ok=True)
    jobs = plan_jobs(cfg)
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(jobs))) as pool:
            names = list(pool.map(process_document, jobs, [cfg] * len(jobs)))
    else:
        names = [process_document(job, cfg) for job in jobs]
    _write(cfg.output / "config.json", json.dumps(config_to_json(cfg), indent=1, sort_keys=True) + "\n")
    with stage("report"):
        return build_report(cfg.output, names, cfg.evaluation.lsim_threshold, cfg.figures)


__all__ = ["DocJob", "plan_jobs", "process_document", "run_pipeline", "safe_name", "stage"]
