"""Command-line entry point.

Every stage of the pipeline is a subcommand that reads and writes the
canonical JSON artifacts, and ``run`` chains them from a config file.
Failures print one JSON object on stderr and exit with 1 (usage),
2 (input) or 3 (capacity/config).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .aligner import align_documents
from .applications import dump_groundtruth, export_groundtruth, transfer_highlights, write_crops
from .config import JOBS_ENV, build_config, deep_merge, read_config_file
from .errors import ConfigError, OcrAlignError, StageError
from .evaluator import EvalConfig, ablation_grid, format_kwic, score_alignment
from .fixers import FixerConfig
from .highlight import MODES, detect_highlights, dump_highlights, load_backgrounds, load_highlights
from .model import dump_alignment, dump_document, load_alignment, load_document
from .pipeline import run_pipeline, stage

EXIT_USAGE = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; usage errors are 1 here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _emit(text: str, output: str | None) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        Path(output).write_text(text, encoding="utf-8")


def _read(path: str) -> bytes:
    return Path(path).read_bytes()


def _settings(args) -> dict:
    """Config file contents overlaid with explicitly given flags."""
    data = read_config_file(args.config) if getattr(args, "config", None) else {}
    overrides: dict = {}

    def put(section, key, value):
        if value is not None:
            overrides.setdefault(section, {})[key] = value

    for key in ("dehyp", "pre_join", "pre_split", "post_force_align", "force_align_max_run"):
        put("fixers", key, getattr(args, key, None))
    if getattr(args, "all_fixers", False):
        for key in ("dehyp", "pre_join", "pre_split", "post_force_align"):
            overrides.setdefault("fixers", {}).setdefault(key, True)
    put("aligner", "pre_compress_block", getattr(args, "pre_compress", None))
    put("aligner", "cell_budget", getattr(args, "cell_budget", None))
    put("evaluation", "context_width", getattr(args, "context_width", None))
    put("evaluation", "lsim_threshold", getattr(args, "lsim_threshold", None))
    put("highlight", "threshold", getattr(args, "threshold", None))
    put("highlight", "min_coverage", getattr(args, "min_coverage", None))
    put("highlight", "mode", getattr(args, "mode", None))
    put("jats", "control_words", getattr(args, "control_words", None))
    return deep_merge(data, overrides)


def _stage_config(args):
    """Validated config for single-stage commands (no inputs required)."""
    data = _settings(args)
    data.pop("documents", None)
    return build_config(data, require_files=False, require_inputs=False)


def _add_fixer_flags(p):
    g = p.add_argument_group("fixers")
    bool_flag = argparse.BooleanOptionalAction
    g.add_argument("--dehyp", action=bool_flag, default=None, help="merge line-break hyphenations")
    g.add_argument("--pre-join", dest="pre_join", action=bool_flag, default=None)
    g.add_argument("--pre-split", dest="pre_split", action=bool_flag, default=None)
    g.add_argument("--post-force-align", dest="post_force_align", action=bool_flag, default=None)
    g.add_argument("--force-align-max-run", dest="force_align_max_run", type=int, metavar="N")
    g.add_argument("--all-fixers", action="store_true", help="enable all four fixers")


def _add_aligner_flags(p):
    p.add_argument("--pre-compress", dest="pre_compress", type=int, metavar="P",
                   help="block size of pre-compression (default 20)")
    p.add_argument("--cell-budget", dest="cell_budget", type=int, metavar="CELLS")


def _add_eval_flags(p):
    p.add_argument("--context-width", dest="context_width", type=int, metavar="N")
    p.add_argument("--lsim-threshold", dest="lsim_threshold", type=float, metavar="T")


def _add_highlight_flags(p):
    p.add_argument("--threshold", type=int, help="channel difference threshold (default 50)")
    p.add_argument("--min-coverage", dest="min_coverage", type=float, help="percent (default 50)")
    p.add_argument("--mode", choices=MODES, help="'any' or 'all' channel pairs must differ")


def cmd_ingest_hocr(args) -> int:
    from .hocr import parse_hocr

    with stage("ingest-hocr"):
        doc = parse_hocr([_read(p) for p in args.files], args.kind, args.doc_id or Path(args.files[0]).stem,
                         args.files)
    _emit(dump_document(doc), args.output)
    return 0


def cmd_ingest_jats(args) -> int:
    from .jats import parse_jats

    cfg = _stage_config(args)
    with stage("ingest-jats"):
        doc = parse_jats(_read(args.nxml), cfg.jats, args.doc_id or "", args.nxml)
    _emit(dump_document(doc), args.output)
    return 0


def cmd_align(args) -> int:
    cfg = _stage_config(args)
    with stage("align"):
        xml = load_document(_read(args.xml))
        ocr = load_document(_read(args.ocr))
        alignment = align_documents(xml, ocr, cfg.aligner, cfg.fixers)
    _emit(dump_alignment(alignment), args.output)
    return 0


def cmd_detect(args) -> int:
    cfg = _stage_config(args)
    hl = cfg.highlight
    with stage("detect-highlights"):
        ocr = load_document(_read(args.ocr))
        records = detect_highlights(ocr, load_backgrounds(args.backgrounds), None,
                                    hl.threshold, hl.min_coverage, hl.mode)
    _emit(dump_highlights(records), args.output)
    return 0


def cmd_transfer(args) -> int:
    with stage("transfer-highlights"):
        result = transfer_highlights(load_alignment(_read(args.alignment)), load_highlights(_read(args.highlights)))
    _emit(result.dumps(), args.output)
    return 0


def cmd_evaluate(args) -> int:
    cfg = _stage_config(args)
    with stage("evaluate"):
        report = score_alignment(load_alignment(_read(args.alignment)), load_document(_read(args.xml)),
                                 load_document(_read(args.ocr)), cfg.evaluation)
    _emit(report.dumps(), args.output)
    if args.kwic:
        _emit(format_kwic(report), args.kwic)
    return 0


def cmd_export_gt(args) -> int:
    with stage("export-gt"):
        items = export_groundtruth(load_alignment(_read(args.alignment)), load_document(_read(args.ocr)),
                                   args.pages, load_document(_read(args.xml)) if args.xml else None)
        if args.crops:
            write_crops(items, args.crops)
    _emit(dump_groundtruth(items), args.output)
    return 0


def _noise_from_args(args):
    from .synth import ABLATION_NOISE, NoiseConfig

    values = dict(ABLATION_NOISE) if args.noisy else {}
    for key in ("char_substitution", "greek_confusion", "hyphenation_insertion", "token_split",
                "token_join", "header_footer_tokens", "append_bibliography_tokens"):
        if getattr(args, key) is not None:
            values[key] = getattr(args, key)
    try:
        return NoiseConfig(seed=args.seed, kind=args.kind, **values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_synth(args) -> int:
    from .synth import corrupt_document, generate_document

    noise = _noise_from_args(args)
    with stage("synth"):
        xml = generate_document(args.tokens, seed=args.seed, doc_id=args.doc_id)
        ocr, gold = corrupt_document(xml, noise)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "xml.json").write_text(dump_document(xml), encoding="utf-8")
    (out / "ocr.json").write_text(dump_document(ocr), encoding="utf-8")
    (out / "gold.json").write_text(dump_alignment(gold), encoding="utf-8")
    (out / "noise.json").write_text(json.dumps(noise.to_json(), indent=1) + "\n", encoding="utf-8")
    return 0


def cmd_report(args) -> int:
    from .report import build_report

    run_dir = Path(args.run_dir)
    with stage("report"):
        if not run_dir.is_dir():
            raise OSError(f"{run_dir} is not a directory")
        names = sorted(p.parent.name for p in run_dir.glob("*/alignment.json"))
        if not names:
            raise OSError(f"no document directories under {run_dir}")
        build_report(run_dir, names, args.lsim_threshold or 0.5, not args.no_figures)
    return 0


def cmd_run(args) -> int:
    data = _settings(args)
    if args.output:
        data["output"] = args.output
    if args.jobs is not None:
        data["jobs"] = args.jobs
    if args.no_figures:
        data["figures"] = False
    if args.highlight is not None:
        data.setdefault("highlight", {})["enabled"] = args.highlight
    if args.synth_documents is not None or args.synth_seed is not None or args.synth_tokens is not None:
        synth = dict(data.get("synth") or {})
        for key, value in (("documents", args.synth_documents), ("seed", args.synth_seed),
                           ("tokens", args.synth_tokens)):
            if value is not None:
                synth[key] = value
        data["synth"] = synth
    cfg = build_config(data)
    summary = run_pipeline(cfg)
    micro = summary["micro_average"]
    print(f"{len(summary['documents'])} documents  P={micro['precision']:.2f} "
          f"R={micro['recall']:.2f} F={micro['f1']:.2f}  -> {cfg.output}")
    return 0


def cmd_ablate(args) -> int:
    from .report import plot_ablation
    from .synth import generate_corpus

    cfg = _stage_config(args)
    noise = _noise_from_args(args)
    with stage("synth"):
        corpus = generate_corpus(args.documents, args.tokens, noise, seed=args.seed)
    with stage("evaluate"):
        rows = ablation_grid([(x, o) for x, o, _ in corpus], cfg.aligner, cfg.evaluation,
                             cfg.fixers.force_align_max_run)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    import csv
    import io

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    (out / "ablation.csv").write_text(buf.getvalue(), encoding="utf-8")
    if not args.no_figures:
        plot_ablation(rows, out / "ablation.png")
    sys.stdout.write(buf.getvalue())
    return 0


def _add_noise_flags(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kind", choices=("conv", "scan"), default="scan")
    p.add_argument("--noisy", action=argparse.BooleanOptionalAction, default=False,
                   help="start from the ablation noise rates")
    for key in ("char_substitution", "greek_confusion", "hyphenation_insertion", "token_split", "token_join"):
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=float, metavar="RATE")
    for key in ("header_footer_tokens", "append_bibliography_tokens"):
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=int, metavar="N")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ocralign", description="Align OCR output of printed papers with their XML full text.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="YAML config; flags override its values")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest-hocr", parents=[common], help="hOCR pages -> canonical OCR document")
    p.add_argument("files", nargs="+", help="hOCR files in page order")
    p.add_argument("--kind", choices=("conv", "scan"), default="scan")
    p.add_argument("--doc-id", dest="doc_id")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_ingest_hocr)

    p = sub.add_parser("ingest-jats", parents=[common], help="JATS .nxml -> canonical XML document")
    p.add_argument("nxml")
    p.add_argument("--doc-id", dest="doc_id")
    p.add_argument("--control-words", dest="control_words", choices=("table", "strip"))
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_ingest_jats)

    p = sub.add_parser("align", parents=[common], help="align two canonical documents")
    p.add_argument("xml")
    p.add_argument("ocr")
    _add_aligner_flags(p)
    _add_fixer_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("detect-highlights", parents=[common], help="find marker ink on background images")
    p.add_argument("ocr")
    p.add_argument("--backgrounds", nargs="+", required=True, metavar="IMAGE")
    _add_highlight_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("transfer-highlights", parents=[common], help="move highlights to the xml side")
    p.add_argument("alignment")
    p.add_argument("highlights")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("evaluate", parents=[common], help="KWIC judgment of an alignment")
    p.add_argument("alignment")
    p.add_argument("xml")
    p.add_argument("ocr")
    _add_eval_flags(p)
    p.add_argument("--kwic", metavar="FILE", help="also write the judgment listing")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export-gt", parents=[common], help="OCR ground-truth pairs from force-aligned tokens")
    p.add_argument("alignment")
    p.add_argument("ocr")
    p.add_argument("--xml", help="xml document, for sub/sup flags")
    p.add_argument("--pages", nargs="+", required=True, metavar="IMAGE")
    p.add_argument("--crops", metavar="DIR", help="write image snippets here")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_export_gt)

    p = sub.add_parser("synth", parents=[common], help="synthetic xml/ocr pair with gold alignment")
    p.add_argument("--tokens", type=int, default=2000)
    p.add_argument("--doc-id", dest="doc_id", default="synthetic")
    _add_noise_flags(p)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", parents=[common], help="rebuild HTML, CSV and figures of a run")
    p.add_argument("run_dir")
    p.add_argument("--lsim-threshold", dest="lsim_threshold", type=float)
    p.add_argument("--no-figures", dest="no_figures", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", parents=[common], help="full pipeline from a config file")
    p.add_argument("-o", "--output", help="output directory")
    p.add_argument("--jobs", type=int, help=f"parallel document pairs (default ${JOBS_ENV} or 1)")
    p.add_argument("--highlight", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--synth-documents", dest="synth_documents", type=int)
    p.add_argument("--synth-tokens", dest="synth_tokens", type=int)
    p.add_argument("--synth-seed", dest="synth_seed", type=int)
    p.add_argument("--no-figures", dest="no_figures", action="store_true")
    _add_aligner_flags(p)
    _add_fixer_flags(p)
    _add_eval_flags(p)
    _add_highlight_flags(p)
    p.add_argument("--control-words", dest="control_words", choices=("table", "strip"))
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ablate", parents=[common], help="fixer ablation grid on a synthetic corpus")
    p.add_argument("--documents", type=int, default=5)
    p.add_argument("--tokens", type=int, default=5000)
    _add_noise_flags(p)
    p.set_defaults(noisy=True)
    _add_aligner_flags(p)
    p.add_argument("--force-align-max-run", dest="force_align_max_run", type=int, metavar="N")
    _add_eval_flags(p)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--no-figures", dest="no_figures", action="store_true")
    p.set_defaults(func=cmd_ablate)
    return parser


def _fail(stage_name: str, error_type: str, message: str, code: int) -> int:
    record = {"error": error_type, "stage": stage_name, "message": message, "exit_code": code}
    sys.stderr.write(json.dumps(record, ensure_ascii=False) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage", "UsageError", str(exc), EXIT_USAGE)
    try:
        return args.func(args)
    except StageError as exc:
        return _fail(exc.stage, exc.error_type, exc.message, exc.exit_code)
    except OcrAlignError as exc:
        name = "config" if isinstance(exc, ConfigError) else args.command
        return _fail(name, type(exc).__name__, str(exc), exc.exit_code)
    except OSError as exc:
        return _fail(args.command, type(exc).__name__, str(exc), 2)


if __name__ == "__main__":
    sys.exit(main())
