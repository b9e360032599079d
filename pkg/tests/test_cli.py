import json

import numpy as np
import pytest
from PIL import Image

from ocralign.cli import main
from ocralign.hocr import parse_hocr
from ocralign.model import load_alignment, load_document


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def error_line(err):
    lines = [l for l in err.splitlines() if l.startswith("{")]
    assert len(lines) == 1
    return json.loads(lines[0])


def paint_backgrounds(mini_dir, out_dir, words=("KHSO3",)):
    """612x792 backgrounds with marker over the given ocr words."""
    ocr = parse_hocr([(mini_dir / f"page_{k}.hocr").read_bytes() for k in range(2)], "scan", "d")
    images = [np.full((792, 612, 3), 255, dtype=np.uint8) for _ in ocr.pages]
    for tok, meta in zip(ocr.tokens, ocr.meta):
        if tok.surface in words:
            b, (w, h) = meta.bbox, ocr.pages[meta.bbox.page]
            images[b.page][b.y0 * 792 // h:-(-b.y1 * 792 // h), b.x0 * 612 // w:-(-b.x1 * 612 // w)] = (250, 230, 40)
    paths = []
    for k, arr in enumerate(images):
        p = out_dir / f"bg_{k}.png"
        Image.fromarray(arr).save(p)
        paths.append(p)
    return paths


def page_images(out_dir):
    paths = []
    for k in range(2):
        p = out_dir / f"page_{k}.png"
        Image.new("RGB", (2550, 3300), (255, 255, 255)).save(p)
        paths.append(p)
    return paths


@pytest.fixture
def staged(tmp_path, mini_dir, capsys):
    """Ingest and align the mini fixture through the single-stage commands."""
    xml, ocr, aln = tmp_path / "xml.json", tmp_path / "ocr.json", tmp_path / "aln.json"
    assert run(capsys, "ingest-jats", mini_dir / "article.nxml", "-o", xml)[0] == 0
    hocr = [mini_dir / "page_0.hocr", mini_dir / "page_1.hocr"]
    assert run(capsys, "ingest-hocr", *hocr, "--doc-id", "10.9999/jte.2020.001", "-o", ocr)[0] == 0
    assert run(capsys, "align", xml, ocr, "--all-fixers", "-o", aln)[0] == 0
    return tmp_path, xml, ocr, aln


def test_stage_commands_chain(staged, capsys, mini_dir):
    tmp, xml, ocr, aln = staged
    assert load_document(xml.read_bytes()).kind == "xml"
    assert len(load_document(ocr.read_bytes())) == 72
    code, out, _ = run(capsys, "evaluate", aln, xml, ocr, "--kwic", tmp / "kwic.txt")
    assert code == 0
    report = json.loads(out)
    assert report["precision"] == report["recall"] == 92.54
    assert (tmp / "kwic.txt").read_text(encoding="utf-8").count(">>") == 2 * (report["tp"] + report["fp"])

    bgs = paint_backgrounds(mini_dir, tmp)
    hl = tmp / "hl.json"
    assert run(capsys, "detect-highlights", ocr, "--backgrounds", *bgs, "-o", hl)[0] == 0
    records = json.loads(hl.read_text())
    assert len(records) == 1 and records[0]["coverage_percent"] >= 90
    code, out, _ = run(capsys, "transfer-highlights", aln, hl)
    transfers = json.loads(out)["transfers"]
    # KHSO3 was split into KHSO and 3, both coming from the same ocr word
    assert len(transfers) == 1

    pages = page_images(tmp)
    code, out, _ = run(capsys, "export-gt", aln, ocr, "--xml", xml, "--pages", *pages, "--crops", tmp / "crops")
    assert code == 0
    items = json.loads(out)
    assert [(i["ocr_surface"], i["correct_surface"]) for i in items] == [
        ("B", "β"), ("ohs", "obs"), ("1t", "it"), ("1s", "is")]
    assert items[1]["subscript"] and items[1]["correct_markup"] == "<sub>obs</sub>"
    assert len(list((tmp / "crops").glob("*.png"))) == 4


def test_without_fixers_recall_drops(staged, capsys):
    tmp, xml, ocr, _ = staged
    plain = tmp / "plain.json"
    assert run(capsys, "align", xml, ocr, "-o", plain)[0] == 0
    out = json.loads(run(capsys, "evaluate", plain, xml, ocr)[1])
    assert out["recall"] == 76.12


def test_config_file_is_read_and_flags_override(staged, capsys):
    tmp, xml, ocr, aln = staged
    (tmp / "c.yaml").write_text("fixers: {dehyp: true, pre_join: true, pre_split: true, post_force_align: true}\n")
    via_file = tmp / "f.json"
    assert run(capsys, "align", xml, ocr, "--config", tmp / "c.yaml", "-o", via_file)[0] == 0
    assert via_file.read_bytes() == aln.read_bytes()
    off = tmp / "off.json"
    assert run(capsys, "align", xml, ocr, "--config", tmp / "c.yaml", "--no-post-force-align", "-o", off)[0] == 0
    assert load_alignment(off.read_bytes()).match_count() < load_alignment(aln.read_bytes()).match_count()


def test_usage_error_exits_1(capsys):
    code, _, err = run(capsys, "align")
    assert code == 1 and error_line(err)["stage"] == "usage"
    code, _, err = run(capsys, "no-such-command")
    assert code == 1


def test_malformed_input_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.hocr"
    bad.write_text("<html><body><div class='ocr_page' title='bbox 0 0 9 9'><span></div>")
    code, _, err = run(capsys, "ingest-hocr", bad)
    rec = error_line(err)
    assert code == 2 and rec["stage"] == "ingest-hocr" and rec["error"] == "MalformedHocr"
    assert rec["exit_code"] == 2
    code, _, err = run(capsys, "ingest-jats", tmp_path / "missing.nxml")
    assert code == 2 and error_line(err)["stage"] == "ingest-jats"


def test_capacity_exits_3(staged, capsys):
    _, xml, ocr, _ = staged
    code, _, err = run(capsys, "align", xml, ocr, "--cell-budget", 100, "--pre-compress", 1000)
    rec = error_line(err)
    assert code == 3 and rec["error"] == "CapacityExceeded" and rec["stage"] == "align"


def test_bad_config_exits_3(tmp_path, capsys):
    (tmp_path / "c.yaml").write_text("fixers: {bogus: 1}\n")
    code, _, err = run(capsys, "run", "--config", tmp_path / "c.yaml")
    assert code == 3 and error_line(err)["stage"] == "config"
    code, _, err = run(capsys, "run", "--config", tmp_path / "absent.yaml")
    assert code == 3


def test_synth_command(tmp_path, capsys):
    assert run(capsys, "synth", "--tokens", 300, "--seed", 4, "--noisy", "--out-dir", tmp_path / "s")[0] == 0
    xml = load_document((tmp_path / "s" / "xml.json").read_bytes())
    ocr = load_document((tmp_path / "s" / "ocr.json").read_bytes())
    assert len(xml) == 300 and len(ocr) > 300
    assert json.loads((tmp_path / "s" / "noise.json").read_text())["seed"] == 4
    assert run(capsys, "synth", "--tokens", 50, "--char-substitution", 2, "--out-dir", tmp_path / "t")[0] == 3


def write_mini_config(tmp, mini_dir, backgrounds=True):
    lines = ["output: out", "fixers: {dehyp: true, pre_join: true, pre_split: true, post_force_align: true}",
             "highlight: {enabled: true}", "documents:", "  - doc_id: 10.9999/jte.2020.001",
             f"    nxml: {mini_dir / 'article.nxml'}",
             f"    hocr: [{mini_dir / 'page_0.hocr'}, {mini_dir / 'page_1.hocr'}]"]
    if backgrounds:
        bgs = paint_backgrounds(mini_dir, tmp)
        lines.append(f"    backgrounds: [{bgs[0]}, {bgs[1]}]")
    (tmp / "run.yaml").write_text("\n".join(lines) + "\n")
    return tmp / "run.yaml"


def test_run_on_mini_fixture_and_stage_isolation(tmp_path, mini_dir, capsys, staged):
    _, xml, ocr, aln = staged
    cfg = write_mini_config(tmp_path, mini_dir)
    code, out, err = run(capsys, "run", "--config", cfg, "--no-figures")
    assert code == 0, err
    doc_dir = tmp_path / "out" / "10.9999_jte.2020.001"
    assert (doc_dir / "alignment.json").read_bytes() == aln.read_bytes()
    assert (doc_dir / "xml.json").read_bytes() == xml.read_bytes()
    assert json.loads((doc_dir / "transfers.json").read_text())["transfers"]
    assert (tmp_path / "out" / "index.html").is_file()
    assert "P=92.54" in out


def test_run_without_backgrounds_names_the_stage(tmp_path, mini_dir, capsys):
    cfg = write_mini_config(tmp_path, mini_dir, backgrounds=False)
    code, _, err = run(capsys, "run", "--config", cfg)
    rec = error_line(err)
    assert code != 0 and rec["stage"] == "detect-highlights"
    code, _, err = run(capsys, "run", "--config", cfg, "--no-highlight", "--no-figures")
    assert code == 0


def test_run_synth_and_report(tmp_path, capsys):
    code, out, _ = run(capsys, "run", "--synth-documents", 2, "--synth-tokens", 400, "--all-fixers",
                       "-o", tmp_path / "r")
    assert code == 0
    summary = json.loads((tmp_path / "r" / "summary.json").read_text())
    micro = summary["micro_average"]
    assert {"precision", "recall", "f1"} <= set(micro) and micro["f1"] > 0
    assert (tmp_path / "r" / "figures" / "prf.png").is_file()
    before = (tmp_path / "r" / "summary.csv").read_bytes()
    (tmp_path / "r" / "summary.csv").unlink()
    assert run(capsys, "report", tmp_path / "r")[0] == 0
    assert (tmp_path / "r" / "summary.csv").read_bytes() == before
    code, _, err = run(capsys, "report", tmp_path / "nothing")
    assert code == 2 and error_line(err)["stage"] == "report"


def test_ablate_command(tmp_path, capsys):
    code, out, _ = run(capsys, "ablate", "--documents", 1, "--tokens", 400, "--out-dir", tmp_path / "a")
    assert code == 0
    rows = out.strip().splitlines()
    assert rows[0].startswith("setting,") and len(rows) == 9
    assert (tmp_path / "a" / "ablation.png").is_file()
