"""Static run report: per-document HTML, summary CSV and matplotlib figures.

Everything here is rebuilt from the JSON artifacts a run leaves on disk,
so ``ocralign report`` on an existing output tree reproduces what
``ocralign run`` wrote.
"""

from __future__ import annotations

import csv
import html
import io
import json
from pathlib import Path
from typing import Sequence

from .model import GAP_SURFACE, Alignment, TokenId, load_alignment, unescape_surface

SUMMARY_FIELDS = ("doc_id", "xml_tokens", "ocr_tokens", "matched", "gaps", "tp", "fp", "fn",
                  "precision", "recall", "f1", "highlights", "transfers", "untransferable",
                  "groundtruth_items", "gold_precision", "gold_recall")

_CSS = """
body { font-family: sans-serif; margin: 2em; }
table { border-collapse: collapse; }
td, th { border: 1px solid #ccc; padding: 2px 6px; font-family: monospace; }
td.gap { color: #999; background: #f3f3f3; }
tr.forced td { outline: 2px solid #d33; }
.num { text-align: right; }
"""


def _shade(coverage: float | None) -> str:
    if coverage is None:
        return ""
    alpha = max(0.15, min(coverage, 100.0) / 100.0)
    return f' style="background: rgba(250, 230, 40, {alpha:.2f})"'


def _cell(tok, coverage) -> str:
    if tok.is_gap:
        return f'<td class="gap">{html.escape(GAP_SURFACE)}</td>'
    return f"<td{_shade(coverage)}>{html.escape(unescape_surface(tok.surface))}</td>"


def _coverage_of(tok, by_part: dict[str, float]):
    hits = [by_part[p] for p in tok.id.parts if p in by_part]
    return max(hits) if hits else None


def render_document_html(doc_id: str, alignment: Alignment, evaluation: dict,
                         ocr_coverage: dict[str, float], xml_coverage: dict[str, float]) -> str:
    """Aligned tokens side by side; highlighted tokens are shaded by coverage."""
    rows = []
    for k, (left, right) in enumerate(alignment.pairs):
        forced = not left.is_gap and not right.is_gap and left.surface != right.surface
        cls = ' class="forced"' if forced else ""
        rows.append(f'<tr{cls}><td class="num">{k}</td>{_cell(left, _coverage_of(left, xml_coverage))}'
                    f'{_cell(right, _coverage_of(right, ocr_coverage))}</tr>')
    stats = " ".join(f"{key.upper() if len(key) < 3 else key}={html.escape(str(evaluation[key]))}"
                     for key in ("tp", "fp", "fn", "precision", "recall", "f1") if key in evaluation)
    return ("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
            f"<title>{html.escape(doc_id)}</title><style>{_CSS}</style></head><body>\n"
            f"<h1>{html.escape(doc_id)}</h1>\n<p>{stats}</p>\n"
            "<table><tr><th>#</th><th>xml</th><th>ocr</th></tr>\n"
            + "\n".join(rows) + "\n</table>\n</body></html>\n")


def render_index_html(rows: Sequence[dict], micro: dict, links: Sequence[str]) -> str:
    head = "".join(f"<th>{html.escape(f)}</th>" for f in SUMMARY_FIELDS)
    body = []
    for row, link in zip(rows, links):
        cells = []
        for f in SUMMARY_FIELDS:
            value = html.escape("" if row.get(f) is None else str(row[f]))
            if f == "doc_id":
                value = f'<a href="{html.escape(link)}">{value}</a>'
            cells.append(f"<td>{value}</td>")
        body.append("<tr>" + "".join(cells) + "</tr>")
    micro_line = " ".join(f"{k}={micro[k]}" for k in ("tp", "fp", "fn", "precision", "recall", "f1"))
    figs = "".join(f'<p><img src="figures/{name}" alt="{name}"></p>'
                   for name in ("prf.png", "lsim.png") if micro.get("figures"))
    return ("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>ocralign run</title>"
            f"<style>{_CSS}</style></head><body>\n<h1>Run summary</h1>\n"
            f"<p>micro-average: {html.escape(micro_line)}</p>\n"
            f"<table><tr>{head}</tr>\n" + "\n".join(body) + "\n</table>\n" + figs
            + "\n</body></html>\n")


def summary_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SUMMARY_FIELDS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams.update({"font.size": 9, "axes.spines.top": False, "axes.spines.right": False,
                         "svg.hashsalt": "ocralign"})
    return plt


def _save(fig, path: Path) -> None:
    # drop the software/version chunk so the bytes only depend on the data
    fig.savefig(path, dpi=100, metadata={"Software": None})


def plot_prf(rows: Sequence[dict], path: Path) -> None:
    plt = _pyplot()
    labels = [r["doc_id"] for r in rows]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(rows) + 2), 3.2))
    width = 0.27
    for k, (key, color) in enumerate((("precision", "#4878a8"), ("recall", "#e0a030"), ("f1", "#5a9e5a"))):
        xs = [i + (k - 1) * width for i in range(len(rows))]
        ax.bar(xs, [r[key] for r in rows], width, label=key, color=color)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=7)
    ax.set_ylim(0, 105)
    ax.set_ylabel("%")
    ax.legend(loc="lower right", fontsize=7)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def plot_lsim(points: Sequence[tuple[float, float, str]], threshold: float, path: Path) -> None:
    """Left vs right context similarity of every judged pair, coloured by verdict."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(3.6, 3.4))
    for verdict, color in (("TP", "#4878a8"), ("FP", "#d04040")):
        sel = [(l, r) for l, r, v in points if v == verdict]
        if sel:
            ax.scatter([l for l, _ in sel], [r for _, r in sel], s=4, alpha=0.4,
                       color=color, label=f"{verdict} ({len(sel)})", linewidths=0)
    ax.axvline(threshold, color="#777", lw=0.8, ls="--")
    ax.axhline(threshold, color="#777", lw=0.8, ls="--")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("left context lsim")
    ax.set_ylabel("right context lsim")
    if points:
        ax.legend(loc="lower left", fontsize=7)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def plot_ablation(rows: Sequence[dict], path: Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 3.4))
    xs = range(len(rows))
    for key, marker in (("precision", "o"), ("recall", "s"), ("f1", "^")):
        ax.plot(xs, [r[key] for r in rows], marker=marker, ms=4, lw=1, label=key)
    ax.set_xticks(list(xs))
    ax.set_xticklabels([r["setting"] for r in rows], rotation=30, ha="right", fontsize=7)
    ax.set_ylabel("%")
    ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def _read_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


def _coverages(entries) -> dict[str, float]:
    out: dict[str, float] = {}
    for e in entries:
        for part in TokenId.parse(e["token_id"]).parts:
            out[part] = max(out.get(part, 0.0), e["coverage_percent"])
    return out


def _judgment_points(path: Path) -> list[tuple[float, float, str]]:
    if not path.is_file():
        return []
    with path.open(encoding="utf-8", newline="") as fh:
        return [(float(r["left_lsim"]), float(r["right_lsim"]), r["verdict"]) for r in csv.DictReader(fh)]


def build_report(out_dir: str | Path, doc_dirs: Sequence[str], threshold: float = 0.5,
                 figures: bool = True) -> dict:
    """Write index.html, per-document report.html, summary.{json,csv} and figures."""
    from .evaluator import EvalReport

    out_dir = Path(out_dir)
    rows, points = [], []
    for name in doc_dirs:
        d = out_dir / name
        row = _read_json(d / "summary.json")
        rows.append(row)
        points.extend(_judgment_points(d / "judgments.csv"))
        alignment = load_alignment((d / "alignment.json").read_bytes())
        ocr_cov = _coverages(_read_json(d / "highlights.json")) if (d / "highlights.json").is_file() else {}
        xml_cov = (_coverages(_read_json(d / "transfers.json")["transfers"])
                   if (d / "transfers.json").is_file() else {})
        page = render_document_html(row["doc_id"], alignment, _read_json(d / "evaluation.json"),
                                    ocr_cov, xml_cov)
        (d / "report.html").write_text(page, encoding="utf-8")

    total = EvalReport(sum(r["tp"] for r in rows), sum(r["fp"] for r in rows), sum(r["fn"] for r in rows))
    micro = total.to_json()
    summary = {"documents": rows, "micro_average": micro}
    (out_dir / "summary.json").write_text(json.dumps(summary, ensure_ascii=False, indent=1) + "\n",
                                          encoding="utf-8")
    (out_dir / "summary.csv").write_text(summary_csv(rows), encoding="utf-8")
    if figures and rows:
        fig_dir = out_dir / "figures"
        fig_dir.mkdir(exist_ok=True)
        plot_prf(rows, fig_dir / "prf.png")
        plot_lsim(points, threshold, fig_dir / "lsim.png")
    index = render_index_html(rows, {**micro, "figures": figures and bool(rows)},
                              [f"{name}/report.html" for name in doc_dirs])
    (out_dir / "index.html").write_text(index, encoding="utf-8")
    return summary
