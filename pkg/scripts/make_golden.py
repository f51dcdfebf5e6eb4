"""Regenerate the committed golden fixtures under tests/fixtures/.

Two artifacts come out of this script:

  figure_gift.gmt           a canonical document spelled out by hand: one
                            multi-source entry with an annotated context,
                            three provenance blocks on the English term
                            section and a bibliographic source
  gift_fused.golden.{gmt,report}
                            the import+fuse pipeline run over the three
                            GIFT source fixtures, via the CLI code path

Run from anywhere: python scripts/make_golden.py
"""

import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from termfuse import cli  # noqa: E402
from termfuse.gmtxml import from_model, serialize_gmt  # noqa: E402
from termfuse.model import (  # noqa: E402
    Annotation,
    Feature,
    GlobalInfo,
    LangSection,
    ProvenanceBlock,
    ResourceDescriptor,
    TermEntry,
    TermSection,
    add_entry,
    freeze,
    new_collection,
)

FIXTURES = REPO / "tests" / "fixtures"

CITATION = ("BOUROCHE - LACOMBE, A. Les biotechnologies de la reproduction "
            "chez les mammifères et l'homme. (2001) Vocabulaire français-anglais, "
            "INRA Editions, Paris, 118 p., ISBN 2-7380-0935-2")
CONTEXT = ("Gamete intrafallopian transfer GIFT is a method in which oocytes "
           "and sperm are transferred to one or both fallopian tubes, usually "
           "by means of laparoscopically directed tubal cannulation. Thus, "
           "fertilization occurs in vivo.")
GIFT = "Gamete intrafallopian transfer"
GIFT_FR = "Transfert intrafallopien de gamètes"

NLM = ProvenanceBlock(institution="NLM", database="MESH")
INIST = ProvenanceBlock(institution="INIST", database="Vocabulaire multidisciplinaire PASCAL")
INRA = ProvenanceBlock(institution="INRA", database="Biotechnologie de la reproduction")


def build_figure_collection():
    """The multi-source entry, ids kept as the termbase assigned them."""
    annotations = [
        Annotation("term", CONTEXT.find(GIFT), CONTEXT.find(GIFT) + len(GIFT)),
        Annotation("abbreviation", CONTEXT.find("GIFT"), CONTEXT.find("GIFT") + len("GIFT")),
    ]
    entry = TermEntry(
        id="BV.203402",
        features=[Feature(
            "definition",
            "Method in which oocytes and sperm are transferred into one or "
            "both fallopian tubes so that fertilization occurs in vivo.",
            provenance=[NLM])],
        lang_sections=[
            LangSection(language="en",
                        features=[Feature("context", CONTEXT, source=CITATION,
                                          annotations=annotations)],
                        term_sections=[TermSection(term=GIFT, id="BV.203402.TS.6",
                                                   provenance=[NLM, INIST, INRA])]),
            LangSection(language="fr",
                        term_sections=[TermSection(term=GIFT_FR, id="BV.203402.TS.7",
                                                   provenance=[NLM, INIST])]),
        ])
    info = GlobalInfo(title="Multilingual termbase excerpt", dcs_ref="default", resources=[
        ResourceDescriptor(institution="NLM", database="MESH"),
        ResourceDescriptor(institution="INIST", database="Vocabulaire multidisciplinaire PASCAL"),
        ResourceDescriptor(institution="INRA", database="Biotechnologie de la reproduction",
                           citation=CITATION),
    ])
    collection = new_collection(info, prefix="BV")
    add_entry(collection, entry)
    return freeze(collection)


# fuse reads the pivoted files in this order; keep the test on the same one
GIFT_SOURCES = ("gift_nlm.tsf", "gift_inist.tsf", "gift_inra.tsf")
GIFT_PIVOTED = ("mesh.gmt", "vocabulaire-multidisciplinaire-pascal.gmt",
                "biotechnologie-de-la-reproduction.gmt")


def run_gift_pipeline(out_dir: Path) -> tuple[Path, Path]:
    """import + fuse over the GIFT fixtures; returns (fused.gmt, fused.report)."""
    sources = [str(FIXTURES / name) for name in GIFT_SOURCES]
    rc = cli.main(["import", *sources, "--out", str(out_dir)])
    if rc != 0:
        raise SystemExit(f"import failed with exit code {rc}")
    pivoted = [str(out_dir / name) for name in GIFT_PIVOTED]
    rc = cli.main(["fuse", *pivoted, "--out", str(out_dir)])
    if rc != 0:
        raise SystemExit(f"fuse failed with exit code {rc}")
    return out_dir / "fused.gmt", out_dir / "fused.report"


def main() -> None:
    figure = FIXTURES / "figure_gift.gmt"
    figure.write_text(serialize_gmt(from_model(build_figure_collection())), encoding="utf-8")
    print(f"wrote {figure} ({figure.stat().st_size} bytes)")

    with tempfile.TemporaryDirectory() as tmp:
        fused, report = run_gift_pipeline(Path(tmp))
        for src, name in ((fused, "gift_fused.golden.gmt"), (report, "gift_fused.golden.report")):
            dst = FIXTURES / name
            dst.write_bytes(src.read_bytes())
            print(f"wrote {dst} ({dst.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
