"""Walk the GIFT example through the whole pipeline and narrate each stage.

Imports the three source vocabularies from tests/fixtures/, fuses them,
then shows what the services built on top can do with the result: lookup,
query expansion, per-source export, validation and pointer resolution.

Run from anywhere: python scripts/gift_demo.py [output-dir]
"""

import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from termfuse import cli  # noqa: E402
from termfuse.dcs import default_dcs, validate  # noqa: E402
from termfuse.gmtxml import parse_gmt, parse_pointer, resolve_pointer, to_model  # noqa: E402
from termfuse.termbase import expand_query, export_by_source, lookup  # noqa: E402

FIXTURES = REPO / "tests" / "fixtures"
SOURCES = ("gift_nlm.tsf", "gift_inist.tsf", "gift_inra.tsf")
PIVOTED = ("mesh.gmt", "vocabulaire-multidisciplinaire-pascal.gmt",
           "biotechnologie-de-la-reproduction.gmt")


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="gift-"))
    out.mkdir(parents=True, exist_ok=True)
    print(f"working directory: {out}\n")

    print("== import ==")
    rc = cli.main(["import", *(str(FIXTURES / s) for s in SOURCES), "--out", str(out)])
    if rc:
        return rc

    print("\n== fuse ==")
    rc = cli.main(["fuse", *(str(out / p) for p in PIVOTED), "--out", str(out)])
    if rc:
        return rc
    print((out / "fused.report").read_text(encoding="utf-8"))

    fused = to_model(parse_gmt((out / "fused.gmt").read_text(encoding="utf-8")))

    print("== lookup ==")
    for surface in ("gamete intrafallopian transfer", "Transfert intrafallopien de gamètes"):
        print(f"  {surface!r} -> {lookup(fused, surface)}")

    print("\n== query expansion ==")
    hit = lookup(fused, "gamete intrafallopian transfer")[0]
    expansion = expand_query(fused, hit, ["fr", "en"])
    print(f"  {hit}: {expansion.rendered}")

    print("\n== validation ==")
    findings = validate(fused, default_dcs())
    print(f"  {len(findings)} data-category finding(s)")

    print("\n== pointer resolution ==")
    entry = fused.resolve(hit)
    section = entry.lang_sections[0].term_sections[0]
    for block in section.provenance:
        pointer = block.native_pointer
        native = parse_gmt((out / pointer.file).read_text(encoding="utf-8"))
        node = resolve_pointer(native, pointer)
        print(f"  {block.institution:6s} {pointer.file}#{pointer.fragment}"
              f" -> {node.type_attr} {node.id_attr}")

    print("\n== export back out ==")
    for institution in ("NLM", "INIST", "INRA"):
        exported = export_by_source(fused, institution)
        print(f"  {institution}: {len(exported.entries)} entries")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
