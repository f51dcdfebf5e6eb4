"""End-to-end acceptance gate: one test per shipping criterion.

Each test exercises the toolchain the way a release check would, with
independent oracles from tests/oracles.py where a computed value needs a
second opinion.  Run with -v to get one pass/fail line per criterion.
"""

from __future__ import annotations

import copy
import itertools
import time
from collections import Counter
from datetime import date

import pytest

import oracles
from corpusgen import make_overlap_corpus, make_pair, random_collection
from termfuse.dcs import default_dcs, validate
from termfuse.fusion import FusionPolicy, NormalizationOptions, fuse
from termfuse.gmtxml import (
    FEAT,
    feat_text,
    from_model,
    parse_gmt,
    parse_pointer,
    resolve_pointer,
    serialize_gmt,
    to_model,
)
from termfuse.ingest import PivotPolicy, parse_source, pivot
from termfuse.model import Feature
from termfuse.termbase import export_by_source
from conftest import FIXTURES

GIFT_TERM = "Gamete intrafallopian transfer"
GIFT_PAIRS = {
    ("NLM", "MESH"),
    ("INIST", "Vocabulaire multidisciplinaire PASCAL"),
    ("INRA", "Biotechnologie de la reproduction"),
}


def _feats(tree, type_):
    """Every feat of the given type, in document order."""
    out = []

    def walk(node):
        if node.kind == FEAT and node.type_attr == type_:
            out.append(node)
        for child in node.children:
            walk(child)

    walk(tree)
    return out


def _entry_with_term(collection, term, lang="en"):
    hits = [e for e in collection.entries
            for ls in e.lang_sections if ls.language == lang
            for ts in ls.term_sections if ts.term == term]
    assert len(hits) == 1
    return hits[0]


@pytest.fixture(scope="module")
def overlap():
    """Planted-overlap corpus, pivoted and fused once for criteria 5, 6, 10."""
    corpus = make_overlap_corpus()
    start = time.perf_counter()
    cols = [pivot(parse_source(text)) for text in corpus.texts]
    fused, report = fuse(cols)
    elapsed = time.perf_counter() - start
    return {"corpus": corpus, "cols": cols, "fused": fused,
            "report": report, "elapsed": elapsed}


def test_c01_gift_reconstruction(gift_run):
    """Three-source GIFT import+fuse reproduces the golden entry byte for byte."""
    assert gift_run["elapsed"] < 1.0, f"pipeline took {gift_run['elapsed']:.2f}s"

    out_text = gift_run["fused"].read_text(encoding="utf-8")
    golden = (FIXTURES / "gift_fused.golden.gmt").read_text(encoding="utf-8")
    assert out_text == golden
    assert parse_gmt(out_text) == parse_gmt(golden)
    report = gift_run["report"].read_text(encoding="utf-8")
    assert report == (FIXTURES / "gift_fused.golden.report").read_text(encoding="utf-8")

    fused = to_model(parse_gmt(out_text))
    entry = _entry_with_term(fused, GIFT_TERM)
    en = next(ls for ls in entry.lang_sections if ls.language == "en")
    section = next(ts for ts in en.term_sections if ts.term == GIFT_TERM)
    pairs = [(b.institution, b.database) for b in section.provenance]
    assert len(pairs) == 3
    assert set(pairs) == GIFT_PAIRS

    context = next(f for f in en.features if f.category == "context")
    assert context.source is not None
    assert context.source.startswith("BOUROCHE - LACOMBE")
    assert context.source.endswith("ISBN 2-7380-0935-2")
    assert [b.institution for b in context.provenance] == ["INRA"]
    print(f"criterion 1: PASS ({gift_run['elapsed']:.2f}s)")


def test_c02_dual_policy_counts():
    """Non-preferred handling: capture keeps one entry, split makes two."""
    text = (FIXTURES / "bdsp.tsf").read_text(encoding="utf-8")

    captured = pivot(parse_source(text), PivotPolicy(uf_handling="synonymCapture"))
    assert len(captured.entries) == 1
    assert len(captured.entries[0].lang_sections[0].term_sections) == 2

    split = pivot(parse_source(text), PivotPolicy(uf_handling="splitNonPreferred"))
    assert len(split.entries) == 2
    relations = [rel for e in split.entries for ls in e.lang_sections
                 for ts in ls.term_sections for rel in ts.relations]
    assert len(relations) == 1
    assert relations[0].kind == "descriptorOf"
    print("criterion 2: PASS")


def test_c03_permutation_deflation():
    """Token sorting folds permuted descriptors into one variant-bearing section."""
    text = (FIXTURES / "mesh_parkinson.tsf").read_text(encoding="utf-8")
    policy = FusionPolicy(normalization=NormalizationOptions(token_sort=True))

    folded, _ = fuse([pivot(parse_source(text))], policy)
    assert len(folded.entries) == 1
    sections = folded.entries[0].lang_sections[0].term_sections
    assert len(sections) == 1
    variants = [f for f in sections[0].features if f.category == "variantForm"]
    assert [v.value for v in variants] == ["Parkinsonism, Primary"]

    strict, _ = fuse([pivot(parse_source(text))])
    assert len(strict.entries) == 1
    strict_sections = strict.entries[0].lang_sections[0].term_sections
    assert len(strict_sections) == 2
    assert not [f for ts in strict_sections for f in ts.features
                if f.category == "variantForm"]
    print("criterion 3: PASS")


def test_c04_round_trip_property():
    """parse/serialize are exact inverses on 1,000 random valid collections."""
    failures = 0
    for seed in range(1000):
        collection = random_collection(seed)
        tree = from_model(collection)
        doc = serialize_gmt(tree)
        reparsed = parse_gmt(doc)
        if reparsed != tree or serialize_gmt(reparsed) != doc:
            failures += 1
    assert failures == 0
    print("criterion 4: PASS (1000 collections)")


def test_c05_fusion_oracle_equivalence(overlap):
    """Fusion at scale agrees with a brute-force all-pairs union-find."""
    assert overlap["elapsed"] < 5.0, f"fuse took {overlap['elapsed']:.2f}s"
    fused = overlap["fused"]
    assert len(fused.entries) == overlap["corpus"].expected_entries
    got = oracles.fused_partition_triples(fused)
    want = oracles.oracle_partition_triples(overlap["cols"])
    assert got == want
    print(f"criterion 5: PASS ({len(fused.entries)} entries, "
          f"{overlap['elapsed']:.2f}s)")


def test_c06_provenance_conservation(overlap):
    """Fusion neither drops nor invents provenance blocks."""
    fused_blocks = oracles.provenance_multiset(overlap["fused"])
    input_blocks = Counter()
    for col in overlap["cols"]:
        input_blocks += oracles.provenance_multiset(col)
    assert fused_blocks == input_blocks
    print(f"criterion 6: PASS ({sum(input_blocks.values())} blocks)")


def test_c07_export_inverse():
    """Exporting one source out of a fused pair returns that source's content."""
    for seed in range(100):
        text_a, text_b = make_pair(seed)
        col_a = pivot(parse_source(text_a))
        col_b = pivot(parse_source(text_b))
        fused, _ = fuse([col_a, col_b])
        exported = export_by_source(fused, "ORG-A")
        assert (oracles.content_multiset(exported)
                == oracles.content_multiset(col_a)), f"seed {seed}"
    print("criterion 7: PASS (100 pairs)")


def test_c08_pointer_resolution(figure_tree, gift_run):
    """Shorthand ids and every emitted native pointer resolve to real nodes."""
    node = resolve_pointer(figure_tree, parse_pointer("#BV.203402.TS.6"))
    term = next(c for c in node.children
                if c.kind == FEAT and c.type_attr == "term")
    assert feat_text(term) == GIFT_TERM

    fused_tree = parse_gmt(gift_run["fused"].read_text(encoding="utf-8"))
    natives = {}
    resolved = 0
    for feat in _feats(fused_tree, "nativePointer"):
        pointer = parse_pointer(feat_text(feat))
        assert pointer.file, "native pointers must name their file"
        if pointer.file not in natives:
            path = gift_run["dir"] / pointer.file
            natives[pointer.file] = parse_gmt(path.read_text(encoding="utf-8"))
        target = resolve_pointer(natives[pointer.file], pointer)
        assert target.kind == "struct"
        resolved += 1
    assert resolved == 10
    print(f"criterion 8: PASS ({resolved} pointers)")


def test_c09_dcs_validation(figure_collection):
    """Clean document validates; each planted defect yields exactly one finding."""
    selection = default_dcs()
    assert validate(figure_collection, selection) == []

    entry = figure_collection.entries[0]
    moved = copy.deepcopy(figure_collection)
    moved.entries[0].features.append(Feature(category="termType", value="fullForm"))
    findings = validate(moved, selection)
    assert [(v.code, v.category) for v in findings] == [("illegal-level", "termType")]
    assert "BV.203402" in findings[0].node

    bad_lang = copy.deepcopy(figure_collection)
    bad_lang.entries[0].lang_sections[0].language = "english"
    findings = validate(bad_lang, selection)
    assert [(v.code, v.category) for v in findings] == [("bad-value", "languageIdentifier")]
    assert "BV.203402" in findings[0].node

    off_list = copy.deepcopy(figure_collection)
    target = next(ts for ls in off_list.entries[0].lang_sections
                  for ts in ls.term_sections if ts.id == "BV.203402.TS.6")
    target.features.append(Feature(category="termType", value="weirdForm"))
    findings = validate(off_list, selection)
    assert [(v.code, v.category) for v in findings] == [("bad-value", "termType")]
    assert findings[0].node == "BV.203402.TS.6"
    print("criterion 9: PASS")


def test_c10_order_independence(overlap):
    """All six input orderings produce the same partitions and content."""
    cols = overlap["cols"]
    baseline = None
    for perm in itertools.permutations(range(3)):
        fused, _ = fuse([cols[i] for i in perm])
        signature = (oracles.fused_partition_triples(fused),
                     oracles.term_multiset(fused),
                     oracles.provenance_multiset(fused))
        if baseline is None:
            baseline = signature
        else:
            assert signature == baseline, f"ordering {perm} diverged"
    print("criterion 10: PASS (6 orderings)")
