"""Reader, writer and pointer tests for the canonical XML dialect."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpusgen import random_collection
from termfuse.errors import (
    AmbiguousId,
    DialectError,
    LevelError,
    MappingError,
    NotFound,
    XmlError,
)
from termfuse.gmtxml import (
    GmtNode,
    Pointer,
    annot,
    brack,
    child_sequence,
    feat,
    feat_text,
    format_pointer,
    from_model,
    parse_gmt,
    parse_pointer,
    resolve_pointer,
    serialize_gmt,
    struct,
    text_span,
    to_model,
    validate_tree,
)

MINIMAL = """<?xml version="1.0" encoding="UTF-8"?>
<struct type="terminologicalDataCollection">
  <struct type="terminologicalEntry" xml:id="TC.1">
    <struct type="languageSection">
      <feat type="languageIdentifier">en</feat>
      <struct type="termSection">
        <feat type="term">Brain</feat>
      </struct>
    </struct>
  </struct>
</struct>
"""


def _doc(body: str) -> str:
    return ('<?xml version="1.0" encoding="UTF-8"?>\n'
            '<struct type="terminologicalDataCollection">\n'
            f"{body}\n</struct>\n")


# --- parsing and dialect rules ----------------------------------------------------


def test_parse_minimal_document():
    tree = parse_gmt(MINIMAL)
    assert tree.kind == "struct"
    assert tree.type_attr == "terminologicalDataCollection"
    entry = tree.children[0]
    assert entry.id_attr == "TC.1"


def test_parse_accepts_bytes_and_str():
    assert parse_gmt(MINIMAL.encode("utf-8")) == parse_gmt(MINIMAL)


@pytest.mark.parametrize("data", [
    b"",
    b"not xml at all",
    b"<struct type='terminologicalDataCollection'>",  # truncated
    b"\x00\x01\x02\xff",
])
def test_unparseable_input_raises_xml_error(data):
    with pytest.raises(XmlError):
        parse_gmt(data)


def test_wrong_root_element():
    with pytest.raises(DialectError):
        parse_gmt('<martif type="terminologicalDataCollection"/>')


def test_wrong_root_type():
    with pytest.raises(DialectError):
        parse_gmt('<struct type="terminologicalEntry"/>')


def test_unknown_struct_type_is_a_level_error():
    with pytest.raises(LevelError):
        parse_gmt(_doc('  <struct type="chapter"/>'))


def test_struct_without_type_rejected():
    with pytest.raises(DialectError):
        parse_gmt(_doc("  <struct/>"))


def test_foreign_attribute_rejected():
    with pytest.raises(DialectError):
        parse_gmt(_doc('  <struct type="terminologicalEntry" lang="en"/>'))


def test_duplicate_xml_id_rejected():
    body = ('  <struct type="terminologicalEntry" xml:id="E1"/>\n'
            '  <struct type="terminologicalEntry" xml:id="E1"/>')
    with pytest.raises(DialectError):
        parse_gmt(_doc(body))


def test_character_data_inside_struct_rejected():
    with pytest.raises(DialectError):
        parse_gmt(_doc('  <struct type="terminologicalEntry">oops</struct>'))


def test_brack_must_start_with_feat():
    bad = _doc('  <struct type="terminologicalEntry">\n'
               '    <brack><annot type="x">y</annot></brack>\n'
               "  </struct>")
    with pytest.raises(DialectError):
        parse_gmt(bad)


def test_annot_not_allowed_inside_annot():
    bad = _doc('  <struct type="terminologicalEntry">\n'
               '    <feat type="note">a<annot type="x">b<annot type="y">c</annot></annot></feat>\n'
               "  </struct>")
    with pytest.raises(DialectError):
        parse_gmt(bad)


def test_bold_is_flattened_into_text():
    doc = _doc('  <struct type="terminologicalEntry">\n'
               '    <feat type="note">see <b>this</b> part</feat>\n'
               "  </struct>")
    tree = parse_gmt(doc)
    note = tree.children[0].children[0]
    assert feat_text(note) == "see this part"
    assert all(ch.kind in ("text", "annot") for ch in note.children)
    # canonical form drops the highlight element entirely
    assert "<b>" not in serialize_gmt(tree)


def test_feat_text_includes_annotations():
    doc = _doc('  <struct type="terminologicalEntry">\n'
               '    <feat type="context">aa <annot type="term">bb</annot> cc</feat>\n'
               "  </struct>")
    note = parse_gmt(doc).children[0].children[0]
    assert feat_text(note) == "aa bb cc"


# --- serialization ----------------------------------------------------------------


def test_serialize_is_canonical_for_the_figure_document(figure_doc):
    assert serialize_gmt(parse_gmt(figure_doc)) == figure_doc


def test_escapes_in_feat_text():
    # quotes need escaping only inside attributes, not in character data
    tree = struct("terminologicalDataCollection", children=[
        struct("terminologicalEntry", children=[
            feat("note", 'a & b < c > d "e"\rf')])])
    out = serialize_gmt(tree)
    assert '<feat type="note">a &amp; b &lt; c &gt; d "e"&#13;f</feat>' in out
    assert parse_gmt(out) == tree


def test_newline_and_tab_survive_round_trip():
    tree = struct("terminologicalDataCollection", children=[
        struct("terminologicalEntry", children=[feat("note", "line1\nline2\tend")])])
    again = parse_gmt(serialize_gmt(tree))
    assert feat_text(again.children[0].children[0]) == "line1\nline2\tend"


def test_attribute_order_is_type_then_id():
    tree = struct("terminologicalDataCollection", children=[
        struct("terminologicalEntry", id_="E1")])
    assert '<struct type="terminologicalEntry" xml:id="E1"/>' in serialize_gmt(tree)


def test_validate_tree_rejects_hand_built_breakage():
    root = struct("terminologicalDataCollection", children=[
        struct("terminologicalEntry", children=[
            GmtNode(kind="text", type_attr=None, id_attr=None, text="stray", children=[])])])
    from termfuse.errors import InvariantViolation
    with pytest.raises(InvariantViolation):
        validate_tree(root)
    ok = struct("terminologicalDataCollection", children=[
        struct("terminologicalEntry", children=[feat("note", "fine")])])
    validate_tree(ok)


# --- pointers ---------------------------------------------------------------------


def test_parse_pointer_shorthand_and_sequence():
    p = parse_pointer("#BV.203402.TS.6")
    assert p == Pointer(fragment="BV.203402.TS.6", file=None)
    q = parse_pointer("mesh.native.gmt#NLM.1")
    assert q.file == "mesh.native.gmt" and q.fragment == "NLM.1"
    r = parse_pointer("#element(/1/4/2)")
    assert r.fragment == (1, 4, 2)


@pytest.mark.parametrize("text", [
    "no-fragment-part",
    "#two words",
    "#bad/slash",
    "#element()",
    "#element(/0)",
    "#par(en)s",
])
def test_malformed_pointers_rejected(text):
    with pytest.raises(MappingError):
        parse_pointer(text)


@given(st.text(alphabet=st.sampled_from("ABCdef019._:-"), min_size=1),
       st.one_of(st.none(), st.just("file.gmt")))
def test_pointer_format_parse_round_trip(frag, file):
    p = Pointer(fragment=frag, file=file)
    assert parse_pointer(format_pointer(p)) == p


@given(st.lists(st.integers(min_value=1, max_value=40), min_size=1, max_size=6))
def test_sequence_pointer_round_trip(steps):
    p = Pointer(fragment=tuple(steps), file=None)
    assert parse_pointer(format_pointer(p)) == p


def test_resolve_shorthand_in_figure(figure_tree):
    node = resolve_pointer(figure_tree, parse_pointer("#BV.203402.TS.6"))
    assert node.type_attr == "termSection"
    assert feat_text(node.children[0]) == "Gamete intrafallopian transfer"


def test_resolve_root_sequence(figure_tree):
    assert resolve_pointer(figure_tree, Pointer(fragment=(1,))) is figure_tree


def test_child_sequence_inverts_resolution(figure_tree):
    # every element in the document must be reachable by its own sequence
    def walk(node):
        yield node
        for ch in node.children:
            if ch.kind != "text":
                yield from walk(ch)

    count = 0
    for node in walk(figure_tree):
        seq = child_sequence(figure_tree, node)
        assert resolve_pointer(figure_tree, Pointer(fragment=seq)) is node
        count += 1
    assert count > 20


def test_resolution_failures(figure_tree):
    with pytest.raises(NotFound):
        resolve_pointer(figure_tree, Pointer(fragment="nothing.here"))
    with pytest.raises(NotFound):
        resolve_pointer(figure_tree, Pointer(fragment=(1, 99)))
    with pytest.raises(NotFound):
        resolve_pointer(figure_tree, Pointer(fragment=(2,)))
    with pytest.raises(NotFound):
        child_sequence(figure_tree, struct("termSection"))


def test_ambiguous_shorthand():
    tree = struct("terminologicalDataCollection", children=[
        struct("terminologicalEntry", id_="X"),
        struct("terminologicalEntry", id_="X")])
    with pytest.raises(AmbiguousId):
        resolve_pointer(tree, Pointer(fragment="X"))


# --- model mapping ----------------------------------------------------------------


def test_figure_maps_to_expected_model(figure_collection):
    col = figure_collection
    gi = col.global_info
    assert gi.dcs_ref == "default"
    assert [r.institution for r in gi.resources] == ["NLM", "INIST", "INRA"]
    assert gi.resources[2].citation and gi.resources[2].citation.endswith("ISBN 2-7380-0935-2")

    entry = col.resolve("BV.203402")
    assert entry.features[0].category == "definition"
    en = entry.lang_sections[0]
    context = en.features[0]
    assert context.category == "context"
    assert [(a.type, a.start, a.end) for a in context.annotations] == [
        ("term", 0, 30), ("abbreviation", 31, 35)]
    ts = col.resolve("BV.203402.TS.6")
    assert ts.term == "Gamete intrafallopian transfer"
    assert [(b.institution, b.database) for b in ts.provenance] == [
        ("NLM", "MESH"),
        ("INIST", "Vocabulaire multidisciplinaire PASCAL"),
        ("INRA", "Biotechnologie de la reproduction")]


def test_model_round_trips_through_the_tree(figure_tree, figure_collection, figure_doc):
    assert from_model(figure_collection) == figure_tree
    assert serialize_gmt(from_model(figure_collection)) == figure_doc
    assert to_model(from_model(figure_collection)) == figure_collection


def _ts_body(members: str) -> str:
    return ('  <struct type="terminologicalEntry">\n'
            '    <struct type="languageSection">\n'
            '      <feat type="languageIdentifier">en</feat>\n'
            '      <struct type="termSection">\n'
            '        <feat type="term">x</feat>\n'
            f"        {members}\n"
            "      </struct>\n"
            "    </struct>\n"
            "  </struct>")


@pytest.mark.parametrize("body, message", [
    (_ts_body('<brack><feat type="originatingInstitution">A</feat>'
              '<feat type="term">x</feat></brack>'),
     "unexpected feature"),
    (_ts_body('<brack><feat type="originatingInstitution">A</feat>'
              '<feat type="originatingInstitution">B</feat></brack>'),
     "duplicate feature"),
    ('  <struct type="terminologicalEntry">\n'
     '    <brack><feat type="broaderConcept"></feat></brack>\n  </struct>',
     "empty target"),
    ('  <struct type="terminologicalEntry">\n'
     '    <brack><feat type="originatingInstitution">A</feat></brack>\n  </struct>',
     "bare provenance block"),
])
def test_mapping_errors(body, message):
    tree = parse_gmt(_doc(body))
    with pytest.raises(MappingError) as exc:
        to_model(tree)
    assert message in str(exc.value)


def test_unknown_picklist_text_is_preserved_verbatim():
    # mapping does not judge values; that is the validator's job
    doc = _doc('  <struct type="terminologicalEntry">\n'
               '    <struct type="languageSection">\n'
               '      <feat type="languageIdentifier">en</feat>\n'
               '      <struct type="termSection">\n'
               '        <feat type="term">x</feat>\n'
               '        <feat type="termType">madeUpForm</feat>\n'
               "      </struct>\n"
               "    </struct>\n"
               "  </struct>")
    col = to_model(parse_gmt(doc))
    ts = col.entries[0].lang_sections[0].term_sections[0]
    assert ts.features[0].value == "madeUpForm"


# --- randomized round trips ---------------------------------------------------------


@pytest.mark.parametrize("seed", range(0, 50))
def test_random_collection_round_trip(seed):
    col = random_collection(seed)
    tree = from_model(col)
    validate_tree(tree)
    doc = serialize_gmt(tree)
    assert parse_gmt(doc) == tree
    assert serialize_gmt(parse_gmt(doc)) == doc
    assert to_model(parse_gmt(doc)) == col


TEXT_ALPHABET = "ab &<>\"'\r\n\t;éü漢."


@settings(max_examples=120, deadline=None)
@given(st.text(alphabet=st.sampled_from(TEXT_ALPHABET), max_size=24))
def test_arbitrary_feat_text_survives(value):
    tree = struct("terminologicalDataCollection", children=[
        struct("terminologicalEntry", children=[feat("note", value)])])
    doc = serialize_gmt(tree)
    note = parse_gmt(doc).children[0].children[0]
    assert feat_text(note) == value
