"""GMT dialect: a small XML vocabulary for terminological data.

Four element kinds only.  struct carries the meta-model skeleton (its type
names the level, entries and term sections may take an xml:id), feat holds
one data category value as mixed text, brack groups a feature with its
source and provenance, and annot marks a typed span inside feat content.
Presentational <b> elements are tolerated on input and flattened to text.

serialize_gmt emits one canonical form: XML declaration, two-space
indentation, struct and brack children each on their own line, feat and
annot content inline, self-closing empty elements, attributes ordered
type then xml:id.  parse_gmt accepts any legal variation and returns the
same tree for any two documents with equal canonical forms.

to_model / from_model map trees onto the model classes and back, losslessly
for everything the model can express.  Pointers address nodes either by
shorthand id ("file#BV.1") or by an element child sequence
("file#element(/1/2/1)"), where /1 is the document root.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import date

from termfuse.errors import (
    AmbiguousId,
    DialectError,
    InvariantViolation,
    LevelError,
    MappingError,
    NotFound,
    XmlError,
)
from termfuse.model import (
    BROADER_CONCEPT,
    CONCEPT_RELATION_KINDS,
    DESCRIPTOR_OF,
    LEVEL_COLLECTION,
    LEVEL_COMPONENT,
    LEVEL_ENTRY,
    LEVEL_GLOBAL,
    LEVEL_LANG,
    LEVEL_TERM,
    META_LEVELS,
    RELATED_CONCEPT,
    Annotation,
    ConceptRelation,
    Feature,
    GlobalInfo,
    LangSection,
    ProvenanceBlock,
    ResourceDescriptor,
    TermCollection,
    TermComponentSection,
    TermEntry,
    TermRelation,
    TermSection,
    freeze,
    new_collection,
    register_entry,
)

STRUCT = "struct"
FEAT = "feat"
BRACK = "brack"
ANNOT = "annot"
TEXT = "text"

_XML_ID = "{http://www.w3.org/XML/1998/namespace}id"
_ID_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9._:-]*$")

# Wire categories with structural meaning in the model mapping.
CAT_TERM = "term"
CAT_LANG = "languageIdentifier"
CAT_SOURCE = "source"
CAT_INSTITUTION = "originatingInstitution"
CAT_DATABASE = "originatingDatabaseName"
CAT_BIB_SOURCE = "bibliographicSource"
CAT_NATIVE_FILE = "nativeFile"
CAT_NATIVE_POINTER = "nativePointer"
CAT_LAST_MODIFIED = "lastModificationDate"
CAT_TITLE = "title"
CAT_DCS_REF = "dataCategorySelection"
CAT_PREFIX = "collectionPrefix"
CAT_TYPOLOGY = "typology"

_RELATION_HEADS = CONCEPT_RELATION_KINDS + (DESCRIPTOR_OF,)


@dataclass
class GmtNode:
    """One node of a GMT tree; kind is struct, feat, brack, annot or text."""

    kind: str
    type_attr: str | None = None
    id_attr: str | None = None
    text: str = ""
    children: list["GmtNode"] = field(default_factory=list)

    @property
    def is_element(self) -> bool:
        return self.kind != TEXT


def struct(type_: str, id_: str | None = None, children: list[GmtNode] | None = None) -> GmtNode:
    return GmtNode(STRUCT, type_attr=type_, id_attr=id_, children=children or [])


def feat(type_: str, text: str = "") -> GmtNode:
    return GmtNode(FEAT, type_attr=type_, children=[text_span(text)] if text else [])


def brack(children: list[GmtNode]) -> GmtNode:
    return GmtNode(BRACK, children=children)


def annot(type_: str, text: str = "") -> GmtNode:
    return GmtNode(ANNOT, type_attr=type_, children=[text_span(text)] if text else [])


def text_span(text: str) -> GmtNode:
    return GmtNode(TEXT, text=text)


def feat_text(node: GmtNode) -> str:
    """Concatenated character content of a feat or annot node."""
    out = []
    for ch in node.children:
        if ch.kind == TEXT:
            out.append(ch.text)
        else:
            out.append(feat_text(ch))
    return "".join(out)


# --- pointers -------------------------------------------------------------------

@dataclass(frozen=True)
class Pointer:
    """Address of a node in a GMT document.

    fragment is either a shorthand id string or a 1-based element child
    sequence where (1,) is the document root.  file is the document the
    pointer refers into, or None for the current document.
    """

    fragment: "str | tuple[int, ...]"
    file: str | None = None


def format_pointer(pointer: Pointer) -> str:
    frag = pointer.fragment
    if isinstance(frag, tuple):
        part = "element(" + "".join(f"/{n}" for n in frag) + ")"
    else:
        part = frag
    return f"{pointer.file or ''}#{part}"


_SEQ_RE = re.compile(r"^element\(((?:/[0-9]+)+)\)$")
_SHORTHAND_RE = re.compile(r"^[^\s#()/]+$")


def parse_pointer(text: str) -> Pointer:
    if "#" not in text:
        raise MappingError(f"pointer {text!r} has no fragment part")
    file_part, frag = text.rsplit("#", 1)
    m = _SEQ_RE.match(frag)
    if m:
        steps = tuple(int(n) for n in m.group(1).split("/")[1:])
        if any(n < 1 for n in steps):
            raise MappingError(f"pointer {text!r} has a non-positive child step")
        return Pointer(fragment=steps, file=file_part or None)
    if not _SHORTHAND_RE.match(frag):
        raise MappingError(f"pointer {text!r} has a malformed fragment")
    return Pointer(fragment=frag, file=file_part or None)


def resolve_pointer(tree: GmtNode, pointer: Pointer) -> GmtNode:
    """Resolve pointer inside tree; the file part is the caller's concern."""
    frag = pointer.fragment
    if isinstance(frag, str):
        hits = [n for n in _walk_elements(tree) if n.id_attr == frag]
        if not hits:
            raise NotFound(f"no node with id {frag!r}")
        if len(hits) > 1:
            raise AmbiguousId(f"id {frag!r} matches {len(hits)} nodes")
        return hits[0]
    if not frag or frag[0] != 1:
        raise NotFound(f"child sequence {frag!r} does not start at the document root")
    node = tree
    for step in frag[1:]:
        kids = [ch for ch in node.children if ch.is_element]
        if step > len(kids):
            raise NotFound(f"child sequence {frag!r} runs out of elements")
        node = kids[step - 1]
    return node


def child_sequence(tree: GmtNode, target: GmtNode) -> tuple[int, ...]:
    """Inverse of resolve_pointer for element nodes reachable from tree."""

    def search(node: GmtNode, path: tuple[int, ...]):
        if node is target:
            return path
        pos = 0
        for ch in node.children:
            if not ch.is_element:
                continue
            pos += 1
            found = search(ch, path + (pos,))
            if found is not None:
                return found
        return None

    found = search(tree, (1,))
    if found is None:
        raise NotFound("target is not an element of this tree")
    return found


def _walk_elements(node: GmtNode):
    if node.is_element:
        yield node
    for ch in node.children:
        yield from _walk_elements(ch)


# --- parsing --------------------------------------------------------------------

def parse_gmt(data: "bytes | str") -> GmtNode:
    """Parse a GMT document into a tree, enforcing the dialect rules."""
    if isinstance(data, str):
        try:
            data = data.encode("utf-8")
        except UnicodeEncodeError as exc:
            raise XmlError(f"input is not encodable XML: {exc}") from None
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise XmlError(f"not well-formed: {exc}") from None
    except ValueError as exc:
        raise XmlError(f"unparseable input: {exc}") from None
    if root.tag != STRUCT:
        raise DialectError(f"root element must be struct, got {root.tag!r}")
    seen_ids: set[str] = set()
    tree = _convert_struct(root, seen_ids)
    if tree.type_attr != LEVEL_COLLECTION:
        raise DialectError(f"root struct must be {LEVEL_COLLECTION!r}, got {tree.type_attr!r}")
    return tree


def _take_attrs(elem: ET.Element, tag: str, allowed: tuple[str, ...]) -> dict[str, str]:
    out = {}
    for key, value in elem.attrib.items():
        if key not in allowed:
            raise DialectError(f"attribute {key!r} not allowed on {tag}")
        out[key] = value
    return out


def _convert_struct(elem: ET.Element, seen_ids: set[str]) -> GmtNode:
    attrs = _take_attrs(elem, STRUCT, ("type", _XML_ID))
    if "type" not in attrs:
        raise DialectError("struct without a type attribute")
    type_attr = attrs["type"]
    if type_attr not in META_LEVELS:
        raise LevelError(f"struct type {type_attr!r} is not a meta-model level")
    id_attr = attrs.get(_XML_ID)
    if id_attr is not None:
        if id_attr in seen_ids:
            raise DialectError(f"duplicate xml:id {id_attr!r}")
        seen_ids.add(id_attr)
    node = GmtNode(STRUCT, type_attr=type_attr, id_attr=id_attr)
    _fill_container(node, elem, seen_ids)
    return node


def _convert_brack(elem: ET.Element, seen_ids: set[str]) -> GmtNode:
    _take_attrs(elem, BRACK, ())
    node = GmtNode(BRACK)
    _fill_container(node, elem, seen_ids)
    if not node.children or node.children[0].kind != FEAT:
        raise DialectError("brack must start with a feat child")
    return node


def _fill_container(node: GmtNode, elem: ET.Element, seen_ids: set[str]) -> None:
    kind = node.kind

    def reject_text(chunk: str | None):
        if chunk and chunk.strip():
            raise DialectError(f"character data not allowed inside {kind}")

    reject_text(elem.text)
    for child in elem:
        if child.tag == FEAT:
            node.children.append(_convert_feat(child))
        elif child.tag == BRACK:
            node.children.append(_convert_brack(child, seen_ids))
        elif child.tag == STRUCT and kind == STRUCT:
            node.children.append(_convert_struct(child, seen_ids))
        else:
            raise DialectError(f"element {child.tag!r} not allowed inside {kind}")
        reject_text(child.tail)


def _convert_feat(elem: ET.Element) -> GmtNode:
    attrs = _take_attrs(elem, FEAT, ("type",))
    if "type" not in attrs:
        raise DialectError("feat without a type attribute")
    node = GmtNode(FEAT, type_attr=attrs["type"])
    _fill_mixed(node, elem, allow_annot=True)
    return node


def _convert_annot(elem: ET.Element) -> GmtNode:
    attrs = _take_attrs(elem, ANNOT, ("type",))
    if "type" not in attrs:
        raise DialectError("annot without a type attribute")
    node = GmtNode(ANNOT, type_attr=attrs["type"])
    _fill_mixed(node, elem, allow_annot=False)
    return node


def _fill_mixed(node: GmtNode, elem: ET.Element, allow_annot: bool) -> None:
    def push_text(chunk: str | None):
        if not chunk:
            return
        if node.children and node.children[-1].kind == TEXT:
            node.children[-1].text += chunk
        else:
            node.children.append(text_span(chunk))

    push_text(elem.text)
    for child in elem:
        if child.tag == ANNOT and allow_annot:
            node.children.append(_convert_annot(child))
        elif child.tag == "b":
            push_text(_flatten_b(child))
        else:
            raise DialectError(f"element {child.tag!r} not allowed inside {node.kind}")
        push_text(child.tail)


def _flatten_b(elem: ET.Element) -> str:
    _take_attrs(elem, "b", ())
    out = [elem.text or ""]
    for child in elem:
        if child.tag != "b":
            raise DialectError(f"element {child.tag!r} not allowed inside b")
        out.append(_flatten_b(child))
        out.append(child.tail or "")
    return "".join(out)


# --- serialization ----------------------------------------------------------------

_BAD_CHARS = re.compile(r"[\x00-\x08\x0b\x0c\x0e-\x1f\ud800-\udfff￾￿]")


def _check_chars(owner: str, text: str) -> None:
    m = _BAD_CHARS.search(text)
    if m:
        raise InvariantViolation(owner, "bad-character",
                                 f"character U+{ord(m.group()):04X} cannot appear in XML")


def _esc_text(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace("\r", "&#13;"))


def _esc_attr(text: str) -> str:
    return (_esc_text(text).replace('"', "&quot;")
            .replace("\n", "&#10;").replace("\t", "&#9;"))


def validate_tree(tree: GmtNode) -> None:
    """Raise InvariantViolation if tree is not a serializable GMT tree."""
    if tree.kind != STRUCT:
        raise InvariantViolation("(root)", "bad-root", "tree root must be a struct")
    seen_ids: set[str] = set()
    _validate_node(tree, seen_ids)


def _validate_node(node: GmtNode, seen_ids: set[str]) -> None:
    label = node.type_attr or node.kind
    if node.kind == TEXT:
        raise InvariantViolation(label, "stray-text", "text node outside feat content")
    if node.kind in (FEAT, ANNOT):
        if not node.type_attr:
            raise InvariantViolation(node.kind, "missing-type", f"{node.kind} without a type")
        _check_chars(label, node.type_attr)
        prev_text = False
        for ch in node.children:
            if ch.kind == TEXT:
                if not ch.text:
                    raise InvariantViolation(label, "empty-text", "empty text node")
                if prev_text:
                    raise InvariantViolation(label, "adjacent-text", "two adjacent text nodes")
                _check_chars(label, ch.text)
                prev_text = True
            elif ch.kind == ANNOT and node.kind == FEAT:
                prev_text = False
                _validate_node(ch, seen_ids)
            else:
                raise InvariantViolation(label, "bad-child", f"{ch.kind} not allowed inside {node.kind}")
        return
    if node.kind == STRUCT:
        if node.type_attr not in META_LEVELS:
            raise InvariantViolation(label, "bad-level", f"struct type {node.type_attr!r} is not a meta-model level")
        if node.id_attr is not None:
            if not _ID_RE.match(node.id_attr):
                raise InvariantViolation(label, "bad-id", f"xml:id {node.id_attr!r} is not a valid name")
            if node.id_attr in seen_ids:
                raise InvariantViolation(label, "duplicate-id", f"xml:id {node.id_attr!r} used twice")
            seen_ids.add(node.id_attr)
        allowed = (FEAT, BRACK, STRUCT)
    elif node.kind == BRACK:
        if node.id_attr is not None:
            raise InvariantViolation(label, "bad-id", "brack cannot carry an id")
        if not node.children or node.children[0].kind != FEAT:
            raise InvariantViolation(label, "brack-head", "brack must start with a feat child")
        allowed = (FEAT, BRACK)
    else:
        raise InvariantViolation(label, "bad-kind", f"unknown node kind {node.kind!r}")
    if node.kind == BRACK and node.type_attr is not None:
        raise InvariantViolation(label, "bad-type", "brack cannot carry a type")
    for ch in node.children:
        if ch.kind not in allowed:
            raise InvariantViolation(label, "bad-child", f"{ch.kind} not allowed inside {node.kind}")
        _validate_node(ch, seen_ids)


def serialize_gmt(tree: GmtNode) -> str:
    """Render tree in the canonical form, UTF-8 text with XML declaration."""
    validate_tree(tree)
    lines: list[str] = ['<?xml version="1.0" encoding="UTF-8"?>']
    _write_node(tree, 0, lines)
    return "\n".join(lines) + "\n"


def _open_tag(node: GmtNode) -> str:
    parts = [node.kind]
    if node.type_attr is not None:
        parts.append(f'type="{_esc_attr(node.type_attr)}"')
    if node.id_attr is not None:
        parts.append(f'xml:id="{_esc_attr(node.id_attr)}"')
    return " ".join(parts)


def _write_node(node: GmtNode, depth: int, lines: list[str]) -> None:
    pad = "  " * depth
    if node.kind in (STRUCT, BRACK):
        if not node.children:
            lines.append(f"{pad}<{_open_tag(node)}/>")
            return
        lines.append(f"{pad}<{_open_tag(node)}>")
        for ch in node.children:
            _write_node(ch, depth + 1, lines)
        lines.append(f"{pad}</{node.kind}>")
    else:
        lines.append(pad + _inline(node))


def _inline(node: GmtNode) -> str:
    if node.kind == TEXT:
        return _esc_text(node.text)
    if not node.children:
        return f"<{_open_tag(node)}/>"
    inner = "".join(_inline(ch) for ch in node.children)
    return f"<{_open_tag(node)}>{inner}</{node.kind}>"


# --- model mapping ----------------------------------------------------------------

def _feat_payload(node: GmtNode) -> tuple[str, list[Annotation]]:
    value = []
    length = 0
    annotations: list[Annotation] = []
    for ch in node.children:
        if ch.kind == TEXT:
            value.append(ch.text)
            length += len(ch.text)
        else:
            inner = feat_text(ch)
            annotations.append(Annotation(ch.type_attr or "", length, length + len(inner)))
            value.append(inner)
            length += len(inner)
    return "".join(value), annotations


def _plain_text(node: GmtNode, what: str) -> str:
    value, annotations = _feat_payload(node)
    if annotations:
        raise MappingError(f"annotations are not supported on the {what} feature")
    return value


def _content_nodes(value: str, annotations: list[Annotation]) -> list[GmtNode]:
    out: list[GmtNode] = []
    cursor = 0
    for a in annotations:
        if a.start < cursor or a.end < a.start or a.end > len(value):
            raise InvariantViolation("feature", "bad-annotation",
                                     f"annotation {a.type!r} does not fit its value")
        if a.start > cursor:
            out.append(text_span(value[cursor:a.start]))
        out.append(GmtNode(ANNOT, type_attr=a.type,
                           children=[text_span(value[a.start:a.end])] if a.end > a.start else []))
        cursor = a.end
    if cursor < len(value):
        out.append(text_span(value[cursor:]))
    return out


def _feature_node(f: Feature) -> GmtNode:
    head = GmtNode(FEAT, type_attr=f.category, children=_content_nodes(f.value, f.annotations))
    if f.source is None and not f.provenance:
        return head
    members = [head]
    if f.source is not None:
        members.append(feat(CAT_SOURCE, f.source))
    members.extend(_block_node(b) for b in f.provenance)
    return brack(members)


def _block_node(b: ProvenanceBlock) -> GmtNode:
    members = [feat(CAT_INSTITUTION, b.institution)]
    if b.database:
        members.append(feat(CAT_DATABASE, b.database))
    if b.bibliographic_source is not None:
        members.append(feat(CAT_BIB_SOURCE, b.bibliographic_source))
    if b.last_modified is not None:
        members.append(feat(CAT_LAST_MODIFIED, b.last_modified.isoformat()))
    if b.native_pointer is not None:
        members.append(feat(CAT_NATIVE_POINTER, format_pointer(b.native_pointer)))
    return brack(members)


def _block_from_brack(node: GmtNode) -> ProvenanceBlock:
    fields: dict[str, str] = {}
    for member in node.children:
        if member.kind != FEAT:
            raise MappingError("provenance block may only contain feat members")
        cat = member.type_attr or ""
        if cat not in (CAT_INSTITUTION, CAT_DATABASE, CAT_BIB_SOURCE,
                       CAT_LAST_MODIFIED, CAT_NATIVE_POINTER):
            raise MappingError(f"unexpected feature {cat!r} in a provenance block")
        if cat in fields:
            raise MappingError(f"duplicate feature {cat!r} in a provenance block")
        fields[cat] = _plain_text(member, cat)
    last_modified = None
    if CAT_LAST_MODIFIED in fields:
        try:
            last_modified = date.fromisoformat(fields[CAT_LAST_MODIFIED])
        except ValueError:
            raise MappingError(
                f"bad {CAT_LAST_MODIFIED} value {fields[CAT_LAST_MODIFIED]!r}") from None
    pointer = None
    if CAT_NATIVE_POINTER in fields:
        pointer = parse_pointer(fields[CAT_NATIVE_POINTER])
    return ProvenanceBlock(
        institution=fields.get(CAT_INSTITUTION, ""),
        database=fields.get(CAT_DATABASE, ""),
        bibliographic_source=fields.get(CAT_BIB_SOURCE),
        last_modified=last_modified,
        native_pointer=pointer,
    )


def _feature_from_brack(node: GmtNode) -> Feature:
    head = node.children[0]
    value, annotations = _feat_payload(head)
    f = Feature(category=head.type_attr or "", value=value, annotations=annotations)
    for member in node.children[1:]:
        if member.kind == FEAT:
            if member.type_attr != CAT_SOURCE:
                raise MappingError(
                    f"unexpected feature {member.type_attr!r} in a feature bracket")
            if f.source is not None:
                raise MappingError("duplicate source feature in a feature bracket")
            f.source = _plain_text(member, CAT_SOURCE)
        else:
            if member.children[0].type_attr != CAT_INSTITUTION:
                raise MappingError("nested bracket in a feature bracket must be a provenance block")
            f.provenance.append(_block_from_brack(member))
    return f


def _relation_parts(node: GmtNode, where: str):
    head = node.children[0]
    target = _plain_text(head, head.type_attr or "relation")
    if not target:
        raise MappingError(f"{head.type_attr} bracket with an empty target in {where}")
    typology = None
    block = None
    for member in node.children[1:]:
        if member.kind == FEAT and member.type_attr == CAT_TYPOLOGY:
            if typology is not None:
                raise MappingError(f"duplicate typology in a {head.type_attr} bracket")
            typology = _plain_text(member, CAT_TYPOLOGY)
        elif member.kind == BRACK and member.children[0].type_attr == CAT_INSTITUTION:
            if block is not None:
                raise MappingError(f"duplicate provenance in a {head.type_attr} bracket")
            block = _block_from_brack(member)
        else:
            raise MappingError(f"unexpected member in a {head.type_attr} bracket")
    return target, typology, block


def _global_from_node(node: GmtNode) -> tuple[GlobalInfo, str]:
    info = GlobalInfo()
    prefix = "TC"
    seen: set[str] = set()
    for ch in node.children:
        if ch.kind == FEAT:
            cat = ch.type_attr or ""
            if cat not in (CAT_TITLE, CAT_DCS_REF, CAT_PREFIX):
                raise MappingError(f"unexpected feature {cat!r} in globalInformation")
            if cat in seen:
                raise MappingError(f"duplicate feature {cat!r} in globalInformation")
            seen.add(cat)
            value = _plain_text(ch, cat)
            if cat == CAT_TITLE:
                info.title = value
            elif cat == CAT_DCS_REF:
                info.dcs_ref = value
            else:
                prefix = value
        elif ch.kind == BRACK:
            info.resources.append(_resource_from_brack(ch))
        else:
            raise MappingError(f"struct not allowed inside globalInformation")
    return info, prefix


def _resource_from_brack(node: GmtNode) -> ResourceDescriptor:
    if node.children[0].type_attr != CAT_INSTITUTION:
        raise MappingError("resource descriptor must start with originatingInstitution")
    fields: dict[str, str] = {}
    for member in node.children:
        if member.kind != FEAT:
            raise MappingError("resource descriptor may only contain feat members")
        cat = member.type_attr or ""
        if cat not in (CAT_INSTITUTION, CAT_DATABASE, CAT_BIB_SOURCE, CAT_NATIVE_FILE):
            raise MappingError(f"unexpected feature {cat!r} in a resource descriptor")
        if cat in fields:
            raise MappingError(f"duplicate feature {cat!r} in a resource descriptor")
        fields[cat] = _plain_text(member, cat)
    return ResourceDescriptor(
        institution=fields.get(CAT_INSTITUTION, ""),
        database=fields.get(CAT_DATABASE, ""),
        citation=fields.get(CAT_BIB_SOURCE),
        native_file=fields.get(CAT_NATIVE_FILE),
    )


def _resource_node(r: ResourceDescriptor) -> GmtNode:
    members = [feat(CAT_INSTITUTION, r.institution)]
    if r.database:
        members.append(feat(CAT_DATABASE, r.database))
    if r.citation is not None:
        members.append(feat(CAT_BIB_SOURCE, r.citation))
    if r.native_file is not None:
        members.append(feat(CAT_NATIVE_FILE, r.native_file))
    return brack(members)


def _component_from_node(node: GmtNode) -> TermComponentSection:
    comp = TermComponentSection(text="")
    have_text = False
    for ch in node.children:
        if ch.kind == FEAT:
            if ch.type_attr == CAT_TERM and not have_text:
                comp.text = _plain_text(ch, CAT_TERM)
                have_text = True
            else:
                value, annotations = _feat_payload(ch)
                comp.features.append(Feature(ch.type_attr or "", value, annotations=annotations))
        elif ch.kind == BRACK:
            comp.features.append(_feature_from_brack(ch))
        else:
            raise MappingError("struct not allowed inside termComponentSection")
    return comp


def _ts_from_node(node: GmtNode) -> TermSection:
    ts = TermSection(term="", id=node.id_attr)
    have_term = False
    for ch in node.children:
        if ch.kind == FEAT:
            if ch.type_attr == CAT_TERM and not have_term:
                ts.term = _plain_text(ch, CAT_TERM)
                have_term = True
            else:
                value, annotations = _feat_payload(ch)
                ts.features.append(Feature(ch.type_attr or "", value, annotations=annotations))
        elif ch.kind == BRACK:
            head = ch.children[0].type_attr
            if head == CAT_INSTITUTION:
                ts.provenance.append(_block_from_brack(ch))
            elif head == DESCRIPTOR_OF:
                target, typology, block = _relation_parts(ch, LEVEL_TERM)
                if typology is not None:
                    raise MappingError("typology is not supported on descriptorOf")
                ts.relations.append(TermRelation(DESCRIPTOR_OF, target, provenance=block))
            elif head in CONCEPT_RELATION_KINDS:
                raise MappingError(f"{head} is not allowed at {LEVEL_TERM}")
            else:
                ts.features.append(_feature_from_brack(ch))
        else:
            if ch.type_attr != LEVEL_COMPONENT:
                raise MappingError(f"struct {ch.type_attr!r} not allowed inside {LEVEL_TERM}")
            ts.components.append(_component_from_node(ch))
    return ts


def _ls_from_node(node: GmtNode) -> LangSection:
    language: str | None = None
    ls = LangSection(language="")
    for ch in node.children:
        if ch.kind == FEAT:
            if ch.type_attr == CAT_LANG:
                if language is not None:
                    raise MappingError("duplicate languageIdentifier in a languageSection")
                language = _plain_text(ch, CAT_LANG)
            else:
                value, annotations = _feat_payload(ch)
                ls.features.append(Feature(ch.type_attr or "", value, annotations=annotations))
        elif ch.kind == BRACK:
            head = ch.children[0].type_attr
            if head == CAT_INSTITUTION or head in _RELATION_HEADS:
                raise MappingError(f"{head} bracket is not allowed at {LEVEL_LANG}")
            ls.features.append(_feature_from_brack(ch))
        else:
            if ch.type_attr != LEVEL_TERM:
                raise MappingError(f"struct {ch.type_attr!r} not allowed inside {LEVEL_LANG}")
            ls.term_sections.append(_ts_from_node(ch))
    if language is None:
        raise MappingError("languageSection without a languageIdentifier")
    ls.language = language
    return ls


def _entry_from_node(node: GmtNode) -> TermEntry:
    entry = TermEntry(id=node.id_attr)
    for ch in node.children:
        if ch.kind == FEAT:
            value, annotations = _feat_payload(ch)
            entry.features.append(Feature(ch.type_attr or "", value, annotations=annotations))
        elif ch.kind == BRACK:
            head = ch.children[0].type_attr
            if head in CONCEPT_RELATION_KINDS:
                target, typology, block = _relation_parts(ch, LEVEL_ENTRY)
                entry.concept_relations.append(
                    ConceptRelation(head, target, typology=typology or "", provenance=block))
            elif head == DESCRIPTOR_OF:
                raise MappingError(f"{DESCRIPTOR_OF} is not allowed at {LEVEL_ENTRY}")
            elif head == CAT_INSTITUTION:
                raise MappingError(f"a bare provenance block is not allowed at {LEVEL_ENTRY}")
            else:
                entry.features.append(_feature_from_brack(ch))
        else:
            if ch.type_attr != LEVEL_LANG:
                raise MappingError(f"struct {ch.type_attr!r} not allowed inside {LEVEL_ENTRY}")
            entry.lang_sections.append(_ls_from_node(ch))
    return entry


def to_model(tree: GmtNode) -> TermCollection:
    """Map a parsed collection tree onto the model.

    Loading is liberal: structural problems the model can represent (bad
    language codes, empty terms) are left for check_structure to report.
    Shapes the model cannot hold at all raise MappingError.
    """
    if tree.kind != STRUCT or tree.type_attr != LEVEL_COLLECTION:
        raise MappingError("tree root is not a terminologicalDataCollection")
    info = GlobalInfo()
    prefix = "TC"
    entry_nodes: list[GmtNode] = []
    seen_global = False
    for ch in tree.children:
        if ch.kind != STRUCT:
            raise MappingError(f"{ch.kind} not allowed under the collection root")
        if ch.type_attr == LEVEL_GLOBAL:
            if seen_global:
                raise MappingError("duplicate globalInformation")
            if entry_nodes:
                raise MappingError("globalInformation must precede the entries")
            seen_global = True
            info, prefix = _global_from_node(ch)
        elif ch.type_attr == LEVEL_ENTRY:
            entry_nodes.append(ch)
        else:
            raise MappingError(f"struct {ch.type_attr!r} not allowed under the collection root")
    collection = new_collection(info, prefix=prefix)
    for node in entry_nodes:
        register_entry(collection, _entry_from_node(node))
    return freeze(collection)


def _features_nodes(features: list[Feature]) -> tuple[list[GmtNode], list[GmtNode]]:
    plain = [_feature_node(f) for f in features if f.source is None and not f.provenance]
    bracketed = [_feature_node(f) for f in features if f.source is not None or f.provenance]
    return plain, bracketed


def _ts_node(ts: TermSection) -> GmtNode:
    children = [GmtNode(FEAT, type_attr=CAT_TERM, children=[text_span(ts.term)] if ts.term else [])]
    plain, bracketed = _features_nodes(ts.features)
    children.extend(plain)
    children.extend(_block_node(b) for b in ts.provenance)
    children.extend(bracketed)
    for rel in ts.relations:
        if rel.kind != DESCRIPTOR_OF:
            raise InvariantViolation(ts.id or ts.term, "bad-relation-kind",
                                     f"term relation kind {rel.kind!r} is not serializable")
        members = [feat(rel.kind, rel.target)]
        if rel.provenance is not None:
            members.append(_block_node(rel.provenance))
        children.append(brack(members))
    for comp in ts.components:
        comp_children = [GmtNode(FEAT, type_attr=CAT_TERM,
                                 children=[text_span(comp.text)] if comp.text else [])]
        comp_plain, comp_bracketed = _features_nodes(comp.features)
        comp_children.extend(comp_plain)
        comp_children.extend(comp_bracketed)
        children.append(struct(LEVEL_COMPONENT, children=comp_children))
    return struct(LEVEL_TERM, id_=ts.id, children=children)


def _ls_node(ls: LangSection) -> GmtNode:
    for f in ls.features:
        if f.category == CAT_LANG:
            raise InvariantViolation(ls.language, "reserved-category",
                                     "languageIdentifier belongs in LangSection.language")
    children = [feat(CAT_LANG, ls.language)]
    plain, bracketed = _features_nodes(ls.features)
    children.extend(plain)
    children.extend(bracketed)
    children.extend(_ts_node(ts) for ts in ls.term_sections)
    return struct(LEVEL_LANG, children=children)


def _entry_node(entry: TermEntry) -> GmtNode:
    plain, bracketed = _features_nodes(entry.features)
    children = list(plain)
    children.extend(bracketed)
    for rel in entry.concept_relations:
        if rel.kind not in CONCEPT_RELATION_KINDS:
            raise InvariantViolation(entry.id or "?", "bad-relation-kind",
                                     f"concept relation kind {rel.kind!r} is not serializable")
        members = [feat(rel.kind, rel.target)]
        if rel.typology:
            members.append(feat(CAT_TYPOLOGY, rel.typology))
        if rel.provenance is not None:
            members.append(_block_node(rel.provenance))
        children.append(brack(members))
    children.extend(_ls_node(ls) for ls in entry.lang_sections)
    return struct(LEVEL_ENTRY, id_=entry.id, children=children)


def from_model(collection: TermCollection) -> GmtNode:
    """Render the model as a canonical-ordered GMT tree."""
    info = collection.global_info
    children: list[GmtNode] = []
    if info != GlobalInfo() or collection.prefix != "TC":
        global_children: list[GmtNode] = []
        if info.title:
            global_children.append(feat(CAT_TITLE, info.title))
        if info.dcs_ref:
            global_children.append(feat(CAT_DCS_REF, info.dcs_ref))
        if collection.prefix != "TC":
            global_children.append(feat(CAT_PREFIX, collection.prefix))
        global_children.extend(_resource_node(r) for r in info.resources)
        children.append(struct(LEVEL_GLOBAL, children=global_children))
    children.extend(_entry_node(e) for e in collection.entries)
    return struct(LEVEL_COLLECTION, children=children)
