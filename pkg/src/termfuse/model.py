"""Concept-oriented termbase model.

The structures follow the ISO 16642 meta-model: a terminological data
collection holds global information plus terminological entries, each entry
describes exactly one concept through language sections, term sections and
term component sections.  Descriptive information attaches at any level as
features, and every element that came from somewhere carries provenance
blocks naming the originating institution and database.

Collections are built through add_entry, which registers identifiers and
enforces the local shape rules, and are meant to be frozen once complete.
check_structure re-verifies the full rule set and reports violations without
raising.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date
from typing import TYPE_CHECKING, Iterator

from termfuse.errors import DuplicateId, InvariantViolation

if TYPE_CHECKING:
    from termfuse.gmtxml import Pointer

# Meta-model level names, also the struct vocabulary of the XML form.
LEVEL_COLLECTION = "terminologicalDataCollection"
LEVEL_GLOBAL = "globalInformation"
LEVEL_ENTRY = "terminologicalEntry"
LEVEL_LANG = "languageSection"
LEVEL_TERM = "termSection"
LEVEL_COMPONENT = "termComponentSection"

META_LEVELS = (
    LEVEL_COLLECTION,
    LEVEL_GLOBAL,
    LEVEL_ENTRY,
    LEVEL_LANG,
    LEVEL_TERM,
    LEVEL_COMPONENT,
)

# Relation kinds.
BROADER_CONCEPT = "broaderConcept"
RELATED_CONCEPT = "relatedConcept"
DESCRIPTOR_OF = "descriptorOf"

CONCEPT_RELATION_KINDS = (BROADER_CONCEPT, RELATED_CONCEPT)

LANG_RE = re.compile(r"^[a-z]{2}$")


@dataclass(frozen=True)
class Annotation:
    """A typed span over a feature value, as [start, end) offsets."""

    type: str
    start: int
    end: int


@dataclass(frozen=True)
class ProvenanceBlock:
    """Origin of one element: institution, database, optional trail."""

    institution: str
    database: str = ""
    bibliographic_source: str | None = None
    last_modified: date | None = None
    native_pointer: "Pointer | None" = None

    def key(self) -> tuple[str, str]:
        return (self.institution, self.database)


@dataclass
class Feature:
    """One data category / value pair attached to a model node.

    source is free bibliographic text; provenance ties the feature to
    registered resources so per-source export can filter it.
    """

    category: str
    value: str
    source: str | None = None
    annotations: list[Annotation] = field(default_factory=list)
    provenance: list[ProvenanceBlock] = field(default_factory=list)


@dataclass(frozen=True)
class ResourceDescriptor:
    """Registry row for one contributing resource."""

    institution: str
    database: str = ""
    citation: str | None = None
    native_file: str | None = None

    def key(self) -> tuple[str, str]:
        return (self.institution, self.database)


@dataclass
class GlobalInfo:
    title: str = ""
    dcs_ref: str = ""
    resources: list[ResourceDescriptor] = field(default_factory=list)


@dataclass
class TermRelation:
    """Term-level link, e.g. a non-preferred term pointing at its descriptor."""

    kind: str
    target: str
    provenance: ProvenanceBlock | None = None


@dataclass
class ConceptRelation:
    """Entry-level link into another concept, tagged with its typology."""

    kind: str
    target: str
    typology: str = ""
    provenance: ProvenanceBlock | None = None


@dataclass
class TermComponentSection:
    text: str
    features: list[Feature] = field(default_factory=list)


@dataclass
class TermSection:
    term: str
    id: str | None = None
    features: list[Feature] = field(default_factory=list)
    provenance: list[ProvenanceBlock] = field(default_factory=list)
    relations: list[TermRelation] = field(default_factory=list)
    components: list[TermComponentSection] = field(default_factory=list)


@dataclass
class LangSection:
    language: str
    features: list[Feature] = field(default_factory=list)
    term_sections: list[TermSection] = field(default_factory=list)


@dataclass
class TermEntry:
    id: str | None = None
    features: list[Feature] = field(default_factory=list)
    concept_relations: list[ConceptRelation] = field(default_factory=list)
    lang_sections: list[LangSection] = field(default_factory=list)


@dataclass
class TermCollection:
    """A whole termbase plus an identifier index over its nodes.

    id_index maps every registered identifier to a path: ("entry", i) or
    ("section", i, j, k).  It is derived state, rebuilt by add_entry, and
    excluded from equality.
    """

    global_info: GlobalInfo
    prefix: str = "TC"
    entries: list[TermEntry] = field(default_factory=list)
    id_index: dict[str, tuple] = field(default_factory=dict, compare=False, repr=False)
    frozen: bool = field(default=False, compare=False, repr=False)

    def resolve(self, ident: str):
        """Return the entry or term section registered under ident."""
        path = self.id_index.get(ident)
        if path is None:
            return None
        if path[0] == "entry":
            return self.entries[path[1]]
        _, i, j, k = path
        return self.entries[i].lang_sections[j].term_sections[k]

    def entry_of(self, ident: str) -> TermEntry | None:
        """Return the entry owning ident, whether entry or section id."""
        path = self.id_index.get(ident)
        if path is None:
            return None
        return self.entries[path[1]]


def new_collection(global_info: GlobalInfo | None = None, prefix: str = "TC") -> TermCollection:
    return TermCollection(global_info=global_info or GlobalInfo(), prefix=prefix)


def freeze(collection: TermCollection) -> TermCollection:
    collection.frozen = True
    return collection


def _next_entry_id(collection: TermCollection) -> str:
    n = len(collection.entries) + 1
    while f"{collection.prefix}.{n}" in collection.id_index:
        n += 1
    return f"{collection.prefix}.{n}"


def register_entry(collection: TermCollection, entry: TermEntry) -> str:
    """Assign the entry id if missing and index every identifier.

    No invariant gate: loaders use this so that check_structure can report
    on malformed data instead of dying halfway through.  Raises DuplicateId
    on an identifier clash and leaves the collection untouched in that case.
    """
    if collection.frozen:
        raise InvariantViolation("collection", "frozen", "collection is frozen")
    eid = entry.id or _next_entry_id(collection)
    claimed: list[tuple[str, tuple]] = [(eid, ("entry", len(collection.entries)))]
    i = len(collection.entries)
    for j, ls in enumerate(entry.lang_sections):
        for k, ts in enumerate(ls.term_sections):
            if ts.id:
                claimed.append((ts.id, ("section", i, j, k)))
    seen: set[str] = set()
    for ident, _ in claimed:
        if ident in collection.id_index or ident in seen:
            raise DuplicateId(f"identifier {ident!r} is already registered")
        seen.add(ident)
    entry.id = eid
    for ident, path in claimed:
        collection.id_index[ident] = path
    collection.entries.append(entry)
    return eid


def add_entry(collection: TermCollection, entry: TermEntry) -> str:
    """Validate entry, assign its identifier if missing, and register it.

    Raises DuplicateId when any identifier is already taken and
    InvariantViolation on the first local shape problem.  On error the
    collection is left untouched.
    """
    if collection.frozen:
        raise InvariantViolation("collection", "frozen", "collection is frozen")
    eid = entry.id or _next_entry_id(collection)
    problems = _entry_violations(entry, eid)
    if problems:
        raise problems[0]
    return register_entry(collection, entry)


# --- traversal helpers --------------------------------------------------------

def _ts_label(eid: str, ls: LangSection, k: int, ts: TermSection) -> str:
    return ts.id or f"{eid}/{ls.language}/{k + 1}"


def walk_features(collection: TermCollection) -> Iterator[tuple[str, str, Feature]]:
    """Yield (node label, level, feature) over the whole collection."""
    for entry in collection.entries:
        yield from _entry_features(entry, entry.id or "?")


def walk_blocks(collection: TermCollection) -> Iterator[tuple[str, str, ProvenanceBlock]]:
    """Yield (node label, level, block) for every provenance block."""
    for entry in collection.entries:
        eid = entry.id or "?"
        for f in entry.features:
            for b in f.provenance:
                yield eid, LEVEL_ENTRY, b
        for rel in entry.concept_relations:
            if rel.provenance:
                yield eid, LEVEL_ENTRY, rel.provenance
        for ls in entry.lang_sections:
            lab = f"{eid}/{ls.language}"
            for f in ls.features:
                for b in f.provenance:
                    yield lab, LEVEL_LANG, b
            for k, ts in enumerate(ls.term_sections):
                label = _ts_label(eid, ls, k, ts)
                for b in ts.provenance:
                    yield label, LEVEL_TERM, b
                for f in ts.features:
                    for b in f.provenance:
                        yield label, LEVEL_TERM, b
                for rel in ts.relations:
                    if rel.provenance:
                        yield label, LEVEL_TERM, rel.provenance


# --- structural validation ------------------------------------------------------


def _annotation_problems(owner: str, f: Feature) -> list[InvariantViolation]:
    out = []
    spans = sorted(f.annotations, key=lambda a: (a.start, a.end))
    limit = len(f.value)
    prev_end = None
    for a in spans:
        if a.start < 0 or a.end < a.start or a.end > limit:
            out.append(InvariantViolation(
                owner, "bad-annotation",
                f"annotation {a.type!r} spans [{a.start}, {a.end}) outside value of length {limit}"))
            continue
        if prev_end is not None and a.start < prev_end:
            out.append(InvariantViolation(
                owner, "overlapping-annotation",
                f"annotation {a.type!r} overlaps the previous span"))
        prev_end = a.end
    return out


def _entry_violations(entry: TermEntry, eid: str) -> list[InvariantViolation]:
    """Shape rules local to one entry, usable before registration."""
    out: list[InvariantViolation] = []
    if not entry.lang_sections:
        out.append(InvariantViolation(eid, "missing-language-section", "entry has no language sections"))
    seen_langs: set[str] = set()
    for ls in entry.lang_sections:
        if not LANG_RE.match(ls.language):
            out.append(InvariantViolation(
                eid, "bad-language-code",
                f"language code {ls.language!r} is not a lowercase two-letter code"))
        if ls.language in seen_langs:
            out.append(InvariantViolation(
                eid, "duplicate-language-section",
                f"duplicate language section {ls.language!r}"))
        seen_langs.add(ls.language)
        if not ls.term_sections:
            out.append(InvariantViolation(
                f"{eid}/{ls.language}", "empty-language-section", "language section has no term sections"))
        for k, ts in enumerate(ls.term_sections):
            label = _ts_label(eid, ls, k, ts)
            if not ts.term.strip():
                out.append(InvariantViolation(label, "empty-term", "term section has an empty term"))
            seen_blocks: set[tuple[str, str]] = set()
            for b in ts.provenance:
                if b.key() in seen_blocks:
                    out.append(InvariantViolation(
                        label, "duplicate-provenance",
                        f"duplicate provenance block for {b.key()!r}"))
                seen_blocks.add(b.key())
    for owner, _, f in _entry_features(entry, eid):
        out.extend(_annotation_problems(owner, f))
    return out


def _entry_features(entry: TermEntry, eid: str) -> Iterator[tuple[str, str, Feature]]:
    for f in entry.features:
        yield eid, LEVEL_ENTRY, f
    for ls in entry.lang_sections:
        for f in ls.features:
            yield f"{eid}/{ls.language}", LEVEL_LANG, f
        for k, ts in enumerate(ls.term_sections):
            label = _ts_label(eid, ls, k, ts)
            for f in ts.features:
                yield label, LEVEL_TERM, f
            for ci, comp in enumerate(ts.components):
                for f in comp.features:
                    yield f"{label}/c{ci + 1}", LEVEL_COMPONENT, f


def check_structure(collection: TermCollection) -> list[InvariantViolation]:
    """Verify the meta-model rules; report, never raise, never mutate."""
    out: list[InvariantViolation] = []
    seen_ids: set[str] = set()
    for entry in collection.entries:
        eid = entry.id or ""
        if not eid:
            out.append(InvariantViolation("?", "missing-id", "entry has no identifier"))
        elif eid in seen_ids:
            out.append(InvariantViolation(eid, "duplicate-id", f"identifier {eid!r} used twice"))
        else:
            seen_ids.add(eid)
        for ls in entry.lang_sections:
            for ts in ls.term_sections:
                if ts.id:
                    if ts.id in seen_ids:
                        out.append(InvariantViolation(
                            ts.id, "duplicate-id", f"identifier {ts.id!r} used twice"))
                    else:
                        seen_ids.add(ts.id)
        out.extend(_entry_violations(entry, eid or "?"))

    registry = {r.key() for r in collection.global_info.resources}
    dup_check: set[tuple[str, str]] = set()
    for r in collection.global_info.resources:
        if r.key() in dup_check:
            out.append(InvariantViolation(
                "collection", "duplicate-resource",
                f"resource {r.key()!r} registered twice"))
        dup_check.add(r.key())
        if not r.institution:
            out.append(InvariantViolation("collection", "empty-institution", "resource has an empty institution"))

    for owner, _, block in walk_blocks(collection):
        if not block.institution:
            out.append(InvariantViolation(owner, "empty-institution", "provenance block has an empty institution"))
        elif block.key() not in registry:
            out.append(InvariantViolation(
                owner, "unregistered-source",
                f"provenance {block.key()!r} is not in the resource registry"))

    out.extend(_relation_problems(collection))
    return out


def _relation_problems(collection: TermCollection) -> list[InvariantViolation]:
    out: list[InvariantViolation] = []
    # term-level descriptor links
    for entry in collection.entries:
        eid = entry.id or "?"
        for ls in entry.lang_sections:
            for k, ts in enumerate(ls.term_sections):
                label = _ts_label(eid, ls, k, ts)
                for rel in ts.relations:
                    path = collection.id_index.get(rel.target)
                    if path is None:
                        out.append(InvariantViolation(
                            label, "unresolved-target",
                            f"{rel.kind} target {rel.target!r} does not resolve"))
                    elif path[0] != "section":
                        out.append(InvariantViolation(
                            label, "bad-target-level",
                            f"{rel.kind} target {rel.target!r} is not a term section"))
                    elif collection.entries[path[1]] is entry:
                        out.append(InvariantViolation(
                            label, "self-descriptor",
                            f"{rel.kind} target {rel.target!r} stays inside its own entry"))
    # entry-level concept links
    by_typology: dict[str, dict[str, list[str]]] = {}
    for entry in collection.entries:
        eid = entry.id or "?"
        for rel in entry.concept_relations:
            path = collection.id_index.get(rel.target)
            if path is None:
                out.append(InvariantViolation(
                    eid, "unresolved-target",
                    f"{rel.kind} target {rel.target!r} does not resolve"))
                continue
            if path[0] != "entry":
                out.append(InvariantViolation(
                    eid, "bad-target-level",
                    f"{rel.kind} target {rel.target!r} is not an entry"))
                continue
            if rel.kind == BROADER_CONCEPT:
                by_typology.setdefault(rel.typology, {}).setdefault(eid, []).append(rel.target)
    for typology in sorted(by_typology):
        if _has_cycle(by_typology[typology]):
            out.append(InvariantViolation(
                "collection", "broader-cycle", f"cycle in typology {typology or '(none)'}"))
    return out


def _has_cycle(adjacency: dict[str, list[str]]) -> bool:
    WHITE, GREY, BLACK = 0, 1, 2
    color: dict[str, int] = {}
    for start in adjacency:
        if color.get(start, WHITE) != WHITE:
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        color[start] = GREY
        while stack:
            node, i = stack[-1]
            targets = adjacency.get(node, ())
            if i < len(targets):
                stack[-1] = (node, i + 1)
                nxt = targets[i]
                state = color.get(nxt, WHITE)
                if state == GREY:
                    return True
                if state == WHITE:
                    color[nxt] = GREY
                    stack.append((nxt, 0))
            else:
                color[node] = BLACK
                stack.pop()
    return False
