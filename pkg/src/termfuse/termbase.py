"""Services over a finished termbase: lookup, query expansion, per-source
export and native-file drift detection.

Lookup and expansion use the same normalization options as fusion, passed
as a parameter so the caller decides how forgiving matching is.  Export
carves out everything attributable to one institution (optionally one
database), keeping identifiers stable so repeated exports are idempotent.
diff_native compares two snapshots of a native file entry by entry and
returns pointers to what changed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date

from termfuse.errors import MappingError, NoTermsInLanguages, NotFound, UnknownSource
from termfuse.fusion import DEFAULT_NORMALIZATION, NormalizationOptions, normalize_term
from termfuse.gmtxml import STRUCT, GmtNode, Pointer, format_pointer, parse_gmt
from termfuse.model import (
    LEVEL_ENTRY,
    Feature,
    GlobalInfo,
    LangSection,
    ProvenanceBlock,
    TermCollection,
    TermEntry,
    TermSection,
    freeze,
    new_collection,
    register_entry,
)


def lookup(collection: TermCollection, term: str, lang: str | None = None,
           options: NormalizationOptions = DEFAULT_NORMALIZATION) -> list[str]:
    """Entry ids whose sections match term under normalization, in order."""
    key = normalize_term(term, options)
    if not key:
        return []
    out: list[str] = []
    seen: set[str] = set()
    for entry in collection.entries:
        for ls in entry.lang_sections:
            if lang is not None and ls.language != lang:
                continue
            for ts in ls.term_sections:
                if normalize_term(ts.term, options) == key:
                    eid = entry.id or ""
                    if eid not in seen:
                        seen.add(eid)
                        out.append(eid)
    return out


@dataclass(frozen=True)
class QueryExpansion:
    entry: str
    clauses: tuple[tuple[str, tuple[str, ...]], ...]
    rendered: str


def expand_query(collection: TermCollection, entry_id: str,
                 languages: list[str]) -> QueryExpansion:
    """OR-join every term of the entry in the requested languages.

    Languages keep their requested order; languages the entry does not have
    are skipped.  If nothing remains, NoTermsInLanguages is raised.
    """
    path = collection.id_index.get(entry_id)
    if path is None or path[0] != "entry":
        raise NotFound(f"no entry with id {entry_id!r}")
    entry = collection.entries[path[1]]
    clauses: list[tuple[str, tuple[str, ...]]] = []
    for lang in languages:
        terms: list[str] = []
        for ls in entry.lang_sections:
            if ls.language != lang:
                continue
            for ts in ls.term_sections:
                if ts.term and ts.term not in terms:
                    terms.append(ts.term)
        if terms:
            clauses.append((lang, tuple(terms)))
    if not clauses:
        raise NoTermsInLanguages(
            f"entry {entry_id!r} has no terms in languages {', '.join(languages) or '(none)'}")
    rendered = " OR ".join(
        "(" + " OR ".join('"' + t.replace('"', '\\"') + '"' for t in terms) + ")"
        for _, terms in clauses)
    return QueryExpansion(entry=entry_id, clauses=tuple(clauses), rendered=rendered)


# --- per-source export ----------------------------------------------------------

def export_by_source(collection: TermCollection, institution: str,
                     database: str | None = None) -> TermCollection:
    """The sub-termbase attributable to one source.

    Keeps term sections carrying a matching provenance block, with their
    unprovenanced marker features; features and relations with provenance
    survive only when a block matches.  Relations additionally need their
    target to survive.  Identifiers are preserved.
    """
    matching = [r for r in collection.global_info.resources
                if r.institution == institution
                and (database is None or r.database == database)]
    if not matching:
        wanted = institution if database is None else f"{institution}|{database}"
        raise UnknownSource(f"{wanted!r} is not in the resource registry")

    def block_ok(b: ProvenanceBlock) -> bool:
        return b.institution == institution and (database is None or b.database == database)

    def keep_feature(f: Feature) -> Feature | None:
        if not f.provenance:
            return replace(f, annotations=list(f.annotations), provenance=[])
        kept = [b for b in f.provenance if block_ok(b)]
        if not kept:
            return None
        return replace(f, annotations=list(f.annotations), provenance=kept)

    def filter_features(features: list[Feature]) -> list[Feature]:
        return [kf for kf in (keep_feature(f) for f in features) if kf is not None]

    # pass 1: skeleton without relations
    skeleton: list[tuple[TermEntry, TermEntry]] = []
    section_pairs: list[tuple[TermSection, TermSection]] = []
    surviving_ids: set[str] = set()
    for entry in collection.entries:
        new_entry = TermEntry(id=entry.id, features=filter_features(entry.features))
        entry_pairs: list[tuple[TermSection, TermSection]] = []
        for ls in entry.lang_sections:
            new_ls = LangSection(language=ls.language, features=filter_features(ls.features))
            for ts in ls.term_sections:
                kept_blocks = [b for b in ts.provenance if block_ok(b)]
                if not kept_blocks:
                    continue
                new_ts = TermSection(
                    term=ts.term, id=ts.id,
                    features=filter_features(ts.features),
                    provenance=kept_blocks,
                    components=[replace(comp, features=filter_features(comp.features))
                                for comp in ts.components])
                new_ls.term_sections.append(new_ts)
                entry_pairs.append((ts, new_ts))
                if ts.id:
                    surviving_ids.add(ts.id)
            if new_ls.term_sections:
                new_entry.lang_sections.append(new_ls)
        if new_entry.lang_sections:
            skeleton.append((entry, new_entry))
            section_pairs.extend(entry_pairs)
            surviving_ids.add(entry.id or "")

    # pass 2: relations whose provenance matches and whose target survived
    for entry, new_entry in skeleton:
        for rel in entry.concept_relations:
            if rel.provenance is not None and not block_ok(rel.provenance):
                continue
            if rel.target in surviving_ids:
                new_entry.concept_relations.append(replace(rel))
    for old_ts, new_ts in section_pairs:
        for rel in old_ts.relations:
            if rel.provenance is not None and not block_ok(rel.provenance):
                continue
            if rel.target in surviving_ids:
                new_ts.relations.append(replace(rel))

    info = collection.global_info
    result = new_collection(
        GlobalInfo(title=info.title, dcs_ref=info.dcs_ref, resources=matching),
        prefix=collection.prefix)
    for _, new_entry in skeleton:
        register_entry(result, new_entry)
    return freeze(result)


# --- native snapshot diffing -------------------------------------------------------

@dataclass(frozen=True)
class UpdateSet:
    changed: tuple[tuple[Pointer, str], ...]
    snapshot_date: date


def diff_native(old_doc: "bytes | str", new_doc: "bytes | str") -> UpdateSet:
    """Entry-level differences between two snapshots of a native file.

    Entries are aligned by xml:id; an entry without one cannot be tracked
    and raises MappingError.  Kinds are added, modified and removed.
    """
    old_tree = parse_gmt(old_doc)
    new_tree = parse_gmt(new_doc)

    def entry_map(tree: GmtNode, which: str) -> dict[str, GmtNode]:
        out: dict[str, GmtNode] = {}
        for ch in tree.children:
            if ch.kind == STRUCT and ch.type_attr == LEVEL_ENTRY:
                if not ch.id_attr:
                    raise MappingError(f"{which} snapshot has an entry without xml:id")
                out[ch.id_attr] = ch
        return out

    old_entries = entry_map(old_tree, "old")
    new_entries = entry_map(new_tree, "new")

    changed: list[tuple[Pointer, str]] = []
    for eid, node in new_entries.items():
        if eid not in old_entries:
            changed.append((Pointer(fragment=eid), "added"))
        elif old_entries[eid] != node:
            changed.append((Pointer(fragment=eid), "modified"))
    for eid in old_entries:
        if eid not in new_entries:
            changed.append((Pointer(fragment=eid), "removed"))
    return UpdateSet(changed=tuple(changed), snapshot_date=date.today())


def render_update_set(update: UpdateSet) -> str:
    lines = [f"{kind} {format_pointer(p)}" for p, kind in update.changed]
    return "\n".join(lines) + "\n" if lines else ""
