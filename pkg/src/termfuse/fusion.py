"""Fuse several concept-oriented collections into one termbase.

Entries that share a term surface are candidates for the same concept.
Surfaces are compared after normalization (case folding, diacritic and
punctuation stripping, optional token sorting).  Candidate pairs are closed
transitively; each resulting group is merged into the entry with the lowest
identifier, term sections folding together whenever their normalized keys
coincide, with provenance concatenated and exact duplicates collapsed.
Definitions are never deduplicated: near-identical wordings from different
sources are kept side by side.

fuse() leaves concept relation targets rewritten onto the merged entry ids
but does not judge them; lift_relations() then deletes self-loops and breaks
broader-concept cycles per typology, recording every dropped edge in the
report.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field, replace

from termfuse.dcs import CAT_ADMIN_STATUS, CAT_DEFINITION, CAT_VARIANT, VAL_PREFERRED
from termfuse.errors import MappingError, RegistryClash
from termfuse.model import (
    BROADER_CONCEPT,
    LEVEL_TERM,
    ConceptRelation,
    Feature,
    GlobalInfo,
    LangSection,
    TermCollection,
    TermEntry,
    TermRelation,
    TermSection,
    freeze,
    new_collection,
    register_entry,
    walk_blocks,
)

PREFERRED_ONLY = "preferredOnly"
ALL_TERMS = "allTerms"


@dataclass(frozen=True)
class NormalizationOptions:
    case_fold: bool = True
    strip_diacritics: bool = True
    strip_punctuation: bool = True
    token_sort: bool = False


DEFAULT_NORMALIZATION = NormalizationOptions()


def normalize_term(term: str, options: NormalizationOptions = DEFAULT_NORMALIZATION) -> str:
    """Matching key for a term surface; idempotent for fixed options."""
    s = unicodedata.normalize("NFC", term)
    if options.case_fold:
        s = s.casefold()
    if options.strip_diacritics:
        decomposed = unicodedata.normalize("NFD", s)
        s = unicodedata.normalize(
            "NFC", "".join(ch for ch in decomposed if not unicodedata.combining(ch)))
    if options.strip_punctuation:
        s = "".join(" " if unicodedata.category(ch).startswith("P") else ch for ch in s)
    s = " ".join(s.split())
    if options.token_sort:
        s = " ".join(sorted(s.split()))
    return s


@dataclass(frozen=True)
class FusionPolicy:
    match_scope: str = PREFERRED_ONLY
    normalization: NormalizationOptions = DEFAULT_NORMALIZATION
    tie_break: str = "lowestId"


@dataclass(frozen=True)
class MatchCandidate:
    a_entry: str
    b_entry: str
    term: str
    language: str


@dataclass(frozen=True)
class MergeRecord:
    host: str
    absorbed: str
    term: str
    language: str


@dataclass(frozen=True)
class ConflictNote:
    kind: str
    message: str
    entries: tuple[str, ...] = ()


@dataclass(frozen=True)
class DroppedEdge:
    kind: str
    source: str
    target: str
    typology: str
    reason: str


@dataclass(frozen=True)
class ResourceStats:
    institution: str
    database: str
    entries: int
    term_sections: int
    provenance_blocks: int


@dataclass
class FusionReport:
    merges: list[MergeRecord] = field(default_factory=list)
    conflicts: list[ConflictNote] = field(default_factory=list)
    dropped_edges: list[DroppedEdge] = field(default_factory=list)
    aliases: list[tuple[str, str]] = field(default_factory=list)
    stats: list[ResourceStats] = field(default_factory=list)
    totals: ResourceStats | None = None

    def render(self) -> str:
        lines = []
        for m in self.merges:
            lines.append(f'MERGE {m.host} {m.absorbed} via "{m.term}"@{m.language}')
        for c in self.conflicts:
            suffix = f" [entries: {', '.join(c.entries)}]" if c.entries else ""
            lines.append(f"CONFLICT {c.kind}: {c.message}{suffix}")
        for e in self.dropped_edges:
            lines.append(f"DROPPED-EDGE {e.kind} {e.source} -> {e.target} "
                         f"typology={e.typology} reason={e.reason}")
        for old, new in self.aliases:
            lines.append(f"ALIAS {old} -> {new}")
        for s in self.stats:
            lines.append(f"STATS {s.institution}|{s.database} entries={s.entries} "
                         f"termSections={s.term_sections} provenance={s.provenance_blocks}")
        t = self.totals
        if t is not None:
            lines.append(f"STATS TOTAL entries={t.entries} "
                         f"termSections={t.term_sections} provenance={t.provenance_blocks}")
        return "\n".join(lines) + "\n"


def _id_sort_key(ident: str):
    m = re.match(r"^(.*?)(\d+)$", ident)
    if m:
        return (m.group(1), int(m.group(2)), ident)
    return (ident, -1, ident)


def _is_preferred(ts: TermSection) -> bool:
    marks = [f.value for f in ts.features if f.category == CAT_ADMIN_STATUS]
    return not marks or VAL_PREFERRED in marks


def _entry_surfaces(entry: TermEntry, policy: FusionPolicy, scoped: bool):
    """Yield (language, key, surface) per term section, in document order."""
    for ls in entry.lang_sections:
        for ts in ls.term_sections:
            if scoped and policy.match_scope == PREFERRED_ONLY and not _is_preferred(ts):
                continue
            key = normalize_term(ts.term, policy.normalization)
            if key:
                yield ls.language, key, ts.term


def _check_scope(policy: FusionPolicy) -> None:
    if policy.match_scope not in (PREFERRED_ONLY, ALL_TERMS):
        raise ValueError(f"unknown match_scope {policy.match_scope!r}")
    if policy.tie_break != "lowestId":
        raise ValueError(f"unknown tie_break {policy.tie_break!r}")


def match_entries(a: TermCollection, b: TermCollection,
                  policy: FusionPolicy = FusionPolicy()) -> list[MatchCandidate]:
    """Witnessed candidate pairs between two collections."""
    _check_scope(policy)
    index: dict[tuple[str, str], tuple[str, str]] = {}
    for entry in a.entries:
        for lang, key, surface in _entry_surfaces(entry, policy, scoped=True):
            index.setdefault((lang, key), (entry.id or "", surface))
    out: list[MatchCandidate] = []
    seen: set[tuple[str, str]] = set()
    for entry in b.entries:
        for lang, key, _ in _entry_surfaces(entry, policy, scoped=True):
            hit = index.get((lang, key))
            if hit is None:
                continue
            pair = (hit[0], entry.id or "")
            if pair not in seen:
                seen.add(pair)
                out.append(MatchCandidate(pair[0], pair[1], hit[1], lang))
    return out


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[ry] = rx


def _copy_feature(f: Feature) -> Feature:
    return replace(f, annotations=list(f.annotations), provenance=list(f.provenance))


def _feature_key(f: Feature):
    return (f.category, f.value, f.source, tuple(f.annotations), tuple(f.provenance))


def fuse(collections: list[TermCollection], policy: FusionPolicy = FusionPolicy(),
         prefix: str = "TC") -> tuple[TermCollection, FusionReport]:
    """Merge the inputs into one collection; returns it with its report.

    Inputs are expected to pass check_structure.  The output may still carry
    broader-concept self-loops or cycles created by the merging itself;
    lift_relations removes those.
    """
    _check_scope(policy)
    report = FusionReport()

    resources = []
    taken: dict[tuple[str, str], int] = {}
    for ci, c in enumerate(collections):
        for r in c.global_info.resources:
            if r.key() in taken:
                raise RegistryClash(
                    f"resource {r.key()!r} is registered by inputs {taken[r.key()]} and {ci}")
            taken[r.key()] = ci
            resources.append(r)

    nodes = [(ci, ei) for ci, c in enumerate(collections) for ei in range(len(c.entries))]

    def entry_at(node):
        return collections[node[0]].entries[node[1]]

    def old_id(node):
        return entry_at(node).id or ""

    scoped: dict[tuple[str, str], list[tuple[tuple[int, int], str]]] = {}
    everything: dict[tuple[str, str], list[tuple[tuple[int, int], str]]] = {}
    for node in nodes:
        for lang, key, surface in _entry_surfaces(entry_at(node), policy, scoped=True):
            scoped.setdefault((lang, key), []).append((node, surface))
        for lang, key, surface in _entry_surfaces(entry_at(node), policy, scoped=False):
            everything.setdefault((lang, key), []).append((node, surface))

    uf = _UnionFind()
    for node in nodes:
        uf.find(node)
    for bucket in scoped.values():
        first = bucket[0][0]
        for node, _ in bucket[1:]:
            uf.union(first, node)

    partitions: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for node in nodes:
        partitions.setdefault(uf.find(node), []).append(node)

    hosts: dict[tuple[int, int], tuple[int, int]] = {}
    for root, members in partitions.items():
        hosts[root] = min(members, key=lambda n: (_id_sort_key(old_id(n)), n))

    # surfaces that tie entries which nevertheless did not merge
    for (lang, key) in sorted(everything):
        bucket = everything[(lang, key)]
        roots = {uf.find(node) for node, _ in bucket}
        if len(roots) > 1:
            ids = tuple(sorted({old_id(node) for node, _ in bucket}, key=_id_sort_key))
            report.conflicts.append(ConflictNote(
                kind="ambiguous-match",
                message=f'"{bucket[0][1]}"@{lang} is shared by entries that did not merge',
                entries=ids))

    info = GlobalInfo(
        title=" + ".join(t for t in (c.global_info.title for c in collections) if t),
        dcs_ref=next((c.global_info.dcs_ref for c in collections if c.global_info.dcs_ref), ""),
        resources=resources)
    result = new_collection(info, prefix=prefix)

    entry_alias: dict[tuple[int, str], str] = {}
    section_alias: dict[tuple[int, str], str] = {}
    section_entry: dict[str, str] = {}
    # relations pending target rewrite: (new entry, member ci, relation)
    pending_concept: list[tuple[TermEntry, int, ConceptRelation]] = []
    pending_term: list[tuple[str, TermSection, int, TermRelation]] = []

    def member_order(members, host):
        rest = [n for n in members if n != host]
        rest.sort(key=lambda n: (_id_sort_key(old_id(n)), n))
        return [host] + rest

    node_keys: dict[tuple[int, int], list[tuple[tuple[str, str], str]]] = {}
    for bucket_key in sorted(scoped):
        for node, surface in scoped[bucket_key]:
            node_keys.setdefault(node, []).append((bucket_key, surface))

    def witness(member, members):
        others = set(members) - {member}
        for bucket_key, surface in node_keys.get(member, ()):
            if any(node in others for node, _ in scoped[bucket_key]):
                return surface, bucket_key[0]
        return "", ""

    for node in nodes:
        root = uf.find(node)
        if hosts[root] != node:
            continue
        members = member_order(partitions[root], node)
        new_eid = f"{prefix}.{len(result.entries) + 1}"
        for m in members[1:]:
            surface, lang = witness(m, members)
            report.merges.append(MergeRecord(
                host=old_id(node), absorbed=old_id(m), term=surface, language=lang))
        for m in members:
            entry_alias[(m[0], old_id(m))] = new_eid
            report.aliases.append((old_id(m), new_eid))

        merged = TermEntry(id=new_eid)
        feature_keys: set = set()
        lang_map: dict[str, LangSection] = {}
        survivors: dict[tuple[str, str], TermSection] = {}
        ts_serial = 0

        for m in members:
            ci = m[0]
            source_entry = entry_at(m)
            for f in source_entry.features:
                fk = _feature_key(f)
                if f.category != CAT_DEFINITION and fk in feature_keys:
                    continue
                feature_keys.add(fk)
                merged.features.append(_copy_feature(f))
            for rel in source_entry.concept_relations:
                pending_concept.append((merged, ci, rel))
            for ls in source_entry.lang_sections:
                target_ls = lang_map.get(ls.language)
                if target_ls is None:
                    target_ls = LangSection(language=ls.language)
                    lang_map[ls.language] = target_ls
                    merged.lang_sections.append(target_ls)
                for f in ls.features:
                    fk = ("ls", ls.language, _feature_key(f))
                    if f.category != CAT_DEFINITION and fk in feature_keys:
                        continue
                    feature_keys.add(fk)
                    target_ls.features.append(_copy_feature(f))
                for ts in ls.term_sections:
                    key = normalize_term(ts.term, policy.normalization)
                    skey = (ls.language, key) if key else (ls.language, f"\0{id(ts)}")
                    survivor = survivors.get(skey)
                    if survivor is None:
                        ts_serial += 1
                        new_tsid = f"{new_eid}.TS.{ts_serial}"
                        survivor = TermSection(
                            term=ts.term, id=new_tsid,
                            features=[_copy_feature(f) for f in ts.features],
                            provenance=list(ts.provenance),
                            components=[replace(comp, features=[_copy_feature(f) for f in comp.features])
                                        for comp in ts.components])
                        survivors[skey] = survivor
                        target_ls.term_sections.append(survivor)
                        section_entry[new_tsid] = new_eid
                    else:
                        _merge_section(survivor, ts, report, old_id(m))
                    if ts.id:
                        section_alias[(ci, ts.id)] = survivor.id or ""
                        report.aliases.append((ts.id, survivor.id or ""))
                    for rel in ts.relations:
                        pending_term.append((new_eid, survivor, ci, rel))
        register_entry(result, merged)

    for merged, ci, rel in pending_concept:
        new_target = entry_alias.get((ci, rel.target))
        if new_target is None:
            raise MappingError(f"concept relation target {rel.target!r} has no fused entry")
        merged.concept_relations.append(replace(rel, target=new_target))
    for new_eid, survivor, ci, rel in pending_term:
        new_target = section_alias.get((ci, rel.target))
        if new_target is None:
            raise MappingError(f"term relation target {rel.target!r} has no fused section")
        if section_entry.get(new_target) == new_eid:
            report.conflicts.append(ConflictNote(
                kind="descriptor-collapsed",
                message=f"{rel.kind} from {survivor.id} now stays inside {new_eid}",
                entries=(new_eid,)))
            continue
        survivor.relations.append(replace(rel, target=new_target))

    _fill_stats(result, report)
    return freeze(result), report


def _merge_section(survivor: TermSection, ts: TermSection, report: FusionReport,
                   absorbed_id: str) -> None:
    for b in ts.provenance:
        if b in survivor.provenance:
            continue
        clash = next((x for x in survivor.provenance if x.key() == b.key()), None)
        if clash is not None:
            report.conflicts.append(ConflictNote(
                kind="provenance-clash",
                message=f"section {survivor.id} keeps the first provenance block of {b.key()!r}",
                entries=(absorbed_id,)))
            continue
        survivor.provenance.append(b)
    existing = {_feature_key(f) for f in survivor.features}
    for f in ts.features:
        fk = _feature_key(f)
        if f.category != CAT_DEFINITION and fk in existing:
            continue
        existing.add(fk)
        survivor.features.append(_copy_feature(f))
    if ts.term != survivor.term:
        variant = Feature(CAT_VARIANT, ts.term)
        if _feature_key(variant) not in existing:
            existing.add(_feature_key(variant))
            survivor.features.append(variant)
    survivor.components.extend(
        replace(comp, features=[_copy_feature(f) for f in comp.features])
        for comp in ts.components)


def _fill_stats(result: TermCollection, report: FusionReport) -> None:
    block_counts: dict[tuple[str, str], int] = {}
    entry_hits: dict[tuple[str, str], set[str]] = {}
    section_hits: dict[tuple[str, str], set[str]] = {}
    total_blocks = 0
    for entry in result.entries:
        eid = entry.id or ""
        one = TermCollection(global_info=GlobalInfo())
        one.entries.append(entry)
        for label, level, block in walk_blocks(one):
            total_blocks += 1
            block_counts[block.key()] = block_counts.get(block.key(), 0) + 1
            entry_hits.setdefault(block.key(), set()).add(eid)
            if level == LEVEL_TERM:
                section_hits.setdefault(block.key(), set()).add(label)
    total_sections = sum(len(ls.term_sections) for e in result.entries for ls in e.lang_sections)
    for r in result.global_info.resources:
        report.stats.append(ResourceStats(
            institution=r.institution, database=r.database,
            entries=len(entry_hits.get(r.key(), ())),
            term_sections=len(section_hits.get(r.key(), ())),
            provenance_blocks=block_counts.get(r.key(), 0)))
    report.totals = ResourceStats(
        institution="TOTAL", database="",
        entries=len(result.entries),
        term_sections=total_sections,
        provenance_blocks=total_blocks)


# --- relation lifting ---------------------------------------------------------------

def lift_relations(collection: TermCollection,
                   report: FusionReport | None = None) -> TermCollection:
    """Rewrite aliased relation targets, then prune degenerate edges.

    Self-loops are deleted outright.  broaderConcept graphs are made acyclic
    per typology by repeatedly dropping the lexicographically greatest
    (source, target) edge of a found cycle.  Everything dropped is recorded
    in the report.
    """
    if report is None:
        report = FusionReport()
    alias: dict[str, str] = {}
    for old, new in report.aliases:
        alias.setdefault(old, new)

    # first pass: rewrite targets and delete self-loops
    rewritten: dict[str, list[ConceptRelation]] = {}
    for entry in collection.entries:
        eid = entry.id or ""
        kept: list[ConceptRelation] = []
        for rel in entry.concept_relations:
            target = alias.get(rel.target, rel.target)
            if target == eid:
                report.dropped_edges.append(DroppedEdge(
                    rel.kind, eid, target, rel.typology, "self-loop"))
                continue
            kept.append(replace(rel, target=target))
        rewritten[eid] = kept

    # second pass: break broader-concept cycles per typology
    dropped_pairs: set[tuple[str, str, str]] = set()
    typologies = sorted({r.typology for rels in rewritten.values() for r in rels
                         if r.kind == BROADER_CONCEPT})
    for typology in typologies:
        while True:
            adjacency: dict[str, list[str]] = {}
            for eid, rels in rewritten.items():
                targets = sorted({r.target for r in rels
                                  if r.kind == BROADER_CONCEPT and r.typology == typology
                                  and (eid, r.target, typology) not in dropped_pairs})
                if targets:
                    adjacency[eid] = targets
            cycle = _find_cycle(adjacency)
            if cycle is None:
                break
            worst = max(zip(cycle, cycle[1:]))
            dropped_pairs.add((worst[0], worst[1], typology))

    result = new_collection(
        GlobalInfo(title=collection.global_info.title,
                   dcs_ref=collection.global_info.dcs_ref,
                   resources=list(collection.global_info.resources)),
        prefix=collection.prefix)
    for entry in collection.entries:
        eid = entry.id or ""
        final: list[ConceptRelation] = []
        for rel in rewritten[eid]:
            if (rel.kind == BROADER_CONCEPT
                    and (eid, rel.target, rel.typology) in dropped_pairs):
                report.dropped_edges.append(DroppedEdge(
                    rel.kind, eid, rel.target, rel.typology, "cycle"))
                continue
            final.append(rel)
        new_entry = TermEntry(
            id=entry.id,
            features=[_copy_feature(f) for f in entry.features],
            concept_relations=final,
            lang_sections=[_copy_lang_section(ls, alias) for ls in entry.lang_sections])
        register_entry(result, new_entry)
    return freeze(result)


def _copy_lang_section(ls: LangSection, alias: dict[str, str]) -> LangSection:
    new_ls = LangSection(language=ls.language,
                         features=[_copy_feature(f) for f in ls.features])
    for ts in ls.term_sections:
        new_ls.term_sections.append(TermSection(
            term=ts.term, id=ts.id,
            features=[_copy_feature(f) for f in ts.features],
            provenance=list(ts.provenance),
            relations=[replace(r, target=alias.get(r.target, r.target)) for r in ts.relations],
            components=[replace(comp, features=[_copy_feature(f) for f in comp.features])
                        for comp in ts.components]))
    return new_ls


def _find_cycle(adjacency: dict[str, list[str]]) -> list[str] | None:
    """Return one cycle as [a, b, ..., a], or None; deterministic order."""
    WHITE, GREY, BLACK = 0, 1, 2
    color: dict[str, int] = {}
    for start in sorted(adjacency):
        if color.get(start, WHITE) != WHITE:
            continue
        path: list[str] = [start]
        stack: list[tuple[str, int]] = [(start, 0)]
        color[start] = GREY
        while stack:
            node, i = stack[-1]
            targets = adjacency.get(node, [])
            if i < len(targets):
                stack[-1] = (node, i + 1)
                nxt = targets[i]
                state = color.get(nxt, WHITE)
                if state == GREY:
                    return path[path.index(nxt):] + [nxt]
                if state == WHITE:
                    color[nxt] = GREY
                    stack.append((nxt, 0))
                    path.append(nxt)
            else:
                color[node] = BLACK
                stack.pop()
                path.pop()
    return None
