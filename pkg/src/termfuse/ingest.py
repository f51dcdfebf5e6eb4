"""Ingest term-centered source vocabularies and pivot them to concepts.

The TSF source format is line oriented.  The first significant line is

    RESOURCE: institution | database | citation

then blank-line separated records:

    ID: D005060              native identifier, required
    DE: descriptor term      required
    LANG: en                 defaults to en
    UF: synonym              repeatable; non-preferred term of this concept
    USE: <native id>         this record is a redirect to another record
    BT: <native id>          repeatable; broader concept
    NT: <native id>          repeatable; narrower concept
    RT: <native id>          repeatable; related concept
    DEF: text                definition, DEFSRC: its source
    CTX: text                usage context, CTXSRC: its source
    TR: fr=term              repeatable; translation into another language

USE records are pure redirects and may carry only ID, DE and LANG besides
USE.  A record may have UF lines or a USE line, never both.

pivot() turns one parsed resource into a concept-oriented collection: each
non-redirect record becomes one entry, synonyms become extra term sections
(synonymCapture) or separate entries linked back through a descriptorOf
relation (splitNonPreferred), BT/NT/RT become typed concept relations, and
every produced element carries a provenance block pointing at its entry in
the registered native file.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field, replace
from pathlib import Path

from termfuse.dcs import (
    CAT_ADMIN_STATUS,
    CAT_CONTEXT,
    CAT_DEFINITION,
    CAT_TERM_TYPE,
    VAL_ADMITTED,
    VAL_FULL_FORM,
    VAL_PREFERRED,
)
from termfuse.errors import DanglingReference, DuplicateNativeId, TsfSyntaxError
from termfuse.gmtxml import Pointer, from_model, serialize_gmt
from termfuse.model import (
    BROADER_CONCEPT,
    DESCRIPTOR_OF,
    RELATED_CONCEPT,
    ConceptRelation,
    Feature,
    GlobalInfo,
    LangSection,
    ProvenanceBlock,
    ResourceDescriptor,
    TermCollection,
    TermEntry,
    TermRelation,
    TermSection,
    add_entry,
    freeze,
    new_collection,
    register_entry,
)

SYNONYM_CAPTURE = "synonymCapture"
SPLIT_NON_PREFERRED = "splitNonPreferred"

_LANG_RE = re.compile(r"^[a-z]{2}$")
_KEY_RE = re.compile(r"^([A-Z]+):\s*(.*)$")

_SINGLE_KEYS = ("ID", "DE", "LANG", "USE", "DEF", "DEFSRC", "CTX", "CTXSRC")
_MULTI_KEYS = ("UF", "BT", "NT", "RT", "TR")
_REDIRECT_ONLY = ("ID", "DE", "LANG", "USE")


@dataclass
class SourceRecord:
    native_id: str
    term: str
    language: str = "en"
    uf: list[str] = field(default_factory=list)
    use_target: str | None = None
    broader: list[str] = field(default_factory=list)
    narrower: list[str] = field(default_factory=list)
    related: list[str] = field(default_factory=list)
    definition: str | None = None
    definition_source: str | None = None
    context: str | None = None
    context_source: str | None = None
    translations: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class SourceResource:
    descriptor: ResourceDescriptor
    records: list[SourceRecord] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class PivotPolicy:
    uf_handling: str = SYNONYM_CAPTURE
    typology: str | None = None  # None: use the database name


def slug(text: str) -> str:
    norm = unicodedata.normalize("NFD", text.casefold())
    norm = "".join(ch for ch in norm if not unicodedata.combining(ch))
    out = re.sub(r"[^a-z0-9]+", "-", norm).strip("-")
    return out or "resource"


def _prefix_from(institution: str) -> str:
    norm = unicodedata.normalize("NFD", institution)
    norm = "".join(ch for ch in norm if not unicodedata.combining(ch))
    out = re.sub(r"[^A-Za-z0-9]+", "", norm).upper()
    return out or "TC"


# --- parsing ------------------------------------------------------------------

def parse_source(data: "bytes | str") -> SourceResource:
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TsfSyntaxError(1, f"not valid UTF-8: {exc}") from None
    else:
        text = data

    descriptor: ResourceDescriptor | None = None
    records: list[SourceRecord] = []
    id_lines: dict[str, int] = {}
    block: list[tuple[int, str, str]] = []

    def flush():
        if block:
            records.append(_build_record(block, id_lines))
            block.clear()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            flush()
            continue
        m = _KEY_RE.match(line.strip())
        if not m:
            raise TsfSyntaxError(lineno, f"expected 'KEY: value', got {line.strip()!r}")
        key, value = m.group(1), m.group(2).strip()
        if key == "RESOURCE":
            if descriptor is not None or records or block:
                raise TsfSyntaxError(lineno, "RESOURCE line must come first and only once")
            fields = [f.strip() for f in value.split("|")]
            if len(fields) < 2 or not fields[0] or not fields[1]:
                raise TsfSyntaxError(lineno, "RESOURCE needs 'institution | database | citation'")
            descriptor = ResourceDescriptor(
                institution=fields[0], database=fields[1],
                citation=fields[2] if len(fields) > 2 and fields[2] else None)
            continue
        if descriptor is None:
            raise TsfSyntaxError(lineno, "file must start with a RESOURCE line")
        if key not in _SINGLE_KEYS and key not in _MULTI_KEYS:
            raise TsfSyntaxError(lineno, f"unknown key {key!r}")
        if not value:
            raise TsfSyntaxError(lineno, f"{key} line has no value")
        block.append((lineno, key, value))
    flush()
    if descriptor is None:
        raise TsfSyntaxError(1, "file must start with a RESOURCE line")

    resource = SourceResource(descriptor=descriptor, records=records)
    _check_references(resource)
    return resource


def _build_record(block: list[tuple[int, str, str]], id_lines: dict[str, int]) -> SourceRecord:
    start = block[0][0]
    singles: dict[str, str] = {}
    multis: dict[str, list[tuple[int, str]]] = {k: [] for k in _MULTI_KEYS}
    for lineno, key, value in block:
        if key in _SINGLE_KEYS:
            if key in singles:
                raise TsfSyntaxError(lineno, f"duplicate {key} in one record")
            singles[key] = value
        else:
            multis[key].append((lineno, value))

    if "ID" not in singles:
        raise TsfSyntaxError(start, "record has no ID")
    if "DE" not in singles:
        raise TsfSyntaxError(start, "record has no DE")
    native_id = singles["ID"]
    if native_id in id_lines:
        raise DuplicateNativeId(start, f"native id {native_id!r} already used at line {id_lines[native_id]}")
    id_lines[native_id] = start

    language = singles.get("LANG", "en")
    if not _LANG_RE.match(language):
        raise TsfSyntaxError(start, f"LANG {language!r} is not a lowercase two-letter code")

    if "USE" in singles:
        if multis["UF"]:
            raise TsfSyntaxError(start, "a record cannot carry both UF and USE")
        extra = [k for k in singles if k not in _REDIRECT_ONLY] + \
                [k for k in _MULTI_KEYS if multis[k]]
        if extra:
            raise TsfSyntaxError(start, f"a USE record may not carry {', '.join(sorted(extra))}")
        if singles["USE"] == native_id:
            raise TsfSyntaxError(start, "USE points at its own record")
    if "DEFSRC" in singles and "DEF" not in singles:
        raise TsfSyntaxError(start, "DEFSRC without DEF")
    if "CTXSRC" in singles and "CTX" not in singles:
        raise TsfSyntaxError(start, "CTXSRC without CTX")

    translations: list[tuple[str, str]] = []
    for lineno, value in multis["TR"]:
        lang, sep, term = value.partition("=")
        lang, term = lang.strip(), term.strip()
        if not sep or not term or not _LANG_RE.match(lang):
            raise TsfSyntaxError(lineno, f"TR must look like 'fr=term', got {value!r}")
        translations.append((lang, term))

    return SourceRecord(
        native_id=native_id,
        term=singles["DE"],
        language=language,
        uf=[v for _, v in multis["UF"]],
        use_target=singles.get("USE"),
        broader=[v for _, v in multis["BT"]],
        narrower=[v for _, v in multis["NT"]],
        related=[v for _, v in multis["RT"]],
        definition=singles.get("DEF"),
        definition_source=singles.get("DEFSRC"),
        context=singles.get("CTX"),
        context_source=singles.get("CTXSRC"),
        translations=translations,
    )


def _check_references(resource: SourceResource) -> None:
    """Drop dangling or self-referential BT/NT/RT targets, with a warning."""
    ids = {r.native_id for r in resource.records}
    for rec in resource.records:
        for key, refs in (("BT", rec.broader), ("NT", rec.narrower), ("RT", rec.related)):
            kept = []
            for target in refs:
                if target == rec.native_id:
                    resource.warnings.append(f"{rec.native_id}: {key} points at itself")
                elif target not in ids:
                    resource.warnings.append(f"{rec.native_id}: {key} target {target!r} does not exist")
                else:
                    kept.append(target)
            refs[:] = kept


# --- pivoting -----------------------------------------------------------------

def pivot(resource: SourceResource, policy: PivotPolicy = PivotPolicy(),
          prefix: str | None = None) -> TermCollection:
    """Build a concept-oriented collection from one source resource."""
    if policy.uf_handling not in (SYNONYM_CAPTURE, SPLIT_NON_PREFERRED):
        raise ValueError(f"unknown uf_handling {policy.uf_handling!r}")
    desc = resource.descriptor
    prefix = prefix or _prefix_from(desc.institution)
    typology = policy.typology or desc.database or desc.institution
    capture = policy.uf_handling == SYNONYM_CAPTURE

    by_native = {r.native_id: r for r in resource.records}

    def resolve(native_id: str, origin: str) -> SourceRecord:
        seen = set()
        rec = by_native.get(native_id)
        while rec is not None and rec.use_target is not None:
            if rec.native_id in seen:
                raise DanglingReference(f"{origin}: USE chain through {native_id!r} loops")
            seen.add(rec.native_id)
            rec = by_native.get(rec.use_target)
        if rec is None:
            raise DanglingReference(f"{origin}: target {native_id!r} does not exist")
        return rec

    def block(eid: str) -> ProvenanceBlock:
        return ProvenanceBlock(institution=desc.institution, database=desc.database,
                               native_pointer=Pointer(fragment=eid))

    def section(term: str, tsid: str, status: str, eid: str) -> TermSection:
        return TermSection(term=term, id=tsid, provenance=[block(eid)], features=[
            Feature(CAT_TERM_TYPE, VAL_FULL_FORM),
            Feature(CAT_ADMIN_STATUS, status),
        ])

    entries: list[TermEntry] = []
    entry_of: dict[str, TermEntry] = {}          # native id -> owning entry
    descriptor_ts: dict[str, str] = {}           # native id -> descriptor section id
    ts_counts: dict[str, int] = {}
    serial = 0

    def next_ts(eid: str) -> str:
        ts_counts[eid] = ts_counts.get(eid, 0) + 1
        return f"{eid}.TS.{ts_counts[eid]}"

    def start_entry(rec: SourceRecord, status: str) -> TermEntry:
        nonlocal serial
        serial += 1
        eid = f"{prefix}.{serial}"
        entry = TermEntry(id=eid)
        if rec.definition is not None:
            entry.features.append(Feature(
                CAT_DEFINITION, rec.definition, source=rec.definition_source,
                provenance=[block(eid)]))
        ls = LangSection(language=rec.language)
        if rec.context is not None:
            ls.features.append(Feature(
                CAT_CONTEXT, rec.context, source=rec.context_source,
                provenance=[block(eid)]))
        tsid = next_ts(eid)
        ls.term_sections.append(section(rec.term, tsid, status, eid))
        entry.lang_sections.append(ls)
        descriptor_ts[rec.native_id] = tsid
        entry_of[rec.native_id] = entry
        entries.append(entry)
        return entry

    # phase 1: entries
    for rec in resource.records:
        if rec.use_target is not None:
            if not capture:
                start_entry(rec, VAL_ADMITTED)
            continue
        entry = start_entry(rec, VAL_PREFERRED)
        eid = entry.id or ""
        main_ls = entry.lang_sections[0]
        for uf in rec.uf:
            if capture:
                main_ls.term_sections.append(section(uf, next_ts(eid), VAL_ADMITTED, eid))
            else:
                serial += 1
                uf_eid = f"{prefix}.{serial}"
                uf_section = section(uf, next_ts(uf_eid), VAL_ADMITTED, uf_eid)
                uf_section.relations.append(TermRelation(
                    DESCRIPTOR_OF, descriptor_ts[rec.native_id], provenance=block(uf_eid)))
                entries.append(TermEntry(id=uf_eid, lang_sections=[
                    LangSection(language=rec.language, term_sections=[uf_section])]))
        for lang, term in rec.translations:
            target_ls = None
            for candidate in entry.lang_sections:
                if candidate.language == lang:
                    target_ls = candidate
                    break
            if target_ls is None:
                target_ls = LangSection(language=lang)
                entry.lang_sections.append(target_ls)
            target_ls.term_sections.append(section(term, next_ts(eid), VAL_PREFERRED, eid))

    # phase 2: redirects and concept relations
    for rec in resource.records:
        if rec.use_target is None:
            continue
        target_rec = resolve(rec.use_target, rec.native_id)
        target_entry = entry_of[target_rec.native_id]
        teid = target_entry.id or ""
        if capture:
            target_ls = None
            for candidate in target_entry.lang_sections:
                if candidate.language == rec.language:
                    target_ls = candidate
                    break
            if target_ls is None:
                target_ls = LangSection(language=rec.language)
                target_entry.lang_sections.append(target_ls)
            target_ls.term_sections.append(
                section(rec.term, next_ts(teid), VAL_ADMITTED, teid))
        else:
            entry = entry_of[rec.native_id]
            own = entry.lang_sections[0].term_sections[0]
            own.relations.append(TermRelation(
                DESCRIPTOR_OF, descriptor_ts[target_rec.native_id],
                provenance=block(entry.id or "")))

    def add_relation(entry: TermEntry, kind: str, target_eid: str, stated_in: str) -> None:
        for rel in entry.concept_relations:
            if (rel.kind, rel.target, rel.typology) == (kind, target_eid, typology):
                return
        entry.concept_relations.append(ConceptRelation(
            kind, target_eid, typology=typology, provenance=block(stated_in)))

    for rec in resource.records:
        if rec.use_target is not None:
            continue
        entry = entry_of[rec.native_id]
        eid = entry.id or ""
        for target in rec.broader:
            target_entry = entry_of[resolve(target, rec.native_id).native_id]
            if target_entry is not entry:
                add_relation(entry, BROADER_CONCEPT, target_entry.id or "", eid)
        for target in rec.related:
            target_entry = entry_of[resolve(target, rec.native_id).native_id]
            if target_entry is not entry:
                add_relation(entry, RELATED_CONCEPT, target_entry.id or "", eid)
        for target in rec.narrower:
            target_entry = entry_of[resolve(target, rec.native_id).native_id]
            if target_entry is not entry:
                add_relation(target_entry, BROADER_CONCEPT, eid, eid)

    title = desc.database or desc.institution
    collection = new_collection(
        GlobalInfo(title=title, dcs_ref="default", resources=[desc]), prefix=prefix)
    for entry in entries:
        add_entry(collection, entry)
    return freeze(collection)


# --- native registration ----------------------------------------------------------

def register_native(collection: TermCollection, resource: SourceResource,
                    out_dir: "Path | str") -> tuple[Path, TermCollection]:
    """Write the collection as the resource's native file.

    Returns the written path and a copy of the collection whose provenance
    pointers and registry row now name that file.
    """
    desc = resource.descriptor
    name = f"{slug(desc.database or desc.institution)}.native.gmt"
    path = Path(out_dir) / name
    path.write_text(serialize_gmt(from_model(collection)), encoding="utf-8")

    def rewire(b: ProvenanceBlock) -> ProvenanceBlock:
        if b.key() == desc.key() and b.native_pointer is not None and b.native_pointer.file is None:
            return replace(b, native_pointer=replace(b.native_pointer, file=name))
        return b

    info = collection.global_info
    new_info = GlobalInfo(
        title=info.title, dcs_ref=info.dcs_ref,
        resources=[replace(r, native_file=name) if r.key() == desc.key() else r
                   for r in info.resources])
    rewired = TermCollection(global_info=new_info, prefix=collection.prefix)
    for entry in collection.entries:
        register_entry(rewired, _map_entry_blocks(entry, rewire))
    return path, freeze(rewired)


def _map_entry_blocks(entry: TermEntry, fn) -> TermEntry:
    def map_feature(f: Feature) -> Feature:
        return replace(f, annotations=list(f.annotations),
                       provenance=[fn(b) for b in f.provenance])

    new_entry = TermEntry(
        id=entry.id,
        features=[map_feature(f) for f in entry.features],
        concept_relations=[
            replace(r, provenance=fn(r.provenance) if r.provenance else None)
            for r in entry.concept_relations],
    )
    for ls in entry.lang_sections:
        new_ls = LangSection(language=ls.language,
                             features=[map_feature(f) for f in ls.features])
        for ts in ls.term_sections:
            new_ts = TermSection(
                term=ts.term, id=ts.id,
                features=[map_feature(f) for f in ts.features],
                provenance=[fn(b) for b in ts.provenance],
                relations=[replace(r, provenance=fn(r.provenance) if r.provenance else None)
                           for r in ts.relations],
                components=[replace(comp, features=[map_feature(f) for f in comp.features])
                            for comp in ts.components],
            )
            new_ls.term_sections.append(new_ts)
        new_entry.lang_sections.append(new_ls)
    return new_entry
