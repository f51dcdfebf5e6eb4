"""Data category selections: which categories are allowed where.

A DCS file is line oriented.  The first significant line is "DCS <name>",
then one category per line:

    name | datatype | level, level, ... | option | option

Datatypes are plainText, languageCode, date and picklistValue.  Options are
"picklist: v1, v2, ..." (required for picklistValue) and "source: yes|no"
(whether features of this category may themselves carry a source or
provenance; default yes).  '#' starts a comment.

validate() checks a collection's features, relations and provenance blocks
against a selection; the global information skeleton is not checked.
map_categories() rewrites a collection from a source category system into a
target selection through a mapping table, dropping what has no rule.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from datetime import date

from termfuse.errors import BadPicklist, DcsSyntaxError, DuplicateCategory, MappingError
from termfuse.model import (
    LANG_RE,
    LEVEL_COMPONENT,
    LEVEL_ENTRY,
    LEVEL_LANG,
    LEVEL_TERM,
    META_LEVELS,
    Feature,
    GlobalInfo,
    LangSection,
    TermCollection,
    TermComponentSection,
    TermEntry,
    TermSection,
    _ts_label,
    freeze,
    new_collection,
    register_entry,
    walk_blocks,
    walk_features,
)

PLAIN_TEXT = "plainText"
LANGUAGE_CODE = "languageCode"
DATE = "date"
PICKLIST_VALUE = "picklistValue"
DATATYPES = (PLAIN_TEXT, LANGUAGE_CODE, DATE, PICKLIST_VALUE)

# Category and picklist names shared across the pipeline.
CAT_TERM_TYPE = "termType"
CAT_ADMIN_STATUS = "administrativeStatus"
CAT_DEFINITION = "definition"
CAT_CONTEXT = "context"
CAT_VARIANT = "variantForm"
CAT_SUBJECT_FIELD = "subjectField"
VAL_FULL_FORM = "fullForm"
VAL_ABBREVIATION = "abbreviation"
VAL_PREFERRED = "preferredTerm"
VAL_ADMITTED = "admittedTerm"
VAL_DEPRECATED = "deprecatedTerm"


@dataclass(frozen=True)
class DataCategory:
    name: str
    datatype: str
    levels: frozenset[str]
    picklist: tuple[str, ...] | None = None
    provenance_allowed: bool = True


@dataclass
class DataCategorySelection:
    name: str
    categories: dict[str, DataCategory] = field(default_factory=dict)

    def get(self, name: str) -> DataCategory | None:
        return self.categories.get(name)


@dataclass(frozen=True)
class CategoryViolation:
    node: str
    category: str
    code: str
    message: str


@dataclass(frozen=True)
class MappingRule:
    source: str
    level: str
    target: str
    rewrites: tuple[tuple[str, str], ...] = ()

    def rewrite(self, value: str) -> str:
        for old, new in self.rewrites:
            if value == old:
                return new
        return value


@dataclass
class CategoryMapping:
    rules: list[MappingRule] = field(default_factory=list)

    def find(self, source: str, level: str) -> MappingRule | None:
        for rule in self.rules:
            if rule.source == source and rule.level == level:
                return rule
        return None


@dataclass(frozen=True)
class DroppedFeature:
    node: str
    level: str
    category: str


DEFAULT_DCS = """\
DCS default

# descriptive categories
term                    | plainText     | termSection, termComponentSection
languageIdentifier      | languageCode  | languageSection
definition              | plainText     | terminologicalEntry, languageSection
context                 | plainText     | languageSection, termSection
subjectField            | plainText     | terminologicalEntry
variantForm             | plainText     | termSection
termType                | picklistValue | termSection | picklist: fullForm, abbreviation, acronym, shortForm
administrativeStatus    | picklistValue | termSection | picklist: preferredTerm, admittedTerm, deprecatedTerm
grammaticalGender       | picklistValue | termSection | picklist: masculine, feminine, neuter

# relations
broaderConcept          | plainText     | terminologicalEntry
relatedConcept          | plainText     | terminologicalEntry
descriptorOf            | plainText     | termSection
typology                | plainText     | terminologicalEntry | source: no

# bookkeeping
source                  | plainText     | terminologicalEntry, languageSection, termSection, termComponentSection | source: no
originatingInstitution  | plainText     | terminologicalEntry, languageSection, termSection | source: no
originatingDatabaseName | plainText     | terminologicalEntry, languageSection, termSection | source: no
nativePointer           | plainText     | terminologicalEntry, languageSection, termSection | source: no
lastModificationDate    | date          | terminologicalEntry, languageSection, termSection | source: no
bibliographicSource     | plainText     | globalInformation | source: no
nativeFile              | plainText     | globalInformation | source: no
title                   | plainText     | globalInformation | source: no
dataCategorySelection   | plainText     | globalInformation | source: no
collectionPrefix        | plainText     | globalInformation | source: no
"""

_default: DataCategorySelection | None = None


def default_dcs() -> DataCategorySelection:
    global _default
    if _default is None:
        _default = load_dcs(DEFAULT_DCS)
    return _default


def _significant_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def load_dcs(text: str) -> DataCategorySelection:
    lines = list(_significant_lines(text))
    if not lines or not lines[0][1].startswith("DCS"):
        lineno = lines[0][0] if lines else 1
        raise DcsSyntaxError(lineno, "selection must start with a 'DCS <name>' header")
    header = lines[0][1].split(None, 1)
    if len(header) != 2:
        raise DcsSyntaxError(lines[0][0], "DCS header is missing a name")
    sel = DataCategorySelection(name=header[1].strip())
    for lineno, line in lines[1:]:
        fields = [f.strip() for f in line.split("|")]
        if len(fields) < 3:
            raise DcsSyntaxError(lineno, "expected 'name | datatype | levels'")
        name, datatype, levels_field = fields[0], fields[1], fields[2]
        if not name:
            raise DcsSyntaxError(lineno, "category name is empty")
        if name in sel.categories:
            raise DuplicateCategory(lineno, f"category {name!r} declared twice")
        if datatype not in DATATYPES:
            raise DcsSyntaxError(lineno, f"unknown datatype {datatype!r}")
        levels = frozenset(lv.strip() for lv in levels_field.split(","))
        for lv in levels:
            if lv not in META_LEVELS:
                raise DcsSyntaxError(lineno, f"unknown level {lv!r}")
        picklist: tuple[str, ...] | None = None
        provenance_allowed = True
        for option in fields[3:]:
            key, _, rest = option.partition(":")
            key = key.strip()
            if key == "picklist":
                values = tuple(v.strip() for v in rest.split(",") if v.strip())
                if not values:
                    raise BadPicklist(lineno, "picklist is empty")
                picklist = values
            elif key == "source":
                flag = rest.strip().lower()
                if flag not in ("yes", "no"):
                    raise DcsSyntaxError(lineno, f"source option must be yes or no, got {rest.strip()!r}")
                provenance_allowed = flag == "yes"
            else:
                raise DcsSyntaxError(lineno, f"unknown option {option!r}")
        if datatype == PICKLIST_VALUE and picklist is None:
            raise BadPicklist(lineno, f"{name!r} is a picklistValue but has no picklist")
        if datatype != PICKLIST_VALUE and picklist is not None:
            raise BadPicklist(lineno, f"{name!r} has a picklist but is not a picklistValue")
        sel.categories[name] = DataCategory(
            name=name, datatype=datatype, levels=levels,
            picklist=picklist, provenance_allowed=provenance_allowed)
    return sel


# --- validation -----------------------------------------------------------------

def _value_problem(cat: DataCategory, value: str) -> str | None:
    if cat.datatype == LANGUAGE_CODE:
        if not LANG_RE.match(value):
            return f"value {value!r} is not a two-letter code"
    elif cat.datatype == DATE:
        try:
            date.fromisoformat(value)
        except ValueError:
            return f"value {value!r} is not an ISO date"
    elif cat.datatype == PICKLIST_VALUE:
        if value not in (cat.picklist or ()):
            return f"value {value!r} is not in the picklist of {cat.name!r}"
    return None


def _check_category(sel: DataCategorySelection, node: str, level: str,
                    name: str, value: str | None, sourced: bool) -> CategoryViolation | None:
    cat = sel.get(name)
    if cat is None:
        return CategoryViolation(node, name, "unknown-category", f"unknown category {name!r}")
    if level not in cat.levels:
        return CategoryViolation(node, name, "illegal-level",
                                 f"{name!r} is not admissible at {level}")
    if value is not None:
        problem = _value_problem(cat, value)
        if problem:
            return CategoryViolation(node, name, "bad-value", problem)
    if sourced and not cat.provenance_allowed:
        return CategoryViolation(node, name, "source-not-allowed",
                                 f"{name!r} may not carry a source")
    return None


def validate(collection: TermCollection, sel: DataCategorySelection) -> list[CategoryViolation]:
    """Report category violations; at most one per (node, category, code)."""
    out: list[CategoryViolation] = []
    seen: set[tuple[str, str, str]] = set()

    def push(v: CategoryViolation | None):
        if v is None:
            return
        key = (v.node, v.category, v.code)
        if key not in seen:
            seen.add(key)
            out.append(v)

    for node, level, f in walk_features(collection):
        push(_check_category(sel, node, level, f.category, f.value,
                             f.source is not None or bool(f.provenance)))

    for entry in collection.entries:
        eid = entry.id or "?"
        for rel in entry.concept_relations:
            push(_check_category(sel, eid, LEVEL_ENTRY, rel.kind, None, False))
            if rel.typology:
                push(_check_category(sel, eid, LEVEL_ENTRY, "typology", rel.typology, False))
        for ls in entry.lang_sections:
            push(_check_category(sel, f"{eid}/{ls.language}", LEVEL_LANG,
                                 "languageIdentifier", ls.language, False))
            for k, ts in enumerate(ls.term_sections):
                label = _ts_label(eid, ls, k, ts)
                push(_check_category(sel, label, LEVEL_TERM, "term", ts.term, False))
                for rel in ts.relations:
                    push(_check_category(sel, label, LEVEL_TERM, rel.kind, None, False))
                for ci, comp in enumerate(ts.components):
                    push(_check_category(sel, f"{label}/c{ci + 1}", LEVEL_COMPONENT,
                                         "term", comp.text, False))

    for node, level, block in walk_blocks(collection):
        push(_check_category(sel, node, level, "originatingInstitution", None, False))
        if block.database:
            push(_check_category(sel, node, level, "originatingDatabaseName", None, False))
        if block.last_modified is not None:
            push(_check_category(sel, node, level, "lastModificationDate", None, False))
        if block.native_pointer is not None:
            push(_check_category(sel, node, level, "nativePointer", None, False))
    return out


# --- category mapping --------------------------------------------------------------

_RULE_RE = re.compile(
    r"^(?P<src>[^@|]+?)\s*@\s*(?P<level>\S+)\s*->\s*(?P<dst>[^\s\[]+)"
    r"(?:\s*\[values:(?P<vals>[^\]]*)\])?$")


def load_mapping(text: str) -> CategoryMapping:
    mapping = CategoryMapping()
    for lineno, line in _significant_lines(text):
        m = _RULE_RE.match(line)
        if not m:
            raise DcsSyntaxError(lineno, "expected 'source @ level -> target [values: a=b, ...]'")
        level = m.group("level")
        if level not in META_LEVELS:
            raise DcsSyntaxError(lineno, f"unknown level {level!r}")
        rewrites: list[tuple[str, str]] = []
        if m.group("vals") is not None:
            for pair in m.group("vals").split(","):
                pair = pair.strip()
                if not pair:
                    continue
                old, sep, new = pair.partition("=")
                if not sep or not old.strip():
                    raise DcsSyntaxError(lineno, f"bad value rewrite {pair!r}")
                rewrites.append((old.strip(), new.strip()))
        mapping.rules.append(MappingRule(
            source=m.group("src").strip(), level=level,
            target=m.group("dst"), rewrites=tuple(rewrites)))
    return mapping


def _map_feature(f: Feature, level: str, node: str, mapping: CategoryMapping,
                 target: DataCategorySelection,
                 dropped: list[DroppedFeature]) -> Feature | None:
    rule = mapping.find(f.category, level)
    if rule is None:
        dropped.append(DroppedFeature(node, level, f.category))
        return None
    if target.get(rule.target) is None:
        raise MappingError(
            f"target category {rule.target!r} is not in selection {target.name!r}")
    return Feature(category=rule.target, value=rule.rewrite(f.value), source=f.source,
                   annotations=list(f.annotations), provenance=list(f.provenance))


def _structural_rule(mapping: CategoryMapping, name: str, level: str) -> MappingRule | None:
    rule = mapping.find(name, level)
    if rule is not None and rule.target != name:
        raise MappingError(f"{name!r} cannot be renamed to {rule.target!r}")
    return rule


def map_categories(collection: TermCollection, mapping: CategoryMapping,
                   target: DataCategorySelection) -> tuple[TermCollection, list[DroppedFeature]]:
    """Carry a collection over into the target selection.

    Features whose (category, level) has no rule are dropped and reported.
    languageIdentifier and term rules may only rewrite values, not rename.
    Relations and provenance pass through unchanged.
    """
    dropped: list[DroppedFeature] = []
    lang_rule = _structural_rule(mapping, "languageIdentifier", LEVEL_LANG)
    term_rule = _structural_rule(mapping, "term", LEVEL_TERM)
    comp_rule = _structural_rule(mapping, "term", LEVEL_COMPONENT)

    def map_list(features: list[Feature], level: str, node: str) -> list[Feature]:
        out = []
        for f in features:
            mapped = _map_feature(f, level, node, mapping, target, dropped)
            if mapped is not None:
                out.append(mapped)
        return out

    info = collection.global_info
    result = new_collection(
        GlobalInfo(title=info.title, dcs_ref=target.name, resources=list(info.resources)),
        prefix=collection.prefix)
    for entry in collection.entries:
        eid = entry.id or "?"
        new_entry = TermEntry(
            id=entry.id,
            features=map_list(entry.features, LEVEL_ENTRY, eid),
            concept_relations=[replace(r) for r in entry.concept_relations],
        )
        for ls in entry.lang_sections:
            node = f"{eid}/{ls.language}"
            new_ls = LangSection(
                language=lang_rule.rewrite(ls.language) if lang_rule else ls.language,
                features=map_list(ls.features, LEVEL_LANG, node),
            )
            for k, ts in enumerate(ls.term_sections):
                label = _ts_label(eid, ls, k, ts)
                new_ts = TermSection(
                    term=term_rule.rewrite(ts.term) if term_rule else ts.term,
                    id=ts.id,
                    features=map_list(ts.features, LEVEL_TERM, label),
                    provenance=list(ts.provenance),
                    relations=[replace(r) for r in ts.relations],
                )
                for ci, comp in enumerate(ts.components):
                    new_ts.components.append(TermComponentSection(
                        text=comp_rule.rewrite(comp.text) if comp_rule else comp.text,
                        features=map_list(comp.features, LEVEL_COMPONENT, f"{label}/c{ci + 1}"),
                    ))
                new_ls.term_sections.append(new_ts)
            new_entry.lang_sections.append(new_ls)
        register_entry(result, new_entry)
    return freeze(result), dropped
