"""termfuse: build one concept-oriented termbase out of many vocabularies."""

from termfuse.dcs import (
    CategoryMapping,
    CategoryViolation,
    DataCategory,
    DataCategorySelection,
    default_dcs,
    load_dcs,
    load_mapping,
    map_categories,
    validate,
)
from termfuse.fusion import (
    FusionPolicy,
    FusionReport,
    NormalizationOptions,
    fuse,
    lift_relations,
    match_entries,
    normalize_term,
)
from termfuse.gmtxml import (
    GmtNode,
    Pointer,
    child_sequence,
    format_pointer,
    from_model,
    parse_gmt,
    parse_pointer,
    resolve_pointer,
    serialize_gmt,
    to_model,
)
from termfuse.ingest import (
    PivotPolicy,
    SourceRecord,
    SourceResource,
    parse_source,
    pivot,
    register_native,
)
from termfuse.model import (
    Annotation,
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
    check_structure,
    freeze,
    new_collection,
)
from termfuse.termbase import (
    QueryExpansion,
    UpdateSet,
    diff_native,
    expand_query,
    export_by_source,
    lookup,
    render_update_set,
)

__version__ = "0.1.0"
