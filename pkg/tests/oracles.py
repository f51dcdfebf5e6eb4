"""Reference implementations the tests check the pipeline against.

Everything in this module is recomputed from the documented rules with
plain-Python code paths: a fresh normalization function, a textbook
union-find for the matching partition, and Counter-based content
fingerprints.  Nothing here reuses logic from termfuse.fusion or
termfuse.termbase, so agreement between the two sides is meaningful.
"""

from __future__ import annotations

import unicodedata
from collections import Counter

from termfuse.model import TermCollection, TermEntry, walk_blocks

CAT_ADMIN_STATUS = "administrativeStatus"
VAL_PREFERRED = "preferredTerm"


def reference_normalize(term: str, *, case_fold: bool = True,
                        strip_diacritics: bool = True,
                        strip_punctuation: bool = True,
                        token_sort: bool = False) -> str:
    """Matching key, rebuilt step by step from the matching rules."""
    out = unicodedata.normalize("NFC", term)
    if case_fold:
        out = out.casefold()
    if strip_diacritics:
        kept = []
        for ch in unicodedata.normalize("NFD", out):
            if unicodedata.combining(ch) == 0:
                kept.append(ch)
        out = unicodedata.normalize("NFC", "".join(kept))
    if strip_punctuation:
        chars = []
        for ch in out:
            chars.append(" " if unicodedata.category(ch).startswith("P") else ch)
        out = "".join(chars)
    tokens = out.split()
    if token_sort:
        tokens = sorted(tokens)
    return " ".join(tokens)


class DisjointSet:
    """Union-find with path halving; independent of the fusion module."""

    def __init__(self):
        self.parent: dict = {}

    def add(self, x) -> None:
        self.parent.setdefault(x, x)

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra

    def groups(self) -> set[frozenset]:
        buckets: dict = {}
        for x in self.parent:
            buckets.setdefault(self.find(x), []).append(x)
        return {frozenset(v) for v in buckets.values()}


def _matchable(ts) -> bool:
    # unmarked sections count as preferred, same rule the matcher documents
    marks = [f.value for f in ts.features if f.category == CAT_ADMIN_STATUS]
    return not marks or VAL_PREFERRED in marks


def entry_match_keys(entry: TermEntry, *, preferred_only: bool = True,
                     token_sort: bool = False) -> set[tuple[str, str]]:
    """(language, normalized surface) pairs an entry can match on."""
    keys = set()
    for ls in entry.lang_sections:
        for ts in ls.term_sections:
            if preferred_only and not _matchable(ts):
                continue
            key = reference_normalize(ts.term, token_sort=token_sort)
            if key:
                keys.add((ls.language, key))
    return keys


def partition_oracle(collections: list[TermCollection], *,
                     preferred_only: bool = True,
                     token_sort: bool = False) -> set[frozenset]:
    """Brute-force all-pairs partition of (collection index, entry id).

    Two entries belong together when their match key sets intersect; the
    partition is the transitive closure of that relation over every pair,
    with no bucketing shortcuts.
    """
    nodes = []
    for ci, col in enumerate(collections):
        for entry in col.entries:
            keys = entry_match_keys(entry, preferred_only=preferred_only,
                                    token_sort=token_sort)
            nodes.append(((ci, entry.id or ""), keys))
    ds = DisjointSet()
    for ident, _ in nodes:
        ds.add(ident)
    for i in range(len(nodes)):
        id_i, keys_i = nodes[i]
        for j in range(i + 1, len(nodes)):
            id_j, keys_j = nodes[j]
            if keys_i & keys_j:
                ds.union(id_i, id_j)
    return ds.groups()


def pointer_fragment(pointer) -> str:
    """Shorthand fragment of a native pointer, '' when absent."""
    if pointer is None:
        return ""
    frag = pointer.fragment
    if isinstance(frag, str):
        return frag
    return "/".join(str(n) for n in frag)


def member_triples(entry: TermEntry) -> frozenset[tuple[str, str, str]]:
    """(institution, database, native fragment) over term-level blocks.

    Term-level provenance survives fusion verbatim, so these triples
    identify exactly which source entries contributed term sections.
    """
    triples = set()
    for ls in entry.lang_sections:
        for ts in ls.term_sections:
            for b in ts.provenance:
                triples.add((b.institution, b.database,
                             pointer_fragment(b.native_pointer)))
    return frozenset(triples)


def fused_partition_triples(fused: TermCollection) -> set[frozenset]:
    """One member-triple set per fused entry."""
    return {member_triples(e) for e in fused.entries}


def oracle_partition_triples(collections: list[TermCollection], *,
                             preferred_only: bool = True,
                             token_sort: bool = False) -> set[frozenset]:
    """partition_oracle groups, translated into member triples.

    Works for pivoted single-resource inputs, where every term block of an
    entry points back at the entry's own id.
    """
    out = set()
    for group in partition_oracle(collections, preferred_only=preferred_only,
                                  token_sort=token_sort):
        triples = set()
        for ci, eid in group:
            desc = collections[ci].global_info.resources[0]
            triples.add((desc.institution, desc.database, eid))
        out.add(frozenset(triples))
    return out


def provenance_multiset(collection: TermCollection) -> Counter:
    """Counter over full provenance block tuples, all levels."""
    return Counter(
        (b.institution, b.database, b.bibliographic_source,
         b.last_modified, b.native_pointer)
        for _, _, b in walk_blocks(collection))


def content_multiset(collection: TermCollection) -> Counter:
    """Counter of (term, language, category, value) rows.

    Entry-level features use ("", ""), language-level features carry just
    the language, and every term section contributes a synthetic "term"
    row plus its own features.  Relations and provenance are deliberately
    out of scope; they get checked by other means.
    """
    rows: Counter = Counter()
    for entry in collection.entries:
        for f in entry.features:
            rows[("", "", f.category, f.value)] += 1
        for ls in entry.lang_sections:
            for f in ls.features:
                rows[("", ls.language, f.category, f.value)] += 1
            for ts in ls.term_sections:
                rows[(ts.term, ls.language, "term", ts.term)] += 1
                for f in ts.features:
                    rows[(ts.term, ls.language, f.category, f.value)] += 1
    return rows


def term_multiset(collection: TermCollection) -> Counter:
    """Counter of (language, surface) over term sections."""
    return Counter(
        (ls.language, ts.term)
        for entry in collection.entries
        for ls in entry.lang_sections
        for ts in ls.term_sections)
