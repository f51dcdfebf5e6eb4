"""Command line front end.

    termfuse import  SOURCE.tsf ...   pivot sources, write native + pivoted files
    termfuse fuse    A.gmt B.gmt ...  fuse collections, write fused.gmt + report
    termfuse validate FILE.gmt        structural and category findings
    termfuse query   FILE.gmt TERM    look a term up, optionally expand a query
    termfuse export  FILE.gmt         carve out one institution's contribution
    termfuse diff    OLD.gmt NEW.gmt  entry-level drift between two snapshots

Exit codes: 0 success, 1 validation findings, 2 unreadable or malformed
input, 3 broken invariants.  A workspace file (--config, "key = value"
lines) provides defaults; flags win over it.  All outputs are deterministic
byte for byte given the same inputs.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from termfuse import dcs as dcs_mod
from termfuse import fusion, ingest, termbase
from termfuse.errors import (
    ConfigError,
    DanglingReference,
    DcsSyntaxError,
    DialectError,
    MappingError,
    NoTermsInLanguages,
    NotFound,
    RegistryClash,
    TermfuseError,
    TsfSyntaxError,
    UnknownSource,
    XmlError,
)
from termfuse.gmtxml import from_model, parse_gmt, serialize_gmt, to_model
from termfuse.model import check_structure

# inputs unusable as given -> 2; broken structural guarantees -> 3
_INPUT_ERRORS = (XmlError, DialectError, MappingError, DcsSyntaxError, TsfSyntaxError,
                 DanglingReference, RegistryClash, UnknownSource, NotFound,
                 NoTermsInLanguages, ConfigError, OSError)

_BOOL_WORDS = {"true": True, "yes": True, "on": True, "1": True,
               "false": False, "no": False, "off": False, "0": False}


@dataclass
class WorkspaceConfig:
    dcs_path: str | None = None
    match_scope: str = fusion.PREFERRED_ONLY
    case_fold: bool = True
    strip_diacritics: bool = True
    strip_punctuation: bool = True
    token_sort: bool = False
    uf_handling: str = ingest.SYNONYM_CAPTURE
    collection_prefix: str = "TC"
    output_dir: str = "."


def load_config(path: "Path | str") -> WorkspaceConfig:
    config = WorkspaceConfig()
    known = {f.name: f.type for f in fields(WorkspaceConfig)}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if isinstance(getattr(config, key), bool):
            if value.lower() not in _BOOL_WORDS:
                raise ConfigError(f"{path}:{lineno}: {key} needs a boolean, got {value!r}")
            setattr(config, key, _BOOL_WORDS[value.lower()])
        else:
            setattr(config, key, value)
    if config.match_scope not in (fusion.PREFERRED_ONLY, fusion.ALL_TERMS):
        raise ConfigError(f"{path}: bad match_scope {config.match_scope!r}")
    if config.uf_handling not in (ingest.SYNONYM_CAPTURE, ingest.SPLIT_NON_PREFERRED):
        raise ConfigError(f"{path}: bad uf_handling {config.uf_handling!r}")
    return config


def _normalization(config: WorkspaceConfig, args: argparse.Namespace) -> fusion.NormalizationOptions:
    opts = fusion.NormalizationOptions(
        case_fold=config.case_fold,
        strip_diacritics=config.strip_diacritics,
        strip_punctuation=config.strip_punctuation,
        token_sort=config.token_sort)
    for name in ("case_fold", "strip_diacritics", "strip_punctuation", "token_sort"):
        override = getattr(args, name, None)
        if override is not None:
            opts = replace(opts, **{name: override})
    return opts


def _load_collection(path: str):
    return to_model(parse_gmt(Path(path).read_bytes()))


def _load_dcs(config: WorkspaceConfig, args: argparse.Namespace) -> dcs_mod.DataCategorySelection:
    path = getattr(args, "dcs", None) or config.dcs_path
    if path:
        return dcs_mod.load_dcs(Path(path).read_text(encoding="utf-8"))
    return dcs_mod.default_dcs()


def _out_dir(config: WorkspaceConfig, args: argparse.Namespace) -> Path:
    out = Path(getattr(args, "out", None) or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_import(config: WorkspaceConfig, args: argparse.Namespace) -> int:
    out = _out_dir(config, args)
    uf_handling = args.uf_handling or config.uf_handling
    policy = ingest.PivotPolicy(uf_handling=uf_handling)
    written: set[str] = set()
    for source_path in args.sources:
        resource = ingest.parse_source(Path(source_path).read_bytes())
        name = ingest.slug(resource.descriptor.database or resource.descriptor.institution)
        if name in written:
            raise ConfigError(f"two sources map to the output name {name!r}")
        written.add(name)
        collection = ingest.pivot(resource, policy, prefix=args.prefix)
        native_path, registered = ingest.register_native(collection, resource, out)
        pivot_path = out / f"{name}.gmt"
        pivot_path.write_text(serialize_gmt(from_model(registered)), encoding="utf-8")
        for warning in resource.warnings:
            print(f"warning: {source_path}: {warning}", file=sys.stderr)
        print(f"imported {resource.descriptor.institution}|{resource.descriptor.database}: "
              f"{len(registered.entries)} entries -> {pivot_path.name}, {native_path.name}")
    return 0


def cmd_fuse(config: WorkspaceConfig, args: argparse.Namespace) -> int:
    out = _out_dir(config, args)
    collections = []
    for path in args.inputs:
        collection = _load_collection(path)
        problems = check_structure(collection)
        if problems:
            for p in problems[:5]:
                print(f"error: {path}: {p}", file=sys.stderr)
            return 3
        collections.append(collection)
    policy = fusion.FusionPolicy(
        match_scope=args.scope or config.match_scope,
        normalization=_normalization(config, args))
    prefix = args.prefix or config.collection_prefix
    fused, report = fusion.fuse(collections, policy, prefix=prefix)
    fused = fusion.lift_relations(fused, report)
    fused_path = out / "fused.gmt"
    fused_path.write_text(serialize_gmt(from_model(fused)), encoding="utf-8")
    report_path = out / "fused.report"
    report_path.write_text(report.render(), encoding="utf-8")
    print(f"fused {len(collections)} collections into {len(fused.entries)} entries "
          f"({len(report.merges)} merges, {len(report.conflicts)} conflicts) -> {fused_path.name}")
    return 0


def cmd_validate(config: WorkspaceConfig, args: argparse.Namespace) -> int:
    collection = _load_collection(args.input)
    selection = _load_dcs(config, args)
    findings = 0
    for v in check_structure(collection):
        print(f"INVARIANT {v.node_id}: [{v.rule}] {v.message}")
        findings += 1
    for v in dcs_mod.validate(collection, selection):
        print(f"CATEGORY {v.node}: {v.category}: {v.message}")
        findings += 1
    if findings:
        print(f"{findings} finding(s)")
        return 1
    print("OK")
    return 0


def cmd_query(config: WorkspaceConfig, args: argparse.Namespace) -> int:
    collection = _load_collection(args.input)
    options = _normalization(config, args)
    hits = termbase.lookup(collection, args.term, lang=args.lang, options=options)
    if not hits:
        print("no match")
        return 0
    if not args.expand:
        for eid in hits:
            print(eid)
        return 0
    entry_id = hits[0]
    if args.langs:
        languages = [lang.strip() for lang in args.langs.split(",") if lang.strip()]
    else:
        entry = collection.resolve(entry_id)
        languages = [ls.language for ls in entry.lang_sections]
    expansion = termbase.expand_query(collection, entry_id, languages)
    print(expansion.rendered)
    return 0


def cmd_export(config: WorkspaceConfig, args: argparse.Namespace) -> int:
    out = _out_dir(config, args)
    collection = _load_collection(args.input)
    exported = termbase.export_by_source(collection, args.institution, args.database)
    path = out / f"{ingest.slug(args.institution)}.export.gmt"
    path.write_text(serialize_gmt(from_model(exported)), encoding="utf-8")
    print(f"exported {len(exported.entries)} entries -> {path.name}")
    return 0


def cmd_diff(config: WorkspaceConfig, args: argparse.Namespace) -> int:
    update = termbase.diff_native(Path(args.old).read_bytes(), Path(args.new).read_bytes())
    sys.stdout.write(termbase.render_update_set(update))
    print(f"{len(update.changed)} change(s)")
    return 0


def _add_bool_flags(parser: argparse.ArgumentParser) -> None:
    for name in ("case-fold", "strip-diacritics", "strip-punctuation", "token-sort"):
        parser.add_argument(f"--{name}", dest=name.replace("-", "_"),
                            action=argparse.BooleanOptionalAction, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="termfuse",
                                     description="concept-oriented termbase toolkit")
    parser.add_argument("--config", help="workspace configuration file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", help="pivot term source files")
    p.add_argument("sources", nargs="+")
    p.add_argument("--out")
    p.add_argument("--prefix")
    p.add_argument("--uf-handling", dest="uf_handling",
                   choices=[ingest.SYNONYM_CAPTURE, ingest.SPLIT_NON_PREFERRED])
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("fuse", help="fuse pivoted collections")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out")
    p.add_argument("--prefix")
    p.add_argument("--scope", choices=[fusion.PREFERRED_ONLY, fusion.ALL_TERMS])
    _add_bool_flags(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("validate", help="report structural and category findings")
    p.add_argument("input")
    p.add_argument("--dcs")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("query", help="look up a term")
    p.add_argument("input")
    p.add_argument("term")
    p.add_argument("--lang")
    p.add_argument("--expand", action="store_true")
    p.add_argument("--langs", help="comma-separated expansion languages")
    _add_bool_flags(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("export", help="carve out one source's contribution")
    p.add_argument("input")
    p.add_argument("--institution", required=True)
    p.add_argument("--database")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("diff", help="compare two native snapshots")
    p.add_argument("old")
    p.add_argument("new")
    p.set_defaults(func=cmd_diff)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args.config) if args.config else WorkspaceConfig()
        return args.func(config, args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TermfuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
