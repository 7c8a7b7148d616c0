"""Operator command line: validation, servers, harvesting, registry admin.

Exit codes: 0 success, 1 domain error, 2 usage error. Every command takes
`--json` for machine-readable output.
"""

from __future__ import annotations

import json as jsonlib
import sys
from pathlib import Path

import click
from filelock import FileLock, Timeout

from . import fixtures as fixtures_mod
from . import metadata_core as mc
from . import provider as provider_mod
from . import server as server_mod
from .harvester import Harvester, HarvestError, UnionCatalog, \
    load_providers_file
from .language_registry import GroupRegistry, LoadError, RegistryError, \
    default_code_database, load_codes


def _emit(as_json, payload, human):
    if as_json:
        click.echo(jsonlib.dumps(payload, indent=2, sort_keys=True))
    else:
        click.echo(human)


def _state_lock(state_dir):
    Path(state_dir).mkdir(parents=True, exist_ok=True)
    return FileLock(str(Path(state_dir) / ".lock"), timeout=10)


@click.group()
def main():
    """Federated language-resource metadata tools."""


@main.command()
@click.argument("paths", nargs=-1, required=True,
                type=click.Path(path_type=Path))
@click.option("--schemes", "schemes_file", type=click.Path(path_type=Path),
              help="JSON file of registered scheme vocabularies.")
@click.option("--json", "as_json", is_flag=True)
def validate(paths, schemes_file, as_json):
    """Validate wire-format record files; exit 1 on any error finding."""
    schemes = {}
    if schemes_file:
        schemes = jsonlib.loads(schemes_file.read_text(encoding="utf-8"))
    exit_code = 0
    reports = []
    for path in paths:
        try:
            record = mc.parse_record(path.read_bytes())
        except (OSError, mc.ParseError) as exc:
            reports.append({"file": str(path), "ok": False,
                            "error": str(exc)})
            exit_code = 1
            continue
        report = mc.validate_record(record, schemes=schemes)
        reports.append({
            "file": str(path),
            "ok": report.is_valid,
            "record": record.identifier,
            "findings": [
                {"severity": f.severity, "element": f.element_index,
                 "message": f.message}
                for f in report.findings
            ],
        })
        if not report.is_valid:
            exit_code = 1
    for rep in reports:
        if as_json:
            continue
        status = "OK" if rep["ok"] else "INVALID"
        click.echo("%s: %s" % (rep["file"], status))
        if "error" in rep:
            click.echo("  parse error: %s" % rep["error"])
        for f in rep.get("findings", ()):
            click.echo("  %s (element %d): %s"
                       % (f["severity"].upper(), f["element"], f["message"]))
    if as_json:
        click.echo(jsonlib.dumps(reports, indent=2))
    sys.exit(exit_code)


@main.group()
def provider():
    """Data-provider server commands."""


@provider.command("serve")
@click.option("--root", required=True, type=click.Path(path_type=Path))
@click.option("--port", default=8080, envvar="OLACFED_PORT", type=int)
@click.option("--archive-id", required=True)
@click.option("--page-size", default=provider_mod.DEFAULT_PAGE_SIZE, type=int)
@click.option("--json", "as_json", is_flag=True)
def provider_serve(root, port, archive_id, page_size, as_json):
    """Serve one repository over the harvesting protocol."""
    repo = provider_mod.Repository(root, archive_id)
    try:
        httpd = provider_mod.make_server(repo, port=port, page_size=page_size)
    except OSError as exc:
        click.echo("cannot bind port %d: %s" % (port, exc), err=True)
        sys.exit(1)
    host, bound_port = httpd.server_address
    _emit(as_json,
          {"archive": archive_id, "address": "http://%s:%d" % (host, bound_port),
           "records": len(repo)},
          "provider %s listening on http://%s:%d (%d records)"
          % (archive_id, host, bound_port, len(repo)))
    httpd.serve_forever()


@main.group()
def harvest():
    """Union-catalog harvesting commands."""


@harvest.command("run")
@click.option("--providers", "providers_file", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--state", "state_dir", required=True, envvar="OLACFED_STATE",
              type=click.Path(path_type=Path))
@click.option("--full", "full", is_flag=True,
              help="Force a full harvest of every provider.")
@click.option("--parallelism", default=4, type=int)
@click.option("--json", "as_json", is_flag=True)
def harvest_run(providers_file, state_dir, full, parallelism, as_json):
    """Harvest all configured providers into the union catalog."""
    try:
        providers = load_providers_file(providers_file)
    except HarvestError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    try:
        with _state_lock(state_dir):
            catalog = UnionCatalog(state_dir)
            harvester = Harvester(catalog)
            mode = "full" if full else "auto"
            summaries = harvester.harvest_all(providers, mode=mode,
                                              parallelism=parallelism)
    except Timeout:
        click.echo("state directory is locked by another process", err=True)
        sys.exit(1)
    if as_json:
        click.echo(jsonlib.dumps([s.to_json() for s in summaries], indent=2))
    else:
        for s in summaries:
            if s.failed:
                click.echo("%s: FAILED (%s)" % (s.archive_id, s.error))
            else:
                click.echo("%s: added=%d updated=%d deleted=%d skipped=%d"
                           % (s.archive_id, s.added, s.updated, s.deleted,
                              s.skipped))
        click.echo("catalog entries: %d" % len(catalog))
    if summaries and all(s.failed for s in summaries):
        sys.exit(1)
    sys.exit(0)


@harvest.command("status")
@click.option("--state", "state_dir", required=True, envvar="OLACFED_STATE",
              type=click.Path(path_type=Path))
@click.option("--json", "as_json", is_flag=True)
def harvest_status(state_dir, as_json):
    """Show catalog size and per-provider cursors."""
    try:
        with _state_lock(state_dir):
            catalog = UnionCatalog(state_dir)
    except Timeout:
        click.echo("state directory is locked by another process", err=True)
        sys.exit(1)
    archives = sorted({k[0] for k in catalog.snapshot().keys()}
                      | set(catalog.cursors()))
    status = {
        "entries": len(catalog),
        "providers": [
            {"archive": a, "records": len(catalog.archive_keys(a)),
             "cursor": catalog.cursor(a)}
            for a in archives
        ],
    }
    if as_json:
        click.echo(jsonlib.dumps(status, indent=2))
    else:
        click.echo("catalog entries: %d" % status["entries"])
        for p in status["providers"]:
            click.echo("  %s: %d records, cursor %s"
                       % (p["archive"], p["records"], p["cursor"] or "-"))


@main.group()
def search():
    """Search service commands."""


@search.command("serve")
@click.option("--state", "state_dir", required=True, envvar="OLACFED_STATE",
              type=click.Path(path_type=Path))
@click.option("--registry", "registry_dir", type=click.Path(path_type=Path),
              help="Registry directory (codes file, groups, schemes).")
@click.option("--port", default=8090, envvar="OLACFED_PORT", type=int)
@click.option("--ui", "ui_dir", type=click.Path(path_type=Path),
              help="Static directory for the web UI.")
@click.option("--json", "as_json", is_flag=True)
def search_serve(state_dir, registry_dir, port, ui_dir, as_json):
    """Serve the search and registry HTTP APIs over the union catalog."""
    catalog = UnionCatalog(state_dir)
    codes = None
    if registry_dir:
        codes_file = Path(registry_dir) / "languages.tsv"
        if codes_file.exists():
            codes = load_codes(codes_file)
    codes = codes or default_code_database()
    registry = (GroupRegistry.load(codes, registry_dir)
                if registry_dir else GroupRegistry(codes))
    service = server_mod.SearchService(catalog, registry, codes=codes,
                                       registry_dir=registry_dir)
    try:
        httpd = server_mod.make_server(service, port=port, ui_dir=ui_dir)
    except OSError as exc:
        click.echo("cannot bind port %d: %s" % (port, exc), err=True)
        sys.exit(1)
    host, bound_port = httpd.server_address
    _emit(as_json,
          {"address": "http://%s:%d" % (host, bound_port),
           "entries": len(catalog)},
          "search service listening on http://%s:%d (%d catalog entries)"
          % (host, bound_port, len(catalog)))
    httpd.serve_forever()


def _open_registry(registry_dir, codes_file=None):
    registry_dir = Path(registry_dir)
    if codes_file is None:
        candidate = registry_dir / "languages.tsv"
        codes_file = candidate if candidate.exists() else None
    codes = load_codes(codes_file) if codes_file else default_code_database()
    return codes, GroupRegistry.load(codes, registry_dir)


@main.group()
def registry():
    """Language registry administration."""


@registry.command("load")
@click.option("--codes", "codes_file", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--registry", "registry_dir", required=True,
              type=click.Path(path_type=Path))
@click.option("--json", "as_json", is_flag=True)
def registry_load(codes_file, registry_dir, as_json):
    """Validate a code database file and install it in the registry."""
    try:
        codes = load_codes(codes_file)
    except LoadError as exc:
        click.echo("load error: %s" % exc, err=True)
        sys.exit(1)
    registry_dir = Path(registry_dir)
    registry_dir.mkdir(parents=True, exist_ok=True)
    (registry_dir / "languages.tsv").write_text(
        codes_file.read_text(encoding="utf-8"), encoding="utf-8")
    _emit(as_json, {"entries": len(codes)},
          "loaded %d language entries" % len(codes))


@registry.command("group")
@click.argument("qname")
@click.argument("members", nargs=-1, required=True)
@click.option("--registry", "registry_dir", required=True,
              type=click.Path(path_type=Path))
@click.option("--json", "as_json", is_flag=True)
def registry_group(qname, members, registry_dir, as_json):
    """Register (or re-version) a language group."""
    codes, reg = _open_registry(registry_dir)
    try:
        version = reg.register_group(qname, members)
    except RegistryError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    reg.save(registry_dir)
    _emit(as_json,
          {"name": qname, "version": version.version,
           "expansion": sorted(version.expansion)},
          "%s v%d = {%s}" % (qname, version.version,
                             ", ".join(sorted(version.expansion))))


@registry.command("scheme")
@click.argument("name")
@click.argument("values", nargs=-1, required=True)
@click.option("--registry", "registry_dir", required=True,
              type=click.Path(path_type=Path))
@click.option("--json", "as_json", is_flag=True)
def registry_scheme(name, values, registry_dir, as_json):
    """Register an encoding scheme as a controlled vocabulary."""
    codes, reg = _open_registry(registry_dir)
    try:
        reg.register_scheme(name, values)
    except RegistryError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    reg.save(registry_dir)
    _emit(as_json, {"name": name, "values": list(values)},
          "scheme %s registered with %d values" % (name, len(values)))


@main.group()
def fixtures():
    """Demo federation fixtures."""


@fixtures.command("build")
@click.option("--root", required=True, type=click.Path(path_type=Path))
@click.option("--json", "as_json", is_flag=True)
def fixtures_build(root, as_json):
    """Materialize the three demo providers and a registry directory."""
    repos = fixtures_mod.build_federation(root)
    counts = {a: len(r) for a, r in repos.items()}
    _emit(as_json, {"root": str(root), "providers": counts},
          "built %d providers under %s: %s"
          % (len(counts), root,
             ", ".join("%s=%d" % kv for kv in sorted(counts.items()))))


if __name__ == "__main__":
    main()
