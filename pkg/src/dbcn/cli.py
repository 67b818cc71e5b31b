"""``dbcn`` command line.

Exit codes: 0 success, 1 data or verification error, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .catalog import CatalogTree, EncodingParams, Variant, reconstruct, verify_path
from .errors import DBCNError, ScenarioError
from .naming import parse_name
from .publish import ConsolidationPolicy, Publisher, trees_in
from .signing import KeyPair, load_trusted_keys
from .sim import (
    SimScenario,
    fetch_version,
    read_jsonl,
    run_scenario,
    scenario_params,
    write_csv,
    write_jsonl,
)
from .store import ObjectStore

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _add_encoding_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--min", dest="min_size", type=int, help="minimum chunk size")
    p.add_argument("--target", dest="target_size", type=int, help="target chunk size")
    p.add_argument("--max", dest="max_size", type=int, help="maximum chunk size")
    p.add_argument("--segment-size", type=int, help="V1-V3 segment size")
    p.add_argument("--chunk-prefix", help="name prefix for chunk objects")
    p.add_argument("--consolidate-depth", type=int, default=8,
                   help="max catalogs on a resolution chain before a new ground truth")
    p.add_argument("--consolidate-ratio", type=float, default=0.5,
                   help="max cumulative diff payload as a fraction of the version size")


def _params(args) -> tuple[EncodingParams, ConsolidationPolicy]:
    try:
        params = scenario_params(args.min_size, args.target_size, args.max_size,
                                 args.segment_size, args.chunk_prefix)
        policy = ConsolidationPolicy(args.consolidate_depth, args.consolidate_ratio)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return params, policy


def _emit(args, payload: dict, text: str) -> None:
    print(json.dumps(payload, sort_keys=True) if args.json else text)


def _tree(store: ObjectStore, name) -> CatalogTree:
    tree = trees_in(store).get(name.base)
    if tree is None:
        raise DBCNError(f"no catalogs for {name} in {store.root}")
    return tree


def cmd_keygen(args) -> int:
    seed = None if args.seed is None else f"dbcn-keygen:{args.seed}".encode()
    key = KeyPair.generate(seed=seed)
    key.save(args.out)
    _emit(args, {"key_file": str(args.out), "public": key.public.hex()},
          f"wrote {args.out} (public key {key.public.hex()})")
    return EXIT_OK


def cmd_publish(args) -> int:
    params, policy = _params(args)
    name = parse_name(args.name)
    store = ObjectStore(args.store)
    pub = Publisher(store, name, args.variant, KeyPair.load(args.key), params, policy)
    parents = [int(p) for p in args.parents.split(",")] if args.parents else None
    result = pub.publish(Path(args.file).read_bytes(), parents=parents)
    _emit(
        args,
        {"version": result.version, "digest": result.digest.hex(),
         "ground_truth": result.ground_truth, "new_objects": result.new_objects},
        f"{result.digest.hex()} v{result.version}"
        + (" (ground truth)" if result.ground_truth else "")
        + f" {result.new_objects} new objects",
    )
    return EXIT_OK


def cmd_get(args) -> int:
    name = parse_name(args.name)
    local = ObjectStore(args.store)
    trusted = load_trusted_keys(args.trusted_keys)
    if args.remote_store:
        remote = ObjectStore(args.remote_store)
        tree = _tree(remote, name)
        version = tree.latest_version if args.version is None else args.version
        stats = fetch_version(remote, local, tree, version, trusted=trusted)
        extra = {"transfer": stats.__dict__}
    else:
        tree = _tree(local, name)
        version = tree.latest_version if args.version is None else args.version
        extra = {}
    tree = _tree(local, name)
    verified = verify_path(tree, version, trusted)
    data = reconstruct(tree, version, local.get_object)
    Path(args.out).write_bytes(data)
    text = f"v{version}: {len(data)} bytes -> {args.out}; {verified} catalogs verified"
    if extra:
        t = extra["transfer"]
        text += f"; {t['bytes_on_wire']} bytes on wire, {t['cache_hits']} cache hits"
    _emit(args, {"version": version, "bytes": len(data), "verified_catalogs": verified,
                 "out": str(args.out), **extra}, text)
    return EXIT_OK


def cmd_verify(args) -> int:
    name = parse_name(args.name)
    store = ObjectStore(args.store)
    tree = _tree(store, name)
    trusted = load_trusted_keys(args.trusted_keys)
    versions = sorted(tree.versions) if args.version is None else [args.version]
    rows, failed = [], False
    for v in versions:
        try:
            n = verify_path(tree, v, trusted)
            size = len(reconstruct(tree, v, store.get_object))
            rows.append({"version": v, "ok": True, "catalogs": n, "bytes": size})
        except DBCNError as exc:
            failed = True
            rows.append({"version": v, "ok": False, "error": str(exc)})
    text = "\n".join(
        f"v{r['version']}: ok ({r['catalogs']} catalogs, {r['bytes']} bytes)" if r["ok"]
        else f"v{r['version']}: FAILED {r['error']}"
        for r in rows
    )
    _emit(args, {"versions": rows}, text)
    return EXIT_DATA if failed else EXIT_OK


def cmd_bench(args) -> int:
    from .report import plot_transfer, summary_table

    params, policy = _params(args)
    try:
        scenario = SimScenario.load(args.scenario, params=params, policy=policy)
    except (OSError, ScenarioError) as exc:
        raise UsageError(str(exc)) from exc
    if args.seed is not None:
        scenario.seed = args.seed
    if args.variant == "all":
        variants = list(Variant)
    elif args.variant:
        variants = [Variant.parse(args.variant)]
    else:
        variants = [scenario.variant]

    stats, reports = [], []
    for variant in variants:
        scenario.variant = variant
        try:
            result = run_scenario(scenario)
        except ScenarioError as exc:
            raise UsageError(str(exc)) from exc
        stats.extend(result.stats)
        reports.append(result.report)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(stats, out / "stats.jsonl")
    write_csv(stats, out / "stats.csv")
    (out / "report.json").write_text(json.dumps(reports, indent=2) + "\n")
    figure = None
    if stats and not args.no_plot:
        figure = plot_transfer(stats, out / "transfer.png")
    _emit(args, {"reports": reports, "out": str(out),
                 "figure": None if figure is None else str(figure)},
          summary_table(stats) + f"\n\nwrote {out}/stats.jsonl, {out}/stats.csv"
          + (f", {figure}" if figure else ""))
    return EXIT_OK


def cmd_stats(args) -> int:
    from .report import plot_transfer, summary_table

    try:
        stats = read_jsonl(args.jsonl)
    except (OSError, ValueError, TypeError) as exc:
        raise UsageError(f"{args.jsonl}: {exc}") from exc
    if args.plot and stats:
        plot_transfer(stats, args.plot)
    wire = sum(s.bytes_on_wire for s in stats)
    full = sum(s.full_size for s in stats)
    _emit(args, {"rows": len(stats), "bytes_on_wire_total": wire, "full_size_total": full},
          summary_table(stats) + f"\n\ntotal {wire} bytes on wire for {full} bytes of versions")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dbcn", description=__doc__.splitlines()[0])
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="write a signing keypair file")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="derive the key deterministically")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("publish", help="publish a file as the next version")
    p.add_argument("file")
    p.add_argument("--name", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--variant", default="v5", choices=[v.label for v in Variant])
    p.add_argument("--parents", help="comma-separated parent versions, diff base last")
    _add_encoding_flags(p)
    p.set_defaults(func=cmd_publish)

    p = sub.add_parser("get", help="reconstruct a version to a file")
    p.add_argument("--name", required=True)
    p.add_argument("--version", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--store", required=True, help="local store (consumer cache)")
    p.add_argument("--remote-store", help="publisher store to fetch missing objects from")
    p.add_argument("--trusted-keys", required=True)
    p.set_defaults(func=cmd_get)

    p = sub.add_parser("verify", help="check signatures and reconstruct every version")
    p.add_argument("--name", required=True)
    p.add_argument("--version", type=int)
    p.add_argument("--store", required=True)
    p.add_argument("--trusted-keys", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run a transfer scenario")
    p.add_argument("scenario")
    p.add_argument("--out", default="bench-out")
    p.add_argument("--variant", choices=[v.label for v in Variant] + ["all"])
    p.add_argument("--seed", type=int)
    p.add_argument("--no-plot", action="store_true")
    _add_encoding_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", help="summarise a stats.jsonl file")
    p.add_argument("jsonl")
    p.add_argument("--plot", help="write a figure to this path")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    # allow --json after the subcommand as well
    argv = list(sys.argv[1:] if argv is None else argv)
    as_json = "--json" in argv
    argv = [a for a in argv if a != "--json"]
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.json = as_json
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dbcn: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DBCNError, OSError, ValueError) as exc:
        print(f"dbcn: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
