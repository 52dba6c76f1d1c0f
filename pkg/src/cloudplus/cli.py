"""Operator command line: every subcommand is a thin adapter over the library.

Exit codes: 0 ok, 2 access denied, 3 malformed input, 4 audit verdict guilty,
5 store/internal error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from datetime import date, datetime, timezone
from pathlib import Path

from filelock import FileLock

from . import audit, bench, cloud, envelope
from .errors import (
    AccessDenied,
    CloudPlusError,
    DateBeforeGenesis,
    EmptyAttributeSet,
    FormatError,
    IntegrityFailure,
    LifetimeExceeded,
    ParseError,
)
from .group import make_rng
from .scheme import SecretKey
from .timecode import EpochConfig, epoch_at, utc_now

EXIT_OK = 0
EXIT_DENIED = 2
EXIT_MALFORMED = 3
EXIT_GUILTY = 4
EXIT_INTERNAL = 5

LOCK_NAME = ".lock"

log = logging.getLogger("cloudplus")


class UsageError(Exception):
    pass


def _parse_now(text):
    if text is None:
        return None
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --now value {text!r}; use YYYY-MM-DD[THH:MM:SS]") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def _parse_date(text):
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad date {text!r}; use YYYY-MM-DD") from None


def _attr_list(text):
    items = [a.strip() for a in text.split(",") if a.strip()]
    if not items:
        raise argparse.ArgumentTypeError("attribute list is empty")
    return items


def _write_secret(path: Path, data: bytes) -> None:
    cloud.atomic_write(path, data, mode=0o600)


def _read_file(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None


class Context:
    def __init__(self, args):
        self.args = args
        self.store_dir = Path(args.store) if args.store else None
        self.now = args.now if args.now is not None else utc_now()
        self.rng = make_rng(args.seed)

    def need_store(self) -> Path:
        if self.store_dir is None:
            raise UsageError("--store is required")
        if not (self.store_dir / cloud.PP_FILE).exists():
            raise UsageError(f"{self.store_dir} is not an initialised store")
        return self.store_dir

    def open(self):
        return cloud.open_store(self.need_store(), self.rng)

    def load_key(self, path, pp) -> SecretKey:
        return SecretKey.from_bytes(_read_file(path), pp.group)


def cmd_setup(ctx: Context):
    a = ctx.args
    if ctx.store_dir is None:
        raise UsageError("--store is required")
    cfg = EpochConfig(a.genesis, a.lifetime_epochs)
    universe = _attr_list(a.universe) if a.universe else None
    ctx.store_dir.mkdir(parents=True, exist_ok=True)
    with FileLock(str(ctx.store_dir / LOCK_NAME)):
        _, pp, _ = cloud.sta_init(ctx.store_dir, "toy", universe, cfg, ctx.rng)
    print(f"store {ctx.store_dir} ready: genesis {cfg.genesis.isoformat()}, "
          f"lifetime {cfg.lifetime} epochs, tag width {cfg.width} bits")
    return EXIT_OK


def _emit_key(ctx, sk, out):
    path = Path(out) if out else Path(f"{sk.id}.key")
    _write_secret(path, sk.to_bytes())
    print(f"{sk.id} expires at epoch {sk.ten.epoch}; key written to {path}")


def cmd_register(ctx: Context):
    a = ctx.args
    with FileLock(str(ctx.need_store() / LOCK_NAME)):
        _, auth = ctx.open()
        sk = cloud.register_user(auth, a.id, a.attrs, a.validity, ctx.now)
    _emit_key(ctx, sk, a.out)
    return EXIT_OK


def cmd_reissue(ctx: Context):
    a = ctx.args
    with FileLock(str(ctx.need_store() / LOCK_NAME)):
        _, auth = ctx.open()
        sk = cloud.reissue(auth, a.id, a.validity, ctx.now)
    _emit_key(ctx, sk, a.out)
    return EXIT_OK


def cmd_outsource(ctx: Context):
    a = ctx.args
    data = _read_file(a.file)
    with FileLock(str(ctx.need_store() / LOCK_NAME)):
        store = cloud.CloudStore(ctx.store_dir, ctx.rng)
        env = envelope.outsource_encrypt(
            store.pp, data, a.policy, store.rl, ctx.rng,
            filename_hint=Path(a.file).name, created_epoch=epoch_at(ctx.now, store.pp.epoch_cfg),
        )
        oid = cloud.store_object(store, env)
    print(oid)
    return EXIT_OK


def cmd_access(ctx: Context):
    a = ctx.args
    store = cloud.CloudStore(ctx.need_store(), ctx.rng)
    sk = ctx.load_key(a.key, store.pp)
    env = cloud.fetch_object(store, a.object)
    data = envelope.access_decrypt(store.pp, sk, env, ctx.now.date(), ctx.now.time())
    if a.out == "-":
        sys.stdout.buffer.write(data)
    else:
        Path(a.out).write_bytes(data)
    return EXIT_OK


def _trace(ctx: Context, leaked: bytes):
    store, auth = ctx.open()
    panel = audit.load_panel(ctx.store_dir, ctx.args.auditors)
    epoch = epoch_at(ctx.now, store.pp.epoch_cfg)
    reports = [audit.run_trace(aud, leaked, store.rl, epoch) for aud in panel]
    outcomes = [r.outcome for r in reports]
    winner = max(set(outcomes), key=outcomes.count)
    return store, auth, next(r for r in reports if r.outcome == winner)


def cmd_trace(ctx: Context):
    leaked = _read_file(ctx.args.leaked)
    with FileLock(str(ctx.need_store() / LOCK_NAME)):
        store, auth, rep = _trace(ctx, leaked)
        if rep.outcome == audit.NO_TRACE_REQ:
            print(audit.NO_TRACE_REQ)
            return EXIT_OK
        if rep.outcome == audit.UNKNOWN_KEY:
            print(audit.UNKNOWN_KEY, file=sys.stderr)
            return EXIT_MALFORMED
        version = cloud.revoke_and_update(store, auth, rep.identity, ctx.now, tag=rep.tag)
    print(f"traced {rep.identity}")
    print(f"revocation list version {version}")
    return EXIT_OK


def cmd_revoke(ctx: Context):
    with FileLock(str(ctx.need_store() / LOCK_NAME)):
        store, auth = ctx.open()
        version = cloud.revoke_and_update(store, auth, ctx.args.id, ctx.now)
    print(f"revoked {ctx.args.id}; revocation list version {version}")
    return EXIT_OK


def cmd_audit(ctx: Context):
    a = ctx.args
    root = ctx.need_store()
    panel = audit.load_panel(root, a.auditors)
    pp = panel[0].pp
    accused = ctx.load_key(a.accused, pp)
    try:
        leaked = SecretKey.from_bytes(_read_file(a.leaked), pp.group)
    except FormatError:
        leaked = None  # malformed evidence: every auditor returns innocent
    report = audit.run_multi_audit(panel, accused, leaked)
    print(report.render())
    return EXIT_GUILTY if report.majority == 1 else EXIT_OK


def cmd_bench(ctx: Context):
    a = ctx.args
    rows = bench.run_bench(a.max_attrs, a.step, trials=a.trials, rng=ctx.rng)
    text = bench.write_csv(rows, None if a.out == "-" else a.out)
    if a.out == "-":
        sys.stdout.write(text)
    else:
        print(f"wrote {len(rows)} rows to {a.out}")
    return EXIT_OK


def cmd_bench_kernels(ctx: Context):
    sizes = [int(s) for s in ctx.args.sizes.split(",")]
    results = bench.run_kernel_bench(sizes, trials=ctx.args.trials)
    by = {(r["impl"], r["kernel"], r["size"]): r["median_ns"] for r in results}
    print(f"{'kernel':<12}{'size':>6}{'python_ns':>14}{'cython_ns':>14}{'speedup':>10}")
    for (impl, kernel, size), ns in sorted(by.items()):
        if impl != "python":
            continue
        c = by.get(("cython", kernel, size))
        speed = f"{ns / c:.1f}x" if c else "n/a"
        print(f"{kernel:<12}{size:>6}{ns:>14}{(c if c else '-'):>14}{speed:>10}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--store", help="store directory")
    common.add_argument("--now", type=_parse_now, default=None,
                        help="override the clock (YYYY-MM-DD[THH:MM:SS], UTC)")
    common.add_argument("--seed", type=int, default=None, help="seed the rng (reproducible runs)")
    common.add_argument("--auditors", type=int, default=3, help="auditor panel size (odd, >= 3)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="cloudplus", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("setup", parents=[common], help="initialise a store (authority setup)")
    s.add_argument("--lifetime-epochs", type=int, required=True)
    s.add_argument("--genesis", type=_parse_date, required=True)
    s.add_argument("--universe", help="optional comma-separated attribute universe")
    s.set_defaults(func=cmd_setup)

    s = sub.add_parser("register", parents=[common], help="issue a key to a new user")
    s.add_argument("--id", required=True)
    s.add_argument("--attrs", type=_attr_list, required=True)
    s.add_argument("--validity", type=int, required=True, help="validity in epochs (days)")
    s.add_argument("--out", help="key file (default ./ID.key)")
    s.set_defaults(func=cmd_register)

    s = sub.add_parser("outsource", parents=[common], help="encrypt a file and store it")
    s.add_argument("--file", required=True)
    s.add_argument("--policy", required=True)
    s.set_defaults(func=cmd_outsource)

    s = sub.add_parser("access", parents=[common], help="fetch and decrypt a stored file")
    s.add_argument("--key", required=True)
    s.add_argument("--object", required=True)
    s.add_argument("--out", required=True, help="output file, or - for stdout")
    s.set_defaults(func=cmd_access)

    s = sub.add_parser("trace", parents=[common], help="trace a leaked key and revoke its owner")
    s.add_argument("--leaked", required=True)
    s.set_defaults(func=cmd_trace)

    s = sub.add_parser("revoke", parents=[common], help="revoke a user and refresh all objects")
    s.add_argument("--id", required=True)
    s.set_defaults(func=cmd_revoke)

    s = sub.add_parser("audit", parents=[common], help="multi-auditor guilt check")
    s.add_argument("--accused", required=True)
    s.add_argument("--leaked", required=True)
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("reissue", parents=[common], help="issue a fresh key to a known user")
    s.add_argument("--id", required=True)
    s.add_argument("--validity", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_reissue)

    s = sub.add_parser("bench", parents=[common], help="ATR vs plain CP-ABE timing grid")
    s.add_argument("--max-attrs", type=int, required=True)
    s.add_argument("--step", type=int, required=True)
    s.add_argument("--out", required=True, help="CSV path, or - for stdout")
    s.add_argument("--trials", type=int, default=25)
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("bench-kernels", parents=[common], help="compiled vs pure-Python kernels")
    s.add_argument("--sizes", default="10,50,100")
    s.add_argument("--trials", type=int, default=11)
    s.set_defaults(func=cmd_bench_kernels)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(Context(args))
    except AccessDenied as exc:
        print(exc.reason, file=sys.stderr)
        log.info("%s", exc)
        return EXIT_DENIED
    except IntegrityFailure as exc:
        print(f"IntegrityFailure: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except (FormatError, ParseError, UsageError, LifetimeExceeded, DateBeforeGenesis,
            EmptyAttributeSet, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except (CloudPlusError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
