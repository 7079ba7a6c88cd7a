"""Operator CLI: one desk-scale deployment under a state directory.

Every command works against ``--data-dir`` (default ``./vfac-data``),
which holds the global parameters, authority keys, user keys, the owner
pool, and the cloud store.  The services run inside the invocation —
``--transport tcp`` routes every request through real loopback sockets,
``inproc`` through the same frame codec without them — so state on disk
is the only thing that persists between commands.

Exit codes: 0 success, 2 policy not satisfied, 3 verification failed,
4 unknown (revoked or never-registered) user, 1 anything else.
"""

import json
import pathlib
import secrets
import sys
import tempfile

import click

from . import bench as bench_mod
from . import scenario as scenario_mod
from . import scheme
from .errors import (
    InvalidInput,
    NotSatisfied,
    UnknownUser,
    VerificationFailed,
    VfacError,
)
from .group import Rng
from .services import (
    AuthorityClient,
    AuthorityService,
    CloudClient,
    CloudService,
    DataOwner,
    DataUser,
    InprocEndpoint,
    TcpServer,
)

EXIT_NOT_SATISFIED = 2
EXIT_VERIFICATION_FAILED = 3
EXIT_UNKNOWN_USER = 4


class Desk:
    """Loads the state directory and wires the services for one command."""

    def __init__(self, data_dir, transport, seed):
        self.dir = data_dir
        self.transport = transport
        self.seed = seed  # None means "not pinned by the operator"
        self.rng = Rng(seed if seed is not None else secrets.randbits(63))
        self._servers = []
        self._cloud = None

    # -- paths ----------------------------------------------------------
    def _gp_path(self):
        return self.dir / "gp.bin"

    def _authority_path(self, aid):
        return self.dir / "authorities" / f"{aid}.key"

    def _user_path(self, gid, part):
        return self.dir / "users" / f"{gid}.{part}"

    # -- state ----------------------------------------------------------
    def load_gp(self):
        path = self._gp_path()
        if not path.exists():
            raise InvalidInput(f"no global parameters at {path}; run `vfac setup` first")
        self.gp = scheme.GlobalParams.from_bytes(path.read_bytes())
        return self.gp

    def init_gp(self):
        path = self._gp_path()
        if path.exists():
            raise InvalidInput(f"{path} already exists")
        path.parent.mkdir(parents=True, exist_ok=True)
        self.gp = scheme.global_setup(128, self.rng)
        path.write_bytes(self.gp.to_bytes())
        return self.gp

    def authority_ids(self):
        adir = self.dir / "authorities"
        return sorted(p.stem for p in adir.glob("*.key")) if adir.exists() else []

    def load_authorities(self):
        return {
            aid: scheme.AuthorityKeys.from_bytes(
                self.gp, self._authority_path(aid).read_bytes()
            )
            for aid in self.authority_ids()
        }

    def save_authority(self, ak):
        path = self._authority_path(ak.id)
        if path.exists():
            raise InvalidInput(f"authority {ak.id!r} already exists")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(ak.to_bytes())

    def load_user(self, gid):
        key = self._user_path(gid, "key")
        if not key.exists():
            raise InvalidInput(f"no user {gid!r}; run `vfac user enroll` first")
        usk = scheme.UserKeys.from_bytes(key.read_bytes())
        upk = scheme.UserPublicKey.from_bytes(self._user_path(gid, "upk").read_bytes())
        return upk, usk

    def save_user(self, upk, usk):
        self._user_path(usk.gid, "key").parent.mkdir(parents=True, exist_ok=True)
        self._user_path(usk.gid, "key").write_bytes(usk.to_bytes())
        self._user_path(usk.gid, "upk").write_bytes(upk.to_bytes())

    # -- services -------------------------------------------------------
    def _expose(self, service):
        if self.transport == "inproc":
            return InprocEndpoint(service)
        server = TcpServer(service).start()
        self._servers.append(server)
        return server.endpoint()

    def cloud(self):
        if self._cloud is None:
            self._cloud = CloudService(self.gp, str(self.dir / "cs"))
            self._cs_ep = self._expose(self._cloud)
        return CloudClient(self._cs_ep)

    def authority_clients(self):
        self.cloud()  # ensures the cloud endpoint exists for registration
        out = {}
        for aid, ak in self.load_authorities().items():
            out[aid] = AuthorityClient(
                self._expose(AuthorityService(self.gp, ak, self._cs_ep, self.rng))
            )
        return out

    def owner(self):
        pks = {aid: ak.public for aid, ak in self.load_authorities().items()}
        return DataOwner(self.gp, pks, self.cloud(), str(self.dir / "owner"), self.rng)

    def close(self):
        for server in self._servers:
            server.stop()
        if self._cloud is not None:
            self._cloud.close()


pass_desk = click.make_pass_decorator(Desk)


def _emit(ctx, data, table_lines):
    if ctx.obj.report == "json":
        click.echo(json.dumps(data, indent=2, sort_keys=True))
    else:
        for line in table_lines:
            click.echo(line)


@click.group()
@click.option("--data-dir", type=click.Path(path_type=pathlib.Path),
              default="vfac-data", show_default=True,
              help="State directory shared by all commands.")
@click.option("--seed", type=int, default=None,
              help="Seed for all randomness; omit for a fresh random seed.")
@click.option("--transport", type=click.Choice(["inproc", "tcp"]), default="inproc",
              show_default=True, help="How clients reach the services.")
@click.option("--report", type=click.Choice(["table", "json"]), default="table",
              show_default=True, help="Output format for reporting commands.")
@click.pass_context
def main(ctx, data_dir, seed, transport, report):
    """Attribute-based encryption with outsourced, verifiable decryption."""

    desk = Desk(data_dir, transport, seed)
    desk.report = report
    ctx.obj = desk
    ctx.call_on_close(desk.close)


def _run(ctx, fn):
    """Run a command body, mapping outcome classes to exit codes."""

    try:
        fn()
    except NotSatisfied as exc:
        click.echo(f"not satisfied: {exc}", err=True)
        sys.exit(EXIT_NOT_SATISFIED)
    except VerificationFailed as exc:
        click.echo(f"verification failed: {exc}", err=True)
        sys.exit(EXIT_VERIFICATION_FAILED)
    except UnknownUser as exc:
        click.echo(f"unknown user: {exc}", err=True)
        sys.exit(EXIT_UNKNOWN_USER)
    except (VfacError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.pass_context
def setup(ctx):
    """Create global parameters in the state directory."""

    def body():
        ctx.obj.init_gp()
        _emit(ctx, {"data_dir": str(ctx.obj.dir)},
              [f"initialized {ctx.obj._gp_path()}"])

    _run(ctx, body)


@main.group()
def authority():
    """Manage attribute authorities."""


@authority.command("new")
@click.argument("authority_id")
@click.pass_context
def authority_new(ctx, authority_id):
    """Create an authority that issues AUTHORITY_ID-prefixed attributes."""

    def body():
        desk = ctx.obj
        desk.load_gp()
        ak = scheme.authority_setup(desk.gp, authority_id, desk.rng)
        desk.save_authority(ak)
        _emit(ctx, {"authority": authority_id},
              [f"authority {authority_id!r} created"])

    _run(ctx, body)


@main.group()
def user():
    """Manage data users."""


@user.command("enroll")
@click.argument("gid")
@click.argument("attrs", nargs=-1, required=True)
@click.pass_context
def user_enroll(ctx, gid, attrs):
    """Issue keys for ATTRS to user GID, creating the user if needed.

    Attribute names are authority-prefixed, e.g. ``hospital:doctor``;
    each batch goes to the authority named by its prefix.
    """

    def body():
        desk = ctx.obj
        desk.load_gp()
        clients = desk.authority_clients()
        key_path = desk._user_path(gid, "key")
        if key_path.exists():
            du = DataUser.restore(desk.gp, desk.cloud(), *desk.load_user(gid))
        else:
            du = DataUser(desk.gp, gid, desk.cloud(), desk.rng)
        by_auth = {}
        for attr in attrs:
            by_auth.setdefault(attr.split(":", 1)[0], []).append(attr)
        for aid in sorted(by_auth):
            if aid not in clients:
                raise InvalidInput(f"no authority {aid!r} in {desk.dir / 'authorities'}")
            du.enroll(clients[aid], by_auth[aid])
        desk.save_user(du.upk, du.usk)
        _emit(ctx, {"gid": gid, "attributes": sorted(du.usk.k3)},
              [f"user {gid!r} holds: " + " ".join(sorted(du.usk.k3))])

    _run(ctx, body)


@main.group()
def pool():
    """Manage the owner's precomputed encryption pool."""


@pool.command("fill")
@click.argument("attrs", nargs=-1, required=True)
@click.option("--count", type=click.IntRange(min=1), default=1, show_default=True,
              help="Entries to precompute per attribute.")
@click.pass_context
def pool_fill(ctx, attrs, count):
    """Precompute offline entries for ATTRS before any message exists."""

    def body():
        desk = ctx.obj
        desk.load_gp()
        owner = desk.owner()
        owner.precompute_pool(sorted(set(attrs)), count)
        levels = {attr: owner.pool.available(attr) for attr in sorted(set(attrs))}
        _emit(ctx, {"pool": levels},
              [f"{attr}: {n} ready" for attr, n in levels.items()])

    _run(ctx, body)


@main.command()
@click.option("--policy", required=True, help='e.g. "(a:x AND b:y) OR a:z"')
@click.option("--message", default=None, help="UTF-8 plaintext.")
@click.option("--message-hex", default=None, help="Plaintext as hex.")
@click.pass_context
def encrypt(ctx, policy, message, message_hex):
    """Encrypt under POLICY using pool entries; prints the ciphertext id."""

    def body():
        if (message is None) == (message_hex is None):
            raise InvalidInput("pass exactly one of --message / --message-hex")
        data = message.encode() if message is not None else bytes.fromhex(message_hex)
        desk = ctx.obj
        desk.load_gp()
        ct_id = desk.owner().encrypt(data, policy)
        _emit(ctx, {"ct_id": ct_id, "policy": policy}, [ct_id])

    _run(ctx, body)


@main.command()
@click.argument("ct_id")
@click.option("--user", "gid", required=True, help="Decrypting user's gid.")
@click.pass_context
def decrypt(ctx, ct_id, gid):
    """Fetch, outsource, verify, and decrypt ciphertext CT_ID as --user."""

    def body():
        desk = ctx.obj
        desk.load_gp()
        du = DataUser.restore(desk.gp, desk.cloud(), *desk.load_user(gid))
        data = du.decrypt(ct_id)
        try:
            text = data.decode()
        except UnicodeDecodeError:
            _emit(ctx, {"message_hex": data.hex()}, [data.hex()])
        else:
            _emit(ctx, {"message": text}, [text])

    _run(ctx, body)


@main.command()
@click.argument("gid")
@click.pass_context
def revoke(ctx, gid):
    """Delete GID's cloud key; later decryption requests fail for them."""

    def body():
        desk = ctx.obj
        desk.load_gp()
        desk.cloud().revoke(gid)
        _emit(ctx, {"revoked": gid}, [f"user {gid!r} revoked"])

    _run(ctx, body)


@main.command()
@click.option("--rows", type=click.IntRange(min=1), default=10, show_default=True,
              help="Policy rows (and attributes) in the benchmark workload.")
@click.pass_context
def bench(ctx, rows):
    """Measure operation counts and sizes; compare against advertised costs."""

    def body():
        seed = ctx.obj.seed if ctx.obj.seed is not None else 1
        counters, sizes, meta = bench_mod.run_bench(rows=rows, seed=seed)
        text, report = bench_mod.emit_comparison_table(counters, sizes, meta)
        if ctx.obj.report == "json":
            click.echo(bench_mod.render_json(report))
        else:
            click.echo(text)

    _run(ctx, body)


@main.group()
def scenario():
    """Run declarative scripts."""


@scenario.command("run")
@click.argument("file", type=click.Path(dir_okay=False))
@click.pass_context
def scenario_run(ctx, file):
    """Execute a scenario FILE and check its expected outcomes."""

    def body():
        desk = ctx.obj
        doc = scenario_mod.load(file)
        # each run gets a throwaway state directory: scripts are
        # self-contained, and the CLI-level seed overrides the file's
        desk.dir.mkdir(parents=True, exist_ok=True)
        with tempfile.TemporaryDirectory(prefix="scenario-", dir=desk.dir) as tmp:
            report = scenario_mod.run(
                doc, tmp, transport=desk.transport, seed=desk.seed
            )
        if ctx.obj.report == "json":
            click.echo(json.dumps(report, indent=2, sort_keys=True))
        else:
            click.echo(f"scenario: {report['name']}  (seed {report['seed']}, "
                       f"{report['transport']})")
            for entry in report["steps"]:
                if entry["action"] == "decrypt":
                    mark = "ok" if entry["matched"] else "MISMATCH"
                    click.echo(
                        f"  decrypt {entry['user']:12} expected "
                        f"{entry['expected']:20} got {entry['outcome']:20} {mark}"
                    )
                elif entry["action"] == "encrypt":
                    click.echo(f"  encrypt {entry['id']!r} -> {entry['ct_id'][:16]}…")
                else:
                    click.echo(f"  {entry['action']}")
            click.echo("all expectations met" if report["ok"] else "EXPECTATION MISMATCH")
        if not report["ok"]:
            sys.exit(1)

    _run(ctx, body)


if __name__ == "__main__":
    main()
