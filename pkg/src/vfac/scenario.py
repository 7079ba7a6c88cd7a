"""Declarative scenario scripts: enroll, encrypt, decrypt, assert.

A scenario file is a TOML document.  ``[scenario]`` names the run and
fixes the seed; ``[[authority]]`` and ``[[user]]`` tables declare the
population (users enroll at declaration time); ``[[step]]`` tables then
run in order.  Step actions:

* ``pool``    — precompute offline entries: ``attributes``, ``count``.
* ``encrypt`` — ``id`` (script-local handle), ``policy``, ``message``
  (UTF-8) or ``message_hex``.
* ``decrypt`` — ``user``, ``ciphertext`` (an encrypt handle), ``expect``
  (one of ``ok``, ``not-satisfied``, ``unknown-user``,
  ``verification-failed``, ``not-found``), optional ``expect_message``.
* ``revoke``  — ``user``.

All randomness flows from one seeded generator in declaration order, so
a fixed seed reproduces the same ciphertext ids and the same report,
byte for byte.  The runner speaks to both services through the same
client stack the CLI uses, over either transport.
"""

import tomli

from . import scheme
from .errors import (
    InvalidInput,
    NotFound,
    NotSatisfied,
    UnknownUser,
    VerificationFailed,
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

_OUTCOMES = {
    NotSatisfied: "not-satisfied",
    UnknownUser: "unknown-user",
    VerificationFailed: "verification-failed",
    NotFound: "not-found",
}
EXPECTATIONS = ("ok",) + tuple(_OUTCOMES.values())


def load(path: str) -> dict:
    with open(path, "rb") as f:
        try:
            doc = tomli.load(f)
        except tomli.TOMLDecodeError as exc:
            raise InvalidInput(f"scenario: {path} is not valid TOML: {exc}") from None
    _validate(doc)
    return doc


def _require(cond, msg):
    if not cond:
        raise InvalidInput(f"scenario: {msg}")


def _validate(doc: dict) -> None:
    head = doc.get("scenario", {})
    _require(isinstance(head, dict), "[scenario] must be a table")
    _require(isinstance(head.get("name", ""), str), "scenario name must be a string")
    _require(isinstance(head.get("seed", 0), int), "scenario seed must be an integer")

    auth_ids = set()
    for tbl in doc.get("authority", []):
        aid = tbl.get("id")
        _require(isinstance(aid, str) and aid, "every [[authority]] needs an id")
        _require(aid not in auth_ids, f"authority {aid!r} declared twice")
        auth_ids.add(aid)
    _require(auth_ids, "at least one [[authority]] is required")

    gids = set()
    for tbl in doc.get("user", []):
        gid = tbl.get("gid")
        _require(isinstance(gid, str) and gid, "every [[user]] needs a gid")
        _require(gid not in gids, f"user {gid!r} declared twice")
        gids.add(gid)
        attrs = tbl.get("attributes", [])
        _require(
            isinstance(attrs, list) and all(isinstance(a, str) for a in attrs),
            f"user {gid!r}: attributes must be a list of strings",
        )
        for attr in attrs:
            prefix = attr.split(":", 1)[0]
            _require(
                prefix in auth_ids,
                f"user {gid!r}: no declared authority issues {attr!r}",
            )

    handles = set()
    for i, step in enumerate(doc.get("step", [])):
        action = step.get("action")
        where = f"step {i + 1}"
        if action == "pool":
            attrs = step.get("attributes")
            _require(
                isinstance(attrs, list) and attrs,
                f"{where}: pool needs a non-empty attribute list",
            )
            _require(
                isinstance(step.get("count", 1), int) and step.get("count", 1) > 0,
                f"{where}: count must be a positive integer",
            )
        elif action == "encrypt":
            _require(isinstance(step.get("id"), str), f"{where}: encrypt needs an id")
            _require(step["id"] not in handles, f"{where}: duplicate id {step['id']!r}")
            handles.add(step["id"])
            _require(isinstance(step.get("policy"), str), f"{where}: encrypt needs a policy")
            has_text = isinstance(step.get("message"), str)
            has_hex = isinstance(step.get("message_hex"), str)
            _require(
                has_text != has_hex,
                f"{where}: encrypt needs exactly one of message / message_hex",
            )
            if has_hex:
                try:
                    bytes.fromhex(step["message_hex"])
                except ValueError:
                    raise InvalidInput(f"scenario: {where}: message_hex is not hex")
        elif action == "decrypt":
            _require(step.get("user") in gids, f"{where}: decrypt user not declared")
            _require(
                step.get("ciphertext") in handles,
                f"{where}: decrypt references unknown ciphertext handle",
            )
            _require(
                step.get("expect") in EXPECTATIONS,
                f"{where}: expect must be one of {', '.join(EXPECTATIONS)}",
            )
        elif action == "revoke":
            _require(step.get("user") in gids, f"{where}: revoke user not declared")
        else:
            _require(False, f"{where}: unknown action {action!r}")


def run(doc: dict, data_dir: str, transport: str = "inproc", seed: int | None = None) -> dict:
    """Execute a loaded scenario and return its report.

    The report's ``ok`` field is True iff every decrypt step matched its
    expectation.  ``seed`` overrides the file's seed when given.
    """

    head = doc.get("scenario", {})
    if seed is None:
        seed = head.get("seed", 0)
    rng = Rng(seed)
    gp = scheme.global_setup(128, rng)

    servers = []

    def expose(service):
        if transport == "inproc":
            return InprocEndpoint(service)
        if transport == "tcp":
            server = TcpServer(service).start()
            servers.append(server)
            return server.endpoint()
        raise InvalidInput(f"unknown transport {transport!r}")

    report = {
        "name": head.get("name", ""),
        "seed": seed,
        "transport": transport,
        "authorities": [],
        "users": {},
        "steps": [],
        "ok": True,
    }

    cloud = CloudService(gp, f"{data_dir}/cs")
    try:
        cs_ep = expose(cloud)
        cs = CloudClient(cs_ep)

        authorities = {}
        for tbl in doc.get("authority", []):
            aid = tbl["id"]
            ak = scheme.authority_setup(gp, aid, rng)
            authorities[aid] = AuthorityClient(expose(AuthorityService(gp, ak, cs_ep, rng)))
            report["authorities"].append(aid)

        users = {}
        for tbl in doc.get("user", []):
            gid = tbl["gid"]
            du = DataUser(gp, gid, cs, rng)
            by_auth = {}
            for attr in tbl.get("attributes", []):
                by_auth.setdefault(attr.split(":", 1)[0], []).append(attr)
            for aid in sorted(by_auth):
                du.enroll(authorities[aid], by_auth[aid])
            users[gid] = du
            report["users"][gid] = sorted(tbl.get("attributes", []))

        pks = {aid: client.get_public_key() for aid, client in authorities.items()}
        owner = DataOwner(gp, pks, cs, f"{data_dir}/owner", rng)

        handles = {}
        for step in doc.get("step", []):
            report["steps"].append(_run_step(step, owner, users, cs, handles))
        report["ok"] = all(
            entry.get("matched", True) for entry in report["steps"]
        )
    finally:
        for server in servers:
            server.stop()
        cloud.close()
    return report


def _run_step(step: dict, owner: DataOwner, users: dict, cs: CloudClient, handles: dict) -> dict:
    action = step["action"]
    if action == "pool":
        attrs = sorted(step["attributes"])
        count = step.get("count", 1)
        owner.precompute_pool(attrs, count)
        return {"action": "pool", "attributes": attrs, "count": count}

    if action == "encrypt":
        if "message" in step:
            message = step["message"].encode()
        else:
            message = bytes.fromhex(step["message_hex"])
        ct_id = owner.encrypt(message, step["policy"])
        handles[step["id"]] = ct_id
        return {
            "action": "encrypt",
            "id": step["id"],
            "policy": step["policy"],
            "ct_id": ct_id,
        }

    if action == "decrypt":
        du = users[step["user"]]
        ct_id = handles[step["ciphertext"]]
        entry = {
            "action": "decrypt",
            "user": step["user"],
            "ciphertext": step["ciphertext"],
            "expected": step["expect"],
        }
        try:
            message = du.decrypt(ct_id)
        except tuple(_OUTCOMES) as exc:
            entry["outcome"] = _OUTCOMES[type(exc)]
        else:
            entry["outcome"] = "ok"
            try:
                entry["message"] = message.decode()
            except UnicodeDecodeError:
                entry["message_hex"] = message.hex()
        entry["matched"] = entry["outcome"] == entry["expected"]
        if entry["matched"] and entry["outcome"] == "ok" and "expect_message" in step:
            entry["matched"] = message == step["expect_message"].encode()
        return entry

    if action == "revoke":
        cs.revoke(step["user"])
        return {"action": "revoke", "user": step["user"]}

    raise InvalidInput(f"unknown action {action!r}")  # unreachable after _validate
