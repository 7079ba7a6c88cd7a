"""Durable state for the cloud service.

Two stores live under one data directory:

  kt.log / kt.snapshot   the transformation-key table, as an append-only
                         log of registration/revocation records plus a
                         periodically rewritten snapshot
  ct/<hex>               ciphertexts, one immutable file per entry, named
                         by the digest of their canonical bytes

Each log record is ``u32 length | payload | u32 crc32(payload)`` and each
payload carries a monotone sequence number, so recovery can replay the
log on top of a snapshot and stop cleanly at a torn tail: the table a
restart reconstructs is always the state as of some record boundary —
one whole operation happened or it did not.

Crash points: every method that commits state calls ``self.crash_hook``
(when set) with a point name just before and just after its write
syscalls.  Fault-injection tests raise from the hook and then reopen the
directory to observe what a real crash would have left behind.
"""

import os
import zlib

from .encoding import Reader, Writer
from .errors import DecodeError
from .scheme import CloudUserKey, CskEntry, KeyList, UserPublicKey

OP_REGISTER = 1
OP_REVOKE = 2

_SNAP_VERSION = 1


def _crc(payload: bytes) -> int:
    return zlib.crc32(payload) & 0xFFFFFFFF


class KeyTableStore:
    """KeyList with write-ahead durability.

    Mutations append one record (fsynced) before touching the in-memory
    table; ``snapshot()`` folds the log into kt.snapshot via an atomic
    rename.  ``kt`` is the live table; treat it as read-only outside this
    class.
    """

    def __init__(self, data_dir: str):
        self.dir = data_dir
        os.makedirs(data_dir, exist_ok=True)
        self.log_path = os.path.join(data_dir, "kt.log")
        self.snap_path = os.path.join(data_dir, "kt.snapshot")
        self.crash_hook = None
        self.kt = KeyList()
        self.seq = 0
        self._recover()
        # unbuffered: one record is one write syscall, so a crash between
        # records never leaves half-flushed library buffers behind
        self._log = open(self.log_path, "ab", buffering=0)

    # -- crash plumbing ----------------------------------------------------

    def _crash(self, point: str) -> None:
        if self.crash_hook is not None:
            self.crash_hook(point)

    def close(self) -> None:
        if self._log is not None:
            self._log.close()
            self._log = None

    # -- recovery ----------------------------------------------------------

    def _recover(self) -> None:
        snap_seq = 0
        if os.path.exists(self.snap_path):
            snap_seq = self._load_snapshot()
        self.seq = snap_seq
        if not os.path.exists(self.log_path):
            return
        with open(self.log_path, "rb") as f:
            data = f.read()
        good_end = 0
        offset = 0
        while offset + 4 <= len(data):
            length = int.from_bytes(data[offset : offset + 4], "big")
            end = offset + 4 + length + 4
            if end > len(data):
                break  # torn tail: the record never finished committing
            payload = data[offset + 4 : offset + 4 + length]
            stored_crc = int.from_bytes(data[end - 4 : end], "big")
            if _crc(payload) != stored_crc:
                break
            self._apply_record(payload, snap_seq)
            good_end = end
            offset = end
        if good_end != len(data):
            # drop the torn bytes so the next append starts at a boundary
            with open(self.log_path, "ab") as f:
                f.truncate(good_end)

    def _load_snapshot(self) -> int:
        with open(self.snap_path, "rb") as f:
            data = f.read()
        if len(data) < 4 or _crc(data[:-4]) != int.from_bytes(data[-4:], "big"):
            raise DecodeError("key table snapshot is corrupt")
        r = Reader(data[:-4])
        if r.u8() != _SNAP_VERSION:
            raise DecodeError("unknown snapshot format version")
        seq = r.u64()
        self.kt = KeyList.from_bytes(r.blob())
        r.finish()
        return seq

    def _apply_record(self, payload: bytes, snap_seq: int) -> None:
        r = Reader(payload)
        seq = r.u64()
        op = r.u8()
        if op == OP_REGISTER:
            upk = UserPublicKey.from_bytes(r.blob())
            entries = {}
            for _ in range(r.u32()):
                attr = r.text()
                entries[attr] = CskEntry(k1=r.source(), k2=r.source())
            r.finish()
            if seq > snap_seq:
                rec = self.kt._users.setdefault(
                    upk.gid, CloudUserKey(gid=upk.gid, upk=upk)
                )
                rec.entries.update(entries)
        elif op == OP_REVOKE:
            gid = r.text()
            r.finish()
            if seq > snap_seq:
                self.kt._users.pop(gid, None)
        else:
            raise DecodeError(f"unknown key table log op {op}")
        self.seq = max(self.seq, seq)

    # -- mutations ---------------------------------------------------------

    def _append(self, body_writer: Writer) -> None:
        payload = body_writer.getvalue()
        record = len(payload).to_bytes(4, "big") + payload + _crc(payload).to_bytes(4, "big")
        self._crash("log:before_write")
        self._log.write(record)
        self._crash("log:after_write")
        os.fsync(self._log.fileno())
        self._crash("log:after_fsync")

    def register(self, gid: str, upk: UserPublicKey, parts: dict[str, CskEntry]) -> None:
        """Durably add key parts for one user (one atomic record)."""
        from .scheme import register_key  # validation lives with the scheme

        # validate against a copy of the affected record first, so a
        # rejected request leaves neither a log record nor table changes
        probe = KeyList()
        held = self.kt._users.get(gid)
        if held is not None:
            probe._users[gid] = CloudUserKey(
                gid=held.gid, upk=held.upk, entries=dict(held.entries)
            )
        register_key(probe, gid, upk, parts)

        w = Writer().u64(self.seq + 1).u8(OP_REGISTER)
        w.blob(upk.to_bytes()).u32(len(parts))
        for attr in sorted(parts):
            w.text(attr).source(parts[attr].k1).source(parts[attr].k2)
        self._append(w)
        self.seq += 1
        register_key(self.kt, gid, upk, parts)

    def revoke(self, gid: str) -> None:
        w = Writer().u64(self.seq + 1).u8(OP_REVOKE).text(gid)
        self._append(w)
        self.seq += 1
        self.kt._users.pop(gid, None)

    # -- snapshotting --------------------------------------------------------

    def snapshot(self) -> None:
        """Fold the current table into kt.snapshot and truncate the log."""
        w = Writer().u8(_SNAP_VERSION).u64(self.seq).blob(self.kt.to_bytes())
        payload = w.getvalue()
        tmp = self.snap_path + ".tmp"
        self._crash("snapshot:before_tmp")
        with open(tmp, "wb") as f:
            f.write(payload + _crc(payload).to_bytes(4, "big"))
            f.flush()
            os.fsync(f.fileno())
        self._crash("snapshot:after_tmp")
        os.replace(tmp, self.snap_path)
        self._crash("snapshot:after_rename")
        self._log.truncate(0)
        self._log.seek(0)
        self._crash("snapshot:after_truncate")


class CiphertextStore:
    """Content-addressed, immutable ciphertext files under ct/."""

    def __init__(self, data_dir: str):
        self.dir = os.path.join(data_dir, "ct")
        os.makedirs(self.dir, exist_ok=True)
        self.crash_hook = None
        # a crash can strand a temp file; it holds no committed state
        for name in os.listdir(self.dir):
            if name.endswith(".tmp"):
                os.unlink(os.path.join(self.dir, name))

    def _crash(self, point: str) -> None:
        if self.crash_hook is not None:
            self.crash_hook(point)

    def _path(self, ct_id: str) -> str:
        if not (len(ct_id) == 64 and all(c in "0123456789abcdef" for c in ct_id)):
            raise DecodeError(f"malformed ciphertext id {ct_id!r}")
        return os.path.join(self.dir, ct_id)

    def put(self, ct_bytes: bytes) -> str:
        """Store canonical ciphertext bytes; returns the content address.

        Re-storing identical bytes is a no-op (same address, same file),
        which is what makes crash-retry loops safe.
        """
        import hashlib

        ct_id = hashlib.sha256(ct_bytes).hexdigest()
        path = self._path(ct_id)
        if os.path.exists(path):
            return ct_id
        tmp = path + ".tmp"
        self._crash("ct:before_tmp")
        with open(tmp, "wb") as f:
            f.write(ct_bytes)
            f.flush()
            os.fsync(f.fileno())
        self._crash("ct:after_tmp")
        os.replace(tmp, path)
        self._crash("ct:after_rename")
        return ct_id

    def get(self, ct_id: str) -> bytes | None:
        path = self._path(ct_id)
        if not os.path.exists(path):
            return None
        with open(path, "rb") as f:
            return f.read()

    def ids(self) -> list[str]:
        return sorted(n for n in os.listdir(self.dir) if not n.endswith(".tmp"))
