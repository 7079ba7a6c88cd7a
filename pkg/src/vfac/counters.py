"""Operation counters for cost accounting.

Every group exponentiation, pairing, hash and RNG draw in the library goes
through vfac.group, which reports here.  Counts are tagged with the current
(phase, bucket) taken from a thread-local stack, so a report can separate
e.g. online-encryption ciphertext assembly from policy hiding.

Counting is off by default and costs one attribute load per event while
disabled.  Enable around the region of interest:

    with COUNTERS.capture():
        ...
    table = COUNTERS.snapshot()
"""

import threading
from contextlib import contextmanager

# metric names used by vfac.group
EXP_SRC = "exp_src"      # dual source-group exponentiation (both halves)
EXP_TGT = "exp_tgt"      # target-group exponentiation
MUL_SRC = "mul_src"
MUL_TGT = "mul_tgt"
PAIR = "pair"
HASH_SRC = "hash_src"    # hash-to-group evaluation
HASH_BITS = "hash_bits"  # hash to a fixed-length bit string
RNG_SCALAR = "rng_scalar"
RNG_TGT = "rng_tgt"      # random target element (costs one hidden exp_tgt)


class _Local(threading.local):
    def __init__(self):
        self.phase = ""
        self.bucket = ""


class OpCounters:
    def __init__(self):
        self._lock = threading.Lock()
        self._counts = {}
        self._local = _Local()
        self.enabled = False

    def count(self, metric, n=1):
        if not self.enabled:
            return
        key = (self._local.phase, self._local.bucket, metric)
        with self._lock:
            self._counts[key] = self._counts.get(key, 0) + n

    @contextmanager
    def phase(self, name):
        prev, prev_bucket = self._local.phase, self._local.bucket
        self._local.phase, self._local.bucket = name, ""
        try:
            yield
        finally:
            self._local.phase, self._local.bucket = prev, prev_bucket

    @contextmanager
    def bucket(self, name):
        prev = self._local.bucket
        self._local.bucket = name
        try:
            yield
        finally:
            self._local.bucket = prev

    @contextmanager
    def capture(self):
        """Enable counting, reset on entry, disable on exit."""
        self.reset()
        self.enabled = True
        try:
            yield self
        finally:
            self.enabled = False

    def reset(self):
        with self._lock:
            self._counts.clear()

    def snapshot(self):
        """{(phase, bucket, metric): count} copy."""
        with self._lock:
            return dict(self._counts)

    def total(self, metric, phase=None, bucket=None):
        with self._lock:
            out = 0
            for (ph, bu, me), n in self._counts.items():
                if me != metric:
                    continue
                if phase is not None and ph != phase:
                    continue
                if bucket is not None and bu != bucket:
                    continue
                out += n
            return out


COUNTERS = OpCounters()
