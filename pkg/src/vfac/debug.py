"""Opt-in debug instrumentation.

When enabled, scheme operations attach their internal randomness (shares,
masks, session exponents) to the objects they produce so tests can verify
algebraic identities from first principles.  The flag is process-wide and
off by default; secrets never leave the process in normal operation.

Enable with ``VFAC_DEBUG=1`` in the environment or by setting
``vfac.debug.enabled = True`` before calling into the scheme.
"""

import os

enabled: bool = os.environ.get("VFAC_DEBUG", "") == "1"
