"""Error taxonomy shared across the library, the services and the CLI.

The CLI maps a handful of these onto its exit-code contract; everything
else is an ordinary failure (exit 1).
"""


class VfacError(Exception):
    """Base class for every error raised by this package."""


class DecodeError(VfacError):
    """Byte string has the wrong length or violates the encoding format."""


class InvalidElement(VfacError):
    """Decoded value is out of range, off the curve, or in the wrong subgroup."""


class InvalidInput(VfacError):
    """Arguments violate an operation's preconditions."""


class InvalidPolicy(VfacError):
    """Policy tree is structurally unusable (empty gate, bad arity, parse error)."""


class DuplicateAttribute(VfacError):
    """The same attribute appears twice where uniqueness is required."""


class WrongAuthority(VfacError):
    """An attribute was submitted to an authority that does not manage it."""


class UnknownAuthority(VfacError):
    """An attribute's authority prefix has no published public key."""


class InvalidKey(VfacError):
    """Key material fails its well-formedness pairing check."""


class MissingAttributeKey(VfacError):
    """A decryption key for a required attribute is not present."""


class PoolEmpty(VfacError):
    """The offline pool has no unused entry for a required attribute."""


class NotSatisfied(VfacError):
    """The user's attribute set does not satisfy the ciphertext policy."""


class UnknownUser(VfacError):
    """No cloud-side key entry exists for this user (never enrolled, or revoked)."""


class VerificationFailed(VfacError):
    """Recovered plaintext failed its integrity check; output must be rejected."""


class UnsupportedParameter(VfacError):
    """Requested group profile / parameter set is not provided by this build."""


class IssuanceAborted(VfacError):
    """Key issuance could not complete atomically; no key material was released."""


class ProtocolError(VfacError):
    """Malformed wire frame or a reply that violates the message contract."""


class NotFound(ProtocolError):
    """Requested object (e.g. a ciphertext id) is not in the store."""
