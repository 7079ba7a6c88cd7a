"""Multi-authority attribute-based encryption with verifiable outsourced decryption.

Library layers, bottom up:

- ``vfac.group`` — instrumented pairing-group facade (scalars, dual source
  elements, target elements, hashing) over the bundled curve backend
- ``vfac.lsss`` — policy parsing and linear secret sharing
- ``vfac.scheme`` — the encryption scheme proper: authority/user setup, key
  issuance, offline/online encryption, outsourced decryption, revocation
- ``vfac.services`` / ``vfac.wire`` / ``vfac.storage`` — the four-role
  protocol (authority, cloud, data owner, data user) over in-process or
  TCP transport with persistent cloud state
- ``vfac.cli`` — operator commands, scenario runner, cost instrumentation
"""

from .counters import COUNTERS
from .errors import (
    DecodeError,
    DuplicateAttribute,
    InvalidElement,
    InvalidInput,
    InvalidKey,
    InvalidPolicy,
    IssuanceAborted,
    MissingAttributeKey,
    NotFound,
    NotSatisfied,
    PoolEmpty,
    ProtocolError,
    UnknownAuthority,
    UnknownUser,
    UnsupportedParameter,
    VerificationFailed,
    VfacError,
    WrongAuthority,
)
from .group import Rng, Scalar, SourceElement, TargetElement, pair
from .lsss import AccessMatrix, PolicyNode, compile_policy, parse_policy
from .scheme import (
    AuthorityKeys,
    AuthorityPublic,
    Ciphertext,
    GlobalParams,
    IntermediateCiphertext,
    KeyList,
    PartialCiphertext,
    UserKeys,
    UserPublicKey,
    authority_keygen,
    authority_setup,
    cs_dec,
    derive_labels,
    global_setup,
    offline_enc,
    online_enc,
    register_key,
    revoke,
    user_dec,
    user_key_init,
)

__version__ = "0.1.0"

__all__ = [
    "COUNTERS",
    "AccessMatrix",
    "AuthorityKeys",
    "AuthorityPublic",
    "Ciphertext",
    "GlobalParams",
    "IntermediateCiphertext",
    "KeyList",
    "PartialCiphertext",
    "PolicyNode",
    "Rng",
    "Scalar",
    "SourceElement",
    "TargetElement",
    "UserKeys",
    "UserPublicKey",
    "authority_keygen",
    "authority_setup",
    "compile_policy",
    "cs_dec",
    "derive_labels",
    "global_setup",
    "offline_enc",
    "online_enc",
    "pair",
    "parse_policy",
    "register_key",
    "revoke",
    "user_dec",
    "user_key_init",
    # errors
    "VfacError",
    "DecodeError",
    "InvalidElement",
    "InvalidInput",
    "InvalidPolicy",
    "DuplicateAttribute",
    "WrongAuthority",
    "UnknownAuthority",
    "InvalidKey",
    "MissingAttributeKey",
    "PoolEmpty",
    "NotSatisfied",
    "UnknownUser",
    "VerificationFailed",
    "UnsupportedParameter",
    "IssuanceAborted",
    "ProtocolError",
    "NotFound",
]
