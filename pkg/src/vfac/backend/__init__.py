"""Low-level BN254 arithmetic: field tower, curve groups, optimal ate pairing.

Everything here works on raw tuples; the public element/scalar API lives in
vfac.group and is the only layer the scheme code touches.
"""
