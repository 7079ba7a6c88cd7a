"""Monotone boolean policies and their linear secret-sharing form.

A policy is a tree of AND / OR gates over attribute leaves.  ``compile``
lowers the tree to a share-generating matrix A with one row per leaf: a
secret s shared as lambda_j = A_j . (s, y2..yn) can be recombined as
``sum c_j * lambda_j = s`` by any row subset whose attributes satisfy the
tree, and by no other subset.

Construction rules (root vector (1), counter c = 1, top-down):

* OR passes the parent vector to every child unchanged;
* AND gives its first child the parent vector zero-padded to length c
  with 1 appended, its second child the vector (0,..,0,-1) of length
  c + 1, and increments c.

Gates of higher arity are folded left-associatively into binary gates
before lowering, so the matrix layout is deterministic.  All vectors are
zero-padded to the final counter value; entries live in {0, 1, -1} mod
the group order.

Attribute names are ``<authority>:<tag>`` where both pieces are drawn
from ``[A-Za-z0-9_.-]``.  The authority prefix routes rows to public
keys later; the compiler only validates the shape.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DuplicateAttribute, InvalidPolicy
from .group import ORDER, Rng, Scalar

ATTR_RE = re.compile(r"[A-Za-z0-9_.-]+:[A-Za-z0-9_.-]+\Z")


@dataclass(frozen=True)
class PolicyNode:
    """One node of a policy tree: an attribute leaf or an AND/OR gate."""

    kind: str  # "attr" | "and" | "or"
    attr: str | None = None
    children: tuple["PolicyNode", ...] = ()

    @staticmethod
    def leaf(attr: str) -> "PolicyNode":
        return PolicyNode("attr", attr=attr)

    @staticmethod
    def and_(*children: "PolicyNode") -> "PolicyNode":
        return PolicyNode("and", children=tuple(children))

    @staticmethod
    def or_(*children: "PolicyNode") -> "PolicyNode":
        return PolicyNode("or", children=tuple(children))

    def __str__(self) -> str:
        if self.kind == "attr":
            return self.attr or "?"
        sep = " AND " if self.kind == "and" else " OR "
        return "(" + sep.join(str(c) for c in self.children) + ")"


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<lpar>\()|(?P<rpar>\))"
    r"|(?P<attr>[A-Za-z0-9_.-]+:[A-Za-z0-9_.-]+)"
    r"|(?P<kw>[A-Za-z]+))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            tail = text[pos:].strip()
            if not tail:
                break
            raise InvalidPolicy(f"unreadable policy text at: {tail[:20]!r}")
        pos = m.end()
        for name, value in m.groupdict().items():
            if value is not None:
                if name == "kw":
                    kw = value.upper()
                    if kw not in ("AND", "OR"):
                        raise InvalidPolicy(f"unknown word {value!r} in policy")
                    tokens.append(("op", kw))
                else:
                    tokens.append((name, value))
                break
    return tokens


def parse_policy(text: str) -> PolicyNode:
    """Parse policy text into a tree.  AND binds tighter than OR."""

    tokens = _tokenize(text)
    if not tokens:
        raise InvalidPolicy("empty policy")
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else (None, None)

    def take():
        nonlocal pos
        tok = peek()
        pos += 1
        return tok

    def primary() -> PolicyNode:
        kind, value = take()
        if kind == "attr":
            return PolicyNode.leaf(value)
        if kind == "lpar":
            node = or_expr()
            if take()[0] != "rpar":
                raise InvalidPolicy("unbalanced parenthesis")
            return node
        raise InvalidPolicy(f"expected attribute or '(', got {value!r}")

    def and_expr() -> PolicyNode:
        parts = [primary()]
        while peek() == ("op", "AND"):
            take()
            parts.append(primary())
        return parts[0] if len(parts) == 1 else PolicyNode.and_(*parts)

    def or_expr() -> PolicyNode:
        parts = [and_expr()]
        while peek() == ("op", "OR"):
            take()
            parts.append(and_expr())
        return parts[0] if len(parts) == 1 else PolicyNode.or_(*parts)

    node = or_expr()
    if pos != len(tokens):
        raise InvalidPolicy(f"trailing tokens after policy: {tokens[pos:]}")
    return node


@dataclass(frozen=True)
class AccessMatrix:
    """Share-generating matrix; rows[j] = (attribute, vector mod order)."""

    rows: tuple[tuple[str, tuple[int, ...]], ...]
    width: int

    @property
    def attrs(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.rows)


def _binarize(node: PolicyNode) -> PolicyNode:
    if node.kind == "attr":
        if node.attr is None or not ATTR_RE.match(node.attr):
            raise InvalidPolicy(f"bad attribute leaf {node.attr!r}")
        return node
    if node.kind not in ("and", "or"):
        raise InvalidPolicy(f"unknown node kind {node.kind!r}")
    if len(node.children) < 2:
        raise InvalidPolicy(f"{node.kind.upper()} gate needs at least two children")
    kids = [_binarize(c) for c in node.children]
    make = PolicyNode.and_ if node.kind == "and" else PolicyNode.or_
    out = kids[0]
    for k in kids[1:]:
        out = make(out, k)
    return out


def compile_policy(policy: PolicyNode) -> AccessMatrix:
    """Lower a policy tree to its share-generating matrix."""

    root = _binarize(policy)
    counter = 1
    rows: list[tuple[str, list[int]]] = []
    seen: set[str] = set()

    def walk(node: PolicyNode, vec: list[int]) -> None:
        nonlocal counter
        if node.kind == "attr":
            attr = node.attr  # validated in _binarize
            if attr in seen:
                raise DuplicateAttribute(f"attribute {attr!r} appears twice in policy")
            seen.add(attr)
            rows.append((attr, vec))
            return
        if node.kind == "or":
            walk(node.children[0], vec)
            walk(node.children[1], vec)
            return
        # AND
        first = vec + [0] * (counter - len(vec)) + [1]
        second = [0] * counter + [-1]
        counter += 1
        walk(node.children[0], first)
        walk(node.children[1], second)

    walk(root, [1])
    width = counter
    fixed = tuple(
        (attr, tuple((v + ORDER) % ORDER for v in vec + [0] * (width - len(vec))))
        for attr, vec in rows
    )
    return AccessMatrix(rows=fixed, width=width)


def share(matrix: AccessMatrix, secret: Scalar, rng: Rng) -> tuple[list[Scalar], list[Scalar]]:
    """Produce the share pair (lambda_j, w_j) for every matrix row.

    lambda shares hide ``secret``; w shares hide zero.  Both use fresh
    uniform padding in the tail coordinates.
    """

    v = [secret.v] + [rng.scalar().v for _ in range(matrix.width - 1)]
    w = [0] + [rng.scalar().v for _ in range(matrix.width - 1)]
    lambdas, ws = [], []
    for _, row in matrix.rows:
        lambdas.append(Scalar(sum(a * b for a, b in zip(row, v)) % ORDER))
        ws.append(Scalar(sum(a * b for a, b in zip(row, w)) % ORDER))
    return lambdas, ws


def reconstruct(matrix: AccessMatrix, row_indices: list[int]) -> dict[int, Scalar] | None:
    """Find coefficients c with sum c_j A_j = (1,0,..,0) over the given rows.

    Returns a map from row index to nonzero coefficient, or None when the
    rows cannot span the target (the attribute set is unauthorized).
    The elimination is deterministic: unknowns are processed in ascending
    row order and each pivot is the first usable equation, so equal inputs
    always produce identical coefficients.
    """

    idx = sorted(set(row_indices))
    if any(j < 0 or j >= len(matrix.rows) for j in idx):
        raise IndexError("row index out of range")
    if not idx:
        return None
    n = matrix.width
    m = len(idx)
    # Equations: for each coordinate k, sum_j c_j * A[idx[j]][k] = target_k.
    aug = [[matrix.rows[j][1][k] for j in idx] + [1 if k == 0 else 0] for k in range(n)]
    rank = 0
    pivots: list[tuple[int, int]] = []  # (equation row, unknown column)
    for col in range(m):
        pivot = next((r for r in range(rank, n) if aug[r][col] != 0), None)
        if pivot is None:
            continue
        aug[rank], aug[pivot] = aug[pivot], aug[rank]
        inv = pow(aug[rank][col], ORDER - 2, ORDER)
        aug[rank] = [(x * inv) % ORDER for x in aug[rank]]
        for r in range(n):
            if r != rank and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [(x - f * y) % ORDER for x, y in zip(aug[r], aug[rank])]
        pivots.append((rank, col))
        rank += 1
    # Inconsistent system: a zero row with nonzero rhs means no solution.
    for r in range(rank, n):
        if aug[r][m] != 0:
            return None
    coeffs = [0] * m
    for r, col in pivots:
        coeffs[col] = aug[r][m]
    return {idx[j]: Scalar(c) for j, c in enumerate(coeffs) if c != 0}


def is_authorized(matrix: AccessMatrix, attrs: set[str]) -> bool:
    """True when the attribute set satisfies the matrix's policy."""

    rows = [j for j, (a, _) in enumerate(matrix.rows) if a in attrs]
    return reconstruct(matrix, rows) is not None
