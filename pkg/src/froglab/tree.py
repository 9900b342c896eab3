"""Addressing and navigation for d-ary trees.

Three tree kinds are supported:

* ``rooted``: the infinite rooted tree where the root has ``d`` children and
  every other vertex has degree ``d + 1``;
* ``finite``: levels ``0..n`` of the rooted tree;
* ``homogeneous``: the ``(d + 1)``-regular tree.

A vertex is a :class:`VertexRef`, the path of child indices from the root.
The homogeneous tree is the rooted tree with an extra ray of ancestors above
the root: ``VertexRef(path, up=k)`` is reached by climbing ``k`` steps above
the root and then descending along ``path``.  Child index 0 of the ``k``-th
ancestor is the ``(k-1)``-th ancestor, so a canonical vertex with ``up > 0``
never has ``path[0] == 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

HOMOGENEOUS = "homogeneous"
ROOTED = "rooted"
FINITE = "finite"

# Packed integer keys hold one byte per level.
PACK_MAX_DEPTH = 40
PACK_MAX_INDEX = 254
_PATH_BITS = 8 * PACK_MAX_DEPTH


class AddressingError(ValueError):
    """Raised when a vertex is not valid for the tree it is used with."""


class VertexRef(NamedTuple):
    path: tuple = ()
    up: int = 0

    @property
    def depth(self) -> int:
        return len(self.path)

    def child(self, i: int) -> "VertexRef":
        if self.up > 0 and not self.path:
            if i == 0:
                return VertexRef((), self.up - 1)
            return VertexRef((i,), self.up)
        return VertexRef(self.path + (i,), self.up)

    def __str__(self) -> str:
        return to_string(self)


ROOT = VertexRef()
Key = Union[int, bytes]


@dataclass(frozen=True)
class TreeKind:
    variant: str
    d: int
    n: Optional[int] = None

    def __post_init__(self):
        if self.variant not in (HOMOGENEOUS, ROOTED, FINITE):
            raise ValueError(f"unknown tree variant {self.variant!r}")
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"branching number must be an integer >= 2, got {self.d}")
        if self.variant == FINITE:
            if self.n is None or self.n < 1:
                raise ValueError("a finite tree needs height n >= 1")
        elif self.n is not None:
            raise ValueError("only finite trees carry a height")

    @classmethod
    def homogeneous(cls, d: int) -> "TreeKind":
        return cls(HOMOGENEOUS, d)

    @classmethod
    def rooted(cls, d: int) -> "TreeKind":
        return cls(ROOTED, d)

    @classmethod
    def finite(cls, d: int, n: int) -> "TreeKind":
        return cls(FINITE, d, n)

    @property
    def is_homogeneous(self) -> bool:
        return self.variant == HOMOGENEOUS

    @property
    def is_finite(self) -> bool:
        return self.variant == FINITE

    def __str__(self) -> str:
        if self.variant == FINITE:
            return f"T_{self.d}^{self.n}"
        if self.variant == HOMOGENEOUS:
            return f"Thom_{self.d}"
        return f"T_{self.d}"


class Neighborhood(NamedTuple):
    parent: Optional[VertexRef]
    children: list
    neighbors: list
    level: int
    is_leaf: bool


def contains(tree: TreeKind, v: VertexRef) -> bool:
    """Whether ``v`` is a canonical vertex of ``tree``."""
    if any(not (0 <= i < tree.d) for i in v.path):
        return False
    if v.up < 0:
        return False
    if tree.is_homogeneous:
        return not (v.up > 0 and v.path and v.path[0] == 0)
    if v.up != 0:
        return False
    return not (tree.is_finite and len(v.path) > tree.n)


def check_vertex(tree: TreeKind, v: VertexRef) -> None:
    if not contains(tree, v):
        raise AddressingError(f"{to_string(v)!r} is not a vertex of {tree}")


def parent(tree: TreeKind, v: VertexRef) -> Optional[VertexRef]:
    if v.path:
        return VertexRef(v.path[:-1], v.up)
    if tree.is_homogeneous:
        return VertexRef((), v.up + 1)
    return None


def children(tree: TreeKind, v: VertexRef) -> list:
    if tree.is_finite and len(v.path) >= tree.n:
        return []
    return [v.child(i) for i in range(tree.d)]


def navigate(tree: TreeKind, v: VertexRef) -> Neighborhood:
    check_vertex(tree, v)
    par = parent(tree, v)
    kids = children(tree, v)
    nbrs = ([par] if par is not None else []) + kids
    if tree.is_homogeneous:
        level = len(v.path) - v.up
    else:
        level = len(v.path)
    return Neighborhood(par, kids, nbrs, level, tree.is_finite and not kids)


def neighbors(tree: TreeKind, v: VertexRef) -> list:
    return navigate(tree, v).neighbors


def are_neighbors(u: VertexRef, v: VertexRef) -> bool:
    return _is_parent_of(u, v) or _is_parent_of(v, u)


def _is_parent_of(p: VertexRef, c: VertexRef) -> bool:
    if c.path:
        return p == VertexRef(c.path[:-1], c.up)
    return p == VertexRef((), c.up + 1)


def encode(v: VertexRef) -> Key:
    """Compact hashable key for ``v``; ``decode`` inverts it.

    Shallow vertices with small child indices pack into an ``int`` (the root
    is ``0``).  Anything deeper than ``PACK_MAX_DEPTH`` or with a child index
    above ``PACK_MAX_INDEX`` gets a variable-length ``bytes`` key instead.
    """
    path, up = v.path, v.up
    if up + len(path) <= PACK_MAX_DEPTH and all(i <= PACK_MAX_INDEX for i in path):
        key = 0
        for pos, i in enumerate(path):
            key |= (i + 1) << (8 * pos)
        return key | (up << _PATH_BITS)
    out = bytearray(b"V")
    for value in (up, len(path), *path):
        _put_varint(out, value)
    return bytes(out)


def decode(key: Key) -> VertexRef:
    if isinstance(key, bytes):
        if not key.startswith(b"V"):
            raise AddressingError("malformed vertex key")
        values, pos = [], 1
        while pos < len(key):
            value, pos = _get_varint(key, pos)
            values.append(value)
        up, length, path = values[0], values[1], tuple(values[2:])
        if len(path) != length:
            raise AddressingError("malformed vertex key")
        return VertexRef(path, up)
    up = key >> _PATH_BITS
    packed = key & ((1 << _PATH_BITS) - 1)
    path = []
    while packed:
        path.append((packed & 0xFF) - 1)
        packed >>= 8
    return VertexRef(tuple(path), up)


def _put_varint(out: bytearray, value: int) -> None:
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return


def _get_varint(buf: bytes, pos: int):
    value = shift = 0
    while True:
        byte = buf[pos]
        pos += 1
        value |= (byte & 0x7F) << shift
        shift += 7
        if not byte & 0x80:
            return value, pos


def to_string(v: VertexRef) -> str:
    """Slash-joined child indices, ``""`` for the root.

    Vertices above the root of a homogeneous tree get a ``^k:`` prefix.
    """
    body = "/".join(str(i) for i in v.path)
    return f"^{v.up}:{body}" if v.up else body


def from_string(s: str) -> VertexRef:
    up = 0
    if s.startswith("^"):
        head, _, s = s[1:].partition(":")
        up = int(head)
    path = tuple(int(part) for part in s.split("/")) if s else ()
    return VertexRef(path, up)


# Heap numbering of rooted-tree vertices: root 0, child i of h is h*d + 1 + i.
# The simulation kernels use these integers; the helpers below convert.

def heap_index(v: VertexRef, d: int) -> int:
    if v.up:
        raise AddressingError("heap indices cover the rooted tree only")
    h = 0
    for i in v.path:
        h = h * d + 1 + i
    return h


def from_heap_index(h: int, d: int) -> VertexRef:
    path = []
    while h > 0:
        path.append((h - 1) % d)
        h = (h - 1) // d
    return VertexRef(tuple(reversed(path)))


def level_size(d: int, level: int) -> int:
    return d ** level
