"""Non-planar rooted multifurcating leaf-labelled trees.

A tree is a plain recursive value: a leaf is its integer label, a branch
point is a tuple of child subtrees.  Canonical form orders the children of
every branch point by ascending least leaf label, which makes equality
structural and hashing free.  The root vertex is implicit: the whole tree
hangs below the root edge.

Insertable parts (edges and branch points) are addressed by the path of
1-based child ranks, in canonical order, from the top node.  ``("e", p)``
is the edge above the node at path p (the root edge when p is empty),
``("v", p)`` is the branch point at p.  Addresses are recomputed after
every operation and never stored across mutations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Union

__all__ = [
    "Tree",
    "TreeError",
    "Part",
    "canonicalize",
    "min_leaf",
    "leaf_labels",
    "num_leaves",
    "parse_tree",
    "format_tree",
    "unlabelled_code",
    "subtree_at",
    "leaf_path",
    "parts",
    "part_from_string",
    "part_to_string",
    "insert_leaf",
    "delete_leaf",
    "delete_leaves",
    "swap_labels",
    "relabel",
    "relabel_after_deletion",
    "SpinalDecomposition",
    "spinal_decomposition",
    "CollapsedTree",
    "DecoratedTree",
    "project_collapsed",
    "project_decorated",
    "collapse_to_decorated",
    "reduced_mass",
]

Tree = Union[int, tuple]


class TreeError(ValueError):
    pass


class Part(NamedTuple):
    """An insertable part: kind is leaf/internal/root for edges, branch for vertices."""

    kind: str
    path: tuple

    @property
    def is_edge(self) -> bool:
        return self.kind != "branch"

    @property
    def is_external(self) -> bool:
        return self.kind == "leaf"


def min_leaf(node: Tree) -> int:
    while not isinstance(node, int):
        node = node[0]
    return node


def canonicalize(node: Tree) -> Tree:
    if isinstance(node, int):
        return node
    if len(node) < 2:
        raise TreeError("branch points need at least two children")
    return tuple(sorted((canonicalize(c) for c in node), key=min_leaf))


def leaf_labels(node: Tree) -> frozenset:
    if isinstance(node, int):
        return frozenset((node,))
    out = frozenset()
    for child in node:
        out |= leaf_labels(child)
    return out


def num_leaves(node: Tree) -> int:
    if isinstance(node, int):
        return 1
    return sum(num_leaves(c) for c in node)


def validate_tree(node: Tree) -> None:
    labels = []

    def rec(x):
        if isinstance(x, int):
            if x < 1:
                raise TreeError(f"labels must be positive, got {x}")
            labels.append(x)
            return
        if not isinstance(x, tuple) or len(x) < 2:
            raise TreeError("branch points need at least two children")
        for c in x:
            rec(c)

    rec(node)
    if len(set(labels)) != len(labels):
        raise TreeError("leaf labels must be distinct")


# -------------------------------------------------------------- text grammar


def format_tree(node: Tree) -> str:
    if isinstance(node, int):
        return str(node)
    return "(" + ",".join(format_tree(c) for c in node) + ")"


def parse_tree(text: str) -> Tree:
    pos = 0

    def parse() -> Tree:
        nonlocal pos
        if pos < len(text) and text[pos] == "(":
            pos += 1
            children = [parse()]
            while pos < len(text) and text[pos] == ",":
                pos += 1
                children.append(parse())
            if pos >= len(text) or text[pos] != ")":
                raise TreeError(f"expected ')' at {pos} in {text!r}")
            pos += 1
            if len(children) < 2:
                raise TreeError("branch points need at least two children")
            return tuple(children)
        start = pos
        while pos < len(text) and text[pos].isdigit():
            pos += 1
        if start == pos:
            raise TreeError(f"expected label at {pos} in {text!r}")
        return int(text[start:pos])

    text = text.strip()
    tree = parse()
    if pos != len(text):
        raise TreeError(f"trailing input at {pos} in {text!r}")
    tree = canonicalize(tree)
    validate_tree(tree)
    return tree


def unlabelled_code(node: Tree) -> str:
    """Canonical encoding of the unlabelled shape (children sorted lexically)."""
    if isinstance(node, int):
        return "o"
    return "(" + ",".join(sorted(unlabelled_code(c) for c in node)) + ")"


# -------------------------------------------------------------- addressing


def subtree_at(tree: Tree, path: tuple) -> Tree:
    node = tree
    for rank in path:
        if isinstance(node, int) or not 1 <= rank <= len(node):
            raise TreeError(f"dangling path {path}")
        node = node[rank - 1]
    return node


def leaf_path(tree: Tree, label: int) -> tuple:
    if isinstance(tree, int):
        if tree == label:
            return ()
        raise TreeError(f"leaf {label} not in tree")
    for rank, child in enumerate(tree, start=1):
        if label in leaf_labels(child):
            return (rank,) + leaf_path(child, label)
    raise TreeError(f"leaf {label} not in tree")


def parts(tree: Tree) -> list:
    """All insertable parts in deterministic (preorder) order.

    The edge above the top node comes first: it is the root edge, except in
    the one-leaf tree where the sole edge counts as a leaf edge.
    """
    out = []

    def rec(node, path):
        if path == ():
            out.append(Part("leaf" if isinstance(node, int) else "root", path))
        else:
            out.append(Part("leaf" if isinstance(node, int) else "internal", path))
        if not isinstance(node, int):
            out.append(Part("branch", path))
            for rank, child in enumerate(node, start=1):
                rec(child, path + (rank,))

    rec(tree, ())
    return out


def part_to_string(part: Part) -> str:
    prefix = "v:" if part.kind == "branch" else "e:"
    return prefix + ".".join(str(r) for r in part.path)


def part_from_string(text: str, tree: Tree) -> Part:
    if ":" not in text:
        raise TreeError(f"bad part {text!r}")
    prefix, _, rest = text.partition(":")
    path = tuple(int(r) for r in rest.split(".")) if rest else ()
    node = subtree_at(tree, path)
    if prefix == "v":
        if isinstance(node, int):
            raise TreeError(f"{text!r} is not a branch point")
        return Part("branch", path)
    if prefix == "e":
        if path == ():
            return Part("leaf" if isinstance(node, int) else "root", path)
        return Part("leaf" if isinstance(node, int) else "internal", path)
    raise TreeError(f"bad part {text!r}")


# -------------------------------------------------------------- operations


def _replace(tree: Tree, path: tuple, new_node) -> Tree:
    if path == ():
        return new_node
    rank = path[0]
    children = list(tree)
    children[rank - 1] = _replace(children[rank - 1], path[1:], new_node)
    return tuple(children)


def insert_leaf(tree: Tree, part: Part, label: int) -> Tree:
    """Insert a leaf at an edge (splitting it) or a branch point (new child)."""
    if label in leaf_labels(tree):
        raise TreeError(f"label {label} already present")
    node = subtree_at(tree, part.path)
    if part.is_edge:
        new_node = (node, label)
    else:
        if isinstance(node, int):
            raise TreeError("not a branch point")
        new_node = node + (label,)
    return canonicalize(_replace(tree, part.path, new_node))


def delete_leaf(tree: Tree, label: int, relabel_after: bool = False) -> Tree:
    """Delete a leaf, contracting its parent if that leaves a single sibling.

    With ``relabel_after`` the remaining labels above ``label`` shift down
    by one (the increasing bijection).
    """
    if isinstance(tree, int):
        raise TreeError("cannot delete the last leaf")
    path = leaf_path(tree, label)
    parent_path, rank = path[:-1], path[-1]
    parent = subtree_at(tree, parent_path)
    siblings = parent[: rank - 1] + parent[rank:]
    new_node = siblings[0] if len(siblings) == 1 else siblings
    out = canonicalize(_replace(tree, parent_path, new_node))
    if relabel_after:
        out = relabel_after_deletion(out, label)
    return out


def delete_leaves(tree: Tree, labels, relabel_after: bool = False) -> Tree:
    """Delete a set of leaves, largest label first (keeps earlier work stable)."""
    out = tree
    for label in sorted(labels, reverse=True):
        out = delete_leaf(out, label)
    if relabel_after:
        remaining = sorted(leaf_labels(out))
        out = relabel(out, {old: new for new, old in enumerate(remaining, start=1)})
    return out


def relabel(tree: Tree, mapping: dict) -> Tree:
    def rec(node):
        if isinstance(node, int):
            return mapping.get(node, node)
        return tuple(rec(c) for c in node)

    return canonicalize(rec(tree))


def relabel_after_deletion(tree: Tree, deleted: int) -> Tree:
    return relabel(tree, {l: l - 1 for l in leaf_labels(tree) if l > deleted})


def swap_labels(tree: Tree, i: int, j: int) -> Tree:
    labels = leaf_labels(tree)
    if i not in labels or j not in labels:
        raise TreeError(f"labels {i}, {j} must both be present")
    return relabel(tree, {i: j, j: i})


# -------------------------------------------------------------- spinal decomposition


@dataclass(frozen=True)
class SpinalDecomposition:
    """Ancestral line from a leaf with the bushes hanging off it.

    ``spine_paths`` runs from the leaf to the top node; ``bushes[m]`` lists
    the subtrees rooted at the (m+1)-th spine vertex (the leaf's parent
    first) that do not contain the leaf.
    """

    leaf: int
    spine_paths: tuple
    bushes: tuple


def spinal_decomposition(tree: Tree, label: int) -> SpinalDecomposition:
    path = leaf_path(tree, label)
    spine = [path[:m] for m in range(len(path), -1, -1)]
    bushes = []
    for depth in range(len(path) - 1, -1, -1):
        vertex = subtree_at(tree, path[:depth])
        child_rank = path[depth]
        bushes.append(tuple(c for r, c in enumerate(vertex, start=1) if r != child_rank))
    return SpinalDecomposition(label, tuple(spine), tuple(bushes))


# -------------------------------------------------------------- projections


@dataclass(frozen=True)
class CollapsedTree:
    """A [k]-tree shape with the label set collapsing onto every part."""

    shape: Tree
    label_sets: tuple  # ((Part, sorted tuple of labels), ...) in parts order

    @property
    def sets(self) -> dict:
        return {part: frozenset(labels) for part, labels in self.label_sets}

    @property
    def mass(self) -> int:
        return sum(len(labels) for _, labels in self.label_sets)


@dataclass(frozen=True)
class DecoratedTree:
    """A [k]-tree shape with a nonnegative integer mass on every part.

    External edges carry mass at least one (their own leaf).
    """

    shape: Tree
    masses: tuple  # ((Part, int), ...) in parts order

    @property
    def mass_of(self) -> dict:
        return dict(self.masses)

    @property
    def n(self) -> int:
        return sum(m for _, m in self.masses)

    def validate(self):
        for part, mass in self.masses:
            if mass < 0 or (part.is_external and mass < 1):
                raise TreeError(f"bad mass {mass} on {part}")


def reduced_mass(part: Part, mass: int) -> int:
    """Mass net of the external edge's own leaf."""
    return mass - 1 if part.is_external else mass


def _collapse(node: Tree, k: int):
    """Recursive collapse onto the [k]-reduction.

    Returns (shape_node, sets) when the subtree contains a small leaf,
    where sets maps parts relative to shape_node; returns (None, labels)
    when the whole subtree collapses.
    """
    if isinstance(node, int):
        if node <= k:
            return node, {Part("leaf", ()): {node}}
        return None, {node}

    kept = []
    dropped = set()
    for child in node:
        shape_child, payload = _collapse(child, k)
        if shape_child is None:
            dropped |= payload
        else:
            kept.append((shape_child, payload))

    if not kept:
        return None, dropped

    if len(kept) == 1:
        # this vertex contracts away; its extra subtrees collapse onto the
        # edge above the surviving child's top node
        shape_child, sets = kept[0]
        top_edge = _top_edge_part(shape_child)
        sets[top_edge] = sets.get(top_edge, set()) | dropped
        return shape_child, sets

    kept.sort(key=lambda pair: min_leaf(pair[0]))
    shape_node = tuple(sc for sc, _ in kept)
    sets = {Part("branch", ()): dropped}
    for rank, (shape_child, child_sets) in enumerate(kept, start=1):
        for part, labels in child_sets.items():
            # an edge that was the top edge of the child subtree is internal
            # once it sits below a surviving branch point
            kind = "internal" if part.kind == "root" else part.kind
            sets[Part(kind, (rank,) + part.path)] = labels
    return shape_node, sets


def _top_edge_part(shape_node: Tree) -> Part:
    return Part("leaf" if isinstance(shape_node, int) else "root", ())


def project_collapsed(tree: Tree, k: int) -> CollapsedTree:
    """Collapse every label above k onto the first part of the [k]-shape
    reached on its ancestral line."""
    n = num_leaves(tree)
    if not 1 <= k <= n:
        raise TreeError(f"need 1 <= k <= n, got k={k}")
    if leaf_labels(tree) != frozenset(range(1, n + 1)):
        raise TreeError("projection needs label set [n]")
    shape_node, sets = _collapse(tree, k)
    fixed = {}
    for part, labels in sets.items():
        if part.path == () and part.is_edge:
            part = _top_edge_part(shape_node)
        fixed[part] = labels
    assignments = []
    for part in parts(shape_node):
        labels = fixed.get(part, set())
        assignments.append((part, tuple(sorted(labels))))
    return CollapsedTree(shape_node, tuple(assignments))


def collapse_to_decorated(collapsed: CollapsedTree) -> DecoratedTree:
    masses = tuple((part, len(labels)) for part, labels in collapsed.label_sets)
    return DecoratedTree(collapsed.shape, masses)


def project_decorated(tree: Tree, k: int) -> DecoratedTree:
    return collapse_to_decorated(project_collapsed(tree, k))
