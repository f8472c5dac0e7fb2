"""Surgery on decorated trees: swaps, deletions, insertions, reprojection.

Masses live on positions, not labels, so label operations must carry the
masses along structurally.  The workhorse is an annotated mutable form
where every node carries the mass of the edge above it and, for branch
points, the branch mass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from downup.trees import (
    DecoratedTree,
    Part,
    Tree,
    TreeError,
    min_leaf,
    parts,
    project_decorated,
    subtree_at,
)

__all__ = [
    "annotate",
    "read_annotated",
    "swap_decorated_labels",
    "delete_decorated_leaf",
    "relabel_decorated_after_deletion",
    "split_decorated_edge",
    "attach_decorated_leaf",
    "representative_tree",
    "project_decorated_tree",
]


@dataclass
class ANode:
    """Annotated node: ``label`` is None for branch points."""

    label: int | None
    edge_mass: int
    branch_mass: int = 0
    children: list = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return self.label is not None

    def min_leaf(self) -> int:
        node = self
        while not node.is_leaf:
            node = node.children[0]
        return node.label


def annotate(decorated: DecoratedTree) -> ANode:
    mass = decorated.mass_of

    def rec(node: Tree, path: tuple) -> ANode:
        edge_kind = ("leaf" if isinstance(node, int) else ("root" if path == () else "internal"))
        edge_mass = mass[Part(edge_kind, path)]
        if isinstance(node, int):
            return ANode(node, edge_mass)
        out = ANode(None, edge_mass, mass[Part("branch", path)])
        out.children = [rec(c, path + (r,)) for r, c in enumerate(node, start=1)]
        return out

    return rec(decorated.shape, ())


def read_annotated(root: ANode) -> DecoratedTree:
    """Canonicalize (sort children by least label) and read back the masses."""

    def shape_of(node: ANode) -> Tree:
        if node.is_leaf:
            return node.label
        node.children.sort(key=lambda c: c.min_leaf())
        return tuple(shape_of(c) for c in node.children)

    shape = shape_of(root)
    masses = {}

    def collect(node: ANode, path: tuple):
        kind = "leaf" if node.is_leaf else ("root" if path == () else "internal")
        masses[Part(kind, path)] = node.edge_mass
        if not node.is_leaf:
            masses[Part("branch", path)] = node.branch_mass
            for r, child in enumerate(node.children, start=1):
                collect(child, path + (r,))

    collect(root, ())
    return DecoratedTree(shape, tuple((p, masses[p]) for p in parts(shape)))


def _find_leaf(node: ANode, label: int, parent=None):
    if node.is_leaf:
        return (node, parent) if node.label == label else None
    for child in node.children:
        found = _find_leaf(child, label, node)
        if found:
            return found
    return None


def swap_decorated_labels(decorated: DecoratedTree, i: int, j: int) -> DecoratedTree:
    """Swap leaf labels; every position keeps its mass."""
    root = annotate(decorated)
    for node, _ in (_find_leaf(root, i), _find_leaf(root, j)):
        node.label = j if node.label == i else i
    return read_annotated(root)


def delete_decorated_leaf(decorated: DecoratedTree, label: int) -> DecoratedTree:
    """Remove a leaf edge (and its mass) from the decorated tree.

    A binary parent is contracted away; the merged edge collects the
    sibling edge's, the parent edge's and the parent branch's masses.
    """
    root = annotate(decorated)
    found = _find_leaf(root, label)
    if found is None or found[1] is None:
        raise TreeError(f"cannot delete leaf {label}")
    leaf, parent = found
    parent.children.remove(leaf)
    if len(parent.children) == 1:
        survivor = parent.children[0]
        parent.label = survivor.label
        parent.edge_mass = parent.edge_mass + parent.branch_mass + survivor.edge_mass
        parent.branch_mass = survivor.branch_mass
        parent.children = survivor.children
    return read_annotated(root)


def relabel_decorated_after_deletion(decorated: DecoratedTree, deleted: int) -> DecoratedTree:
    root = annotate(decorated)

    def rec(node: ANode):
        if node.is_leaf:
            if node.label > deleted:
                node.label -= 1
        else:
            for child in node.children:
                rec(child)

    rec(root)
    return read_annotated(root)


def split_decorated_edge(
    decorated: DecoratedTree,
    part: Part,
    label: int,
    leaf_mass: int,
    branch_mass: int,
    upper_mass: int,
    lower_mass: int,
) -> DecoratedTree:
    """Insert a leaf on an edge, splitting its mass four ways.

    ``upper_mass`` goes on the root side of the new branch point,
    ``lower_mass`` on the continuation of the original edge.
    """
    if not part.is_edge:
        raise TreeError("split needs an edge part")
    root = annotate(decorated)
    node = root
    for rank in part.path:
        node = node.children[rank - 1]
    lower = ANode(node.label, lower_mass, node.branch_mass, node.children)
    node.label = None
    node.edge_mass = upper_mass
    node.branch_mass = branch_mass
    node.children = [lower, ANode(label, leaf_mass)]
    return read_annotated(root)


def attach_decorated_leaf(
    decorated: DecoratedTree, part: Part, label: int, leaf_mass: int, branch_mass: int
) -> DecoratedTree:
    """Add a leaf as a new child of a branch point, resetting its mass."""
    if part.is_edge:
        raise TreeError("attach needs a branch part")
    root = annotate(decorated)
    node = root
    for rank in part.path:
        node = node.children[rank - 1]
    node.children.append(ANode(label, leaf_mass))
    node.branch_mass = branch_mass
    return read_annotated(root)


# ----------------------------------------------------------- reprojection


def representative_tree(decorated: DecoratedTree) -> Tree:
    """Some [n]-tree projecting to the given decorated tree.

    Extra mass on an edge becomes a chain of branch points stacked along
    that edge, each carrying one fresh leaf; extra mass on a branch point
    becomes extra leaf children.  Fresh labels are assigned in parts order.
    """
    from downup import trees

    decorated.validate()
    mass = decorated.mass_of
    counter = trees.num_leaves(decorated.shape)

    def fresh() -> int:
        nonlocal counter
        counter += 1
        return counter

    def rec(node: Tree, path: tuple) -> Tree:
        if isinstance(node, int):
            base = node
            extra = mass[Part("leaf", path)] - 1
        else:
            base = tuple(rec(c, path + (r,)) for r, c in enumerate(node, start=1))
            base = base + tuple(fresh() for _ in range(mass[Part("branch", path)]))
            extra = mass[Part("root" if path == () else "internal", path)]
        for _ in range(extra):
            base = (base, fresh())
        return base

    return trees.canonicalize(rec(decorated.shape, ()))


def project_decorated_tree(decorated: DecoratedTree, k: int) -> DecoratedTree:
    """Push a decorated [k']-tree of mass n down to a decorated [k]-tree."""
    return project_decorated(representative_tree(decorated), k)
