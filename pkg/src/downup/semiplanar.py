"""Semi-planar trees: branch points carry a left-to-right subtree order.

The two subtrees with the smallest least labels always occupy the two
leftmost slots and are mutually unordered; the remaining c - 2 subtrees of
a branch point with c children are placed by a permutation sigma, where
sigma(m) + 2 is the left-to-right position of the subtree of least-label
rank m + 2.  Orders are stored sparsely (only branch points with c >= 3).

A planar tree carries a full permutation per branch point and is the
transient value produced by label swapping; the subsequent deletion
re-enters the semi-planar space.

Operations work on a mutable position form: a leaf is its label, a branch
point is a list of children in left-to-right position order.
"""

from __future__ import annotations

from dataclasses import dataclass

from downup import trees
from downup.trees import Part, Tree, TreeError
from downup.urns import ocrp_permutation_pmf, sample_table_order

__all__ = [
    "SemiPlanarError",
    "SemiPlanarTree",
    "PlanarTree",
    "LocalSearchResult",
    "semiplanar_from_shape",
    "format_sp",
    "parse_sp",
    "sp_project",
    "sp_canonical_planar",
    "sp_to_positions",
    "planar_to_positions",
    "positions_to_planar",
    "positions_to_semiplanar",
    "sp_insert_leaf",
    "sp_delete_leaf",
    "sp_swap_labels",
    "sp_local_search",
    "sp_relabel_after_deletion",
    "sp_sample_orders",
    "sp_orders_probability",
    "all_order_assignments",
    "internal_structure",
    "internal_structure_sp",
    "regraft_structures",
]


class SemiPlanarError(TreeError):
    pass


@dataclass(frozen=True)
class SemiPlanarTree:
    """Canonical shape plus sparse branch-point orders (c >= 3 only)."""

    shape: Tree
    orders: tuple = ()  # ((path, sigma), ...) sorted by path

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(sorted((tuple(p), tuple(s)) for p, s in self.orders)))

    @property
    def order_map(self) -> dict:
        return dict(self.orders)

    def order_at(self, path: tuple) -> tuple:
        return self.order_map.get(tuple(path), ())


@dataclass(frozen=True)
class PlanarTree:
    """Canonical shape plus a full position permutation per branch point.

    ``sigma_star(rank) = position``: entry r of the stored permutation is
    the left-to-right position of the child of least-label rank r.
    """

    shape: Tree
    orders: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(sorted((tuple(p), tuple(s)) for p, s in self.orders)))

    @property
    def order_map(self) -> dict:
        return dict(self.orders)


@dataclass(frozen=True)
class LocalSearchResult:
    """Output (a, b, i_tilde) of the local search from a selected leaf.

    ``a`` is the least label of the first spinal bush, ``b`` the least
    label of the designated second subtree (0 when the selected leaf sits
    in a binary branch point directly below the root edge), and
    ``i_tilde = max(i, a, b)`` is the leaf the chain will delete.
    """

    a: int
    b: int
    i_tilde: int


def semiplanar_from_shape(shape: Tree, orders=None) -> SemiPlanarTree:
    """Attach orders to a canonical shape; missing multifurcating orders
    must be supplied, binary branch points must not appear."""
    shape = trees.canonicalize(shape)
    orders = dict(orders or {})
    chosen = []
    for part in trees.parts(shape):
        if part.kind != "branch":
            continue
        c = len(trees.subtree_at(shape, part.path))
        if c == 2:
            continue
        sigma = tuple(orders.pop(part.path, ()))
        if sorted(sigma) != list(range(1, c - 1)):
            raise SemiPlanarError(f"branch at {part.path} needs a permutation of [{c - 2}]")
        chosen.append((part.path, sigma))
    if orders:
        raise SemiPlanarError(f"orders given for non-branch paths: {sorted(orders)}")
    return SemiPlanarTree(shape, tuple(chosen))


# ------------------------------------------------------------ position form


def sp_to_positions(sp: SemiPlanarTree):
    """Canonical planar representative as nested position-ordered lists."""
    order = sp.order_map

    def rec(node, path):
        if isinstance(node, int):
            return node
        c = len(node)
        slots = [None] * c
        slots[0] = rec(node[0], path + (1,))
        slots[1] = rec(node[1], path + (2,))
        sigma = order.get(path, ())
        for m in range(c - 2):
            slots[sigma[m] + 1] = rec(node[m + 2], path + (m + 3,))
        return slots

    return rec(sp.shape, ())


def planar_to_positions(pt: PlanarTree):
    order = pt.order_map

    def rec(node, path):
        if isinstance(node, int):
            return node
        c = len(node)
        sigma = order.get(path, tuple(range(1, c + 1)))
        slots = [None] * c
        for rank in range(c):
            slots[sigma[rank] - 1] = rec(node[rank], path + (rank + 1,))
        return slots

    return rec(pt.shape, ())


def _freeze(pnode) -> Tree:
    if isinstance(pnode, int):
        return pnode
    return tuple(_freeze(c) for c in pnode)


def _pmin(pnode) -> int:
    """Least leaf label of a position-form node (no canonical-order shortcut)."""
    if isinstance(pnode, int):
        return pnode
    return min(_pmin(c) for c in pnode)


def positions_to_planar(pnode) -> PlanarTree:
    orders = []

    def rec(node, path) -> Tree:
        if isinstance(node, int):
            return node
        by_rank = sorted(range(len(node)), key=lambda idx: _pmin(node[idx]))
        sigma = tuple(idx + 1 for idx in by_rank)
        orders.append((path, sigma))
        return tuple(rec(node[idx], path + (r,)) for r, idx in enumerate(by_rank, start=1))

    shape = rec(pnode, ())
    return PlanarTree(shape, tuple(orders))


def positions_to_semiplanar(pnode) -> SemiPlanarTree:
    """Forget the order inside the leftmost pair; raise if the two least
    subtrees are not the two leftmost."""
    orders = []

    def rec(node, path) -> Tree:
        if isinstance(node, int):
            return node
        by_rank = sorted(range(len(node)), key=lambda idx: _pmin(node[idx]))
        positions = [idx + 1 for idx in by_rank]
        if sorted(positions[:2]) != [1, 2]:
            raise SemiPlanarError(f"least-label subtrees not leftmost at {path}")
        if len(node) >= 3:
            orders.append((path, tuple(p - 2 for p in positions[2:])))
        return tuple(rec(node[idx], path + (r,)) for r, idx in enumerate(by_rank, start=1))

    shape = rec(pnode, ())
    return SemiPlanarTree(shape, tuple(orders))


def sp_project(sp) -> Tree:
    return sp.shape


def sp_canonical_planar(sp: SemiPlanarTree) -> PlanarTree:
    return positions_to_planar(sp_to_positions(sp))


# ------------------------------------------------------------ serialization


def format_sp(sp: SemiPlanarTree) -> str:
    order = sp.order_map

    def rec(node, path):
        if isinstance(node, int):
            return str(node)
        body = "(" + ",".join(rec(c, path + (r,)) for r, c in enumerate(node, start=1)) + ")"
        if len(node) >= 3:
            body += "[" + ",".join(str(v) for v in order[path]) + "]"
        return body

    return rec(sp.shape, ())


def parse_sp(text: str) -> SemiPlanarTree:
    pos = 0
    orders = {}

    def parse(path):
        nonlocal pos
        if pos < len(text) and text[pos] == "(":
            pos += 1
            children = [parse(path + (1,))]
            while pos < len(text) and text[pos] == ",":
                pos += 1
                children.append(parse(path + (len(children) + 1,)))
            if pos >= len(text) or text[pos] != ")":
                raise SemiPlanarError(f"expected ')' at {pos}")
            pos += 1
            node = tuple(children)
            if len(children) >= 3:
                if pos >= len(text) or text[pos] != "[":
                    raise SemiPlanarError(f"expected order at {pos}")
                end = text.index("]", pos)
                orders[path] = tuple(int(v) for v in text[pos + 1 : end].split(","))
                pos = end + 1
            return node
        start = pos
        while pos < len(text) and text[pos].isdigit():
            pos += 1
        if start == pos:
            raise SemiPlanarError(f"expected label at {pos}")
        return int(text[start:pos])

    text = text.strip()
    shape = parse(())
    if pos != len(text):
        raise SemiPlanarError(f"trailing input at {pos}")
    if not isinstance(shape, int) and shape != trees.canonicalize(shape):
        raise SemiPlanarError("children must be written in least-label order")
    trees.validate_tree(shape if isinstance(shape, tuple) else shape)
    return semiplanar_from_shape(shape, orders)


# ------------------------------------------------------------ operations


def _rank_path_to_position_path(sp: SemiPlanarTree, path: tuple) -> tuple:
    """Translate a canonical (rank) path into the representative's positions."""
    out = []
    node = sp.shape
    for depth, rank in enumerate(path):
        c = len(node)
        sigma = sp.order_map.get(tuple(path[:depth]), ())
        position = rank if rank <= 2 else sigma[rank - 3] + 2
        out.append(position)
        node = node[rank - 1]
    return tuple(out)


def _pnode_at(pnode, position_path):
    node = pnode
    for p in position_path:
        node = node[p - 1]
    return node


def sp_insert_leaf(sp: SemiPlanarTree, part: Part, location: int, label: int) -> SemiPlanarTree:
    """Insert a leaf at an edge (location 0) or at a branch-point location.

    Location l of a branch point with c children puts the new subtree at
    left-to-right position l + 2, for l in [c-1]; l = c-1 is the rightmost
    slot.
    """
    if label in trees.leaf_labels(sp.shape):
        raise SemiPlanarError(f"label {label} already present")
    pnode = sp_to_positions(sp)
    ppath = _rank_path_to_position_path(sp, part.path)
    if part.is_edge:
        if location != 0:
            raise SemiPlanarError("edge insertions require location 0")
        target = _pnode_at(pnode, ppath)
        replacement = [target, label]
        if ppath == ():
            pnode = replacement
        else:
            _pnode_at(pnode, ppath[:-1])[ppath[-1] - 1] = replacement
    else:
        target = _pnode_at(pnode, ppath)
        c = len(target)
        if not 1 <= location <= c - 1:
            raise SemiPlanarError(f"branch with {c} children needs location in [{c - 1}]")
        target.insert(location + 1, label)
    return positions_to_semiplanar(pnode)


def _delete_in_positions(pnode, label):
    """Remove a leaf from the position form, splicing binary parents."""

    def rec(node):
        if isinstance(node, int):
            return node, node == label
        for idx, child in enumerate(node):
            new_child, hit = rec(child)
            if hit is None:
                node[idx] = new_child
                return node, None
            if hit:
                node.pop(idx)
                if len(node) == 1:
                    return node[0], None
                return node, None
        return node, False

    if isinstance(pnode, int):
        raise SemiPlanarError("cannot delete the last leaf")
    out, hit = rec(pnode)
    if hit is False:
        raise SemiPlanarError(f"leaf {label} not present")
    return out


def sp_delete_leaf(tree, label: int, relabel_after: bool = False) -> SemiPlanarTree:
    """Delete a leaf from a semi-planar or planar tree.

    Binary parents vanish together with their (trivial) order; in a larger
    branch point the surviving subtrees close the gap.  Raises if the
    result leaves the semi-planar space, which the chain's swap-then-delete
    never does.
    """
    pnode = sp_to_positions(tree) if isinstance(tree, SemiPlanarTree) else planar_to_positions(tree)
    pnode = _delete_in_positions(pnode, label)
    sp = positions_to_semiplanar(pnode)
    if relabel_after:
        sp = sp_relabel_after_deletion(sp, label)
    return sp


def sp_relabel_after_deletion(sp: SemiPlanarTree, deleted: int) -> SemiPlanarTree:
    """Shift labels above the deleted one down; ranks are preserved, so the
    orders transfer verbatim."""
    mapping = {l: l - 1 for l in trees.leaf_labels(sp.shape) if l > deleted}

    def rec(node):
        if isinstance(node, int):
            return mapping.get(node, node)
        return tuple(rec(c) for c in node)

    return SemiPlanarTree(rec(sp.shape), sp.orders)


def _second_bush_min(pnode, position_path):
    """Least label outside the subtree of the parent, at the grandparent."""
    if len(position_path) < 2:
        return 0
    grand = _pnode_at(pnode, position_path[:-2])
    spine_idx = position_path[-2] - 1
    return min(_pmin(child) for idx, child in enumerate(grand) if idx != spine_idx)


def sp_local_search(sp: SemiPlanarTree, i: int) -> LocalSearchResult:
    """The (a, b, i_tilde) search from leaf i in the canonical representative."""
    pnode = sp_to_positions(sp)
    position_path = _position_leaf_path(pnode, i)
    if position_path == ():
        raise SemiPlanarError("local search needs at least two leaves")
    parent = _pnode_at(pnode, position_path[:-1])
    pos_i = position_path[-1]
    c = len(parent)
    a = min(_pmin(ch) for idx, ch in enumerate(parent) if idx != pos_i - 1)
    if c == 2:
        b = _second_bush_min(pnode, position_path)
    elif pos_i <= 2:
        b = _pmin(parent[2])
    else:
        b = None
        for idx in range(pos_i - 2, -1, -1):
            candidate = _freeze(parent[idx])
            if a not in trees.leaf_labels(candidate):
                b = _pmin(parent[idx])
                break
        if b is None:
            raise SemiPlanarError("local search failed to find b")
    return LocalSearchResult(a, b, max(i, a, b))


def _position_leaf_path(pnode, label):
    if isinstance(pnode, int):
        if pnode == label:
            return ()
        raise SemiPlanarError(f"leaf {label} not present")
    for idx, child in enumerate(pnode):
        if label in trees.leaf_labels(_freeze(child)):
            return (idx + 1,) + _position_leaf_path(child, label)
    raise SemiPlanarError(f"leaf {label} not present")


def sp_swap_labels(sp: SemiPlanarTree, i: int, j: int) -> PlanarTree:
    """Swap leaf labels on the canonical planar representative.

    Positions are kept; only the least-label ranks move.  The pair must be
    admissible: j must be a least subtree label at i's parent, or, for a
    binary parent, the other leaf-pair candidate or the second-bush
    minimum.  The output is planar and may sit outside the semi-planar
    space until the follow-up deletion.
    """
    pnode = sp_to_positions(sp)
    if i != j:
        _check_swap_admissible(pnode, i, j)
        _swap_leaf_values(pnode, i, j)
    return positions_to_planar(pnode)


def _check_swap_admissible(pnode, i, j):
    position_path = _position_leaf_path(pnode, i)
    parent = _pnode_at(pnode, position_path[:-1]) if position_path else None
    if parent is None:
        raise SemiPlanarError("cannot swap in a single-leaf tree")
    minima = {_pmin(ch) for ch in parent}
    if len(parent) > 2:
        allowed = minima
    else:
        allowed = minima | {_second_bush_min(pnode, position_path)}
    if j not in allowed:
        raise SemiPlanarError(f"swap ({i}, {j}) not admissible")


def _swap_leaf_values(pnode, i, j):
    def rec(node):
        if isinstance(node, int):
            return
        for idx, child in enumerate(node):
            if child == i:
                node[idx] = j
            elif child == j:
                node[idx] = i
            else:
                rec(child)

    rec(pnode)


# ------------------------------------------------------------ order sampling


def sp_sample_orders(shape: Tree, params, rng) -> SemiPlanarTree:
    """Independent per-branch-point draws from the (alpha, alpha-gamma)
    ordered-restaurant table law."""
    orders = {}
    for part in trees.parts(shape):
        if part.kind != "branch":
            continue
        c = len(trees.subtree_at(shape, part.path))
        if c >= 3:
            orders[part.path] = sample_table_order(c - 2, params.alpha, params.theta, rng)
    return semiplanar_from_shape(shape, orders)


def sp_orders_probability(sp: SemiPlanarTree, params):
    """Probability of the orders given the shape (the lifting kernel mass)."""
    p = params.one
    for path, sigma in sp.orders:
        p = p * ocrp_permutation_pmf(sigma, params.alpha, params.theta)
    return p


def all_order_assignments(shape: Tree):
    """Every semi-planar tree over a shape (for exact enumeration)."""
    import itertools

    branch_paths = []
    for part in trees.parts(shape):
        if part.kind == "branch":
            c = len(trees.subtree_at(shape, part.path))
            if c >= 3:
                branch_paths.append((part.path, c - 2))
    if not branch_paths:
        return [SemiPlanarTree(shape, ())]
    out = []
    pools = [list(itertools.permutations(range(1, m + 1))) for _, m in branch_paths]
    for combo in itertools.product(*pools):
        orders = tuple((path, sigma) for (path, _), sigma in zip(branch_paths, combo))
        out.append(SemiPlanarTree(shape, orders))
    return out


# ------------------------------------------------------------ internal structures


def _region_paths(tree: Tree, k: int):
    """Map each part of the [k]-shape to its region of ``tree``.

    Returns (shape, regions) where regions[part] describes how to extract
    the internal structure: for an external edge the path of the subtree,
    for an internal/root edge the path of the lower shape vertex, for a
    branch point the path of the corresponding vertex of ``tree``.
    """
    n = trees.num_leaves(tree)
    shape = trees.delete_leaves(tree, range(k + 1, n + 1))
    regions = {}

    def descend_to(labels) -> tuple:
        """Path of the minimal subtree of ``tree`` containing ``labels``."""
        path = ()
        node = tree
        while not isinstance(node, int):
            for rank, child in enumerate(node, start=1):
                if labels <= trees.leaf_labels(child):
                    path += (rank,)
                    node = child
                    break
            else:
                return path
        return path

    for part in trees.parts(shape):
        node = trees.subtree_at(shape, part.path)
        small = trees.leaf_labels(node) if not isinstance(node, int) else frozenset((node,))
        if part.kind == "leaf":
            # highest vertex of ``tree`` whose small labels are exactly {leaf}
            path = descend_to(small)
            while len(path) > 0:
                above = trees.subtree_at(tree, path[:-1])
                if trees.leaf_labels(above) & frozenset(range(1, k + 1)) == small:
                    path = path[:-1]
                else:
                    break
            regions[part] = path
        elif part.kind == "branch":
            regions[part] = descend_to(small)
        else:
            regions[part] = descend_to(small)
    return shape, regions


def internal_structure(tree: Tree, k: int, part: Part) -> Tree:
    """The standalone tree collapsing onto one part of the [k]-shape.

    Leaves are rank-relabelled; the root/leaf augmentations make external
    parts y_x-leaf trees, internal edges (y_x + 1)-leaf trees with leaf 1
    the continuation stub, and branch points (c + y_x)-leaf trees with
    leaves 1..c standing for the shape subtrees.
    """
    shape, regions = _region_paths(tree, k)
    if part not in regions:
        raise TreeError(f"{part} is not a part of the [{k}]-reduction")
    small = frozenset(range(1, k + 1))
    if part.kind == "leaf":
        node = trees.subtree_at(tree, regions[part])
        return _rank_relabel(node)
    if part.kind == "branch":
        vertex = trees.subtree_at(tree, regions[part])
        shape_node = trees.subtree_at(shape, part.path)
        c = len(shape_node)
        children = []
        for child in vertex:
            if trees.leaf_labels(child) & small:
                # the whole shape subtree shrinks to a stub carrying its
                # least label, so stubs take ranks 1..c after relabelling
                children.append(trees.min_leaf(child))
            else:
                children.append(child)
        assert sum(isinstance(ch, int) and ch <= k for ch in children) == c
        return _rank_relabel(tuple(children))
    # internal or root edge: the chain of vertices strictly inside it,
    # bottom-up from the lower shape vertex, with 0 the continuation stub
    lower_path = regions[part]
    if part.kind == "root":
        first_interior = 0
    else:
        upper_path = regions[Part("branch", part.path[:-1])]
        first_interior = len(upper_path) + 1
    node: Tree = 0
    for d in range(len(lower_path) - 1, first_interior - 1, -1):
        vertex = trees.subtree_at(tree, lower_path[:d])
        bushes = tuple(
            child for rank, child in enumerate(vertex, start=1) if rank != lower_path[d]
        )
        node = bushes + (node,)
    return _rank_relabel(node)


def _rank_relabel(node: Tree) -> Tree:
    labels = sorted(trees.leaf_labels(node) if not isinstance(node, int) else [node])
    mapping = {label: r for r, label in enumerate(labels, start=1)}

    def rec(x):
        if isinstance(x, int):
            return mapping[x]
        return tuple(rec(c) for c in x)

    return trees.canonicalize(rec(node))


def internal_structure_sp(sp: SemiPlanarTree, k: int, part: Part) -> SemiPlanarTree:
    """Internal structure with inherited branch-point orders.

    Extraction happens on the position form, so every surviving branch
    point keeps the left-to-right arrangement of its subtrees; the rank
    relabelling is monotone and leaves the stored permutations valid.
    """
    shape, regions = _region_paths(sp.shape, k)
    if part not in regions:
        raise TreeError(f"{part} is not a part of the [{k}]-reduction")
    pnode = sp_to_positions(sp)
    small = frozenset(range(1, k + 1))

    def ppath_of(rank_path):
        return _rank_path_to_position_path(sp, rank_path)

    def labels_of(p):
        return trees.leaf_labels(_freeze(p))

    if part.kind == "leaf":
        region = _pnode_at(pnode, ppath_of(regions[part]))
        return positions_to_semiplanar(_rank_relabel_positions(region))
    if part.kind == "branch":
        vertex = _pnode_at(pnode, ppath_of(regions[part]))
        slots = [_pmin(ch) if labels_of(ch) & small else ch for ch in vertex]
        return positions_to_semiplanar(_rank_relabel_positions(slots))
    lower_rank_path = regions[part]
    lower_ppath = ppath_of(lower_rank_path)
    if part.kind == "root":
        first_interior = 0
    else:
        first_interior = len(ppath_of(regions[Part("branch", part.path[:-1])])) + 1
    node = 0
    for d in range(len(lower_ppath) - 1, first_interior - 1, -1):
        vertex = _pnode_at(pnode, lower_ppath[:d])
        slots = [node if r == lower_ppath[d] else ch for r, ch in enumerate(vertex, start=1)]
        node = slots
    return positions_to_semiplanar(_rank_relabel_positions(node))


def _rank_relabel_positions(pnode):
    labels = sorted(trees.leaf_labels(_freeze(pnode)) if not isinstance(pnode, int) else [pnode])
    mapping = {label: r for r, label in enumerate(labels, start=1)}

    def rec(x):
        if isinstance(x, int):
            return mapping[x]
        return [rec(c) for c in x]

    return rec(pnode)


# ------------------------------------------------------------ regrafting


def substitute_leaves(tree: Tree, mapping: dict) -> Tree:
    """Replace leaves by labels or whole subtrees, then canonicalize."""

    def rec(x):
        if isinstance(x, int):
            return mapping.get(x, x)
        return tuple(rec(c) for c in x)

    return trees.canonicalize(rec(tree))


def regraft_structures(shape: Tree, structures: dict, label_sets: dict) -> Tree:
    """Rebuild the [n]-tree from a shape, per-part internal structures and
    per-part collapsed label sets (the inverse of extraction).

    ``structures[part]`` is rank-labelled as produced by
    ``internal_structure``; ``label_sets[part]`` lists the collapsed labels
    (for external edges including the shape leaf itself).
    """

    def wrap(edge_part: Part, below: Tree) -> Tree:
        mapping = {1: below}
        for offset, label in enumerate(sorted(label_sets[edge_part]), start=1):
            mapping[1 + offset] = label
        return substitute_leaves(structures[edge_part], mapping)

    def rec(node: Tree, path: tuple) -> Tree:
        if isinstance(node, int):
            part = Part("leaf", path)
            labels = sorted(label_sets[part])
            return substitute_leaves(structures[part], dict(enumerate(labels, start=1)))
        part = Part("branch", path)
        c = len(node)
        mapping = {}
        for rank, child in enumerate(node, start=1):
            mapping[rank] = rec(child, path + (rank,))
        for offset, label in enumerate(sorted(label_sets[part]), start=1):
            mapping[c + offset] = label
        inner = substitute_leaves(structures[part], mapping)
        return wrap(Part("root" if path == () else "internal", path), inner)

    return rec(shape, ())
