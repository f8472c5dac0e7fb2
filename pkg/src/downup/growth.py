"""Growth processes: plain, semi-planar, internal, branch-point, decorated,
and growth from an arbitrarily weighted start.

Every process inserts one leaf (or one unit of mass) per step, choosing an
insertable part -- and for semi-planar trees a location inside it -- with
probability proportional to a weight.  The tables built here are also the
raw material for the exact path-sum enumerations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from downup import trees
from downup.params import Params
from downup.semiplanar import (
    SemiPlanarTree,
    semiplanar_from_shape,
    sp_insert_leaf,
    sample_table_order,
)
from downup.trees import DecoratedTree, Part, Tree, TreeError, reduced_mass
from downup.urns import sample_from

__all__ = [
    "GrowthModel",
    "WeightTable",
    "growth_weight_table",
    "initial_state",
    "grow_step",
    "grow",
    "decorated_start",
    "shape_initial_weight",
    "weighted_start_table",
    "weighted_start_grow_step",
]

VARIANTS = ("nonplanar", "semiplanar", "internal", "branchpoint", "decorated")


@dataclass(frozen=True)
class GrowthModel:
    """A growth variant with its parameters.

    ``branchpoint`` needs the branch order ``c`` (and alpha > gamma so the
    first insertion has positive weight); ``internal`` needs gamma > 0;
    ``decorated`` needs the [k]-shape the masses live on.  ``semiplanar``
    may also be combined with internal/branchpoint via the flag.
    """

    variant: str
    params: Params
    c: int | None = None
    shape: Tree | None = None
    semiplanar: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "semiplanar":
            object.__setattr__(self, "variant", "nonplanar")
            object.__setattr__(self, "semiplanar", True)
        if self.variant == "internal" and not self.params.gamma > 0:
            raise ValueError("internal growth needs gamma > 0")
        if self.variant == "branchpoint":
            if self.c is None or self.c < 2:
                raise ValueError("branchpoint growth needs c >= 2")
            if not self.params.alpha > self.params.gamma:
                raise ValueError("branchpoint growth needs alpha > gamma")
        if self.variant == "decorated" and self.shape is None:
            raise ValueError("decorated growth needs a shape")


@dataclass(frozen=True)
class WeightTable:
    """Weights keyed by (part, location); location 0 means an edge or a
    whole branch point (non-planar variants)."""

    entries: tuple  # (((part, location), weight), ...)
    total: object

    def as_dict(self) -> dict:
        return dict(self.entries)


def _edge_weight(part: Part, params: Params):
    return (1 - params.alpha) if part.kind == "leaf" else params.gamma


def _branch_weight(c: int, params: Params):
    return (c - 1) * params.alpha - params.gamma


def _standard_rows(tree: Tree, params: Params, split_locations: bool):
    for part in trees.parts(tree):
        if part.is_edge:
            yield (part, 0), _edge_weight(part, params)
        else:
            c = len(trees.subtree_at(tree, part.path))
            if split_locations:
                for loc in range(1, c - 1):
                    yield (part, loc), params.alpha
                yield (part, c - 1), params.alpha - params.gamma
            else:
                yield (part, 0), _branch_weight(c, params)


def growth_weight_table(state, model: GrowthModel) -> WeightTable:
    params = model.params
    if model.variant == "decorated":
        if not isinstance(state, DecoratedTree):
            raise TreeError("decorated growth needs a DecoratedTree state")
        rows = []
        for part, mass in state.masses:
            w = reduced_mass(part, mass) + shape_initial_weight(state.shape, part, params)
            rows.append(((part, 0), w))
        return _table(rows)

    tree = state.shape if isinstance(state, SemiPlanarTree) else state
    rows = list(_standard_rows(tree, params, model.semiplanar))

    if model.variant == "internal":
        # the edge above leaf 1 plays the internal-edge role
        leaf1 = Part("leaf", trees.leaf_path(tree, 1))
        rows = [
            ((part, loc), params.gamma if (part, loc) == (leaf1, 0) else w)
            for (part, loc), w in rows
        ]
    elif model.variant == "branchpoint":
        frozen = {Part("root", ())} | {
            Part("leaf", trees.leaf_path(tree, j)) for j in range(1, model.c + 1)
        }
        rows = [
            ((part, loc), 0 * params.alpha if part in frozen else w)
            for (part, loc), w in rows
        ]
    return _table(rows)


def _table(rows) -> WeightTable:
    rows = tuple(rows)
    total = 0
    for _, w in rows:
        if w < 0:
            raise TreeError(f"negative growth weight {w}")
        total = total + w
    return WeightTable(rows, total)


def initial_state(model: GrowthModel, rng=None):
    if model.variant in ("nonplanar", "internal"):
        return semiplanar_from_shape(1) if model.semiplanar else 1
    if model.variant == "branchpoint":
        star = tuple(range(1, model.c + 1))
        if not model.semiplanar:
            return star
        if rng is None:
            raise TreeError("the semi-planar branch-point start needs an rng")
        sigma = sample_table_order(model.c - 2, model.params.alpha, model.params.theta, rng)
        return semiplanar_from_shape(star, {(): sigma} if model.c >= 3 else {})
    if model.variant == "decorated":
        return decorated_start(model.shape)
    raise TreeError(f"no initial state for {model.variant}")


def decorated_start(shape: Tree) -> DecoratedTree:
    masses = tuple((p, 1 if p.is_external else 0) for p in trees.parts(shape))
    return DecoratedTree(trees.canonicalize(shape), masses)


def shape_initial_weight(shape: Tree, part: Part, params: Params):
    if part.is_edge:
        return _edge_weight(part, params)
    return _branch_weight(len(trees.subtree_at(shape, part.path)), params)


def next_label(state) -> int:
    tree = state.shape if isinstance(state, SemiPlanarTree) else state
    return max(trees.leaf_labels(tree)) + 1


def grow_step(state, model: GrowthModel, rng):
    """One growth step: sample a part (and location) and insert."""
    table = growth_weight_table(state, model)
    if table.total <= 0:
        raise TreeError("total growth weight is zero")
    part, loc = sample_from(table.entries, rng, total=table.total)
    return apply_insertion(state, model, part, loc)


def apply_insertion(state, model: GrowthModel, part: Part, loc: int):
    if model.variant == "decorated":
        masses = tuple((p, m + 1 if p == part else m) for p, m in state.masses)
        return DecoratedTree(state.shape, masses)
    if isinstance(state, SemiPlanarTree):
        return sp_insert_leaf(state, part, loc, next_label(state))
    return trees.insert_leaf(state, part, next_label(state))


def grow(model: GrowthModel, steps: int, rng):
    """Run ``steps`` insertions from the model's initial state."""
    state = initial_state(model, rng)
    for _ in range(steps):
        state = grow_step(state, model, rng)
    return state


# ------------------------------------------------------- weighted start


def weighted_start_table(sp: SemiPlanarTree, params: Params) -> WeightTable:
    """The standard semi-planar table, as explicit per-gap weights."""
    model = GrowthModel("semiplanar", params)
    return growth_weight_table(sp, model)


def weighted_start_grow_step(sp: SemiPlanarTree, table: WeightTable, params: Params, rng):
    """One growth step from explicitly weighted gaps.

    Samples a gap from the table, inserts, and reorganizes the table:
    the fresh leaf edge gets 1-alpha; a branch insertion puts alpha
    immediately left of the new subtree and shifts the old gap weights
    right; an edge insertion keeps the old edge weight below the new
    branch point, puts gamma above it, and alpha-gamma in the new branch
    point's single gap.
    """
    if table.total <= 0:
        raise TreeError("total growth weight is zero")
    entries = table.as_dict()
    part, loc = sample_from(table.entries, rng, total=table.total)
    label = next_label(sp)
    grown = sp_insert_leaf(sp, part, loc, label)
    new_entries = {}
    for (old_part, old_loc), w in entries.items():
        key = _remap_gap(old_part, old_loc, part, loc, sp)
        if key is not None:
            new_entries[key] = w
    if part.is_edge:
        inner = part.path + (1,)
        new_entries[(Part("internal", part.path) if part.path else Part("root", ()), 0)] = params.gamma
        new_entries[(Part("branch", part.path), 1)] = params.alpha - params.gamma
        new_entries[(Part("leaf", part.path + (2,)), 0)] = 1 - params.alpha
        # the old edge weight stays below the new branch point
        below = trees.subtree_at(grown.shape, inner)
        kind = "leaf" if isinstance(below, int) else "internal"
        new_entries[(Part(kind, inner), 0)] = entries[(part, loc)]
    else:
        c_new = len(trees.subtree_at(grown.shape, part.path))
        new_entries[(part, loc)] = params.alpha
        new_entries[(Part("leaf", part.path + (c_new,)), 0)] = 1 - params.alpha
    rows = tuple(sorted(new_entries.items(), key=lambda kv: (kv[0][0], kv[0][1])))
    return grown, _table(rows)


def _is_prefix(prefix: tuple, path: tuple) -> bool:
    return path[: len(prefix)] == prefix


def _remap_gap(old_part: Part, old_loc: int, at: Part, at_loc: int, sp: SemiPlanarTree):
    """Address of a pre-insertion gap after inserting at ``(at, at_loc)``.

    Returns None for the gap that was consumed (edge case) or shifted into
    a fresh key handled by the caller.
    """
    p = at.path
    if at.is_edge:
        if old_part == at:
            return None  # replaced by the four new rows
        if _is_prefix(p, old_part.path):
            # inside the subtree now hanging below the new branch point
            tail = old_part.path[len(p):]
            return (Part(old_part.kind, p + (1,) + tail), old_loc)
        return (old_part, old_loc)
    # branch insertion at location at_loc: gaps at the same branch shift
    if old_part == at and old_loc >= at_loc:
        return (old_part, old_loc + 1)
    return (old_part, old_loc)
