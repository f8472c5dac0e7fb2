"""Down-up Markov chains.

One step is a down-phase (select a leaf, search locally, swap, delete,
relabel by the increasing bijection) followed by an up-phase (one step of
the matching growth rule).  The chains live on four state spaces: plain
trees, semi-planar trees, decorated trees, and -- through the lifting
kernels -- any mixture of them.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable

from downup import trees
from downup.decorated_ops import (
    annotate,
    delete_decorated_leaf,
    read_annotated,
    relabel_decorated_after_deletion,
    split_decorated_edge,
    attach_decorated_leaf,
    swap_decorated_labels,
)
from downup.growth import (
    GrowthModel,
    decorated_start,
    growth_weight_table,
    apply_insertion,
    shape_initial_weight,
)
from downup.params import Params
from downup.semiplanar import (
    LocalSearchResult,
    SemiPlanarTree,
    regraft_structures,
    sp_delete_leaf,
    sp_local_search,
    sp_sample_orders,
    sp_swap_labels,
)
from downup.trees import DecoratedTree, Part, Tree, TreeError, reduced_mass
from downup.urns import (
    sample_betabin,
    sample_decrement,
    sample_dirmult,
    sample_from,
)

__all__ = [
    "ChainError",
    "DownStepTrace",
    "identity_transform",
    "local_search_transform",
    "generic_downup_step",
    "semiplanar_chain_step",
    "itilde_distribution",
    "nonplanar_chain_step",
    "decorated_chain_step",
    "resample_leaf",
    "sample_label_partition",
    "lift_decorated",
    "lift_tree",
]


class ChainError(ValueError):
    pass


@dataclass
class DownStepTrace:
    """Audit record of one down-phase (off by default in hot loops)."""

    selected: int | Part
    search: LocalSearchResult | None = None
    case: str | None = None
    pre: object = None
    post: object = None
    draws: dict | None = None


# ------------------------------------------------------------ generic chain


def identity_transform(tree: Tree, i: int):
    return tree, i


def local_search_transform(tree: Tree, i: int):
    """The binary local-search swap (spinal bushes only); the tree must be
    binary at the selected leaf's parent for the search to be exhaustive."""
    sd = trees.spinal_decomposition(tree, i)
    a = min(trees.min_leaf(s) for s in sd.bushes[0])
    b = min((trees.min_leaf(s) for s in sd.bushes[1]), default=0) if len(sd.bushes) > 1 else 0
    itilde = max(i, a, b)
    return trees.swap_labels(tree, i, itilde), itilde


def generic_downup_step(
    state: Tree,
    transform: Callable,
    model: GrowthModel,
    rng,
    relabel: bool = True,
):
    """One (f, G)-step: transform, delete, relabel, insert by the growth rule.

    The no-relabel variant re-inserts the deleted label itself and is only
    exposed for the exchangeable case gamma = 1 - alpha.
    """
    n = trees.num_leaves(state)
    if n < 3:
        raise ChainError("down-up steps need at least three leaves")
    i = rng.randrange(1, n + 1)
    transformed, itilde = transform(state, i)
    if not isinstance(itilde, int) or itilde not in trees.leaf_labels(state):
        raise ChainError(f"transform returned a non-leaf: {itilde!r}")
    if relabel:
        down = trees.delete_leaf(transformed, itilde, relabel_after=True)
        label = n
    else:
        if model.params.gamma != 1 - model.params.alpha:
            raise ChainError("the no-relabel variant needs gamma = 1 - alpha")
        down = trees.delete_leaf(transformed, itilde, relabel_after=False)
        label = itilde
    table = growth_weight_table(down, model)
    part, loc = sample_from(table.entries, rng, total=table.total)
    return trees.insert_leaf(down, part, label)


# ------------------------------------------------------------ semi-planar chain


def semiplanar_chain_step(sp: SemiPlanarTree, params: Params, rng, trace: DownStepTrace | None = None):
    """One step of the semi-planar chain: local search, swap, delete,
    relabel, then a semi-planar growth insertion."""
    n = trees.num_leaves(sp.shape)
    if n < 3:
        raise ChainError("down-up steps need at least three leaves")
    i = rng.randrange(1, n + 1)
    search = sp_local_search(sp, i)
    planar = sp_swap_labels(sp, i, search.i_tilde)
    down = sp_delete_leaf(planar, search.i_tilde, relabel_after=True)
    if trace is not None:
        trace.selected = i
        trace.search = search
        trace.pre = sp
        trace.post = down
    model = GrowthModel("semiplanar", params)
    table = growth_weight_table(down, model)
    part, loc = sample_from(table.entries, rng, total=table.total)
    return apply_insertion(down, model, part, loc)


# ------------------------------------------------------------ non-planar chain


def itilde_distribution(tree: Tree, i: int, params: Params, convention: str = "ocrp"):
    """Conditional law of the deleted leaf given the selected leaf.

    In a binary branch point the outcome is deterministic: the maximum of
    the selected leaf and the least labels of the first two spinal bushes.
    In a branch point with c > 2 children the law is read off the
    (alpha, alpha-gamma) ordered restaurant:

    - selected leaf among the two least subtrees: the deleted leaf is the
      least label of the leftmost extra subtree;
    - otherwise: the deleted leaf is the selected leaf unless some
      higher-ranked subtree is the immediate left neighbour.

    ``convention="display"`` instead evaluates the printed single-letter
    table (denominator (c-1)alpha - gamma), which does not normalise; it
    is exposed so the verifier can report both candidates side by side.
    """
    alpha, gamma = params.alpha, params.gamma
    path = trees.leaf_path(tree, i)
    if path == ():
        raise ChainError("need at least two leaves")
    parent = trees.subtree_at(tree, path[:-1])
    c = len(parent)
    if c == 2:
        sd = trees.spinal_decomposition(tree, i)
        a = min(trees.min_leaf(s) for s in sd.bushes[0])
        b = min((trees.min_leaf(s) for s in sd.bushes[1]), default=0) if len(sd.bushes) > 1 else 0
        return [(max(i, a, b), params.one)]
    minima = sorted(trees.min_leaf(child) for child in parent)
    j = minima.index(i) + 1
    if convention == "ocrp":
        denom = (c - 2) * alpha - gamma
        if denom <= 0:
            raise ChainError("multifurcating branch points need (c-2)alpha > gamma")
        if j <= 2:
            rows = [(minima[2], (alpha - gamma) / denom)]
            rows += [(minima[jp - 1], alpha / denom) for jp in range(4, c + 1)]
        else:
            rows = [(minima[j - 1], ((j - 2) * alpha - gamma) / denom)]
            rows += [(minima[jp - 1], alpha / denom) for jp in range(j + 1, c + 1)]
        return rows
    if convention == "display":
        denom = (c - 1) * alpha - gamma
        if j <= 2:
            rows = [(minima[2], (alpha - gamma) / denom)]
            rows += [(minima[jp - 1], alpha / denom) for jp in range(4, c + 1)]
        else:
            rows = [(minima[j - 1], ((c - 1 - j) * alpha - gamma) / denom)]
            rows += [(minima[jp - 1], alpha / denom) for jp in range(j + 1, c + 1)]
        return rows
    raise ChainError(f"unknown convention {convention!r}")


def nonplanar_chain_step(tree: Tree, params: Params, rng, trace: DownStepTrace | None = None):
    """One step of the chain on plain trees, using the explicit law of the
    deleted leaf instead of lifting to a semi-planar tree."""
    n = trees.num_leaves(tree)
    if n < 3:
        raise ChainError("down-up steps need at least three leaves")
    i = rng.randrange(1, n + 1)
    law = itilde_distribution(tree, i, params)
    itilde = sample_from(law, rng)
    down = trees.delete_leaf(trees.swap_labels(tree, i, itilde), itilde, relabel_after=True)
    if trace is not None:
        trace.selected = i
        trace.draws = {"itilde": itilde}
        trace.pre = tree
        trace.post = down
    model = GrowthModel("nonplanar", params)
    table = growth_weight_table(down, model)
    part, loc = sample_from(table.entries, rng, total=table.total)
    return trees.insert_leaf(down, part, n)


# ------------------------------------------------------------ decorated chain


def _edge_above(shape: Tree, path: tuple) -> Part:
    node = trees.subtree_at(shape, path)
    if path == ():
        return Part("leaf" if isinstance(node, int) else "root", path)
    return Part("leaf" if isinstance(node, int) else "internal", path)


def decorated_chain_step(d: DecoratedTree, params: Params, rng, trace: DownStepTrace | None = None):
    """One step of the autonomous decorated chain.

    Down-phase: pick a part with probability mass/n.  Away from the
    boundary the mass just drops by one.  On an external edge of mass one
    the local search is resolved in law: a beta-binomial decides whether
    the neighbouring gap is occupied, decrement draws give the new leaf
    mass, and when the search leaves the shape the shape itself takes a
    down-step and the lost leaf is resampled.  Up-phase: one decorated
    growth step.
    """
    d.validate()
    alpha, gamma = params.alpha, params.gamma
    n = d.n
    k = trees.num_leaves(d.shape)
    if n <= k:
        raise ChainError("decorated chains need mass n > k")
    mass = d.mass_of
    x = sample_from(((p, m) for p, m in d.masses), rng, total=n)
    if trace is not None:
        trace.selected = x
        trace.pre = d

    if not (x.is_external and mass[x] == 1):
        case = {"leaf": "A1", "internal": "A2", "root": "A2", "branch": "A3"}[x.kind]
        down = DecoratedTree(d.shape, tuple((p, m - 1 if p == x else m) for p, m in d.masses))
    else:
        i = trees.subtree_at(d.shape, x.path)
        v_path = x.path[:-1]
        v = Part("branch", v_path)
        c_v = len(trees.subtree_at(d.shape, v_path))
        y_v = mass[v]
        if c_v > 2:
            n_g = sample_betabin(y_v, alpha, (c_v - 2) * alpha - gamma, rng)
            if n_g > 0:
                case = "B1"
                y_new = sample_decrement(n_g, alpha, alpha, rng)
                down = _move_gap_mass(d, x, v, y_new)
            else:
                case = "B2"
                down = _shape_downstep_and_resample(d, i, params, rng, trace)
        else:
            below = _edge_above(d.shape, v_path)
            if y_v > 0:
                case = "B1"
                y_new = sample_decrement(y_v, alpha, alpha - gamma, rng)
                down = _move_gap_mass(d, x, v, y_new)
            elif mass[below] > 0:
                case = "B3"
                n_b = sample_decrement(mass[below], gamma, gamma, rng)
                n_t = 1 + sample_betabin(n_b - 1, 1 - alpha, alpha - gamma, rng)
                down = _slide_leaf_up(d, x, v, below, n_b, n_t)
            else:
                case = "B4"
                down = _shape_downstep_and_resample(d, i, params, rng, trace)
    if trace is not None:
        trace.case = case
        trace.post = down

    model = GrowthModel("decorated", params, shape=down.shape)
    table = growth_weight_table(down, model)
    part, _ = sample_from(table.entries, rng, total=table.total)
    return apply_insertion(down, model, part, 0)


def _move_gap_mass(d: DecoratedTree, x: Part, v: Part, y_new: int) -> DecoratedTree:
    """The swapped-in subtree's mass moves from the branch point to the
    leaf edge."""

    def new_mass(p, m):
        if p == x:
            return y_new
        if p == v:
            return m - y_new
        return m

    return DecoratedTree(d.shape, tuple((p, new_mass(p, m)) for p, m in d.masses))


def _slide_leaf_up(d: DecoratedTree, x: Part, v: Part, below: Part, n_b: int, n_t: int) -> DecoratedTree:
    """Binary branch point with mass on the parent edge: the leaf slides up
    past the nearest bush; the shape is unchanged but the masses shuffle."""

    def new_mass(p, m):
        if p == x:
            return n_t
        if p == v:
            return n_b - n_t
        if p == below:
            return m - n_b
        return m

    return DecoratedTree(d.shape, tuple((p, new_mass(p, m)) for p, m in d.masses))


def _shape_downstep_and_resample(d: DecoratedTree, i: int, params: Params, rng, trace=None):
    """The local search leaves the shape: swap, delete, relabel, resample."""
    law = itilde_distribution(d.shape, i, params)
    itilde = sample_from(law, rng)
    if trace is not None:
        trace.draws = {"itilde": itilde}
    swapped = swap_decorated_labels(d, i, itilde) if itilde != i else d
    reduced = relabel_decorated_after_deletion(delete_decorated_leaf(swapped, itilde), itilde)
    return resample_leaf(reduced, params, rng)


def resample_leaf(d: DecoratedTree, params: Params, rng) -> DecoratedTree:
    """Regrow the highest shape leaf into a decorated [k-1]-tree.

    A part is chosen with probability proportional to its reduced mass;
    its mass then splits by a Dirichlet-multinomial between the new leaf,
    the new branch point, the piece above it, and the continuation of the
    part (which keeps the part's external/internal role).
    """
    d.validate()
    alpha, gamma = params.alpha, params.gamma
    label = trees.num_leaves(d.shape) + 1
    rows = [(p, reduced_mass(p, m)) for p, m in d.masses]
    total = sum(w for _, w in rows)
    if total <= 0:
        raise ChainError("resampling needs spare mass")
    x = sample_from(rows, rng, total=total)
    y_x = d.mass_of[x]
    w_x = shape_initial_weight(d.shape, x, params)
    if x.is_edge:
        trials = reduced_mass(x, y_x) - 1
        y_k, y_v, y_down, y_up = sample_dirmult(trials, [1 - alpha, alpha - gamma, gamma, w_x], rng)
        return split_decorated_edge(
            d,
            x,
            label,
            leaf_mass=y_k + 1,
            branch_mass=y_v,
            upper_mass=y_down,
            lower_mass=y_up + (1 if x.is_external else 0),
        )
    y_k, y_rest = sample_dirmult(y_x - 1, [1 - alpha, w_x], rng)
    return attach_decorated_leaf(d, x, label, leaf_mass=y_k + 1, branch_mass=y_rest)


# ------------------------------------------------------------ lifting kernels


def sample_label_partition(d: DecoratedTree, rng) -> dict:
    """Uniform assignment of the collapsed labels to parts with the given
    reduced masses (exchangeability makes every assignment equally likely)."""
    k = trees.num_leaves(d.shape)
    labels = list(range(k + 1, d.n + 1))
    rng.shuffle(labels)
    out = {}
    cursor = 0
    for part, m in d.masses:
        take = reduced_mass(part, m)
        chunk = labels[cursor : cursor + take]
        cursor += take
        if part.is_external:
            chunk = chunk + [trees.min_leaf(trees.subtree_at(d.shape, part.path))]
        out[part] = tuple(sorted(chunk))
    return out


def _sample_structure(part: Part, mass: int, shape: Tree, params: Params, rng) -> Tree:
    from downup.growth import grow_step

    extra = reduced_mass(part, mass)
    if part.kind == "leaf":
        model = GrowthModel("nonplanar", params)
        state = 1
        steps = mass - 1
    elif part.kind == "branch":
        c = len(trees.subtree_at(shape, part.path))
        if extra == 0:
            return tuple(range(1, c + 1))
        model = GrowthModel("branchpoint", params, c=c)
        state = tuple(range(1, c + 1))
        steps = extra
    else:
        if extra == 0:
            return 1
        model = GrowthModel("internal", params)
        state = 1
        steps = extra
    for _ in range(steps):
        state = grow_step(state, model, rng)
    return state


def lift_decorated(d: DecoratedTree, params: Params, rng) -> SemiPlanarTree:
    """Sample a semi-planar tree conditional on its decorated projection.

    Internal structures are conditionally independent given the decorated
    tree (growth, internal growth, or branch-point growth according to the
    part), labels are assigned uniformly, and the branch-point orders are
    drawn from the ordered-restaurant law given the shape.
    """
    d.validate()
    label_sets = sample_label_partition(d, rng)
    structures = {
        part: _sample_structure(part, m, d.shape, params, rng) for part, m in d.masses
    }
    tree = regraft_structures(d.shape, structures, label_sets)
    return sp_sample_orders(tree, params, rng)


def lift_tree(tree: Tree, params: Params, rng) -> SemiPlanarTree:
    """Lift a plain tree by sampling branch-point orders given the shape."""
    return sp_sample_orders(tree, params, rng)
