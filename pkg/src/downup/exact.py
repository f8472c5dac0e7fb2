"""Exhaustive small-n enumeration, exact rational laws and kernels.

Everything here is Fraction arithmetic end to end: state spaces are
ordered lists of canonical encodings, distributions are dicts with
rational masses summing to exactly one, and kernels are sparse
row-stochastic matrices.  No floating point enters this module.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from downup import trees
from downup.chains import (
    _edge_above,
    _move_gap_mass,
    _shape_downstep_and_resample,
    _slide_leaf_up,
    itilde_distribution,
)
from downup.decorated_ops import (
    delete_decorated_leaf,
    relabel_decorated_after_deletion,
    split_decorated_edge,
    attach_decorated_leaf,
    swap_decorated_labels,
)
from downup.growth import (
    GrowthModel,
    growth_weight_table,
    apply_insertion,
    decorated_start,
    shape_initial_weight,
)
from downup.params import Params
from downup.semiplanar import (
    SemiPlanarTree,
    all_order_assignments,
    format_sp,
    semiplanar_from_shape,
    sp_delete_leaf,
    sp_local_search,
    sp_orders_probability,
    sp_swap_labels,
)
from downup.trees import DecoratedTree, CollapsedTree, Part, Tree, TreeError, reduced_mass
from downup.urns import (
    decrement_pmf,
    dirmult_pmf_lenient,
    ocrp_permutation_pmf,
)

__all__ = [
    "StateSpace",
    "ExactKernel",
    "CapExceeded",
    "DEFAULT_CAPS",
    "enumerate_space",
    "support_space",
    "count_binary_trees",
    "count_trees_by_compositions",
    "encode_state",
    "exact_law",
    "growth_law",
    "decorated_law_by_urn",
    "semiplanar_chain_kernel",
    "semiplanar_down_kernel",
    "nonplanar_chain_kernel_direct",
    "nonplanar_down_kernel_direct",
    "decorated_chain_kernel_direct",
    "collapsed_chain_kernel",
    "lift_orders_matrix",
    "conditional_lift_matrix",
    "projection_matrix",
    "matmul",
    "dist_through_kernel",
    "dist_residual",
    "kernel_residual",
    "pushforward",
    "collapsed_projection",
    "decorated_projection",
]

DEFAULT_CAPS = {"nonplanar": 9, "binary": 10, "semiplanar": 7}


class CapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class StateSpace:
    kind: str
    n: int
    k: int | None
    states: tuple
    index: dict

    def __len__(self):
        return len(self.states)


@dataclass
class ExactKernel:
    """Sparse row-stochastic rational matrix between two state spaces."""

    src: StateSpace
    dst: StateSpace
    rows: list  # list of {dst_index: Fraction}

    def row_sums(self):
        return [sum(row.values()) for row in self.rows]

    def check_stochastic(self):
        for i, total in enumerate(self.row_sums()):
            if total != 1:
                raise ValueError(f"row {i} sums to {total}")
        return True


def encode_state(state) -> str:
    if isinstance(state, SemiPlanarTree):
        return format_sp(state)
    if isinstance(state, DecoratedTree):
        body = ";".join(
            f"{trees.part_to_string(p)}={m}" for p, m in state.masses
        )
        return trees.format_tree(state.shape) + "|" + body
    if isinstance(state, CollapsedTree):
        body = ";".join(
            f"{trees.part_to_string(p)}={{{','.join(map(str, ls))}}}"
            for p, ls in state.label_sets
        )
        return trees.format_tree(state.shape) + "|" + body
    return trees.format_tree(state)


def _space(kind, n, k, states) -> StateSpace:
    ordered = tuple(sorted(states, key=encode_state))
    return StateSpace(kind, n, k, ordered, {s: i for i, s in enumerate(ordered)})


def enumerate_space(kind: str, n: int, k: int | None = None, cap: int | None = None) -> StateSpace:
    """All states, built by recursive insertion of leaves in all positions."""
    if kind in ("nonplanar", "binary", "semiplanar"):
        limit = cap if cap is not None else DEFAULT_CAPS[kind]
        if n > limit:
            raise CapExceeded(f"{kind} enumeration capped at {limit}, asked for {n}")
    if kind == "nonplanar" or kind == "binary":
        edges_only = kind == "binary"
        current = {1}
        for label in range(2, n + 1):
            grown = set()
            for t in current:
                for part in trees.parts(t):
                    if edges_only and not part.is_edge:
                        continue
                    grown.add(trees.insert_leaf(t, part, label))
            current = grown
        return _space(kind, n, None, current)
    if kind == "semiplanar":
        shapes = enumerate_space("nonplanar", n, cap=cap).states
        states = [sp for shape in shapes for sp in all_order_assignments(shape)]
        return _space(kind, n, None, states)
    if kind == "decorated":
        if k is None or not 1 <= k <= n:
            raise ValueError("decorated spaces need 1 <= k <= n")
        shapes = enumerate_space("nonplanar", k).states
        states = []
        for shape in shapes:
            part_list = trees.parts(shape)
            external = [p for p in part_list if p.is_external]
            spare = n - len(external)
            for combo in _compositions(spare, len(part_list)):
                masses = tuple(
                    (p, c + (1 if p.is_external else 0))
                    for p, c in zip(part_list, combo)
                )
                states.append(DecoratedTree(shape, masses))
        return _space(kind, n, k, states)
    if kind == "collapsed":
        if k is None or not 1 <= k <= n:
            raise ValueError("collapsed spaces need 1 <= k <= n")
        shapes = enumerate_space("nonplanar", k).states
        states = []
        big = list(range(k + 1, n + 1))
        for shape in shapes:
            part_list = trees.parts(shape)
            own = {
                p: (trees.min_leaf(trees.subtree_at(shape, p.path)),) if p.is_external else ()
                for p in part_list
            }
            for assignment in itertools.product(range(len(part_list)), repeat=len(big)):
                sets = {p: list(own[p]) for p in part_list}
                for label, slot in zip(big, assignment):
                    sets[part_list[slot]].append(label)
                states.append(
                    CollapsedTree(shape, tuple((p, tuple(sorted(sets[p]))) for p in part_list))
                )
        return _space(kind, n, k, states)
    raise ValueError(f"unknown space kind {kind!r}")


def _compositions(total, length):
    if length == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, length - 1):
            yield (first,) + rest


def support_space(kind: str, n: int, k: int | None, law: dict) -> StateSpace:
    """The sub-space carried by a stationary law.

    Stationarity closes its support under the kernel, so kernels may be
    built on it directly; this sidesteps the degenerate parameter classes
    whose unreachable states have no defined transition law.
    """
    return _space(kind, n, k, [s for s, p in law.items() if p > 0])


def count_binary_trees(n: int) -> int:
    """(2n-3)!! by direct double factorial."""
    if n < 2:
        return 1
    out = 1
    for odd in range(2 * n - 3, 0, -2):
        out *= odd
    return out


def count_trees_by_compositions(n: int) -> int:
    """Independent count of [n]-trees via the recursion over root-degree
    set partitions (each block grows its own subtree)."""
    from functools import lru_cache

    def set_partitions(items):
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for smaller in set_partitions(rest):
            for i in range(len(smaller)):
                yield smaller[:i] + [[first] + smaller[i]] + smaller[i + 1 :]
            yield [[first]] + smaller

    @lru_cache(maxsize=None)
    def count(m: int) -> int:
        if m == 1:
            return 1
        total = 0
        for blocks in set_partitions(list(range(m))):
            if len(blocks) < 2:
                continue
            prod = 1
            for block in blocks:
                prod *= count(len(block))
            total += prod
        return total

    return count(n)


# ------------------------------------------------------------ exact laws


def enumerate_insertions(state, model: GrowthModel):
    """All (next_state, probability) pairs of one growth step."""
    table = growth_weight_table(state, model)
    out = []
    for (part, loc), w in table.entries:
        if w == 0:
            continue
        out.append((apply_insertion(state, model, part, loc), w / table.total))
    return out


def exact_law(model: GrowthModel, steps: int, initial=None) -> dict:
    """Path-sum law after ``steps`` insertions from the initial state.

    ``initial`` may be a state or a distribution; the branch-point
    semi-planar start is the ordered-restaurant mixture over the star's
    orders.
    """
    if initial is None:
        initial = _exact_initial(model)
    dist = dict(initial) if isinstance(initial, dict) else {initial: Fraction(1)}
    for _ in range(steps):
        grown = {}
        for state, p in dist.items():
            for nxt, q in enumerate_insertions(state, model):
                grown[nxt] = grown.get(nxt, Fraction(0)) + p * q
        dist = grown
    return dist


def _exact_initial(model: GrowthModel):
    if model.variant in ("nonplanar", "internal"):
        state = semiplanar_from_shape(1) if model.semiplanar else 1
        return {state: Fraction(1)}
    if model.variant == "branchpoint":
        star = tuple(range(1, model.c + 1))
        if not model.semiplanar:
            return {star: Fraction(1)}
        out = {}
        for sp in all_order_assignments(star):
            out[sp] = sp_orders_probability(sp, model.params)
        return out
    if model.variant == "decorated":
        return {decorated_start(model.shape): Fraction(1)}
    raise TreeError(f"no exact initial state for {model.variant}")


def growth_law(kind: str, n: int, params: Params) -> dict:
    """Law of the n-leaf step of the plain or semi-planar growth process."""
    model = GrowthModel("semiplanar" if kind == "semiplanar" else "nonplanar", params)
    return exact_law(model, n - 1)


def decorated_law_by_urn(n: int, k: int, params: Params) -> dict:
    """The decorated projection law computed shape by shape via the urn.

    P(shape) comes from the [k]-growth law, the masses from the decorated
    growth process started at that shape; cross-checked in tests against
    the pushforward of the full law.
    """
    shape_law = growth_law("nonplanar", k, params)
    out = {}
    for shape, p in shape_law.items():
        model = GrowthModel("decorated", params, shape=shape)
        for d, q in exact_law(model, n - k).items():
            out[d] = out.get(d, Fraction(0)) + p * q
    return out


def pushforward(dist: dict, fn) -> dict:
    out = {}
    for state, p in dist.items():
        image = fn(state)
        out[image] = out.get(image, Fraction(0)) + p
    return out


def dist_residual(d1: dict, d2: dict) -> Fraction:
    keys = set(d1) | set(d2)
    zero = Fraction(0)
    return max((abs(d1.get(s, zero) - d2.get(s, zero)) for s in keys), default=zero)


# ------------------------------------------------------------ kernels


def _kernel_from_function(src: StateSpace, dst: StateSpace, row_fn) -> ExactKernel:
    rows = []
    for state in src.states:
        row = {}
        for nxt, p in row_fn(state):
            if p == 0:
                continue
            j = dst.index[nxt]
            row[j] = row.get(j, Fraction(0)) + p
        rows.append(row)
    return ExactKernel(src, dst, rows)


def semiplanar_down_step(sp: SemiPlanarTree, i: int) -> SemiPlanarTree:
    search = sp_local_search(sp, i)
    planar = sp_swap_labels(sp, i, search.i_tilde)
    return sp_delete_leaf(planar, search.i_tilde, relabel_after=True)


def semiplanar_down_kernel(n: int, params: Params, src=None, dst=None) -> ExactKernel:
    src = src or enumerate_space("semiplanar", n)
    dst = dst or enumerate_space("semiplanar", n - 1)

    def row_fn(sp):
        share = Fraction(1, n)
        return [(semiplanar_down_step(sp, i), share) for i in range(1, n + 1)]

    return _kernel_from_function(src, dst, row_fn)


def _up_rows(state, model):
    return enumerate_insertions(state, model)


def semiplanar_chain_kernel(n: int, params: Params, space=None) -> ExactKernel:
    space = space or enumerate_space("semiplanar", n)
    model = GrowthModel("semiplanar", params)

    def row_fn(sp):
        out = []
        share = Fraction(1, n)
        for i in range(1, n + 1):
            down = semiplanar_down_step(sp, i)
            for nxt, q in _up_rows(down, model):
                out.append((nxt, share * q))
        return out

    return _kernel_from_function(space, space, row_fn)


def nonplanar_down_rows(t: Tree, params: Params, convention: str = "ocrp"):
    n = trees.num_leaves(t)
    share = Fraction(1, n)
    out = []
    for i in range(1, n + 1):
        for itilde, p in itilde_distribution(t, i, params, convention):
            down = trees.delete_leaf(
                trees.swap_labels(t, i, itilde), itilde, relabel_after=True
            )
            out.append((down, share * p))
    return out


def nonplanar_down_kernel_direct(n: int, params: Params, src=None, dst=None, convention="ocrp") -> ExactKernel:
    src = src or enumerate_space("nonplanar", n)
    dst = dst or enumerate_space("nonplanar", n - 1)
    return _kernel_from_function(src, dst, lambda t: nonplanar_down_rows(t, params, convention))


def nonplanar_chain_kernel_direct(n: int, params: Params, space=None, convention="ocrp") -> ExactKernel:
    space = space or enumerate_space("nonplanar", n)
    model = GrowthModel("nonplanar", params)

    def row_fn(t):
        out = []
        for down, p in nonplanar_down_rows(t, params, convention):
            for nxt, q in _up_rows(down, model):
                out.append((nxt, p * q))
        return out

    return _kernel_from_function(space, space, row_fn)


# --------------------------------------------- lifting / projection matrices


def projection_matrix(src: StateSpace, dst: StateSpace, fn) -> ExactKernel:
    rows = []
    for state in src.states:
        rows.append({dst.index[fn(state)]: Fraction(1)})
    return ExactKernel(src, dst, rows)


def lift_orders_matrix(tree_space: StateSpace, sp_space: StateSpace, params: Params) -> ExactKernel:
    """The order-sampling kernel from plain trees to semi-planar trees."""
    rows = []
    for t in tree_space.states:
        row = {}
        for sp in all_order_assignments(t):
            row[sp_space.index[sp]] = sp_orders_probability(sp, params)
        rows.append(row)
    return ExactKernel(tree_space, sp_space, rows)


def conditional_lift_matrix(coarse: StateSpace, fine: StateSpace, fine_law: dict, fn) -> ExactKernel:
    """Conditional law of a fine state given its projection.

    ``fn`` maps fine states to coarse states; rows with zero coarse mass
    are left empty (the lift is undefined off the reachable class).
    """
    marginals = {}
    for state, p in fine_law.items():
        image = fn(state)
        marginals[image] = marginals.get(image, Fraction(0)) + p
    rows = [dict() for _ in coarse.states]
    for state, p in fine_law.items():
        if p == 0:
            continue
        image = fn(state)
        i = coarse.index[image]
        rows[i][fine.index[state]] = p / marginals[image]
    return ExactKernel(coarse, fine, rows)


def matmul(a: ExactKernel, b: ExactKernel) -> ExactKernel:
    if a.dst is not b.src and a.dst.states != b.src.states:
        raise ValueError("kernel shapes do not match")
    rows = []
    for row in a.rows:
        out = {}
        for j, p in row.items():
            for l, q in b.rows[j].items():
                out[l] = out.get(l, Fraction(0)) + p * q
        rows.append(out)
    return ExactKernel(a.src, b.dst, rows)


def dist_through_kernel(dist: dict, kernel: ExactKernel) -> dict:
    out = {}
    for state, p in dist.items():
        for j, q in kernel.rows[kernel.src.index[state]].items():
            target = kernel.dst.states[j]
            out[target] = out.get(target, Fraction(0)) + p * q
    return out


def kernel_residual(a: ExactKernel, b: ExactKernel, rows=None) -> Fraction:
    """Largest entrywise difference, optionally restricted to given rows."""
    worst = Fraction(0)
    indices = range(len(a.rows)) if rows is None else rows
    for i in indices:
        ra, rb = a.rows[i], b.rows[i]
        for j in set(ra) | set(rb):
            diff = abs(ra.get(j, Fraction(0)) - rb.get(j, Fraction(0)))
            if diff > worst:
                worst = diff
    return worst


# --------------------------------------------- decorated chain, exactly


def decorated_down_rows(d: DecoratedTree, params: Params):
    """All (state, probability) outcomes of the decorated down-phase."""
    alpha, gamma = params.alpha, params.gamma
    n = d.n
    k = trees.num_leaves(d.shape)
    mass = d.mass_of
    out = []
    for x, y_x in d.masses:
        if y_x == 0:
            continue
        p_sel = Fraction(y_x, n)
        if not (x.is_external and y_x == 1):
            down = DecoratedTree(d.shape, tuple((p, m - 1 if p == x else m) for p, m in d.masses))
            out.append((down, p_sel))
            continue
        i = trees.subtree_at(d.shape, x.path)
        v_path = x.path[:-1]
        v = Part("branch", v_path)
        c_v = len(trees.subtree_at(d.shape, v_path))
        y_v = mass[v]
        if c_v > 2:
            for n_g in range(y_v + 1):
                p_gap = dirmult_pmf_lenient(
                    y_v, [alpha, (c_v - 2) * alpha - gamma], [n_g, y_v - n_g]
                )
                if p_gap == 0:
                    continue
                if n_g > 0:
                    for y_new in range(1, n_g + 1):
                        q = decrement_pmf(n_g, y_new, alpha, alpha)
                        out.append((_move_gap_mass(d, x, v, y_new), p_sel * p_gap * q))
                else:
                    for state, q in _shape_down_rows(d, i, params):
                        out.append((state, p_sel * p_gap * q))
        else:
            below = _edge_above(d.shape, v_path)
            y_below = mass[below]
            if y_v > 0:
                for y_new in range(1, y_v + 1):
                    q = decrement_pmf(y_v, y_new, alpha, alpha - gamma)
                    out.append((_move_gap_mass(d, x, v, y_new), p_sel * q))
            elif y_below > 0:
                for n_b in range(1, y_below + 1):
                    q_b = decrement_pmf(y_below, n_b, gamma, gamma)
                    for n_t in range(1, n_b + 1):
                        q_t = dirmult_pmf_lenient(
                            n_b - 1, [1 - alpha, alpha - gamma], [n_t - 1, n_b - n_t]
                        )
                        if q_t == 0:
                            continue
                        out.append((_slide_leaf_up(d, x, v, below, n_b, n_t), p_sel * q_b * q_t))
            else:
                for state, q in _shape_down_rows(d, i, params):
                    out.append((state, p_sel * q))
    return out


def _shape_down_rows(d: DecoratedTree, i: int, params: Params):
    out = []
    for itilde, p in itilde_distribution(d.shape, i, params):
        swapped = swap_decorated_labels(d, i, itilde) if itilde != i else d
        reduced = relabel_decorated_after_deletion(
            delete_decorated_leaf(swapped, itilde), itilde
        )
        for state, q in resample_rows(reduced, params):
            out.append((state, p * q))
    return out


def resample_rows(d: DecoratedTree, params: Params):
    """All outcomes of resampling the next shape leaf into ``d``."""
    alpha, gamma = params.alpha, params.gamma
    label = trees.num_leaves(d.shape) + 1
    total = sum(reduced_mass(p, m) for p, m in d.masses)
    out = []
    for x, y_x in d.masses:
        tilde = reduced_mass(x, y_x)
        if tilde == 0:
            continue
        p_sel = Fraction(tilde, total)
        w_x = shape_initial_weight(d.shape, x, params)
        if x.is_edge:
            trials = tilde - 1
            weights = [1 - alpha, alpha - gamma, gamma, w_x]
            for combo in _compositions(trials, 4):
                q = dirmult_pmf_lenient(trials, weights, list(combo))
                if q == 0:
                    continue
                y_k, y_v, y_down, y_up = combo
                state = split_decorated_edge(
                    d,
                    x,
                    label,
                    leaf_mass=y_k + 1,
                    branch_mass=y_v,
                    upper_mass=y_down,
                    lower_mass=y_up + (1 if x.is_external else 0),
                )
                out.append((state, p_sel * q))
        else:
            for y_k in range(y_x):
                q = dirmult_pmf_lenient(y_x - 1, [1 - alpha, w_x], [y_k, y_x - 1 - y_k])
                if q == 0:
                    continue
                state = attach_decorated_leaf(
                    d, x, label, leaf_mass=y_k + 1, branch_mass=y_x - 1 - y_k
                )
                out.append((state, p_sel * q))
    return out


def decorated_chain_kernel_direct(n: int, k: int, params: Params, space=None) -> ExactKernel:
    space = space or enumerate_space("decorated", n, k)

    def row_fn(d):
        out = []
        for down, p in decorated_down_rows(d, params):
            model = GrowthModel("decorated", params, shape=down.shape)
            for nxt, q in enumerate_insertions(down, model):
                out.append((nxt, p * q))
        return out

    return _kernel_from_function(space, space, row_fn)


def collapsed_projection(sp_or_tree, k: int):
    t = sp_or_tree.shape if isinstance(sp_or_tree, SemiPlanarTree) else sp_or_tree
    return trees.project_collapsed(t, k)


def decorated_projection(sp_or_tree, k: int):
    t = sp_or_tree.shape if isinstance(sp_or_tree, SemiPlanarTree) else sp_or_tree
    return trees.project_decorated(t, k)


def collapsed_chain_kernel(n: int, k: int, params: Params, spaces=None) -> ExactKernel:
    """The lifted chain on collapsed trees: lift, one semi-planar step,
    project."""
    sp_space = spaces["semiplanar"] if spaces else enumerate_space("semiplanar", n)
    c_space = spaces["collapsed"] if spaces else enumerate_space("collapsed", n, k)
    sp_law = growth_law("semiplanar", n, params)
    lift = conditional_lift_matrix(c_space, sp_space, sp_law, lambda sp: collapsed_projection(sp, k))
    step = semiplanar_chain_kernel(n, params, space=sp_space)
    proj = projection_matrix(sp_space, c_space, lambda sp: collapsed_projection(sp, k))
    return matmul(matmul(lift, step), proj)
