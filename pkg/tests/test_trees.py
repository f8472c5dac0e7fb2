import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from downup.trees import (
    CollapsedTree,
    Part,
    TreeError,
    canonicalize,
    collapse_to_decorated,
    delete_leaf,
    delete_leaves,
    format_tree,
    insert_leaf,
    leaf_labels,
    leaf_path,
    min_leaf,
    num_leaves,
    parse_tree,
    part_from_string,
    part_to_string,
    parts,
    project_collapsed,
    project_decorated,
    spinal_decomposition,
    subtree_at,
    swap_labels,
    unlabelled_code,
)

FIG_TREE = "((1,(2,5,7),3,(6,8)),4)"


def random_tree(n, rng, p_branch=0.35):
    """Random n-leaf tree grown by uniform insertions (edges and branch points)."""
    tree = 1
    for label in range(2, n + 1):
        options = [p for p in parts(tree) if p.is_edge or rng.random() < p_branch]
        tree = insert_leaf(tree, rng.choice(options), label)
    return tree


@st.composite
def tree_strategy(draw, max_leaves=8):
    n = draw(st.integers(min_value=1, max_value=max_leaves))
    seed = draw(st.integers(min_value=0, max_value=2**30))
    return random_tree(n, random.Random(seed))


# ---------------------------------------------------------------- grammar


@pytest.mark.parametrize("text", ["1", "(1,2)", "((1,2),3)", "(1,2,3)", FIG_TREE])
def test_grammar_round_trip(text):
    assert format_tree(parse_tree(text)) == text


def test_parse_canonicalizes():
    assert format_tree(parse_tree("(3,(2,1))")) == "((1,2),3)"


def test_parse_rejects_garbage():
    for bad in ["", "()", "(1)", "(1,2", "1,2", "(1,2))", "(1,1)"]:
        with pytest.raises(TreeError):
            parse_tree(bad)


# ---------------------------------------------------------------- canonical form


@settings(max_examples=60, deadline=None)
@given(tree_strategy())
def test_canonicalize_idempotent(tree):
    assert canonicalize(tree) == tree
    assert canonicalize(canonicalize(tree)) == canonicalize(tree)


@settings(max_examples=60, deadline=None)
@given(tree_strategy())
def test_equality_is_structural(tree):
    assert parse_tree(format_tree(tree)) == tree
    assert hash(parse_tree(format_tree(tree))) == hash(tree)


# ---------------------------------------------------------------- insertion/deletion


def test_insert_into_single_leaf_gives_cherry():
    assert insert_leaf(1, Part("leaf", ()), 2) == (1, 2)


def test_insert_into_branch_point_gives_star():
    assert insert_leaf((1, 2), Part("branch", ()), 3) == (1, 2, 3)


def test_insert_duplicate_and_dangling():
    with pytest.raises(TreeError):
        insert_leaf((1, 2), Part("leaf", (1,)), 2)
    with pytest.raises(TreeError):
        insert_leaf((1, 2), Part("leaf", (5,)), 3)


def test_delete_cherry_leaf():
    assert delete_leaf((1, 2), 2) == 1


def test_delete_contracts_binary_parent():
    assert delete_leaf(parse_tree("((1,2),3)"), 2) == (1, 3)
    assert delete_leaf(parse_tree("((1,2),3)"), 2, relabel_after=True) == (1, 2)


def test_delete_from_star_keeps_branch():
    assert delete_leaf((1, 2, 3), 3) == (1, 2)


def test_delete_errors():
    with pytest.raises(TreeError):
        delete_leaf((1, 2), 5)
    with pytest.raises(TreeError):
        delete_leaf(1, 1)


def test_deletion_inverts_insertion_on_caterpillar():
    tree = parse_tree("(((1,2),3),4)")
    for part in parts(tree):
        bigger = insert_leaf(tree, part, 5)
        assert delete_leaf(bigger, 5) == tree


@settings(max_examples=40, deadline=None)
@given(tree_strategy(max_leaves=7))
def test_deletion_inverts_insertion(tree):
    label = num_leaves(tree) + 1
    for part in parts(tree):
        assert delete_leaf(insert_leaf(tree, part, label), label) == tree


# ---------------------------------------------------------------- label swapping


def test_swap_identity():
    tree = parse_tree("((1,2),3)")
    assert swap_labels(tree, 2, 2) == tree


def test_swap_hand_value():
    assert swap_labels(parse_tree("((1,2),3)"), 1, 3) == parse_tree("((3,2),1)")


@settings(max_examples=40, deadline=None)
@given(tree_strategy(max_leaves=6), st.integers(1, 6), st.integers(1, 6))
def test_swap_is_involution(tree, i, j):
    labels = sorted(leaf_labels(tree))
    i, j = labels[(i - 1) % len(labels)], labels[(j - 1) % len(labels)]
    assert swap_labels(swap_labels(tree, i, j), i, j) == tree


# ---------------------------------------------------------------- spinal decomposition


def test_spinal_decomposition_examples():
    assert spinal_decomposition((1, 2), 1).bushes == ((2,),)
    assert spinal_decomposition(parse_tree("((1,2),3)"), 1).bushes == ((2,), (3,))
    assert spinal_decomposition((1, 2, 3), 1).bushes == ((2, 3),)


def test_spinal_decomposition_exhausts_tree():
    rng = random.Random(5)
    for _ in range(25):
        tree = random_tree(rng.randint(2, 9), rng)
        for label in sorted(leaf_labels(tree)):
            sd = spinal_decomposition(tree, label)
            collected = {label}
            for bush in sd.bushes:
                for subtree in bush:
                    collected |= leaf_labels(subtree)
            assert collected == leaf_labels(tree)


# ---------------------------------------------------------------- parts and addresses


def test_parts_of_single_leaf():
    assert parts(1) == [Part("leaf", ())]


def test_parts_of_cherry():
    got = parts((1, 2))
    assert got == [Part("root", ()), Part("branch", ()), Part("leaf", (1,)), Part("leaf", (2,))]


def test_part_strings_round_trip():
    tree = parse_tree(FIG_TREE)
    for part in parts(tree):
        assert part_from_string(part_to_string(part), tree) == part


def test_leaf_path_and_subtree():
    tree = parse_tree(FIG_TREE)
    assert subtree_at(tree, leaf_path(tree, 7)) == 7
    assert subtree_at(tree, leaf_path(tree, 4)) == 4


# ---------------------------------------------------------------- projections


def test_project_paper_figure():
    tree = parse_tree(FIG_TREE)
    collapsed = project_collapsed(tree, 3)
    assert collapsed.shape == (1, 2, 3)
    got = {part_to_string(p): set(ls) for p, ls in collapsed.label_sets}
    assert got == {
        "e:": {4},
        "v:": {6, 8},
        "e:1": {1},
        "e:2": {2, 5, 7},
        "e:3": {3},
    }
    decorated = collapse_to_decorated(collapsed)
    assert {part_to_string(p): m for p, m in decorated.masses} == {
        "e:": 1,
        "v:": 2,
        "e:1": 1,
        "e:2": 3,
        "e:3": 1,
    }
    assert decorated.n == 8


def test_project_k_equals_n():
    tree = parse_tree("((1,2),3)")
    collapsed = project_collapsed(tree, 3)
    for part, labels in collapsed.label_sets:
        if part.is_external:
            assert len(labels) == 1
        else:
            assert labels == ()


def test_project_three_leaves():
    collapsed = project_collapsed(parse_tree("((1,3),2)"), 2)
    got = {part_to_string(p): set(ls) for p, ls in collapsed.label_sets}
    assert got == {"e:": set(), "v:": set(), "e:1": {1, 3}, "e:2": {2}}


def test_projected_sets_partition_n():
    rng = random.Random(9)
    for _ in range(40):
        n = rng.randint(2, 10)
        tree = random_tree(n, rng)
        k = rng.randint(1, n)
        collapsed = project_collapsed(tree, k)
        union = set()
        total = 0
        for part, labels in collapsed.label_sets:
            union |= set(labels)
            total += len(labels)
            if part.is_external:
                assert min_leaf(subtree_at(collapsed.shape, part.path)) in labels
        assert union == set(range(1, n + 1))
        assert total == n


def test_projection_tower_property():
    rng = random.Random(13)
    for _ in range(60):
        n = rng.randint(3, 10)
        tree = random_tree(n, rng)
        k2 = rng.randint(2, n)
        k1 = rng.randint(1, k2)
        direct = project_decorated(tree, k1)
        # project to [k2], rebuild a representative by keeping only shape info:
        # masses must agree with projecting the shape reduction directly
        via = project_decorated(tree, k2)
        assert collapse_shape_masses(via, k1) == {p: m for p, m in direct.masses}


def collapse_shape_masses(decorated, k):
    """Push decorated [k2]-tree masses down to [k] by part mapping."""
    from downup.decorated_ops import project_decorated_tree

    return {p: m for p, m in project_decorated_tree(decorated, k).masses}


def test_delete_leaves_reduction_matches_shape():
    rng = random.Random(3)
    for _ in range(30):
        n = rng.randint(2, 9)
        tree = random_tree(n, rng)
        k = rng.randint(1, n)
        collapsed = project_collapsed(tree, k)
        assert collapsed.shape == delete_leaves(tree, range(k + 1, n + 1))


def test_unlabelled_code_ignores_labels():
    assert unlabelled_code(parse_tree("((1,2),3)")) == unlabelled_code(parse_tree("((2,3),1)"))
    assert unlabelled_code(parse_tree("(1,2,3)")) != unlabelled_code(parse_tree("((1,2),3)"))
