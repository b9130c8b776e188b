import math

import pytest

import sparsegan


def test_sparse_encode_exact_two_atom_system():
    atoms = [[1.0, 0.0], [1.0, 1.0]]
    code = sparsegan.sparse_encode([3.0, 2.0], atoms, max_atoms=2)
    got = dict(zip(code["indices"], code["coeffs"]))
    assert got.keys() == {0, 1}
    assert got[0] == pytest.approx(1.0, abs=1e-10)
    assert got[1] == pytest.approx(2.0, abs=1e-10)
    assert max(abs(r) for r in code["residual"]) < 1e-10
    assert code["reconstruction"] == pytest.approx([3.0, 2.0], abs=1e-10)

    hist = code["residual_norm_history"]
    assert hist[0] == pytest.approx(math.sqrt(13.0))
    assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))


def test_sparse_encode_residual_is_orthogonal_to_the_support():
    import random

    rng = random.Random(7)
    atoms = [[rng.gauss(0, 1) for _ in range(6)] for _ in range(20)]
    h = [rng.gauss(0, 1) for _ in range(6)]
    code = sparsegan.sparse_encode(h, atoms, max_atoms=3)
    assert 1 <= len(code["indices"]) <= 3
    h_norm = math.sqrt(sum(x * x for x in h))
    for idx in code["indices"]:
        dot = sum(r * a for r, a in zip(code["residual"], atoms[idx]))
        assert abs(dot) <= 1e-8 * h_norm


def test_sparse_encode_validates_its_arguments():
    atoms = [[1.0, 0.0], [0.0, 1.0]]
    with pytest.raises(ValueError):
        sparsegan.sparse_encode([1.0, 2.0], atoms, max_atoms=0)
    with pytest.raises(ValueError):
        sparsegan.sparse_encode([1.0], atoms, max_atoms=1)  # width mismatch
    with pytest.raises(ValueError):
        sparsegan.sparse_encode([1.0, 2.0], [[1.0, 0.0], [1.0]], max_atoms=1)


def test_least_squares_matches_the_hand_solution():
    out = sparsegan.least_squares([[1.0, 0.0], [1.0, 1.0]], [3.0, 2.0])
    assert out["coeffs"] == pytest.approx([1.0, 2.0], abs=1e-10)
    assert out["ridged"] is False


def test_topk_encoders_build_convex_combinations():
    # identity atoms: the output components are the combination coefficients
    axes = [[1.0 if j == i else 0.0 for j in range(4)] for i in range(4)]
    v = sparsegan.topk_static([0.4, -1.0, 2.0, 0.1], axes, k=2)
    assert all(c >= 0.0 for c in v)
    assert sum(v) == pytest.approx(1.0, abs=1e-12)
    assert sum(1 for c in v if c > 0.0) <= 2

    # a budget of one returns the best row exactly
    atoms = [[0.3, -0.2], [2.0, 1.0], [-1.0, 0.5]]
    single = sparsegan.topk_static([1.0, 0.0], atoms, k=1)
    assert single == [2.0, 1.0]

    # an unreachable threshold falls back to that same row
    fallback = sparsegan.topk_dynamic([1.0, 0.0], atoms, delta=1e9)
    assert fallback == [2.0, 1.0]


def test_bleu_matches_the_hand_example():
    score = sparsegan.bleu([["the", "the", "cat"]], [["the", "cat", "sat"]], n=2)
    assert score["score"] == pytest.approx(math.sqrt(1.0 / 3.0), abs=1e-10)
    assert score["skipped"] == 0

    clones = [["b", "a", "n", "a", "n", "a"]] * 4
    assert sparsegan.self_bleu(clones, n=2) == 1.0


def test_toy_grammar_round_trip():
    sents = sparsegan.synth_sentences(seed=3, n=12)
    assert len(sents) == 12
    assert sents == sparsegan.synth_sentences(seed=3, n=12)
    assert sents != sparsegan.synth_sentences(seed=4, n=12)
    assert all(sparsegan.grammar_accepts(s) for s in sents)
    assert sparsegan.grammar_membership_rate(sents + ["zz unknowable zz"]) == pytest.approx(
        12.0 / 13.0
    )
