import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polargraph.polar import (
    CodeDesign,
    GraphEdge,
    ReliabilitySequence,
    beta_expansion_sequence,
    beta_expansion_weights,
    bhattacharyya_parameters,
    bhattacharyya_sequence,
    design_from_dict,
    design_from_sequence,
    design_to_dict,
    encode,
    format_sequence,
    left_neighbors,
    parse_sequence,
    path_from_sequence,
    polar_transform,
    precedes,
    read_design,
    read_sequence,
    right_neighbors,
    sequence_from_path,
    write_design,
    write_sequence,
)


def generator_matrix(N):
    F = np.array([[1, 0], [1, 1]], dtype=int)
    G = np.array([[1]], dtype=int)
    while G.shape[0] < N:
        G = np.kron(G, F)
    return G


def designs(max_stages=6):
    @st.composite
    def build(draw):
        n = draw(st.integers(1, max_stages))
        mask = draw(st.integers(0, (1 << (1 << n)) - 1))
        return CodeDesign(n, mask)
    return build()


# --------------------------------------------------------------------------- CodeDesign

def test_design_from_bits_reads_left_to_right():
    d = CodeDesign.from_bits("00011011")
    assert d.info_indices == (3, 4, 6, 7)
    assert d.N == 8 and d.k == 4 and d.rate == 0.5
    assert d.bits == "00011011"


def test_design_value_semantics():
    a = CodeDesign.from_indices(8, [3, 4, 6, 7])
    b = CodeDesign.from_bits("00011011")
    assert a == b and hash(a) == hash(b)
    assert a.stable_hash == b.stable_hash
    assert len({a, b}) == 1


def test_stable_hash_is_frozen():
    # independent of interpreter hash seeding
    assert CodeDesign.from_bits("00011011").stable_hash == CodeDesign.from_bits("00011011").stable_hash
    assert CodeDesign.from_bits("0001").stable_hash != CodeDesign.from_bits("00010000").stable_hash


@pytest.mark.parametrize("bad", [dict(N=3, indices=[0]), dict(N=8, indices=[8]), dict(N=8, indices=[1, 1])])
def test_design_rejects_invalid(bad):
    with pytest.raises(ValueError):
        CodeDesign.from_indices(bad["N"], bad["indices"])


def test_design_rejects_oversize():
    with pytest.raises(ValueError):
        CodeDesign(21, 0)
    CodeDesign(20, 1)


def test_mask_hex_round_trip():
    d = CodeDesign.from_indices(128, range(0, 128, 3))
    assert CodeDesign.from_mask_hex(128, d.mask_hex) == d


def test_info_mask_is_read_only():
    m = CodeDesign.from_bits("0110").info_mask
    assert m.tolist() == [False, True, True, False]
    with pytest.raises(ValueError):
        m[0] = True


# --------------------------------------------------------------------------- encoding

def test_encode_examples():
    assert encode(CodeDesign.from_indices(2, [1]), [1]).tolist() == [1, 1]
    assert encode(CodeDesign.from_indices(4, [3]), [1]).tolist() == [1, 1, 1, 1]
    d = CodeDesign.from_indices(8, [3, 5, 6, 7])
    assert encode(d, [0, 0, 0, 0]).tolist() == [0] * 8


@pytest.mark.parametrize("N", [2, 4, 8, 16, 32])
def test_polar_transform_matches_kron_matrix(N):
    rng = np.random.default_rng(N)
    u = rng.integers(0, 2, size=(50, N))
    expected = u @ generator_matrix(N) % 2
    assert np.array_equal(polar_transform(u.astype(np.uint8)), expected)


def test_encode_batch_matches_single():
    d = CodeDesign.from_indices(16, [5, 7, 9, 11, 13, 14, 15])
    rng = np.random.default_rng(0)
    info = rng.integers(0, 2, size=(20, d.k), dtype=np.uint8)
    batch = encode(d, info)
    for row, word in zip(info, batch):
        assert np.array_equal(encode(d, row), word)


def test_encode_rejects_wrong_length():
    with pytest.raises(ValueError):
        encode(CodeDesign.from_indices(4, [2, 3]), [1])


@settings(max_examples=200, deadline=None)
@given(designs(), st.data())
def test_encode_involution(d, data):
    u = np.array(data.draw(st.lists(st.integers(0, 1), min_size=d.N, max_size=d.N)), dtype=np.uint8)
    assert np.array_equal(polar_transform(polar_transform(u)), u)


@settings(max_examples=200, deadline=None)
@given(designs(), st.data())
def test_encode_linearity(d, data):
    bits = st.lists(st.integers(0, 1), min_size=d.k, max_size=d.k)
    a = np.array(data.draw(bits), dtype=np.uint8)
    b = np.array(data.draw(bits), dtype=np.uint8)
    assert np.array_equal(encode(d, a ^ b), encode(d, a) ^ encode(d, b))


# --------------------------------------------------------------------------- sequences and paths

SAMPLE_Q = [7, 6, 3, 5, 4, 1, 2, 0]


def test_design_from_sequence_examples():
    seq = ReliabilitySequence(tuple(SAMPLE_Q))
    assert design_from_sequence(seq, 1).info_set == {7}
    assert design_from_sequence(seq, 0) == CodeDesign.all_frozen(8)
    assert design_from_sequence(seq, 8) == CodeDesign.all_information(8)
    with pytest.raises(ValueError):
        design_from_sequence(seq, 9)


def test_sequence_must_be_permutation():
    with pytest.raises(ValueError):
        ReliabilitySequence((0, 1, 1, 3))
    with pytest.raises(ValueError):
        ReliabilitySequence((0, 1, 2))


def test_sequence_nesting():
    seq = ReliabilitySequence(tuple(SAMPLE_Q))
    for k in range(1, 9):
        assert design_from_sequence(seq, k - 1).info_set < design_from_sequence(seq, k).info_set


def test_example_path_gives_example_sequence():
    designs_ = [CodeDesign.all_frozen(8)]
    for j in SAMPLE_Q:
        designs_.append(designs_[-1].with_bit(j, True))
    path = [GraphEdge(a, b, j) for a, b, j in zip(designs_, designs_[1:], SAMPLE_Q)]
    assert list(sequence_from_path(path).order) == SAMPLE_Q


def test_descending_path_gives_descending_sequence():
    N = 16
    seq = ReliabilitySequence(tuple(range(N - 1, -1, -1)))
    assert sequence_from_path(path_from_sequence(seq)) == seq


def test_path_with_repeated_label_is_rejected():
    a = CodeDesign.all_frozen(4)
    b = a.with_bit(3, True)
    with pytest.raises(ValueError):
        sequence_from_path([GraphEdge(a, b, 3), GraphEdge(a, b, 3)])


def test_path_must_span_and_connect():
    seq = ReliabilitySequence((3, 2, 1, 0))
    path = path_from_sequence(seq)
    with pytest.raises(ValueError):
        sequence_from_path(path[1:])
    with pytest.raises(ValueError):
        sequence_from_path(path[:-1])
    with pytest.raises(ValueError):
        sequence_from_path([path[0], path[2], path[1], path[3]])


def test_graph_edge_validates_endpoints():
    a = CodeDesign.from_bits("0001")
    with pytest.raises(ValueError):
        GraphEdge(a, CodeDesign.from_bits("0111"), 1)
    with pytest.raises(ValueError):
        GraphEdge(a, CodeDesign.from_bits("0011"), 3)


# --------------------------------------------------------------------------- neighbors and order

def labels(edges):
    return sorted(e.label for e in edges)


def test_neighbor_examples():
    d = CodeDesign.from_bits("00011011")
    assert labels(left_neighbors(d)) == [3, 4, 6, 7]
    assert labels(right_neighbors(d)) == [0, 1, 2, 5]
    assert left_neighbors(CodeDesign.all_frozen(8)) == []
    assert right_neighbors(CodeDesign.all_information(8)) == []
    assert labels(left_neighbors(CodeDesign.from_bits("0001"))) == [3]
    assert labels(right_neighbors(CodeDesign.from_bits("0000"))) == [0, 1, 2, 3]


def test_left_edges_point_into_design():
    d = CodeDesign.from_bits("00011011")
    for e in left_neighbors(d):
        assert e.target == d and e.source.info_set == d.info_set - {e.label}
    for e in right_neighbors(d):
        assert e.source == d and e.target.info_set == d.info_set | {e.label}


def test_precedes_examples():
    assert precedes(CodeDesign.from_bits("0001"), CodeDesign.from_bits("0011"))
    assert not precedes(CodeDesign.from_bits("0001"), CodeDesign.from_bits("0010"))
    a = CodeDesign.from_bits("0101")
    assert not precedes(a, a)
    with pytest.raises(ValueError):
        precedes(CodeDesign.from_bits("01"), CodeDesign.from_bits("0111"))


@settings(max_examples=200, deadline=None)
@given(designs())
def test_neighbor_counts_and_duality(d):
    left, right = left_neighbors(d), right_neighbors(d)
    assert len(left) == d.k and len(right) == d.N - d.k
    for e in right:
        assert any(f.source == d and f.label == e.label for f in left_neighbors(e.target))
    for e in left:
        assert any(f.target == d and f.label == e.label for f in right_neighbors(e.source))


# --------------------------------------------------------------------------- baseline constructions

def bhattacharyya_oracle(N, z0):
    """Plain float recursion over the index tree, most significant stage first."""
    z = [z0]
    while len(z) < N:
        z = [v for x in z for v in (2 * x - x * x, x * x)]
    return z


def rank_oracle(keys, descending_reliability_key):
    return sorted(range(len(keys)), key=lambda i: (descending_reliability_key(keys[i]), -i))


def test_bhattacharyya_examples():
    assert np.allclose(bhattacharyya_parameters(2, 0.5), [0.75, 0.25])
    assert np.allclose(bhattacharyya_parameters(4, 0.5), [0.9375, 0.5625, 0.4375, 0.0625])
    assert list(bhattacharyya_sequence(2, 0.5).order) == [1, 0]
    assert list(bhattacharyya_sequence(4, 0.5).order) == [3, 2, 1, 0]


def test_bhattacharyya_degenerate_tie_break():
    assert list(bhattacharyya_sequence(8, 0.0).order) == list(range(7, -1, -1))
    assert list(bhattacharyya_sequence(8, 1.0).order) == list(range(7, -1, -1))


def test_bhattacharyya_tiny_erasure_keeps_ordering():
    # log domain separates channels that would all round to zero in floats
    order = list(bhattacharyya_sequence(1024, 1e-300).order)
    assert order[0] == 1023 and order[-1] == 0
    assert sorted(order) == list(range(1024))


@pytest.mark.parametrize("N,z0", [(8, 0.5), (32, 0.5), (64, 0.3), (256, 0.5), (1024, 0.7)])
def test_bhattacharyya_matches_float_oracle(N, z0):
    z = bhattacharyya_oracle(N, z0)
    assert np.allclose(bhattacharyya_parameters(N, z0), z, rtol=1e-9, atol=1e-300)
    # rank only where the float oracle has separated values
    order = list(bhattacharyya_sequence(N, z0).order)
    zs = [z[i] for i in order]
    assert all(a <= b * (1 + 1e-9) for a, b in zip(zs, zs[1:]))


def test_beta_expansion_examples():
    w = beta_expansion_weights(4, 2 ** 0.25)
    assert np.allclose(w, [0.0, 1.0, 2 ** 0.25, 1 + 2 ** 0.25])
    assert list(beta_expansion_sequence(4, 2 ** 0.25).order) == [3, 2, 1, 0]
    assert list(beta_expansion_sequence(64, 2.0).order) == list(range(63, -1, -1))
    q = list(beta_expansion_sequence(8, 1.159).order)
    assert q.index(3) < q.index(4)
    assert math.isclose(beta_expansion_weights(8, 1.159)[4], 1.159 ** 2)


@pytest.mark.parametrize("N,beta", [(16, 1.159), (128, 1.159), (512, 2 ** 0.25), (1024, 1.3)])
def test_beta_expansion_matches_oracle(N, beta):
    def weight(i):
        return sum(beta ** j for j in range(N.bit_length()) if i >> j & 1)
    expected = rank_oracle([weight(i) for i in range(N)], lambda w: -w)
    assert list(beta_expansion_sequence(N, beta).order) == expected


@pytest.mark.parametrize("N", [2 ** n for n in range(1, 11)])
def test_baselines_are_permutations(N):
    for seq in (bhattacharyya_sequence(N, 0.5), beta_expansion_sequence(N, 2 ** 0.25)):
        assert sorted(seq.order) == list(range(N))


# --------------------------------------------------------------------------- files

def test_design_file_round_trip(tmp_path):
    d = CodeDesign.from_indices(16, [1, 9, 12, 15])
    write_design(tmp_path / "d.json", d)
    assert read_design(tmp_path / "d.json") == d
    assert design_to_dict(d) == {"n": 16, "k": 4, "info_indices": [1, 9, 12, 15]}


def test_all_frozen_design_file(tmp_path):
    d = CodeDesign.all_frozen(8)
    write_design(tmp_path / "z.json", d)
    assert read_design(tmp_path / "z.json").k == 0


def test_design_file_validation():
    with pytest.raises(ValueError):
        design_from_dict({"n": 8, "k": 3, "info_indices": [1, 2]})
    with pytest.raises(ValueError):
        design_from_dict({"n": 8, "k": 2, "info_indices": [2, 1]})


def test_sequence_file_round_trip(tmp_path):
    seq = ReliabilitySequence(tuple(SAMPLE_Q))
    write_sequence(tmp_path / "q.txt", seq, ["example"])
    text = (tmp_path / "q.txt").read_text()
    assert text.startswith("# example\n")
    assert read_sequence(tmp_path / "q.txt") == seq
    assert parse_sequence(format_sequence(seq)) == seq


def test_sequence_file_rejects_garbage():
    with pytest.raises(ValueError):
        parse_sequence("3\n2\nx\n0\n")
    with pytest.raises(ValueError):
        parse_sequence("1\n1\n")


def test_small_graph_is_connected_within_dimension():
    # bit swaps connect every pair of (4,2) designs
    all_k2 = {CodeDesign.from_indices(4, c) for c in itertools.combinations(range(4), 2)}
    start = next(iter(all_k2))
    seen = {start}
    frontier = [start]
    while frontier:
        d = frontier.pop()
        for e in left_neighbors(d):
            for f in right_neighbors(e.source):
                if f.target not in seen:
                    seen.add(f.target)
                    frontier.append(f.target)
    assert seen == all_k2
