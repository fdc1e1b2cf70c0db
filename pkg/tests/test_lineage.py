import numpy as np
import pytest

from bifurk.lineage import Lineage


def test_from_dense_is_complete():
    lin = Lineage.from_dense(np.arange(7.0))
    assert lin.depth == 2 and len(lin) == 7 and lin.max_index == 7
    assert lin[5] == 4.0
    with pytest.raises(ValueError):
        Lineage.from_dense(np.arange(6.0))


def test_sparse_lineage_lookup():
    lin = Lineage([5, 1, 2], [0.5, 0.1, 0.2])
    assert lin.depth is None
    vals, ok = lin.lookup(np.array([1, 3, 5, 99]))
    assert ok.tolist() == [True, False, True, False]
    assert vals[0] == 0.1 and vals[2] == 0.5 and np.isnan(vals[1])
    assert 5 in lin and 3 not in lin
    with pytest.raises(KeyError):
        lin[3]


def test_complete_detection_from_unsorted_input():
    assert Lineage([3, 1, 2], [0, 0, 0]).depth == 1
    assert Lineage([1, 2, 4], [0, 0, 0]).depth is None


def test_rejects_duplicates_and_bad_labels():
    with pytest.raises(ValueError):
        Lineage([1, 1], [0, 0])
    with pytest.raises(ValueError):
        Lineage([0, 1], [0, 0])


def test_values_read_only():
    lin = Lineage.from_dense(np.zeros(3))
    with pytest.raises(ValueError):
        lin.values[0] = 1.0


def test_pairs_and_triangles_on_incomplete_tree():
    # 1 has both daughters, 3 only its type-0 daughter 6
    lin = Lineage.from_mapping({1: 1.0, 2: 2.0, 3: 3.0, 6: 6.0})
    m0, x0, y0 = lin.pairs(0)
    m1, x1, y1 = lin.pairs(1)
    assert m0.tolist() == [1, 3] and y0.tolist() == [2.0, 6.0]
    assert m1.tolist() == [1] and y1.tolist() == [3.0]
    mothers, x, y, z = lin.triangles()
    assert mothers.tolist() == [1] and (x[0], y[0], z[0]) == (1.0, 2.0, 3.0)


def test_swap_branches_mirrors_each_generation():
    lin = Lineage.from_dense(np.arange(1.0, 8.0))
    sw = lin.swap_branches()
    assert sw.dense().tolist() == [1.0, 3.0, 2.0, 7.0, 6.0, 5.0, 4.0]
    assert sw.swap_branches() == lin


def test_map_values_and_dict():
    lin = Lineage.from_dense(np.array([1.0, 2.0, 3.0]))
    assert lin.map_values(lambda v: 2 * v).to_dict() == {1: 2.0, 2: 4.0, 3: 6.0}
