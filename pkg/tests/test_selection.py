from itertools import product
import numpy as np
import pytest

from mimosel.selection import (
    MembershipSets, QuadraticForm, constraints_for, eval_quadratic_forms,
    factored_set_membership, from_indices, from_matrix, is_feasible,
    make_mode, structured_round, to_matrix, top_indices)

MODE_CASES = [
    ('joint', {'k': 5}),
    ('factored', {'kt': 2, 'kr': 3}),
    ('mfc', {'km': 2, 'kr': 3}),
    ('hybrid', {'kt': 2, 'km': 1, 'kr': 3}),
    ('hybrid', {'kt': 3, 'km': 2, 'kr': 2}),
]


def dense_forms(M, N):
    """Dense W of every quadratic form, built from membership vectors."""
    index = np.arange(M * N).reshape(M, N)
    v_t = [np.isin(np.arange(M * N), index[m]).astype(float)
           for m in range(M)]
    v_r = [np.isin(np.arange(M * N), index[:, n]).astype(float)
           for n in range(N)]
    Q_t = sum(np.outer(v, v) for v in v_t)
    Q_r = sum(np.outer(v, v) for v in v_r)
    forms = {'norm': np.eye(M * N), 'Q_t': Q_t, 'Q_r': Q_r, 'Q': Q_t + Q_r}
    forms.update({('col', m): np.diag(v) for m, v in enumerate(v_t)})
    forms.update({('row', n): np.diag(v) for n, v in enumerate(v_r)})
    return forms


class TestConventions:
    def test_matrix_view(self):
        M, N = 3, 4
        c = np.zeros(M * N)
        c[2 * N + 1] = 1
        C = to_matrix(c, M, N)
        assert C.shape == (N, M)
        assert C[1, 2] == 1
        np.testing.assert_array_equal(from_matrix(C), c)

    def test_membership(self):
        sets = MembershipSets(3, 2)
        np.testing.assert_array_equal(sets.tx[1], [2, 3])
        np.testing.assert_array_equal(sets.rx[1], [1, 3, 5])

    def test_top_indices_ties(self):
        np.testing.assert_array_equal(
            top_indices([0.5, 0.9, 0.5, 0.5], 2), [0, 1])


class TestQuadraticForms:
    @pytest.mark.parametrize('M,N', [(3, 4), (4, 3), (2, 2)])
    def test_against_dense(self, M, N):
        sets = MembershipSets(M, N)
        rng = np.random.default_rng(M * 10 + N)
        c = rng.uniform(-1, 2, M * N)
        for key, W in dense_forms(M, N).items():
            kind, index = key if isinstance(key, tuple) else (key, None)
            form = QuadraticForm(kind, sets, index)
            assert form(c) == pytest.approx(c @ W @ c)
            np.testing.assert_allclose(form.gradient(c), 2 * W @ c)
            H = np.zeros((M * N + 1, M * N + 1))
            form.add_hessian(H, 0.5)
            np.testing.assert_allclose(H[:M * N, :M * N], W)
            assert not H[-1].any()

    def test_eval_forms(self):
        sets = MembershipSets(3, 3)
        c = from_indices([0, 1, 4], 9)
        forms = eval_quadratic_forms(c, sets)
        assert forms['norm'] == 3
        np.testing.assert_array_equal(forms['col_sums'], [2, 1, 0])
        np.testing.assert_array_equal(forms['row_sums'], [1, 2, 0])
        assert forms['Q_t'] == 5
        assert forms['Q_r'] == 5
        assert forms['Q'] == 10


class TestFactoredSets:
    @pytest.mark.parametrize('M,N', [(2, 2), (3, 3), (2, 4)])
    def test_exhaustive(self, M, N):
        for kt, kr in product(range(1, M + 1), range(1, N + 1)):
            mode = make_mode('factored', M, N, kt=kt, kr=kr)
            for bits in product([0, 1], repeat=M * N):
                c = np.array(bits)
                sets = factored_set_membership(c, M, N, kt, kr)
                assert all(sets.values()) == mode.is_feasible(c), (bits, kt, kr)

    def test_hybrid_bounds(self):
        M = N = 4
        kt, km, kr = 3, 2, 3
        mode = make_mode('hybrid', M, N, kt=kt, km=km, kr=kr)
        sets = MembershipSets(M, N)
        for indices in mode.enumerate():
            Q_t = eval_quadratic_forms(from_indices(indices, 16), sets)['Q_t']
            assert (kr * km)**2 / kt - 1e-9 <= Q_t <= kr**2 * km

    @pytest.mark.parametrize('kt,kr', [(2, 3), (3, 3), (2, 4)])
    def test_hybrid_upper_bound_attained(self, kt, kr):
        M = N = 4
        mode = make_mode('hybrid', M, N, kt=kt, km=kt, kr=kr)
        sets = MembershipSets(M, N)
        values = [int(eval_quadratic_forms(from_indices(ix, 16), sets)['Q_t'])
                  for ix in mode.enumerate()]
        assert max(values) == kr**2 * kt
        assert min(values) >= (kr * kt)**2 // kt


class TestModes:
    @pytest.mark.parametrize('name,counts', MODE_CASES)
    def test_enumeration(self, name, counts):
        mode = make_mode(name, 4, 3, **counts)
        seen = set()
        for indices in mode.enumerate():
            assert list(indices) == sorted(indices)
            c = from_indices(indices, mode.size)
            assert len(indices) == mode.k
            assert is_feasible(c, mode)
            for con in mode.constraints():
                assert con.violation(c) < 1e-9, (con, indices)
            seen.add(indices)
        assert len(seen) == mode.num_candidates()

    @pytest.mark.parametrize('name,counts', MODE_CASES)
    def test_feasible_set_is_enumerated(self, name, counts):
        mode = make_mode(name, 3, 3, **{
            k: min(v, 3) for k, v in counts.items()})
        enumerated = set(mode.enumerate())
        for bits in product([0, 1], repeat=9):
            c = np.array(bits, dtype=np.uint8)
            assert is_feasible(c, mode) == (
                tuple(np.flatnonzero(c)) in enumerated)

    @pytest.mark.parametrize('name,counts', MODE_CASES)
    def test_structured_round(self, name, counts):
        mode = make_mode(name, 4, 3, **counts)
        rng = np.random.default_rng(5)
        for _ in range(50):
            c = structured_round(rng.uniform(size=mode.size), mode)
            assert is_feasible(c, mode)
            assert c.sum() == mode.k

    @pytest.mark.parametrize('name,counts', MODE_CASES)
    def test_neighbors(self, name, counts):
        mode = make_mode(name, 4, 3, **counts)
        feasible = set(mode.enumerate())
        for indices in sorted(feasible)[:20]:
            c = from_indices(indices, mode.size)
            neighbors = list(mode.neighbors(c))
            assert neighbors
            for other in neighbors:
                assert list(other) == sorted(other)
                assert other in feasible
                assert other != indices

    def test_joint_neighbors_are_single_swaps(self):
        mode = make_mode('joint', 2, 3, k=2)
        c = from_indices([0, 4], 6)
        neighbors = set(mode.neighbors(c))
        assert len(neighbors) == 2 * 4
        assert all(len(set(n) & {0, 4}) == 1 for n in neighbors)

    def test_mfc_neighbors_move_receivers(self):
        mode = make_mode('mfc', 3, 3, km=2, kr=1)
        # receiver 0 filters transmitters 0 and 1
        c = from_indices([0, 3], 9)
        neighbors = set(mode.neighbors(c))
        assert (1, 4) in neighbors and (2, 5) in neighbors
        assert (0, 6) in neighbors and (3, 6) in neighbors
        assert len(neighbors) == 2 + 2

    def test_round_binary_is_identity(self):
        mode = make_mode('mfc', 4, 3, km=2, kr=2)
        for indices in mode.enumerate():
            c = from_indices(indices, mode.size)
            np.testing.assert_array_equal(structured_round(c, mode), c)

    def test_constraint_counts(self):
        M, N = 4, 3
        assert len(make_mode('joint', M, N, k=4).constraints()) == 1
        assert len(make_mode(
            'factored', M, N, kt=2, kr=2).constraints()) == 2 + M + N
        assert len(make_mode('mfc', M, N, km=2, kr=2).constraints()) == 2 + M + N
        assert len(make_mode(
            'hybrid', M, N, kt=3, km=2, kr=2).constraints()) == 4 + M + N

    @pytest.mark.parametrize('name,counts', MODE_CASES)
    def test_constraints_hold_on_feasible(self, name, counts):
        mode = make_mode(name, 3, 3, **counts)
        constraints = constraints_for(mode)
        for indices in mode.enumerate():
            c = from_indices(indices, mode.size)
            for con in constraints:
                value = con.form(c)
                if con.sense == '==':
                    assert value == pytest.approx(con.bound)
                elif con.sense == '<=':
                    assert value <= con.bound + 1e-9
                else:
                    assert value >= con.bound - 1e-9

    def test_infeasible_shapes(self):
        mode = make_mode('joint', 2, 2, k=2)
        assert not is_feasible(np.array([1, 1, 0]), mode)
        assert not is_feasible(np.array([0.5, 0.5, 1, 0]), mode)

    @pytest.mark.parametrize('name,counts', [
        ('joint', {'k': 0}), ('joint', {'k': 10}), ('joint', {}),
        ('factored', {'kt': 4, 'kr': 1}), ('mfc', {'km': 1, 'kr': 4}),
        ('hybrid', {'kt': 1, 'km': 2, 'kr': 1}), ('joint', {'k': 1.5})])
    def test_invalid_counts(self, name, counts):
        with pytest.raises(ValueError):
            make_mode(name, 3, 3, **counts)

    def test_label(self):
        assert make_mode('factored', 5, 5, kt=3, kr=4).label == \
            'factored(kt=3,kr=4)'
