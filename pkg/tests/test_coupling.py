import numpy as np
import pytest

from curvetight.coupling import (
    DiscreteMeasure,
    argmin_cell,
    build_coding,
    convergence_diagnostic,
    converging_sequence,
    coupled_marginal,
    oscillating_sequence,
    sample_coupled,
    sample_coupled_many,
)
from curvetight.nets import Net, grid_net


def random_instance(rng, n_measures=4, levels=3):
    nets = [Net(rng.uniform(-1, 1, (2 ** (k + 1), 2)), 1.0) for k in range(levels)]
    measures = []
    for _ in range(n_measures):
        n = rng.integers(1, 8)
        p = rng.random(n)
        measures.append(DiscreteMeasure(rng.uniform(-1, 1, (n, 2)), p / p.sum()))
    return measures, nets


def test_measure_validation():
    with pytest.raises(ValueError):
        DiscreteMeasure(np.zeros((2, 2)) + [[0, 0], [1, 1]], np.array([0.5, 0.6]))
    with pytest.raises(ValueError, match="distinct"):
        DiscreteMeasure(np.zeros((2, 2)), np.array([0.5, 0.5]))


def test_argmin_examples():
    net = Net(np.array([[1.0, 0.0], [0.0, 3.0], [5.0, 5.0], [-1.0, 0.0]]), 1.0)
    assert argmin_cell([0.0, 0.0], net) == 0
    assert argmin_cell([0.0, 2.9], net) == 1
    assert argmin_cell([9.0, 9.0], Net(np.zeros((1, 2)), 1.0)) == 0


def test_single_cell_and_two_cells():
    mu = DiscreteMeasure(np.array([[0.0, 0.0], [0.1, 0.0]]), np.array([0.3, 0.7]))
    _, coding = build_coding([mu], [Net(np.zeros((1, 2)), 1.0)])
    assert coding.interval(0, (0,)) == (0.0, 1.0)
    _, coding = build_coding([mu], [Net(np.array([[0.0, 0.0], [0.1, 0.0]]), 1.0)])
    assert coding.interval(0, (0,)) == pytest.approx((0.0, 0.3))
    assert coding.interval(0, (1,)) == pytest.approx((0.3, 1.0))


def test_point_mass_ignores_xi():
    mu = DiscreteMeasure.point_mass([0.2, -0.4])
    _, coding = build_coding([mu], [grid_net([-1, -1], [1, 1], 0.5)])
    for xi in (0.0, 0.3, 0.999):
        np.testing.assert_array_equal(sample_coupled(coding, [mu], xi, 0, 1), [0.2, -0.4])


@pytest.mark.parametrize("seed", range(10))
def test_children_tile_parent_and_order_is_consistent(seed):
    rng = np.random.default_rng(seed)
    measures, nets = random_instance(rng)
    levels, coding = build_coding(measures, nets)
    for j in range(len(measures)):
        for k in range(1, len(levels)):
            for parent in levels[k - 1].labels:
                kids = [lab for lab in levels[k].labels if lab[:k] == parent]
                lo, hi = coding.interval(j, parent)
                spans = [coding.interval(j, c) for c in kids]
                assert spans[0][0] == lo and spans[-1][1] == hi
                assert all(a[1] == b[0] for a, b in zip(spans, spans[1:]))
        for k, part in enumerate(levels, start=1):
            edges = coding.cell_edges(j, k)
            assert edges[-1] == 1.0
            widths = np.diff(np.concatenate([[0.0], edges]))
            assert widths.sum() == pytest.approx(1.0, abs=1e-12)
    # parent-consistent order: children inherit their parents' order
    for k in range(1, len(levels)):
        labs = levels[k].labels
        for a, b in zip(labs, labs[1:]):
            assert a[:k] <= b[:k]


@pytest.mark.parametrize("seed", range(10))
def test_exact_marginals(seed):
    measures, nets = random_instance(np.random.default_rng(seed))
    _, coding = build_coding(measures, nets)
    for j, mu in enumerate(measures):
        np.testing.assert_allclose(coupled_marginal(coding, measures, j), mu.probs, atol=1e-12)


def test_empirical_marginal_within_three_se():
    rng = np.random.default_rng(5)
    measures, nets = random_instance(rng, n_measures=3)
    _, coding = build_coding(measures, nets)
    n = 100_000
    for j, mu in enumerate(measures):
        atoms = sample_coupled_many(coding, measures, j, rng.random(n), rng.random(n))
        freq = np.bincount(atoms, minlength=mu.probs.size) / n
        se = np.sqrt(mu.probs * (1 - mu.probs) / n)
        assert np.all(np.abs(freq - mu.probs) <= 3 * se + 1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_cell_determinism(seed):
    rng = np.random.default_rng(seed)
    measures, nets = random_instance(rng)
    _, coding = build_coding(measures, nets)
    xi = rng.random(2000)
    for j, mu in enumerate(measures):
        atoms = sample_coupled_many(coding, measures, j, xi, rng.random(xi.size))
        for k in range(1, coding.level_for(j) + 1):
            for label, x_atom in zip(map(tuple, coding.atom_labels[j][atoms][:, :k]), xi):
                lo, hi = coding.interval(j, label)
                assert lo <= x_atom < hi


def test_stabilization_constant_converging_oscillating():
    nets = [grid_net([-0.5, -0.5], [1.5, 0.5], 2.0**-k) for k in (1, 2)]
    const = [DiscreteMeasure(np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([0.4, 0.6]))] * 32
    _, coding = build_coding(const, nets)
    assert convergence_diagnostic(coding, const, nets, 2000, seed=1).fractions == (1.0, 1.0)
    fr = []
    for J in (16, 64, 256):
        ms = converging_sequence(J)
        _, coding = build_coding(ms, nets)
        fr.append(convergence_diagnostic(coding, ms, nets, 20_000, J, seed=2).fractions[0])
    assert fr[0] <= fr[1] <= fr[2] and fr[2] >= 0.99
    ms = oscillating_sequence(64)
    _, coding = build_coding(ms, nets)
    rep = convergence_diagnostic(coding, ms, nets, 5000, seed=3)
    assert max(rep.fractions) <= 0.9 and rep.flagged == (1, 2)
