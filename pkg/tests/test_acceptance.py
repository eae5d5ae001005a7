"""Exit criteria of the build, one test per criterion.

Run ``pytest tests/test_acceptance.py`` to get the PASS/FAIL summary at the
end of the session output.
"""

import itertools
import math
import time

import numpy as np
import pytest
from oracles import AmbiguousOracle, crossing_count_oracle, frechet_oracle
from test_io_cli import COMMANDS, FIX, run

from curvetight.collection import CurveCollection, brute_force_collection_distance, collection_distance
from curvetight.coupling import (
    DiscreteMeasure,
    build_coding,
    convergence_diagnostic,
    converging_sequence,
    coupled_marginal,
    oscillating_sequence,
    sample_coupled_many,
)
from curvetight.crossings import (
    count_crossings,
    crosses,
    find_crossings,
    separating_times,
    stability_radius,
    verify_separating,
)
from curvetight.curve_metric import curve_distance
from curvetight.diagnostics import (
    DegenerateFit,
    fit_power,
    initial_face_cover,
    locate_hotspot,
    rate_check,
    sample_counts,
    synthetic_tails,
    tails_from_counts,
)
from curvetight.ensembles import EnsembleSpec, pathological_curve, perturb_curve, stream
from curvetight.geometry import TAU_GEOM, Annulus, Polyline, diameter, segment_sphere_hits
from curvetight.nets import SKELETON_BOUND, Net, coarsen_collection, grid_net, net_for_curves, skeletonize

acceptance = pytest.mark.acceptance


def random_polyline(rng, dim, max_vertices=64, box=2.0):
    n = int(rng.integers(2, max_vertices + 1))
    return Polyline(rng.uniform(-box, box, (n, dim)))


def random_annulus(rng, dim):
    r = rng.uniform(0.1, 1.0)
    return Annulus(rng.uniform(-1, 1, dim), r, r + rng.uniform(0.1, 1.5))


def in_general_position(curve, ann, margin=1e-9):
    """No vertex on a sphere and no segment tangent to one."""
    starts, dirs = curve.segments()
    s = np.einsum("ij,ij->i", ann.center - starts, dirs) / np.einsum("ij,ij->i", dirs, dirs)
    inner = (s > 0) & (s < 1)
    foot = np.linalg.norm(starts + np.clip(s, 0, 1)[:, None] * dirs - ann.center, axis=1)[inner]
    rho = ann.radius_of(curve.vertices)
    radii = np.array([ann.inner, ann.outer])
    return np.all(np.abs(foot[:, None] - radii) > margin) and np.all(np.abs(rho[:, None] - radii) > margin)


def sphere_times(curve, ann):
    """Every time at which the curve meets either boundary sphere."""
    out = []
    for i, (p, q) in enumerate(zip(curve.vertices[:-1], curve.vertices[1:])):
        t0, t1 = curve.times[i], curve.times[i + 1]
        for radius in (ann.inner, ann.outer):
            out += [t0 + s * (t1 - t0) for s in segment_sphere_hits(p, q, ann.center, radius)]
    return sorted(set(out))


# --- 1 ----------------------------------------------------------------------------


@acceptance("1. crossing count equals dense-sampling oracle")
def test_crossing_oracle_equivalence():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    nonzero = 0
    for i in range(500):
        dim = 2 + i % 2
        curve, ann = random_polyline(rng, dim), random_annulus(rng, dim)
        got = count_crossings(curve, ann)
        # the radius is convex along each segment, so vertices plus per-segment
        # closest points already see every state change; the step only adds margin
        assert got == crossing_count_oracle(curve.vertices, ann.center, ann.inner, ann.outer, 0.01)
        nonzero += got > 0
    elapsed = time.perf_counter() - t0
    print(f"500 instances, {nonzero} with crossings, {elapsed:.1f}s")
    assert nonzero >= 250
    assert elapsed < 60


# --- 2 ----------------------------------------------------------------------------


@acceptance("2. small curves, disjoint intervals, forced crossing")
def test_crossing_basics():
    rng = np.random.default_rng(102)
    # (i) diameter below R - r
    for i in range(1000):
        dim = 2 + i % 2
        ann = random_annulus(rng, dim)
        v = rng.uniform(-1, 1, (int(rng.integers(2, 12)), dim))
        scale = (ann.outer - ann.inner) * rng.uniform(0.5, 0.999) / diameter(Polyline(v))
        shift = ann.center + rng.uniform(-1, 1, dim) * ann.outer * 1.2
        curve = Polyline((v - v.mean(axis=0)) * scale + shift)
        assert diameter(curve) < ann.outer - ann.inner
        assert count_crossings(curve, ann) == 0
    # (ii) and (iii): curves forced from the inner ball to the outer complement
    for i in range(1000):
        dim = 2 + i % 2
        ann = random_annulus(rng, dim)
        u = rng.standard_normal((2, dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        p = ann.center + u[0] * ann.inner * rng.uniform(0, 0.99)
        q = ann.center + u[1] * ann.outer * rng.uniform(1.01, 2)
        if i % 4 == 0:
            p, q = q, p
        pre = rng.uniform(-3, 3, (int(rng.integers(0, 5)), dim))
        mid = rng.uniform(-3, 3, (int(rng.integers(0, 5)), dim))
        post = rng.uniform(-3, 3, (int(rng.integers(0, 5)), dim))
        curve = Polyline(np.concatenate([pre, [p], mid, [q], post]))
        s, t = curve.times[len(pre)], curve.times[len(pre) + len(mid) + 1]
        rep = find_crossings(curve, ann)
        for a, b in zip(rep.intervals, rep.intervals[1:]):
            assert a.a < a.b <= b.a < b.b
        assert crosses(curve, ann, s, t)
        assert count_crossings(curve.restrict(s, t), ann) >= 1
        assert any(s <= iv.a and iv.b <= t for iv in rep.intervals)


# --- 3 ----------------------------------------------------------------------------


@acceptance("3. separating times verify; shorter sequences always fail")
def test_separating_times_equivalence():
    rng = np.random.default_rng(103)
    checked_converse = 0
    for i in range(200):
        dim = 2 + i % 2
        ann = Annulus(np.zeros(dim), 0.5, 1.0)
        curve = random_polyline(rng, dim, max_vertices=6, box=1.5)
        ts = separating_times(curve, ann)
        n = count_crossings(curve, ann)
        assert len(ts) == n + 2 and verify_separating(curve, ann, ts)
        if not 1 <= n <= 3:
            continue
        # up to equivalence a cut time only matters through its position
        # relative to the sphere hits, so hits and the gaps between them suffice
        hits = [0.0] + sphere_times(curve, ann) + [1.0]
        cand = sorted(set(hits) | {0.5 * (a + b) for a, b in zip(hits, hits[1:])})
        cand = [c for c in cand if 0.0 < c < 1.0]
        for cut in itertools.combinations(cand, n - 1):
            seq = (0.0,) + cut + (1.0,)
            assert any(crosses(curve, ann, a, b) for a, b in zip(seq, seq[1:]))
        checked_converse += 1
    print(f"converse checked exhaustively on {checked_converse} instances")
    assert checked_converse >= 30


# --- 4 ----------------------------------------------------------------------------


@acceptance("4. perturbations below stability radius never raise the count")
def test_stability_radius():
    rng = np.random.default_rng(104)
    done = 0
    while done < 500:
        dim = 2 + done % 2
        curve, ann = random_polyline(rng, dim, max_vertices=16), random_annulus(rng, dim)
        if not in_general_position(curve, ann):
            continue
        rho = stability_radius(curve, ann)
        assert rho > 0
        noise = rng.standard_normal(curve.vertices.shape)
        noise *= (rho * rng.uniform(0, 1, (len(noise), 1)) ** (1 / dim)) / np.linalg.norm(noise, axis=1, keepdims=True)
        moved = Polyline(curve.vertices + noise * (1 - 1e-9))
        assert count_crossings(moved, ann) <= count_crossings(curve, ann)
        done += 1


# --- 5 ----------------------------------------------------------------------------


@acceptance("5. curve metric matches oracle; metric axioms")
def test_curve_metric():
    tol = 1e-6
    rng = np.random.default_rng(105)
    resolved = ambiguous = 0
    worst = 0.0
    while resolved < 100:
        A = rng.uniform(-1, 1, (int(rng.integers(2, 5)), 2))
        B = rng.uniform(-1, 1, (int(rng.integers(2, 5)), 2))
        try:
            ref = frechet_oracle(A, B)
        except AmbiguousOracle:
            ambiguous += 1
            continue
        err = abs(curve_distance(Polyline(A), Polyline(B), tol).value - ref)
        worst = max(worst, err)
        assert err <= 2 * tol
        resolved += 1
    print(f"oracle: 100 resolved, {ambiguous} ambiguous skipped, worst error {worst:.2e}")
    for _ in range(200):
        a, b, c = (random_polyline(rng, 2, max_vertices=8) for _ in range(3))
        dab = curve_distance(a, b, tol).value
        assert dab >= 0
        assert curve_distance(a, a, tol).value <= tol
        assert abs(dab - curve_distance(b, a, tol).value) <= 2 * tol
        assert curve_distance(a, c, tol).value <= dab + curve_distance(b, c, tol).value + 3 * tol
        # reparametrization: inserting a collinear vertex is the same curve
        i = int(rng.integers(0, len(a) - 1))
        w = np.insert(a.vertices, i + 1, a.vertices[i] + rng.uniform(0.1, 0.9) * (a.vertices[i + 1] - a.vertices[i]), axis=0)
        assert curve_distance(a, Polyline(w), tol).value <= tol


# --- 6 ----------------------------------------------------------------------------


@acceptance("6. collection metric matches brute force")
def test_collection_metric():
    tol = 1e-9
    rng = np.random.default_rng(106)

    def coll():
        return CurveCollection.of(
            [rng.uniform(-1, 1, (int(rng.integers(2, 5)), 2)) * rng.uniform(0.1, 1.5) for _ in range(rng.integers(0, 6))]
        )

    t0 = time.perf_counter()
    for _ in range(300):
        a, b = coll(), coll()
        assert abs(collection_distance(a, b, tol).value - brute_force_collection_distance(a, b, tol)) <= 2 * tol
    elapsed = time.perf_counter() - t0
    print(f"300 pairs in {elapsed:.1f}s")
    assert elapsed < 120


# --- 7 ----------------------------------------------------------------------------


@acceptance("7. skeleton within 11/k, anchor gaps within 3/k")
def test_skeleton_bound():
    tol = 1e-9
    rng = np.random.default_rng(107)
    curves = []
    for i in range(100):
        dim = 3 if i % 5 == 0 else 2
        steps = int(rng.integers(5, 60))
        walk = np.cumsum(rng.standard_normal((steps, dim)), axis=0)
        walk *= rng.uniform(0.2, 1.0) / max(np.abs(walk).max(), 1e-9)
        curves.append(Polyline(walk))
    for k in (2, 4, 8, 16, 32):
        for c in curves:
            net = net_for_curves([c], k)
            sk, tilde = skeletonize(c, net, k)
            assert curve_distance(c, tilde, tol).value <= SKELETON_BOUND / k + tol
            assert np.all(sk.gaps() <= 3.0 / k + TAU_GEOM)
        for g in range(0, 100, 10):
            group = [c for c in curves[g : g + 10] if c.dim == 2]
            coll = CurveCollection(tuple(group))
            coarse = coarsen_collection(coll, net_for_curves(group, k), k)
            assert collection_distance(coll, coarse, tol).value <= SKELETON_BOUND / k + tol


# --- 8 ----------------------------------------------------------------------------


@acceptance("8. coupling marginals, cell determinism, stabilization")
def test_coupling():
    rng = np.random.default_rng(108)
    for _ in range(50):
        nets = [Net(rng.uniform(-1, 1, (2 ** (k + 1), 2)), 1.0) for k in range(3)]
        measures = []
        for _ in range(4):
            n = int(rng.integers(1, 8))
            p = rng.random(n)
            measures.append(DiscreteMeasure(rng.uniform(-1, 1, (n, 2)), p / p.sum()))
        levels, coding = build_coding(measures, nets)
        xi = rng.random(500)
        for j, mu in enumerate(measures):
            assert np.max(np.abs(coupled_marginal(coding, measures, j) - mu.probs)) <= 1e-12
            atoms = sample_coupled_many(coding, measures, j, xi, rng.random(xi.size))
            for k in range(1, coding.level_for(j) + 1):
                labels = levels[k - 1].labels
                # the cell whose interval holds xi, versus the cell holding the sample
                by_xi = np.searchsorted(coding.cell_edges(j, k), xi, side="right")
                by_atom = np.array([labels.index(tuple(lab)) for lab in coding.atom_labels[j][atoms][:, :k]])
                np.testing.assert_array_equal(by_xi, by_atom)
    nets = [grid_net([-0.5, -0.5], [1.5, 0.5], 2.0**-k) for k in (1, 2)]
    ms = converging_sequence(256)
    _, coding = build_coding(ms, nets)
    conv = convergence_diagnostic(coding, ms, nets, 20_000, 256, seed=2).fractions
    ms = oscillating_sequence(256)
    _, coding = build_coding(ms, nets)
    osc = convergence_diagnostic(coding, ms, nets, 20_000, 256, seed=3).fractions
    print(f"stabilization: converging {conv}, oscillating {osc}")
    assert min(conv) >= 0.99 and max(osc) <= 0.9


# --- 9 ----------------------------------------------------------------------------


@acceptance("9. counterexample: many crossings yet close, rate fails")
def test_counterexample():
    n = 1000
    bound = 1.0 / n
    g = pathological_curve(400)
    ann = Annulus(np.zeros(2), 0.005, 0.02)
    for s in range(10):
        h = perturb_curve(g, bound, stream(9, s))
        assert count_crossings(h, ann) >= 20
        assert curve_distance(h, g, 1e-6).value < bound
    spec = EnsembleSpec("pathological", {"bound": bound, "n_t": 400}, 9)
    rs = [0.01, 0.005, 0.0025, 0.00125]
    Ns = [1, 2, 4, 8, 16, 32]
    per_r = []
    for r in rs:
        a = Annulus(np.zeros(2), r, 0.02)
        per_r.append(tails_from_counts(sample_counts(spec, a, 200, 9), a, Ns))
    lambdas = []
    for i, N in enumerate(Ns):
        q = [t[i].p_hat for t in per_r]
        assert not rate_check(rs, q, 2, ci_hi=[t[i].ci_hi for t in per_r]).passed
        try:
            lambdas.append(fit_power([t[i] for t in per_r]).lambda_N)
        except DegenerateFit:
            lambdas.append(None)
    print(f"fitted exponents by N: {dict(zip(Ns, lambdas))}")
    fitted = [lam for lam in lambdas if lam is not None]
    assert not all(lam > 1 for lam in fitted[-3:]) or not fitted


# --- 10 ---------------------------------------------------------------------------


def _point_on_cover(ann):
    """A mid-sphere point lying on a face of the initial cube cover."""
    _, _, faces = initial_face_cover(ann)
    for f in faces:
        lo, hi = f.box()
        c = 0.5 * (lo + hi)
        for axis in range(ann.dim):
            if axis == f.fixed_axis:
                continue
            p, q = c.copy(), c.copy()
            p[axis], q[axis] = lo[axis], hi[axis]
            hits = segment_sphere_hits(p, q, ann.center, ann.mid)
            if hits:
                return p + hits[0] * (q - p)
    raise AssertionError("no face meets the mid sphere")


@acceptance("10. hotspot locator finds y*, rate lower bound holds")
def test_hotspot():
    for d, half_angle in ((2, math.pi / 6), (3, math.pi / 4)):
        center = np.zeros(d)
        ann = Annulus(center, 1.0 + (d == 3), 2.0 + (d == 3))
        y = _point_on_cover(ann)
        spec = EnsembleSpec(
            "pencil",
            {"inner": ann.inner, "outer": ann.outer, "center": center.tolist(), "through": y.tolist(),
             "half_angle": half_angle},
            10,
        )
        rep = locate_hotspot(spec, ann, 6, 2000, threads=4)
        err = float(np.linalg.norm(np.array(rep.y) - y))
        print(f"d={d}: |y - y*| = {err:.4g}, eps_6 = {rep.levels[-1].eps:.4g}")
        assert err <= rep.levels[-1].eps
        assert all(lv.children == 2 ** (d - 1) for lv in rep.levels[1:])
    spec = EnsembleSpec("radial", {"inner": 1.0, "outer": 2.0}, 10)
    rep = locate_hotspot(spec, Annulus(np.zeros(2), 1.0, 2.0), 6, 10_000, threads=4)
    for lv in rep.levels:
        assert lv.p_hat >= 2.0 ** (-lv.k) * rep.p0 / 2
    print("uniform radial p_k:", [lv.p_hat for lv in rep.levels])


# --- 11 ---------------------------------------------------------------------------


@acceptance("11. rate check and power fit calibration")
def test_rate_calibration():
    rs = 2.0 ** -np.arange(1, 8)
    for d in (2, 3):
        assert rate_check(rs, rs**d, d).passed
        assert not rate_check(rs, rs ** (d - 1), d).passed
        for lam, K in ((d - 1.0, 1.0), (d, 0.3), (2.5, 2.0)):
            f = fit_power(synthetic_tails(rs, 1.0, lambda r: K * r**lam, dim=d))
            assert f.lambda_N == pytest.approx(lam, abs=1e-12) and f.K_N == pytest.approx(K, rel=1e-12)
    rng = np.random.default_rng(111)
    for _ in range(100):
        tails = synthetic_tails(rs, 1.0, lambda r: r**2 * (1 + 0.05 * rng.standard_normal()))
        assert abs(fit_power(tails).lambda_N - 2.0) <= 0.2


# --- 12 ---------------------------------------------------------------------------


THREADED = {"tails", "regularity", "fit", "rate", "hotspot"}


@acceptance("12. CLI output byte-identical across runs and thread counts")
def test_cli_reproducible(tmp_path):
    commands = dict(COMMANDS)
    commands["couple-oscillating"] = ("couple", "--sequence", "oscillating", "--horizon", "32", "--samples", "500")
    for name, argv in commands.items():
        first = run(*argv)
        assert first[0] == 0, first[2]
        assert run(*argv) == first
        if name in THREADED:
            assert run(*argv, "--threads", "1") == run(*argv, "--threads", "4") == first
    outs = []
    for i in range(2):
        code, text, _ = run("coarsen", FIX / "loops.json", "--k", "32", "--out", tmp_path / f"c{i}.json")
        assert code == 0
        outs.append((text, (tmp_path / f"c{i}.json").read_bytes()))
    assert outs[0] == outs[1]
    path = tmp_path / "g.json"
    run("generate", "--spec", FIX / "walk_spec.json", "--index", "5", "--out", path)
    once = path.read_bytes()
    run("generate", "--spec", FIX / "walk_spec.json", "--index", "5", "--out", path)
    assert path.read_bytes() == once
