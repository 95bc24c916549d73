import math

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn
from scipy.special import kv

from swarmcomm.gpmap import (
    PRIOR_MEAN,
    GPModel,
    KernelParams,
    ObservationStore,
    fit,
    matern,
    matern_values,
    predict,
    try_insert,
)


def rng(seed=0):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# independent oracles


def matern_general(d, nu, ell):
    """General Matern form evaluated through Bessel functions."""
    d = np.asarray(d, dtype=float)
    arg = np.sqrt(2.0 * nu) * d / ell
    with np.errstate(invalid="ignore"):
        val = (2.0 ** (1.0 - nu) / gamma_fn(nu)) * arg ** nu * kv(nu, arg)
    return np.where(arg == 0.0, 1.0, val)


def dense_posterior_oracle(pts, vals, query, params):
    """Direct dense solve of the noise-free posterior via matrix inversion."""
    nu, ell, jit = params.smoothness, params.length_scale, params.jitter

    def kmat(a, b):
        d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1))
        return matern_general(d, nu, ell)

    k = kmat(pts, pts) + jit * np.eye(len(pts))
    k_inv = np.linalg.inv(k)
    ks = kmat(query, pts)
    mean = np.clip(PRIOR_MEAN + ks @ k_inv @ (vals - PRIOR_MEAN), 0.0, 1.0)
    var = 1.0 - np.einsum("ij,jk,ik->i", ks, k_inv, ks)
    sigma = np.sqrt(np.clip(var, 0.0, 1.0))
    return mean, sigma


class NaiveStore:
    """Line-by-line reimplementation of the coverage sampling rule."""

    def __init__(self, capacity):
        self.capacity = capacity
        self.pts = []
        self.vals = []

    def d_min(self):
        out = []
        for i, p in enumerate(self.pts):
            best = math.inf
            for j, q in enumerate(self.pts):
                if i != j:
                    best = min(best, math.dist(p, q))
            out.append(best)
        return out

    def try_insert(self, p, v, rand):
        p = (float(p[0]), float(p[1]))
        if any(math.dist(p, s) == 0.0 for s in self.pts):
            return False, None
        if len(self.pts) < self.capacity:
            self.pts.append(p)
            self.vals.append(v)
            return True, None
        m = min(math.dist(p, s) for s in self.pts)
        dmin = self.d_min()
        lowest = min(dmin)
        if m <= lowest:
            return False, None
        ties = [i for i, d in enumerate(dmin) if d == lowest]
        idx = ties[rand.integers(len(ties))]
        self.pts[idx] = p
        self.vals[idx] = v
        return True, idx


def brute_force_d_min(points):
    n = len(points)
    out = np.full(n, np.inf)
    for i in range(n):
        for j in range(n):
            if i != j:
                out[i] = min(out[i], math.dist(points[i], points[j]))
    return out


# ---------------------------------------------------------------------------
# kernel


class TestKernelParams:
    def test_defaults(self):
        p = KernelParams()
        assert p.smoothness == 1.5 and p.length_scale == 10.0

    @pytest.mark.parametrize("kwargs", [
        {"smoothness": 2.0},
        {"length_scale": 0.0},
        {"jitter": 0.0},
        {"jitter": 1e-3},
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            KernelParams(**kwargs)


class TestMatern:
    def test_zero_distance_is_one(self):
        for nu in (0.5, 1.5, 2.5):
            p = KernelParams(smoothness=nu)
            assert matern((3.0, 4.0), (3.0, 4.0), p) == 1.0

    def test_decay_limit(self):
        p = KernelParams(smoothness=1.5, length_scale=1.0)
        assert matern((0.0, 0.0), (100.0, 0.0), p) < 1e-12

    @pytest.mark.parametrize("nu", [0.5, 1.5, 2.5])
    def test_matches_general_form(self, nu):
        # closed forms against the Bessel-function evaluation
        params = KernelParams(smoothness=nu, length_scale=10.0)
        d = np.array([0.1, 1.0, 5.0, 10.0, 25.0, 60.0])
        expect = matern_general(d, nu, 10.0)
        got = matern_values(d, params)
        assert np.allclose(got, expect, atol=1e-10, rtol=0.0)

    def test_spec_point_value(self):
        # nu=3/2, l=10, d=10 cross-checked through the general form
        params = KernelParams(smoothness=1.5, length_scale=10.0)
        got = matern((0.0, 0.0), (10.0, 0.0), params)
        expect = float(matern_general(10.0, 1.5, 10.0))
        assert got == pytest.approx(expect, abs=1e-10)
        # and against the explicit closed form
        assert got == pytest.approx((1 + math.sqrt(3)) * math.exp(-math.sqrt(3)),
                                    abs=1e-12)

    def test_symmetry_and_monotone_decay(self):
        params = KernelParams()
        d = np.linspace(0, 40, 200)
        vals = matern_values(d, params)
        assert np.all(np.diff(vals) <= 0)
        assert matern((1, 2), (5, 7), params) == matern((5, 7), (1, 2), params)


# ---------------------------------------------------------------------------
# observation store


class TestTryInsert:
    def test_empty_store_appends(self):
        s = ObservationStore(capacity=5)
        assert s.try_insert((1.0, 2.0), 0.7, 3, rng()) is True
        assert s.n == 1
        assert tuple(s.points[0]) == (1.0, 2.0)
        assert s.values[0] == 0.7 and s.times[0] == 3

    def test_rejects_bad_quality(self):
        s = ObservationStore(capacity=5)
        with pytest.raises(ValueError):
            s.try_insert((0, 0), 1.5, 0, rng())

    def test_duplicate_position_rejected(self):
        s = ObservationStore(capacity=5)
        s.try_insert((1.0, 1.0), 0.5, 0, rng())
        assert s.try_insert((1.0, 1.0), 0.9, 1, rng()) is False
        assert s.n == 1

    def test_full_store_coincident_rejected(self):
        s = ObservationStore(capacity=4)
        r = rng(1)
        for i in range(4):
            s.try_insert((float(i), 0.0), 0.5, i, r)
        assert s.try_insert((2.0, 0.0), 0.8, 9, r) is False

    def test_lattice_replacement(self):
        # full 10x10 unit lattice: min(D_min) = 1; a point 3 away from the
        # lattice must be accepted and must displace a lattice point
        s = ObservationStore(capacity=100)
        r = rng(7)
        for i in range(10):
            for j in range(10):
                assert s.try_insert((float(i), float(j)), 0.5, 0, r)
        assert s.n == 100
        p_new = (12.0, 5.0)  # distance 3 from (9, 5), farther from the rest
        assert s.min_distance_to(p_new) == pytest.approx(3.0)
        assert s.try_insert(p_new, 0.9, 1, r) is True
        assert s.n == 100
        assert any(tuple(pt) == p_new for pt in s.points)

    def test_full_store_too_close_rejected(self):
        s = ObservationStore(capacity=100)
        r = rng(7)
        for i in range(10):
            for j in range(10):
                s.try_insert((float(i), float(j)), 0.5, 0, r)
        # interior point is at most ~0.707 from the lattice: below min(D_min)=1
        assert s.try_insert((4.5, 4.5), 0.9, 1, r) is False

    def test_matches_naive_reimplementation(self):
        capacity = 12
        fast = ObservationStore(capacity=capacity)
        naive = NaiveStore(capacity)
        r_fast, r_naive = rng(101), rng(101)
        gen = rng(55)
        for t in range(400):
            p = tuple(gen.uniform(0, 20, size=2))
            v = float(gen.uniform(0, 1))
            got = fast.try_insert(p, v, t, r_fast)
            want, _ = naive.try_insert(p, v, r_naive)
            assert got == want
            assert fast.n == len(naive.pts)
            assert np.allclose(fast.points[:fast.n], np.array(naive.pts))

    def test_accept_rule_property(self):
        # acceptance on a full store happens iff the candidate is farther from
        # everything than the closest stored pair
        s = ObservationStore(capacity=15)
        gen = rng(3)
        r = rng(4)
        for t in range(15):
            s.try_insert(tuple(gen.uniform(0, 10, size=2)), 0.5, t, r)
        for t in range(300):
            p = tuple(gen.uniform(0, 10, size=2))
            before_min = float(s.d_min[:s.n].min())
            m = s.min_distance_to(p)
            got = s.try_insert(p, 0.5, t, r)
            assert got == (m > before_min)

    def test_d_min_matches_recompute_after_every_mutation(self):
        s = ObservationStore(capacity=10)
        gen = rng(9)
        r = rng(10)
        for t in range(200):
            s.try_insert(tuple(gen.uniform(0, 6, size=2)), 0.5, t, r)
            expect = brute_force_d_min(s.points[:s.n])
            assert np.allclose(s.d_min[:s.n], expect)

    def test_capacity_never_exceeded(self):
        s = ObservationStore(capacity=8)
        gen = rng(2)
        r = rng(3)
        for t in range(500):
            s.try_insert(tuple(gen.uniform(0, 50, size=2)), 0.5, t, r)
            assert s.n <= 8

    def test_version_bumps_only_on_mutation(self):
        s = ObservationStore(capacity=2)
        r = rng(0)
        v0 = s.version
        s.try_insert((0, 0), 0.5, 0, r)
        assert s.version == v0 + 1
        s.try_insert((0, 0), 0.5, 1, r)  # duplicate, rejected
        assert s.version == v0 + 1


class TestStoreSave:
    def test_dump_contains_samples(self, tmp_path):
        s = ObservationStore(capacity=4)
        r = rng(0)
        s.try_insert((1.5, 2.5), 0.25, 7, r)
        path = tmp_path / "store.csv"
        s.save(path, KernelParams())
        text = path.read_text()
        assert "1.5" in text and "0.25" in text and "length_scale" in text


# ---------------------------------------------------------------------------
# GP fit / predict


def make_store(points, values):
    s = ObservationStore(capacity=max(len(points), 1))
    r = rng(0)
    for t, (p, v) in enumerate(zip(points, values)):
        assert s.try_insert(p, v, t, r)
    return s


class TestFitPredict:
    def test_fit_empty_raises(self):
        with pytest.raises(ValueError):
            fit(ObservationStore(), KernelParams())

    def test_unfitted_predict_raises(self):
        with pytest.raises(ValueError):
            predict(None, np.array([[0.0, 0.0]]))

    def test_single_neutral_observation_gives_prior_everywhere(self):
        # a 0.5 observation centers to zero: posterior mean is 0.5 everywhere
        model = fit(make_store([(5.0, 5.0)], [0.5]), KernelParams())
        q = np.array([[5.0, 5.0], [0.0, 0.0], [50.0, 50.0]])
        mean, _ = predict(model, q)
        assert np.allclose(mean, 0.5, atol=1e-12)

    def test_two_distant_observations_hand_solve(self):
        # at 60 units with l=10 the cross-covariance is ~5e-4: predictions at
        # each site are dominated by the local observation
        params = KernelParams()
        model = fit(make_store([(0.0, 0.0), (60.0, 0.0)], [0.9, 0.1]), params)
        k12 = matern((0.0, 0.0), (60.0, 0.0), params)
        jit = params.jitter
        # hand 2x2 solve: [[1+e, k],[k, 1+e]] alpha = y
        det = (1 + jit) ** 2 - k12 ** 2
        a1 = ((1 + jit) * 0.4 - k12 * (-0.4)) / det
        a2 = ((1 + jit) * (-0.4) - k12 * 0.4) / det
        mean, _ = predict(model, np.array([[0.0, 0.0], [60.0, 0.0]]))
        assert mean[0] == pytest.approx(0.5 + a1 + k12 * a2, abs=1e-9)
        assert mean[1] == pytest.approx(0.5 + k12 * a1 + a2, abs=1e-9)
        assert mean[0] == pytest.approx(0.9, abs=1e-3)
        assert mean[1] == pytest.approx(0.1, abs=1e-3)

    def test_interpolates_stored_points(self):
        # fill a capacity-100 store through the coverage rule (spacing keeps
        # the kernel matrix well conditioned), then check noise-free
        # interpolation at every retained sample
        gen = rng(12)
        s = ObservationStore(capacity=100)
        r = rng(13)
        for t in range(400):
            s.try_insert(tuple(gen.uniform(0, 40, size=2)),
                         float(gen.uniform(0, 1)), t, r)
        assert s.n == 100
        model = fit(s, KernelParams())
        mean, sigma = predict(model, s.points[:s.n])
        assert np.allclose(mean, s.values[:s.n], atol=1e-4)
        assert np.all(sigma <= 1e-3)

    def test_prior_recovery_far_from_data(self):
        model = fit(make_store([(0.0, 0.0)], [0.9]), KernelParams())
        mean, sigma = predict(model, np.array([[150.0, 150.0]]))
        assert mean[0] == pytest.approx(0.5, abs=1e-6)
        assert sigma[0] == pytest.approx(1.0, abs=1e-6)

    def test_matches_dense_oracle(self):
        params = KernelParams()
        gen = rng(77)
        pts = gen.uniform(0, 30, size=(5, 2))
        vals = gen.uniform(0, 1, size=5)
        query = gen.uniform(-5, 35, size=(20, 2))
        model = fit(make_store([tuple(p) for p in pts], vals), params)
        mean, sigma = predict(model, query)
        o_mean, o_sigma = dense_posterior_oracle(pts, vals, query, params)
        assert np.allclose(mean, o_mean, atol=1e-6)
        assert np.allclose(sigma, o_sigma, atol=1e-6)

    def test_sigma_monotone_from_single_observation(self):
        model = fit(make_store([(0.0, 0.0)], [0.8]), KernelParams())
        d = np.linspace(0, 80, 60)
        query = np.stack([d, np.zeros_like(d)], axis=1)
        _, sigma = predict(model, query)
        assert np.all(np.diff(sigma) >= -1e-12)

    def test_outputs_bounded(self):
        gen = rng(5)
        pts = gen.uniform(0, 20, size=(30, 2))
        vals = gen.integers(0, 2, size=30).astype(float)  # extreme 0/1 targets
        model = fit(make_store([tuple(p) for p in pts], vals), KernelParams())
        query = gen.uniform(-10, 30, size=(200, 2))
        mean, sigma = predict(model, query)
        assert np.all((mean >= 0) & (mean <= 1))
        assert np.all((sigma >= 0) & (sigma <= 1))

    def test_model_records_store_version(self):
        s = make_store([(1.0, 1.0)], [0.6])
        model = fit(s, KernelParams())
        assert model.store_version == s.version
