import math

import numpy as np
import pytest

from sknet import matcore as mc
from sknet.errors import DimensionMismatch, InvalidInput, OutOfBranch

Z = np.diag([1.0, -1.0]).astype(complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)


def svd_norm(m):
    return np.linalg.svd(m, compute_uv=False)[0]


class TestTolerances:
    def test_defaults(self):
        t = mc.Tolerances()
        assert (t.norm_rel, t.unitary_tol, t.series_tol) == (1e-10, 1e-9, 1e-14)

    @pytest.mark.parametrize("kw", [{"norm_rel": 0}, {"series_tol": 1e-8}, {"unitary_tol": 2.0}])
    def test_rejects_bad(self, kw):
        with pytest.raises(InvalidInput):
            mc.Tolerances(**kw)


class TestOpNorm:
    def test_zero_and_identity(self):
        assert mc.op_norm(np.zeros((3, 3))) == 0
        assert mc.op_norm(np.eye(4)) == pytest.approx(1, rel=1e-12)

    def test_diagonal(self):
        assert mc.op_norm(np.diag([3.0, 4.0])) == pytest.approx(4, rel=1e-12)

    @pytest.mark.parametrize("d", [2, 3, 5, 8, 16])
    def test_matches_svd(self, d):
        g = mc.rng(3, d)
        for _ in range(20):
            m = g.standard_normal((d, d)) + 1j * g.standard_normal((d, d))
            assert abs(mc.op_norm(m) - svd_norm(m)) <= 1e-10 * svd_norm(m)

    def test_degenerate_top_singular_value(self):
        # two equal top singular values: iteration must still land on them
        m = np.diag([2.0, 2.0, 1.0]) @ mc.haar_sample(3, 1)
        assert mc.op_norm(m) == pytest.approx(2.0, rel=1e-10)

    def test_non_finite(self):
        with pytest.raises(InvalidInput):
            mc.op_norm(np.array([[np.nan, 0], [0, 1]]))

    def test_non_square(self):
        with pytest.raises(InvalidInput):
            mc.op_norm(np.ones((2, 3)))


class TestDist:
    def test_examples(self):
        assert mc.dist(np.eye(2), np.eye(2)) == 0
        assert mc.dist(np.eye(2), np.diag([1j, -1j])) == pytest.approx(math.sqrt(2), rel=1e-12)
        u = mc.mexp(0.3 * Z)
        assert mc.dist(u, np.eye(2)) == pytest.approx(2 * math.sin(0.15), rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            mc.dist(np.eye(2), np.eye(3))

    def test_metric_axioms(self):
        g = mc.rng(11)
        for _ in range(500):
            d = int(g.integers(2, 6))
            u, v, w = (mc.haar_sample(d, g) for _ in range(3))
            duv = mc.dist(u, v)
            assert duv >= 0
            assert mc.dist(u, u) == 0
            assert mc.dist(v, u) == pytest.approx(duv, abs=1e-12)
            assert mc.dist(u, w) <= duv + mc.dist(v, w) + 1e-12
            assert mc.dist(u @ w, v @ w) == pytest.approx(duv, abs=1e-12)
            assert mc.dist(w @ u, w @ v) == pytest.approx(duv, abs=1e-12)

    def test_product_perturbation(self):
        g = mc.rng(12)
        for _ in range(100):
            d = int(g.integers(2, 5))
            us = [mc.haar_sample(d, g) for _ in range(5)]
            kicks = [mc.sample_at_distance(d, float(g.uniform(0, 0.3)), g) for _ in us]
            vs = [u @ k for u, k in zip(us, kicks)]
            total = sum(mc.dist(u, v) for u, v in zip(us, vs))
            pu = np.linalg.multi_dot(us)
            pv = np.linalg.multi_dot(vs)
            assert mc.dist(pu, pv) <= total + 1e-12


class TestMexp:
    def test_zero(self):
        assert np.array_equal(mc.mexp(np.zeros((3, 3))), np.eye(3))

    def test_closed_form(self):
        assert mc.dist(mc.mexp(math.pi / 2 * Z), np.diag([1j, -1j])) <= 1e-14

    def test_negative_scale(self):
        h = mc.random_hermitian(3, 1)
        assert mc.dist(mc.mexp(h, -1j), mc.dagger(mc.mexp(h))) <= 1e-14

    def test_matches_eigh(self):
        g = mc.rng(4)
        for d in (2, 4, 8):
            h = 3.5 * mc.random_hermitian(d, g)
            w, v = np.linalg.eigh(h)
            ref = (v * np.exp(1j * w)) @ mc.dagger(v)
            assert mc.dist(mc.mexp(h), ref) <= 1e-12

    def test_unitary_and_distance_bound(self):
        g = mc.rng(5)
        for _ in range(1000):
            d = int(g.integers(2, 6))
            h = float(g.uniform(0, 1)) * mc.random_hermitian(d, g, traceless=False)
            u = mc.mexp(h)
            assert mc.is_unitary(u)
            assert mc.dist(u, np.eye(d)) <= mc.op_norm(h) + 1e-12

    def test_rejects(self):
        with pytest.raises(InvalidInput):
            mc.mexp(np.array([[0, 1], [0, 0]], dtype=complex))
        with pytest.raises(InvalidInput):
            mc.mexp(5 * Z)
        with pytest.raises(InvalidInput):
            mc.mexp(Z, scale=1)


class TestMlog:
    def test_identity(self):
        assert np.array_equal(mc.mlog_principal(np.eye(3)), np.zeros((3, 3)))

    def test_diagonal(self):
        lam = np.diag([np.exp(0.2j), np.exp(-0.2j)])
        assert mc.op_norm(mc.mlog_principal(lam) - np.diag([0.2, -0.2])) <= 1e-14

    def test_round_trip(self):
        g = mc.rng(6)
        for d in (2, 3, 5, 8):
            for scale in (0.1, 0.3, 0.5):
                h = scale * mc.random_hermitian(d, g)
                back = mc.mlog_principal(mc.mexp(h))
                assert mc.op_norm(back - h) <= 1e-11
                assert abs(np.trace(back)) <= 1e-9

    def test_envelope(self):
        g = mc.rng(7)
        for d in (2, 4, 6):
            for t in (1e-3, 0.1, 0.5, 0.9):
                lam = mc.near_identity_sample(d, t, g)
                e = mc.dist(lam, np.eye(d))
                h = mc.mlog_principal(lam)
                assert mc.dist(mc.mexp(h), lam) <= 1e-13
                assert mc.op_norm(h) <= (math.pi / 3) / (1 - e / 2) * e

    def test_out_of_branch(self):
        with pytest.raises(OutOfBranch):
            mc.mlog_principal(np.diag([1j, -1j]))

    def test_nonzero_trace_rejected(self):
        # d=7: eigenphases 2*pi/7 sum to 2*pi, det 1, yet dist(., I) < 1
        lam = np.exp(2j * np.pi / 7) * np.eye(7)
        assert mc.is_special(lam) and mc.dist(lam, np.eye(7)) < 1
        with pytest.raises(OutOfBranch):
            mc.mlog_principal(lam)

    def test_rejects_non_special(self):
        with pytest.raises(InvalidInput):
            mc.mlog_principal(np.exp(0.1j) * np.eye(2))


class TestCommutators:
    def test_group_comm_trivial(self):
        b = mc.haar_sample(3, 2)
        assert mc.dist(mc.group_comm(np.eye(3), b), np.eye(3)) <= 1e-14
        assert mc.dist(mc.group_comm(b, b), np.eye(3)) <= 1e-14

    def test_group_vs_matrix_commutator(self):
        g = mc.rng(8)
        for _ in range(100):
            a = 0.1 * mc.random_hermitian(2, g)
            b = 0.1 * mc.random_hermitian(2, g)
            lhs = mc.group_comm(mc.mexp(a), mc.mexp(b))
            rhs = mc.mexp(1j * mc.mat_comm(a, b))  # exp([iA, iB])
            assert mc.dist(lhs, rhs) <= 4 * 0.1**3

    def test_mat_comm(self):
        assert np.allclose(mc.mat_comm(X, Z), X @ Z - Z @ X)


class TestSampling:
    def test_haar_contract(self):
        u = mc.haar_sample(4, 7)
        assert mc.is_unitary(u, 1e-12) and abs(np.linalg.det(u) - 1) <= 1e-12

    def test_haar_deterministic(self):
        assert np.array_equal(mc.haar_sample(3, 5), mc.haar_sample(3, 5))
        assert not np.array_equal(mc.haar_sample(3, 5), mc.haar_sample(3, 6))

    def test_haar_mean_distance(self):
        g = mc.rng(9)
        mean = np.mean([mc.dist(mc.haar_sample(2, g), np.eye(2)) for _ in range(10_000)])
        assert 1 < mean < 2

    def test_haar_eigenphase_law(self):
        # SU(2) Haar: half-angle density (2/pi) sin^2; mean of cos(theta) for
        # eigenvalue e^{i theta} is -... compare trace moments: E|tr U|^2 = 1
        g = mc.rng(10)
        tr2 = np.mean([abs(np.trace(mc.haar_sample(2, g))) ** 2 for _ in range(20_000)])
        assert tr2 == pytest.approx(1.0, abs=0.05)

    def test_rejects_small_d(self):
        with pytest.raises(InvalidInput):
            mc.haar_sample(1, 0)

    def test_near_identity(self):
        for s in range(20):
            u = mc.near_identity_sample(3, 0.01, s)
            assert 0.0099 <= mc.dist(u, np.eye(3)) <= 0.01
            assert mc.is_special(u)

    def test_near_identity_range(self):
        for bad in (0.0, 1.0, -0.1):
            with pytest.raises(InvalidInput):
                mc.near_identity_sample(2, bad, 0)

    def test_sample_at_distance_full_range(self):
        for t in (0.5, 1.5, 1.99):
            assert 0.99 * t <= mc.dist(mc.sample_at_distance(2, t, 1), np.eye(2)) <= t

    def test_streams_independent(self):
        a = mc.rng(1, 2).standard_normal(4)
        b = mc.rng(1, 3).standard_normal(4)
        assert not np.allclose(a, b)
        assert np.array_equal(a, mc.rng(1, 2).standard_normal(4))


class TestJson:
    def test_round_trip_exact(self):
        u = mc.haar_sample(3, 4)
        assert np.array_equal(mc.matrix_from_json(mc.matrix_to_json(u)), u)

    def test_layout(self):
        obj = mc.matrix_to_json(np.array([[1, 2j], [3, 4]]))
        assert obj == {"dim": 2, "entries": [[1.0, 0.0], [0.0, 2.0], [3.0, 0.0], [4.0, 0.0]]}

    def test_malformed(self):
        with pytest.raises(InvalidInput):
            mc.matrix_from_json({"dim": 2, "entries": [[1, 0]]})
        with pytest.raises(InvalidInput):
            mc.matrix_from_json({"entries": []})


def test_to_special():
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    m, c = mc.to_special(h)
    assert c == pytest.approx(1j)
    assert abs(np.linalg.det(m) - 1) <= 1e-14
