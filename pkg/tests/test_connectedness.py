import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from conftest import make_returns, random_psd, random_stable_phi
from qspill.connectedness import (
    aggregate_matrix,
    directional_measures,
    generalized_from,
    gfevd,
    group_decompose,
    joint_from,
    joint_sot,
    joint_tci,
    normalize_gsot,
    rolling_connectedness,
    rolling_connectedness_modes,
    spillover_set,
)
from qspill.errors import ConnectednessError
from qspill.qvar import ma_coefficients
from qspill.synthetic import simulate_var1


def random_case(rng, n=4, H=10):
    phi = random_stable_phi(rng, n, p=1, radius=0.7)
    return ma_coefficients(phi, H).stack(), random_psd(rng, n)


def gfevd_loop(P, S):
    """Element-by-element generalized FEVD."""
    n = S.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        den = sum(P[h][i] @ S @ P[h][i] for h in range(len(P)))
        for j in range(n):
            out[i, j] = sum((P[h][i] @ S[:, j]) ** 2 for h in range(len(P))) / S[j, j] / den
    return out


def joint_from_direct(P, S):
    """Joint FROM through the explicit inverse of the conditioning block."""
    n = S.shape[0]
    out = np.zeros(n)
    for i in range(n):
        M = np.delete(np.eye(n), i, axis=1)
        G = S @ M @ np.linalg.inv(M.T @ S @ M) @ M.T @ S
        num = sum(P[h][i] @ G @ P[h][i] for h in range(len(P)))
        den = sum(P[h][i] @ S @ P[h][i] for h in range(len(P)))
        out[i] = num / den
    return out


def rho_case(rho):
    return np.eye(2)[None], np.array([[1.0, rho], [rho, 1.0]])


class TestGfevd:
    def test_no_dynamics_no_covariance(self):
        P = np.stack([np.eye(3)] + [np.zeros((3, 3))] * 4)
        assert_allclose(gfevd(P, np.diag([1.0, 2.0, 3.0])), np.eye(3))

    @pytest.mark.parametrize("rho", [0.0, 0.3, -0.6, 0.9])
    def test_bivariate_h1(self, rho):
        g = gfevd(*rho_case(rho))
        assert_allclose(g[0, 1], rho**2, atol=1e-15)
        assert_allclose(g[1, 0], rho**2, atol=1e-15)
        assert_allclose(np.diag(g), 1.0)

    def test_matches_loop(self, rng):
        P, S = random_case(rng)
        assert_allclose(gfevd(P, S), gfevd_loop(P, S), rtol=1e-12)

    def test_permutation_equivariance(self, rng):
        P, S = random_case(rng, n=5)
        perm = rng.permutation(5)
        g = gfevd(P, S)
        gp = gfevd(P[:, perm][:, :, perm], S[np.ix_(perm, perm)])
        assert_allclose(gp, g[np.ix_(perm, perm)], rtol=1e-12)

    def test_scalar_variants(self, rng):
        P, S = random_case(rng)
        a, b = gfevd(P, S, scalar="jj"), gfevd(P, S, scalar="ii")
        d = np.diag(S)
        assert_allclose(a * d[None, :], b * d[:, None], rtol=1e-12)
        with pytest.raises(ValueError):
            gfevd(P, S, scalar="kk")

    def test_horizon_truncation(self, rng):
        P, S = random_case(rng, H=10)
        assert_allclose(gfevd(P, S, H=3), gfevd(P[:3], S))

    def test_zero_variance(self):
        with pytest.raises(ConnectednessError):
            gfevd(np.eye(2)[None], np.diag([1.0, 0.0]))


class TestNormalize:
    def test_identity(self):
        assert_array_equal(normalize_gsot(np.eye(3)), np.eye(3))

    def test_row(self):
        assert_allclose(normalize_gsot([[2.0, 2.0], [1.0, 3.0]])[0], [0.5, 0.5])

    def test_random_rows(self, rng):
        g = normalize_gsot(rng.uniform(0.01, 5, (6, 6)))
        assert_allclose(g.sum(axis=1), 1.0, atol=1e-12)

    def test_zero_row(self):
        with pytest.raises(ConnectednessError):
            normalize_gsot(np.zeros((2, 2)))


class TestJointFrom:
    def test_no_dynamics_diagonal_sigma(self):
        P = np.stack([np.eye(3), np.zeros((3, 3))])
        assert_array_equal(joint_from(P, np.diag([1.0, 2.0, 0.5])), 0.0)

    @pytest.mark.parametrize("rho", [0.2, -0.5, 0.95])
    def test_bivariate_h1(self, rho):
        assert_allclose(joint_from(*rho_case(rho)), [rho**2, rho**2], atol=1e-14)

    def test_h1_is_r_squared(self, rng):
        S = random_psd(rng, 5)
        # at H = 1 FROM_i is the R^2 of shock i on the other shocks
        r2 = 1.0 - 1.0 / (np.diag(S) * np.diag(np.linalg.inv(S)))
        assert_allclose(joint_from(np.eye(5)[None], S), r2, rtol=1e-10)

    def test_matches_direct_formula(self, rng):
        for _ in range(10):
            P, S = random_case(rng, n=int(rng.integers(2, 6)))
            assert_allclose(joint_from(P, S), joint_from_direct(P, S), rtol=1e-9, atol=1e-13)

    def test_bounded(self, rng):
        for _ in range(25):
            P, S = random_case(rng, n=4)
            jf = joint_from(P, S)
            assert np.all((jf >= 0) & (jf <= 1))

    def test_tci(self):
        assert joint_tci(np.zeros(4)) == 0.0
        assert joint_tci(np.ones(4)) == 1.0


class TestJointSot:
    def test_identity_scaling(self, rng):
        g = normalize_gsot(rng.uniform(0.1, 1, (4, 4)))
        j = joint_sot(g, generalized_from(g))
        off = ~np.eye(4, dtype=bool)
        assert_allclose(j[off], g[off], rtol=1e-14)

    def test_off_diagonal_sums(self, rng):
        for _ in range(20):
            P, S = random_case(rng)
            g = normalize_gsot(gfevd(P, S))
            jf = joint_from(P, S)
            j = joint_sot(g, jf)
            assert_allclose(j.sum(axis=1) - np.diag(j), jf, atol=1e-10)
            assert_allclose(j.sum(axis=1), 1.0, atol=1e-12)

    def test_zero_generalized_from(self):
        with pytest.raises(ConnectednessError, match="zero generalized FROM"):
            joint_sot(np.eye(3), np.zeros(3))

    def test_degenerate_allowed(self):
        j = joint_sot(np.eye(3), np.zeros(3), allow_degenerate=True)
        assert_array_equal(j, np.eye(3))


class TestDirectional:
    def test_symmetric(self, rng):
        A = rng.uniform(0, 0.2, (4, 4))
        A = A + A.T
        d = directional_measures(A, A.sum(axis=1) - np.diag(A))
        assert_allclose(d["npdc"], 0.0)
        assert_allclose(d["net"], 0.0, atol=1e-15)

    def test_net_sums_to_zero(self, rng):
        for _ in range(20):
            j = normalize_gsot(rng.uniform(0, 1, (5, 5)))
            d = directional_measures(j, generalized_from(j))
            assert abs(d["net"].sum()) < 1e-10
            assert_allclose(d["npdc"], -d["npdc"].T)

    def test_npdc_orientation(self):
        j = np.array([[0.7, 0.3], [0.1, 0.9]])
        d = directional_measures(j, [0.3, 0.1])
        # npdc_ij = jsot_ji - jsot_ij
        assert_allclose(d["npdc"][0, 1], 0.1 - 0.3)
        assert_allclose(d["to"], [0.1, 0.3])

    def test_non_square(self):
        with pytest.raises(ConnectednessError):
            directional_measures(np.ones((2, 3)), np.ones(2))


class TestGroups:
    def test_single_group(self, rng):
        j = normalize_gsot(rng.uniform(0, 1, (4, 4)))
        jf = generalized_from(j)
        out = group_decompose(j, jf, ["a"] * 4)
        assert out["external"] == 0.0
        assert_allclose(out["internal"], jf.mean(), atol=1e-15)

    def test_internal_external_partition(self, rng):
        for _ in range(20):
            j = normalize_gsot(rng.uniform(0, 1, (6, 6)))
            jf = generalized_from(j)
            part = list(rng.choice(["x", "y", "z"], 6))
            out = group_decompose(j, jf, part)
            assert abs(out["internal"] + out["external"] - jf.mean()) < 1e-10
            assert_allclose(sum(out["internal_by_group"].values()), out["internal"], atol=1e-14)

    def test_hand_two_groups(self):
        j = np.array([
            [0.6, 0.2, 0.1, 0.1],
            [0.3, 0.5, 0.0, 0.2],
            [0.1, 0.1, 0.7, 0.1],
            [0.0, 0.4, 0.2, 0.4],
        ])
        out = group_decompose(j, generalized_from(j), ["e", "e", "c", "c"], equity_tag=[1, 1, 0, 0],
                              exclusive_tci=0.25)
        # internal: (0.2 + 0.3 + 0.1 + 0.2) / 4 ; external: remaining off-diagonal mass / 4
        assert_allclose(out["internal"], 0.8 / 4)
        assert_allclose(out["external"], (0.1 + 0.1 + 0.0 + 0.2 + 0.1 + 0.1 + 0.0 + 0.4) / 4)
        assert_allclose(out["inclusive"], out["external"])
        assert_allclose(out["exclusive_masked"], (0.1 + 0.2) / 2)
        assert out["exclusive"] == 0.25
        # blocks [[1.6, 0.4], [0.6, 1.4]] / 2 -> generalized FROM (0.2, 0.3)
        assert_allclose(out["aggregate"], 0.25)

    def test_aggregate_two_ways(self, rng):
        j = normalize_gsot(rng.uniform(0, 1, (7, 7)))
        groups = list(rng.choice(["a", "b"], 7))
        labels, agg = aggregate_matrix(j, groups)
        loop = np.zeros((2, 2))
        for r in range(7):
            for c in range(7):
                loop[labels.index(groups[r]), labels.index(groups[c])] += j[r, c]
        loop /= loop.sum(axis=1, keepdims=True)
        assert_allclose(agg, loop, atol=1e-12)
        out = group_decompose(j, generalized_from(j), groups)
        assert abs(out["aggregate"] - (loop[0, 1] + loop[1, 0]) / 2) < 1e-12

    def test_partition_length(self):
        with pytest.raises(ConnectednessError):
            group_decompose(np.eye(3), np.zeros(3), ["a", "b"])


class TestSpilloverSet:
    @pytest.mark.parametrize("mode", ["generalized", "joint"])
    def test_diagonal_zero_dynamics(self, mode):
        P = np.stack([np.eye(4)] + [np.zeros((4, 4))] * 9)
        s = spillover_set(P, np.diag([1.0, 2.0, 3.0, 4.0]), tau=0.5, mode=mode)
        assert s.tci_overall == 0.0
        assert_array_equal(s.jsot, np.eye(4))

    def test_joint_chain(self, rng):
        P, S = random_case(rng, n=4)
        part = ["a", "a", "b", "b"]
        s = spillover_set(P, S, tau=0.05, partition=part, equity_tag=[1, 1, 0, 0])
        assert_allclose(s.jsot.sum(axis=1), 1.0, atol=1e-12)
        assert_allclose(s.tci_overall, s.from_.mean())
        assert_allclose(s.tci_groups["internal"] + s.tci_groups["external"], s.tci_overall, atol=1e-10)
        assert abs(s.net.sum()) < 1e-10

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            spillover_set(np.eye(2)[None], np.eye(2), tau=0.5, mode="other")


class TestRolling:
    def test_constant_panel_skips_every_window(self):
        panel = make_returns(np.zeros((60, 2)))
        rc = rolling_connectedness(panel, 40, 1, 0.5, H=5)
        assert rc.sets == [] and rc.dates == []
        assert len(rc.skipped) == 21

    def test_window_count_and_dates(self, rng):
        panel = make_returns(rng.standard_normal((70, 2)))
        rc = rolling_connectedness(panel, 50, 1, 0.5, H=5)
        assert len(rc.sets) == 21
        assert rc.dates[0] == panel.dates[49] and rc.dates[-1] == panel.dates[-1]
        assert list(rc.tci_frame().columns) == ["tci"]

    def test_panel_too_short(self, rng):
        with pytest.raises(ConnectednessError):
            rolling_connectedness(make_returns(rng.standard_normal((30, 2))), 30, 1, 0.5)

    def test_white_noise_both_modes(self):
        rng = np.random.default_rng(8)
        panel = make_returns(rng.standard_normal((330, 3)))
        res = rolling_connectedness_modes(panel, 250, 1, [0.5], H=10, modes=("generalized", "joint"))
        for key, rc in res.items():
            tci = rc.tci_frame()["tci"].to_numpy()
            assert len(tci) == 81
            assert tci.max() < 0.1, key

    def test_longer_window_is_smoother(self):
        rng = np.random.default_rng(21)
        phi = np.array([[0.3, 0.2, 0.0], [0.0, 0.3, 0.2], [0.2, 0.0, 0.3]])
        R = simulate_var1(phi, 700, rng, chol=np.linalg.cholesky(0.5 * np.eye(3) + 0.5))
        panel = make_returns(R)
        series = {w: rolling_connectedness(panel, w, 1, 0.5, H=10).tci_frame()["tci"] for w in (200, 250)}
        common = series[250].index
        assert common.isin(series[200].index).all()
        assert series[250].var() < series[200].loc[common].var()

    def test_workers_do_not_change_results(self, rng):
        panel = make_returns(rng.standard_normal((62, 2)))
        a = rolling_connectedness(panel, 50, 1, 0.95, H=5)
        b = rolling_connectedness(panel, 50, 1, 0.95, H=5, workers=2)
        assert_array_equal(a.tci_frame().to_numpy(), b.tci_frame().to_numpy())
