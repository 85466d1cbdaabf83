import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from quadtherm.linalg import expm
from quadtherm.network import (
    ENVIRONMENT,
    MOTOR,
    Edge,
    HeatInput,
    NetworkError,
    ThermalNetwork,
    ThermalNode,
    ThermalState,
    build_generator,
    default_network,
    initial_state,
    node_rates,
    pairwise_flow,
)
from quadtherm.thermal import (
    EULER,
    EXACT,
    EulerStabilityWarning,
    discretize,
    matrices_for,
    simulate,
    single_node_analytic,
    steady_state,
    step,
)

from oracles import edge_rhs, edge_rhs_matrix, random_network, rk4


def single_motor(C=0.5, R=2.0, ambient=35.0, aux=0.0):
    return ThermalNetwork(
        [ThermalNode(0, MOTOR, C, 0.12, aux), ThermalNode(1, ENVIRONMENT, 0.0)],
        [Edge(0, 1, R)],
        ambient,
    )


def chain3(C0=2.0, C1=3.0, R01=1.5, R12=4.0):
    return ThermalNetwork(
        [ThermalNode(0, MOTOR, C0), ThermalNode(1, MOTOR, C1), ThermalNode(2, ENVIRONMENT, 0.0)],
        [Edge(0, 1, R01), Edge(1, 2, R12)],
        20.0,
    )


network_seeds = st.integers(min_value=0, max_value=2**32 - 1)


# ----------------------------------------------------------------- validation


class TestNetworkValidation:
    def test_default_network_layout(self):
        net = default_network()
        assert net.n == 14
        assert net.env_index == 13
        assert net.motor_indices == tuple(range(12))
        assert net.nodes[12].kind == "computer"

    @pytest.mark.parametrize(
        "nodes, edges, match",
        [
            ([ThermalNode(0, MOTOR, 1.0), ThermalNode(1, ENVIRONMENT, 0)], [Edge(0, 1, 0.0)], "edge \\(0, 1\\)"),
            ([ThermalNode(0, MOTOR, -1.0), ThermalNode(1, ENVIRONMENT, 0)], [Edge(0, 1, 1.0)], "node 0"),
            ([ThermalNode(0, MOTOR, 1.0), ThermalNode(1, MOTOR, 1.0)], [Edge(0, 1, 1.0)], "environment"),
            ([ThermalNode(0, MOTOR, 1.0), ThermalNode(1, MOTOR, 1.0), ThermalNode(2, ENVIRONMENT, 0)],
             [Edge(1, 2, 1.0)], "nodes \\[0\\]"),
            ([ThermalNode(0, MOTOR, 1.0), ThermalNode(1, ENVIRONMENT, 0)], [Edge(0, 1, 1.0), Edge(0, 1, 2.0)], "twice"),
            ([ThermalNode(0, MOTOR, 1.0), ThermalNode(1, ENVIRONMENT, 0)], [Edge(0, 0, 1.0), Edge(0, 1, 1.0)], "self"),
            ([ThermalNode(0, MOTOR, 1.0), ThermalNode(1, ENVIRONMENT, 0)], [Edge(0, 5, 1.0)], "out of range"),
            ([ThermalNode(0, MOTOR, 1.0), ThermalNode(1, ENVIRONMENT, 0)], [Edge(1, 0, 1.0)], "i < j"),
            ([ThermalNode(0, "computer", 1.0, 0.3), ThermalNode(1, ENVIRONMENT, 0)], [Edge(0, 1, 1.0)], "winding"),
        ],
    )
    def test_invalid_networks_name_the_culprit(self, nodes, edges, match):
        with pytest.raises(NetworkError, match=match):
            ThermalNetwork(nodes, edges, 25.0)


# ------------------------------------------------------------------ generator


class TestBuildGenerator:
    def test_single_motor_rows(self):
        gen = build_generator(single_motor())
        np.testing.assert_allclose(gen.conduction, [[-1.0, 1.0], [0.0, 0.0]], atol=0)
        np.testing.assert_allclose(gen.input_map, [[2.0, 0.0], [0.0, 0.0]], atol=0)

    def test_chain_matches_hand_expansion(self):
        C0, C1, R01, R12 = 2.0, 3.0, 1.5, 4.0
        gen = build_generator(chain3(C0, C1, R01, R12))
        expected = np.array([
            [-1 / (C0 * R01), 1 / (C0 * R01), 0.0],
            [1 / (C1 * R01), -1 / (C1 * R01) - 1 / (C1 * R12), 1 / (C1 * R12)],
            [0.0, 0.0, 0.0],
        ])
        np.testing.assert_allclose(gen.conduction, expected, rtol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(network_seeds, st.integers(3, 14))
    def test_metzler_zero_row_sums_env_row(self, seed, n):
        net = random_network(np.random.default_rng(seed), n)
        L = build_generator(net).conduction
        off = L[~np.eye(n, dtype=bool)]
        assert np.all(off >= 0)
        np.testing.assert_allclose(L.sum(axis=1), 0.0, atol=1e-12)
        assert np.all(L[net.env_index] == 0)
        np.testing.assert_allclose(L @ np.full(n, 42.0), 0.0, atol=1e-12)


# ------------------------------------------------------------------ expm


class TestExpm:
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_scipy_on_general_matrices(self, seed):
        M = np.random.default_rng(seed).normal(size=(6, 6)) * 3
        np.testing.assert_allclose(expm(M), scipy.linalg.expm(M), rtol=1e-11, atol=1e-12)

    def test_scalar(self):
        assert expm([[-1.0]])[0, 0] == pytest.approx(math.exp(-1.0), rel=1e-14)

    def test_metzler_result_nonnegative(self):
        L = build_generator(default_network()).conduction
        E = expm(L * 50.0)
        assert E.min() >= 0.0


# -------------------------------------------------------------- discretize


class TestDiscretize:
    def test_small_h_limit(self):
        mat = matrices_for(default_network(), 1e-9)
        assert np.linalg.norm(mat.A - np.eye(14)) < 1e-6
        assert np.linalg.norm(mat.B) < 1e-6

    def test_single_motor_unit_time_constant(self):
        mat = matrices_for(single_motor(), 1.0)
        assert mat.A[0, 0] == pytest.approx(math.exp(-1.0), abs=1e-12)
        # B = R (1 - e^{-h/RC}) for the motor row
        assert mat.B[0, 0] == pytest.approx(2.0 * (1 - math.exp(-1.0)), abs=1e-12)

    def test_env_rows_fixed(self):
        mat = matrices_for(default_network(), 0.5)
        np.testing.assert_array_equal(mat.A[13], np.eye(14)[13])
        np.testing.assert_array_equal(mat.B[13], np.zeros(14))

    def test_euler_vs_exact_second_order(self):
        gen = build_generator(default_network())
        errs = []
        for h in (0.04, 0.02, 0.01):
            errs.append(np.linalg.norm(discretize(gen, h, EULER).A - discretize(gen, h, EXACT).A))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)

    def test_bad_h(self):
        with pytest.raises(ValueError):
            discretize(build_generator(single_motor()), 0.0)

    def test_euler_stability_flag(self):
        gen = build_generator(single_motor())  # |diag| = 1 -> bound 2 s
        assert not discretize(gen, 1.5, EULER).unstable
        with pytest.warns(EulerStabilityWarning):
            assert discretize(gen, 2.5, EULER).unstable

    @settings(max_examples=40, deadline=None)
    @given(network_seeds, st.integers(3, 14), st.sampled_from([0.02, 0.5, 3.0]))
    def test_exact_matrices_are_stochastic(self, seed, n, h):
        net = random_network(np.random.default_rng(seed), n)
        mat = matrices_for(net, h)
        np.testing.assert_allclose(mat.A.sum(axis=1), 1.0, atol=1e-10)
        assert mat.A.min() >= -1e-12
        assert mat.B.min() >= -1e-12


# ----------------------------------------------------------------- stepping


class TestStep:
    def test_ambient_fixed_point(self):
        net = default_network()
        mat = matrices_for(net, 0.02)
        s0 = initial_state(net)
        s1 = step(mat, s0, HeatInput(np.zeros(14)))
        np.testing.assert_allclose(s1.temperatures, s0.temperatures, atol=1e-12)
        assert s1.time == pytest.approx(0.02)

    @pytest.mark.parametrize("h", [0.001, 0.1, 1.0])
    def test_single_motor_matches_closed_form(self, h):
        net = single_motor()
        mat = matrices_for(net, h)
        state = initial_state(net, 50.0)
        q = HeatInput([1.0, 0.0])
        current = math.sqrt(1.0 / 0.12)  # current^2 * R_d = 1 W
        for k in range(1, int(round(5.0 / h)) + 1):
            state = step(mat, state, q)
            expected = single_node_analytic(0.5, 2.0, 0.12, 35.0, 50.0, current, k * h)
            assert abs(state.temperatures[0] - expected) < 1e-9

    def test_default_network_matches_rk4(self, rng):
        net = default_network()
        q = rng.uniform(0.0, 20.0, 14)
        q[13] = 0.0
        mat = matrices_for(net, 0.02)
        state = initial_state(net, rng.uniform(25.0, 60.0, 12))
        T0 = state.temperatures.copy()
        for _ in range(100):
            state = step(mat, state, HeatInput(q))
        ref = rk4(edge_rhs_matrix(net, q), T0, 2.0, 1e-3)
        np.testing.assert_allclose(state.temperatures, ref, atol=1e-6)

    def test_dimension_mismatch(self):
        mat = matrices_for(single_motor(), 0.1)
        with pytest.raises(ValueError, match="dimension"):
            step(mat, ThermalState([35.0, 35.0, 35.0]), HeatInput([0.0, 0.0]))


# ------------------------------------------------------------------- flows


class TestPairwiseFlow:
    def test_no_gradient(self):
        net = chain3()
        assert pairwise_flow(ThermalState([30.0, 30.0, 20.0]), net, 0, 1) == 0.0

    def test_hot_node_loses_heat(self):
        net = ThermalNetwork(
            [ThermalNode(0, MOTOR, 1.0), ThermalNode(1, MOTOR, 1.0), ThermalNode(2, ENVIRONMENT, 0)],
            [Edge(0, 1, 5.0), Edge(1, 2, 1.0)],
            20.0,
        )
        assert pairwise_flow(ThermalState([60.0, 35.0, 20.0]), net, 0, 1) == pytest.approx(-5.0)

    def test_non_edge(self):
        with pytest.raises(NetworkError):
            pairwise_flow(ThermalState([1.0, 2.0, 3.0]), chain3(), 0, 2)

    @settings(max_examples=30, deadline=None)
    @given(network_seeds)
    def test_antisymmetry(self, seed):
        rng = np.random.default_rng(seed)
        net = random_network(rng, 8)
        st_ = ThermalState(rng.uniform(0, 80, 8))
        for e in net.edges:
            assert pairwise_flow(st_, net, e.i, e.j) == -pairwise_flow(st_, net, e.j, e.i)


class TestEnergyBookkeeping:
    @settings(max_examples=40, deadline=None)
    @given(network_seeds, st.integers(3, 14))
    def test_stored_power_equals_input_plus_env_exchange(self, seed, n):
        rng = np.random.default_rng(seed)
        net = random_network(rng, n)
        T = rng.uniform(0.0, 90.0, n)
        T[net.env_index] = net.ambient
        state = ThermalState(T)
        q = rng.uniform(0.0, 30.0, n)
        q[net.env_index] = 0.0
        rates = node_rates(net, state, HeatInput(q))
        C = net.capacitances
        free = [k for k in range(n) if k != net.env_index]
        stored = float(np.sum(C[free] * rates[free]))
        env = net.env_index
        from_env = sum(pairwise_flow(state, net, j, env) for j, _ in net.neighbors(env))
        assert stored == pytest.approx(float(q.sum()) + from_env, abs=1e-9 * max(1.0, abs(stored)))


# --------------------------------------------------------------- closed form


class TestSingleNodeAnalytic:
    def test_long_time_limit(self):
        # current^2 * R_d = 1 W, R = 2 -> T_E + 2
        assert single_node_analytic(0.5, 2.0, 1.0, 35.0, 35.0, 1.0, 1e4) == pytest.approx(37.0, abs=1e-12)

    def test_unit_time(self):
        assert single_node_analytic(0.5, 2.0, 1.0, 0.0, 0.0, 1.0, 1.0) == pytest.approx(1.264241117657115, abs=1e-12)

    def test_equilibrium(self):
        t = np.linspace(0, 100, 11)
        np.testing.assert_array_equal(single_node_analytic(3.0, 2.0, 0.1, 25.0, 25.0, 0.0, t), 25.0)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            single_node_analytic(0.0, 2.0, 1.0, 0.0, 0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            single_node_analytic(1.0, 2.0, 1.0, 0.0, 0.0, 1.0, -1.0)


# ------------------------------------------------------------ steady state


class TestSteadyState:
    def test_zero_input_is_ambient(self):
        net = default_network(31.0)
        np.testing.assert_allclose(steady_state(net, HeatInput(np.zeros(14))), 31.0, atol=1e-12)

    def test_single_motor_offset(self):
        T = steady_state(single_motor(), HeatInput([1.0, 0.0]))
        assert T[0] == pytest.approx(37.0, abs=1e-12)

    def test_long_simulation_converges(self, rng):
        net = default_network()
        q = rng.uniform(0.0, 25.0, 14)
        q[13] = 0.0
        target = steady_state(net, HeatInput(q))
        trace = simulate(net, HeatInput(q), T0=45.0, horizon=3000.0, h=5.0)
        np.testing.assert_allclose(trace.temperatures[-1], target, atol=1e-6)

    @settings(max_examples=40, deadline=None)
    @given(network_seeds, st.integers(3, 14))
    def test_nonnegative_input_stays_above_ambient(self, seed, n):
        rng = np.random.default_rng(seed)
        net = random_network(rng, n)
        q = rng.uniform(0.0, 10.0, n)
        T = steady_state(net, HeatInput(q))
        assert np.all(T >= net.ambient - 1e-9)
        np.testing.assert_allclose(node_rates(net, ThermalState(T), HeatInput(q)), 0.0, atol=1e-9)


# --------------------------------------------------------------- simulate


class TestSimulate:
    def test_zero_horizon(self):
        net = single_motor()
        tr = simulate(net, HeatInput([1.0, 0.0]), T0=40.0, horizon=0.0, h=0.1)
        assert len(tr) == 1
        assert tr.temperatures[0, 0] == 40.0

    def test_piecewise_input_equals_repeated_steps(self):
        net = default_network()
        mat = matrices_for(net, 0.05)

        def schedule(t):
            w = np.where(np.arange(14) < 12, 10.0 if t < 1.0 else 2.0, 0.0)
            return HeatInput(w)

        tr = simulate(net, schedule, T0=30.0, horizon=2.0, h=0.05)
        state = initial_state(net, 30.0)
        for k in range(40):
            state = step(mat, state, schedule(k * 0.05))
            np.testing.assert_array_equal(tr.temperatures[k + 1], state.temperatures)

    def test_deterministic(self):
        net = default_network()
        a = simulate(net, HeatInput(np.r_[np.full(13, 3.0), 0.0]), T0=40.0, horizon=5.0, h=0.02)
        b = simulate(net, HeatInput(np.r_[np.full(13, 3.0), 0.0]), T0=40.0, horizon=5.0, h=0.02)
        assert a.to_csv() == b.to_csv()

    def test_csv_header(self):
        tr = simulate(default_network(), HeatInput(np.zeros(14)), horizon=0.04, h=0.02)
        header = tr.to_csv().splitlines()[0].split(",")
        assert header == ["t"] + [f"T_{i}" for i in range(14)] + [f"Q_{i}" for i in range(14)]
        assert len(tr.to_csv().splitlines()) == 1 + 3

    @pytest.mark.parametrize("seed", range(4))
    def test_small_graphs_match_rk4(self, seed):
        rng = np.random.default_rng(100 + seed)
        net = random_network(rng, 4)
        q = rng.uniform(0, 5, 4)
        q[net.env_index] = 0.0
        T0 = rng.uniform(10, 60, 4)
        T0[net.env_index] = net.ambient
        tr = simulate(net, HeatInput(q), T0=T0, horizon=2.0, h=0.1)
        ref = rk4(edge_rhs(net, q), T0, 2.0, 1e-3, record_every=100)
        np.testing.assert_allclose(tr.temperatures, ref, atol=1e-6)


# -------------------------------------------------------------- properties


class TestProperties:
    @settings(max_examples=40, deadline=None)
    @given(network_seeds, st.integers(3, 10))
    def test_comparison_principle(self, seed, n):
        """Distance above steady state never grows under constant input."""
        rng = np.random.default_rng(seed)
        net = random_network(rng, n)
        q = rng.uniform(0.0, 10.0, n)
        q[net.env_index] = 0.0
        T0 = rng.uniform(0.0, 90.0, n)
        T0[net.env_index] = net.ambient
        ss = steady_state(net, HeatInput(q))
        tr = simulate(net, HeatInput(q), T0=T0, horizon=20.0, h=0.25)
        excess = tr.temperatures - ss
        running_max = excess.max(axis=1)
        assert np.all(np.diff(running_max) <= 1e-9)
        assert np.all(tr.temperatures <= ss + excess[0].max() + 1e-9)

    def test_euler_global_error_first_order(self):
        net = default_network()
        q = np.r_[np.full(12, 20.0), 5.0, 0.0]
        exact = simulate(net, HeatInput(q), T0=30.0, horizon=20.0, h=0.01).temperatures[-1]
        errs = []
        for h in (0.2, 0.1, 0.05):
            approx = simulate(net, HeatInput(q), T0=30.0, horizon=20.0, h=h, method=EULER).temperatures[-1]
            errs.append(np.max(np.abs(approx - exact)))
        for a, b in zip(errs, errs[1:]):
            assert a / b == pytest.approx(2.0, rel=0.15)
