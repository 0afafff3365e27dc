import numpy as np
import pytest

from trailplan import (HamiltonianConfig, HjbSolver, SolverConfig, apply_bcs,
                       make_synthetic, solve, terminal_condition)
from trailplan.errors import (MemoryBudgetError, NumericalBlowupError,
                              ValidationError)
from trailplan.solver import read_value_dump, write_value_csv, write_value_dump

from conftest import V0, small_solver_config


def cone(cfg, t):
    X, Y = np.meshgrid(cfg.x_nodes(), cfg.y_nodes(), indexing="ij")
    R = np.hypot(X - cfg.x_end[0], Y - cfg.x_end[1])
    return R, np.maximum(R - V0 * t, 0.0)


class TestTerminalCondition:
    def test_zero_at_target_node(self):
        cfg = small_solver_config()
        u0 = terminal_condition(cfg)
        i = int(round((cfg.x_end[0] - cfg.box[0]) / cfg.dx))
        j = int(round((cfg.x_end[1] - cfg.box[2]) / cfg.dy))
        assert u0[i, j] == 0.0

    def test_three_four_five(self):
        cfg = small_solver_config(box=(0, 8, 0, 8), N=80, M=80, x_end=(2.0, 2.0))
        u0 = terminal_condition(cfg)
        i = int(round((2.0 + 3.0 - 0) / cfg.dx))
        j = int(round((2.0 + 4.0 - 0) / cfg.dy))
        assert u0[i, j] == pytest.approx(5.0, rel=1e-14)

    def test_nonnegative_and_lipschitz(self):
        cfg = small_solver_config()
        u0 = terminal_condition(cfg)
        assert (u0 >= 0).all()
        assert np.abs(np.diff(u0, axis=0)).max() <= cfg.dx * (1 + 1e-12)
        assert np.abs(np.diff(u0, axis=1)).max() <= cfg.dy * (1 + 1e-12)


class TestApplyBcs:
    def test_quoted_arithmetic(self):
        # u1 = 2, u2 = 3, previous boundary 5 -> min(max(1, 3), 5) = 3
        u = np.zeros((4, 4))
        u[1, :], u[2, :] = 2.0, 3.0
        prev = np.full((4, 4), 5.0)
        out = apply_bcs(u.copy(), prev)
        assert out[0, 1] == 3.0

    def test_linear_data(self):
        u = np.zeros((4, 4))
        u[1, :], u[2, :] = 4.0, 5.0
        prev = np.full((4, 4), 10.0)
        out = apply_bcs(u.copy(), prev)
        assert out[0, 1] == 5.0

    def test_monotone_in_time(self):
        u = np.zeros((4, 4))
        u[1, :], u[2, :] = 2.0, 3.0
        prev = np.full((4, 4), 1.0)
        out = apply_bcs(u.copy(), prev)
        assert out[0, 1] == 1.0

    def test_corner_takes_min_of_both_formulas(self):
        rng = np.random.default_rng(3)
        u = rng.uniform(0, 5, (5, 5))
        prev = rng.uniform(0, 5, (5, 5))
        out = apply_bcs(u.copy(), prev)
        vx = min(max(2 * out[1, 0] - out[2, 0], out[2, 0]), prev[0, 0])
        vy = min(max(2 * out[0, 1] - out[0, 2], out[0, 2]), prev[0, 0])
        assert out[0, 0] == min(vx, vy)

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            apply_bcs(np.zeros((3, 3)), np.zeros((4, 4)))


class TestStepExplicit:
    def test_constant_slice_unchanged(self, flat_field, model):
        cfg = small_solver_config()
        s = HjbSolver(cfg, flat_field, model)
        u = np.full((cfg.N + 1, cfg.M + 1), 3.7)
        out = s.step_explicit(u)
        np.testing.assert_array_equal(out, u)

    def test_far_node_decreases_at_flat_speed(self, flat_field, model):
        cfg = small_solver_config()
        s = HjbSolver(cfg, flat_field, model)
        u0 = s.terminal_condition()
        u1 = s.step_explicit(u0)
        # distance gradient has norm 1 far from the target
        i, j = 5, 5
        drop = u0[i, j] - u1[i, j]
        assert drop == pytest.approx(cfg.dt * V0, rel=0.02)

    def test_cone_one_step_local_error(self, flat_field, model):
        cfg = small_solver_config(T=0.8)
        s = HjbSolver(cfg, flat_field, model)
        t = 0.3
        R, u_t = cone(cfg, t)
        u_next = s.step_explicit(u_t)
        _, u_exact = cone(cfg, t + cfg.dt)
        mask = (R > 3 * cfg.dx) & (np.abs(R - V0 * t) > 3 * cfg.dx) \
            & (np.abs(R - V0 * (t + cfg.dt)) > 3 * cfg.dx)
        err = np.abs(u_next - u_exact)[mask].max()
        assert err <= 2.0 * (cfg.dx + cfg.dt)

    def test_blowup_detection_names_node(self, flat_field, model):
        cfg = small_solver_config()
        s = HjbSolver(cfg, flat_field, model)
        u = s.terminal_condition()
        u[7, 9] = np.inf
        with pytest.raises(NumericalBlowupError, match=r"\("):
            s.step_explicit(u, step_index=12)


class TestStepSemiImplicit:
    def test_sigma_zero_bit_identical(self, flat_field, model):
        cfg = small_solver_config(sigma=0.0)
        s = HjbSolver(cfg, flat_field, model, time_stepper="semi_implicit")
        u0 = s.terminal_condition()
        np.testing.assert_array_equal(s.step_semi_implicit(u0), s.step_explicit(u0))

    def test_constant_preserved_with_diffusion(self, flat_field, model):
        cfg = small_solver_config(sigma=0.5)
        s = HjbSolver(cfg, flat_field, model)
        u = np.full((cfg.N + 1, cfg.M + 1), 2.5)
        out = s.step_semi_implicit(u)
        np.testing.assert_allclose(out, 2.5, atol=1e-12)

    def test_unconditionally_stable_large_dt(self, model):
        # dt far above the explicit diffusion limit; bounded by the max principle
        field = make_synthetic("flat", (0, 4, 0, 4), (241, 241))
        sigma = 1.0
        probe = small_solver_config(N=120, M=120, sigma=sigma)
        dt_want = 10.0 * probe.dx ** 2 / sigma ** 2
        K = int(np.ceil(probe.T / dt_want))
        cfg = small_solver_config(N=120, M=120, sigma=sigma, K=K)
        assert cfg.K == K  # Hamiltonian CFL satisfied, no auto-raise
        assert dt_want > 5.0 * cfg.dx ** 2 / (2.0 * sigma ** 2)
        s = HjbSolver(cfg, field, model)
        u = s.terminal_condition()
        for _ in range(5):
            u = s.step_semi_implicit(u)
        assert np.isfinite(u).all()
        assert u.max() <= s.terminal_condition().max() + 1e-9


class TestSolve:
    def test_cone_error_and_refinement(self, model):
        # The kink exclusion stays at the base grid's 3*dx for both solves so
        # the refined error is measured over the same physical region.
        field = make_synthetic("flat", (0, 4, 0, 4), (241, 241))
        excl = 3 * (4.0 / 60)
        errs = {}
        for N in (60, 120):
            cfg = SolverConfig(box=(0, 4, 0, 4), N=N, M=N, K=1, T=0.8, sigma=0.0,
                               x_end=(2.0, 2.0), ham=HamiltonianConfig(n_ext_samples=4))
            vf = solve(cfg, field, model)
            R, exact = cone(cfg, cfg.T)
            mask = (R > excl) & (np.abs(R - V0 * cfg.T) > excl)
            errs[N] = np.abs(vf.final - exact)[mask].max()
            assert errs[N] <= 2 * cfg.dx
        ratio = errs[60] / errs[120]
        assert 1.5 <= ratio <= 2.5

    def test_invariants_hold(self, flat_field, model):
        cfg = small_solver_config()
        vf = solve(cfg, flat_field, model, debug_checks=True)
        tol = 1e-6 * cfg.diam
        assert vf.u.min() >= -tol
        assert (vf.u <= vf.u[0] + tol).all()

    def test_lipschitz_preserved_on_flat(self, flat_field, model):
        cfg = small_solver_config()
        vf = solve(cfg, flat_field, model)
        bound = 1.0 + 10.0 * cfg.dx
        for k in range(cfg.K + 1):
            assert np.abs(np.diff(vf.u[k], axis=0)).max() / cfg.dx <= bound

    def test_vanishing_viscosity_continuity(self, flat_field, model):
        cfg0 = small_solver_config(sigma=0.0)
        cfg1 = small_solver_config(sigma=1e-4)
        vf0 = solve(cfg0, flat_field, model)
        vf1 = solve(cfg1, flat_field, model)
        assert np.abs(vf0.final - vf1.final).max() < 1e-2 * cfg0.diam

    def test_lf_more_diffusive_than_godunov(self, flat_field, model):
        base = dict(box=(0, 4, 0, 4), N=60, M=60, K=1, T=0.8, sigma=0.0,
                    x_end=(2.0, 2.0))
        cfg_g = SolverConfig(**base, ham=HamiltonianConfig(n_ext_samples=4))
        cfg_lf = SolverConfig(**base, ham=HamiltonianConfig(scheme="lax_friedrichs"))
        vf_g = solve(cfg_g, flat_field, model)
        vf_lf = solve(cfg_lf, flat_field, model)
        R, exact = cone(cfg_g, cfg_g.T)
        mask = (R > 3 * cfg_g.dx) & (np.abs(R - V0 * cfg_g.T) > 3 * cfg_g.dx)
        err_g = np.abs(vf_g.final - exact)[mask].mean()
        err_lf = np.abs(vf_lf.final - exact)[mask].mean()
        assert err_lf >= err_g

    def test_deterministic_rerun(self, flat_field, model):
        cfg = small_solver_config()
        a = solve(cfg, flat_field, model)
        b = solve(cfg, flat_field, model)
        np.testing.assert_array_equal(a.u, b.u)

    def test_sigma_zero_semi_implicit_solve_identical(self, flat_field, model):
        cfg = small_solver_config(sigma=0.0)
        a = solve(cfg, flat_field, model)
        b = solve(cfg, flat_field, model, time_stepper="semi_implicit")
        np.testing.assert_array_equal(a.u, b.u)

    def test_memory_cap(self, flat_field, model):
        cfg = small_solver_config(max_values=1000)
        with pytest.raises(MemoryBudgetError):
            solve(cfg, flat_field, model)


class TestSolverConfig:
    def test_cfl_auto_raise(self):
        cfg = small_solver_config(K=1)
        dt = cfg.dt
        assert dt * 1.11 * (1 / cfg.dx + 1 / cfg.dy) <= cfg.cfl_safety + 1e-12
        # next-lower K would violate
        dt_bad = cfg.T / (cfg.K - 1)
        assert dt_bad * 1.11 * (1 / cfg.dx + 1 / cfg.dy) > cfg.cfl_safety

    def test_explicit_k_kept_when_valid(self):
        cfg = small_solver_config(K=500)
        assert cfg.K == 500

    def test_x_end_margin_enforced(self):
        with pytest.raises(ValidationError):
            small_solver_config(x_end=(0.05, 2.0))

    def test_terrain_must_cover_box(self, model):
        small = make_synthetic("flat", (0, 1, 0, 1), (11, 11))
        with pytest.raises(ValidationError):
            solve(small_solver_config(), small, model)

    def test_explicit_stepper_rejects_sigma(self, flat_field, model):
        with pytest.raises(ValidationError):
            solve(small_solver_config(sigma=0.1), flat_field, model,
                  time_stepper="explicit")


class TestValueDump:
    def test_raw_round_trip(self, flat_field, model, tmp_path):
        cfg = small_solver_config(N=10, M=10, T=0.2)
        vf = solve(cfg, flat_field, model)
        p = tmp_path / "v.bin"
        write_value_dump(vf, p)
        header, u = read_value_dump(p)
        assert header["dims"] == [11, 11]
        assert header["sigma"] == 0.0
        assert header["endianness"] == "little"
        np.testing.assert_array_equal(u, vf.u)

    def test_csv_slice(self, flat_field, model, tmp_path):
        cfg = small_solver_config(N=10, M=10, T=0.2)
        vf = solve(cfg, flat_field, model)
        p = tmp_path / "v.csv"
        write_value_csv(vf, p, 0)
        lines = p.read_text().splitlines()
        assert lines[0] == "i,j,x,y,u"
        assert len(lines) == 1 + 11 * 11
