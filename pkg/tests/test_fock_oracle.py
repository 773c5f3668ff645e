import math

import numpy as np
import pytest

from usc_trio import analysis, fock_oracle as fo, milburn
from usc_trio.model import SystemParams

from conftest import OPEN_CHAIN, unit_params


def evolve(params, t, gamma, d=8):
    cfg = fo.FockConfig(cutoff=d)
    space = fo.FockSpace(d)
    rho = fo.FockMilburn(fo.build_hamiltonian(params, cfg, space)).density(t, gamma)
    return rho, cfg, space


class TestConfig:
    def test_dimension_guard(self):
        with pytest.raises(ValueError):
            fo.FockConfig(cutoff=17)
        assert fo.FockConfig(cutoff=16).dim == 4096

    @pytest.mark.parametrize("kw", [dict(cutoff=1), dict(k_tail_epsilon=0.0), dict(convergence_tol=1.0)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            fo.FockConfig(**kw)


class TestHamiltonian:
    def test_uncoupled_diagonal(self):
        p = SystemParams(1.0, 1.5, 0.7)
        H = fo.build_hamiltonian(p, fo.FockConfig(cutoff=4))
        n = np.indices((4, 4, 4)).reshape(3, -1)
        expected = (np.array([1.0, 1.5, 0.7])[:, None] * (n + 0.5)).sum(axis=0)
        assert np.array_equal(H, np.diag(np.diag(H)))
        assert np.diag(H) == pytest.approx(expected, abs=1e-14)

    def test_two_level_single_mode(self):
        H = fo.build_hamiltonian(SystemParams(1.0, 1.0, 1.0), fo.FockConfig(cutoff=2))
        # |000> and |100>, with modes 2 and 3 contributing their zero-point 1/2 each
        sub = H[np.ix_([0, 4], [0, 4])] - np.eye(2)
        assert sub == pytest.approx(np.diag([0.5, 1.5]), abs=1e-15)

    def test_hermitian(self):
        H = fo.build_hamiltonian(SystemParams(1, 1.2, 0.9, 0.05, 0.02, 0.03), fo.FockConfig(cutoff=5))
        assert np.abs(H - H.conj().T).max() < 1e-12

    def test_ground_energy(self):
        H = fo.build_hamiltonian(SystemParams.isotropic(1.0, 0.1), fo.FockConfig(cutoff=8))
        assert fo.ground_state_energy(H) == pytest.approx(0.5 * (math.sqrt(1.2) + 2 * math.sqrt(0.9)), abs=1e-4)
        assert fo.ground_state_energy(H) == pytest.approx(1.496406, abs=1e-4)

    def test_cutoff_mismatch(self):
        with pytest.raises(ValueError):
            fo.build_hamiltonian(SystemParams(1, 1, 1), fo.FockConfig(cutoff=4), fo.FockSpace(5))


class TestDensity:
    def test_t0(self):
        rho, _, _ = evolve(unit_params(**OPEN_CHAIN), 0.0, 50.0, d=5)
        assert np.abs(rho - fo.vacuum_density(5)).max() < 1e-12

    def test_uncoupled(self):
        for t in (3.0, 40.0):
            rho, _, _ = evolve(SystemParams(1, 1.2, 0.8), t, 10.0, d=4)
            assert np.abs(rho - fo.vacuum_density(4)).max() < 1e-14

    @pytest.mark.parametrize("gamma", [10.0, None])
    def test_valid_state(self, gamma):
        rho, _, _ = evolve(SystemParams(1, 1.2, 0.9, 0.1, 0.05, 0.08), 13.0, gamma, d=6)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)
        assert np.abs(rho - rho.conj().T).max() < 1e-14
        assert np.linalg.eigvalsh(rho).min() > -1e-9

    def test_matches_closed_form(self):
        p = SystemParams.isotropic(1.0, 0.1, gamma=100.0)
        rho, cfg, space = evolve(p, 20.0, 100.0)
        N = fo.mean_excitations(rho, space)
        ref = analysis.mean_excitations(milburn.covariance(milburn.build_propagator(p), 20.0, 100.0))
        assert np.abs(N - ref).max() <= 1e-4 * ref.max()

    def test_one_shot_helper(self):
        p = unit_params(**OPEN_CHAIN)
        cfg = fo.FockConfig(cutoff=4)
        H = fo.build_hamiltonian(p, cfg)
        rho = fo.milburn_density(H, 5.0, 20.0, cfg)
        assert np.trace(rho).real == pytest.approx(1.0)
        with pytest.raises(ValueError):
            fo.milburn_density(H, 5.0, 20.0, fo.FockConfig(cutoff=5))
        with pytest.raises(ValueError):
            fo.FockMilburn(H).density(-1.0, 1.0)


class TestObservables:
    def test_vacuum(self):
        cfg = fo.FockConfig(cutoff=4)
        obs = fo.observables(fo.vacuum_density(4), cfg)
        assert obs.N.tolist() == [0, 0, 0]
        assert np.abs(obs.sigma - np.eye(6)).max() < 1e-15
        assert obs.E.tolist() == [0, 0, 0]

    @pytest.mark.parametrize("s", [0.05, 0.1, 0.2])
    def test_two_mode_squeezed(self, s):
        d = 10
        obs = fo.observables(fo.two_mode_squeezed_density(s, d), fo.FockConfig(cutoff=d))
        assert obs.E[0] == pytest.approx(2 * s, abs=1e-6)
        assert obs.E[1:] == pytest.approx([0, 0], abs=1e-12)

    def test_covariance_matches_pipeline(self):
        p = unit_params(gamma=50.0, **OPEN_CHAIN)
        rho, cfg, space = evolve(p, 17.0, 50.0)
        sigma = milburn.covariance(milburn.build_propagator(p), 17.0, 50.0).entries
        assert np.abs(fo.covariance_matrix(rho, space) - sigma).max() < 1e-8

    def test_open_chain_mirror(self):
        # a <-> c mirror symmetry of the chain a - b - c
        p = unit_params(gamma=50.0, **OPEN_CHAIN)
        for t in (10.0, 20.0, 35.0):
            rho, cfg, space = evolve(p, t, 50.0)
            obs = fo.observables(rho, cfg, space)
            assert obs.E[0] == pytest.approx(obs.E[2], abs=1e-10)
            assert obs.N[0] == pytest.approx(obs.N[2], abs=1e-12)

    def test_one_vs_two_product_state(self):
        p = unit_params(gamma=50.0, J12=0.1)
        rho, cfg, _ = evolve(p, 20.0, 50.0, d=6)
        assert fo.log_negativity_one_vs_two(rho, 6, 2) == pytest.approx(0.0, abs=1e-10)


class TestGaussianity:
    def test_unitary_evolution_is_gaussian(self):
        p = unit_params(**OPEN_CHAIN)
        rho, _, space = evolve(p, 20.0, None, d=10)
        assert np.abs(fo.wick_residual(rho, space)).max() < 1e-10

    def test_milburn_mixture_is_not_gaussian(self):
        # a Poisson mixture of Gaussian states: the fourth-moment defect does not shrink with the cutoff
        p = unit_params(gamma=50.0, **OPEN_CHAIN)
        res = []
        for d in (8, 10):
            rho, _, space = evolve(p, 20.0, 50.0, d=d)
            res.append(fo.wick_residual(rho, space))
        assert np.abs(res[0] - res[1]).max() < 1e-9
        assert res[1].max() > 1e-5


class TestConvergence:
    def test_converged(self):
        p = SystemParams.isotropic(1.0, 0.1, gamma=100.0)
        obs = fo.converged_observables(p, 20.0, 100.0, fo.FockConfig(cutoff=6))
        assert obs.N.min() > 0

    def test_raises_when_truncation_bites(self):
        with pytest.raises(fo.FockConvergenceError):
            fo.converged_observables(SystemParams(1, 1, 1, 0.9, 0, 0, gamma=5.0), 10.0, 5.0, fo.FockConfig(cutoff=3))
