import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from usc_trio import analysis, fock_oracle, milburn, symplectic as sy
from usc_trio.analysis import NonPhysicalError
from usc_trio.model import SystemParams

from conftest import DECOUPLED_C, OPEN_CHAIN, random_params, unit_params


def two_mode_squeezed(s):
    """Modes a, b in a two-mode squeezed vacuum of parameter s, c in vacuum."""
    S = sy.rotation_12(math.pi / 4, 1.0) @ sy.squeeze_123(s, -s, 0.0) @ sy.rotation_12(-math.pi / 4, 1.0)
    return S @ S.conj().T


@pytest.fixture(scope="module")
def open_chain_states():
    prop = milburn.build_propagator(unit_params(gamma=50.0, **OPEN_CHAIN))
    return milburn.covariance_trajectory(prop, np.linspace(0, 50, 26), 50.0)


class TestMeanExcitations:
    def test_vacuum(self):
        assert analysis.mean_excitations(np.eye(6)).tolist() == [0, 0, 0]

    @pytest.mark.parametrize("r", [0.1, -0.4, 1.2])
    def test_single_mode_squeezed(self, r):
        S = sy.squeeze_123(r, 0, 0)
        N = analysis.mean_excitations(S @ S.conj().T)
        assert N[0] == pytest.approx(math.sinh(r) ** 2, rel=1e-12)
        assert N[1:] == pytest.approx([0, 0], abs=1e-15)

    def test_isotropic_steady_values(self):
        prop = milburn.build_propagator(SystemParams.isotropic(1.0, 0.1, gamma=100.0))
        N = analysis.mean_excitations(milburn.covariance_steady(prop, 100.0))
        # all three equal by permutation symmetry: J^2 / (4 (1 + 2J)(1 - J))
        assert N == pytest.approx(np.full(3, 0.01 / (4 * 1.2 * 0.9)), rel=1e-9)

    def test_clamps_small_negative(self):
        s = np.eye(6)
        s[0, 0] = 1 - 1e-9
        assert analysis.mean_excitations(s)[0] == 0.0

    def test_rejects_large_negative(self):
        s = np.eye(6)
        s[0, 0] = 0.9
        with pytest.raises(NonPhysicalError):
            analysis.mean_excitations(s)


class TestReduction:
    def test_identity(self):
        assert np.array_equal(analysis.reduce_two_mode(np.eye(6), "ab"), np.eye(4))

    def test_block_consistency(self, open_chain_states):
        s = open_chain_states[7]
        for pair in ("ab", "ac", "bc"):
            red = analysis.reduce_two_mode(s, pair)
            assert np.array_equal(red[:2, :2], analysis.mode_block(s, pair[0]))
            assert np.array_equal(red[2:, 2:], analysis.mode_block(s, pair[1]))

    @pytest.mark.parametrize("bad", ["aa", "xy", "abc", (0, 3)])
    def test_bad_pair(self, bad):
        with pytest.raises(ValueError):
            analysis.reduce_two_mode(np.eye(6), bad)

    def test_fock_partial_trace(self):
        p = unit_params(gamma=50.0, **OPEN_CHAIN)
        cfg = fock_oracle.FockConfig(cutoff=8)
        space = fock_oracle.FockSpace(8)
        rho = fock_oracle.FockMilburn(fock_oracle.build_hamiltonian(p, cfg, space)).density(20.0, 50.0)
        sigma = milburn.covariance(milburn.build_propagator(p), 20.0, 50.0)
        # covariance of the reduced Fock state, rebuilt with the pair as modes (a, b) of a smaller space
        for pair, (k, l) in (("ab", (0, 1)), ("ac", (0, 2)), ("bc", (1, 2))):
            red = fock_oracle.partial_trace_pair(rho, 8, (k, l))
            ext = np.kron(red, np.eye(8)[:1].T @ np.eye(8)[:1])
            fs = fock_oracle.covariance_matrix(ext, space)[:4, :4]
            assert np.abs(fs - analysis.reduce_two_mode(sigma, pair)).max() < 1e-4


class TestSymplecticSpectrum:
    def test_identity(self):
        assert analysis.symplectic_spectrum(np.eye(6)) == pytest.approx([1, 1, 1])

    def test_pure_squeezed(self):
        S = sy.compose_A(*_modes(SystemParams(1, 1.2, 0.9, 0.3, 0.2, 0.1)))
        assert np.abs(analysis.symplectic_spectrum(S @ S.conj().T) - 1).max() < 1e-9

    def test_mixed_after_decoherence(self):
        prop = milburn.build_propagator(unit_params(gamma=10.0, **OPEN_CHAIN))
        for t in (1.0, 5.0, 30.0):
            nu = analysis.symplectic_spectrum(milburn.covariance(prop, t, 10.0))
            assert nu.min() >= 1 - 1e-9 and nu.max() > 1 + 1e-9

    def test_thermal(self):
        assert analysis.symplectic_spectrum(np.diag([3, 3, 2, 2, 1, 1.0])) == pytest.approx([3, 2, 1])

    def test_non_hermitian(self):
        s = np.eye(6, dtype=complex)
        s[0, 1] = 0.1j
        with pytest.raises(ValueError):
            analysis.symplectic_spectrum(s)

    def test_not_positive(self):
        with pytest.raises(NonPhysicalError):
            analysis.symplectic_spectrum(-np.eye(6))


def _modes(p):
    from usc_trio.model import diagonalize

    return diagonalize(p), p


class TestLogNegativity:
    def test_vacuum(self):
        E, nu = analysis.log_negativity_pair(np.eye(6), "ab")
        assert (E, nu) == (0.0, 1.0)
        assert analysis.log_negativity_one_vs_two(np.eye(6), "a") == 0.0

    @pytest.mark.parametrize("s", [0.1, 0.35, 1.0])
    def test_two_mode_squeezed(self, s):
        sigma = two_mode_squeezed(s)
        E, _ = analysis.log_negativity_pair(sigma, "ab")
        assert E == pytest.approx(2 * s, abs=1e-9)
        assert analysis.log_negativity_one_vs_two(sigma, "a") == pytest.approx(2 * s, abs=1e-9)
        assert analysis.log_negativity_pair(sigma, "ac")[0] == 0.0

    def test_two_mode_squeezed_fock(self):
        s, d = 0.1, 10
        rho = fock_oracle.two_mode_squeezed_density(s, d)
        E = fock_oracle.log_negativity_two_mode(fock_oracle.partial_trace_pair(rho, d, (0, 1)), d)
        assert E == pytest.approx(0.2, abs=1e-8)

    @pytest.mark.parametrize(
        "params",
        [unit_params(**OPEN_CHAIN), SystemParams(1, 1.2, 0.9, 0.1, 0.05, 0.08), unit_params(J12=0.1, J13=0.1, J23=0.1)],
    )
    def test_pure_states_against_fock(self, params):
        # unitary evolution keeps the state Gaussian, so the Fock negativity is the exact reference
        prop = milburn.build_propagator(params)
        cfg = fock_oracle.FockConfig(cutoff=8)
        space = fock_oracle.FockSpace(8)
        fm = fock_oracle.FockMilburn(fock_oracle.build_hamiltonian(params, cfg, space))
        for t in (3.0, 11.0):
            sigma = milburn.covariance_schrodinger(prop, t)
            rho = fm.density(t, None)
            rep = analysis.entanglement_report(sigma)
            fock_E = fock_oracle.observables(rho, cfg, space).E
            assert np.abs(rep.E - fock_E).max() < 1e-6
            for j in range(3):
                ref = fock_oracle.log_negativity_one_vs_two(rho, 8, j)
                assert rep.E_one_two[j] == pytest.approx(ref, abs=1e-6)

    def test_open_chain_mirror_symmetry(self, open_chain_states):
        # the chain a - b - c is symmetric under a <-> c
        for s in open_chain_states:
            rep = analysis.entanglement_report(s)
            assert rep.pair("ab") == pytest.approx(rep.pair("bc"), abs=1e-9)
            N = analysis.mean_excitations(s)
            assert N[0] == pytest.approx(N[2], abs=1e-12)

    def test_decoupled_mode_is_separable(self):
        prop = milburn.build_propagator(unit_params(gamma=50.0, **DECOUPLED_C))
        for s in milburn.covariance_trajectory(prop, np.linspace(0, 50, 21), 50.0):
            rep = analysis.entanglement_report(s)
            assert rep.pair("ac") == 0.0 and rep.pair("bc") == 0.0
            assert rep.E_one_two[2] == 0.0

    def test_nearly_pure_product_state(self):
        # degenerate transposed eigenvalues: the square-root formula alone lands ~1e-12 below one
        prop = milburn.build_propagator(unit_params(gamma=50.0, **DECOUPLED_C))
        s = milburn.covariance(prop, 0.1, 50.0)
        E, nu = analysis.log_negativity_pair(s, "bc")
        assert (E, nu) == (0.0, 1.0)

    def test_degenerate_branch_matches_formula(self, rng):
        # both routes agree wherever the seralian roots are well separated
        for p in random_params(rng, 10):
            s = milburn.covariance(milburn.build_propagator(p), 5.0, p.gamma)
            for pair in ("ab", "ac", "bc"):
                k, l = analysis._pair_indices(pair)
                spec = analysis.symplectic_spectrum(analysis.partial_transpose(analysis.reduce_two_mode(s, pair), 0)).min()
                _, nu = analysis.log_negativity_pair(s, pair)
                assert nu == pytest.approx(min(spec, 1.0) if nu == 1.0 else spec, abs=1e-9)

    def test_symmetric_in_labels(self, open_chain_states):
        s = open_chain_states[5]
        for pair in ("ab", "ac", "bc"):
            assert analysis.log_negativity_pair(s, pair) == pytest.approx(analysis.log_negativity_pair(s, pair[::-1]), abs=1e-14)

    def test_partial_transpose_swaps(self):
        s = np.arange(36.0).reshape(6, 6)
        pt = analysis.partial_transpose(s, "b")
        assert pt[2, 2] == s[3, 3] and pt[2, 0] == s[3, 0]


class TestReports:
    def test_zero(self):
        rep = analysis.excitation_measures((0, 0, 0))
        for v in (rep.Nbi, rep.Ntri, rep.delta):
            assert v.tolist() == [0, 0, 0]

    def test_ones(self):
        rep = analysis.excitation_measures((1, 1, 1))
        for v in (rep.Nbi, rep.Ntri, rep.delta):
            assert v.tolist() == [1, 1, 1]

    def test_four_one_zero(self):
        rep = analysis.excitation_measures((4, 1, 0))
        assert rep.Nbi.tolist() == [2, 0, 0]
        assert rep.Ntri[0] == 0
        assert rep.delta[0] == 2
        assert analysis.polygamy_check(rep)[0]

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            analysis.excitation_measures((1, -1, 0))

    def test_polygamy_random(self, rng):
        for N in rng.uniform(0, 10, (100_000, 3)):
            ok, _ = analysis.polygamy_check(analysis.excitation_measures(N))
            assert ok

    @given(N=st.tuples(*[st.floats(0, 1e6)] * 3))
    def test_polygamy_property(self, N):
        ok, delta = analysis.polygamy_check(analysis.excitation_measures(N))
        assert ok, delta

    def test_label_symmetry(self, rng):
        p = random_params(rng, 1, coupling=0.3)[0]
        s = milburn.covariance(milburn.build_propagator(p), 7.0, p.gamma).entries
        base = analysis.entanglement_report(s)
        N = analysis.mean_excitations(s)
        for perm in itertools.permutations(range(3)):
            sp = analysis.permute_modes(s, perm)
            assert analysis.mean_excitations(sp) == pytest.approx(N[list(perm)], abs=1e-15)
            rep = analysis.entanglement_report(sp)
            for i, j in itertools.combinations(range(3), 2):
                label = analysis.MODES[perm[i]] + analysis.MODES[perm[j]]
                assert rep.E[analysis.PAIRS.index(analysis.MODES[i] + analysis.MODES[j])] == pytest.approx(
                    base.pair(label), abs=1e-10
                )

    def test_zero_excitation_separability(self, rng):
        for p in random_params(rng, 20, coupling=0.3) + [unit_params(**DECOUPLED_C)]:
            prop = milburn.build_propagator(p)
            for s in milburn.covariance_trajectory(prop, np.linspace(0, 20, 5), p.gamma):
                N = analysis.mean_excitations(s)
                rep = analysis.entanglement_report(s)
                assert np.all(rep.E >= 0) and np.all(rep.nu_tilde > 0)
                for idx, (k, l) in enumerate(((0, 1), (0, 2), (1, 2))):
                    if N[k] <= 1e-10 and N[l] <= 1e-10:
                        assert rep.E[idx] <= 1e-8
