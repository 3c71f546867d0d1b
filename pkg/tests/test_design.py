from __future__ import annotations

import numpy as np
import pytest

from tomolab.design import (
    DesignHeuristic,
    adaptive_design,
    pauli_eigenstates,
    qutrit_stabilizer_states,
    random_pauli_design,
    random_process_design,
    random_process_pair,
    random_stabilizer_qutrit_design,
    scheduled_mix,
)
from tomolab.qobj import VectorizedOperator, pauli_basis, standard_basis
from tomolab.randq import RngStream
from tomolab.smc import PosteriorSummary

BASIS2 = pauli_basis(1)
BASIS4 = standard_basis(4)


def summary_with(cov, basis=BASIS2):
    coords = np.zeros(basis.size)
    coords[0] = 1.0 / np.sqrt(basis.dim)
    return PosteriorSummary(mean=VectorizedOperator(coords=coords, basis=basis),
                            covariance=np.asarray(cov, dtype=float),
                            ess=1.0, total_log_norm=0.0)


class TestHeuristicConfig:
    def test_validation(self):
        DesignHeuristic(kind="random_pauli", n_meas=10)
        with pytest.raises(ValueError):
            DesignHeuristic(kind="random_pauli", n_meas=0)
        with pytest.raises(ValueError):
            DesignHeuristic(kind="process_adaptive_mix", n_meas=1, n_proposals=0)
        with pytest.raises(ValueError):
            DesignHeuristic(kind="process_adaptive_mix", n_meas=1, adaptive_fraction=1.2)


class TestRandomPauli:
    def test_effect_is_half_rank_projector(self):
        for n_qubits in (1, 2):
            stream = RngStream(3)
            for i in range(50):
                design = random_pauli_design(n_qubits, 5, stream.child(n_qubits, i))
                e = design.effect.matrix()
                eig = np.sort(np.linalg.eigvalsh(e))
                dim = 2**n_qubits
                assert np.allclose(eig[: dim // 2], 0.0, atol=1e-12)
                assert np.allclose(eig[dim // 2:], 1.0, atol=1e-12)

    def test_identity_string_excluded(self):
        stream = RngStream(5)
        for i in range(500):
            e = random_pauli_design(1, 1, stream.child(i)).effect.matrix()
            assert abs(np.trace(e).real - 1.0) < 1e-12

    def test_axis_frequencies(self):
        stream = RngStream(7)
        counts = np.zeros(3)
        n = 10_000
        for i in range(n):
            coords = random_pauli_design(1, 1, stream.child(i)).effect.coords
            counts[np.argmax(np.abs(coords[1:]))] += 1
        assert np.abs(counts / n - 1.0 / 3.0).max() < 0.02

    def test_deterministic(self):
        a = random_pauli_design(1, 3, RngStream(11))
        b = random_pauli_design(1, 3, RngStream(11))
        assert np.array_equal(a.effect.coords, b.effect.coords)

    def test_metadata(self):
        d = random_pauli_design(1, 7, RngStream(13), time=4.5)
        assert d.n_meas == 7
        assert d.time == 4.5


class TestQutritStabilizers:
    def test_twelve_states(self):
        kets = qutrit_stabilizer_states()
        assert kets.shape == (12, 3)
        norms = np.linalg.norm(kets, axis=1)
        assert np.abs(norms - 1.0).max() < 1e-10

    def test_four_orthonormal_triples(self):
        kets = qutrit_stabilizer_states()
        for b in range(4):
            triple = kets[3 * b: 3 * b + 3]
            gram = triple.conj() @ triple.T
            assert np.abs(gram - np.eye(3)).max() < 1e-10

    def test_mutually_unbiased(self):
        kets = qutrit_stabilizer_states()
        for i in range(12):
            for j in range(12):
                if i // 3 == j // 3:
                    continue
                overlap = abs(np.vdot(kets[i], kets[j])) ** 2
                assert abs(overlap - 1.0 / 3.0) < 1e-10

    def test_design_is_rank_one(self):
        stream = RngStream(17)
        seen = set()
        for i in range(600):
            design = random_stabilizer_qutrit_design(20, stream.child(i))
            e = design.effect.matrix()
            eig = np.sort(np.linalg.eigvalsh(e))
            assert abs(eig[-1] - 1.0) < 1e-10
            assert abs(np.trace(e).real - 1.0) < 1e-10
            seen.add(int(np.argmax([abs(np.vdot(k, e @ k)) for k in qutrit_stabilizer_states()])))
        assert len(seen) == 12


class TestProcessProposals:
    def test_eigenstate_pairs_sum_to_identity(self):
        states = pauli_eigenstates()
        assert len(states) == 6
        for k in range(0, 6, 2):
            assert np.abs(states[k] + states[k + 1] - np.eye(2)).max() < 1e-12

    def test_random_pair(self):
        prep, meas = random_process_pair(RngStream(19))
        assert abs(np.trace(prep.matrix @ prep.matrix).real - 1.0) < 1e-10
        assert np.linalg.eigvalsh(meas.matrix).max() <= 1.0 + 1e-12

    def test_random_design_geometry(self):
        design = random_process_design(25, RngStream(23), BASIS4)
        assert design.effect.coords.shape == (16,)
        assert design.n_meas == 25
        composite = design.effect.matrix()
        assert np.linalg.eigvalsh(composite).min() > -1e-10
        assert np.linalg.eigvalsh(composite).max() <= 2.0 + 1e-10


class TestAdaptive:
    def test_zero_covariance_tie_breaks_to_first(self):
        stream = RngStream(29)
        proposals = [random_process_design(1, stream.child(i), BASIS4) for i in range(5)]
        pick = adaptive_design(proposals, summary_with(np.zeros((16, 16)), BASIS4))
        assert pick is proposals[0]

    def test_rank_one_covariance_picks_aligned_effect(self):
        e = np.array([0.0, 0.0, 0.0, 1.0])
        cov = 0.04 * np.outer(e, e)
        stream = RngStream(31)
        proposals = [random_pauli_design(1, 1, stream.child(i)) for i in range(40)]
        pick = adaptive_design(proposals, summary_with(cov))
        overlaps = [abs(float(p.effect.coords @ e)) for p in proposals]
        assert abs(float(pick.effect.coords @ e)) == max(overlaps)

    def test_argmax_dominates_mean(self):
        rng = np.random.default_rng(37)
        stream = RngStream(41)
        for trial in range(100):
            m = rng.standard_normal((16, 16))
            cov = m @ m.T
            summary = summary_with(cov, BASIS4)
            proposals = [random_process_design(1, stream.child(trial, i), BASIS4)
                         for i in range(10)]
            scores = [float(p.effect.coords @ cov @ p.effect.coords) for p in proposals]
            pick = adaptive_design(proposals, summary)
            pick_score = float(pick.effect.coords @ cov @ pick.effect.coords)
            assert pick_score >= np.mean(scores) - 1e-12
            assert pick_score == max(scores)

    def test_scale_invariance(self):
        rng = np.random.default_rng(43)
        m = rng.standard_normal((4, 4))
        cov = m @ m.T
        stream = RngStream(47)
        proposals = [random_pauli_design(1, 1, stream.child(i)) for i in range(20)]
        a = adaptive_design(proposals, summary_with(cov))
        b = adaptive_design(proposals, summary_with(5.0 * cov))
        assert a is b

    def test_empty_proposals(self):
        with pytest.raises(ValueError):
            adaptive_design([], summary_with(np.zeros((4, 4))))


class TestScheduledMix:
    def test_degenerate_fractions(self):
        first = lambda: random_pauli_design(1, 1, RngStream(1))
        second = lambda: random_pauli_design(1, 2, RngStream(2))
        stream = RngStream(53)
        for i in range(50):
            design = scheduled_mix([first, second], [1.0, 0.0], stream.child(i))
            assert design.n_meas == 1

    def test_split_frequencies(self):
        calls = [0, 0]

        def make(idx):
            def go():
                calls[idx] += 1
                return random_pauli_design(1, 1, RngStream(idx))
            return go

        stream = RngStream(59)
        n = 10_000
        for i in range(n):
            scheduled_mix([make(0), make(1)], [0.2, 0.8], stream.child(i))
        assert abs(calls[0] / n - 0.2) < 0.02
        assert abs(calls[1] / n - 0.8) < 0.02

    def test_deterministic(self):
        picks = []
        for _ in range(2):
            stream = RngStream(61)
            chosen = []
            for i in range(30):
                design = scheduled_mix(
                    [lambda: random_pauli_design(1, 1, RngStream(3)),
                     lambda: random_pauli_design(1, 2, RngStream(4))],
                    [0.5, 0.5], stream.child(i))
                chosen.append(design.n_meas)
            picks.append(chosen)
        assert picks[0] == picks[1]

    def test_validation(self):
        with pytest.raises(ValueError):
            scheduled_mix([], [], RngStream(1))
        with pytest.raises(ValueError):
            scheduled_mix([lambda: None], [0.7], RngStream(1))
