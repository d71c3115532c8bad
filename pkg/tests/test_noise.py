import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sensebench.noise import (
    PAULI_LABELS,
    LindbladSpec,
    NoiseModelError,
    NoiseSpec,
    PauliChannel,
    SimulationSizeError,
    analytic_response,
    apply_pauli_channel,
    build_ghz_channel,
    bundled_noise_model_path,
    cnot_ladder,
    dump_lindblad_toml,
    lindblad_to_pauli_channel,
    load_lindblad_toml,
    make_source,
    parse_lindblad_toml,
    simulate_response,
    simulated_polynomial,
    symplectic_product,
    synthetic_lindblad,
)

PAULI_MATS = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]),
}


def pauli2(label):
    return np.kron(PAULI_MATS[label[0]], PAULI_MATS[label[1]])


def ghz_projector(n):
    d = 2**n
    psi = np.zeros(d)
    psi[0] = psi[-1] = 1 / math.sqrt(2)
    return np.outer(psi, psi)


def random_state(n, rng):
    d = 2**n
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


class TestGhzPreparation:
    def test_noiseless_ghz3(self):
        rho = build_ghz_channel(3, NoiseSpec.noiseless())().matrix
        np.testing.assert_allclose(rho, ghz_projector(3), atol=1e-12)

    def test_global_depol_ghz2(self):
        lam = 0.3
        p = 1 - math.exp(-lam)
        rho = build_ghz_channel(2, NoiseSpec.global_depolarizing(lam))().matrix
        np.testing.assert_allclose(rho, (1 - p) * ghz_projector(2) + p * np.eye(4) / 4, atol=1e-12)

    def test_local_depol_amplitude(self):
        assert simulate_response(3, NoiseSpec.local_depolarizing(0.01), 0.0) == pytest.approx(0.99**2, abs=1e-12)

    def test_ladder_order(self):
        assert cnot_ladder(5) == [(2, 3), (2, 1), (3, 4), (1, 0)]
        assert cnot_ladder(1) == []
        assert len(cnot_ladder(12)) == 11

    def test_size_limit(self):
        with pytest.raises(SimulationSizeError):
            build_ghz_channel(13, NoiseSpec.noiseless())

    def test_boost_must_not_shrink(self):
        with pytest.raises(ValueError):
            build_ghz_channel(3, NoiseSpec.noiseless(), boost=0.5)

    @pytest.mark.parametrize(
        "noise",
        [
            NoiseSpec.global_depolarizing(0.2),
            NoiseSpec.local_depolarizing(0.05),
            NoiseSpec.pauli_lindblad(synthetic_lindblad(3, seed=5).scaled(20)),
        ],
    )
    def test_output_is_density_matrix(self, noise):
        assert build_ghz_channel(4, noise)().is_valid()

    def test_cptp_on_random_inputs(self):
        rng = np.random.default_rng(4)
        noise = NoiseSpec.pauli_lindblad(synthetic_lindblad(2, seed=9).scaled(30))
        prep = build_ghz_channel(3, noise)
        for _ in range(3):
            rho = random_state(3, rng)
            out = prep(rho).matrix
            assert abs(np.trace(out) - 1) < 1e-10
            assert np.max(np.abs(out - out.conj().T)) < 1e-10


class TestResponses:
    def test_noiseless_fringe(self):
        th = np.linspace(0, 2 * math.pi, 17)
        vals = [simulate_response(4, NoiseSpec.noiseless(), t) for t in th]
        np.testing.assert_allclose(vals, np.cos(4 * th), atol=1e-12)

    def test_global_at_zero(self):
        assert simulate_response(5, NoiseSpec.global_depolarizing(0.1), 0.0) == pytest.approx(0.904837418, abs=1e-9)

    def test_local_fringe(self):
        th = np.linspace(-1, 1, 11)
        vals = [simulate_response(3, NoiseSpec.local_depolarizing(0.01), t) for t in th]
        np.testing.assert_allclose(vals, 0.99**2 * np.cos(3 * th), atol=1e-12)

    def test_analytic_examples(self):
        assert analytic_response(NoiseSpec.global_depolarizing(0.0), 3, 0.4) == pytest.approx(math.cos(1.2))
        assert analytic_response(NoiseSpec.local_depolarizing(9e-3), 9, 0.0) == pytest.approx(0.991**8, abs=1e-12)
        assert 0.991**8 == pytest.approx(0.93023, abs=1e-5)
        nz = NoiseSpec.global_depolarizing(0.1)
        assert analytic_response(nz, 5, 0.3, boost=2) == pytest.approx(math.exp(-0.2) * math.cos(1.5))

    def test_analytic_rejects_lindblad(self):
        nz = NoiseSpec.pauli_lindblad(synthetic_lindblad(2, seed=1))
        with pytest.raises(NoiseModelError):
            analytic_response(nz, 3, 0.0)

    def test_interrogation_factor(self):
        nz = NoiseSpec.global_depolarizing(0.05, k_rate=0.1, interaction_time=2.0)
        th = 0.37
        expected = math.exp(-0.05) * math.exp(-4 * 0.2) * math.cos(4 * th)
        assert simulate_response(4, nz, th) == pytest.approx(expected, abs=1e-12)
        assert analytic_response(nz, 4, th) == pytest.approx(expected, abs=1e-14)

    @pytest.mark.parametrize("variant", ["global", "local", "lindblad"])
    def test_boost_consistency(self, variant):
        th = 0.41
        if variant == "global":
            a, b = NoiseSpec.global_depolarizing(0.06), NoiseSpec.global_depolarizing(0.15)
        elif variant == "local":
            p = 0.02
            a = NoiseSpec.local_depolarizing(p)
            b = NoiseSpec.local_depolarizing(1 - (1 - p) ** 2.5)
        else:
            spec = synthetic_lindblad(4, seed=3)
            a, b = NoiseSpec.pauli_lindblad(spec), NoiseSpec.pauli_lindblad(spec.scaled(2.5))
        assert simulate_response(4, a, th, boost=2.5) == pytest.approx(simulate_response(4, b, th), abs=1e-12)

    def test_variance_across_nodes(self):
        lam = 0.01
        th = np.linspace(0, 2 * math.pi, 200)
        base = 1 - analytic_response(NoiseSpec.global_depolarizing(lam), 5, th) ** 2
        for x in (1.0, 1.5, 2.0, 3.0):
            boosted = 1 - analytic_response(NoiseSpec.global_depolarizing(lam), 5, th, boost=x) ** 2
            assert np.max(np.abs(boosted - base)) <= 4 * lam * (x - 1) + 1e-15

    def test_simulated_polynomial_matches_pointwise(self):
        nz = NoiseSpec.pauli_lindblad(synthetic_lindblad(4, seed=2).scaled(5), k_rate=0.02)
        poly = simulated_polynomial(5, nz)
        for th in np.linspace(0, 6, 9):
            assert poly(th) == pytest.approx(simulate_response(5, nz, th), abs=1e-12)

    def test_make_source_variants(self):
        assert make_source(3, NoiseSpec.global_depolarizing(0.1)).variant == "analytic-global-depol"
        assert make_source(3, NoiseSpec.local_depolarizing(0.1)).variant == "analytic-local-depol"
        assert make_source(3, NoiseSpec.local_depolarizing(0.1), simulated=True).variant == "simulated"
        lb = NoiseSpec.pauli_lindblad(synthetic_lindblad(2, seed=0))
        assert make_source(3, lb).variant == "simulated"

    def test_source_boost_one_is_base(self):
        src = make_source(4, NoiseSpec.local_depolarizing(0.03))
        assert src.boosted(1.0) is src
        assert src(0.2) == pytest.approx(analytic_response(NoiseSpec.local_depolarizing(0.03), 4, 0.2))


class TestSymplectic:
    def test_examples(self):
        assert symplectic_product("XX", "ZZ") == 0
        assert symplectic_product("XI", "ZI") == 1

    def test_all_pairs_against_commutators(self):
        for a, b in itertools.product(PAULI_LABELS, repeat=2):
            pa, pb = pauli2(a), pauli2(b)
            commute = np.allclose(pa @ pb, pb @ pa)
            assert symplectic_product(a, b) == (0 if commute else 1), (a, b)

    def test_unknown_label(self):
        with pytest.raises(NoiseModelError):
            symplectic_product("XA", "II")


def channel_from_kraus(probs):
    """Brute-force 16x16 superoperator of a Pauli channel."""
    sup = np.zeros((16, 16), dtype=complex)
    for c, lab in zip(probs, PAULI_LABELS):
        p = pauli2(lab)
        sup += c * np.kron(p, p.conj())
    return sup


class TestLindblad:
    def test_zero_rates_identity(self):
        ch = lindblad_to_pauli_channel(LindbladSpec({0: np.zeros(16)}), 0)
        assert ch.probs[0] == 1.0 and np.all(ch.probs[1:] == 0)

    def test_single_generator(self):
        g = np.zeros(16)
        g[PAULI_LABELS.index("ZZ")] = 0.3
        ch = lindblad_to_pauli_channel(LindbladSpec({0: g}, base_lambda=2.0), 0)
        w = (1 + math.exp(-2 * 2.0 * 0.3)) / 2
        assert ch.probs[0] == pytest.approx(w, abs=1e-14)
        assert ch.probs[PAULI_LABELS.index("ZZ")] == pytest.approx(1 - w, abs=1e-14)
        assert ch.probs.sum() == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(0.1, 20))
    def test_random_rates_round_trip(self, seed, lam):
        rng = np.random.default_rng(seed)
        g = rng.uniform(0, 0.05, 16)
        spec = LindbladSpec({3: g}, base_lambda=lam)
        ch = lindblad_to_pauli_channel(spec, 3)
        assert np.all(ch.probs >= 0) and ch.probs.sum() == pytest.approx(1.0, abs=1e-9)
        w = 0.5 * (1 + np.exp(-2 * lam * g))
        f = [
            np.prod([w[k] + (1 - w[k]) * (-1) ** symplectic_product(a, PAULI_LABELS[k]) for k in range(16)])
            for a in PAULI_LABELS
        ]
        np.testing.assert_allclose(ch.fidelities(), f, atol=1e-10)

    def test_matches_exponentiated_generator(self):
        # oracle: the channel is the product of commuting single-generator channels
        rng = np.random.default_rng(11)
        g = rng.uniform(0, 0.1, 16)
        g[0] = 0.0
        spec = LindbladSpec({0: g}, base_lambda=1.5)
        sup = np.eye(16, dtype=complex)
        for k, lab in enumerate(PAULI_LABELS):
            w = (1 + math.exp(-2 * 1.5 * g[k])) / 2
            p = pauli2(lab)
            sup = (w * np.eye(16) + (1 - w) * np.kron(p, p.conj())) @ sup
        np.testing.assert_allclose(channel_from_kraus(lindblad_to_pauli_channel(spec, 0).probs), sup, atol=1e-12)

    def test_boost_scales_rate(self):
        spec = synthetic_lindblad(2, seed=8)
        a = lindblad_to_pauli_channel(spec, 1, boost=3.0)
        b = lindblad_to_pauli_channel(spec.scaled(3.0), 1)
        np.testing.assert_allclose(a.probs, b.probs, atol=1e-15)

    def test_negative_rate(self):
        g = np.zeros(16)
        g[5] = -1e-3
        with pytest.raises(NoiseModelError):
            LindbladSpec({0: g})

    def test_missing_site(self):
        with pytest.raises(NoiseModelError):
            lindblad_to_pauli_channel(LindbladSpec({0: np.zeros(16)}), 4)

    def test_channel_label_orientation(self):
        # "XI" acts on the lower qubit of the pair
        probs = np.zeros(16)
        probs[PAULI_LABELS.index("XI")] = 1.0
        rho = np.zeros((2,) * 6, dtype=complex)
        rho[(0,) * 6] = 1.0
        out = apply_pauli_channel(rho, PauliChannel(1, probs), 3).reshape(8, 8)
        assert out[0b010, 0b010] == pytest.approx(1.0)

    def test_depolarizing_probs(self):
        ch = PauliChannel.depolarizing(0, 0.16)
        assert ch.probs[0] == pytest.approx(1 - 0.15)
        assert ch.probs[7] == pytest.approx(0.01)


class TestNoiseFile:
    def test_parse(self):
        spec = parse_lindblad_toml(
            """
            base_lambda = 0.5
            [[site]]
            index = 2
            gamma = { XZ = 0.01, II = 0.0 }
            """
        )
        assert spec.base_lambda == 0.5
        assert spec.rates[2][PAULI_LABELS.index("XZ")] == 0.01

    @pytest.mark.parametrize(
        "text",
        [
            "[[site]]\nindex = 0\ngamma = { XQ = 0.1 }",
            "[[site]]\nindex = 0\ngamma = { XXX = 0.1 }",
            "[[site]]\nindex = 0\ngamma = { XZ = -0.1 }",
            "[[site]]\ngamma = { XZ = 0.1 }",
            "[[site]]\nindex = 0\n[[site]]\nindex = 0",
            "bogus = 1",
            "base_lambda = [",
        ],
    )
    def test_rejects_bad_files(self, text):
        with pytest.raises(NoiseModelError):
            parse_lindblad_toml(text)

    def test_dump_round_trip(self):
        spec = synthetic_lindblad(3, seed=123)
        back = parse_lindblad_toml(dump_lindblad_toml(spec, "test model"))
        assert back.seed == 123
        for site in spec.rates:
            np.testing.assert_array_equal(back.rates[site], spec.rates[site])

    def test_bundled_file(self):
        spec = load_lindblad_toml(bundled_noise_model_path())
        assert spec.seed is not None
        assert set(spec.rates) == set(range(11))
        for g in spec.rates.values():
            assert g[0] == 0.0
            assert np.all((g[1:] >= 1e-4) & (g[1:] <= 1e-2))
        assert load_lindblad_toml(bundled_noise_model_path(), 5.0).base_lambda == 5.0 * spec.base_lambda

    def test_bundled_file_matches_generator(self):
        spec = load_lindblad_toml(bundled_noise_model_path())
        regen = synthetic_lindblad(len(spec.rates), spec.seed)
        for site in spec.rates:
            np.testing.assert_array_equal(spec.rates[site], regen.rates[site])
