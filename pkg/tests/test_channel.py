import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import crandn
from lmlce.channel import (
    ChannelRealization,
    ImpairmentConfig,
    PowerDelayProfile,
    ScenarioImpairmentStats,
    apply_sto_cfo,
    cfr,
    clip,
    effective_cfr,
    flat_profile,
    freq_correlation,
    load_profile,
    papr,
    parse_profile,
    propagate,
    sample_realization,
)
from lmlce.numerics import make_rng
from lmlce.ofdm import OfdmConfig, build_frame, demodulate, modulate

CFG = OfdmConfig()
PB_DELAYS_NS = [0, 200, 800, 1200, 2300, 3700]
PB_POWERS_DB = [0, -0.9, -4.9, -8.0, -7.8, -23.9]


def pb_linear_powers():
    p = 10 ** (np.array(PB_POWERS_DB) / 10)
    return p / p.sum()


class TestProfiles:
    def test_pedestrian_b_file_matches_standard_table(self):
        pb = load_profile("pedestrian_b")
        np.testing.assert_allclose(pb.delays, np.array(PB_DELAYS_NS) * 1e-9)
        np.testing.assert_allclose(pb.powers, pb_linear_powers())

    def test_alias_and_office_a(self):
        assert load_profile("pb").name == "pedestrian_b"
        oa = load_profile("office_a")
        assert oa.quantized(10e6)[0].tolist() == [0, 1, 2, 3]

    def test_quantization_rounds_and_sums(self):
        delays, powers = load_profile("pb").quantized(10e6)
        assert delays.tolist() == [0, 2, 8, 12, 23, 37]
        prof = PowerDelayProfile.from_db([0, 40, 60], [0, 0, 0])
        d, p = prof.quantized(10e6)
        # 40 ns -> 0, 60 ns -> 1
        assert d.tolist() == [0, 1]
        np.testing.assert_allclose(p, [2 / 3, 1 / 3])

    def test_parse_file(self, tmp_path):
        f = tmp_path / "p.txt"
        f.write_text("# two taps\n0 0\n100 -3  # second\n")
        prof = load_profile(str(f))
        assert prof.name == "p"
        assert prof.delays.size == 2

    def test_bad_profiles(self):
        with pytest.raises(ValueError):
            parse_profile("0 0 0\n")
        with pytest.raises(ValueError):
            PowerDelayProfile(np.array([1e-7, 0.0]), np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            load_profile("no_such_profile")


class TestRealization:
    def test_flat(self, rng):
        real = sample_realization(flat_profile(), CFG, rng)
        assert real.cir.size == 1
        np.testing.assert_allclose(cfr(real, CFG), np.full(CFG.k_used, real.cir[0]))

    def test_pb_taps_on_quantized_grid(self, rng):
        real = sample_realization(load_profile("pb"), CFG, rng)
        assert np.flatnonzero(real.cir).tolist() == [0, 2, 8, 12, 23, 37]

    def test_tap_powers(self):
        prof = load_profile("pb")
        r = make_rng(1)
        cirs = np.array([sample_realization(prof, CFG, r).cir for _ in range(100_000)])
        measured = np.mean(np.abs(cirs[:, [0, 2, 8, 12, 23, 37]]) ** 2, axis=0)
        np.testing.assert_allclose(measured, pb_linear_powers(), rtol=0.02)
        h = np.fft.fft(cirs, CFG.n_dft, axis=1)[:, CFG.used_bins()]
        np.testing.assert_allclose(np.mean(np.abs(h) ** 2, axis=0), 1.0, rtol=0.02)

    def test_profile_longer_than_cp(self, rng):
        long = PowerDelayProfile.from_db([0, 20_000], [0, 0])
        with pytest.raises(ValueError):
            sample_realization(long, CFG, rng)

    def test_two_tap_magnitude(self):
        d = 8
        cir = np.zeros(d + 1, complex)
        cir[0] = cir[d] = 1
        h = cfr(ChannelRealization(cir), CFG)
        f = CFG.freqs()
        np.testing.assert_allclose(np.abs(h), 2 * np.abs(np.cos(np.pi * f * d / CFG.n_dft)), atol=1e-12)
        # period N/d in subcarriers
        period = CFG.n_dft // d
        np.testing.assert_allclose(np.abs(h[period:]), np.abs(h[:-period]), atol=1e-12)


class TestCorrelation:
    def test_unit_power_and_flat(self):
        assert freq_correlation(load_profile("pb"), 0, CFG) == pytest.approx(1.0)
        np.testing.assert_allclose(freq_correlation(flat_profile(), np.arange(-5, 6), CFG), 1.0)

    def test_hermitian_symmetry(self):
        pb = load_profile("pb")
        dk = np.arange(1, 40)
        np.testing.assert_allclose(freq_correlation(pb, dk, CFG), np.conj(freq_correlation(pb, -dk, CFG)))

    def test_monte_carlo(self):
        pb = load_profile("pb")
        delays, powers = pb.quantized(CFG.sample_rate)
        r = make_rng(2)
        n = 1_000_000
        taps = crandn(r, n, delays.size) * np.sqrt(powers)
        k0, dk = 100, 3
        h0 = taps @ np.exp(-2j * np.pi * k0 * delays / CFG.n_dft)
        h1 = taps @ np.exp(-2j * np.pi * (k0 + dk) * delays / CFG.n_dft)
        mc = np.mean(h1 * h0.conj())
        exact = freq_correlation(pb, dk, CFG)
        assert abs(mc - exact) < 0.01 * abs(exact)


class TestPropagate:
    def test_identity_channel(self, rng):
        x = crandn(rng, 640)
        np.testing.assert_array_equal(propagate(x, ChannelRealization(np.array([1 + 0j])), 0.0, rng), x)

    def test_frequency_domain_model(self, rng):
        cfg = OfdmConfig(n_data=2)
        real = sample_realization(load_profile("pb"), cfg, rng)
        frame = build_frame(cfg, rng)
        rx = demodulate(propagate(modulate(frame, cfg), real, 0.0, rng), cfg)
        np.testing.assert_allclose(rx, frame.symbols * cfr(real, cfg), atol=1e-9)

    def test_noise_power(self, rng):
        out = propagate(np.zeros(1_000_000), ChannelRealization(np.array([1 + 0j])), 0.3, rng)
        assert np.mean(np.abs(out) ** 2) == pytest.approx(0.3, rel=0.02)


class TestStoCfo:
    def test_identity_bitwise(self, rng):
        x = crandn(rng, 1280)
        out = apply_sto_cfo(x, ImpairmentConfig(), CFG)
        np.testing.assert_array_equal(out, x)
        assert out is not x

    def test_sto_phase_ramp(self, rng):
        # early window by 4 samples: the bins see an extra 4-sample delay
        cfg = OfdmConfig(n_data=1)
        frame = build_frame(cfg, rng)
        tx = modulate(frame, cfg)
        rx = demodulate(apply_sto_cfo(tx, ImpairmentConfig(theta=-4), cfg), cfg)
        ramp = np.exp(-2j * np.pi * 4 * cfg.freqs() / cfg.n_dft)
        np.testing.assert_allclose(rx, frame.symbols * ramp, atol=1e-9)

    def test_sto_matches_effective_cfr(self, rng):
        cfg = OfdmConfig(n_data=3)
        real = sample_realization(load_profile("pb"), cfg, rng)
        frame = build_frame(cfg, rng)
        imp = ImpairmentConfig(theta=-40)
        rx = demodulate(apply_sto_cfo(propagate(modulate(frame, cfg), real, 0.0, rng), imp, cfg), cfg)
        np.testing.assert_allclose(rx, frame.symbols * effective_cfr(cfr(real, cfg), imp, cfg, cfg.n_symbols),
                                   atol=1e-9)

    def test_cfo_direct_computation(self, rng):
        cfg = OfdmConfig(n_data=1)
        eps = 0.05
        frame = build_frame(cfg, rng)
        tx = modulate(frame, cfg)
        rx = demodulate(apply_sto_cfo(tx, ImpairmentConfig(epsilon=eps), cfg), cfg)
        # brute force: phase-ramp each sample, drop CP, naive DFT
        n = np.arange(tx.size)
        ramped = tx * np.exp(-2j * np.pi * n * eps / cfg.n_dft)
        blocks = ramped.reshape(-1, cfg.symbol_len)[:, cfg.cp_len :]
        k = np.arange(cfg.n_dft)
        f_mat = np.exp(-2j * np.pi * np.outer(k, k) / cfg.n_dft) / np.sqrt(cfg.n_dft)
        direct = (blocks @ f_mat.T)[:, cfg.used_bins()]
        np.testing.assert_allclose(rx, direct, atol=1e-9)
        h = effective_cfr(np.ones(cfg.k_used), ImpairmentConfig(epsilon=eps), cfg, cfg.n_symbols)
        ici = np.abs(rx - h * frame.symbols) ** 2
        np.testing.assert_allclose(ici, np.abs(direct - h * frame.symbols) ** 2, atol=1e-9)
        assert 0 < ici.mean() < (np.pi * eps) ** 2 / 3 * 1.5

    def test_precondition(self):
        with pytest.raises(ValueError):
            ImpairmentConfig(theta=1)
        with pytest.raises(ValueError):
            ImpairmentConfig(epsilon=0.5)
        with pytest.raises(ValueError):
            apply_sto_cfo(np.zeros(640), ImpairmentConfig(theta=-129), CFG)

    def test_draw_ranges(self):
        stats = ScenarioImpairmentStats(-20, 0.01)
        r = make_rng(3)
        draws = [stats.draw(r) for _ in range(2000)]
        thetas = {d.theta for d in draws}
        assert thetas == set(range(-20, 1))
        assert all(abs(d.epsilon) <= 0.01 for d in draws)
        assert ScenarioImpairmentStats().draw(r) == ImpairmentConfig()


class TestClip:
    def test_below_threshold_identity(self, rng):
        x = crandn(rng, 100) * 0.01
        x[0] = 1.0
        np.testing.assert_array_equal(clip(x, 100.0), x)

    def test_magnitude_cap(self):
        x = np.array([3 + 0j, 1 + 0j])
        out = clip(x, 2 / np.sqrt(5))  # RMS = sqrt(5), so A = 2
        np.testing.assert_allclose(out, [2 + 0j, 1 + 0j])

    def test_papr_not_increased(self, rng):
        cfg = OfdmConfig(n_data=1)
        for _ in range(20):
            tx = modulate(build_frame(cfg, rng), cfg)
            assert papr(clip(tx, 1.0)) <= papr(tx)

    def test_bad_ratio(self):
        with pytest.raises(ValueError):
            clip(np.ones(4), 0.0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.2, 3.0))
    def test_magnitudes_capped_phases_kept(self, seed, ratio):
        x = crandn(make_rng(seed), 256)
        out = clip(x, ratio)
        assert np.all(np.abs(out) <= np.abs(x) + 1e-15)
        changed = np.abs(out) < np.abs(x)
        np.testing.assert_allclose(np.angle(out[changed]), np.angle(x[changed]), atol=1e-12)
