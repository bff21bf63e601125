import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisecomm.cli import main
from noisecomm.errors import ConfigError, DomainError
from noisecomm.harness import output
from noisecomm.harness.runs import (
    BENCH_TABLE,
    anchor_link,
    contrast_for_ber,
    emit_histogram,
    montecarlo_ber,
    run_ber_sweep,
    run_calibration,
    run_feedthrough,
    run_temperature_modulation,
    send_packets,
    table1_comparison,
    wilson_interval,
)
from noisecomm.harness.scenario import load_scenario, parse_scenario, preset_names
from noisecomm.iq_ingest import IqFileHeader, write_iq
from noisecomm.modem import ModemConfig, analytic_ber, frame, modulate, render_waveform


class TestScenario:
    def test_presets_load(self):
        names = preset_names()
        assert {"feedthrough", "tempmod", "calibrate", "histogram", "sweep_distance", "sweep_rate"} <= set(names)
        for n in names:
            load_scenario(n)

    def test_parse(self):
        sc = parse_scenario("""
            name = demo   # comment
            seed = 7
            trials = 12
            loads = matched_296, hot
            load.hot.impedance_re = 50
            load.hot.physical_temp = 400
            modem.preamble = 1101
            modem.cycles_per_bit = 4
            link.distance = 2.0
            link.tx_contrast = 3.5
            run.rates = 1, 2.5
        """)
        assert sc.name == "demo" and sc.seed == 7 and sc.trials == 12
        assert [ld.name for ld in sc.loads] == ["matched_296", "hot"]
        assert sc.load("hot").physical_temp == 400
        assert sc.modem.preamble == (1, 1, 0, 1)
        assert sc.modem.cycles_per_bit == 4
        assert sc.link.distance == 2.0 and sc.tx_contrast == 3.5
        assert sc.param("rates", kind=tuple) == [1.0, 2.5]

    @pytest.mark.parametrize("text", [
        "bogus = 1",
        "modem.nonsense = 3",
        "load.x.colour = red",
        "loads = not_a_load",
        "seed = abc",
        "seed = -1",
        "trials = 0",
        "variance_source = guessed",
        "just a line",
        "modem.preamble = 1021",
        "modem.subcarrier_hz = 1000\nmodem.sample_rate_hz = 4000",
        "load.x.impedance_re = -5",
        "load.x.physical_temp = 20",
        "anchor.speed = 3",
    ])
    def test_config_errors(self, text):
        with pytest.raises(ConfigError):
            parse_scenario(text)

    def test_missing_param(self):
        with pytest.raises(ConfigError):
            parse_scenario("name = x").param("needed")
        with pytest.raises(ConfigError):
            parse_scenario("run.n = many").param("n", 1, int)

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            load_scenario("no_such_scenario")

    def test_overrides(self):
        sc = load_scenario("tempmod").with_overrides(seed=5, trials=3)
        assert (sc.seed, sc.trials) == (5, 3)


class TestWilson:
    def test_known_value(self):
        lo, hi = wilson_interval(10, 100)
        assert lo == pytest.approx(0.0552, abs=1e-4)
        assert hi == pytest.approx(0.1744, abs=1e-4)

    def test_zero_errors(self):
        lo, hi = wilson_interval(0, 1000)
        assert lo == pytest.approx(0.0, abs=1e-12) and 0 < hi < 0.005

    @given(st.floats(0.01, 0.5), st.integers(20, 10_000))
    def test_shrinks_with_n(self, p, n):
        a = wilson_interval(round(p * n), n)
        b = wilson_interval(round(p * 4 * n), 4 * n)
        assert b[1] - b[0] < a[1] - a[0]


class TestPackets:
    CFG = ModemConfig()

    def test_strong_link_error_free(self):
        b = send_packets(self.CFG, 1.0, 0.05, 20, seed=3)
        assert b.bit_errors == 0 and b.detected.all()

    def test_substreams(self):
        a = send_packets(self.CFG, 0.0676, 0.0333, 3, seed=3, stream_key=0)
        b = send_packets(self.CFG, 0.0676, 0.0333, 3, seed=3, stream_key=1)
        c = send_packets(self.CFG, 0.0676, 0.0333, 3, seed=3, stream_key=0)
        assert not np.array_equal(a.soft, b.soft)
        np.testing.assert_array_equal(a.soft, c.soft)

    def test_independent_of_trial_count(self):
        a = send_packets(self.CFG, 0.0676, 0.0333, 2, seed=9)
        b = send_packets(self.CFG, 0.0676, 0.0333, 5, seed=9)
        np.testing.assert_array_equal(a.soft, b.soft[:2])


class TestRunners:
    def test_feedthrough_null(self):
        sc = load_scenario("feedthrough").with_overrides(trials=40)
        r = run_feedthrough("open_open", sc)
        assert r.sigma_on == r.sigma_off
        assert not r.separable
        assert 0.35 < r.ber < 0.65

    def test_feedthrough_positive_control(self):
        r = run_feedthrough("open_fifty", load_scenario("feedthrough").with_overrides(trials=20))
        assert r.separable and r.ber < 0.01

    def test_unknown_variant(self):
        with pytest.raises(ConfigError):
            run_feedthrough("short_short", load_scenario("feedthrough"))

    def test_tempmod_swap_complements(self):
        sc = load_scenario("tempmod").with_overrides(trials=20)
        base = run_temperature_modulation(sc)
        sc.params["swap"] = "true"
        sw = run_temperature_modulation(sc)
        assert (sw.sigma_on, sw.sigma_off) == (base.sigma_off, base.sigma_on)
        np.testing.assert_array_equal(sw.true_bits, base.true_bits)
        # the threshold is re-learned from the preamble, whose 1s now read
        # low: decisions come out complemented
        assert base.ber <= 0.01
        assert sw.ber >= 0.99
        assert np.mean(sw.decided_bits == 1 - base.decided_bits) >= 0.99
        # raw intensities flip sign on average for 1-bits
        ones = base.true_bits == 1
        assert base.soft_intensities[ones].mean() > 0 > sw.soft_intensities[ones].mean()

    def test_calibration_noiseless(self):
        r = run_calibration(load_scenario("calibrate"), noiseless=True)
        assert r.fit.slope == pytest.approx(r.true_slope, rel=1e-9)
        assert r.fit.intercept == pytest.approx(0.0212, rel=1e-9)
        temps = {p["load"]: p["noise_temp"] for p in r.probes}
        assert temps["lna_input"] == pytest.approx(39.5, abs=2.0)

    def test_calibration_needs_two_temperatures(self):
        sc = parse_scenario("loads = matched_296, open_296")
        with pytest.raises(DomainError):
            run_calibration(sc)

    def test_table1_predictions(self):
        rows = table1_comparison()
        assert {r["load"] for r in rows} == set(BENCH_TABLE)
        for r in rows:
            assert abs(r["predicted_rel_err"]) < 0.01, r

    def test_histogram_zero_samples(self):
        with pytest.raises(DomainError):
            emit_histogram([], 10, 1.0)

    def test_histogram_density(self):
        rng = np.random.default_rng(0)
        h = emit_histogram(rng.normal(0, 2, 200_000), 60, 4.0)
        width = h.bin_centers[1] - h.bin_centers[0]
        assert h.empirical_density.sum() * width == pytest.approx(1.0, abs=1e-4)
        assert np.max(np.abs(h.empirical_density - h.theory_density)) < 0.01


class TestBer:
    CFG = ModemConfig(subcarrier_hz=100, sample_rate_hz=4000, cycles_per_bit=20)

    def test_contrast_solver(self):
        c = contrast_for_ber(0.01, 0.0274, 800)
        assert analytic_ber(0.0274, 0.0274 + c, 800) == pytest.approx(0.01, rel=1e-8)
        with pytest.raises(DomainError):
            contrast_for_ber(0.6, 0.0274, 800)

    def test_fast_and_sample_paths_agree(self):
        c = contrast_for_ber(0.1, 0.0333, 800)
        e1, n1 = montecarlo_ber(0.0333, 0.0333 + c, self.CFG, 20_000, seed=1, method="fast")
        e2, n2 = montecarlo_ber(0.0333, 0.0333 + c, self.CFG, 20_000, seed=2, method="samples")
        p1, p2 = e1 / n1, e2 / n2
        se = np.sqrt(p1 * (1 - p1) / n1 + p2 * (1 - p2) / n2)
        assert abs(p1 - p2) < 4 * se

    def test_unknown_method(self):
        with pytest.raises(ConfigError):
            montecarlo_ber(1.0, 2.0, self.CFG, 10, seed=0, method="magic")

    def test_unanchored_link(self):
        sc = parse_scenario("link.distance = 1.5")
        with pytest.raises(ConfigError, match="unanchored"):
            anchor_link(sc)
        with pytest.raises(ConfigError):
            anchor_link(parse_scenario("name = nolink"))

    def test_explicit_tx_contrast(self):
        assert anchor_link(parse_scenario("link.distance = 1\nlink.tx_contrast = 0.4")) == 0.4

    def test_sweep_small(self):
        sc = load_scenario("sweep_distance").with_overrides(trials=30)
        sc.params["distances"] = "1.5, 7.3"
        sc.params["rates"] = "5, 20"
        res = run_ber_sweep("distance", sc)
        assert len(res.points) == 4
        for p in res.points:
            assert p.ci_low <= p.ber <= p.ci_high or p.ber == 0.5
            assert p.n_bits == 30 * 13
        with pytest.raises(ConfigError):
            run_ber_sweep("power", sc)

    def test_ci_shrinks_with_trials(self):
        widths = []
        for trials in (20, 160):
            sc = load_scenario("sweep_distance").with_overrides(trials=trials)
            sc.params["distances"] = "5.5"
            sc.params["rates"] = "10"
            p = run_ber_sweep("distance", sc).points[0]
            widths.append(p.ci_high - p.ci_low)
        assert widths[1] < widths[0] / 2


class TestOutput:
    def test_json_sorted_and_plain(self, tmp_path):
        p = output.write_json(tmp_path / "a" / "x.json", {"b": np.float64(1.5), "a": np.arange(2), "c": np.nan})
        assert p.read_text() == '{\n  "a": [\n    0,\n    1\n  ],\n  "b": 1.5,\n  "c": null\n}\n'

    def test_csv(self, tmp_path):
        p = output.write_csv(tmp_path / "x.csv", ["a", "b"], [(np.float32(0.1), 2)])
        assert p.read_text() == f"a,b\n{float(np.float32(0.1))!r},2\n"


def _files(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


class TestCli:
    def test_exit_codes(self, tmp_path, capsys):
        assert main(["tempmod", "--scenario", str(tmp_path / "nope.scn")]) == 2
        bad = tmp_path / "bad.scn"
        bad.write_text("modem.power = loud\n")
        assert main(["tempmod", "--scenario", str(bad)]) == 2
        trunc = tmp_path / "t.cf32"
        trunc.write_bytes(b"\0" * 13)
        assert main(["demod-iq", str(trunc), "--format", "cf32_interleaved", "--out", str(tmp_path)]) == 3
        empty = tmp_path / "e.cf32"
        empty.write_bytes(b"")
        assert main(["demod-iq", str(empty), "--format", "cf32_interleaved", "--out", str(tmp_path)]) == 4
        noise = tmp_path / "n.cf32"
        write_iq(noise, np.zeros(4000 * 40, dtype=np.complex64), IqFileHeader(sample_rate_hz=4000))
        assert main(["demod-iq", str(noise), "--out", str(tmp_path)]) == 5

    def test_demod_iq_recovers_packet(self, tmp_path, capsys):
        cfg = ModemConfig()
        payload = np.array([1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0, 1])
        bits = np.concatenate([[0, 0, 0], frame(payload, cfg), [0, 0]])
        s = render_waveform(modulate(bits, cfg), 0.0676, 0.0333, seed=5, complex_samples=True)
        cap = tmp_path / "cap.cf32"
        write_iq(cap, s.samples, IqFileHeader(sample_rate_hz=4000))
        assert main(["demod-iq", str(cap), "--out", str(tmp_path / "o"), "--hampel", "50"]) == 0
        got = json.loads((tmp_path / "o" / "demod_packet.json").read_text())
        assert got["offset"] == 3
        assert got["payload_bits"] == payload.tolist()

    @pytest.mark.parametrize("cmd", [["tempmod", "--trials", "5"], ["feedthrough", "--trials", "5"],
                                     ["histogram"], ["sweep", "--trials", "5", "--axis", "rate"]])
    def test_determinism(self, tmp_path, cmd, capsys):
        a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        assert main(cmd + ["--out", str(a), "--seed", "11"]) == 0
        assert main(cmd + ["--out", str(b), "--seed", "11"]) == 0
        assert main(cmd + ["--out", str(c), "--seed", "12"]) == 0
        fa, fb, fc = _files(a), _files(b), _files(c)
        assert fa and fa == fb
        assert fa != fc

    def test_calibrate_runs(self, tmp_path, capsys):
        sc = tmp_path / "cal.scn"
        sc.write_text("loads = matched_296, matched_77\nrun.samples = 10000\nrun.probe_loads = lna_input\n")
        assert main(["calibrate", "--scenario", str(sc), "--out", str(tmp_path / "o")]) == 0
        data = json.loads((tmp_path / "o" / "calibration_fit.json").read_text())
        assert data["rng"].startswith("numpy")
        assert "note" in data


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(["open_open", "fifty_fifty"]))
def test_identical_loads_carry_no_information(seed, variant):
    sc = load_scenario("feedthrough").with_overrides(seed=seed, trials=8)
    r = run_feedthrough(variant, sc)
    assert r.sigma_on == r.sigma_off
    # 104 bits at p = 0.5: 6 sd is about 0.29
    assert 0.2 < r.ber < 0.8
