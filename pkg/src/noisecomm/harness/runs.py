"""Experiment runners.

Every runner is a deterministic function of its scenario: random draws come
from substreams keyed by ``(seed, ...)`` with the trial index in the key, so
trials could run in any order (or concurrently) without changing results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats
from statsmodels.stats.proportion import proportion_confint

from ..calibration import (
    BENCH_FIT,
    CalibrationPoint,
    LinearFit,
    extract_noise_temp,
    fit_line,
    fit_std,
)
from ..channel import LinkBudget, path_factor, received_contrast
from ..errors import ConfigError, DomainError, NoPacketError
from ..modem import (
    ModemConfig,
    analytic_ber,
    decide,
    deframe,
    detect_packet,
    frame,
    integrate_and_dump,
    intensity_moments,
    modulate,
    preamble_threshold,
    render_waveform,
    simulate_intensities,
)
from ..noise_physics import DERIVED_MEASUREMENTS, PRESETS, observed_msv
from ..receiver_model import (
    RNG_ALGORITHM,
    ReceiverChain,
    gaussian_gof,
    gaussian_pdf,
    load_variance,
    make_rng,
    mean_square,
    predicted_variance,
    synthesize,
)
from .scenario import Scenario

NOISE_TEMP_NOTE = (
    "Text and table disagree on which mismatched load is 40 K and which is 46 K; "
    "temperatures here come from inverting the calibration line, which gives "
    "open ~39 K and short ~44.7 K for the tabulated measurements."
)


def wilson_interval(errors: int, n: int, alpha: float = 0.05) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    lo, hi = proportion_confint(errors, n, alpha=alpha, method="wilson")
    # roundoff can leave the bound a hair past the estimate at 0 or n errors
    p = errors / n
    return float(min(lo, p)), float(max(hi, p))


# -- packet transmission --------------------------------------------------------

@dataclass
class PacketBatch:
    """Outcome of sending ``n`` framed packets through render/demodulate.

    ``soft`` and ``decided`` are aligned to each packet (genie timing);
    ``detected`` records whether blind preamble search found the packet and
    recovered its payload exactly.
    """

    payloads: np.ndarray
    soft: np.ndarray
    thresholds: np.ndarray
    decided: np.ndarray
    detected: np.ndarray
    n_preamble: int

    @property
    def payload_soft(self) -> np.ndarray:
        return self.soft[:, self.n_preamble :]

    @property
    def payload_decided(self) -> np.ndarray:
        return self.decided[:, self.n_preamble :]

    @property
    def bit_errors(self) -> int:
        return int(np.count_nonzero(self.payload_decided != self.payloads))

    @property
    def n_bits(self) -> int:
        return int(self.payloads.size)

    @property
    def ber(self) -> float:
        return self.bit_errors / self.n_bits


def send_packets(cfg: ModemConfig, sigma_on: float, sigma_off: float, n_packets: int,
                 seed, stream_key: int = 0, guard_bits: int = 2) -> PacketBatch:
    """Frame random payloads, render them with idle guard bits either side,
    and demodulate.

    Payload draws use substream ``(seed, stream_key, i, 0)`` and noise uses
    ``(seed, stream_key, i, 1)``; neither depends on the variances, so sweeps
    over contrast share random numbers point to point.
    """
    pre = len(cfg.preamble)
    pk = cfg.packet_bits
    payloads = np.empty((n_packets, cfg.payload_bits), dtype=np.int8)
    soft = np.empty((n_packets, pk))
    thresholds = np.empty(n_packets)
    decided = np.empty((n_packets, pk), dtype=np.int8)
    detected = np.zeros(n_packets, dtype=bool)
    guard = np.zeros(guard_bits, dtype=np.int8)
    for i in range(n_packets):
        payload = make_rng(seed, stream_key, i, 0).integers(0, 2, cfg.payload_bits, dtype=np.int8)
        bits = np.concatenate([guard, frame(payload, cfg), guard])
        stream = render_waveform(modulate(bits, cfg), sigma_on, sigma_off, seed=(seed, stream_key, i, 1))
        all_soft = integrate_and_dump(stream.samples, cfg, max_bits=bits.size)
        pkt = all_soft[guard_bits : guard_bits + pk]
        thr = cfg.fixed_threshold if cfg.threshold_policy == "fixed" else preamble_threshold(pkt, cfg.preamble)
        payloads[i] = payload
        soft[i] = pkt
        thresholds[i] = thr
        decided[i] = decide(pkt, thr)
        try:
            al = detect_packet(all_soft, cfg)
            got = deframe(decide(all_soft[al.offset : al.offset + pk], al.threshold), cfg)
            detected[i] = al.offset == guard_bits and np.array_equal(got, payload)
        except NoPacketError:
            pass
    return PacketBatch(payloads, soft, thresholds, decided, detected, pre)


def _histogram_pair(a: np.ndarray, b: np.ndarray, bins: int):
    lo = float(min(a.min(), b.min()))
    hi = float(max(a.max(), b.max()))
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    da, _ = np.histogram(a, edges, density=True)
    db, _ = np.histogram(b, edges, density=True)
    return edges, da, db


# -- feedthrough controls -------------------------------------------------------

FEEDTHROUGH_VARIANTS = {
    # variant: (ON load, OFF load)
    "open_open": ("open_296", "open_296"),
    "fifty_fifty": ("matched_296", "matched_296"),
    "open_fifty": ("matched_296", "open_296"),
}


@dataclass
class FeedthroughResult:
    variant: str
    sigma_on: float
    sigma_off: float
    ber: float
    bit_errors: int
    n_bits: int
    ks_statistic: float
    ks_pvalue: float
    separable: bool
    zero_intensities: np.ndarray
    one_intensities: np.ndarray
    hist_edges: np.ndarray
    hist_zero: np.ndarray
    hist_one: np.ndarray
    packets_detected: int

    def summary(self) -> dict:
        return {
            "variant": self.variant,
            "sigma_on": self.sigma_on,
            "sigma_off": self.sigma_off,
            "ber": self.ber,
            "bit_errors": self.bit_errors,
            "n_bits": self.n_bits,
            "ks_statistic": self.ks_statistic,
            "ks_pvalue": self.ks_pvalue,
            "separable": self.separable,
            "packets_detected": self.packets_detected,
        }


def run_feedthrough(variant: str, scenario: Scenario, alpha: float = 0.01) -> FeedthroughResult:
    """Switch between two loads and compare 0-bit and 1-bit intensities.

    ``run.on_load``/``run.off_load`` override the variant's load pair.
    """
    if variant not in FEEDTHROUGH_VARIANTS:
        raise ConfigError(f"unknown feedthrough variant {variant!r}")
    on_name, off_name = FEEDTHROUGH_VARIANTS[variant]
    on_name = scenario.param("on_load", on_name)
    off_name = scenario.param("off_load", off_name)
    s_on = load_variance(scenario.load(on_name), scenario.chain, scenario.variance_source)
    s_off = load_variance(scenario.load(off_name), scenario.chain, scenario.variance_source)
    # each variant draws from its own substream
    key = list(FEEDTHROUGH_VARIANTS).index(variant)
    batch = send_packets(scenario.modem, s_on, s_off, scenario.trials, scenario.seed, stream_key=key,
                         guard_bits=scenario.param("guard_bits", 2, int))
    truth = batch.payloads.ravel()
    soft = batch.payload_soft.ravel()
    zeros, ones = soft[truth == 0], soft[truth == 1]
    ks = stats.ks_2samp(zeros, ones)
    edges, h0, h1 = _histogram_pair(zeros, ones, scenario.param("bins", 40, int))
    return FeedthroughResult(
        variant, s_on, s_off, batch.ber, batch.bit_errors, batch.n_bits,
        float(ks.statistic), float(ks.pvalue), bool(ks.pvalue <= alpha),
        zeros, ones, edges, h0, h1, int(batch.detected.sum()),
    )


# -- temperature modulation --------------------------------------------------------

@dataclass
class TempModResult:
    sigma_on: float
    sigma_off: float
    soft_intensities: np.ndarray  # payload bits, packet-major
    decided_bits: np.ndarray
    true_bits: np.ndarray
    thresholds: np.ndarray
    ber: float
    bit_errors: int
    n_bits: int
    packets_detected: int
    hist_edges: np.ndarray
    hist_zero: np.ndarray
    hist_one: np.ndarray

    def summary(self) -> dict:
        return {
            "sigma_on": self.sigma_on,
            "sigma_off": self.sigma_off,
            "ber": self.ber,
            "bit_errors": self.bit_errors,
            "n_bits": self.n_bits,
            "packets": int(self.thresholds.size),
            "packets_detected": self.packets_detected,
        }


def run_temperature_modulation(scenario: Scenario) -> TempModResult:
    """Switch between two matched loads at different physical temperatures.

    ``run.on_load`` (default matched_296) and ``run.off_load`` (default
    matched_77) pick the pair; ``run.swap = true`` exchanges them.
    """
    on_name = scenario.param("on_load", "matched_296")
    off_name = scenario.param("off_load", "matched_77")
    if scenario.param("swap", "false").lower() in ("1", "true", "yes"):
        on_name, off_name = off_name, on_name
    s_on = load_variance(scenario.load(on_name), scenario.chain, scenario.variance_source)
    s_off = load_variance(scenario.load(off_name), scenario.chain, scenario.variance_source)
    batch = send_packets(scenario.modem, s_on, s_off, scenario.trials, scenario.seed,
                         guard_bits=scenario.param("guard_bits", 2, int))
    truth = batch.payloads.ravel()
    soft = batch.payload_soft.ravel()
    edges, h0, h1 = _histogram_pair(soft[truth == 0], soft[truth == 1], scenario.param("bins", 40, int))
    return TempModResult(
        s_on, s_off, soft, batch.payload_decided.ravel(), truth, batch.thresholds,
        batch.ber, batch.bit_errors, batch.n_bits, int(batch.detected.sum()), edges, h0, h1,
    )


# -- calibration -------------------------------------------------------------------

BENCH_TABLE = {
    # load: (predicted/calculated column, measured column, tabulated T_N)
    "matched_296": (0.0676, 0.0676, 296.0),
    "matched_77": (0.0332, 0.0333, 77.0),
    "open_296": (0.0217, 0.0274, 46.0),
    "short_296": (0.0221, 0.0283, 40.0),
    "lna_input": (0.0274, 0.0273, 39.5),
}


def table1_comparison(chain: ReceiverChain | None = None, fit: LinearFit = BENCH_FIT) -> list[dict]:
    """Model predictions next to the bench table for the five loads.

    The LNA input has no physical temperature; its prediction is computed
    from its noise temperature as a matched load.
    """
    chain = chain or ReceiverChain()
    rows = []
    for name, (tab_pred, tab_meas, tab_tn) in BENCH_TABLE.items():
        load = PRESETS[name]
        pred = predicted_variance(load, chain)
        rows.append({
            "load": name,
            "physical_temp": None if name == "lna_input" else load.physical_temp,
            "predicted_msv": pred,
            "table_predicted_msv": tab_pred,
            "predicted_rel_err": pred / tab_pred - 1.0,
            "table_measured_msv": tab_meas,
            "extracted_noise_temp": extract_noise_temp(tab_meas, fit),
            "table_noise_temp": tab_tn,
        })
    return rows


@dataclass
class CalibrationRun:
    fit: LinearFit
    slope_std: float
    intercept_std: float
    true_slope: float
    true_intercept: float
    points: list[dict]
    probes: list[dict]
    note: str = NOISE_TEMP_NOTE

    def summary(self) -> dict:
        return {
            "fit": self.fit.to_dict(),
            "slope_std": self.slope_std,
            "intercept_std": self.intercept_std,
            "true_slope": self.true_slope,
            "true_intercept": self.true_intercept,
            "points": self.points,
            "probes": self.probes,
            "note": self.note,
        }


def run_calibration(scenario: Scenario, noiseless: bool = False) -> CalibrationRun:
    """Synthesize receiver streams for known-temperature loads, fit the
    calibration line, then extract noise temperatures of probe loads.

    Known loads are the scenario's ``loads``; ``run.probe_loads`` lists the
    loads whose noise temperature is extracted. ``run.samples`` sets the
    stream length per load. ``run.known_source`` and ``run.probe_source``
    choose predicted or measured variances (defaults predicted / measured).
    With ``noiseless`` the exact variances replace stream estimates.
    """
    chain = scenario.chain
    n = scenario.param("samples", 6_000_000, int)
    known_src = scenario.param("known_source", "predicted")
    probe_src = scenario.param("probe_source", "measured")
    known = scenario.loads
    if len({ld.physical_temp for ld in known}) < 2:
        raise DomainError("calibration needs at least two loads at distinct temperatures")

    def estimate(sigma_sq, key):
        if noiseless:
            return sigma_sq
        return mean_square(synthesize(sigma_sq, n, seed=(scenario.seed, key)))

    points, rows, variances = [], [], []
    for i, ld in enumerate(known):
        s2 = load_variance(ld, chain, known_src)
        msv = estimate(s2, i)
        points.append(CalibrationPoint(ld.physical_temp, msv))
        variances.append(2.0 * s2 * s2 / n)
        rows.append({"load": ld.name, "temp": ld.physical_temp, "true_msv": s2, "measured_msv": msv,
                     "derived": known_src == "measured" and ld.name in DERIVED_MEASUREMENTS})
    fit = fit_line(points)
    slope_sd, icpt_sd = (0.0, 0.0) if noiseless else fit_std([p.temp for p in points], variances)

    # the noiseless forward line implied by the chain for matched loads
    matched_slope = (observed_msv(PRESETS["matched_296"], chain.bandwidth, chain.shunt_r) / 296.0) * chain.gain_rx
    probes = []
    for j, name in enumerate(scenario.param("probe_loads", "", list)):
        ld = scenario.load(name)
        s2 = load_variance(ld, chain, probe_src)
        msv = estimate(s2, len(known) + j)
        probes.append({"load": name, "true_msv": s2, "measured_msv": msv,
                       "noise_temp": extract_noise_temp(msv, fit)})
    return CalibrationRun(fit, slope_sd, icpt_sd, matched_slope, chain.offset, rows, probes)


# -- histogram -----------------------------------------------------------------------

@dataclass
class HistogramResult:
    bin_centers: np.ndarray
    empirical_density: np.ndarray
    theory_density: np.ndarray
    sigma_sq: float
    n: int
    gof_statistic: float
    gof_pvalue: float


def emit_histogram(values, bins: int, sigma_sq: float, span_sigmas: float = 5.0) -> HistogramResult:
    """Empirical density of ``values`` beside the N(0, sigma_sq) density."""
    x = np.asarray(values)
    if np.iscomplexobj(x):
        x = x.real
    if x.size == 0:
        raise DomainError("histogram of zero samples")
    half = span_sigmas * math.sqrt(sigma_sq)
    edges = np.linspace(-half, half, bins + 1)
    counts, _ = np.histogram(x, edges)
    width = edges[1] - edges[0]
    centers = 0.5 * (edges[:-1] + edges[1:])
    stat, p = gaussian_gof(x, sigma_sq) if x.size >= 250 else (math.nan, math.nan)
    return HistogramResult(centers, counts / (x.size * width), gaussian_pdf(centers, sigma_sq),
                           sigma_sq, int(x.size), stat, p)


def run_histogram(scenario: Scenario) -> HistogramResult:
    """``run.load`` (default matched_296), ``run.samples``, ``run.bins``."""
    ld = scenario.load(scenario.param("load", "matched_296"))
    s2 = load_variance(ld, scenario.chain, scenario.variance_source)
    stream = synthesize(s2, scenario.param("samples", 1_000_000, int), seed=scenario.seed)
    return emit_histogram(stream.samples, scenario.param("bins", 100, int), s2)


# -- BER: oracle cross-check and sweeps -----------------------------------------------

def montecarlo_ber(sigma_off: float, sigma_on: float, cfg: ModemConfig, n_bits: int, seed,
                   threshold: float | None = None, method: str = "fast", chunk_bits: int = 4096):
    """Bit error rate of aligned random bits at a fixed threshold.

    ``method="samples"`` renders and demodulates the full waveform;
    ``method="fast"`` draws each half-cycle's integrated power directly
    (same distribution, far cheaper). Returns ``(errors, n_bits)``.
    """
    (m0, _), (m1, _) = intensity_moments(sigma_off, sigma_on, cfg.samples_per_bit)
    thr = 0.5 * (m0 + m1) if threshold is None else threshold
    errors = 0
    done = 0
    for c, start in enumerate(range(0, n_bits, chunk_bits)):
        nb = min(chunk_bits, n_bits - start)
        bits = make_rng(seed, c, 0).integers(0, 2, nb, dtype=np.int8)
        if method == "fast":
            soft = simulate_intensities(bits, sigma_off, sigma_on, cfg, make_rng(seed, c, 1))
        elif method == "samples":
            stream = render_waveform(modulate(bits, cfg), sigma_on, sigma_off, seed=(seed, c, 1))
            soft = integrate_and_dump(stream.samples, cfg, max_bits=nb)
        else:
            raise ConfigError(f"unknown Monte-Carlo method {method!r}")
        errors += int(np.count_nonzero(decide(soft, thr) != bits))
        done += nb
    return errors, done


def contrast_for_ber(target: float, sigma_off: float, samples_per_bit: float) -> float:
    """Receive-side contrast whose analytic midpoint-threshold BER is ``target``."""
    if not 0 < target < 0.5:
        raise DomainError("target BER must be in (0, 0.5)")
    f = lambda logc: math.log(analytic_ber(sigma_off, sigma_off + math.exp(logc), samples_per_bit)) - math.log(target)
    return math.exp(optimize.brentq(f, math.log(sigma_off * 1e-6), math.log(sigma_off * 1e6), xtol=1e-12))


def anchor_link(scenario: Scenario) -> float:
    """Transmit-side contrast (link constant) for the scenario.

    Uses ``link.tx_contrast`` when given, else solves the ``anchor.*``
    point (rate bps, distance m, ber) with the analytic BER.
    """
    if scenario.link is None:
        raise ConfigError("sweep needs a link.* section")
    if scenario.tx_contrast is not None:
        return scenario.tx_contrast
    a = scenario.anchor
    if not {"rate", "distance", "ber"} <= set(a):
        raise ConfigError("unanchored link: set link.tx_contrast or anchor.rate/distance/ber")
    s_off = load_variance(scenario.load(scenario.param("off_load", "open_296")), scenario.chain,
                          scenario.variance_source)
    # samples per bit depend on the rate alone, not on cycles per bit
    spb = scenario.modem.sample_rate_hz / a["rate"]
    rx = contrast_for_ber(a["ber"], s_off, spb)
    link = LinkBudget(a["distance"], scenario.link.tx_gain_dbi, scenario.link.rx_gain_dbi, scenario.link.frequency_hz)
    return rx / path_factor(link)


@dataclass
class SweepPoint:
    rate: float
    distance: float
    rx_contrast: float
    ber: float
    ci_low: float
    ci_high: float
    bit_errors: int
    n_bits: int
    analytic_ber: float
    packets_attempted: int
    packets_decoded: int


@dataclass
class SweepResult:
    axis: str
    points: list[SweepPoint]
    tx_contrast: float
    ci_method: str = "wilson-95"
    throughput: dict = field(default_factory=dict)

    def series(self, key: str, value: float) -> list[SweepPoint]:
        return [p for p in self.points if getattr(p, key) == value]


def run_ber_sweep(axis: str, scenario: Scenario) -> SweepResult:
    """Monte-Carlo BER over distance or data rate.

    ``run.rates`` and ``run.distances`` list the grid; the axis decides which
    is swept and which labels the series. ``run.cycles_per_bit`` (default 5)
    sets subcarrier = rate * cycles. Reported BER is clipped to 0.5.
    """
    if axis not in ("distance", "rate"):
        raise ConfigError(f"unknown sweep axis {axis!r}")
    tx = anchor_link(scenario)
    rates = scenario.param("rates", [5.0, 10.0, 20.0], tuple)
    distances = scenario.param("distances", [1.5], tuple)
    cpb = scenario.param("cycles_per_bit", 5, int)
    guard = scenario.param("guard_bits", 2, int)
    s_off = load_variance(scenario.load(scenario.param("off_load", "open_296")), scenario.chain,
                          scenario.variance_source)
    base = scenario.modem
    link0 = scenario.link
    points = []
    for ri, rate in enumerate(rates):
        try:
            cfg = ModemConfig.for_rate(rate, cpb, base.sample_rate_hz, threshold_policy=base.threshold_policy,
                                       fixed_threshold=base.fixed_threshold, preamble=base.preamble,
                                       payload_bits=base.payload_bits, power=base.power,
                                       correlation_floor=base.correlation_floor)
        except ConfigError as exc:
            raise ConfigError(f"rate {rate} bps: {exc}") from None
        for d in distances:
            link = LinkBudget(d, link0.tx_gain_dbi, link0.rx_gain_dbi, link0.frequency_hz)
            c = received_contrast(tx, link)
            batch = send_packets(cfg, s_off + c, s_off, scenario.trials, scenario.seed, stream_key=ri,
                                 guard_bits=guard)
            lo, hi = wilson_interval(batch.bit_errors, batch.n_bits)
            points.append(SweepPoint(rate, d, c, min(batch.ber, 0.5), lo, hi, batch.bit_errors, batch.n_bits,
                                     analytic_ber(s_off, s_off + c, cfg.samples_per_bit),
                                     scenario.trials, int(batch.detected.sum())))
    throughput = {}
    if axis == "rate":
        for d in distances:
            ok = [p.rate for p in points if p.distance == d and p.ber <= 0.01]
            throughput[d] = max(ok) if ok else None
    return SweepResult(axis, points, tx, throughput=throughput)


def provenance(scenario: Scenario) -> dict:
    return {"scenario": scenario.name, "seed": scenario.seed, "trials": scenario.trials, "rng": RNG_ALGORITHM}
