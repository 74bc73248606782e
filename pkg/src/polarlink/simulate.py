"""Monte-Carlo harness: sessions through the bin-level channel, metrics, baselines.

SNR convention used everywhere here: snr_db = 10*log10(P / (2*sigma2)), the
per-symbol peak power over the complex noise variance, so P = 2*sigma2 *
10^(snr_db/10).  Sweeps are in SNR; no distance model is applied.

Per-trial randomness derives from (master_seed, point_index, trial_index)
only, so different schemes run on identical channel realizations and results
do not depend on worker count or execution order.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from pathlib import Path

import numpy as np

from .decoding import BpConfig, bp_decode
from .encoding import encode_systematic
from .phy import LeakageModel, NoiseModel, llr_basic_many, llr_leakage_many, synthesize_symbols
from .protocol import (
    RATE_TABLE,
    TIMEOUT_FALLBACK_RATE,
    FeedbackMsg,
    GatewaySession,
    bits_to_hex,
    crc16,
    crc16_verify,
    feedback_channel,
    frame_from_wire,
    frame_to_wire,
    gateway_on_frame,
    plan_session,
    tag_stage1,
    tag_stage2,
)

__all__ = [
    "SimConfig",
    "TrialResult",
    "Metrics",
    "SessionRecord",
    "wilson_interval",
    "goodput",
    "hamming74_encode",
    "hamming74_decode",
    "run_session",
    "replay_session",
    "run_trial",
    "run_sweep",
    "write_outputs",
    "SNR_NOTE",
]

SNR_NOTE = "snr_db = 10*log10(P/(2*sigma2)): per-symbol peak power over complex noise variance"


def snr_to_power(snr_db: float, sigma2: float) -> float:
    return 2.0 * sigma2 * 10.0 ** (snr_db / 10.0)


@dataclass(frozen=True)
class SimConfig:
    """Sweep configuration; ``schemes`` may hold several entries that share
    per-trial seeds ("sozu", "hamming74", or "fixed:<rate>" like "fixed:1/2")."""

    n_fft: int = 128
    sigma2: float = 1.0
    snr_db: tuple = (-10.0,)
    k: int = 96
    leak: tuple = (0.25, 0.5, 0.25)
    fb_loss: float = 0.0
    trials: int = 100
    master_seed: int = 1
    schemes: tuple = ("sozu",)
    metric: str = "leakage"
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.snr_db:
            raise ValueError("snr_db sweep must be non-empty")
        if self.metric not in ("basic", "leakage"):
            raise ValueError(f"unknown metric {self.metric!r}")
        for s in self.schemes:
            parse_scheme(s)

    def noise(self, snr_db: float) -> NoiseModel:
        return NoiseModel(sigma2=self.sigma2, signal_power=snr_to_power(snr_db, self.sigma2))

    def leakage(self) -> LeakageModel:
        return LeakageModel(tuple(self.leak))


def parse_scheme(s: str):
    """Split a scheme string into ("sozu"|"hamming74"|"fixed", rate or None)."""
    if s in ("sozu", "hamming74"):
        return s, None
    if s.startswith("fixed:"):
        rate = Fraction(s.split(":", 1)[1])
        if not 0 < rate <= 1:
            raise ValueError(f"fixed rate must be in (0, 1], got {rate}")
        return "fixed", rate
    raise ValueError(f"unknown scheme {s!r}")


@dataclass
class TrialResult:
    scheme: str
    snr_db: float
    trial: int
    success: bool
    bits_sent: int
    clean_bits: int
    bit_errors: int
    byte_errors: int
    n_bytes: int
    k: int
    frames_used: int
    fber_first: float
    requested_rate: str

    @property
    def effective_rate(self) -> float:
        return self.k / self.bits_sent

    def to_json(self) -> str:
        d = asdict(self)
        d["effective_rate"] = self.effective_rate
        return json.dumps(d, sort_keys=True)


@dataclass(frozen=True)
class Metrics:
    scheme: str
    snr_db: float
    trials: int
    ber: float
    ber_ci: tuple
    prr: float
    prr_ci: tuple
    brr: float
    brr_ci: tuple
    goodput: float
    mean_effective_rate: float


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple:
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return (lo, hi)


def goodput(results) -> float:
    """Delivered info bits per transmitted coded bit: sum(clean)/sum(sent)."""
    results = list(results)
    if not results:
        raise ValueError("need at least one trial result")
    sent = sum(r.bits_sent for r in results)
    clean = sum(r.clean_bits for r in results)
    return clean / sent if sent else 0.0


# ---------------------------------------------------------------------------
# Hamming(7,4) baseline: one error per block correctable, hard decisions
# ---------------------------------------------------------------------------

_H74_P = np.array([[1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]], dtype=np.uint8)
_H74_H = np.hstack([_H74_P.T, np.eye(3, dtype=np.uint8)])
_H74_SYN_TO_POS = np.full(8, -1, dtype=np.int64)
for _j in range(7):
    _H74_SYN_TO_POS[int(_H74_H[0, _j] * 4 + _H74_H[1, _j] * 2 + _H74_H[2, _j])] = _j


def hamming74_encode(bits) -> np.ndarray:
    """Encode 4-bit groups into 7-bit blocks [data | parity]."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % 4:
        raise ValueError("length must be a multiple of 4")
    data = bits.reshape(-1, 4)
    parity = (data @ _H74_P) % 2
    return np.hstack([data, parity]).reshape(-1)


def hamming74_decode(llrs_or_bits) -> np.ndarray:
    """Syndrome-decode 7-bit blocks; floats are hard-sliced at 0 first."""
    arr = np.asarray(llrs_or_bits)
    if arr.dtype.kind == "f":
        blocks = (arr < 0).astype(np.uint8)
    else:
        blocks = arr.astype(np.uint8)
    if blocks.size % 7:
        raise ValueError("length must be a multiple of 7")
    blocks = blocks.reshape(-1, 7).copy()
    syn = (blocks @ _H74_H.T) % 2
    syn_int = syn[:, 0] * 4 + syn[:, 1] * 2 + syn[:, 2]
    flip = _H74_SYN_TO_POS[syn_int]
    rows = np.nonzero(flip >= 0)[0]
    blocks[rows, flip[rows]] ^= 1
    return blocks[:, :4].reshape(-1)


# ---------------------------------------------------------------------------
# sessions
# ---------------------------------------------------------------------------

@dataclass
class SessionRecord:
    """Full trace of one adaptive session, sufficient for byte-exact replay."""

    k: int
    n_mother: int
    stage1_budget: int
    snr_db: float
    frames: list = field(default_factory=list)       # wire strings
    frame_llrs: list = field(default_factory=list)   # one list of floats per frame
    decisions: list = field(default_factory=list)
    fber_first: float = 0.0
    requested_rate: str = ""
    feedback: list = field(default_factory=list)
    outcome: str = ""
    bits_sent: int = 0
    info_hex: str = ""

    def to_json(self, indent=None) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=indent)


def _rngs_for(master_seed: int, point: int, trial: int):
    ss = np.random.SeedSequence([int(master_seed), int(point), int(trial)])
    return [np.random.default_rng(c) for c in ss.spawn(3)]  # info, channel, feedback


def _transmit(bits, cfg: SimConfig, noise: NoiseModel, channel_rng) -> np.ndarray:
    """Send coded bits through the bin-level channel, return their LLRs."""
    peaks = channel_rng.integers(0, cfg.n_fft, size=len(bits))
    bins = synthesize_symbols(bits, peaks, noise, cfg.leakage(), cfg.n_fft, channel_rng)
    metric = llr_leakage_many if cfg.metric == "leakage" else llr_basic_many
    return metric(bins, peaks, cfg.sigma2)


def run_session(cfg: SimConfig, snr_db: float, rngs, bp_config: BpConfig = None,
                record: SessionRecord = None):
    """Run one two-stage adaptive session; returns (success, decoded, aux dict).

    The tag retransmits parity after a feedback timeout at the fallback rate,
    since it cannot know whether an ACK or a rate request was lost; the
    session is scored by the gateway's final decode outcome.
    """
    info_rng, channel_rng, feedback_rng = rngs
    noise = cfg.noise(snr_db)
    plan = plan_session(cfg.k)
    info = info_rng.integers(0, 2, size=cfg.k).astype(np.uint8)
    gw = GatewaySession(plan, bp_config or BpConfig())

    def log_frame(frame, llrs):
        if record is not None:
            record.frames.append(frame_to_wire(frame))
            record.frame_llrs.append([float(v) for v in llrs])

    f1 = tag_stage1(info, plan)
    llrs1 = _transmit(f1.payload_bits, cfg, noise, channel_rng)
    log_frame(f1, llrs1)
    d1 = gateway_on_frame(f1, llrs1, gw)
    bits_sent = len(f1.payload_positions)
    fber_first = d1["fber"]
    frames_used = 1
    requested = ""

    if d1["action"] == "ack":
        fb = feedback_channel(FeedbackMsg(kind="ack"), cfg.fb_loss, feedback_rng)
        if record is not None:
            record.feedback.append({"kind": fb.kind, "delivered": fb.delivered})
        if not fb.delivered:
            # lost ACK: tag times out and wastes a fallback stage 2
            f2 = tag_stage2(info, plan, TIMEOUT_FALLBACK_RATE)
            llrs2 = _transmit(f2.payload_bits, cfg, noise, channel_rng)
            log_frame(f2, llrs2)
            gateway_on_frame(f2, llrs2, gw)
            bits_sent += len(f2.payload_positions)
            frames_used = 2
    else:
        rate = Fraction(d1["rate"])
        fb = feedback_channel(FeedbackMsg(kind="request_rate", rate=rate),
                              cfg.fb_loss, feedback_rng)
        if record is not None:
            record.feedback.append({"kind": fb.kind, "rate": str(rate),
                                    "delivered": fb.delivered})
        stage2_rate = rate if fb.delivered else TIMEOUT_FALLBACK_RATE
        requested = str(rate)
        f2 = tag_stage2(info, plan, stage2_rate)
        llrs2 = _transmit(f2.payload_bits, cfg, noise, channel_rng)
        log_frame(f2, llrs2)
        gateway_on_frame(f2, llrs2, gw)
        bits_sent += len(f2.payload_positions)
        frames_used = 2

    decoded = gw.last_info
    aux = {
        "bits_sent": bits_sent,
        "frames_used": frames_used,
        "fber_first": fber_first,
        "requested_rate": requested,
        "info": info,
        "decisions": gw.decisions,
    }
    if record is not None:
        record.decisions = list(gw.decisions)
        record.fber_first = fber_first
        record.requested_rate = requested
        record.outcome = "success" if gw.succeeded else "fail"
        record.bits_sent = bits_sent
        record.info_hex = bits_to_hex(info)
    return gw.succeeded, decoded, aux


def replay_session(record_dict: dict, k: int, bp_config: BpConfig = None) -> list:
    """Re-run the gateway over a recorded trace; returns its decision list."""
    plan = plan_session(k)
    gw = GatewaySession(plan, bp_config or BpConfig())
    for wire, llrs in zip(record_dict["frames"], record_dict["frame_llrs"]):
        gateway_on_frame(frame_from_wire(wire), np.asarray(llrs), gw)
    return gw.decisions


def _bit_and_byte_errors(decoded, info):
    if decoded is None:
        decoded = np.zeros_like(info)
    errs = decoded.astype(np.uint8) ^ info.astype(np.uint8)
    bit_errors = int(errs.sum())
    n_bytes = len(info) // 8
    if n_bytes:
        byte_errors = int(np.any(errs[: 8 * n_bytes].reshape(-1, 8), axis=1).sum())
    else:
        byte_errors = 0
    return bit_errors, byte_errors, n_bytes


def run_trial(cfg: SimConfig, scheme: str, point: int, trial: int) -> TrialResult:
    """One packet/session of ``scheme`` at sweep point ``point``.

    Identical (cfg, point, trial) always produce the identical result, and
    the channel stream is shared across schemes.
    """
    kind, fixed_rate = parse_scheme(scheme)
    snr_db = float(cfg.snr_db[point])
    rngs = _rngs_for(cfg.master_seed, point, trial)
    info_rng, channel_rng, _ = rngs
    noise = cfg.noise(snr_db)

    if kind == "sozu":
        success, decoded, aux = run_session(cfg, snr_db, rngs)
        info = aux["info"]
        bits_sent = aux["bits_sent"]
        frames_used = aux["frames_used"]
        fber_first = aux["fber_first"]
        requested = aux["requested_rate"]
    elif kind == "fixed":
        plan = plan_session(cfg.k)
        budget = plan.cumulative_budget(fixed_rate) if fixed_rate in RATE_TABLE \
            else int(round(cfg.k / fixed_rate))
        if budget > plan.n_mother:
            raise ValueError(f"rate {fixed_rate} needs {budget} > N={plan.n_mother} bits")
        info = info_rng.integers(0, 2, size=cfg.k).astype(np.uint8)
        codeword = encode_systematic(info, plan.spec)
        positions = np.concatenate([plan.spec.info_set,
                                    plan.spec.parity_schedule[: budget - cfg.k]])
        llrs = _transmit(codeword[positions], cfg, noise, channel_rng)
        full = np.zeros(plan.n_mother)
        full[positions] = llrs
        crc = crc16(info)
        result = bp_decode(full, plan.spec, BpConfig(
            early_stop="crc", crc_check=lambda b: crc16_verify(b, crc)))
        decoded = result.info_bits
        success = bool(np.array_equal(decoded, info))
        bits_sent = budget
        frames_used = 1
        fber_first = result.fber
        requested = ""
    else:  # hamming74
        k4 = cfg.k - cfg.k % 4
        info = info_rng.integers(0, 2, size=cfg.k).astype(np.uint8)
        coded = hamming74_encode(info[:k4])
        llrs = _transmit(coded, cfg, noise, channel_rng)
        data = hamming74_decode(llrs)
        decoded = info.copy()
        decoded[:k4] = data
        success = bool(np.array_equal(data, info[:k4]))
        bits_sent = len(coded)
        frames_used = 1
        fber_first = 0.0
        requested = ""

    bit_errors, byte_errors, n_bytes = _bit_and_byte_errors(decoded, info)
    return TrialResult(
        scheme=scheme, snr_db=snr_db, trial=trial, success=success,
        bits_sent=bits_sent, clean_bits=cfg.k if success else 0,
        bit_errors=bit_errors, byte_errors=byte_errors, n_bytes=n_bytes,
        k=cfg.k, frames_used=frames_used, fber_first=fber_first,
        requested_rate=requested,
    )


def _run_point(args):
    cfg, scheme, point = args
    return [run_trial(cfg, scheme, point, t) for t in range(cfg.trials)]


def run_sweep(cfg: SimConfig):
    """Run all (scheme, snr, trial) combinations; returns (metrics, trials).

    Trials may execute in parallel processes; outputs are ordered by
    (scheme, point, trial) regardless of worker count.
    """
    tasks = [(cfg, scheme, p) for scheme in cfg.schemes for p in range(len(cfg.snr_db))]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            per_point = list(pool.map(_run_point, tasks))
    else:
        per_point = [_run_point(t) for t in tasks]

    all_trials = []
    metrics = []
    for (cfg_, scheme, point), results in zip(tasks, per_point):
        all_trials.extend(results)
        n = len(results)
        succ = sum(r.success for r in results)
        total_bits = sum(r.k for r in results)
        bit_err = sum(r.bit_errors for r in results)
        total_bytes = sum(r.n_bytes for r in results)
        byte_ok = total_bytes - sum(r.byte_errors for r in results)
        metrics.append(Metrics(
            scheme=scheme, snr_db=float(cfg.snr_db[point]), trials=n,
            ber=bit_err / total_bits, ber_ci=wilson_interval(bit_err, total_bits),
            prr=succ / n, prr_ci=wilson_interval(succ, n),
            brr=byte_ok / total_bytes if total_bytes else 0.0,
            brr_ci=wilson_interval(byte_ok, total_bytes) if total_bytes else (0.0, 1.0),
            goodput=goodput(results),
            mean_effective_rate=float(np.mean([r.effective_rate for r in results])),
        ))
    return metrics, all_trials


def _fmt(v) -> str:
    return f"{v:.10g}"


def metrics_csv(metrics) -> str:
    lines = [f"# {SNR_NOTE}", "scheme,snr_db,metric,value,ci_low,ci_high"]
    for m in metrics:
        rows = [
            ("ber", m.ber, m.ber_ci),
            ("prr", m.prr, m.prr_ci),
            ("brr", m.brr, m.brr_ci),
            ("goodput", m.goodput, None),
            ("mean_effective_rate", m.mean_effective_rate, None),
        ]
        for name, value, ci in rows:
            lo, hi = ("", "") if ci is None else (_fmt(ci[0]), _fmt(ci[1]))
            lines.append(f"{m.scheme},{_fmt(m.snr_db)},{name},{_fmt(value)},{lo},{hi}")
    return "\n".join(lines) + "\n"


def write_outputs(cfg: SimConfig, metrics, trials, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text(metrics_csv(metrics))
    with open(out / "trials.jsonl", "w") as fh:
        for t in trials:
            fh.write(t.to_json() + "\n")
    summary = {
        "snr_definition": SNR_NOTE,
        "config": {
            "n_fft": cfg.n_fft, "sigma2": cfg.sigma2, "snr_db": list(cfg.snr_db),
            "k": cfg.k, "leak": list(cfg.leak), "fb_loss": cfg.fb_loss,
            "trials": cfg.trials, "master_seed": cfg.master_seed,
            "schemes": list(cfg.schemes), "metric": cfg.metric,
        },
        "points": [
            {
                "scheme": m.scheme, "snr_db": m.snr_db, "trials": m.trials,
                "ber": m.ber, "prr": m.prr, "brr": m.brr,
                "goodput": m.goodput, "mean_effective_rate": m.mean_effective_rate,
            }
            for m in metrics
        ],
    }
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
