"""Two-stage FBER-driven incremental-redundancy protocol over a punctured mother code.

A session encodes K info bits once into a mother polar code whose length is
the smallest power of two at least 8K (deep enough for rate 1/8).  Stage 1
transmits the K info positions plus enough reliability-ordered parity to
realize rate 3/4.  If the gateway's decode fails its CRC, it maps the frozen
bit error ratio to one of four deeper rates and feeds that back; stage 2 then
transmits exactly the additional parity positions the requested rate needs.
Because both stages draw from one codeword, the gateway combines per-position
LLRs across frames and decodes the mother code with zeros at the positions it
never received.

Headers and the CRC ride the excitation link and are modeled error-free; the
feedback path is a logical channel with a configurable loss probability.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from .construction import CodeSpec, design_code
from .decoding import BpConfig, bp_decode, combine_llrs
from .encoding import encode_systematic

__all__ = [
    "RATE_TABLE",
    "STAGE1_RATE",
    "TIMEOUT_FALLBACK_RATE",
    "PacketHeader",
    "Frame",
    "FeedbackMsg",
    "SessionPlan",
    "GatewaySession",
    "header_encode",
    "header_decode",
    "crc16",
    "crc16_verify",
    "estimate_rate",
    "rate_code_of",
    "rate_from_code",
    "plan_session",
    "tag_stage1",
    "tag_stage2",
    "gateway_on_frame",
    "feedback_channel",
    "frame_to_wire",
    "frame_from_wire",
    "bits_to_hex",
    "hex_to_bits",
]

# Stage-2 code rates, mildest first; the 2-bit header rate field indexes this.
RATE_TABLE = (Fraction(2, 3), Fraction(1, 2), Fraction(1, 4), Fraction(1, 8))
# FBER interval lower edges paired with RATE_TABLE entries; below the first
# edge the mildest rate applies.
_FBER_EDGES = (0.1, 0.3, 0.5, 0.7)

STAGE1_RATE = Fraction(3, 4)
# Rate used when the tag times out waiting for feedback and cannot know what
# the gateway asked for.
TIMEOUT_FALLBACK_RATE = Fraction(2, 3)

CRC_POLY = 0x1021  # x^16 + x^12 + x^5 + 1
CRC_INIT = 0xFFFF


@dataclass(frozen=True)
class PacketHeader:
    """7-bit header: rate(2) | length(4) | id(1), most significant first.

    rate_code indexes RATE_TABLE and is meaningful on second frames
    (packet_id 1); first frames carry 0 there.  length_code is the payload
    length in bytes minus one, modulo 16.
    """

    rate_code: int
    length_code: int
    packet_id: int

    def __post_init__(self):
        if not 0 <= self.rate_code < 4:
            raise ValueError("rate_code must fit 2 bits")
        if not 0 <= self.length_code < 16:
            raise ValueError("length_code must fit 4 bits")
        if self.packet_id not in (0, 1):
            raise ValueError("packet_id must be 0 or 1")


@dataclass(frozen=True)
class Frame:
    """On-air frame: header, carried mother-code positions, their bits,
    and (on first frames only) a 16-bit CRC of the info block."""

    header: PacketHeader
    payload_positions: np.ndarray
    payload_bits: np.ndarray
    crc: Optional[int] = None

    def __post_init__(self):
        if len(self.payload_positions) != len(self.payload_bits):
            raise ValueError("payload length must match position count")
        has_crc = self.crc is not None
        if has_crc != (self.header.packet_id == 0):
            raise ValueError("CRC must be present exactly on first frames")


@dataclass(frozen=True)
class FeedbackMsg:
    """Gateway-to-tag message: an ACK or a rate request, with modeled delivery."""

    kind: str  # "ack" | "request_rate"
    rate: Optional[Fraction] = None
    delivered: bool = True

    def __post_init__(self):
        if self.kind not in ("ack", "request_rate"):
            raise ValueError(f"unknown feedback kind {self.kind!r}")
        if (self.kind == "request_rate") != (self.rate is not None):
            raise ValueError("request_rate carries a rate; ack does not")


def header_encode(h: PacketHeader) -> np.ndarray:
    """Pack a header into 7 bits, most significant field bit first."""
    v = (h.rate_code << 5) | (h.length_code << 1) | h.packet_id
    return ((v >> np.arange(6, -1, -1)) & 1).astype(np.uint8)


def header_decode(bits) -> PacketHeader:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape != (7,):
        raise ValueError(f"header must be 7 bits, got shape {bits.shape}")
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return PacketHeader(rate_code=(v >> 5) & 3, length_code=(v >> 1) & 0xF, packet_id=v & 1)


def crc16(bits) -> int:
    """CRC-16 over a bit sequence: poly 0x1021, init 0xFFFF, no reflection."""
    reg = CRC_INIT
    for b in np.asarray(bits, dtype=np.uint8):
        top = ((reg >> 15) ^ int(b)) & 1
        reg = (reg << 1) & 0xFFFF
        if top:
            reg ^= CRC_POLY
    return reg


def crc16_verify(bits, crc: int) -> bool:
    return crc16(bits) == crc


def estimate_rate(fber: float) -> Fraction:
    """Map a frozen bit error ratio to the stage-2 code rate.

    Intervals [0.1,0.3) -> 2/3, [0.3,0.5) -> 1/2, [0.5,0.7) -> 1/4,
    [0.7,1.0] -> 1/8; below 0.1 the mildest redundancy step (2/3) applies.
    """
    if not 0.0 <= fber <= 1.0:
        raise ValueError(f"fber must be in [0, 1], got {fber}")
    choice = RATE_TABLE[0]
    for edge, rate in zip(_FBER_EDGES, RATE_TABLE):
        if fber >= edge:
            choice = rate
    return choice


def rate_code_of(rate: Fraction) -> int:
    return RATE_TABLE.index(rate)


def rate_from_code(code: int) -> Fraction:
    return RATE_TABLE[code]


def _budget(k: int, rate: Fraction) -> int:
    # round half up keeps budgets deterministic for odd K
    num = Fraction(k, 1) / rate
    return int(num) if num.denominator == 1 else int(num + Fraction(1, 2))


@dataclass(frozen=True)
class SessionPlan:
    """Budgets and position schedule for one session's mother code."""

    k: int
    spec: CodeSpec = field(repr=False)
    stage1_budget: int

    @property
    def n_mother(self) -> int:
        return self.spec.n

    def cumulative_budget(self, rate: Fraction) -> int:
        """Total coded bits on air once stage 2 at ``rate`` completes."""
        if rate not in RATE_TABLE:
            raise ValueError(f"rate {rate} not in table")
        return _budget(self.k, rate)

    def stage1_positions(self) -> np.ndarray:
        """Info positions (ascending) then the strongest parity positions."""
        n_parity = self.stage1_budget - self.k
        return np.concatenate([self.spec.info_set, self.spec.parity_schedule[:n_parity]])

    def stage2_positions(self, rate: Fraction) -> np.ndarray:
        """Parity positions stage 2 adds beyond stage 1, schedule order."""
        start = self.stage1_budget - self.k
        stop = self.cumulative_budget(rate) - self.k
        return self.spec.parity_schedule[start:stop]


@lru_cache(maxsize=32)
def plan_session(k: int) -> SessionPlan:
    """Build the session plan for K info bits.

    The mother code length is the smallest power of two holding rate 1/8
    (8K coded bits); the stage-1 budget realizes rate 3/4.
    """
    if not 8 <= k <= 512:
        raise ValueError(f"k must be in [8, 512], got {k}")
    n_log2 = (8 * k - 1).bit_length()
    spec = design_code(n_log2, k)
    return SessionPlan(k=k, spec=spec, stage1_budget=_budget(k, STAGE1_RATE))


def _length_code(k: int) -> int:
    return ((k // 8) - 1) % 16


def tag_stage1(info, plan: SessionPlan) -> Frame:
    """Encode once, send info plus the first scheduled parity, CRC appended."""
    info = np.asarray(info, dtype=np.uint8)
    codeword = encode_systematic(info, plan.spec)
    positions = plan.stage1_positions()
    header = PacketHeader(rate_code=0, length_code=_length_code(plan.k), packet_id=0)
    return Frame(header=header, payload_positions=positions,
                 payload_bits=codeword[positions], crc=crc16(info))


def tag_stage2(info, plan: SessionPlan, requested_rate: Fraction) -> Frame:
    """Send only the extra parity the requested rate needs; no CRC."""
    info = np.asarray(info, dtype=np.uint8)
    codeword = encode_systematic(info, plan.spec)
    positions = plan.stage2_positions(requested_rate)
    header = PacketHeader(rate_code=rate_code_of(requested_rate),
                          length_code=_length_code(plan.k), packet_id=1)
    return Frame(header=header, payload_positions=positions,
                 payload_bits=codeword[positions], crc=None)


@dataclass
class GatewaySession:
    """Gateway-side decode state across the frames of one session."""

    plan: SessionPlan
    bp_config: BpConfig = field(default_factory=BpConfig)
    combined: np.ndarray = None
    seen_ids: set = field(default_factory=set)
    expected_crc: Optional[int] = None
    decisions: list = field(default_factory=list)
    last_fber: float = 0.0
    last_info: np.ndarray = None
    succeeded: bool = False

    def __post_init__(self):
        if self.combined is None:
            self.combined = np.zeros(self.plan.n_mother)


def gateway_on_frame(frame: Frame, llrs, session: GatewaySession) -> dict:
    """Fold one received frame into the session and decide what to do next.

    ``llrs`` are the demodulated per-position LLRs aligned with
    frame.payload_positions.  Returns the decision record, one of
    {"ack"} | {"request_rate", rate} | {"fail"}; a frame with an already-seen
    packet id is ignored (the combine stays idempotent per position set).

    Frames must arrive in id order: a second frame before a first is an
    error.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.shape != frame.payload_positions.shape:
        raise ValueError("llrs must align with frame positions")
    pid = frame.header.packet_id
    if pid == 1 and 0 not in session.seen_ids:
        raise ValueError("second frame received before first")
    if pid in session.seen_ids:
        decision = {"action": "duplicate_ignored", "packet_id": pid}
        session.decisions.append(decision)
        return decision
    session.seen_ids.add(pid)
    if session.succeeded:
        # already decoded and acknowledged; the extra frame (a lost-ACK
        # retransmission) changes nothing
        decision = {"action": "ack", "packet_id": pid, "fber": session.last_fber}
        session.decisions.append(decision)
        return decision

    frame_llrs = np.zeros(session.plan.n_mother)
    frame_llrs[frame.payload_positions] = llrs
    session.combined = combine_llrs([session.combined, frame_llrs])
    if pid == 0:
        session.expected_crc = frame.crc

    # CRC-gated early stop: frozen consistency alone fires too early on a
    # heavily punctured graph, before the info positions settle
    cfg = BpConfig(
        max_iters=session.bp_config.max_iters,
        update_rule=session.bp_config.update_rule,
        early_stop="crc",
        crc_check=lambda bits: crc16_verify(bits, session.expected_crc),
    )
    result = bp_decode(session.combined, session.plan.spec, cfg)
    # puncturing leaves most frozen pilots unobservable, so the rate
    # estimator reads the statistic over observed pilots only
    fber = result.fber_observed
    session.last_fber = fber
    session.last_info = result.info_bits
    ok = crc16_verify(result.info_bits, session.expected_crc)
    if ok:
        session.succeeded = True
        decision = {"action": "ack", "packet_id": pid, "fber": fber}
    elif pid == 0:
        rate = estimate_rate(fber)
        decision = {"action": "request_rate", "packet_id": pid, "fber": fber,
                    "rate": str(rate)}
    else:
        decision = {"action": "fail", "packet_id": pid, "fber": fber}
    session.decisions.append(decision)
    return decision


def feedback_channel(msg: FeedbackMsg, loss_prob: float, rng_seed) -> FeedbackMsg:
    """Pass a feedback message through a Bernoulli loss channel."""
    if not 0.0 <= loss_prob < 1.0:
        raise ValueError(f"loss_prob must be in [0, 1), got {loss_prob}")
    rng = np.random.default_rng(rng_seed)
    lost = bool(rng.random() < loss_prob)
    return FeedbackMsg(kind=msg.kind, rate=msg.rate, delivered=not lost)


# ---------------------------------------------------------------------------
# wire format: header hex | comma-separated positions | payload hex | crc hex
# ---------------------------------------------------------------------------

def bits_to_hex(bits) -> str:
    """Pack bits into hex: first bit is the most significant bit of the
    first nibble; trailing pad bits are zero."""
    bits = np.asarray(bits, dtype=np.uint8)
    out = []
    for i in range(0, len(bits), 4):
        nib = 0
        chunk = bits[i:i + 4]
        for j, b in enumerate(chunk):
            nib |= int(b) << (3 - j)
        out.append(f"{nib:x}")
    return "".join(out)


def hex_to_bits(s: str, nbits: int) -> np.ndarray:
    """Unpack the first nbits bits of a hex string (inverse of bits_to_hex)."""
    if len(s) * 4 < nbits:
        raise ValueError(f"hex string too short for {nbits} bits")
    bits = np.zeros(len(s) * 4, dtype=np.uint8)
    for i, ch in enumerate(s):
        nib = int(ch, 16)
        for j in range(4):
            bits[4 * i + j] = (nib >> (3 - j)) & 1
    if np.any(bits[nbits:]):
        raise ValueError("nonzero pad bits")
    return bits[:nbits]


def frame_to_wire(frame: Frame) -> str:
    parts = [
        bits_to_hex(header_encode(frame.header)),
        ",".join(str(int(p)) for p in frame.payload_positions),
        bits_to_hex(frame.payload_bits),
    ]
    if frame.crc is not None:
        parts.append(f"{frame.crc:04x}")
    return " ".join(parts)


def frame_from_wire(line: str) -> Frame:
    parts = line.split()
    if len(parts) not in (3, 4):
        raise ValueError(f"malformed frame line: {line!r}")
    header = header_decode(hex_to_bits(parts[0], 7))
    positions = np.array([int(p) for p in parts[1].split(",")], dtype=np.int64)
    bits = hex_to_bits(parts[2], len(positions))
    crc = int(parts[3], 16) if len(parts) == 4 else None
    return Frame(header=header, payload_positions=positions, payload_bits=bits, crc=crc)
