"""Executable sessions for key distribution and direct communication.

A session is single-shot: it runs the photon exchange, the verification
step, and either the reveal or an abort, and returns a full transcript.
Restarting after an abort is the caller's loop.

Randomness discipline (documented for byte-exact replay): the session's
master stream is split into role substreams alice=0, bob=1, channel=2 via
the SHA-256 rule in ``detqkd.rng``. Within each role the draws occur in a
fixed batch order:

* alice (key distribution): pair types for all photons, then bit values
  for all photons.
* alice (direct communication): per stream position, one uniform for the
  control decision and one more for the value when it is a control bit;
  then pair types for all positions in one batch.
* channel: loss uniforms for all photons (only when loss_probability > 0),
  then attacker measurement uniforms for all photons (only when an
  eavesdropper is configured).
* bob: basis choices for all photons, outcome uniforms for all photons,
  then (key distribution only) the check-subset draw.

Identical (configuration, seed) therefore reproduces the transcript
byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from detqkd.hilbert import StateVector, born_probabilities, inner, sample_outcome
from detqkd.rng import RandomStream
from detqkd.schemes import BITS, MINUS, PLUS, Scheme, infer_bit
from detqkd.adversary import InterceptResendStrategy

CONSISTENCY_TOL = 1e-10

REVEAL_TYPES = "REVEAL_TYPES"
CHECK_REQUEST = "CHECK_REQUEST"
CHECK_REPORT = "CHECK_REPORT"
CONTROL_POSITIONS = "CONTROL_POSITIONS"
KEY_REVEAL = "KEY_REVEAL"
ABORT = "ABORT"
MESSAGE_KINDS = (REVEAL_TYPES, CHECK_REQUEST, CHECK_REPORT, CONTROL_POSITIONS, KEY_REVEAL, ABORT)

VERDICT_KEY = "KEY"
VERDICT_MESSAGE = "MESSAGE"
VERDICT_ABORT = "ABORT"


@dataclass(frozen=True)
class ClassicalMessage:
    kind: str
    payload: dict

    def __post_init__(self):
        if self.kind not in MESSAGE_KINDS:
            raise ValueError(f"unknown message kind {self.kind!r}")


@dataclass
class PhotonRecord:
    """Per-photon row of a transcript."""

    index: int
    type_id: int
    bit: str
    control: bool = False
    lost: bool = False
    bob_basis: str | None = None
    outcome: int | None = None
    inferred: str | None = None


@dataclass(frozen=True)
class ChannelConfig:
    """Quantum channel model: optional attacker, optional loss."""

    eavesdropper: InterceptResendStrategy | None = None
    loss_probability: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.loss_probability < 1.0:
            raise ValueError("loss_probability must be in [0, 1)")


@dataclass
class Verdict:
    kind: str
    alice_key: str | None = None
    bob_key: str | None = None
    message: str | None = None
    reason: str | None = None


@dataclass
class SessionTranscript:
    scheme_name: str
    k: float | None
    records: list[PhotonRecord]
    messages: list[ClassicalMessage] = field(default_factory=list)
    verdict: Verdict | None = None


def consistency_check(sent: StateVector, detected: StateVector) -> bool:
    """True when the detected state is possible for the sent one."""
    return abs(inner(detected, sent)) ** 2 > CONSISTENCY_TOL


def transmit(
    channel: ChannelConfig, state: StateVector, rng: RandomStream
) -> StateVector | None:
    """Send one photon through the channel.

    Returns None when the photon is lost; otherwise the state arriving at
    Bob (the attacker's replacement when an eavesdropper is configured).
    """
    if channel.loss_probability > 0.0 and rng.uniform() < channel.loss_probability:
        return None
    if channel.eavesdropper is not None:
        outcome = sample_outcome(channel.eavesdropper.measurement, state, rng)
        return channel.eavesdropper.resend[outcome]
    return state


# --- internal sampling tables ---------------------------------------------

def _cumulative(probs: np.ndarray) -> tuple[float, ...]:
    acc = 0.0
    out = []
    for p in probs:
        acc += float(p)
        out.append(acc)
    return tuple(out)


def _draw(cum: tuple[float, ...], u: float) -> int:
    for j in range(len(cum) - 1):
        if u < cum[j]:
            return j
    return len(cum) - 1


class _SessionTables:
    """Cached Born-rule rows and decoding grids for one scheme/channel."""

    def __init__(self, scheme: Scheme, channel: ChannelConfig):
        self.scheme = scheme
        self.channel = channel
        self.labels = [b.label for b in scheme.bases()]
        signals = [(p.type_id, bit) for p in scheme.pairs for bit in BITS]
        self.signal_index = {sig: i for i, sig in enumerate(signals)}
        self.signal_states = [scheme.signal(t, b) for t, b in signals]

        # Bob's outcome rows for each signal in each basis (honest channel)
        self.honest_rows = [
            [_cumulative(born_probabilities(basis, st)) for basis in scheme.bases()]
            for st in self.signal_states
        ]
        self.evan_rows = None
        self.resend_rows = None
        if channel.eavesdropper is not None:
            meas = channel.eavesdropper.measurement
            self.evan_rows = [
                _cumulative(born_probabilities(meas, st)) for st in self.signal_states
            ]
            self.resend_rows = [
                [
                    _cumulative(born_probabilities(basis, res))
                    for basis in scheme.bases()
                ]
                for res in channel.eavesdropper.resend
            ]

        # decoding grid and consistency grid over (basis, outcome)
        self.infer = {}
        self.consistent = {}
        for bi, basis in enumerate(scheme.bases()):
            for outcome, det in enumerate(basis.vectors):
                for pair in scheme.pairs:
                    self.infer[(bi, outcome, pair.type_id)] = infer_bit(
                        scheme, det, pair.type_id
                    )
                for sig, si in self.signal_index.items():
                    self.consistent[(bi, outcome, si)] = consistency_check(
                        self.signal_states[si], det
                    )

    def bob_row(self, signal_idx: int, evan_outcome: int | None, basis_idx: int):
        if evan_outcome is None:
            return self.honest_rows[signal_idx][basis_idx]
        return self.resend_rows[evan_outcome][basis_idx]


def _exchange_photons(
    scheme: Scheme,
    channel: ChannelConfig,
    tables: _SessionTables,
    types: list[int],
    bits: list[str],
    rng_bob: RandomStream,
    rng_channel: RandomStream,
) -> list[PhotonRecord]:
    """Run the quantum half of a session; returns one record per photon."""
    n = len(types)
    loss_u = rng_channel.uniforms(n).tolist() if channel.loss_probability > 0.0 else None
    evan_u = rng_channel.uniforms(n).tolist() if channel.eavesdropper is not None else None
    basis_choice = rng_bob.integers(0, 2, size=n).tolist()
    bob_u = rng_bob.uniforms(n).tolist()

    records = []
    for i in range(n):
        rec = PhotonRecord(index=i, type_id=types[i], bit=bits[i])
        if loss_u is not None and loss_u[i] < channel.loss_probability:
            rec.lost = True
            records.append(rec)
            continue
        si = tables.signal_index[(types[i], bits[i])]
        evan_outcome = None
        if evan_u is not None:
            evan_outcome = _draw(tables.evan_rows[si], evan_u[i])
        bi = basis_choice[i]
        rec.bob_basis = tables.labels[bi]
        rec.outcome = _draw(tables.bob_row(si, evan_outcome, bi), bob_u[i])
        records.append(rec)
    return records


def _verify_report(
    tables: _SessionTables, records: list[PhotonRecord], positions: list[int]
) -> list[int]:
    """Alice's scan of Bob's reported outcomes; returns inconsistent positions."""
    bad = []
    for pos in positions:
        rec = records[pos]
        bi = tables.labels.index(rec.bob_basis)
        si = tables.signal_index[(rec.type_id, rec.bit)]
        if not tables.consistent[(bi, rec.outcome, si)]:
            bad.append(pos)
    return bad


def _check_report_payload(records: list[PhotonRecord], positions: list[int]) -> dict:
    return {
        "positions": positions,
        "bases": [records[p].bob_basis for p in positions],
        "outcomes": [records[p].outcome for p in positions],
    }


def run_qkd_session(
    scheme: Scheme,
    key_bits: int,
    check_count: int,
    channel: ChannelConfig,
    rng: RandomStream,
) -> SessionTranscript:
    """One key-distribution session.

    Alice sends key_bits + check_count photons with uniformly random
    (pair, bit) choices; Bob measures a fair random basis per photon, then
    reveals his outcomes on a random check subset. Any outcome orthogonal
    to the state Alice sent aborts the session before the type reveal;
    otherwise Alice reveals every pair type and both sides end up with the
    same key over the non-check photons.
    """
    if key_bits < 1:
        raise ValueError("key_bits must be >= 1")
    if check_count < 0:
        raise ValueError("check_count must be >= 0")

    rng_alice = rng.substream(0)
    rng_bob = rng.substream(1)
    rng_channel = rng.substream(2)
    tables = _SessionTables(scheme, channel)

    n = key_bits + check_count
    n_types = len(scheme.pairs)
    types = [int(t) for t in rng_alice.integers(1, n_types + 1, size=n)]
    bits = [BITS[int(b)] for b in rng_alice.integers(0, 2, size=n)]

    records = _exchange_photons(scheme, channel, tables, types, bits, rng_bob, rng_channel)
    transcript = SessionTranscript(scheme.name, scheme.k, records)

    received = [r.index for r in records if not r.lost]
    lost = [r.index for r in records if r.lost]

    check_positions: list[int] = []
    if check_count > 0 and received:
        chosen = rng_bob.subset(len(received), min(check_count, len(received)))
        check_positions = [received[i] for i in chosen]
        for pos in check_positions:
            records[pos].control = True
        transcript.messages.append(
            ClassicalMessage(CHECK_REQUEST, {"positions": check_positions, "lost_positions": lost})
        )
        transcript.messages.append(
            ClassicalMessage(CHECK_REPORT, _check_report_payload(records, check_positions))
        )

    bad = _verify_report(tables, records, check_positions)
    if bad:
        transcript.messages.append(
            ClassicalMessage(ABORT, {"reason": "inconsistent check outcomes", "positions": bad})
        )
        transcript.verdict = Verdict(VERDICT_ABORT, reason="inconsistent check outcomes")
        return transcript

    transcript.messages.append(
        ClassicalMessage(
            REVEAL_TYPES, {"positions": received, "types": [records[p].type_id for p in received]}
        )
    )
    for pos in received:
        rec = records[pos]
        bi = tables.labels.index(rec.bob_basis)
        rec.inferred = tables.infer[(bi, rec.outcome, rec.type_id)]

    key_positions = [p for p in received if not records[p].control]
    alice_key = "".join(records[p].bit for p in key_positions)
    bob_key = "".join(records[p].inferred for p in key_positions)
    transcript.verdict = Verdict(VERDICT_KEY, alice_key=alice_key, bob_key=bob_key)
    return transcript


def run_direct_comm_session(
    scheme: Scheme,
    message: str,
    control_fraction: float,
    channel: ChannelConfig,
    rng: RandomStream,
) -> SessionTranscript:
    """One direct confidential communication session (six steps).

    Alice draws a private type sequence, intersperses control bits into
    the message, and sends one photon per stream position. After Bob's
    detections she reveals the control positions, he reports those
    outcomes, and she verifies them. Only then is the type sequence
    revealed, from which Bob reconstructs exactly the message bits.
    """
    if scheme.name != "three-one":
        raise ValueError("direct communication requires the three-one scheme")
    if not 0.0 < control_fraction < 1.0:
        raise ValueError("control_fraction must be in (0, 1)")
    message = str(message)
    if not message or any(b not in BITS for b in message):
        raise ValueError("message must be a nonempty string over '+' and '-'")

    rng_alice = rng.substream(0)
    rng_bob = rng.substream(1)
    rng_channel = rng.substream(2)
    tables = _SessionTables(scheme, channel)

    # steps one and two: the private type key and the interleaved stream
    bits: list[str] = []
    controls: list[bool] = []
    mi = 0
    while mi < len(message):
        if rng_alice.uniform() < control_fraction:
            controls.append(True)
            bits.append(PLUS if rng_alice.uniform() < 0.5 else MINUS)
        else:
            controls.append(False)
            bits.append(message[mi])
            mi += 1
    n = len(bits)
    types = [int(t) for t in rng_alice.integers(1, len(scheme.pairs) + 1, size=n)]

    # step three: the photons
    records = _exchange_photons(scheme, channel, tables, types, bits, rng_bob, rng_channel)
    for i in range(n):
        records[i].control = controls[i]
    transcript = SessionTranscript(scheme.name, scheme.k, records)

    # step four: control positions out, control outcomes back
    control_positions = [r.index for r in records if r.control]
    reported = [p for p in control_positions if not records[p].lost]
    transcript.messages.append(ClassicalMessage(CONTROL_POSITIONS, {"positions": control_positions}))
    transcript.messages.append(
        ClassicalMessage(CHECK_REPORT, _check_report_payload(records, reported))
    )

    # step five: verification
    bad = _verify_report(tables, records, reported)
    if bad:
        transcript.messages.append(
            ClassicalMessage(ABORT, {"reason": "inconsistent control outcomes", "positions": bad})
        )
        transcript.verdict = Verdict(VERDICT_ABORT, reason="inconsistent control outcomes")
        return transcript

    # step six: the type sequence, and Bob's reconstruction
    transcript.messages.append(ClassicalMessage(KEY_REVEAL, {"types": types}))
    out = []
    for rec in records:
        if rec.lost:
            continue
        bi = tables.labels.index(rec.bob_basis)
        rec.inferred = tables.infer[(bi, rec.outcome, rec.type_id)]
        if not rec.control:
            out.append(rec.inferred)
    transcript.verdict = Verdict(VERDICT_MESSAGE, message="".join(out))
    return transcript


def replay_direct_comm(
    scheme: Scheme,
    types: list[int],
    bits: list[str],
    control_positions: list[int],
    outcomes: list[tuple[str, int]],
) -> SessionTranscript:
    """Deterministic direct-communication replay with forced choices.

    Drives the session with a fixed type sequence, bit stream, control
    placement and Bob detection sequence (as (basis label, outcome index)
    pairs) instead of random draws. Used to replay published traces.
    """
    if scheme.name != "three-one":
        raise ValueError("direct communication requires the three-one scheme")
    if not (len(types) == len(bits) == len(outcomes)):
        raise ValueError("types, bits and outcomes must have equal length")
    tables = _SessionTables(scheme, ChannelConfig())
    records = []
    for i, (t, b, (label, outcome)) in enumerate(zip(types, bits, outcomes)):
        rec = PhotonRecord(index=i, type_id=t, bit=b, control=i in set(control_positions))
        rec.bob_basis = label
        rec.outcome = int(outcome)
        records.append(rec)
    transcript = SessionTranscript(scheme.name, scheme.k, records)
    reported = [p for p in control_positions]
    transcript.messages.append(ClassicalMessage(CONTROL_POSITIONS, {"positions": reported}))
    transcript.messages.append(
        ClassicalMessage(CHECK_REPORT, _check_report_payload(records, reported))
    )
    bad = _verify_report(tables, records, reported)
    if bad:
        transcript.messages.append(
            ClassicalMessage(ABORT, {"reason": "inconsistent control outcomes", "positions": bad})
        )
        transcript.verdict = Verdict(VERDICT_ABORT, reason="inconsistent control outcomes")
        return transcript
    transcript.messages.append(ClassicalMessage(KEY_REVEAL, {"types": list(types)}))
    out = []
    for rec in records:
        bi = tables.labels.index(rec.bob_basis)
        rec.inferred = tables.infer[(bi, rec.outcome, rec.type_id)]
        if not rec.control:
            out.append(rec.inferred)
    transcript.verdict = Verdict(VERDICT_MESSAGE, message="".join(out))
    return transcript


# --- analysis helpers -------------------------------------------------------

def observed_inconsistencies(scheme: Scheme, transcript: SessionTranscript) -> tuple[int, int]:
    """(number of impossible outcomes, number of measured photons) over the
    whole transcript, using simulator-side truth for every photon."""
    tables = _SessionTables(scheme, ChannelConfig())
    bad = 0
    measured = 0
    for rec in transcript.records:
        if rec.lost or rec.outcome is None:
            continue
        measured += 1
        bi = tables.labels.index(rec.bob_basis)
        si = tables.signal_index[(rec.type_id, rec.bit)]
        if not tables.consistent[(bi, rec.outcome, si)]:
            bad += 1
    return bad, measured


# --- serialization -----------------------------------------------------------

def transcript_to_json(transcript: SessionTranscript) -> dict:
    """Stable-field-order JSON form of a transcript."""
    verdict: dict = {"kind": transcript.verdict.kind}
    if transcript.verdict.alice_key is not None:
        verdict["alice_key"] = transcript.verdict.alice_key
    if transcript.verdict.bob_key is not None:
        verdict["bob_key"] = transcript.verdict.bob_key
    if transcript.verdict.message is not None:
        verdict["message"] = transcript.verdict.message
    if transcript.verdict.reason is not None:
        verdict["reason"] = transcript.verdict.reason
    return {
        "scheme": {"name": transcript.scheme_name, "k": transcript.k},
        "photons": [
            {
                "index": r.index,
                "type": r.type_id,
                "bit": r.bit,
                "control": r.control,
                "lost": r.lost,
                "basis": r.bob_basis,
                "outcome": r.outcome,
                "inferred": r.inferred,
            }
            for r in transcript.records
        ],
        "messages": [{"kind": m.kind, "payload": m.payload} for m in transcript.messages],
        "verdict": verdict,
    }


def transcript_to_text(transcript: SessionTranscript) -> str:
    return json.dumps(transcript_to_json(transcript), indent=2) + "\n"
