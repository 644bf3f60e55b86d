"""Command-line front end: scheme validation and dumps, Monte Carlo
sessions, attack optimization sweeps, and guessing-odds reports.

Exit codes: 0 success, 1 assertion or check failure, 2 usage error.
All stochastic commands take --seed (fallback: the DETQKD_SEED environment
variable); when neither is given a fresh seed is generated and recorded in
the output.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import secrets
import sys
import time

from detqkd import KERNEL_BACKEND
from detqkd import adversary, protocol, schemes
from detqkd.rng import RandomStream

USAGE_ERROR = 2
CHECK_FAILURE = 1
SWEEP_FLAG_THRESHOLD = 1e-3

# Expected decoding grids for the published two-pair and three-one layouts,
# used as independent fixtures against the orthogonality-derived grids.
# Two-pair: one pattern per type over detectors 1..4, identical for both
# bases. Three-one: (B pattern, B' pattern) per type.
TWO_PAIR_EXPECTED = {1: "++--", 2: "+-+-"}
THREE_ONE_EXPECTED = {
    1: ("+---", "-+++"),
    2: ("-+--", "+-++"),
    3: ("--+-", "++-+"),
    4: ("---+", "+++-"),
}

# The published direct-communication trace: type row, bit row (controls at
# stream positions 1 and 6, zero-indexed), the expected states-sent row and
# Bob's detection row.
REPLAY_TYPES = [1, 3, 4, 4, 1, 2, 1, 3, 3]
REPLAY_BITS = ["+", "+", "-", "-", "-", "+", "-", "+", "-"]
REPLAY_CONTROLS = [1, 6]
REPLAY_STATES_SENT = ["1+", "3+", "4-", "4-", "1-", "2+", "1-", "3+", "3-"]
REPLAY_BOB_FINDS = ["B1", "B'1", "B'4", "B2", "B2", "B'4", "B4", "B3", "B'3"]
REPLAY_EXPECTED_MESSAGE = "+---++-"


def _resolve_seed(value: int | None) -> tuple[int, bool]:
    if value is not None:
        return int(value), False
    env = os.environ.get("DETQKD_SEED")
    if env is not None:
        return int(env), False
    return secrets.randbits(48), True


def _emit(obj: dict, out: str | None) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _usage(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return USAGE_ERROR


def _build_scheme(name: str, k: float | None):
    return schemes.build_scheme(name, k)


def _grid_fixture_checks(scheme: schemes.Scheme) -> list[dict]:
    """Compare the runtime decoding grid with the published sign patterns."""
    checks = []
    grid = schemes.inference_grid(scheme)
    if scheme.name in ("product", "k"):
        ok = True
        for type_id, pattern in TWO_PAIR_EXPECTED.items():
            for outcome, expected in enumerate(pattern):
                for label in ("B", "B'"):
                    ok = ok and grid[(label, outcome, type_id)] == expected
        checks.append(
            {
                "name": "inference_grid_two_pair",
                "passed": ok,
                "detail": "runtime grid vs published sign pattern",
            }
        )
    if scheme.name == "three-one":
        ok = True
        for type_id, (row_b, row_bp) in THREE_ONE_EXPECTED.items():
            for outcome in range(4):
                ok = ok and grid[("B", outcome, type_id)] == row_b[outcome]
                ok = ok and grid[("B'", outcome, type_id)] == row_bp[outcome]
        checks.append(
            {
                "name": "inference_grid_three_one",
                "passed": ok,
                "detail": "runtime grid vs published sign pattern",
            }
        )
    return checks


def _cmd_scheme_validate(args) -> int:
    try:
        scheme = _build_scheme(args.name, args.k)
    except schemes.DegenerateParameterError as exc:
        return _usage(str(exc))
    except ValueError as exc:
        return _usage(str(exc))
    checks = schemes.validation_checks(scheme) + _grid_fixture_checks(scheme)
    all_passed = all(c["passed"] for c in checks)
    _emit(
        {"scheme": scheme.name, "k": scheme.k, "checks": checks, "all_passed": all_passed},
        args.out,
    )
    return 0 if all_passed else CHECK_FAILURE


def _cmd_scheme_dump(args) -> int:
    try:
        scheme = _build_scheme(args.name, args.k)
    except ValueError as exc:
        return _usage(str(exc))
    _emit(schemes.scheme_to_json(scheme), args.out)
    return 0


def _make_channel(args, scheme, rng: RandomStream) -> tuple[protocol.ChannelConfig, dict]:
    """Channel from the --evan/--loss flags, plus report metadata."""
    meta: dict = {"evan": args.evan}
    strategy = None
    if args.evan_file:
        with open(args.evan_file, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        strategy = adversary.InterceptResendStrategy(
            measurement=_basis_from_json(data["strategy"]["measurement"]),
            resend=tuple(_state_from_json(s) for s in data["strategy"]["resend"]),
        )
        meta["evan"] = "file"
        meta["evan_file"] = args.evan_file
    elif args.evan == "naive":
        strategy = adversary.naive_strategy(scheme)
    elif args.evan == "optimal":
        report = adversary.optimize_strategy(
            scheme, restarts=args.evan_restarts, tolerance=args.tol, rng=rng.substream("eve")
        )
        strategy = report.best_strategy
        meta["evan_p_min"] = report.p_min
        meta["evan_converged"] = report.converged
    channel = protocol.ChannelConfig(eavesdropper=strategy, loss_probability=args.loss)
    return channel, meta


def _state_from_json(data):
    from detqkd.hilbert import state_from_json

    return state_from_json(data)


def _basis_from_json(data):
    from detqkd.hilbert import basis_from_json

    return basis_from_json(data)


def _session_stats(scheme, transcripts) -> dict:
    bad = 0
    measured = 0
    for t in transcripts:
        b, m = protocol.observed_inconsistencies(scheme, t)
        bad += b
        measured += m
    rate = bad / measured if measured else 0.0
    return {"inconsistent_outcomes": bad, "measured_photons": measured, "observed_rate": rate}


def _cmd_qkd(args) -> int:
    if args.photons < 1:
        return _usage("--photons must be >= 1")
    if not 0 <= args.check < args.photons:
        return _usage("--check must be in [0, photons)")
    seed, generated = _resolve_seed(args.seed)
    try:
        scheme = _build_scheme(args.scheme, args.k)
    except ValueError as exc:
        return _usage(str(exc))
    master = RandomStream(seed)
    try:
        channel, evan_meta = _make_channel(args, scheme, master)
    except (OSError, ValueError, KeyError) as exc:
        return _usage(f"cannot configure the channel: {exc}")

    key_bits = args.photons - args.check
    transcripts = [
        protocol.run_qkd_session(
            scheme, key_bits, args.check, channel, master.substream(f"session-{i}")
        )
        for i in range(args.sessions)
    ]
    stats = _session_stats(scheme, transcripts)

    summary = {
        "command": "qkd",
        "seed": seed,
        "seed_generated": generated,
        "kernel_backend": KERNEL_BACKEND,
        "scheme": scheme.name,
        "k": scheme.k,
        "photons": args.photons,
        "check_count": args.check,
        "key_bits_requested": key_bits,
        "sessions": args.sessions,
        "loss_probability": args.loss,
        **evan_meta,
        "verdicts": [t.verdict.kind for t in transcripts],
        "observed": stats,
    }
    reference = adversary.reference_error_rate(scheme)
    if reference is not None:
        summary["p_min_closed_form"] = reference
        summary["undetected_attack_bound"] = {
            "value": (1.0 - reference) ** args.check,
            "formula": "(1 - p_min_closed_form) ** check_count",
        }
        if channel.eavesdropper is not None and stats["measured_photons"] > 0:
            n = stats["measured_photons"]
            sigma = math.sqrt(reference * (1.0 - reference) / n)
            band = [reference - 3.0 * sigma, reference + 3.0 * sigma]
            summary["expected_rate"] = reference
            summary["sigma"] = sigma
            summary["band_3sigma"] = band
            summary["within_band"] = band[0] <= stats["observed_rate"] <= band[1]
    first = transcripts[0]
    if first.verdict.kind == protocol.VERDICT_KEY:
        summary["keys_match"] = first.verdict.alice_key == first.verdict.bob_key
    out = {"summary": summary}
    if not args.summary_only and args.sessions == 1:
        out["transcript"] = protocol.transcript_to_json(first)
    _emit(out, args.out)
    return 0


def _cmd_comm(args) -> int:
    if args.replay_table3:
        return _run_replay_table3(args)
    if not args.message:
        return _usage("--message is required (or use --replay-table3)")
    seed, generated = _resolve_seed(args.seed)
    scheme = schemes.three_one_scheme()
    master = RandomStream(seed)
    try:
        channel, evan_meta = _make_channel(args, scheme, master)
    except (OSError, ValueError, KeyError) as exc:
        return _usage(f"cannot configure the channel: {exc}")
    try:
        transcripts = [
            protocol.run_direct_comm_session(
                scheme, args.message, args.control_fraction, channel, master.substream(f"session-{i}")
            )
            for i in range(args.sessions)
        ]
    except ValueError as exc:
        return _usage(str(exc))

    aborts = sum(1 for t in transcripts if t.verdict.kind == protocol.VERDICT_ABORT)
    summary = {
        "command": "comm",
        "seed": seed,
        "seed_generated": generated,
        "scheme": scheme.name,
        "message_length": len(args.message),
        "control_fraction": args.control_fraction,
        "sessions": args.sessions,
        "loss_probability": args.loss,
        **evan_meta,
        "verdicts": [t.verdict.kind for t in transcripts],
        "abort_rate": aborts / args.sessions,
        "observed": _session_stats(scheme, transcripts),
    }
    first = transcripts[0]
    if first.verdict.kind == protocol.VERDICT_MESSAGE:
        summary["message_delivered"] = first.verdict.message
        summary["message_exact"] = first.verdict.message == args.message
    out = {"summary": summary}
    if not args.summary_only and args.sessions == 1:
        out["transcript"] = protocol.transcript_to_json(first)
    _emit(out, args.out)
    return 0


def _run_replay_table3(args) -> int:
    scheme = schemes.three_one_scheme()
    states_sent = [f"{t}{b}" for t, b in zip(REPLAY_TYPES, REPLAY_BITS)]
    outcomes = []
    for token in REPLAY_BOB_FINDS:
        label = "B'" if token.startswith("B'") else "B"
        outcomes.append((label, int(token[len(label):]) - 1))
    transcript = protocol.replay_direct_comm(
        scheme, REPLAY_TYPES, REPLAY_BITS, REPLAY_CONTROLS, outcomes
    )
    checks = [
        {
            "name": "states_sent_row",
            "passed": states_sent == REPLAY_STATES_SENT,
            "detail": " ".join(states_sent),
        },
        {
            "name": "verdict_message",
            "passed": transcript.verdict.kind == protocol.VERDICT_MESSAGE,
            "detail": transcript.verdict.kind,
        },
        {
            "name": "reconstructed_message",
            "passed": transcript.verdict.message == REPLAY_EXPECTED_MESSAGE,
            "detail": transcript.verdict.message or "",
        },
    ]
    ok = all(c["passed"] for c in checks)
    _emit(
        {
            "command": "comm --replay-table3",
            "rows": {
                "types": REPLAY_TYPES,
                "bits": REPLAY_BITS,
                "control_positions": REPLAY_CONTROLS,
                "states_sent": states_sent,
                "bob_finds": REPLAY_BOB_FINDS,
            },
            "reconstructed_message": transcript.verdict.message,
            "checks": checks,
            "transcript": protocol.transcript_to_json(transcript),
        },
        args.out,
    )
    return 0 if ok else CHECK_FAILURE


def _cmd_eve_optimize(args) -> int:
    seed, generated = _resolve_seed(args.seed)
    try:
        scheme = _build_scheme(args.scheme, args.k)
    except ValueError as exc:
        return _usage(str(exc))
    started = time.perf_counter()
    report = adversary.optimize_strategy(
        scheme, restarts=args.restarts, tolerance=args.tol, rng=RandomStream(seed)
    )
    elapsed = time.perf_counter() - started
    reference = adversary.reference_error_rate(scheme)
    out = {
        "command": "eve optimize",
        "seed": seed,
        "seed_generated": generated,
        "kernel_backend": KERNEL_BACKEND,
        "scheme": scheme.name,
        "k": scheme.k,
        "p_min": report.p_min,
        "closed_form": reference,
        "abs_difference": None if reference is None else abs(report.p_min - reference),
        "restarts": report.restarts,
        "converged": report.converged,
        "history": [[r, p] for r, p in report.history],
        "wall_time_s": elapsed,
        "strategy": adversary.strategy_to_json(report.best_strategy),
    }
    _emit(out, args.out)
    return 0


def _cmd_eve_sweep(args) -> int:
    seed, generated = _resolve_seed(args.seed)
    try:
        grid = [float(tok) for tok in args.k_grid.split(",") if tok.strip()]
    except ValueError:
        return _usage(f"cannot parse --k-grid {args.k_grid!r}")
    if not grid:
        return _usage("--k-grid must name at least one point")
    master = RandomStream(seed)
    points = []
    started = time.perf_counter()
    for idx, k in enumerate(grid):
        try:
            scheme = _build_scheme(args.scheme, k)
        except ValueError as exc:
            return _usage(str(exc))
        report = adversary.optimize_strategy(
            scheme, restarts=args.restarts, tolerance=args.tol, rng=master.substream(f"point-{idx}")
        )
        reference = adversary.reference_error_rate(scheme)
        diff = None if reference is None else abs(report.p_min - reference)
        points.append(
            {
                "k": k,
                "p_min_numeric": report.p_min,
                "p_min_closed_form": reference,
                "abs_difference": diff,
                "converged": report.converged,
                "flagged": bool(diff is not None and diff > SWEEP_FLAG_THRESHOLD),
            }
        )
    elapsed = time.perf_counter() - started
    any_flagged = any(p["flagged"] for p in points)
    out = {
        "command": "eve sweep",
        "scheme": args.scheme,
        "points": points,
        "metadata": {
            "restarts": args.restarts,
            "tolerance": args.tol,
            "seed": seed,
            "seed_generated": generated,
            "kernel_backend": KERNEL_BACKEND,
            "wall_time_s": elapsed,
        },
        "max_abs_difference": max(
            (p["abs_difference"] for p in points if p["abs_difference"] is not None),
            default=None,
        ),
        "any_flagged": any_flagged,
    }
    _emit(out, args.out)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("k,p_min_numeric,p_min_closed_form,abs_difference,flagged\n")
            for p in points:
                fh.write(
                    f"{p['k']},{p['p_min_numeric']},{p['p_min_closed_form']},"
                    f"{p['abs_difference']},{int(p['flagged'])}\n"
                )
    return CHECK_FAILURE if any_flagged else 0


def _cmd_guess(args) -> int:
    try:
        scheme = _build_scheme(args.scheme, args.k)
    except ValueError as exc:
        return _usage(str(exc))
    rho_plus, rho_minus = adversary.bit_mixtures(scheme)
    odds = adversary.helstrom_guess(rho_plus, rho_minus)
    reference = adversary.reference_guess_odds(scheme)
    _emit(
        {
            "command": "guess",
            "scheme": scheme.name,
            "k": scheme.k,
            "guess_odds": odds,
            "closed_form": reference,
            "abs_difference": None if reference is None else abs(odds - reference),
        },
        args.out,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detqkd",
        description="Deterministic two-qubit cryptography: schemes, attacks, sessions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_seed_out(p):
        p.add_argument("--seed", type=int, default=None, help="master seed (env DETQKD_SEED)")
        p.add_argument("--out", default=None, help="write JSON here instead of stdout")

    def add_scheme(p, default=None):
        p.add_argument(
            "--scheme",
            default=default,
            required=default is None,
            choices=sorted(schemes.SCHEME_BUILDERS),
            help="scheme name",
        )
        p.add_argument("--k", type=float, default=None, help="k parameter for the k schemes")

    def add_channel(p):
        p.add_argument("--evan", choices=("none", "naive", "optimal"), default="none")
        p.add_argument("--evan-file", default=None, help="load a saved strategy JSON")
        p.add_argument("--evan-restarts", type=int, default=20)
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--loss", type=float, default=0.0)
        p.add_argument("--sessions", type=int, default=1)
        p.add_argument("--summary-only", action="store_true")

    scheme_parser = sub.add_parser("scheme", help="construct, validate and dump schemes")
    scheme_sub = scheme_parser.add_subparsers(dest="scheme_command", required=True)
    validate = scheme_sub.add_parser("validate", help="run the structural check suite")
    validate.add_argument("--name", required=True, choices=sorted(schemes.SCHEME_BUILDERS))
    validate.add_argument("--k", type=float, default=None)
    validate.add_argument("--out", default=None)
    validate.set_defaults(handler=_cmd_scheme_validate)
    dump = scheme_sub.add_parser("dump", help="emit the scheme as JSON")
    dump.add_argument("--name", required=True, choices=sorted(schemes.SCHEME_BUILDERS))
    dump.add_argument("--k", type=float, default=None)
    dump.add_argument("--out", default=None)
    dump.set_defaults(handler=_cmd_scheme_dump)

    qkd = sub.add_parser("qkd", help="run key-distribution sessions")
    add_scheme(qkd, default="k")
    qkd.add_argument("--photons", type=int, default=1100, help="total photons sent")
    qkd.add_argument("--check", type=int, default=100, help="check-subset size")
    add_channel(qkd)
    add_seed_out(qkd)
    qkd.set_defaults(handler=_cmd_qkd, k=1.0)

    comm = sub.add_parser("comm", help="run direct-communication sessions")
    comm.add_argument("--message", default=None, help="bit string over + and -")
    comm.add_argument("--control-fraction", type=float, default=0.1)
    comm.add_argument("--replay-table3", action="store_true", help="replay the published trace")
    add_channel(comm)
    add_seed_out(comm)
    comm.set_defaults(handler=_cmd_comm)

    eve = sub.add_parser("eve", help="attack analysis")
    eve_sub = eve.add_subparsers(dest="eve_command", required=True)
    opt = eve_sub.add_parser("optimize", help="minimize the wrong-click rate once")
    add_scheme(opt)
    opt.add_argument("--restarts", type=int, default=20)
    opt.add_argument("--tol", type=float, default=1e-6)
    add_seed_out(opt)
    opt.set_defaults(handler=_cmd_eve_optimize)
    sweep = eve_sub.add_parser("sweep", help="optimize across a k grid")
    add_scheme(sweep)
    sweep.add_argument("--k-grid", default="0.25,0.5,1,2,4")
    sweep.add_argument("--restarts", type=int, default=20)
    sweep.add_argument("--tol", type=float, default=1e-6)
    sweep.add_argument("--csv", default=None, help="also write a flat CSV table")
    add_seed_out(sweep)
    sweep.set_defaults(handler=_cmd_eve_sweep)

    guess = sub.add_parser("guess", help="optimal direct bit-guessing odds")
    add_scheme(guess)
    guess.add_argument("--out", default=None)
    guess.set_defaults(handler=_cmd_guess)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    try:
        return args.handler(args)
    except schemes.DegenerateParameterError as exc:
        return _usage(str(exc))


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
