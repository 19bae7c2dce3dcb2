"""Command-line front end.

    cdqkd construct rotation --out catalog.json
    cdqkd discriminate rotation
    cdqkd discriminate --pair sz I
    cdqkd simulate --config cfg.json --trials 10000 --reproducible
    cdqkd report results.json --format csv

Exit codes: 0 success, 2 usage or config error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from datetime import datetime, timezone

import numpy as np

from . import ARTIFACT_VERSION
from .adversaries import AttackKind, AttackModel
from .attacks import LIMITATIONS, build_report, dense_coding_extras, run_batch
from .channels import NoiseModel
from .discrimination import DiscriminationReport, analyze_operator_set, analyze_pair, unambiguous_set_check
from .errors import BadPriorsError, CDQKDError, ConfigInvalidError, UnknownEncodingError
from .linalg import is_unitary
from .operators import ComplementRecipe, operator_set_to_dict, reference_instance, verify_flip_actions
from .protocol import ProtocolConfig, Variant
from .schemas import schema_errors

log = logging.getLogger("cdqkd")

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 2, 3

_S = 1 / np.sqrt(2)
NAMED_GATES = {
    "I": np.eye(2, dtype=complex),
    "sx": np.array([[0, 1], [1, 0]], dtype=complex),
    "sy": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "sz": np.array([[1, 0], [0, -1]], dtype=complex),
    "h": np.array([[_S, _S], [_S, -_S]], dtype=complex),
    "s": np.array([[1, 0], [0, 1j]], dtype=complex),
    "t": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
}


class UsageError(Exception):
    pass


class VerificationError(Exception):
    pass


def _cpl(z) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _stamp(doc: dict, reproducible: bool) -> dict:
    out = {"artifact_version": ARTIFACT_VERSION}
    if not reproducible:
        out["generated_at"] = datetime.now(timezone.utc).isoformat()
    out.update(doc)
    return out


def _check_schema(doc: dict, name: str, exc=UsageError) -> None:
    errs = schema_errors(doc, name)
    if errs:
        raise exc("schema error: " + "; ".join(errs))


def _emit(doc: dict, args, schema: str, table: list[dict] | None = None) -> None:
    _check_schema(doc, schema, VerificationError)
    if getattr(args, "format", "json") == "csv":
        text = _to_csv(table if table is not None else [_flatten(doc)])
    else:
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _flatten(d: dict, prefix: str = "") -> dict:
    flat = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            if all(not isinstance(x, (dict, list)) for x in v):
                flat[key] = ";".join(str(x) for x in v)
        else:
            flat[key] = v
    return flat


def _to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    fields = list(dict.fromkeys(k for r in rows for k in r))
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# construct


def cmd_construct(args) -> int:
    params = {"encoding": args.encoding, "recipe": args.recipe}
    _check_schema(params, "construct_args")
    opset = reference_instance(args.encoding, args.recipe)
    actions = verify_flip_actions(opset)
    inv = opset.check_invariants()
    verified = all(a.passed and a.phase_matches for a in actions) and inv["unitary"] and inv["C_squared_is_U"]
    doc = operator_set_to_dict(opset)
    doc["encoding"] = opset.encoding.to_dict()
    doc["flip_actions"] = [
        {
            "operator": a.operator,
            "source": a.source,
            "target": a.target,
            "phase": _cpl(a.phase),
            "expected_phase": _cpl(a.expected_phase),
            "passed": bool(a.passed),
            "phase_matches": bool(a.phase_matches),
        }
        for a in actions
    ]
    doc["verified"] = bool(verified)
    doc = _stamp({"kind": "catalog", **doc}, args.reproducible)
    row = {"encoding": args.encoding, "recipe": doc["recipe"], "verified": doc["verified"]}
    _emit(doc, args, "catalog", table=[row])
    if not verified:
        raise VerificationError(f"operator set {args.encoding} failed verification")
    return EXIT_OK


# ---------------------------------------------------------------------------
# discriminate


def _load_matrix_file(path: str) -> dict[str, np.ndarray]:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read matrix file: {exc}") from None
    ops = raw.get("operators", raw) if isinstance(raw, dict) else None
    if not isinstance(ops, dict) or len(ops) < 2:
        raise UsageError("matrix file needs an 'operators' object with at least two entries")
    out = {}
    for name, table in ops.items():
        try:
            arr = np.asarray(table, dtype=float)
        except (ValueError, TypeError):
            arr = None
        if arr is None or arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
            raise UsageError(f"operator {name!r} is not a square table of [re, im] pairs")
        out[name] = arr[..., 0] + 1j * arr[..., 1]
        if not is_unitary(out[name]):
            raise UsageError(f"operator {name!r} is not unitary")
    if len({m.shape for m in out.values()}) != 1:
        raise UsageError("operators in the matrix file have different dimensions")
    return out


def _generic_report(ops: dict[str, np.ndarray], priors) -> DiscriminationReport:
    names = list(ops)
    pairs = [analyze_pair(a, ops[a], b, ops[b], priors) for i, a in enumerate(names) for b in names[i + 1 :]]
    flags = dict(zip(names, unambiguous_set_check([ops[n] for n in names])))
    return DiscriminationReport(tuple(priors), pairs, flags)


def cmd_discriminate(args) -> int:
    priors = tuple(args.priors)
    sources = sum(x is not None for x in (args.encoding, args.pair, args.matrix_file))
    if sources != 1:
        raise UsageError("give exactly one of ENCODING, --pair A B, or --matrix-file PATH")
    if args.encoding is not None:
        _check_schema({"encoding": args.encoding, "recipe": args.recipe}, "construct_args")
        report = analyze_operator_set(reference_instance(args.encoding, args.recipe), priors)
        source = f"encoding:{args.encoding}"
    elif args.pair is not None:
        bad = [p for p in args.pair if p not in NAMED_GATES]
        if bad:
            raise UsageError(f"unknown gate names {bad}; choose from {sorted(NAMED_GATES)}")
        a, b = args.pair
        if a == b:
            ops = {a: NAMED_GATES[a], b + "'": NAMED_GATES[b]}
        else:
            ops = {a: NAMED_GATES[a], b: NAMED_GATES[b]}
        report = _generic_report(ops, priors)
        source = f"pair:{a},{b}"
    else:
        report = _generic_report(_load_matrix_file(args.matrix_file), priors)
        source = f"file:{args.matrix_file}"
    doc = _stamp({"kind": "discrimination", "source": source, **report.to_dict()}, args.reproducible)
    rows = [
        {"first": p["first"], "second": p["second"], "r": p["r"], "p_error_min": p["p_error_min"],
         "precisely_discriminable": p["precisely_discriminable"]}
        for p in doc["pairs"]
    ]
    _emit(doc, args, "discrimination", table=rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError("schema error: config must be a JSON object")
    _check_schema(raw, "config")
    return raw


def config_from_dict(raw: dict, seed: int | None = None) -> ProtocolConfig:
    d = dict(raw)
    for k in ("trials", "workers", "keep_sessions"):
        d.pop(k, None)
    recipe = d.pop("recipe", None)
    if recipe is not None:
        recipe = ComplementRecipe.parse(recipe).value
    return ProtocolConfig(
        variant=Variant(d.pop("variant", "honest_center")),
        encoding=d.pop("encoding"),
        n=d.pop("n", 256),
        m=d.pop("m", None),
        error_threshold=d.pop("threshold", None),
        noise=NoiseModel.from_dict(d.pop("noise", None)),
        attack=AttackModel.from_dict(d.pop("attack", None)),
        seed=int(seed if seed is not None else d.pop("seed", 0)),
        recipe=recipe,
    )


def simulate(raw: dict, seed=None, trials=None, workers=None, keep_sessions=None, reproducible=True) -> dict:
    """Run a batch from a schema-valid config dict and return the report document."""
    cfg = config_from_dict(raw, seed)
    trials = int(trials or raw.get("trials", 100))
    workers = int(workers or raw.get("workers", 1))
    keep = raw.get("keep_sessions", True) if keep_sessions is None else keep_sessions
    log.info("simulate %s/%s attack=%s trials=%d", cfg.variant.value, cfg.encoding, cfg.attack.kind.value, trials)
    tally = run_batch(cfg, trials, workers, keep_sessions=keep)
    extras = dense_coding_extras(cfg, trials) if cfg.attack.kind is AttackKind.DENSE_CODING_PROBE else None
    rep = build_report(cfg, tally, extras).to_dict()
    echo = cfg.to_dict()
    echo["trials"] = trials
    aggregate = {
        "qber_mean": rep["induced_qber"],
        "detection_rate": rep["per_check_detection"],
        "detection_ci": rep["detection_ci"],
        "oracle_detection": rep["oracle_detection"],
        "within_3sigma": rep["within_3sigma"],
        "key_rate": tally.key_rate_sum / tally.sessions,
        "abort_fraction": rep["abort_fraction"],
        "keys_match_fraction": 1.0 - tally.key_mismatch_sessions / tally.sessions,
        "eve_information": rep["eve_information"],
    }
    doc = {
        "kind": "simulation",
        "config": echo,
        "trials": trials,
        "aggregate": aggregate,
        "attack_report": rep,
        "limitations": LIMITATIONS,
    }
    if keep:
        doc["sessions"] = tally.per_session
    return _stamp(doc, reproducible)


def cmd_simulate(args) -> int:
    if args.config is None:
        raise UsageError("simulate needs --config PATH")
    raw = load_config(args.config)
    if args.seed is not None and not (0 <= args.seed < 2**64):
        raise UsageError("--seed must be an unsigned 64-bit integer")
    doc = simulate(raw, args.seed, args.trials, args.workers, False if args.no_sessions else None, args.reproducible)
    _emit(doc, args, "simulation", table=[_flatten(doc["aggregate"]) | {"trials": doc["trials"]}])
    return EXIT_OK


# ---------------------------------------------------------------------------
# report


def cmd_report(args) -> int:
    try:
        with open(args.path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read report: {exc}") from None
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind not in ("catalog", "discrimination", "simulation"):
        raise UsageError("not a cdqkd report (missing or unknown 'kind')")
    _check_schema(doc, kind, VerificationError)
    if kind == "simulation":
        table = [_flatten(doc["aggregate"]) | {"trials": doc["trials"]}]
        if doc.get("attack_report", {}).get("within_3sigma") is False:
            log.warning("detection rate is outside 3 sigma of the oracle")
    elif kind == "discrimination":
        table = [{k: p[k] for k in ("first", "second", "r", "p_error_min", "precisely_discriminable")} for p in doc["pairs"]]
    else:
        table = [{"encoding": doc["encoding"]["name"], "recipe": doc["recipe"], "verified": doc["verified"]}]
    if args.format == "csv":
        text = _to_csv(table)
    else:
        text = json.dumps({"kind": kind, "valid": True, "rows": table}, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--reproducible", action="store_true", help="omit timestamps so output is byte-stable")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="cdqkd", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=ARTIFACT_VERSION)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", parents=[common], help="export an operator catalog")
    c.add_argument("encoding")
    c.add_argument("--recipe", default=None, help="complement recipe: identity_on_complement | cyclic_shift")
    c.set_defaults(func=cmd_construct)

    d = sub.add_parser("discriminate", parents=[common], help="single-use discrimination analysis")
    d.add_argument("encoding", nargs="?")
    d.add_argument("--pair", nargs=2, metavar=("A", "B"), help=f"named 2x2 gates: {', '.join(NAMED_GATES)}")
    d.add_argument("--matrix-file", help="JSON with an 'operators' object of [re, im] tables")
    d.add_argument("--priors", nargs=2, type=float, default=(0.5, 0.5), metavar=("P1", "P2"))
    d.add_argument("--recipe", default=None)
    d.set_defaults(func=cmd_discriminate)

    s = sub.add_parser("simulate", parents=[common], help="run a protocol or attack batch")
    s.add_argument("--config", help="JSON config file")
    s.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
    s.add_argument("--trials", type=int, help="number of sessions")
    s.add_argument("--workers", type=int, help="parallel worker processes")
    s.add_argument("--no-sessions", action="store_true", help="omit per-session records")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("report", parents=[common], help="validate a report and print its summary table")
    r.add_argument("path")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cdqkd: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigInvalidError, UnknownEncodingError, BadPriorsError) as exc:
        print(f"cdqkd: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VerificationError as exc:
        print(f"cdqkd: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except CDQKDError as exc:
        print(f"cdqkd: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
