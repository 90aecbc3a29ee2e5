"""``polargraph`` command line.

Each subcommand builds a request model, hands it to a backend (in-process by
default, or a running ``polargraph serve`` via ``--server``), and writes the
response as CSV/JSON next to a run manifest. A config file (JSON or TOML,
or a previous run's manifest) supplies defaults; flags on the command line
win.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

from pydantic import ValidationError

from . import __version__
from .channel import GENERATOR_NAME
from .engine import BudgetExhausted, FerCache
from .evaluation import REQUIRED_SNR_COLUMNS, SIMULATION_COLUMNS
from .polar import ReliabilitySequence, design_from_dict, format_sequence, parse_sequence
from .service import handlers
from .service.models import (
    BudgetModel,
    CompareRequest,
    ConstructRequest,
    DecoderSpec,
    DesignModel,
    DesignSequenceRequest,
    DesignSingleRequest,
    RequiredSnrRequest,
    SearchSpec,
    SimOptions,
    SimulateRequest,
    StartSpec,
)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("polargraph")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_BUDGET = 0, 2, 3, 4

COMPARE_COLUMNS = ("rank", "mask_hex", "k", "n_fe", "n_t", "fer", "lb", "ub")
RANKED_COLUMNS = COMPARE_COLUMNS
SINGLE_LOG_COLUMNS = ("iteration", "k", "best_mask_hex", "best_fer", "best_n_fe", "best_n_t", "changed",
                      "total_frames_simulated")
SEQUENCE_LOG_COLUMNS = ("step", "k_min", "k_max", "n_paths", "best_tau", "total_frames_simulated")
PER_K_COLUMNS = ("k", "label", "mask_hex", "n_fe", "n_t", "fer", "lb", "ub")

# not part of a run's parameters
_META_KEYS = {"command", "config", "manifest", "server", "verbose", "handler"}


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------- argument types

def _count(text: str) -> int:
    value = float(text)
    if value != int(value) or value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return int(value)


def _positive(text: str) -> int:
    value = _count(text)
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def _common(p: argparse.ArgumentParser, gamma: float) -> None:
    g = p.add_argument_group("common")
    g.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    g.add_argument("--threads", type=_positive, default=1, help="simulation worker threads")
    g.add_argument("--cache", help="FER cache file (JSON lines); loaded before and saved after the run")
    g.add_argument("--gamma", type=float, default=gamma, help=f"confidence level (default {gamma})")
    g.add_argument("--interval-method", choices=("normal", "exact"), default="normal")
    g.add_argument("--batch-size", type=_positive, default=512, help="frames per random substream")
    g.add_argument("--config", help="JSON/TOML file (or manifest) with defaults for these flags")
    g.add_argument("--manifest", help="where to write the run manifest")
    g.add_argument("--server", help="URL of a running polargraph service")
    g.add_argument("-v", "--verbose", action="count", default=0)


def _decoder(p: argparse.ArgumentParser, kind: str = "bp") -> None:
    g = p.add_argument_group("decoder")
    g.add_argument("--decoder", choices=("bp", "sc"), default=kind)
    g.add_argument("--iters", type=_positive, default=20, help="maximum BP iterations")
    g.add_argument("--llr-clip", type=float, default=40.0)
    g.add_argument("--no-early-stop", action="store_true")
    g.add_argument("--exact", action="store_true", help="exact check-node rule instead of min-sum")
    g.add_argument("--all-zero", action="store_true", help="transmit the all-zero codeword only")


def _budget(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("budget")
    g.add_argument("--max-trials-per-code", type=_positive, default=10_000_000)
    g.add_argument("--min-errors-before-prune", type=_positive, default=8)
    g.add_argument("--max-total-frames", type=_positive, default=None)


def _construction(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=("bhattacharyya", "beta"), default="beta")
    p.add_argument("--beta", type=float, default=2 ** 0.25)
    p.add_argument("--erasure-prob", type=float, default=0.5, help="design erasure probability")


def _search(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("search")
    g.add_argument("-L", "--list-size", type=_positive, default=4)
    g.add_argument("--ebn0", type=float, help="Eb/N0 in dB")
    g.add_argument("--max-outer-iters", type=_positive, default=50)
    g.add_argument("--stall-rounds", type=_positive, default=2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polargraph", description="Polar code design by graph search.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="baseline reliability sequence and design")
    p.add_argument("--n", type=int, help="blocklength N")
    p.add_argument("--k", type=int)
    _construction(p)
    p.add_argument("--out-sequence", help="sequence file (default: stdout)")
    p.add_argument("--out-design", help="design file for --k")
    _common(p, 0.95)

    p = sub.add_parser("simulate", help="FER versus Eb/N0 for one design")
    p.add_argument("--design", help="design file")
    p.add_argument("--snr", type=float, nargs="+", help="Eb/N0 points in dB")
    p.add_argument("--snr-range", type=float, nargs=3, metavar=("START", "STOP", "STEP"),
                   help="inclusive Eb/N0 grid")
    p.add_argument("--min-errors", type=_positive, default=100)
    p.add_argument("--max-trials", type=_positive, default=10_000_000)
    p.add_argument("--out", help="CSV output (default: stdout)")
    _decoder(p)
    _common(p, 0.95)

    p = sub.add_parser("compare", help="race designs and keep the best L")
    p.add_argument("--designs", nargs="+", help="design files")
    p.add_argument("-L", "--list-size", type=_positive, default=1)
    p.add_argument("--ebn0", type=float)
    p.add_argument("--out", help="CSV output (default: stdout)")
    _decoder(p)
    _budget(p)
    _common(p, 0.8)

    p = sub.add_parser("design-single", help="optimize one design by bit swaps")
    p.add_argument("--n", type=int, help="blocklength N")
    p.add_argument("--k", type=int)
    p.add_argument("--start", help="start design file (default: construction by --method)")
    _construction(p)
    _search(p)
    p.add_argument("--refine-errors", type=_count, default=0,
                   help="simulate the final list to this many errors before ranking")
    p.add_argument("--out", help="best design file")
    p.add_argument("--ranked-out", help="CSV of the final list")
    p.add_argument("--log", help="CSV iteration log")
    _decoder(p)
    _budget(p)
    _common(p, 0.8)

    p = sub.add_parser("design-sequence", help="optimize a rate-compatible reliability sequence")
    p.add_argument("--n", type=int, help="blocklength N")
    p.add_argument("--k-start", type=int, help="start dimension (default N/4)")
    _construction(p)
    _search(p)
    p.add_argument("--out", help="sequence file")
    p.add_argument("--estimates-out", help="CSV of per-dimension FER along the sequence")
    p.add_argument("--log", help="CSV step log")
    p.add_argument("--checkpoint", help="checkpoint file, rewritten after every step")
    p.add_argument("--resume", action="store_true", help="continue from --checkpoint")
    _decoder(p)
    _budget(p)
    _common(p, 0.8)

    p = sub.add_parser("required-snr", help="Eb/N0 needed to reach a target FER, per dimension")
    p.add_argument("--sequence", help="sequence file")
    p.add_argument("--k", type=int, nargs="+", help="dimensions")
    p.add_argument("--k-range", type=int, nargs=3, metavar=("START", "STOP", "STEP"),
                   help="inclusive range of dimensions")
    p.add_argument("--target-fer", type=float, default=1e-3)
    p.add_argument("--lo-db", type=float, default=0.0)
    p.add_argument("--hi-db", type=float, default=10.0)
    p.add_argument("--resolution-db", type=float, default=0.05)
    p.add_argument("--min-errors", type=_positive, default=10)
    p.add_argument("--max-trials", type=_positive, default=10_000_000)
    p.add_argument("--out", help="CSV output (default: stdout)")
    _decoder(p)
    _common(p, 0.95)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--cache", help="shared FER cache file")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return parser


# --------------------------------------------------------------------------- config files

def _load_config(path: str) -> dict:
    p = Path(path)
    text = p.read_text()
    data = tomllib.loads(text) if p.suffix.lower() == ".toml" else json.loads(text)
    if not isinstance(data, dict):
        raise UsageError(f"{path}: config must be a table/object")
    if "params" in data:
        data = data["params"]
    return {k.replace("-", "_"): v for k, v in data.items()}


def parse_args(argv: Sequence[str] | None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = getattr(args, "config", None)
    if config:
        try:
            values = _load_config(config)
        except (OSError, ValueError) as exc:
            raise OSError(f"cannot read config {config}: {exc}") from exc
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(values) - known - _META_KEYS)
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        sub.set_defaults(**{k: v for k, v in values.items() if k not in _META_KEYS})
        args = parser.parse_args(argv)
    return args


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"{args.command}: missing required option(s) {flags}")


# --------------------------------------------------------------------------- request building

def _read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc


def _design_model(path: str) -> DesignModel:
    data = _read_json(path)
    try:
        return DesignModel.of(design_from_dict(data))
    except (KeyError, TypeError, ValueError) as exc:
        raise OSError(f"{path}: not a valid design file ({exc})") from exc


def _options(args) -> SimOptions:
    return SimOptions(seed=args.seed, gamma=args.gamma, interval_method=args.interval_method,
                      batch_size=args.batch_size, threads=args.threads, all_zero=getattr(args, "all_zero", False))


def _decoder_spec(args) -> DecoderSpec:
    return DecoderSpec(kind=args.decoder, max_iters=args.iters, llr_clip=args.llr_clip,
                       early_stop=not args.no_early_stop, exact=args.exact)


def _budget_model(args) -> BudgetModel:
    return BudgetModel(max_trials_per_code=args.max_trials_per_code,
                       min_errors_before_prune=args.min_errors_before_prune,
                       max_total_frames=args.max_total_frames)


def _start_spec(args, design_path: str | None = None) -> StartSpec:
    design = _design_model(design_path) if design_path else None
    return StartSpec(design=design, method=args.method, beta=args.beta, design_erasure_prob=args.erasure_prob)


def _search_spec(args) -> SearchSpec:
    _require(args, "ebn0")
    return SearchSpec(list_size=args.list_size, ebn0_db=args.ebn0, max_outer_iters=args.max_outer_iters,
                      stall_rounds=args.stall_rounds)


def _grid(start: float, stop: float, step: float) -> list[float]:
    if step <= 0 or stop < start:
        raise UsageError("range needs STEP > 0 and STOP >= START")
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 10) for i in range(count)]


def _read_sequence(path: str) -> ReliabilitySequence:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    try:
        return parse_sequence(text)
    except ValueError as exc:
        raise OSError(f"{path}: not a valid sequence file ({exc})") from exc


def build_request(args):
    cmd = args.command
    if cmd == "construct":
        _require(args, "n")
        return ConstructRequest(N=args.n, method=args.method, beta=args.beta,
                                design_erasure_prob=args.erasure_prob, k=args.k)
    if cmd == "simulate":
        _require(args, "design")
        if args.snr is None and args.snr_range is None:
            raise UsageError("simulate: give --snr or --snr-range")
        grid = list(args.snr or []) + (_grid(*args.snr_range) if args.snr_range else [])
        return SimulateRequest(design=_design_model(args.design), snr_db=grid, decoder=_decoder_spec(args),
                               options=_options(args), min_errors=args.min_errors, max_trials=args.max_trials)
    if cmd == "compare":
        _require(args, "designs", "ebn0")
        return CompareRequest(designs=[_design_model(p) for p in args.designs], list_size=args.list_size,
                              ebn0_db=args.ebn0, decoder=_decoder_spec(args), options=_options(args),
                              budget=_budget_model(args))
    if cmd == "design-single":
        if args.start:
            start = _start_spec(args, args.start)
            n = args.n if args.n is not None else start.design.n
            k = args.k if args.k is not None else start.design.k
        else:
            _require(args, "n", "k")
            start, n, k = _start_spec(args), args.n, args.k
        return DesignSingleRequest(N=n, k=k, start=start, search=_search_spec(args), decoder=_decoder_spec(args),
                                   options=_options(args), budget=_budget_model(args),
                                   refine_errors=args.refine_errors)
    if cmd == "design-sequence":
        _require(args, "n")
        k_start = args.k_start if args.k_start is not None else args.n // 4
        return DesignSequenceRequest(N=args.n, k_start=k_start, start=_start_spec(args),
                                     search=_search_spec(args), decoder=_decoder_spec(args),
                                     options=_options(args), budget=_budget_model(args))
    if cmd == "required-snr":
        _require(args, "sequence")
        if args.k is None and args.k_range is None:
            raise UsageError("required-snr: give --k or --k-range")
        ks = list(args.k or [])
        if args.k_range:
            a, b, s = args.k_range
            if s <= 0 or b < a:
                raise UsageError("--k-range needs STEP > 0 and STOP >= START")
            ks += list(range(a, b + 1, s))
        seq = _read_sequence(args.sequence)
        return RequiredSnrRequest(sequence=list(seq.order), ks=ks, target_fer=args.target_fer,
                                  decoder=_decoder_spec(args), options=_options(args), lo_db=args.lo_db,
                                  hi_db=args.hi_db, resolution_db=args.resolution_db,
                                  min_errors=args.min_errors, max_trials=args.max_trials)
    raise UsageError(f"unknown command {cmd}")


# --------------------------------------------------------------------------- backends

class LocalBackend:
    """Runs handlers in this process against a cache file."""

    def __init__(self, cache_path: str | None):
        self.cache_path = cache_path
        self.cache = FerCache.load(cache_path) if cache_path else FerCache()

    def save(self) -> None:
        if self.cache_path:
            self.cache.save(self.cache_path)

    def run(self, command: str, request, **hooks) -> dict:
        handler = handlers.HANDLERS[command]
        if command == "construct":
            return handler(request, **hooks).model_dump(mode="json")
        try:
            resp = handler(request, cache=self.cache, **hooks)
        except BaseException:
            # with checkpoints the cache file must stay in step with the last checkpoint
            if "on_checkpoint" not in hooks:
                self.save()
            raise
        self.save()
        return resp.model_dump(mode="json")


class HttpBackend:
    """Posts requests to a running service."""

    def __init__(self, url: str, timeout: float | None = None):
        import httpx

        self._httpx = httpx
        self.client = httpx.Client(base_url=url.rstrip("/"), timeout=timeout)

    def run(self, command: str, request, **hooks) -> dict:
        if hooks:
            raise UsageError("checkpointing is only available without --server")
        try:
            r = self.client.post(f"/{command}", json=request.model_dump(mode="json"))
        except self._httpx.HTTPError as exc:
            raise OSError(f"service request failed: {exc}") from exc
        if r.status_code == 409:
            raise BudgetExhausted(r.json().get("detail", "budget exhausted"))
        if r.status_code in (400, 422):
            raise UsageError(f"service rejected the request: {r.text}")
        if r.status_code != 200:
            raise OSError(f"service error {r.status_code}: {r.text}")
        return r.json()


# --------------------------------------------------------------------------- output

def _csv_text(columns: Sequence[str], rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


class Outputs:
    """Writes output files atomically and remembers them for the manifest."""

    def __init__(self):
        self.files: list[str] = []

    def write(self, path: str | None, text: str) -> None:
        if path is None or path == "-":
            sys.stdout.write(text)
            return
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        tmp = p.with_name(p.name + ".tmp")
        tmp.write_text(text)
        tmp.replace(p)
        if path not in self.files:
            self.files.append(path)


def _estimate_cols(est: dict) -> dict:
    return {"n_fe": est["n_fe"], "n_t": est["n_t"], "fer": est["p_hat"], "lb": est["lb"], "ub": est["ub"]}


def _ranked_rows(ranked: list[dict]) -> list[dict]:
    return [{"rank": i + 1, "mask_hex": r["mask_hex"], "k": r["design"]["k"], **_estimate_cols(r["estimate"])}
            for i, r in enumerate(ranked)]


def _design_text(design: dict) -> str:
    return json.dumps(design, indent=2) + "\n"


def write_outputs(args, resp: dict, out: Outputs) -> int:
    cmd = args.command
    if cmd == "construct":
        seq = ReliabilitySequence(tuple(resp["sequence"]))
        comment = [f"N={seq.N} method={args.method}" + (f" beta={args.beta!r}" if args.method == "beta"
                                                          else f" erasure_prob={args.erasure_prob!r}")]
        out.write(args.out_sequence, format_sequence(seq, comment))
        if resp.get("design") is not None:
            out.write(args.out_design or f"design_N{seq.N}_k{args.k}.json", _design_text(resp["design"]))
        return EXIT_OK
    if cmd == "simulate":
        out.write(args.out, _csv_text(SIMULATION_COLUMNS, resp["rows"]))
        return EXIT_OK
    if cmd == "compare":
        out.write(args.out, _csv_text(COMPARE_COLUMNS, _ranked_rows(resp["ranked"])))
        if not resp["resolved"]:
            log.warning("race hit the per-code trial budget; ranking by point estimates")
            return EXIT_BUDGET
        return EXIT_OK
    if cmd == "design-single":
        best = resp["ranked"][0]["design"]
        out.write(args.out or f"design_N{best['n']}_k{best['k']}_best.json", _design_text(best))
        if args.ranked_out:
            out.write(args.ranked_out, _csv_text(RANKED_COLUMNS, _ranked_rows(resp["ranked"])))
        if args.log:
            out.write(args.log, _csv_text(SINGLE_LOG_COLUMNS, resp["log"]))
        if not resp["converged"]:
            log.warning("search stopped after %d iterations without converging", resp["iterations"])
            return EXIT_BUDGET
        return EXIT_OK
    if cmd == "design-sequence":
        seq = ReliabilitySequence(tuple(resp["sequence"]))
        comment = [f"N={seq.N} k_start={resp['k_start']} L={args.list_size} ebn0_db={args.ebn0!r}",
                   f"tau={resp['tau']!r}"]
        out.write(args.out, format_sequence(seq, comment))
        if args.estimates_out:
            rows = [{"k": r["k"], "label": "" if r["label"] is None else r["label"], "mask_hex": r["mask_hex"],
                     **_estimate_cols(r["estimate"])} for r in resp["per_k"]]
            out.write(args.estimates_out, _csv_text(PER_K_COLUMNS, rows))
        if args.log:
            log_rows = resp["log"]
            out.write(args.log, _csv_text(SEQUENCE_LOG_COLUMNS, log_rows))
        return EXIT_OK
    if cmd == "required-snr":
        out.write(args.out, _csv_text(REQUIRED_SNR_COLUMNS, resp["rows"]))
        return EXIT_OK
    raise UsageError(f"unknown command {cmd}")


def _sha256(path: str) -> str | None:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError:
        return None


def _input_paths(args) -> list[str]:
    paths = []
    for name in ("design", "start", "sequence"):
        value = getattr(args, name, None)
        if value:
            paths.append(value)
    paths += list(getattr(args, "designs", None) or [])
    return paths


def _manifest_path(args) -> str:
    if args.manifest:
        return args.manifest
    primary = getattr(args, "out", None) or getattr(args, "out_sequence", None) or getattr(args, "out_design", None)
    if primary and primary != "-":
        return primary + ".manifest.json"
    return f"polargraph-{args.command}.manifest.json"


def write_manifest(args, request, resp: dict | None, out: Outputs, exit_code: int) -> None:
    params = {k: v for k, v in vars(args).items() if k not in _META_KEYS}
    manifest = {
        "command": args.command,
        "params": params,
        "request": request.model_dump(mode="json") if request is not None else None,
        "inputs": {p: _sha256(p) for p in _input_paths(args)},
        "outputs": list(out.files),
        "exit_code": exit_code,
        "tool": "polargraph",
        "version": __version__,
        "rng": GENERATOR_NAME,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    if resp is not None:
        stats = {k: resp[k] for k in ("frames_simulated", "frames_decoded", "race_calls", "iterations",
                                      "converged", "resolved", "tau") if k in resp}
        manifest["stats"] = stats
    path = _manifest_path(args)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------- checkpointing

def _sequence_hooks(args, backend) -> dict:
    if not args.checkpoint:
        if args.resume:
            raise UsageError("--resume needs --checkpoint")
        return {}
    ckpt = Path(args.checkpoint)
    if isinstance(backend, HttpBackend):
        raise UsageError("checkpointing is only available without --server")
    hooks: dict = {}
    if args.resume:
        if not ckpt.exists():
            raise OSError(f"checkpoint {ckpt} does not exist")
        hooks["resume"] = _read_json(str(ckpt))

    def on_checkpoint(data: dict) -> None:
        backend.save()
        tmp = ckpt.with_name(ckpt.name + ".tmp")
        tmp.write_text(json.dumps(data) + "\n")
        tmp.replace(ckpt)

    hooks["on_checkpoint"] = on_checkpoint
    return hooks


# --------------------------------------------------------------------------- entry point

def _serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(args.cache), host=args.host, port=args.port)
    return EXIT_OK


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except OSError as exc:
        print(f"polargraph: {exc}", file=sys.stderr)
        return EXIT_IO
    except UsageError as exc:
        print(f"polargraph: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.command == "serve":
        return _serve(args)

    request, resp, out = None, None, Outputs()
    code = EXIT_OK
    try:
        if args.command == "design-sequence" and args.checkpoint and args.cache is None:
            args.cache = args.checkpoint + ".cache.jsonl"
        request = build_request(args)
        backend = HttpBackend(args.server) if args.server else LocalBackend(args.cache)
        hooks = _sequence_hooks(args, backend) if args.command == "design-sequence" else {}
        resp = backend.run(args.command, request, **hooks)
        code = write_outputs(args, resp, out)
    except (UsageError, ValidationError, ValueError) as exc:
        print(f"polargraph: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"polargraph: {exc}", file=sys.stderr)
        return EXIT_IO
    except BudgetExhausted as exc:
        print(f"polargraph: {exc}", file=sys.stderr)
        code = EXIT_BUDGET
    try:
        write_manifest(args, request, resp, out, code)
    except OSError as exc:
        print(f"polargraph: cannot write manifest: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
