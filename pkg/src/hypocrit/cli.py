"""Command-line client.

Each subcommand builds a request model, hands it to the matching service
handler (in-process, or over HTTP with ``--server``) and writes the
response as deterministic JSON or CSV.  Exit codes: 0 success, 2 input
error, 3 numeric failure, 4 inconsistent routes.  Failures print one line
``<kind>: <reason>`` on stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ValidationError

from . import __version__
from .criterion import CSV_COLUMNS
from .errors import HypocritError, InputError
from .records import csv_text, dumps, load_json, resolve_spec_record, write_atomic

CSV_COMMANDS = ("verify", "sweep")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--spec", required=False, help="ProblemSpec JSON file")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--server", help="base URL of a running hypocrit service")
    p.add_argument("--timings", action="store_true", help="keep wall-clock timings (output no longer byte-stable)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypocrit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"hypocrit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="sampled ellipticity check of a spec")
    _add_common(p)
    p.add_argument("--samples", type=int)

    for name, text in (("criterion", "leading trace coefficient H0 by every route"),
                       ("classify", "verdict plus lemma and printed-formula annotations")):
        p = sub.add_parser(name, help=text)
        _add_common(p)
        p.add_argument("--k", type=int)
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--oracle", action="store_true", help="add the 2n-dimensional direct route (n <= 2)")
        p.add_argument("--oracle-tol", type=float, default=1e-3)

    p = sub.add_parser("verify", help="operator-lab trace fit and eigenpairs (n = 1)")
    _add_common(p)
    p.add_argument("--config", help="experiment JSON {spec, k, hGrid, grid, jmax}")
    p.add_argument("--k", type=int)
    p.add_argument("--h-min", type=float)
    p.add_argument("--h-max", type=float)
    p.add_argument("--h-points", type=int)
    p.add_argument("--R", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--jmax", type=int)
    p.add_argument("--eig-h", type=float, help="also extract nonlinear eigenpairs at this h")
    p.add_argument("--eig-tol", type=float)

    p = sub.add_parser("sweep", help="H0 along Q(alpha) = alpha * Q")
    _add_common(p)
    p.add_argument("--k", type=int)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--alpha-min", type=float)
    p.add_argument("--alpha-max", type=float)
    p.add_argument("--alpha-points", type=int)

    p = sub.add_parser("schrodinger", help="Dirichlet eigenvalue of -d^2/dx^2 + W(x)^2")
    _add_common(p)
    p.add_argument("--W", dest="W", help="polynomial record file for W (default: the spec's P)")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--R", type=float, default=10.0)
    p.add_argument("--N", type=int, default=2000)
    p.add_argument("--no-extrapolate", action="store_true")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return ap


def _spec(args) -> dict:
    if args.spec:
        return resolve_spec_record(args.spec)
    raise InputError("--spec is required")


def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def request_payload(args) -> dict[str, Any]:
    """Translate parsed flags into a request body; nothing is computed yet."""
    cmd = args.command
    if cmd == "check":
        return _drop_none({"spec": _spec(args), "samples": args.samples})
    if cmd in ("criterion", "classify"):
        if args.k is None:
            raise InputError("--k is required")
        # criterion requests every route; classify adds the oracle only on request
        oracle = args.oracle or cmd == "criterion"
        return {"spec": _spec(args), "k": args.k, "tol": args.tol, "oracle": oracle,
                "oracleTol": args.oracle_tol}
    if cmd == "verify":
        cfg: dict = {}
        base = None
        if args.config:
            cfg = load_json(args.config)
            if not isinstance(cfg, dict):
                raise InputError("experiment config must be a JSON object")
            base = Path(args.config).resolve().parent
        body = dict(cfg)
        body["spec"] = resolve_spec_record(args.spec) if args.spec else resolve_spec_record(cfg.get("spec"), base)
        if args.k is not None:
            body["k"] = args.k
        if "k" not in body:
            raise InputError("--k is required")
        body["hGrid"] = {**cfg.get("hGrid", {}), **_drop_none(
            {"min": args.h_min, "max": args.h_max, "points": args.h_points})}
        body["grid"] = {**cfg.get("grid", {}), **_drop_none({"R": args.R, "N": args.N})}
        for key, val in (("jmax", args.jmax), ("eigH", args.eig_h), ("eigTol", args.eig_tol)):
            if val is not None:
                body[key] = val
        return body
    if cmd == "sweep":
        if args.k is None:
            raise InputError("--k is required")
        return {"spec": _spec(args), "k": args.k, "tol": args.tol,
                "alpha": _drop_none({"min": args.alpha_min, "max": args.alpha_max, "points": args.alpha_points})}
    if cmd == "schrodinger":
        if args.W:
            W = load_json(args.W)
        elif args.spec:
            W = resolve_spec_record(args.spec).get("P")
        else:
            raise InputError("--W or --spec is required")
        return {"W": W, "index": args.index, "grid": {"R": args.R, "N": args.N},
                "extrapolate": not args.no_extrapolate}
    raise InputError(f"unknown command {cmd}")


def _validation_reason(exc: ValidationError) -> str:
    err = exc.errors()[0]
    where = ".".join(str(p) for p in err.get("loc", ()))
    return f"{where}: {err.get('msg')}" if where else str(err.get("msg"))


def _call_local(cmd: str, payload: dict) -> dict:
    from .service import HANDLERS

    req_cls, handler = HANDLERS[cmd]
    try:
        req = req_cls.model_validate(payload)
    except ValidationError as exc:
        raise InputError(_validation_reason(exc)) from None
    resp: BaseModel = handler(req)
    return resp.model_dump(by_alias=True)


class RemoteError(Exception):
    def __init__(self, kind: str, reason: str, exit_code: int):
        super().__init__(reason)
        self.kind, self.exit_code = kind, exit_code


def _call_remote(server: str, cmd: str, payload: dict) -> dict:
    import httpx

    try:
        r = httpx.post(server.rstrip("/") + "/" + cmd, json=payload, timeout=None)
    except httpx.HTTPError as exc:
        raise RemoteError("connection", f"{server}: {exc}", 1) from None
    body = r.json()
    if r.status_code != 200:
        raise RemoteError(body.get("error", "error"), body.get("reason", r.text), int(body.get("exitCode", 1)))
    return body


def strip_timings(obj):
    if isinstance(obj, dict):
        return {k: strip_timings(v) for k, v in obj.items() if k != "seconds"}
    if isinstance(obj, list):
        return [strip_timings(v) for v in obj]
    return obj


def render(cmd: str, result: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps(result) + "\n"
    if cmd == "sweep":
        rows = [[r["alpha"], r["H0"], r["err"], r["sign"], r["nonvanishing"], r["kMin"], r["route"]]
                for r in result["rows"]]
        return csv_text(CSV_COLUMNS, rows)
    if cmd == "verify":
        ex = result["experiment"]
        head = csv_text(("h", "traceDk", "scaledTrace"), zip(ex["hGrid"], ex["traceDk"], ex["scaledTrace"]))
        fit = csv_text(("j", "Hj", "stderr"), ((t["j"], t["H"], t["stderr"]) for t in ex["fit"]))
        return head + "\n" + fit
    raise InputError(f"--format csv is only available for {', '.join(CSV_COMMANDS)}")


def _fail(kind: str, reason: str, code: int) -> int:
    print(f"{kind}: {' '.join(str(reason).split())}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "serve":
        import uvicorn

        uvicorn.run("hypocrit.service:app", host=args.host, port=args.port)
        return 0
    try:
        if args.format == "csv" and args.command not in CSV_COMMANDS:
            raise InputError(f"--format csv is only available for {', '.join(CSV_COMMANDS)}")
        payload = request_payload(args)
        if args.server:
            result = _call_remote(args.server, args.command, payload)
        else:
            result = _call_local(args.command, payload)
        if not args.timings:
            result = strip_timings(result)
        text = render(args.command, result, args.format)
    except HypocritError as exc:
        return _fail(exc.kind, exc, exc.exit_code)
    except RemoteError as exc:
        return _fail(exc.kind, exc, exc.exit_code)
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
