"""Command-line client for the index service.

All file handling (record TSVs, index files, CSV results) happens
locally; computation goes through the HTTP API. By default the app runs
in process, so no server needs to be up; pass --server to target a
running instance instead.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 data/format error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import httpx

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .seeds import derive_seed

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4

# service error codes that indicate malformed data rather than bad flags
_DATA_CODES = {
    "bad-magic", "version-mismatch", "truncated-file", "persistence",
    "duplicate-key", "duplicate-label", "record-format",
}


class CliError(Exception):
    def __init__(self, exit_code: int, message: str):
        super().__init__(message)
        self.exit_code = exit_code


class ServiceClient:
    def __init__(self, server: str | None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=None)
        else:
            import warnings

            with warnings.catch_warnings():
                # starlette warns about its httpx-backed test client; the
                # in-process transport is exactly what we want here
                warnings.simplefilter("ignore")
                from starlette.testclient import TestClient

            from .service import create_app

            self._client = TestClient(
                create_app(),
                base_url="http://hbf.internal",
                raise_server_exceptions=False,
            )

    def request(self, method: str, path: str, **kwargs) -> dict:
        try:
            response = self._client.request(method, path, **kwargs)
        except httpx.HTTPError as exc:
            raise CliError(EXIT_IO, f"service request failed: {exc}") from exc
        if response.status_code >= 400:
            raise CliError(*self._classify(response))
        return response.json()

    def get(self, path: str, **params) -> dict:
        clean = {k: v for k, v in params.items() if v is not None}
        return self.request("GET", path, params=clean)

    def post(self, path: str, body: dict) -> dict:
        return self.request("POST", path, json=body)

    @staticmethod
    def _classify(response) -> tuple[int, str]:
        try:
            payload = response.json()
        except ValueError:
            return EXIT_IO, f"service error (HTTP {response.status_code})"
        error = payload.get("error")
        if isinstance(error, dict) and "code" in error:
            code = error["code"]
            exit_code = EXIT_DATA if code in _DATA_CODES else EXIT_USAGE
            return exit_code, f"{code}: {error.get('message', '')}"
        # FastAPI request-validation errors
        detail = payload.get("detail")
        return EXIT_USAGE, f"invalid request: {detail}"


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from exc


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from exc


def _write_bytes(path: str, blob: bytes) -> None:
    try:
        Path(path).write_bytes(blob)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from exc


def _write_text(path: str, text: str) -> None:
    try:
        # newline="" keeps CSV CRLF endings byte-exact on every platform
        Path(path).write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from exc


def _records_from_tsv(path: str) -> list[dict]:
    records = []
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise CliError(
                EXIT_DATA, f"{path}:{lineno}: expected key<TAB>value"
            )
        records.append({"key": parts[0], "value": parts[1]})
    return records


def _labels_from_file(path: str) -> list[str]:
    labels = [line.strip() for line in _read_text(path).splitlines() if line.strip()]
    if not labels:
        raise CliError(EXIT_DATA, f"{path}: no labels found")
    return labels


def _memory_blob_b64(path: str) -> str:
    import base64

    return base64.b64encode(_read_bytes(path)).decode("ascii")


def _save_memory_response(path: str, payload: dict) -> None:
    import base64

    _write_bytes(path, base64.b64decode(payload["blob"]))


def _print_kv(data: dict, skip=("experiment",)) -> None:
    for key, value in data.items():
        if key in skip or key == "points":
            continue
        print(f"{key}={_fmt(value)}")
    for point in data.get("points", ()):
        fields = " ".join(f"{k}={_fmt(v)}" for k, v in point.items())
        print(f"point {fields}")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _decoder_body(args) -> dict | None:
    if args.tau is None:
        return None
    return {"tau": args.tau, "delta": args.delta, "top_k": args.top_k}


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_build(args, client: ServiceClient) -> int:
    records = _records_from_tsv(args.input)
    body = {
        "records": records,
        "dim": args.dim,
        "rho": args.rho,
        "key_seed": derive_seed(args.seed, "codebook", "key"),
        "value_seed": derive_seed(args.seed, "codebook", "value"),
    }
    payload = client.post("/index/build", body)
    _save_memory_response(args.out, payload)
    print(f"items={payload['item_count']}")
    print(f"dim={payload['dim']}")
    print(f"rho={payload['rho']}")
    print(f"out={args.out}")
    return EXIT_OK


def cmd_insert(args, client: ServiceClient) -> int:
    body = {
        "memory": _memory_blob_b64(args.index),
        "key": args.key,
        "value": args.value,
    }
    payload = client.post("/index/insert", body)
    out = args.out or args.index
    _save_memory_response(out, payload)
    print(f"items={payload['item_count']}")
    print(f"out={out}")
    return EXIT_OK


def cmd_query(args, client: ServiceClient) -> int:
    body = {
        "memory": _memory_blob_b64(args.index),
        "key": args.key,
        "labels": _labels_from_file(args.labels),
        "decoder": _decoder_body(args),
        "epsilon": args.eps,
        "probe_count": args.probes,
        "seed": args.seed,
    }
    if args.members:
        body["members"] = _records_from_tsv(args.members)
    payload = client.post("/index/query", body)
    print(payload["label"] if payload["hit"] else "BOTTOM")
    print(f"s1={payload['best_score']}")
    print(f"s2={payload['runner_up']}")
    for i, entry in enumerate(payload["top"]):
        print(f"top[{i}]={entry['label']}:{entry['score']}")
    return EXIT_OK


def cmd_calibrate(args, client: ServiceClient) -> int:
    body = {
        "memory": _memory_blob_b64(args.index),
        "labels": _labels_from_file(args.labels),
        "probe_count": args.probes,
        "epsilon": args.eps,
        "seed": args.seed,
    }
    if args.members:
        body["members"] = _records_from_tsv(args.members)
    payload = client.post("/index/calibrate", body)
    _print_kv(payload)
    return EXIT_OK


def _load_config(path: str | None, section: str) -> dict:
    if not path:
        return {}
    try:
        data = tomllib.loads(_read_text(path))
    except tomllib.TOMLDecodeError as exc:
        raise CliError(EXIT_DATA, f"{path}: bad TOML: {exc}") from exc
    value = data.get(section, {})
    if not isinstance(value, dict):
        raise CliError(EXIT_DATA, f"{path}: [{section}] must be a table")
    return dict(value)


_EXPERIMENT_OVERRIDES = (
    ("dim", "dim"), ("items", "items"), ("labels", "labels"),
    ("trials", "trials"), ("seed", "seed"), ("rho", "rho"),
    ("eps", "epsilon"), ("probes", "probe_count"),
)


def _experiment_body(args) -> dict:
    body = _load_config(args.config, "experiment")
    for flag, field in _EXPERIMENT_OVERRIDES:
        value = getattr(args, flag, None)
        if value is not None:
            body[field] = value
    if getattr(args, "noise", None):
        body["noise"] = [_parse_noise(text) for text in args.noise]
    if getattr(args, "grid", None):
        body["items_grid"] = [int(x) for x in args.grid.split(",") if x.strip()]
    if getattr(args, "replicas", None) is not None:
        body["replicas"] = args.replicas
    body.setdefault("seed", 0)
    return body


def _parse_noise(text: str) -> dict:
    kind, sep, amount = text.partition(":")
    if not sep:
        raise CliError(EXIT_USAGE, f"noise spec {text!r} must look like kind:amount")
    try:
        return {"kind": kind.strip(), "amount": float(amount)}
    except ValueError as exc:
        raise CliError(EXIT_USAGE, f"bad noise amount in {text!r}") from exc


def cmd_experiment(args, client: ServiceClient) -> int:
    if args.kind == "baseline":
        return _run_baseline(args, client)
    body = _experiment_body(args)
    if args.kind == "capacity" and "items_grid" not in body:
        raise CliError(EXIT_USAGE, "capacity sweep needs items_grid (config) or --grid")
    body.pop("replicas", None)
    if args.kind != "capacity":
        body.pop("items_grid", None)
    payload = client.post(f"/experiments/{args.kind}", body)
    _print_kv(payload["summary"])
    if args.out:
        _write_text(args.out, payload["csv"])
        print(f"csv={args.out}")
    return EXIT_OK


def _run_baseline(args, client: ServiceClient) -> int:
    body = _load_config(args.config, "baseline")
    for flag, field in (
        ("p", "p"), ("ell", "ell"), ("hop_time", "hop_time"),
        ("trials", "trials"), ("seed", "seed"),
        ("max_attempts", "max_attempts"),
        ("hbf_accuracy", "hbf_accuracy"), ("hbf_trials", "hbf_trials"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            body[field] = value
    body.setdefault("seed", 0)
    missing = [k for k in ("p", "ell", "hop_time", "trials") if k not in body]
    if missing:
        raise CliError(EXIT_USAGE, f"baseline needs {', '.join(missing)}")
    payload = client.post("/experiments/baseline", body)
    _print_kv(payload["summary"])
    if args.out:
        _write_text(args.out, payload["csv"])
        print(f"csv={args.out}")
    return EXIT_OK


def cmd_amplify(args, client: ServiceClient) -> int:
    body = _experiment_body(args)
    body.pop("items_grid", None)
    body.setdefault("replicas", 3)
    payload = client.post("/experiments/amplify", body)
    _print_kv(payload["summary"])
    if args.out:
        _write_text(args.out, payload["csv"])
        print(f"csv={args.out}")
    return EXIT_OK


def cmd_bounds(args, client: ServiceClient) -> int:
    lines: list[tuple[str, float]] = []
    if args.family == "fp":
        if args.eps is not None:
            tau = client.get("/bounds/fp-threshold", n=args.n, d=args.d, eps=args.eps)
            lines.append(("tau", tau["value"]))
            back = client.get("/bounds/fp-bound", n=args.n, d=args.d, tau=tau["value"])
            lines.append(("bound", back["value"]))
        elif args.tau is not None:
            payload = client.get("/bounds/fp-bound", n=args.n, d=args.d, tau=args.tau)
            lines.append(("bound", payload["value"]))
        else:
            raise CliError(EXIT_USAGE, "bounds fp needs --eps or --tau")
    elif args.family == "fn":
        payload = client.get(
            "/bounds/fn-bound", d=args.d, h=args.h, pe=args.pe, n=args.n, t=args.t
        )
        lines.append(("fn_bound", payload["value"]))
        mu = client.get("/bounds/signal-mean", d=args.d, h=args.h, pe=args.pe)
        lines.append(("mu", mu["value"]))
    elif args.family == "signal":
        payload = client.get("/bounds/signal-mean", d=args.d, h=args.h, pe=args.pe)
        lines.append(("mu", payload["value"]))
    elif args.family == "margin":
        payload = client.get(
            "/bounds/margin-failure", rho=args.rho, d=args.d, c=args.c, m=args.m
        )
        lines.extend(payload.items())
    elif args.family == "evt":
        if args.eps is not None:
            payload = client.get("/bounds/evt-exact", sigma=args.sigma, m=args.m, eps=args.eps)
        else:
            payload = client.get("/bounds/evt-approx", sigma=args.sigma, m=args.m, order=args.order)
        lines.append((payload["name"], payload["value"]))
    elif args.family == "invnorm":
        payload = client.get("/bounds/inv-norm-cdf", p=args.p)
        lines.append(("x", payload["value"]))
    for name, value in lines:
        print(f"{name}={value}")
    if args.out:
        from .storage import csv_text

        _write_text(args.out, csv_text(("name", "value"), lines))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hbf",
        description="Superposed key-value index: build, query, calibrate, measure.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--server", help="base URL of a running service (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", parents=[common], help="build an index from a TSV of records")
    p.add_argument("--input", required=True, help="TSV file, key<TAB>value per line")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--out", required=True, help="output index file")
    p.add_argument("--rho", type=float, default=None, help="gain per binding (default 1/sqrt(n))")
    p.add_argument("--seed", type=int, default=0, help="master seed for the codebooks")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("insert", parents=[common], help="insert one record into an index")
    p.add_argument("--index", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--value", required=True)
    p.add_argument("--out", help="output path (default: overwrite --index)")
    p.set_defaults(func=cmd_insert)

    p = sub.add_parser("query", parents=[common], help="decode one key against an index")
    p.add_argument("--index", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--labels", required=True, help="file with one candidate label per line")
    p.add_argument("--tau", type=float, default=None, help="absolute threshold (skips calibration)")
    p.add_argument("--delta", type=float, default=0.0, help="margin over the runner-up")
    p.add_argument("--top-k", dest="top_k", type=int, default=2)
    p.add_argument("--eps", type=float, default=0.01, help="calibration trigger rate")
    p.add_argument("--probes", type=int, default=256, help="calibration probe count")
    p.add_argument("--members", help="TSV of known-stored records for the margin fit")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("calibrate", parents=[common], help="fit decoder thresholds for an index")
    p.add_argument("--index", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--probes", type=int, default=1000)
    p.add_argument("--members", help="TSV of known-stored records")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("experiment", parents=[common], help="run a measurement campaign")
    p.add_argument("kind", choices=("fp", "fn", "capacity", "baseline"))
    p.add_argument("--config", help="TOML experiment manifest")
    p.add_argument("--out", help="write per-trial CSV here")
    p.add_argument("--dim", type=int)
    p.add_argument("--items", type=int)
    p.add_argument("--labels", type=int, help="size of the candidate label set")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--probes", type=int)
    p.add_argument("--noise", action="append", help="kind:amount, repeatable (e.g. key-hamming:500)")
    p.add_argument("--grid", help="capacity sweep item counts, comma separated")
    p.add_argument("--p", dest="p", type=float, help="baseline per-hop success probability")
    p.add_argument("--ell", type=int, help="baseline hop count")
    p.add_argument("--time", dest="hop_time", type=float, help="baseline per-hop time")
    p.add_argument("--max-attempts", dest="max_attempts", type=int)
    p.add_argument("--hbf-accuracy", dest="hbf_accuracy", type=float,
                   help="add a comparison row for a measured one-shot accuracy")
    p.add_argument("--hbf-trials", dest="hbf_trials", type=int)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("amplify", parents=[common],
                       help="paired single-memory vs voted-replicas experiment")
    p.add_argument("--config", help="TOML experiment manifest")
    p.add_argument("--out", help="write per-trial CSV here")
    p.add_argument("--replicas", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--items", type=int)
    p.add_argument("--labels", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--probes", type=int)
    p.add_argument("--noise", action="append")
    p.set_defaults(func=cmd_amplify)

    p = sub.add_parser("bounds", parents=[common], help="evaluate the closed-form bounds")
    p.add_argument("family", choices=("fp", "fn", "signal", "margin", "evt", "invnorm"))
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--pe", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--order", choices=("first", "gumbel"), default="first")
    p.add_argument("--p", type=float)
    p.add_argument("--out", help="also write name,value rows as CSV")
    p.set_defaults(func=cmd_bounds)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        client = ServiceClient(args.server)
        return args.func(args, client)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
