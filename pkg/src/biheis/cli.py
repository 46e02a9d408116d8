"""Command-line surface: a thin client over the HTTP service.

By default requests are served in-process; ``--url`` points the client at a
remote ``biheis serve`` instance.  Exit codes: 0 success, 1 verification
failure, 2 usage error, 3 numerical-accuracy failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_USAGE = 2
EXIT_ACCURACY = 3


@dataclass(frozen=True)
class RunConfig:
    alpha1: float = 1.0
    alpha2: float = 1.0
    precision: float = 1e-10
    t_ratio: float = 0.5
    t_count: int = 6
    t_max: float = 2.0
    output_format: str = "json"
    seed: int = 0
    parallelism: int = 1

    def __post_init__(self):
        if self.output_format not in ("csv", "json"):
            raise ValueError("output_format must be csv or json")
        if not (0.0 < self.t_ratio < 1.0):
            raise ValueError("t_ratio must lie in (0, 1)")
        if self.t_count < 1 or self.t_max <= 0.0:
            raise ValueError("t grid needs t_count >= 1 and t_max > 0")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")

    @property
    def effective_parallelism(self) -> int:
        cap = os.environ.get("BIHEIS_THREADS")
        if cap:
            return max(1, min(self.parallelism, int(cap)))
        return self.parallelism


def load_config(path: str | None, args: argparse.Namespace) -> RunConfig:
    """Config file first, then flag overrides."""
    cfg = RunConfig()
    if path:
        with open(path, encoding="utf-8") as fh:
            cfg = replace(cfg, **json.load(fh))
    overrides = {}
    if getattr(args, "alpha", None) is not None:
        overrides["alpha1"], overrides["alpha2"] = args.alpha
    for flag, name in (
        ("precision", "precision"),
        ("fmt", "output_format"),
        ("seed", "seed"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            overrides[name] = val
    if getattr(args, "t_grid", None) is not None:
        ratio, count, tmax = args.t_grid
        overrides.update(t_ratio=ratio, t_count=int(count), t_max=tmax)
    return replace(cfg, **overrides)


def _parse_floats(text: str, counts: tuple[int, ...], what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"malformed {what}: {exc}") from exc
    if len(vals) not in counts:
        raise argparse.ArgumentTypeError(
            f"{what} needs {' or '.join(map(str, counts))} comma-separated values"
        )
    return vals


def _alpha(text: str) -> tuple[float, float]:
    return tuple(_parse_floats(text, (2,), "--alpha"))


def _point(text: str) -> tuple[float, ...]:
    return tuple(_parse_floats(text, (5,), "--point"))


def _covector(text: str) -> dict:
    """R1,T1,T2,W with r2 inferred, or R1,R2,T1,T2,W explicitly."""
    vals = _parse_floats(text, (4, 5), "--covector")
    if len(vals) == 4:
        return {"r1": vals[0], "theta1": vals[1], "theta2": vals[2], "w": vals[3]}
    return {
        "r1": vals[0],
        "r2": vals[1],
        "theta1": vals[2],
        "theta2": vals[3],
        "w": vals[4],
    }


def _t_grid(text: str) -> tuple[float, int, float]:
    vals = _parse_floats(text, (3,), "--t-grid")
    return (vals[0], int(vals[1]), vals[2])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biheis", description=__doc__)
    parser.add_argument("--url", help="remote service URL (default: in-process)")
    parser.add_argument("--config", help="JSON config file")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--alpha", type=_alpha, help="frequencies A1,A2")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"))
        p.add_argument("--precision", type=float)
        p.add_argument("--seed", type=int)

    g = sub.add_parser("geodesic", help="sample a geodesic trajectory")
    common(g)
    g.add_argument("--covector", type=_covector, required=True)
    g.add_argument("--t-max", type=float, required=True)
    g.add_argument("--steps", type=int, default=100)

    c = sub.add_parser("cut", help="classify a point against the cut locus")
    common(c)
    c.add_argument("--point", type=_point, required=True)

    d = sub.add_parser("distance", help="distance from the origin")
    common(d)
    d.add_argument("--point", type=_point, required=True)

    h = sub.add_parser("heat", help="heat kernel values")
    common(h)
    h.add_argument("--point", type=_point, required=True)
    h.add_argument("--t", type=float)
    h.add_argument("--t-grid", type=_t_grid, help="RATIO,COUNT,TMAX")

    f = sub.add_parser("fit", help="small-time exponent fit")
    common(f)
    f.add_argument("--point", type=_point, required=True)

    v = sub.add_parser("verify", help="run a verification suite")
    common(v)
    v.add_argument("suite", nargs="?", default="all")

    lap = sub.add_parser("laplace", help="Morse-Bott tube-integral expansion")
    common(lap)
    lap.add_argument("--mode", choices=("synthetic", "tube"), default="tube")
    lap.add_argument("--point", type=_point, default=(0.0, 0.0, 0.0, 0.0, 1.0))

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    return parser


class Client:
    def __init__(self, url: str | None):
        if url:
            import httpx

            self._client = httpx.Client(base_url=url, timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import app

            self._client = TestClient(app)

    def post(self, path: str, payload: dict):
        resp = self._client.post(path, json=payload)
        if resp.status_code == 200:
            return EXIT_OK, resp.json()
        body = resp.json()
        if resp.status_code == 409:
            return EXIT_ACCURACY, body
        return EXIT_USAGE, body


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def emit_rows(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2, default=_fmt)
    if not rows:
        return ""
    header = list(rows[0].keys())
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(row[k]) for k in header))
    return "\n".join(lines) + "\n"


def emit_record(record: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(record, indent=2, default=_fmt)
    flat = {k: v for k, v in record.items() if not isinstance(v, (list, dict))}
    return emit_rows([flat], "csv")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args)
    except (ValueError, TypeError, OSError) as exc:
        print(f"error: bad configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK

    alpha = [cfg.alpha1, cfg.alpha2]
    client = Client(args.url)

    if args.command == "geodesic":
        code, body = client.post(
            "/geodesic",
            {
                "alpha": alpha,
                "covector": args.covector,
                "t_max": args.t_max,
                "steps": args.steps,
            },
        )
        if code == EXIT_OK:
            print(emit_rows(body["rows"], cfg.output_format), end="")
            return EXIT_OK

    elif args.command == "cut":
        code, body = client.post("/cut", {"alpha": alpha, "point": args.point})
        if code == EXIT_OK:
            print(emit_record(body, cfg.output_format))
            return EXIT_OK

    elif args.command == "distance":
        code, body = client.post("/distance", {"alpha": alpha, "point": args.point})
        if code == EXIT_OK:
            print(emit_record(body, cfg.output_format))
            return EXIT_OK

    elif args.command == "heat":
        if args.t is not None:
            ts = [args.t]
        else:
            ts = [cfg.t_max * cfg.t_ratio**j for j in range(cfg.t_count)]
        payload = {
            "alpha": alpha,
            "point": args.point,
            "precision": cfg.precision,
        }
        par = cfg.effective_parallelism
        if args.url and par > 1 and len(ts) > 1:
            # parallel sweep against a remote service; ordered reassembly
            with ThreadPoolExecutor(max_workers=par) as ex:
                results = list(
                    ex.map(lambda t: client.post("/heat", {**payload, "t": [t]}), ts)
                )
            code = next((c for c, _ in results if c != EXIT_OK), EXIT_OK)
            body = (
                {"rows": [r for _, b in results for r in b["rows"]]}
                if code == EXIT_OK
                else next(b for c, b in results if c != EXIT_OK)
            )
        else:
            code, body = client.post("/heat", {**payload, "t": ts})
        if code == EXIT_OK:
            print(emit_rows(body["rows"], cfg.output_format), end="")
            return EXIT_OK

    elif args.command == "fit":
        code, body = client.post("/fit", {"alpha": alpha, "point": args.point})
        if code == EXIT_OK:
            print(emit_record(body, cfg.output_format))
            return EXIT_OK

    elif args.command == "verify":
        code, body = client.post(
            "/verify", {"suite": args.suite, "seed": cfg.seed}
        )
        if code == EXIT_OK:
            for check in body["checks"]:
                print(
                    f"{check['status']} {check['name']}: "
                    f"margin={check['margin']:.3g} tolerance={check['tolerance']:g}"
                    + (f" ({check['detail']})" if check["detail"] else "")
                )
            return EXIT_OK if body["passed"] else EXIT_CHECK_FAILURE

    elif args.command == "laplace":
        code, body = client.post(
            "/laplace", {"alpha": alpha, "mode": args.mode, "point": args.point}
        )
        if code == EXIT_OK:
            print(emit_record(body, cfg.output_format))
            return EXIT_OK

    # error path shared by all commands
    msg = body.get("message") or json.dumps(body)
    print(f"error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
