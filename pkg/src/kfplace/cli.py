"""Command-line front end.

Thin client over the HTTP service: every subcommand builds one request,
posts it (in-process by default, over the wire with --url), prints the JSON
report to stdout and a one-line summary to stderr. Identical argv and seeds
give byte-identical stdout; all randomness lives server-side behind seeds.

Exit codes: 0 success, 1 usage or malformed input, 2 infeasible problem,
3 verification mismatch, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import httpx

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_MISMATCH = 3
EXIT_NUMERICAL = 4

_STATUS_EXIT = {400: EXIT_USAGE, 422: EXIT_USAGE, 409: EXIT_INFEASIBLE}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract reserves 2 for
    # infeasibility, so route parse failures to exit 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _client(url: str | None):
    if url:
        return httpx.Client(base_url=url, timeout=600.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

        from .service import app
        return TestClient(app, raise_server_exceptions=False)


def _load_instance(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _bits(text: str) -> list[int]:
    from .kalman import Indicator

    return list(Indicator.parse(text).bits)


def _floats(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _ints(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def build_parser() -> tuple[_Parser, dict[str, _Parser]]:
    common = _Parser(add_help=False)
    common.add_argument("--url", help="service base URL (default: run in-process)")
    common.add_argument(
        "--config",
        help="JSON file of flag defaults, overridden by explicit flags",
    )

    parser = _Parser(prog="kfplace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    subs: dict[str, _Parser] = {}

    def add(name, **kw):
        p = sub.add_parser(name, parents=[common], **kw)
        subs[name] = p
        return p

    p = add("place", help="choose the cheapest-feasible best sensor placement")
    p.add_argument("instance", help="instance JSON path")
    p.add_argument("--objective", choices=("priori", "posteriori"), default="priori")

    p = add("attack", help="worst budgeted sensor removal against a placement")
    p.add_argument("instance")
    p.add_argument("--placement", required=True, help="bits, e.g. 0111 or 0,1,1,1")
    p.add_argument("--objective", choices=("priori", "posteriori"), default="priori")

    p = add("resilient", help="placement minimizing the worst post-attack covariance")
    p.add_argument("instance")
    p.add_argument("--objective", choices=("priori", "posteriori"), default="priori")

    p = add("verify", help="compare solvers against brute-force enumeration")
    p.add_argument("instance")
    p.add_argument("--problem", choices=("gkfsp", "gkfsa", "rgkfsp", "all"), default="all")
    p.add_argument("--placement", help="fixed placement for the attack problem")
    p.add_argument("--objective", choices=("priori", "posteriori"), default="priori")
    p.add_argument("--gap-tol", type=float, default=1e-8)

    p = add("bound", help="noise-correction matrices and trace bounds")
    p.add_argument("instance")
    p.add_argument("--placement", required=True)

    p = add("experiment", help="suboptimality sweep over sensor-noise levels")
    p.add_argument("--problem", choices=("gkfsp", "gkfsa", "rgkfsp"), required=True)
    p.add_argument("--realizations", type=int, default=1)
    p.add_argument("--sigma-v2", default="0.01,0.05,0.1,0.2,0.5", help="comma list")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--edge-count", type=int, default=15)
    p.add_argument("--sigma-w2", type=float, default=0.1)
    p.add_argument("--brute-cap", type=int, default=12)
    p.add_argument("--objective", choices=("priori", "posteriori"), default="priori")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", help="write the CSV here as well")

    p = add("reduce-subset-sum", help="encode a subset-sum instance as a placement problem")
    p.add_argument("--sizes", required=True, help="comma list of positive integers")
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--out", help="write the instance JSON here as well")

    p = add("gen", help="generate a random instance")
    p.add_argument("--kind", choices=("stochastic", "normal"), default="stochastic")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--extra-edges", type=int)
    p.add_argument("--edge-count", type=int, default=15)
    p.add_argument("--sigma-w2", type=float)
    p.add_argument("--sigma-v2", type=float, default=0.0)
    p.add_argument("--out", help="write the instance JSON here as well")

    p = add("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser, subs


def _apply_config(argv, subs) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    with open(known.config) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("config file must hold a JSON object")
    for p in subs.values():
        dests = {a.dest for a in p._actions}
        p.set_defaults(
            **{k.replace("-", "_"): v for k, v in cfg.items() if k.replace("-", "_") in dests}
        )


def _print_report(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _finish(resp, summary=None) -> int:
    """Print the response report and map HTTP status to an exit code."""
    try:
        payload = resp.json()
    except ValueError:
        payload = {"error": "bad_response", "message": resp.text}
    _print_report(payload)
    if resp.status_code == 200:
        if summary:
            print(summary(payload), file=sys.stderr)
        return EXIT_OK
    msg = payload.get("message") or payload.get("detail") or resp.text
    print(f"error ({resp.status_code}): {msg}", file=sys.stderr)
    return _STATUS_EXIT.get(resp.status_code, EXIT_NUMERICAL)


def _write(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


def _dispatch(args) -> int:
    if args.subcommand == "serve":
        import uvicorn

        from .service import app
        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK

    client = _client(args.url)
    with client:
        if args.subcommand == "place":
            resp = client.post(
                "/place",
                json={"instance": _load_instance(args.instance), "objective": args.objective},
            )
            return _finish(
                resp,
                lambda p: f"placed {p['support']} zeta={p['zeta']} objective={p['objective']}",
            )

        if args.subcommand == "attack":
            resp = client.post(
                "/attack",
                json={
                    "instance": _load_instance(args.instance),
                    "placement": _bits(args.placement),
                    "objective": args.objective,
                },
            )
            return _finish(
                resp,
                lambda p: (
                    f"removed {p['removed']} survivors={p['survivors']} "
                    f"zeta={p['zeta']} objective={p['objective']}"
                ),
            )

        if args.subcommand == "resilient":
            resp = client.post(
                "/resilient",
                json={"instance": _load_instance(args.instance), "objective": args.objective},
            )

            def _summary(p):
                if not p["feasible"]:
                    return "no feasible placement; reporting the empty placement"
                return (
                    f"placed {p['support']} worst attack {p['worst_attack']} "
                    f"objective={p['objective']}"
                )

            return _finish(resp, _summary)

        if args.subcommand == "verify":
            body = {
                "instance": _load_instance(args.instance),
                "problem": args.problem,
                "objective": args.objective,
                "gap_tol": args.gap_tol,
            }
            if args.placement:
                body["placement"] = _bits(args.placement)
            resp = client.post("/verify", json=body)
            code = _finish(
                resp,
                lambda p: (
                    f"{sum(e['match'] for e in p['entries'])}/{len(p['entries'])} "
                    "problems match"
                ),
            )
            if code == EXIT_OK and not resp.json()["match"]:
                return EXIT_MISMATCH
            return code

        if args.subcommand == "bound":
            resp = client.post(
                "/bound",
                json={
                    "instance": _load_instance(args.instance),
                    "placement": _bits(args.placement),
                },
            )
            return _finish(
                resp,
                lambda p: (
                    f"bound_priori={p['bound_priori']} "
                    f"bound_posteriori={p['bound_posteriori']} "
                    f"joseph={p['bound_posteriori_joseph']}"
                ),
            )

        if args.subcommand == "experiment":
            resp = client.post(
                "/experiment",
                json={
                    "problem": args.problem,
                    "realizations": args.realizations,
                    "sigma_v2_values": _floats(args.sigma_v2),
                    "seed": args.seed,
                    "n": args.n,
                    "edge_count": args.edge_count,
                    "sigma_w2": args.sigma_w2,
                    "brute_cap": args.brute_cap,
                    "objective": args.objective,
                    "jobs": args.jobs,
                },
            )
            code = _finish(
                resp, lambda p: f"{len(p['rows'])} rows over sigma_v2={args.sigma_v2}"
            )
            if code == EXIT_OK and args.out:
                _write(args.out, resp.json()["csv"])
                print(f"wrote {args.out}", file=sys.stderr)
            return code

        if args.subcommand == "reduce-subset-sum":
            resp = client.post(
                "/reduce-subset-sum",
                json={"sizes": _ints(args.sizes), "target": args.target},
            )
            code = _finish(
                resp,
                lambda p: (
                    f"{p['instance']['n']}-node instance, threshold={p['threshold']}"
                ),
            )
            if code == EXIT_OK and args.out:
                _write(
                    args.out,
                    json.dumps(resp.json()["instance"], indent=2, sort_keys=True) + "\n",
                )
                print(f"wrote {args.out}", file=sys.stderr)
            return code

        if args.subcommand == "gen":
            resp = client.post(
                "/generate",
                json={
                    "kind": args.kind,
                    "n": args.n,
                    "seed": args.seed,
                    "extra_edges": args.extra_edges,
                    "edge_count": args.edge_count,
                    "sigma_w2": args.sigma_w2,
                    "sigma_v2": args.sigma_v2,
                },
            )
            code = _finish(
                resp, lambda p: f"generated {args.kind} instance n={p['instance']['n']}"
            )
            if code == EXIT_OK and args.out:
                _write(
                    args.out,
                    json.dumps(resp.json()["instance"], indent=2, sort_keys=True) + "\n",
                )
                print(f"wrote {args.out}", file=sys.stderr)
            return code

    raise AssertionError(f"unhandled subcommand {args.subcommand!r}")


def entry(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser, subs = build_parser()
    try:
        _apply_config(argv, subs)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(entry())
