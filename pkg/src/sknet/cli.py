"""Command-line front end.

Exit codes: 0 success, 2 bad arguments or inputs, 3 unusable net (empty
shells), 4 enumeration budget exceeded, 5 audit failure, 6 target missed.
Every option may also come from a TOML or JSON file given with
``--config``; explicit flags win over file values.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import matcore as mc
from .errors import BudgetExceeded, InvalidInput, OutOfBranch, SknetError, SynthesisGap
from .gates import MAX_QUBITS, GateSet, standard_gateset
from .nets import (
    NetParams,
    ShellNet,
    audit_net,
    audit_shell,
    build_complement,
    build_exhaustive,
    build_heuristic,
)
from .skc import MockBackend, NetBackend, iterations_needed, sk_recurse

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK = 0
EXIT_ARGS = 2
EXIT_UNUSABLE = 3
EXIT_BUDGET = 4
EXIT_AUDIT = 5
EXIT_MISSED = 6

COMMANDS = ("gates", "netbuild", "netcheck", "synthesize", "bench")
METHODS = ("exhaustive", "heuristic", "complement")
BACKENDS = ("net", "mock")

DEFAULTS = {
    "qubits": 1,
    "L": 60,
    "max_len": 3,
    "samples": 200,
    "seed": 0,
    "method": "exhaustive",
    "backend": "net",
    "epsilon0": 1e-3,
    "floor": 1e-6,
}

BENCH_FIELDS = ("epsilon", "levels", "achieved", "length", "seconds")


class UsageError(SknetError):
    pass


def _dump(obj) -> str:
    # json writes floats via repr, which round-trips exactly
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _write(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON file with default option values")
    common.add_argument("--gates", help="gate-set JSON")
    common.add_argument("--net", help="net JSON (input)")
    common.add_argument("--target", help="target matrix JSON")
    common.add_argument("--out", help="output path")
    common.add_argument("--q", type=float)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--epsilon0", type=float, help="mock backend resolution")
    common.add_argument("--floor", type=float, help="smallest epsilon of the bench grid")
    common.add_argument("--grid", help="comma-separated epsilon list for bench")
    common.add_argument("--max-len", dest="max_len", type=int)
    common.add_argument("--L", dest="L", type=int)
    common.add_argument("--levels", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--method", choices=METHODS)
    common.add_argument("--backend", choices=BACKENDS)
    common.add_argument("--qubits", type=int)
    common.add_argument("--shell", type=int, help="source shell for method=complement")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sknet", description="Shell-net Solovay-Kitaev synthesis")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        if p.suffix == ".json":
            raw = json.loads(p.read_text())
        else:
            raw = tomllib.loads(p.read_text())
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise UsageError("config root must be a table")
    return {k.replace("-", "_"): v for k, v in raw.items()}


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then config-file values, then explicit flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(_load_config(args.config))
    for k, v in vars(args).items():
        if v is not None and k != "config":
            cfg[k] = v
    if isinstance(cfg.get("grid"), str):
        cfg["grid"] = [float(x) for x in cfg["grid"].split(",") if x.strip()]
    return cfg


def _need(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise UsageError(f"{cfg['command']}: missing required option(s): {', '.join('--' + k for k in missing)}")


def _check_inputs(cfg: dict, *keys: str) -> None:
    for k in keys:
        if cfg.get(k) is not None and not Path(cfg[k]).is_file():
            raise UsageError(f"--{k}: file not found: {cfg[k]}")


def _check_output(cfg: dict) -> None:
    _need(cfg, "out")
    parent = Path(cfg["out"]).resolve().parent
    if not parent.is_dir():
        raise UsageError(f"--out: directory does not exist: {parent}")


def _gateset(cfg: dict) -> GateSet:
    if cfg.get("gates"):
        return GateSet.load(cfg["gates"])
    return standard_gateset(int(cfg["qubits"]))


def _params(cfg: dict, d: int) -> NetParams:
    _need(cfg, "epsilon")
    return NetParams(q=float(cfg.get("q") or 2.0), epsilon=float(cfg["epsilon"]), L=int(cfg["L"]), d=d)


def _print_cards(net: ShellNet) -> None:
    print("shell cardinalities: " + " ".join(str(c) for c in net.cardinalities()))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_gates(cfg: dict) -> int:
    _check_output(cfg)
    n = int(cfg["qubits"])
    if not 1 <= n <= MAX_QUBITS:
        raise UsageError(f"--qubits must be in 1..{MAX_QUBITS}, got {n}")
    gs = standard_gateset(n)
    gs.save(cfg["out"])
    print(f"{len(gs)} gates on {n} qubit(s), dim {gs.dim}: {' '.join(g.label for g in gs.gates)}")
    return EXIT_OK


def _seed_net(cfg: dict, gs: GateSet, params: NetParams) -> ShellNet:
    if cfg.get("net"):
        return ShellNet.load(cfg["net"], gs)
    # inline recipe: shell 0 of an exhaustive enumeration
    full = build_exhaustive(gs, params, int(cfg["max_len"]))
    seed = ShellNet(params, gs)
    for e in full.shells[0]:
        if e.word.length:
            seed.try_insert(e.word, e.matrix, e.dist)
    return seed


def cmd_netbuild(cfg: dict) -> int:
    _check_inputs(cfg, "gates", "net")
    _check_output(cfg)
    method = cfg["method"]
    gs = _gateset(cfg)
    if method == "complement":
        return _netbuild_complement(cfg, gs)
    params = _params(cfg, gs.dim)
    out = cfg["out"]
    if method == "exhaustive":
        net = build_exhaustive(gs, params, int(cfg["max_len"]))
        log_text = f"# exhaustive max_len {cfg['max_len']}\n"
    else:
        net, blog = build_heuristic(gs, params, _seed_net(cfg, gs, params))
        log_text = blog.to_text()
    net.save(out)
    log_text += "# cardinalities " + " ".join(map(str, net.cardinalities())) + "\n"
    empty = net.empty_shells()
    log_text += "# empty_shells " + " ".join(map(str, empty)) + "\n"
    _write(out + ".log", log_text)
    _print_cards(net)
    print(f"k = {net.params.k}, size {net.size()}, max word length {net.max_word_length()}")
    if empty:
        print(f"unusable net: shells {empty} hold only the identity", file=sys.stderr)
        return EXIT_UNUSABLE
    return EXIT_OK


def _netbuild_complement(cfg: dict, gs: GateSet) -> int:
    _need(cfg, "net")
    net = ShellNet.load(cfg["net"], gs)
    q = float(cfg["q"]) if cfg.get("q") is not None else net.params.q
    if not q > 4:
        raise UsageError(f"complement construction needs q > 4, got {q}")
    src = int(cfg.get("shell") or 0)
    if not 0 <= src <= net.params.k:
        raise UsageError(f"--shell must be in 0..{net.params.k}")
    cand = build_complement(net.shells[src], q)
    report = audit_shell(cand, gs.dim, int(cfg["samples"]), int(cfg["seed"]))
    doc = {
        "source_shell": src,
        "q": q,
        "radius": cand.radius,
        "delta": cand.delta,
        "gate_set_hash": gs.content_hash,
        "elements": [{"word": list(e.word.indices), "dist": e.dist} for e in cand],
        "audit": report.to_json(),
    }
    _write(cfg["out"], _dump(doc))
    print(f"complement of shell {src}: {len(cand)} elements, audit {'pass' if report.verdict else 'fail'}")
    return EXIT_OK


def cmd_netcheck(cfg: dict) -> int:
    _need(cfg, "net")
    _check_inputs(cfg, "gates", "net")
    _check_output(cfg)
    gs = _gateset(cfg)
    net = ShellNet.load(cfg["net"], gs)
    reports = audit_net(net, int(cfg["samples"]), int(cfg["seed"]))
    passed = all(r.verdict for r in reports)
    _write(cfg["out"], _dump({"passed": passed, "shells": [r.to_json() for r in reports]}))
    for r in reports:
        print(f"shell {r.shell:3d}  covered {r.covered}/{r.samples}  worst gap {r.worst_gap:.6g}  {'pass' if r.verdict else 'FAIL'}")
    return EXIT_OK if passed else EXIT_AUDIT


def _backend(cfg: dict, d: int):
    if cfg["backend"] == "mock":
        return MockBackend(d, float(cfg["epsilon0"]), seed=int(cfg["seed"]))
    _need(cfg, "net")
    gs = _gateset(cfg)
    return NetBackend(ShellNet.load(cfg["net"], gs))


def _levels_for(cfg: dict, epsilon: float, eps0: float) -> int:
    if cfg.get("levels") is not None:
        return int(cfg["levels"])
    if eps0 <= 0 or epsilon >= eps0:
        return 0
    return iterations_needed(epsilon, eps0)


def cmd_synthesize(cfg: dict) -> int:
    _need(cfg, "target", "epsilon")
    _check_inputs(cfg, "gates", "net", "target")
    _check_output(cfg)
    with open(cfg["target"]) as fh:
        try:
            target = mc.matrix_from_json(json.load(fh))
        except json.JSONDecodeError as exc:
            raise UsageError(f"target is not JSON: {exc}") from exc
    if not mc.is_unitary(target) or not mc.is_special(target):
        raise UsageError("target is not special unitary within tolerance")
    eps = float(cfg["epsilon"])
    base = _backend(cfg, len(target))
    if base.gateset.dim != len(target):
        raise UsageError(f"target dim {len(target)} does not match backend dim {base.gateset.dim}")
    n = _levels_for(cfg, eps, base.epsilon0)
    try:
        res = sk_recurse(target, n, base)
    except OutOfBranch as exc:
        print(f"synthesis failed: {exc}", file=sys.stderr)
        return EXIT_MISSED
    _write(cfg["out"], _dump(res.to_json()))
    print(f"achieved {res.achieved:.6g} (requested {eps:.6g}), levels {n}, length {res.length}")
    return EXIT_OK if res.achieved <= eps else EXIT_MISSED


def decade_grid(floor: float) -> list[float]:
    """``1e-1, 3e-2, 1e-2, 3e-3, ...`` down to ``floor`` inclusive."""
    out = []
    e = 1
    while True:
        for mant in (1.0, 3.0):
            x = mant * 10.0 ** -(e + (mant == 3.0))
            if x < floor * (1 - 1e-12):
                return out
            out.append(x)
        e += 1


def length_slope(rows: list[dict]) -> float:
    """Least-squares slope of ``log(length)`` against ``log(log(1/eps))``."""
    pts = [(math.log(math.log(1 / r["epsilon"])), math.log(r["length"])) for r in rows if r["length"] > 0 and r["epsilon"] < 1]
    if len(pts) < 2 or len({x for x, _ in pts}) < 2:
        return float("nan")
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def write_bench_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(r[k]) if isinstance(r[k], float) else r[k] for k in BENCH_FIELDS})


def read_bench_csv(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        return [
            {
                "epsilon": float(r["epsilon"]),
                "levels": int(r["levels"]),
                "achieved": float(r["achieved"]),
                "length": int(r["length"]),
                "seconds": float(r["seconds"]),
            }
            for r in csv.DictReader(fh)
        ]


def format_bench(rows: list[dict], slope: float, growth: float | None) -> str:
    head = f"{'epsilon':>10} {'levels':>6} {'achieved':>12} {'length':>8} {'seconds':>9}"
    lines = [head]
    for r in rows:
        lines.append(
            f"{r['epsilon']:>10.3g} {r['levels']:>6d} {r['achieved']:>12.4e} {r['length']:>8d} {r['seconds']:>9.4f}"
        )
    lines.append(f"# slope of log(length) vs log(log(1/eps)): {slope:.4f}")
    if growth is not None:
        lines.append(f"# measured length growth per level: {growth:.4f}")
    return "\n".join(lines) + "\n"


def cmd_bench(cfg: dict) -> int:
    _check_inputs(cfg, "gates", "net")
    _check_output(cfg)
    grid = cfg.get("grid")
    if grid is None:
        grid = decade_grid(float(cfg["floor"]))
    grid = [float(x) for x in grid]
    if not grid:
        raise UsageError("bench: empty epsilon grid")
    if any(not 0 < x < 1 for x in grid):
        raise UsageError("bench: grid values must lie in (0, 1)")
    d = 2 ** int(cfg["qubits"]) if not cfg.get("gates") else GateSet.load(cfg["gates"]).dim
    seed = int(cfg["seed"])
    rows = []
    growth = []
    for j, eps in enumerate(grid):
        base = _backend(cfg, d)
        n = _levels_for({"levels": None}, eps, base.epsilon0)
        target = mc.haar_sample(d, mc.rng(seed, j))
        t0 = time.perf_counter()
        res = sk_recurse(target, n, base)
        rows.append(
            {"epsilon": eps, "levels": n, "achieved": res.achieved, "length": res.length, "seconds": time.perf_counter() - t0}
        )
        ll = res.level_lengths
        growth += [b / a for a, b in zip(ll, ll[1:]) if a > 0]
    slope = length_slope(rows)
    g = max(growth) if growth else None
    out = cfg["out"]
    _write(out, format_bench(rows, slope, g))
    write_bench_csv(str(Path(out).with_suffix(".csv")), rows)
    sys.stdout.write(format_bench(rows, slope, g))
    return EXIT_OK


HANDLERS = {
    "gates": cmd_gates,
    "netbuild": cmd_netbuild,
    "netcheck": cmd_netcheck,
    "synthesize": cmd_synthesize,
    "bench": cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ARGS if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        return HANDLERS[cfg["command"]](cfg)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except SynthesisGap as exc:
        print(f"unusable net: {exc}", file=sys.stderr)
        return EXIT_UNUSABLE
    except (UsageError, InvalidInput, OSError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS


if __name__ == "__main__":
    sys.exit(main())
