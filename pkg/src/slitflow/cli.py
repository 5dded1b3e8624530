"""Command line entry point.

Every subcommand reads its options from an optional key=value config file
and then from flags, flags winning.  The resolved options are embedded in
every JSON document written, so a run can be repeated from its own output.

Config file grammar::

    # comment
    key = value

Keys are the long flag names with dashes or underscores.  Real-valued keys
use the literal grammar of :func:`slitflow.numerics.parse_real`
("p/q", "a+b*sqrt(d)", "0.1234~1e-9").
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

from . import bestapprox as ba_mod
from . import construction as cons
from . import contfrac as cf
from . import dimension as dim
from . import flowsim as fs
from . import surface as surf
from . import tree as tr
from .errors import BudgetExceeded, SlitflowError, UndecidableError
from .numerics import DEFAULT_BUDGET, NORMS, LiteralError, format_real, get_norm, parse_pair, parse_real

EXIT_OK, EXIT_INVALID, EXIT_UNDECIDABLE = 0, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# options


def _real(text: str) -> str:
    return format_real(parse_real(text))


def _pair(text: str) -> str:
    a, b = parse_pair(text)
    return f"{format_real(a)},{format_real(b)}"


def _int(text: str) -> str:
    return str(int(text))


def _pos_int(text: str) -> str:
    v = int(text)
    if v < 1:
        raise ValueError(f"expected a positive integer, got {text}")
    return str(v)


def _frac(text: str) -> str:
    return str(Fraction(text.strip()))


def _int_list(text: str) -> str:
    return ",".join(str(int(t)) for t in text.split(",") if t.strip())


def _norm(text: str) -> str:
    get_norm(text)
    return text


def _bool(text: str) -> str:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return "true"
    if low in ("0", "false", "no", "off"):
        return "false"
    raise ValueError(f"expected a boolean, got {text!r}")


def _choice(*allowed: str) -> Callable[[str], str]:
    def check(text: str) -> str:
        if text not in allowed:
            raise ValueError(f"expected one of {', '.join(allowed)}, got {text!r}")
        return text

    return check


def _plan(text: str) -> str:
    segs = [_segment(s) for s in text.split(",") if s.strip()]
    return ",".join(_segment_text(s) for s in segs)


def _segment(text: str) -> tr.Segment:
    parts = text.strip().split(":")
    if parts[0] not in tr.REGIONS or not 2 <= len(parts) <= 4:
        raise ValueError(f"plan segments look like region:levels[:alpha[:q_prev]], got {text!r}")
    alpha = Fraction(parts[2]) if len(parts) > 2 and parts[2] else None
    q_prev = int(parts[3]) if len(parts) > 3 else None
    return tr.Segment(parts[0], int(parts[1]), alpha, q_prev)


def _segment_text(s: tr.Segment) -> str:
    out = f"{s.region}:{s.levels}"
    if s.alpha is not None or s.q_prev is not None:
        out += f":{'' if s.alpha is None else s.alpha}"
    if s.q_prev is not None:
        out += f":{s.q_prev}"
    return out


@dataclass(frozen=True)
class Option:
    name: str
    parse: Callable[[str], str]
    default: str | None = None
    help: str = ""


COMMON = [
    Option("budget", _pos_int, str(DEFAULT_BUDGET), "precision budget in bits"),
    Option("seed", _int, "0", "random seed"),
    Option("output", str, None, "JSON output file (default stdout)"),
    Option("csv", str, None, "CSV output file"),
    Option("report", str, None, "directory for JSON, CSV and PNG figures"),
]

OPTIONS: dict[str, list[Option]] = {
    "contfrac": [
        Option("theta", _real, None, "real literal"),
        Option("depth", _pos_int, "10"),
    ],
    "bestapprox": [
        Option("x", _pair, None, "two literals separated by a comma"),
        Option("norm", _norm, "sup"),
        Option("qmax", _pos_int, "1000"),
    ],
    "pm": [
        Option("qs", _int_list, None, "comma-separated denominators"),
        Option("from_bestapprox", str, None, "bestapprox JSON lines file"),
        Option("x", _pair, None, "compute denominators for this vector"),
        Option("norm", _norm, "sup"),
        Option("qmax", _pos_int, "10000"),
        Option("compare_norms", _bool, "false"),
        Option("eps_tail", _frac, "1/1000"),
        Option("term_floor", _frac, "1/100"),
    ],
    "zexp": [
        Option("lambda", _real, None),
        Option("mu", _real, None),
        Option("theta", _real, None),
        Option("hmax", _pos_int, "1000"),
        Option("check_alternation", _bool, "false"),
    ],
    "tree": [
        Option("lambda", _real, None),
        Option("mu", _real, None),
        Option("mode", _choice("toy", "full", "finite-ellN"), "toy"),
        Option("depth", _int, "4"),
        Option("r", _frac, "3/2"),
        Option("delta", _frac, "1/10"),
        Option("epsilon", _frac, None),
        Option("schedule_depth", _int, None),
        Option("plan", _plan, "diophantine:4:20"),
        Option("w0", _int_list, None, "m,n of the initial slit"),
        Option("w0_range", _int_list, "1000,2000", "height window for the initial slit"),
        Option("norm", _norm, "sup"),
        Option("qmax", _pos_int, "300", "best approximation range for Liouville levels"),
        Option("branching", _pos_int, "2"),
        Option("cap", _pos_int, "100000"),
        Option("cap_bits", _pos_int, "4096"),
    ],
    "dimension": [
        Option("tree", str, None, "tree dump"),
        Option("tail_window", _int, None),
    ],
    "simulate": [
        Option("lambda", _real, None),
        Option("mu", _real, None),
        Option("theta", _real, None),
        Option("T", _frac, "1000"),
        Option("start", str, None, "x,y as fractions (default seeded random)"),
        Option("sheet", _choice("0", "1"), "0"),
        Option("max_events", _int, None),
        Option("windows", _pos_int, "20"),
        Option("events", _bool, "false", "include the event list"),
    ],
    "audit": [
        Option("dump", str, None, "tree dump to re-verify"),
    ],
}
OPTIONS["tree-audit"] = OPTIONS["audit"]

REQUIRED = {
    "contfrac": ["theta"],
    "bestapprox": ["x"],
    "zexp": ["lambda", "mu", "theta"],
    "tree": ["lambda", "mu"],
    "dimension": ["tree"],
    "simulate": ["lambda", "mu", "theta"],
    "audit": ["dump"],
    "tree-audit": ["dump"],
}


def _key(name: str) -> str:
    return name.strip().replace("-", "_")


def parse_config_text(text: str) -> dict[str, str]:
    """key = value lines; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        out[_key(key)] = value.strip()
    return out


def config_text(config: dict[str, str]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in sorted(config.items()) if v is not None)


def resolve(command: str, file_values: dict[str, str], flag_values: dict[str, str | None]) -> dict[str, str | None]:
    """Defaults, then file, then flags; every value is validated and canonicalised."""
    options = OPTIONS[command] + COMMON
    known = {o.name for o in options} | {"config"}
    unknown = sorted(set(file_values) - known)
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {', '.join(unknown)}")
    out: dict[str, str | None] = {}
    for opt in options:
        value = flag_values.get(opt.name)
        if value is None:
            value = file_values.get(opt.name, opt.default)
        if value is not None:
            try:
                value = opt.parse(str(value))
            except (ValueError, ArithmeticError, LiteralError) as exc:
                raise UsageError(f"--{opt.name.replace('_', '-')}: {exc}") from None
        out[opt.name] = value
    missing = [k for k in REQUIRED.get(command, []) if out.get(k) is None]
    if missing:
        raise UsageError(f"{command} needs {', '.join('--' + m.replace('_', '-') for m in missing)}")
    return out


# ---------------------------------------------------------------------------
# output


def dumps(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, default=str) + "\n"


class Sink:
    def __init__(self, command: str, config: dict):
        self.command = command
        self.config = config
        self.report_dir = Path(config["report"]) if config.get("report") else None

    def _target(self, explicit: str | None, suffix: str) -> Path | None:
        if explicit:
            return Path(explicit)
        if self.report_dir is not None:
            return self.report_dir / f"{self.command}.{suffix}"
        return None

    def json(self, data: dict) -> None:
        self.text(dumps({"config": self.config, **data}))

    def text(self, body: str) -> None:
        target = self._target(self.config.get("output"), "json")
        if target is None:
            sys.stdout.write(body)
        else:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(body)

    def csv(self, header: Sequence[str], rows) -> None:
        target = self._target(self.config.get("csv"), "csv")
        if target is None:
            return
        from .report import csv_text

        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(csv_text(header, rows))

    def figure(self, plotter: Callable, *args) -> None:
        if self.report_dir is None:
            return
        plotter(*args, self.report_dir / f"{self.command}.png")


# ---------------------------------------------------------------------------
# commands


def _budget(cfg) -> int:
    return int(cfg["budget"])


def cmd_contfrac(cfg: dict, sink: Sink) -> None:
    theta = parse_real(cfg["theta"])
    depth = int(cfg["depth"])
    b = _budget(cfg)
    exp = cf.cf_expand(theta, depth, b)
    checks = [cf.convergent_bounds_check(theta, k, b) for k in range(max(0, len(exp.convergents) - 1))]
    data = exp.to_json()
    data["bounds_report"] = {"checks": checks, "all_passed": all(c["passed"] for c in checks)}
    sink.json(data)
    rows = [(k, a, c.p, c.q) for k, (a, c) in enumerate(zip(exp.quotients, exp.convergents))]
    sink.csv(("k", "a_k", "p_k", "q_k"), rows)
    from .report import plot_contfrac

    sink.figure(plot_contfrac, data)


def cmd_bestapprox(cfg: dict, sink: Sink) -> None:
    x = parse_pair(cfg["x"])
    norm = get_norm(cfg["norm"])
    seq = ba_mod.best_approx_sequence(x, norm, int(cfg["qmax"]), _budget(cfg))
    records = [b.to_json() for b in seq]
    lines = [json.dumps({"config": cfg}, sort_keys=True)]
    lines += [json.dumps(r, sort_keys=True) for r in records]
    lines.append(json.dumps({"lower_bound_report": ba_mod.lower_bound_report(seq, _budget(cfg))}, sort_keys=True, default=str))
    sink.text("\n".join(lines) + "\n")
    sink.csv(("q", "p1", "p2", "err"), [(r["q"], r["p1"], r["p2"], repr(r["err"])) for r in records])
    from .report import plot_bestapprox

    sink.figure(plot_bestapprox, records)


def _read_bestapprox(path: str) -> list[int]:
    qs = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if "q" in rec:
            qs.append(int(rec["q"]))
    return qs


def cmd_pm(cfg: dict, sink: Sink) -> None:
    opts = {"eps_tail": float(Fraction(cfg["eps_tail"])), "term_floor": float(Fraction(cfg["term_floor"]))}
    b = _budget(cfg)
    if cfg["compare_norms"] == "true":
        if cfg.get("x") is None:
            raise UsageError("--compare-norms needs --x")
        x = parse_pair(cfg["x"])
        result = ba_mod.pm_compare_norms(x, list(NORMS.values()), int(cfg["qmax"]), b, **opts)
        sink.json({"comparison": result})
        return
    sources = [k for k in ("qs", "from_bestapprox", "x") if cfg.get(k) is not None]
    if len(sources) != 1:
        raise UsageError("pm needs exactly one of --qs, --from-bestapprox, --x")
    if cfg.get("qs") is not None:
        qs = [int(t) for t in cfg["qs"].split(",")]
    elif cfg.get("from_bestapprox") is not None:
        qs = _read_bestapprox(cfg["from_bestapprox"])
    else:
        seq = ba_mod.best_approx_sequence(parse_pair(cfg["x"]), get_norm(cfg["norm"]), int(cfg["qmax"]), b)
        qs = ba_mod.denominators(seq)
    qs = [q for q in qs if q >= 2]
    report = ba_mod.pm_analyze(qs, **opts).to_json()
    sink.json({"pm": report})
    sink.csv(("k", "term", "partial_sum"), [(k, repr(t), repr(s)) for k, (t, s) in enumerate(zip(report["terms"], report["partial_sums"]), start=1)])
    from .report import plot_pm

    sink.figure(plot_pm, report)


def cmd_zexp(cfg: dict, sink: Sink) -> None:
    ctx = (parse_real(cfg["lambda"]), parse_real(cfg["mu"]))
    ze = surf.z_expansion(parse_real(cfg["theta"]), ctx, int(cfg["hmax"]), _budget(cfg))
    data = ze.to_json()
    if cfg["check_alternation"] == "true":
        data["alternation"] = surf.alternation_report(ze)
    sink.json(data)
    sink.csv(("index", "kind", "a", "b", "height", "hor"), [(i, e["kind"], *e["vector"], repr(e["height"]), repr(e["hor"])) for i, e in enumerate(data["entries"])])
    from .report import plot_zexp

    sink.figure(plot_zexp, data)


def _params(cfg: dict) -> cons.ConstructionParams:
    mode = {"toy": "toy", "full": "full-schedule", "finite-ellN": "finite-ellN"}[cfg["mode"]]
    norm = get_norm(cfg["norm"])
    if mode == "full-schedule":
        eps = Fraction(cfg["epsilon"]) if cfg.get("epsilon") else Fraction(1, 10)
        return cons.derive_params(eps, norm=norm)
    depth = cfg.get("schedule_depth")
    if depth is None:
        depth = "0" if mode == "finite-ellN" else "1"
    return cons.params_from_r(
        Fraction(cfg["r"]),
        delta=Fraction(cfg["delta"]),
        epsilon=None if cfg.get("epsilon") is None else Fraction(cfg["epsilon"]),
        mode=mode,
        norm=norm,
        schedule_depth=int(depth),
    )


def build_tree_from_config(cfg: dict) -> tr.SlitTree:
    ctx = (parse_real(cfg["lambda"]), parse_real(cfg["mu"]))
    b = _budget(cfg)
    norm = get_norm(cfg["norm"])
    params = _params(cfg)
    depth = int(cfg["depth"])
    if params.mode == "full-schedule":
        seq = ba_mod.best_approx_sequence(ctx, norm, int(cfg["qmax"]), b)
        return tr.build_full_tree(ctx, params, seq, depth, int(cfg["cap_bits"]), norm, b)
    plan = [_segment(s) for s in cfg["plan"].split(",")]
    ba = q_next = None
    if params.mode == "toy" and any(s.region != "diophantine" for s in plan):
        seq = ba_mod.best_approx_sequence(ctx, norm, int(cfg["qmax"]), b)
        ba = seq[-1]
        q_next = cons.next_denominator_lower(ba)
    low, high = (int(t) for t in cfg["w0_range"].split(","))
    if cfg.get("w0"):
        m, n = (int(t) for t in cfg["w0"].split(","))
        w0 = surf.separating_slit(m, n, ctx)
    elif ba is not None and plan[0].region == "liouville":
        w0 = cons.initial_slit(ctx, ba, params, bounds=(low, high), q_next=q_next, norm=norm, budget=b)
    else:
        w0 = cons.find_slit(ctx, low, high, lambda w: True, budget=b)
    tree = tr.build_tree(ctx, params, depth, w0, plan, ba, q_next, int(cfg["branching"]), int(cfg["cap"]), norm, b)
    return tree


def _tree_rows(data: dict):
    for nd in data["nodes"]:
        failed = [k for k, c in nd["certificates"].items() if isinstance(c, dict) and c.get("gated", True) and c.get("passed") is False]
        yield nd["id"], nd["parent"], nd["level"], nd["m"], nd["n"], repr(nd["height"]), nd["region"], ";".join(failed)


def cmd_tree(cfg: dict, sink: Sink) -> None:
    tree = build_tree_from_config(cfg)
    data = tree.to_json()
    sink.json({"tree": data})
    sink.csv(("id", "parent", "level", "m", "n", "height", "region", "failed"), _tree_rows(data))
    from .report import plot_tree

    sink.figure(plot_tree, data)


def _load_tree(path: str) -> dict:
    data = json.loads(Path(path).read_text())
    return data.get("tree", data)


def cmd_audit(cfg: dict, sink: Sink) -> None:
    result = tr.audit_tree(_load_tree(cfg["dump"]), _budget(cfg))
    sink.json({"audit": result})
    if not result["passed"]:
        raise AuditFailed(result)


class AuditFailed(Exception):
    def __init__(self, result: dict):
        super().__init__(f"{len(result['problems'])} certificate problems")
        self.result = result


def cmd_dimension(cfg: dict, sink: Sink) -> None:
    tree = tr.SlitTree.from_json(_load_tree(cfg["tree"]))
    window = None if cfg.get("tail_window") is None else int(cfg["tail_window"])
    report = dim.falconer_report(tree, window, _budget(cfg))
    sink.json({"dimension": report})
    sink.csv(("j", "log10_m", "log10_eps", "d"), [(r["j"], repr(r["log10_m"]), repr(r["log10_eps"]), repr(r["d"])) for r in report["levels"]])
    from .report import plot_dimension

    sink.figure(plot_dimension, report)


def _start(cfg: dict) -> tuple[Fraction, Fraction]:
    if cfg.get("start"):
        parts = cfg["start"].split(",")
        if len(parts) != 2:
            raise UsageError("--start expects x,y")
        return Fraction(parts[0].strip()), Fraction(parts[1].strip())
    rng = random.Random(int(cfg["seed"]))
    return Fraction(rng.randrange(1, 10**6), 10**6), Fraction(rng.randrange(1, 10**6), 10**6)


def cmd_simulate(cfg: dict, sink: Sink) -> None:
    geom = fs.SurfaceGeometry.of(parse_real(cfg["lambda"]), parse_real(cfg["mu"]))
    start = _start(cfg)
    max_events = None if cfg.get("max_events") is None else int(cfg["max_events"])
    traj = fs.simulate(geom, parse_real(cfg["theta"]), start, Fraction(cfg["T"]), int(cfg["sheet"]), max_events, budget=_budget(cfg))
    diag = fs.ergodicity_diagnostic(traj, int(cfg["windows"]))
    data = {"summary": traj.summary(), "diagnostic": diag}
    if cfg["events"] == "true":
        data["events"] = [e.to_json() for e in traj.events]
    sink.json(data)
    series = traj.occupancy_series()
    sink.csv(("t", "sheet0", "sheet1"), [(repr(float(t)), repr(float(a)), repr(float(c))) for t, a, c in series])
    from .report import plot_occupancy

    sink.figure(plot_occupancy, series, diag)


COMMANDS = {
    "contfrac": cmd_contfrac,
    "bestapprox": cmd_bestapprox,
    "pm": cmd_pm,
    "zexp": cmd_zexp,
    "tree": cmd_tree,
    "tree-audit": cmd_audit,
    "dimension": cmd_dimension,
    "simulate": cmd_simulate,
    "audit": cmd_audit,
}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D401
        raise UsageError(f"{message}\n{self.format_usage()}")


def _add_options(p: argparse.ArgumentParser, options: list[Option]) -> None:
    p.add_argument("--config", default=None, help="key = value config file")
    for opt in options + COMMON:
        p.add_argument(f"--{opt.name.replace('_', '-')}", dest=opt.name, default=None, help=opt.help or None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slitflow", description="Slit constructions, Diophantine tools and flow simulation.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in ("contfrac", "bestapprox", "pm", "zexp", "dimension", "simulate"):
        _add_options(sub.add_parser(name), OPTIONS[name])
    tree_p = sub.add_parser("tree")
    tree_sub = tree_p.add_subparsers(dest="action", parser_class=_Parser)
    _add_options(tree_sub.add_parser("build"), OPTIONS["tree"])
    audit_p = tree_sub.add_parser("audit")
    audit_p.add_argument("dump_path", nargs="?")
    _add_options(audit_p, OPTIONS["audit"])
    top_audit = sub.add_parser("audit")
    top_audit.add_argument("dump_path", nargs="?")
    _add_options(top_audit, OPTIONS["audit"])
    return parser


def _error(kind: str, message: str, code: int, extra: dict | None = None) -> int:
    payload = {"error": kind, "message": message, "exit_code": code}
    if extra:
        payload.update(extra)
    sys.stderr.write(json.dumps(payload, sort_keys=True, default=str) + "\n")
    return code


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(list(sys.argv[1:] if argv is None else argv))
        command = ns.command
        if command is None:
            raise UsageError(f"missing subcommand\n{parser.format_usage()}")
        if command == "tree":
            if ns.action is None:
                raise UsageError("tree needs build or audit")
            command = "tree" if ns.action == "build" else "tree-audit"
        flags = {k: v for k, v in vars(ns).items() if k not in ("command", "action", "config", "dump_path")}
        if getattr(ns, "dump_path", None):
            flags["dump"] = ns.dump_path
        file_values = parse_config_text(Path(ns.config).read_text()) if ns.config else {}
        cfg = resolve(command, file_values, flags)
        COMMANDS[command](cfg, Sink(command, cfg))
        return EXIT_OK
    except UsageError as exc:
        return _error("usage", str(exc), EXIT_INVALID)
    except (UndecidableError, BudgetExceeded) as exc:
        return _error(type(exc).__name__, str(exc), EXIT_UNDECIDABLE)
    except AuditFailed as exc:
        return _error("AuditFailed", str(exc), EXIT_INVALID, {"problems": exc.result["problems"]})
    except (SlitflowError, ValueError, ArithmeticError, OSError, KeyError, json.JSONDecodeError) as exc:
        return _error(type(exc).__name__, str(exc), EXIT_INVALID)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
