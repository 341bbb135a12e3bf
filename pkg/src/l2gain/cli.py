"""Command-line driver: ``l2gain <command> [options]``.

Every command writes its table to ``--out-dir`` and re-checks it; ``verify``
re-checks whatever tables it finds there using only the files. Exit status is 0
when every check passes and 2 when one fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Any

from . import experiments as ex
from .covering import packing_lower_bound
from .limits import limits
from .operators import operator_from_dict
from .signals import input_set_from_dict

EXIT_OK = 0
EXIT_INVARIANT = 2

DEFAULT_INPUT_SET = {"shape": "annulus", "dim": 2, "r_min": 1.0, "r_max": 2.0}
DEFAULT_OPERATOR = {"kind": "linear", "A": [[2.0, 0.0], [0.0, 1.0]]}

# column order per table; rows are sorted on the leading key columns
COLUMNS = {
    "cover": ["delta", "method", "size", "certified", "certified_radius", "bound"],
    "gain": ["eta", "samples", "gamma_low", "gamma_high", "gap", "gap_bound", "oracle_gain", "oracle_upper"],
    "approx": ["eps", "radius", "samples", "dist_lower", "dist_upper"],
    "scaling": ["delta", "size", "volume_lower", "certified_radius"],
    "sandwich": ["eta", "lower", "mid_lo", "mid_hi", "upper"],
}
SORT_KEYS = {"cover": ("delta", "method"), "gain": ("eta",), "approx": ("eps",),
             "scaling": ("delta",), "sandwich": ("eta",)}
CHECKS = {"cover": ex.check_cover, "gain": ex.check_gain, "approx": ex.check_approx,
          "sandwich": ex.check_sandwich}


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(v: Any) -> Any:
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def dumps_json(obj: Any) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _sorted_rows(name: str, rows: list[dict]) -> list[dict]:
    keys = SORT_KEYS[name]
    return sorted(rows, key=lambda r: tuple(r[k] for k in keys))


def write_table(path: Path, name: str, rows: list[dict], fmt: str) -> Path:
    rows = _sorted_rows(name, rows)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        text = dumps_json([{k: r[k] for k in COLUMNS[name]} for r in rows])
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS[name])
        for r in rows:
            w.writerow([_fmt(r[k]) for k in COLUMNS[name]])
        text = buf.getvalue()
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def read_table(path: Path) -> list[dict]:
    if path.suffix == ".json":
        return json.loads(path.read_text())
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_json(path: Path, obj: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(dumps_json(obj))
    return path


def _load_json_arg(text: str | None) -> Any:
    """Parse a JSON literal, or load it from the file it names."""
    if text is None:
        return None
    if os.path.isfile(text):
        return json.loads(Path(text).read_text())
    return json.loads(text)


class Settings:
    """Resolves a setting as: command-line flag, then config section, then config root, then default."""

    def __init__(self, args: argparse.Namespace, config: dict):
        self.args = args
        self.config = config
        self.section = config.get(args.command, {}) if isinstance(config.get(args.command), dict) else {}

    def get(self, name: str, default: Any = None) -> Any:
        v = getattr(self.args, name, None)
        if v is not None:
            return v
        if name in self.section:
            return self.section[name]
        if name in self.config:
            return self.config[name]
        return default


def _report(name: str, failures: list[str], quiet: bool = False) -> int:
    for msg in failures:
        print(f"FAIL {name}: {msg}")
    if not failures and not quiet:
        print(f"ok   {name}")
    return EXIT_INVARIANT if failures else EXIT_OK


def _out_path(s: Settings, name: str, ext: str) -> Path:
    out = getattr(s.args, "out", None)
    if out:
        return Path(out)
    return Path(s.get("out_dir", "out")) / f"{name}.{ext}"


def cmd_cover(s: Settings) -> int:
    U = input_set_from_dict(s.get("input_set", DEFAULT_INPUT_SET))
    deltas = s.get("delta") or s.get("deltas") or ex.DEFAULT_DELTAS
    rows, covers = ex.run_cover(U, deltas, seed=s.get("seed", 0), proxy_fill=s.get("proxy_fill"), keep_covers=True)
    fmt = s.get("format", "csv")
    write_table(_out_path(s, "cover", fmt), "cover", rows, fmt)
    if s.get("save_covers", False):
        base = Path(s.get("out_dir", "out")) / "covers"
        for delta, group in covers.items():
            for method, cover in group.items():
                write_json(base / f"{method}_{delta!r}.json", cover.to_dict())
    return _report("cover", ex.check_cover(rows))


def cmd_gain(s: Settings) -> int:
    U = input_set_from_dict(s.get("input_set", DEFAULT_INPUT_SET))
    H = operator_from_dict(s.get("operator", DEFAULT_OPERATOR))
    L = s.get("lipschitz")
    L = H.lipschitz if L is None else float(L)
    etas = s.get("eta") or s.get("etas") or [0.2, 0.1, 0.05]
    rows = ex.run_gain_convergence(H, U, L, etas, seed=s.get("seed", 0), proxy_fill=s.get("proxy_fill"),
                                   oracle_fill=float(s.get("oracle_fill", 0.02)), workers=int(s.get("workers", 1)))
    fmt = s.get("format", "csv")
    write_table(_out_path(s, "gain", fmt), "gain", rows, fmt)
    return _report("gain", ex.check_gain(rows))


def cmd_approx(s: Settings) -> int:
    U = input_set_from_dict(s.get("input_set", DEFAULT_INPUT_SET))
    H = operator_from_dict(s.get("operator", DEFAULT_OPERATOR))
    L = s.get("lipschitz")
    eps = s.get("eps") or [0.5, 0.25]
    rows = ex.run_approx(H, U, eps, mode=s.get("mode", "mcshane_midpoint"), seed=s.get("seed", 0),
                         L=None if L is None else float(L), proxy_fill=float(s.get("proxy_fill", 0.02)))
    fmt = s.get("format", "csv")
    write_table(_out_path(s, "approx", fmt), "approx", rows, fmt)
    return _report("approx", ex.check_approx(rows))


def cmd_adversary(s: Settings) -> int:
    U = input_set_from_dict(s.get("input_set", DEFAULT_INPUT_SET))
    L = float(s.get("lipschitz") or 1.0)
    eps = float(s.get("eps_value") or s.get("eps") or 0.3)
    cfg = s.get("estimator_config") or {"kind": "envelope"}
    cfg = dict(cfg)
    budget = s.get("budget")
    if budget is not None:
        cfg["budget"] = int(budget)
    if cfg.get("kind", "envelope") == "envelope" and "budget" not in cfg:
        # default to one query short of the packing bound
        k, _ = packing_lower_bound(U, eps / L, seed=s.get("seed", 0))
        cfg["budget"] = max(1, k - 1)
    report = ex.run_adversary(cfg, U, L, eps, seed=s.get("seed", 0), proxy_fill=float(s.get("proxy_fill", 0.02)))
    write_json(_out_path(s, "adversary", "json"), report)
    return _report("adversary", ex.check_adversary(report))


def cmd_scaling(s: Settings) -> int:
    U = input_set_from_dict(s.get("input_set", DEFAULT_INPUT_SET))
    metric = s.get("metric", "norm")
    deltas = s.get("delta") or s.get("deltas") or ex.DEFAULT_DELTAS
    rep = ex.run_scaling(U, metric, sorted(deltas, reverse=True), seed=s.get("seed", 0),
                         fill_ratio=s.get("fill_ratio"))
    fmt = s.get("format", "csv")
    path = _out_path(s, "scaling", fmt)
    write_table(path, "scaling", rep.rows, fmt)
    write_json(path.with_name(path.stem + "_summary.json"), rep.summary())
    print(f"slope {rep.fitted_slope!r}  D1_hat {rep.D1_hat!r}  D2_hat {rep.D2_hat!r}")
    return _report("scaling", ex.check_scaling(rep.rows, rep.summary()))


def cmd_sandwich(s: Settings) -> int:
    U = input_set_from_dict(s.get("input_set", DEFAULT_INPUT_SET))
    etas = s.get("eta") or s.get("etas") or ex.DEFAULT_ETAS
    rows = ex.run_sandwich(U, etas, seed=s.get("seed", 0), proxy_fill=s.get("proxy_fill"),
                           workers=int(s.get("workers", 1)))
    fmt = s.get("format", "csv")
    write_table(_out_path(s, "sandwich", fmt), "sandwich", rows, fmt)
    return _report("sandwich", ex.check_sandwich(rows))


def verify_dir(out_dir: Path) -> tuple[int, list[str]]:
    """Re-check every table in ``out_dir``; returns ``(files checked, failure messages)``."""
    failures: list[str] = []
    checked = 0
    for name in sorted(COLUMNS):
        for ext in ("csv", "json"):
            path = out_dir / f"{name}.{ext}"
            if not path.is_file():
                continue
            checked += 1
            rows = read_table(path)
            if name == "scaling":
                summary_path = out_dir / "scaling_summary.json"
                summary = json.loads(summary_path.read_text()) if summary_path.is_file() else None
                fails = ex.check_scaling(rows, summary)
            else:
                fails = CHECKS[name](rows)
            failures += [f"{path.name}: {m}" for m in fails]
    adv = out_dir / "adversary.json"
    if adv.is_file():
        checked += 1
        failures += [f"{adv.name}: {m}" for m in ex.check_adversary(json.loads(adv.read_text()))]
    return checked, failures


def cmd_verify(s: Settings) -> int:
    out_dir = Path(s.get("out_dir", "out"))
    checked, failures = verify_dir(out_dir)
    if checked == 0:
        print(f"FAIL verify: no tables found in {out_dir}")
        return EXIT_INVARIANT
    print(f"checked {checked} file(s) in {out_dir}")
    return _report("verify", failures)


COMMANDS = {"cover": cmd_cover, "gain": cmd_gain, "approx": cmd_approx, "adversary": cmd_adversary,
            "scaling": cmd_scaling, "sandwich": cmd_sandwich, "verify": cmd_verify}


def _global_flags(p: argparse.ArgumentParser) -> None:
    # SUPPRESS lets the flags appear before or after the command without clobbering each other
    sup = argparse.SUPPRESS
    p.add_argument("--config", default=sup, help="JSON config file")
    p.add_argument("--seed", type=int, default=sup, help="64-bit seed for every random stream")
    p.add_argument("--out-dir", dest="out_dir", default=sup, help="output directory (default: out)")
    p.add_argument("--format", choices=["csv", "json"], default=sup, help="table format (default: csv)")
    p.add_argument("--max-proxy", dest="max_proxy", type=int, default=sup, help="proxy point cap")
    p.add_argument("--max-cover", dest="max_cover", type=int, default=sup, help="cover center cap")
    p.add_argument("--max-exact", dest="max_exact", type=int, default=sup, help="exact set-cover candidate cap")
    p.add_argument("--workers", type=int, default=sup, help="parallel experiment cells")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="l2gain", description="Certified L2-gain estimation experiments.")
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p)
        return p

    set_help = "input set as JSON literal or file"
    p = add("cover", "grid, greedy and volume-bound cover sizes over radii")
    p.add_argument("--input-set", dest="input_set", type=_load_json_arg, help=set_help)
    p.add_argument("--delta", type=float, action="append", help="cover radius (repeatable)")
    p.add_argument("--proxy-fill", dest="proxy_fill", type=float)
    p.add_argument("--save-covers", dest="save_covers", action="store_true", default=None,
                   help="also write every cover as JSON")
    p.add_argument("--out", help="output file (overrides --out-dir)")

    p = add("gain", "certified gain brackets over a range of cover radii")
    p.add_argument("--operator", type=_load_json_arg, help="operator as JSON literal or file")
    p.add_argument("--input-set", dest="input_set", type=_load_json_arg, help=set_help)
    p.add_argument("--eta", type=float, action="append", help="projective cover radius (repeatable)")
    p.add_argument("--lipschitz", type=float, help="declared Lipschitz constant (default: the operator's own)")
    p.add_argument("--proxy-fill", dest="proxy_fill", type=float)
    p.add_argument("--oracle-fill", dest="oracle_fill", type=float)
    p.add_argument("--out", help="output file (overrides --out-dir)")

    p = add("approx", "interpolant from cover samples and its certified distance to the operator")
    p.add_argument("--operator", type=_load_json_arg)
    p.add_argument("--input-set", dest="input_set", type=_load_json_arg, help=set_help)
    p.add_argument("--eps", type=float, action="append", help="target operator distance (repeatable)")
    p.add_argument("--mode", choices=["mcshane_midpoint", "nearest_sample"])
    p.add_argument("--lipschitz", type=float)
    p.add_argument("--proxy-fill", dest="proxy_fill", type=float)
    p.add_argument("--out")

    p = add("adversary", "replay an estimator against a bump built from its own queries")
    p.add_argument("--input-set", dest="input_set", type=_load_json_arg, help=set_help)
    p.add_argument("--estimator-config", dest="estimator_config", type=_load_json_arg,
                   help='e.g. {"kind": "envelope", "budget": 10} or {"kind": "cover", "eta": 0.3}')
    p.add_argument("--budget", type=int, help="query budget for the envelope estimator")
    p.add_argument("--eps", dest="eps_value", type=float, help="target accuracy (default 0.3)")
    p.add_argument("--lipschitz", type=float)
    p.add_argument("--proxy-fill", dest="proxy_fill", type=float)
    p.add_argument("--out")

    p = add("scaling", "greedy cover size against radius with a log-log fit")
    p.add_argument("--input-set", dest="input_set", type=_load_json_arg, help=set_help)
    p.add_argument("--metric", choices=["norm", "projective"])
    p.add_argument("--delta", type=float, action="append")
    p.add_argument("--fill-ratio", dest="fill_ratio", type=float, help="proxy fill as a fraction of each radius")
    p.add_argument("--out")

    p = add("sandwich", "cover-index inequality chains over a range of radii")
    p.add_argument("--input-set", dest="input_set", type=_load_json_arg, help=set_help)
    p.add_argument("--eta", type=float, action="append")
    p.add_argument("--proxy-fill", dest="proxy_fill", type=float)
    p.add_argument("--out")

    add("verify", "re-check every table in --out-dir")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = {}
    if getattr(args, "config", None):
        config = json.loads(Path(args.config).read_text())
    s = Settings(args, config)
    caps = s.get("limits", {}) or {}
    with limits(proxy=s.get("max_proxy", caps.get("proxy")), cover=s.get("max_cover", caps.get("cover")),
                exact=s.get("max_exact", caps.get("exact")), lattice=caps.get("lattice")):
        return COMMANDS[args.command](s)


if __name__ == "__main__":
    sys.exit(main())
