"""Command-line entry point: ``countdiff <subcommand> ...``.

Exit codes: 0 success, 2 budget exceeded, 3 invalid generator, window or parameter, 1 other errors.
"""
from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

from . import __version__
from . import autocorr as ac
from . import primes as pr
from . import spectrum as sp
from .errors import BudgetExceeded, CountdiffError, SpecError
from .pointsets import DEFAULT_BUDGET, GeneratorSpec, generate, to_csv
from .windows import Interval, as_fraction, classify, parse_window, verify_van_hove

EXIT_OK, EXIT_ERROR, EXIT_BUDGET, EXIT_SPEC = 0, 1, 2, 3

DEFAULTS = {
    "set": None,
    "window": "symmetric",
    "n_list": "1000",
    "t_max": 10,
    "grid_size": 1024,
    "mode": "counting",
    "seed": 0,
    "budget": DEFAULT_BUDGET,
}

PRIME_FAMILY = ("primes", "twin_primes", "prime_powers")


@dataclass
class ExperimentConfig:
    set: str
    window: str = "symmetric"
    n_list: list = field(default_factory=lambda: [1000])
    t_max: int = 10
    grid_size: int = 1024
    mode: str = "counting"
    seed: int = 0
    budget: int = DEFAULT_BUDGET
    outputs: dict = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        if not self.set:
            raise SpecError("a point set is required (--set)")
        GeneratorSpec.parse(self.set)
        parse_window(self.window)
        if not self.n_list or any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise SpecError(f"n_list must be nonempty and strictly increasing, got {self.n_list}")
        if self.t_max < 0:
            raise SpecError(f"t_max must be >= 0, got {self.t_max}")
        if self.grid_size < 1 or self.grid_size & (self.grid_size - 1):
            raise SpecError(f"grid_size must be a power of two, got {self.grid_size}")
        if self.mode not in ("counting", "density", "both"):
            raise SpecError(f"mode must be counting, density or both, got {self.mode!r}")
        return self


def parse_int_list(text) -> list[int]:
    if isinstance(text, list):
        return [int(v) for v in text]
    try:
        return [_parse_int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise SpecError(f"bad integer list {text!r}") from exc


def _parse_int(v: str) -> int:
    v = v.strip()
    if "e" in v.lower():
        f = as_fraction(v)
        if f.denominator != 1:
            raise ValueError(v)
        return int(f)
    if "^" in v:
        base, exp = v.split("^")
        return int(base) ** int(exp)
    return int(v)


def load_config(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, val = line.partition("=")
            if not eq:
                raise SpecError(f"{path}:{lineno}: expected key=value")
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def build_config(args) -> ExperimentConfig:
    file_vals = load_config(args.config) if getattr(args, "config", None) else {}

    def pick(key):
        v = getattr(args, key, None)
        if v is not None:
            return v
        return file_vals.get(key, DEFAULTS[key])

    try:
        cfg = ExperimentConfig(
            set=pick("set"),
            window=pick("window"),
            n_list=parse_int_list(pick("n_list")),
            t_max=int(pick("t_max")),
            grid_size=int(pick("grid_size")),
            mode=str(pick("mode")),
            seed=int(pick("seed")),
            budget=int(pick("budget")),
        )
    except ValueError as exc:
        raise SpecError(str(exc)) from exc
    return cfg.validate()


def write_atomic(path: Optional[str], text: str) -> None:
    """Write via a temporary file and rename so no partial file is left on error."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o) if o.denominator != 1 else o.numerator
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


# -- subcommands ---------------------------------------------------------------

def cmd_gen(args) -> int:
    spec = GeneratorSpec.parse(args.set)
    lo, hi = args.range
    ps = generate(spec, Interval(as_fraction(lo), as_fraction(hi)), budget=args.budget or DEFAULT_BUDGET)
    write_atomic(args.out, to_csv(ps))
    return EXIT_OK


def run_autocorr(cfg: ExperimentConfig, eta_out, comb_out) -> dict:
    spec = GeneratorSpec.parse(cfg.set)
    family = parse_window(cfg.window)
    ts = list(range(-cfg.t_max, cfg.t_max + 1))
    table = ac.eta_table(spec, family, cfg.n_list, ts)
    rows = sorted((r for s in table for r in s.rows), key=lambda r: (cfg.n_list.index(r.n), r.t))
    buf = io.StringIO()
    ac.write_eta_rows(rows, buf)
    write_atomic(eta_out, buf.getvalue())
    n = cfg.n_list[-1]
    F = generate(spec, family(n), budget=cfg.budget)
    norm = "density" if cfg.mode == "density" else "counting"
    comb = ac.finite_autocorr(F, norm, t_max=cfg.t_max)
    if comb_out:
        write_atomic(comb_out, ac.comb_to_csv(comb))
    return {"eta_rows": len(rows), "comb_entries": len(comb), "comb_n": n}


def cmd_autocorr(args) -> int:
    cfg = build_config(args)
    run_autocorr(cfg, args.eta_out, args.comb_out)
    return EXIT_OK


def run_diffract(cfg: ExperimentConfig, source: str, out, svg=None, fejer=None, comb_in=None, size=(640, 320)):
    y = sp.torus_grid(cfg.grid_size)
    if comb_in:
        with open(comb_in, encoding="utf-8") as fh:
            comb = ac.read_comb_csv(fh)
        grid = sp.comb_fourier(comb, y, fejer)
    else:
        spec = GeneratorSpec.parse(cfg.set)
        family = parse_window(cfg.window)
        F = generate(spec, family(cfg.n_list[-1]), budget=cfg.budget)
        if source == "comb":
            grid = sp.comb_fourier(ac.finite_autocorr(F, "counting", t_max=cfg.t_max), y, fejer)
        elif F.mode == "integer":
            grid = sp.patterson_fft(F, cfg.grid_size)
        else:
            grid = sp.patterson_direct(F, y)
    write_atomic(out, grid.to_csv())
    if svg:
        write_atomic(svg, grid.to_svg(*size))
    return grid


def cmd_diffract(args) -> int:
    if args.comb_in and args.set is None:
        args.set = "integers"
    cfg = build_config(args)
    run_diffract(cfg, args.source, args.out, args.svg, args.fejer, args.comb_in, (args.width, args.height))
    return EXIT_OK


def run_converge(cfg: ExperimentConfig, t_list=None) -> dict:
    spec = GeneratorSpec.parse(cfg.set)
    if spec.name not in PRIME_FAMILY:
        raise SpecError(f"converge supports prime-family sets {PRIME_FAMILY}, got {spec.name!r}")
    family = parse_window(cfg.window)
    ts = t_list if t_list is not None else list(range(0, cfg.t_max + 1))
    rows = []
    certified = True
    for n in cfg.n_list:
        w = family(n)
        F = generate(spec, w, budget=cfg.budget)
        for t in ts:
            c = ac.count_shift(F, t)
            eta = Fraction(c, len(F)) if len(F) else Fraction(0)
            bound = ac.prime_bound(w, t) if spec.name == "primes" else None
            margin = None if bound is None else bound - eta
            if margin is None or margin < 0:
                certified = False
            rows.append(
                {
                    "n": n,
                    "t": t,
                    "card_Fn": len(F),
                    "intersection_count": c,
                    "eta_count": float(eta),
                    "eta_exact": str(eta),
                    "bound": None if bound is None else float(bound),
                    "margin": None if margin is None else float(margin),
                }
            )
    if certified:
        verdict = "certified-bounded"
    elif all(r["margin"] is None for r in rows) and all(r["card_Fn"] <= 1 or r["intersection_count"] == 0 or r["t"] == 0 for r in rows):
        verdict = "degenerate"
    else:
        verdict = "uncertified"
    return {
        "set": cfg.set,
        "window": cfg.window,
        "verdict": verdict,
        "verdict_kind": "certified" if verdict == "certified-bounded" else "heuristic",
        "rows": rows,
    }


def cmd_converge(args) -> int:
    cfg = build_config(args)
    t_list = parse_int_list(args.t_list) if args.t_list else None
    write_atomic(args.out, _json(run_converge(cfg, t_list)))
    return EXIT_OK


def run_classify(window: str, horizon: int) -> dict:
    family = parse_window(window)
    vh = verify_van_hove(family, horizon)
    out = {"window": window, "van_hove": asdict(vh)}
    out["classification"] = classify(family, horizon).to_dict() if vh.ok else None
    return out


def cmd_classify(args) -> int:
    write_atomic(args.out, _json(run_classify(args.window, args.horizon)))
    return EXIT_OK


def cmd_primes(args) -> int:
    if args.primes_cmd == "pi":
        out = {"x": args.x, "pi": pr.pi(args.x)}
    elif args.primes_cmd == "pid":
        out = {"x": args.x, "d": args.d, "pi_d": pr.pi_d(args.x, args.d)}
    else:
        r = pr.brun_titchmarsh_check(args.m, args.n)
        out = asdict(r)
    sys.stdout.write(json.dumps(out) + "\n")
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = build_config(args)
    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    timings, manifest, verdicts = {}, {}, []

    def stage(name, fn):
        t0 = time.perf_counter()
        res = fn()
        timings[name] = round(time.perf_counter() - t0, 6)
        return res

    eta_path = os.path.join(out_dir, "eta.csv")
    comb_path = os.path.join(out_dir, "comb.csv")
    spec_path = os.path.join(out_dir, "spectrum.csv")
    stage("autocorr", lambda: run_autocorr(cfg, eta_path, comb_path))
    manifest["autocorr"] = [eta_path, comb_path]
    stage("diffract", lambda: run_diffract(cfg, "patterson", spec_path))
    manifest["diffract"] = [spec_path]
    cls = stage("classify-window", lambda: run_classify(cfg.window, args.horizon))
    if cls["classification"]:
        verdicts.append(
            {"name": "window_regime", "value": cls["classification"]["predicted_prime_regime"], "kind": "heuristic"}
        )
    verdicts.append({"name": "van_hove", "value": cls["van_hove"]["ok"], "kind": "heuristic"})
    if GeneratorSpec.parse(cfg.set).name in PRIME_FAMILY:
        conv = stage("converge", lambda: run_converge(cfg))
        conv_path = os.path.join(out_dir, "converge.json")
        write_atomic(conv_path, _json(conv))
        manifest["converge"] = [conv_path]
        verdicts.append({"name": "converge", "value": conv["verdict"], "kind": conv["verdict_kind"]})
    config_echo = asdict(cfg)
    config_echo.pop("outputs")
    report = {
        "version": __version__,
        "config": config_echo,
        "manifest": manifest,
        "verdicts": verdicts,
        "classification": cls,
        "wall_clock_s": timings,
    }
    write_atomic(os.path.join(out_dir, "report.json"), _json(report))
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def _experiment_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--set", help="generator spec, e.g. primes or shift_union:base=factorials,k=1")
    p.add_argument("--window", help="symmetric | ratio:L=2 | anchored:d=1 | factorial-gap | custom:a=<expr>,b=<expr>")
    p.add_argument("--n-list", dest="n_list", help="comma separated, strictly increasing (1e6 and 10^6 accepted)")
    p.add_argument("--t-max", dest="t_max", type=int)
    p.add_argument("--grid-size", dest="grid_size", type=int)
    p.add_argument("--mode", choices=["counting", "density", "both"])
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="countdiff", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a windowed point set as CSV")
    p.add_argument("--set", required=True)
    p.add_argument("--range", nargs=2, required=True, metavar=("LO", "HI"))
    p.add_argument("--budget", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("autocorr", help="eta series and comb CSVs")
    _experiment_flags(p)
    p.add_argument("--eta-out", dest="eta_out")
    p.add_argument("--comb-out", dest="comb_out")
    p.set_defaults(func=cmd_autocorr)

    p = sub.add_parser("diffract", help="spectrum CSV on the torus grid j/M")
    _experiment_flags(p)
    p.add_argument("--source", choices=["patterson", "comb"], default="patterson")
    p.add_argument("--fejer", type=float, help="Fejér length T for the comb path")
    p.add_argument("--comb-in", dest="comb_in", help="transform a comb CSV instead of a generated set")
    p.add_argument("--out")
    p.add_argument("--svg")
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=320)
    p.set_defaults(func=cmd_diffract)

    p = sub.add_parser("converge", help="prime eta estimates against their finite-n bound (JSON)")
    _experiment_flags(p)
    p.add_argument("--t-list", dest="t_list")
    p.add_argument("--out")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("classify-window", help="van Hove check and prime-regime classification (JSON)")
    p.add_argument("--window", required=True)
    p.add_argument("--horizon", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("primes", help="prime counting kernels (JSON)")
    psub = p.add_subparsers(dest="primes_cmd", required=True)
    q = psub.add_parser("pi")
    q.add_argument("--x", type=_parse_int, required=True)
    q = psub.add_parser("pid")
    q.add_argument("--x", type=_parse_int, required=True)
    q.add_argument("--d", type=int, required=True)
    q = psub.add_parser("bt-check")
    q.add_argument("--m", type=_parse_int, required=True)
    q.add_argument("--n", type=_parse_int, required=True)
    p.set_defaults(func=cmd_primes)

    p = sub.add_parser("report", help="run autocorr, diffract, classify (and converge) into a directory")
    _experiment_flags(p)
    p.add_argument("--horizon", type=int, default=100)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (CountdiffError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
