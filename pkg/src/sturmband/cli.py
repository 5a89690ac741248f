"""Batch command line: bands, dims, gibbs, asym, audit.

Exit status: 0 ok, 1 internal error, 2 invalid config, 3 hard-check failure.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, fields
from typing import Optional

from . import asymptotics, audit, dimension, gibbs
from .bandtree import REL_TOL, BandTree
from .cfrac import parse_cf
from .errors import ConfigError, SturmbandError
from .hp import required_bits
from .tracemap import DEFAULT_PRECISION, SpectralParams

log = logging.getLogger("sturmband")

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_HARD = 0, 1, 2, 3
CACHE_MAGIC = "# sturmband-cache v1"


@dataclass
class RunConfig:
    alpha_spec: str = "per:1"
    V: str = "24"
    order: int = 8
    precision_bits: int = DEFAULT_PRECISION
    bisect_rel_tol: str = REL_TOL
    threads: int = 1
    cache_path: Optional[str] = None
    seed: int = 0

    def validate(self) -> "RunConfig":
        cf = parse_cf(self.alpha_spec)
        params = SpectralParams(self.V, self.precision_bits)
        params.require_band_regime()
        if self.order < 0:
            raise ConfigError(f"order must be >= 0, got {self.order}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        try:
            tol = float(self.bisect_rel_tol)
        except ValueError:
            raise ConfigError(f"bad bisect_rel_tol {self.bisect_rel_tol!r}") from None
        if not 0 < tol < 1:
            raise ConfigError("bisect_rel_tol must lie in (0, 1)")
        self._cf = cf
        return self

    @property
    def cf(self):
        return self._cf

    @property
    def bits(self) -> int:
        """Working precision: the configured bits, raised when the order needs more."""
        return max(self.precision_bits, required_bits(self.order, float(self.V), self.cf.M, 64))

    def params(self) -> SpectralParams:
        return SpectralParams(self.V, self.bits)

    def cache_hash(self) -> str:
        key = json.dumps({"alpha": self.cf.spec(), "V": str(self.V), "precision_bits": self.bits,
                          "bisect_rel_tol": str(self.bisect_rel_tol)}, sort_keys=True)
        return hashlib.sha256(key.encode()).hexdigest()[:16]


_FIELDS = {f.name: f for f in fields(RunConfig)}
_INT_FIELDS = {"order", "precision_bits", "threads", "seed"}


def _coerce(name: str, value: str):
    if name in _INT_FIELDS:
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"{name} must be an integer, got {value!r}") from None
    if name == "cache_path":
        return value or None
    return value


def read_config_file(path: str) -> dict:
    """Flat key=value lines; '#' starts a comment."""
    out = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    with fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in _FIELDS:
                raise ConfigError(f"{path}:{n}: unknown key {key!r}")
            out[key] = _coerce(key, value)
    return out


def build_config(args) -> RunConfig:
    values = {}
    if args.config:
        values.update(read_config_file(args.config))
    flags = {"alpha_spec": args.alpha, "V": args.V, "order": args.order, "precision_bits": args.precision_bits,
             "bisect_rel_tol": args.bisect_rel_tol, "threads": args.threads, "cache_path": args.cache,
             "seed": args.seed}
    values.update({k: v for k, v in flags.items() if v is not None})
    return RunConfig(**values).validate()


# -- tree with cache ------------------------------------------------------


def _cache_header(cfg: RunConfig) -> str:
    meta = {"hash": cfg.cache_hash(), "alpha": cfg.cf.spec(), "V": str(cfg.V), "precision_bits": cfg.bits,
            "bisect_rel_tol": str(cfg.bisect_rel_tol)}
    return f"{CACHE_MAGIC} {json.dumps(meta, sort_keys=True)}"


def _load_cache(cfg: RunConfig, tree: BandTree) -> bool:
    path = cfg.cache_path
    if not path or not os.path.exists(path):
        return False
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(CACHE_MAGIC):
            log.warning("cache %s has no header; ignoring it", path)
            return False
        try:
            meta = json.loads(header[len(CACHE_MAGIC):])
        except ValueError:
            meta = {}
        if meta.get("hash") != cfg.cache_hash():
            log.warning("cache %s was built with a different config (hash %s, expected %s); ignoring it",
                        path, meta.get("hash"), cfg.cache_hash())
            return False
        try:
            tree.load_records(fh)
        except (SturmbandError, ValueError, KeyError) as exc:
            log.warning("cache %s is unreadable (%s); ignoring it", path, exc)
            tree.generations = tree.generations[:1]
            return False
    return True


def _save_cache(cfg: RunConfig, tree: BandTree):
    path = cfg.cache_path
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_cache_header(cfg) + "\n")
        tree.dump(fh)
    os.replace(tmp, path)


def load_tree(cfg: RunConfig, order: Optional[int] = None) -> BandTree:
    order = cfg.order if order is None else order
    tree = BandTree(cfg.cf, cfg.params(), cfg.threads, cfg.bisect_rel_tol)
    cached = _load_cache(cfg, tree)
    start = tree.depth
    tree.extend(order)
    if cfg.cache_path and (not cached or tree.depth > start):
        _save_cache(cfg, tree)
    return tree


# -- commands -------------------------------------------------------------


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def cmd_bands(cfg: RunConfig, args) -> int:
    tree = load_tree(cfg)
    with _output(args.out) as fh:
        tree.dump(fh, cfg.order)
    return EXIT_OK


def _parse_range(text: str | None, default: range) -> range:
    if not text:
        return default
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            return range(int(a), int(b) + 1)
        n = int(text)
        return range(n, n + 1)
    except ValueError:
        raise ConfigError(f"bad order range {text!r}; use a..b") from None


def _toy_dims(spec: str, depth: int, out) -> int:
    try:
        n_text, l_text = spec.split(",")
        N, L = int(n_text), _fraction(l_text)
    except ValueError:
        raise ConfigError(f"bad toy spec {spec!r}; use N,L") from None
    if N < 2 or not 0 < L < 1 / N:
        raise ConfigError("toy tree needs N >= 2 and 0 < L < 1/N")
    tree = dimension.toy_tree(N, L, depth)
    out.write("order\ts_n\tsum_residual\n")
    for n in range(1, depth + 1):
        pd = dimension.pre_dimension(dimension.band_lengths(tree.generations[n]))
        out.write(f"{n}\t{pd.s:.15f}\t{pd.residual:.3e}\n")
    return EXIT_OK


def _fraction(text: str) -> float:
    if "/" in text:
        a, b = text.split("/", 1)
        return float(a) / float(b)
    return float(text)


def cmd_dims(cfg: RunConfig, args) -> int:
    with _output(args.out) as out:
        if args.toy:
            return _toy_dims(args.toy, cfg.order, out)
        orders = _parse_range(args.orders, None) if args.orders else None
        last = cfg.order if orders is None else max(orders)
        tree = load_tree(cfg, last)
        rep = dimension.dimension_report(tree, orders, fast=args.fast)
        out.write(f"# alpha={cfg.cf.spec()} V={cfg.V} depth={tree.depth}\n")
        for row in rep.table():
            out.write(row + "\n")
        for row in rep.lines():
            out.write(row + "\n")
        bad = [n for n, ok in rep.certified.items() if not ok]
        if bad:
            log.warning("pre-dimension not certified at orders %s", bad)
    return EXIT_OK


def cmd_gibbs(cfg: RunConfig, args) -> int:
    m = cfg.order if args.m is None else args.m
    tree = load_tree(cfg, m)
    measure = gibbs.build_measure(tree, args.beta, m)
    with _output(args.out) as out:
        out.write(f"# beta={args.beta} m={m} bands={len(measure.weights)} total={measure.total()!r}\n")
        if m >= 4:
            for row in gibbs.gibbs_ratio_report(tree, args.beta, m - 3, m):
                out.write(f"# k={row.k} rho_min={row.rho_min!r} rho_max={row.rho_max!r}\n")
        for line in measure.lines():
            out.write(line + "\n")
    return EXIT_OK


def cmd_asym(cfg: RunConfig, args) -> int:
    try:
        V_list = [float(v) for v in args.V_list.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad V list {args.V_list!r}") from None
    for V in V_list:
        SpectralParams(V).require_band_regime()
    fs = asymptotics.f_star(cfg.cf)
    rows = asymptotics.large_v_law(cfg.cf, V_list, cfg.order, cfg.precision_bits, cfg.threads)
    with _output(args.out) as out:
        out.write(f"# f_star={fs!r} -ln(f_star)={-math.log(fs)!r}\n")
        out.write(asymptotics.LAW_HEADER + "\n")
        for row in rows:
            out.write(row.csv() + "\n")
    return EXIT_OK


def cmd_audit(cfg: RunConfig, args) -> int:
    selection = args.checks or args.suite
    ids = audit.select(selection)
    tree = load_tree(cfg)
    reports = audit.Auditor(tree, cfg.order, args.beta, cfg.seed).run(ids)
    with _output(args.out) as out:
        out.write(f"# alpha={cfg.cf.spec()} V={cfg.V} depth={cfg.order} seed={cfg.seed}\n")
        for rep in reports:
            for line in rep.lines():
                out.write(line + "\n")
        failed = audit.hard_failures(reports)
        out.write(f"hard failures: {len(failed)}\n")
    return EXIT_HARD if failed else EXIT_OK


# -- parser ---------------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("run config (flags override --config)")
    g.add_argument("--config", help="flat key=value file with RunConfig fields")
    g.add_argument("--alpha", help="frequency, e.g. per:1, [0;2,(1,3)]")
    g.add_argument("--V", help="coupling, must exceed 20")
    g.add_argument("--order", type=int)
    g.add_argument("--precision-bits", type=int)
    g.add_argument("--bisect-rel-tol")
    g.add_argument("--threads", type=int)
    g.add_argument("--cache", help="band cache file (resumable)")
    g.add_argument("--seed", type=int)
    p.add_argument("--out", "-o", help="output file (default stdout)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sturmband", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bands", help="enumerate generating bands as JSON lines")
    _common(p)
    p.set_defaults(func=cmd_bands)

    p = sub.add_parser("dims", help="pre-dimension table and dimension estimates")
    _common(p)
    p.add_argument("--orders", help="order range a..b (default: from the first contractive order)")
    p.add_argument("--fast", action="store_true", help="lengths from 4/|t'(midpoint)|")
    p.add_argument("--toy", help=argparse.SUPPRESS)  # N,L self-similar test tree
    p.set_defaults(func=cmd_dims)

    p = sub.add_parser("gibbs", help="Gibbs-like measure weights")
    _common(p)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--m", type=int, help="measure order (default --order)")
    p.set_defaults(func=cmd_gibbs)

    p = sub.add_parser("asym", help="f_star and the s * ln V table")
    _common(p)
    p.add_argument("--V-list", default="100,1000,10000")
    p.set_defaults(func=cmd_asym)

    p = sub.add_parser("audit", help="numerical audit of the band hierarchy")
    _common(p)
    p.add_argument("--suite", choices=("all", "hard", "soft"), default="all")
    p.add_argument("--checks", help="comma-separated check names or ids")
    p.add_argument("--beta", type=float, default=0.5)
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = build_config(args)
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SturmbandError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
