"""Command-line front end.

Every command exits 0 on success, 2 on configuration errors and 1 on
runtime failures. Errors are printed to stderr as a JSON object
``{"error": ..., "field": ...}``.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dpp import sample_eigenvalues_batch
from .eqmeasure import C_V_HIGHER_ORDER, edge_constant
from .ensemble import (
    sample_sum_batch,
    sample_uie_matrices,
    write_matrices_binary,
    write_matrices_csv,
    write_matrices_json,
)
from .exceptions import DegenerateEdgeError, InvalidArgumentError, UIEError
from .orthopoly import WeightSpec, build_basis
from .presets import PRESETS, equilibrium_for, preset
from .stats import bulk_statistic, edge_statistic, ks_report, write_eigenvalues_csv, write_values_csv

__all__ = ["RunConfig", "build_parser", "main"]

MAX_SEED = 2**64


class ConfigError(InvalidArgumentError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message, field="arguments")


@dataclass(frozen=True)
class RunConfig:
    weight: WeightSpec
    n: int = 10
    samples: int = 1
    seed: int = 0
    threads: int = 1
    out: str = "-"
    format: str = "csv"

    def __post_init__(self):
        for name in ("n", "samples", "threads"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} must be at least 1", field=name)
        if not 0 <= self.seed < MAX_SEED:
            raise InvalidArgumentError("seed must lie in [0, 2^64)", field="seed")


def _weight_from_args(text, name):
    if text is None:
        return preset(name or "gue")
    if name is not None:
        raise InvalidArgumentError("give either --weight or --preset, not both", field="weight")
    if text.startswith("@"):
        try:
            text = Path(text[1:]).read_text()
        except OSError as exc:
            raise InvalidArgumentError(f"cannot read weight file: {exc}", field="weight") from exc
    return WeightSpec.from_json(text)


def _int_list(text, field):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidArgumentError(f"{field} must be a comma-separated list of integers",
                                   field=field) from None
    if not vals or min(vals) < 1:
        raise InvalidArgumentError(f"{field} entries must be at least 1", field=field)
    return vals


def _config(args, formats=("csv", "json")):
    if args.format not in formats:
        raise InvalidArgumentError(f"format must be one of {', '.join(formats)}", field="format")
    return RunConfig(_weight_from_args(args.weight, args.preset), args.n, args.samples,
                     args.seed, args.threads, args.out, args.format)


@contextlib.contextmanager
def _open_out(path, binary=False):
    if path == "-":
        yield sys.stdout.buffer if binary else sys.stdout
    else:
        with open(path, "wb" if binary else "w", newline="" if not binary else None) as fh:
            yield fh


def _header(cfg):
    return {"weight": cfg.weight.to_dict(), "n": cfg.n, "samples": cfg.samples,
            "seed": cfg.seed}


def _write_draws(cfg, draws, path=None):
    with _open_out(path or cfg.out) as fh:
        if cfg.format == "csv":
            write_eigenvalues_csv(fh, draws)
        else:
            json.dump({**_header(cfg), "eigenvalues": draws.tolist()}, fh)
            fh.write("\n")


def _write_values(cfg, values, name, extra=None):
    with _open_out(cfg.out) as fh:
        if cfg.format == "csv":
            write_values_csv(fh, values, name=name)
        else:
            json.dump({**_header(cfg), **(extra or {}), name: np.asarray(values).tolist()}, fh)
            fh.write("\n")


# ---------------------------------------------------------------------------
# commands

def cmd_sample(args):
    cfg = _config(args)
    draws = sample_eigenvalues_batch(build_basis(cfg.weight, cfg.n), cfg.samples,
                                     seed=cfg.seed, threads=cfg.threads)
    _write_draws(cfg, draws)


def cmd_matrix(args):
    cfg = _config(args, formats=("csv", "json", "bin"))
    if cfg.format == "bin" and cfg.out == "-":
        raise InvalidArgumentError("binary output needs --out", field="out")
    M, R = sample_uie_matrices(build_basis(cfg.weight, cfg.n), cfg.samples, seed=cfg.seed,
                               threads=cfg.threads)
    if cfg.format == "bin":
        write_matrices_binary(cfg.out, M)
    else:
        with _open_out(cfg.out) as fh:
            if cfg.format == "csv":
                write_matrices_csv(fh, M)
            else:
                write_matrices_json(fh, M, extra=_header(cfg))
                fh.write("\n")
    if args.eigenvalues:
        with _open_out(args.eigenvalues) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"lambda_{j + 1}" for j in range(cfg.n)] + ["trace"])
            for A, r in zip(M, R):
                w.writerow([repr(float(v)) for v in r] + [repr(float(np.trace(A).real))])


def cmd_eqm(args):
    weight = _weight_from_args(args.weight, args.preset)
    if args.n < 1:
        raise InvalidArgumentError("n must be at least 1", field="n")
    mu = equilibrium_for(weight, args.n)
    out = {"weight": weight.to_dict(), **mu.to_dict()}
    out["density_at_0"] = float(mu.density(0.0)) if mu.a < 0 < mu.b else 0.0
    try:
        with warnings.catch_warnings():
            # the degenerate-edge warning is reported through c_V_HO instead
            warnings.simplefilter("ignore")
            sc = edge_constant(mu)
        out["c_V"], out["c_V_sqrt"] = sc.c_V, sc.c_V_sqrt
    except DegenerateEdgeError:
        out["c_V"] = out["c_V_sqrt"] = None
    if mu.is_higher_order:
        out["c_V_HO"] = C_V_HIGHER_ORDER
    with _open_out(args.out) as fh:
        json.dump(out, fh)
        fh.write("\n")


def cmd_ks(args):
    weight = _weight_from_args(args.weight, args.preset)
    ns = _int_list(args.ns, "ns") if args.ns else [args.n]
    reports = []
    for n in ns:
        cfg = RunConfig(weight, n, args.samples, args.seed, args.threads)
        basis = build_basis(weight, n)
        mu = equilibrium_for(weight, n) if weight.kind not in ("laguerre", "jacobi") else None
        draws = sample_eigenvalues_batch(basis, cfg.samples, seed=cfg.seed, threads=cfg.threads)
        reports.append(ks_report(draws, basis, mu).to_dict())
    with _open_out(args.out) as fh:
        json.dump({"weight": weight.to_dict(), "seed": args.seed, "reports": reports}, fh)
        fh.write("\n")


def _stat_draws(cfg):
    mu = equilibrium_for(cfg.weight, cfg.n)
    draws = sample_eigenvalues_batch(build_basis(cfg.weight, cfg.n), cfg.samples,
                                     seed=cfg.seed, threads=cfg.threads)
    return mu, draws


def cmd_edge(args):
    cfg = _config(args)
    mu, draws = _stat_draws(cfg)
    ho = mu.is_higher_order
    vals = edge_statistic(draws, mu, cfg.n, higher_order=ho, constant=args.constant)
    _write_values(cfg, vals, "edge", {"b": mu.b, "higher_order": ho})


def cmd_bulk(args):
    cfg = _config(args)
    mu, draws = _stat_draws(cfg)
    _write_values(cfg, bulk_statistic(draws, mu, cfg.n), "bulk",
                  {"psi0": float(mu.density(0.0))})


def cmd_add(args):
    cfg = _config(args)
    terms = [cfg.weight] + [_weight_from_args(p, None) if p.lstrip().startswith(("{", "@"))
                            else preset(p) for p in args.plus]
    copies = _int_list(args.copies, "copies")
    if len(copies) > 1 and cfg.out == "-":
        raise InvalidArgumentError("several --copies values need --out", field="out")
    bases = [build_basis(w, cfg.n) for w in terms]
    for k in copies:
        draws = sample_sum_batch(bases * k, cfg.samples, seed=cfg.seed, threads=cfg.threads)
        path = cfg.out
        if len(copies) > 1:
            p = Path(cfg.out)
            path = str(p.with_name(f"{p.stem}_k{k}{p.suffix}"))
        _write_draws(cfg, draws, path)


# ---------------------------------------------------------------------------
# parser

def build_parser():
    p = _Parser(prog="uiesampler", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, sampling=True):
        g = sp.add_argument_group("ensemble")
        g.add_argument("--preset", choices=sorted(PRESETS), default=None)
        g.add_argument("--weight", default=None,
                       help="weight JSON, or @path to a file holding it")
        g.add_argument("--n", type=int, default=10)
        g.add_argument("--out", default="-", help="output path (default stdout)")
        if sampling:
            g.add_argument("--samples", type=int, default=1)
            g.add_argument("--seed", type=int, default=0)
            g.add_argument("--threads", type=int, default=1)
            g.add_argument("--format", default="csv")
        return sp

    common(sub.add_parser("sample", help="sorted eigenvalue draws")).set_defaults(func=cmd_sample)
    m = common(sub.add_parser("matrix", help="Hermitian matrix draws (csv, json or bin)"))
    m.add_argument("--eigenvalues", default=None,
                   help="also write eigenvalues with a trace column to this path")
    m.set_defaults(func=cmd_matrix)
    common(sub.add_parser("eqm", help="equilibrium measure JSON"),
           sampling=False).set_defaults(func=cmd_eqm)
    k = common(sub.add_parser("ks", help="Kolmogorov-Smirnov report JSON"))
    k.add_argument("--ns", default=None, help="comma-separated sizes (overrides --n)")
    k.set_defaults(func=cmd_ks)
    e = common(sub.add_parser("edge", help="rescaled largest eigenvalue per draw"))
    e.add_argument("--constant", choices=["sqrt", "printed"], default="sqrt")
    e.set_defaults(func=cmd_edge)
    common(sub.add_parser("bulk", help="rescaled smallest |eigenvalue| per draw")
           ).set_defaults(func=cmd_bulk)
    a = common(sub.add_parser("add", help="eigenvalues of sums of independent draws"))
    a.add_argument("--plus", action="append", default=[],
                   help="extra summand per copy (preset name or weight JSON)")
    a.add_argument("--copies", default="1", help="comma-separated copy counts k")
    a.set_defaults(func=cmd_add)
    return p


def _fail(exc, code):
    field = getattr(exc, "field", None)
    print(json.dumps({"error": str(exc), "type": type(exc).__name__, "field": field}),
          file=sys.stderr)
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except InvalidArgumentError as exc:
        return _fail(exc, 2)
    except (UIEError, OSError, ArithmeticError) as exc:
        return _fail(exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
