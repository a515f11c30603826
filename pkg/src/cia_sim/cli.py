"""Command-line entry point: ``cia-sim <subcommand> [options]``.

Parameters come from an optional strict JSON ``--config`` file, overridden by
explicit flags. Results go to ``--out`` (written atomically) or stdout.
Exit codes: 0 ok, 2 bad configuration, 3 infeasible instance, 4 failed
diagnostic.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from fractions import Fraction

import numpy as np

from . import __version__, codec, hybrid as hy, monomials as mono, sim
from .channel import (RNG_ALGORITHM, ChannelRealization, CompoundChannelConfig, ScalarField,
                      make_rng, sample_channel, validate_genericity)
from .constellation import min_distance
from .errors import CiaError, ConfigError, DiagnosticError, InsufficientDataError, SizeCapError

U64 = 2**64


# -- small parsers ----------------------------------------------------------

def _int_list(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    if isinstance(text, int):
        return [text]
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _seed(value) -> int:
    try:
        s = int(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seed must be an integer, got {value!r}") from exc
    if not 0 <= s < U64:
        raise ConfigError("seed must fit in an unsigned 64-bit integer")
    return s


def _frac(f: Fraction) -> dict:
    return {"rational": f"{f.numerator}/{f.denominator}", "decimal": float(f)}


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, ScalarField):
        return obj.value
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _meta(params: dict, seed) -> dict:
    return {"tool": "cia-sim", "version": __version__, "rng": RNG_ALGORITHM,
            "seed": seed, "config": params}


# -- output -----------------------------------------------------------------

def atomic_write(path: str, text: str):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, default=_jsonable) + "\n"


def _csv_text(meta: dict, header: list, rows: list) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, default=_jsonable) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


class Output:
    """Collects artifacts and writes them only after the command succeeded."""

    def __init__(self, out: str | None):
        self.out = out
        self.files: list[tuple[str, str]] = []
        self.stdout: list[str] = []

    def main(self, text: str):
        if self.out:
            self.files.append((self.out, text))
        else:
            self.stdout.append(text)

    def extra(self, path: str | None, text: str):
        if path:
            self.files.append((path, text))

    def echo(self, text: str):
        self.stdout.append(text)

    def flush(self, files: bool = True):
        for path, text in (self.files if files else ()):
            atomic_write(path, text)
        for text in self.stdout:
            sys.stdout.write(text)
        sys.stdout.flush()


# -- parameter resolution ---------------------------------------------------

def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def resolve(args, defaults: dict) -> dict:
    """Merge defaults, the strict config file and explicit flags (highest priority)."""
    cfg = _load_config(args.config)
    unknown = set(cfg) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config fields for {args.command}: {sorted(unknown)}")
    merged = dict(defaults)
    merged.update(cfg)
    for key in defaults:
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = v
    if "seed" in merged:
        merged["seed"] = _seed(merged["seed"])
    return merged


CHANNEL_KEYS = {"M": 2, "K": 2, "J": "1,1", "field": "real", "seed": 0, "channel": None}
CODEC_KEYS = {"n": None, "L": None, "P": 1e6, "eps": codec.DEFAULT_EPS, "q_fixed": None,
              "T": codec.DEFAULT_T}


def _channel(p: dict) -> ChannelRealization:
    if p.get("channel"):
        try:
            with open(p["channel"], encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read channel file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed channel file: {exc}") from exc
        if isinstance(data, dict) and "channel" in data:
            data = data["channel"]
        return ChannelRealization.from_json(data)
    cfg = CompoundChannelConfig(M=int(p["M"]), K=int(p["K"]), J=tuple(_int_list(p["J"])),
                                field=ScalarField(p["field"]), seed=p["seed"])
    return sample_channel(cfg)


def _n_list(p: dict, K: int):
    if p.get("n") is None and p.get("L") is None:
        raise ConfigError("give --n or --L")
    if p.get("n") is not None:
        n = _int_list(p["n"])
        return tuple(n * K if len(n) == 1 else n), None
    return None, int(p["L"])


def _params(ch: ChannelRealization, p: dict, bases=None) -> codec.CodecParams:
    n_list, L = _n_list(p, ch.config.K)
    q_fixed = None if p.get("q_fixed") is None else int(p["q_fixed"])
    return codec.make_params(ch, P=float(p["P"]), n_list=n_list, L=L, eps=float(p["eps"]),
                             T=int(p["T"]), q_fixed=q_fixed, strict=True, bases=bases)


# -- subcommands ------------------------------------------------------------

def cmd_gen_channel(args, out: Output) -> int:
    p = resolve(args, {k: v for k, v in CHANNEL_KEYS.items() if k != "channel"}
                | {"magnitude_floor": 1e-3})
    cfg = CompoundChannelConfig(M=int(p["M"]), K=int(p["K"]), J=tuple(_int_list(p["J"])),
                                field=ScalarField(p["field"]), seed=p["seed"],
                                magnitude_floor=float(p["magnitude_floor"]))
    ch = sample_channel(cfg)
    doc = ch.to_json()
    doc["meta"] = _meta(p, p["seed"])
    doc["genericity"] = validate_genericity(ch).to_dict()
    out.main(_json_text(doc))
    return 0


def cmd_align_check(args, out: Output) -> int:
    p = resolve(args, CHANNEL_KEYS | {"n": None, "receiver": None, "state": None})
    ch = _channel(p)
    M, K, J = ch.config.dims
    if p.get("n") is None:
        raise ConfigError("align-check needs --n")
    n = _int_list(p["n"])
    n_list = tuple(n * K if len(n) == 1 else n)
    if len(n_list) != K:
        raise ConfigError(f"--n needs 1 or {K} values")
    bases = codec.build_bases(ch.config.dims, n_list)
    receivers = range(K) if p["receiver"] is None else [int(p["receiver"])]
    reports = []
    for r in receivers:
        if not 0 <= r < K:
            raise ConfigError(f"receiver {r} out of range")
        states = range(J[r]) if p["state"] is None else [int(p["state"])]
        for s in states:
            reports.append(mono.verify_alignment(ch, bases, r, s).to_dict())
    violations = [(rep["receiver"], rep["state"], v) for rep in reports for v in rep["violations"]]
    doc = {"meta": _meta(p, p["seed"]), "n_list": list(n_list),
           "basis_sizes": [len(b) for b in bases], "reports": reports,
           "ok": not violations}
    out.main(_json_text(doc))
    if violations:
        raise DiagnosticError(f"alignment property violated: {violations}")
    return 0


def cmd_params(args, out: Output) -> int:
    p = resolve(args, CHANNEL_KEYS | CODEC_KEYS)
    ch = _channel(p)
    params = _params(ch, p)
    doc = {"meta": _meta(p, p["seed"]), "params": params.to_dict()}
    out.main(_json_text(doc))
    return 0


def cmd_constellation(args, out: Output) -> int:
    p = resolve(args, CHANNEL_KEYS | CODEC_KEYS | {"receiver": 0, "state": 0,
                                                  "cap": 10**6})
    ch = _channel(p)
    n_list, L = _n_list(p, ch.config.K)
    n_list = codec.resolve_n_list(*ch.config.dims, n_list=n_list, L=L)
    bases = codec.build_bases(ch.config.dims, n_list)
    params = _params(ch, p | {"n": list(n_list), "L": None}, bases=bases)
    c = codec.build_received_constellation(ch, int(p["receiver"]), int(p["state"]), bases,
                                           params, cap=int(p["cap"]))
    complex_ = c.field is ScalarField.COMPLEX
    header = ["value"] + (["value_im"] if complex_ else []) + \
             [f"fav{i}" for i in range(c.n_favorite)] + \
             [f"int{i}" for i in range(len(c.radices) - c.n_favorite)]
    vals = c.values
    labels = c.labels(np.arange(len(c)))
    rows = []
    for v, lab in zip(vals, labels):
        head = [float(v.real), float(v.imag)] if complex_ else [float(v)]
        rows.append(head + [int(x) for x in lab])
    meta = _meta(p, p["seed"]) | {"points": len(c), "d_min": min_distance(c) if len(c) > 1
                                  else None, "params": params.to_dict()}
    out.main(_csv_text(meta, header, rows))
    return 0


SIM_KEYS = {"kind": "x", "M": 2, "K": 2, "J": "1,1", "n": None, "L": None, "JM": None,
            "field": "real", "eps": codec.DEFAULT_EPS, "q_fixed": None, "channel_seed": None,
            "P": None, "P_grid": None, "P_min": None, "P_max": None, "per_decade": 1,
            "trials": 20, "T": codec.DEFAULT_T, "seed": 0, "noise": True,
            "point_cap": 10**6, "format": None, "allow_no_fit": False}


def _instance(p: dict):
    q = None if p.get("q_fixed") is None else int(p["q_fixed"])
    cs = None if p.get("channel_seed") is None else _seed(p["channel_seed"])
    if p["kind"] == "hybrid":
        if p.get("JM") is None:
            raise ConfigError("hybrid instance needs JM")
        n = _int_list(p["n"] if p.get("n") is not None else 1)
        return sim.HybridScheme(M=int(p["M"]), J_M=int(p["JM"]), n=n[0], field=p["field"],
                                eps=float(p["eps"]), q_fixed=q, channel_seed=cs)
    if p["kind"] != "x":
        raise ConfigError(f"unknown scheme kind {p['kind']!r}")
    K = int(p["K"])
    n_list, L = _n_list(p, K)
    return sim.XScheme(M=int(p["M"]), K=K, J=tuple(_int_list(p["J"])), n_list=n_list, L=L,
                       field=p["field"], eps=float(p["eps"]), q_fixed=q, channel_seed=cs)


def _grid(p: dict) -> list[float]:
    if p.get("P_grid") is not None:
        return _float_list(p["P_grid"])
    if p.get("P_min") is not None and p.get("P_max") is not None:
        lo, hi = math.log10(float(p["P_min"])), math.log10(float(p["P_max"]))
        k = int(p["per_decade"])
        if k < 1 or hi <= lo:
            raise ConfigError("need P_min < P_max and per_decade >= 1")
        num = int(round((hi - lo) * k)) + 1
        return [float(v) for v in np.logspace(lo, hi, num)]
    if p.get("P") is not None:
        return _float_list(p["P"])
    raise ConfigError("give --P, --P-grid, or --P-min/--P-max")


ROW_HEADER = ["P", "{axis}", "Q", "dmin", "ser", "bits_ok", "pe_bound"]


def _sweep_outputs(report: sim.SimReport, p: dict, out: Output, fmt: str):
    field = ScalarField(report.config.instance.field)
    axis = "half_log2P" if field is ScalarField.REAL else "log2P"
    summary = report.to_dict()
    summary["meta"] = _meta(p, p["seed"])
    if fmt == "csv":
        header = [h.format(axis=axis) for h in ROW_HEADER]
        rows = [[r.P, r.x, r.Q, r.d_min, r.ser, r.bits_ok, r.pe_bound] for r in report.rows]
        out.main(_csv_text(summary["meta"], header, rows))
        summary.pop("rows")
        out.echo(_json_text(summary))
    else:
        out.main(_json_text(summary))


def _run_sweep(args, p: dict) -> sim.SimReport:
    cfg = sim.SweepConfig(_instance(p), tuple(_grid(p)), trials_per_P=int(p["trials"]),
                          symbols_per_trial=int(p["T"]), seed=p["seed"],
                          noise=bool(p["noise"]), point_cap=int(p["point_cap"]))
    return sim.run_sweep(cfg, threads=_threads(args))


def cmd_simulate(args, out: Output) -> int:
    p = resolve(args, SIM_KEYS)
    report = _run_sweep(args, p)
    _sweep_outputs(report, p, out, p["format"] or "json")
    return 0


def cmd_dof_sweep(args, out: Output) -> int:
    p = resolve(args, SIM_KEYS)
    report = _run_sweep(args, p)
    if report.fitted_dof is None and not p["allow_no_fit"]:
        raise InsufficientDataError(report.fit_error)
    _sweep_outputs(report, p, out, p["format"] or "csv")
    return 0


HYBRID_KEYS = {"M": 2, "JM": 2, "n": 1, "eps": codec.DEFAULT_EPS, "P": 1e6, "seed": 0,
               "trials": 1, "field": "real", "q_fixed": None, "T": 1000, "cap": 10**6,
               "P_grid": None, "csv": None}


def cmd_hybrid(args, out: Output) -> int:
    p = resolve(args, HYBRID_KEYS)
    M, JM, n = int(p["M"]), int(p["JM"]), _int_list(p["n"])[0]
    q_fixed = None if p.get("q_fixed") is None else int(p["q_fixed"])
    cfg = CompoundChannelConfig(M=M, K=M, J=(1,) * (M - 1) + (JM,), field=ScalarField(p["field"]),
                                seed=p["seed"])
    bases = hy.build_hybrid_bases(M, JM, n)
    ortho, clean, dmins, degenerate = 0.0, 0.0, [], 0
    dmin_note = None
    for trial in range(int(p["trials"])):
        ch = sample_channel(cfg, make_rng(p["seed"], trial, 0))
        rng = make_rng(p["seed"], trial, 1)
        pre = hy.build_precoders(ch, rng)
        beta = hy.sample_beta(rng)
        params = hy.make_hybrid_params(ch, pre, bases, P=float(p["P"]), beta=beta,
                                       eps=float(p["eps"]), T=int(p["T"]), q_fixed=q_fixed,
                                       strict=True)
        vals = hy.symbol_values(ch, pre, beta)
        ortho = max(ortho, hy.max_orthogonality_residual(ch, pre))
        streams = hy.random_streams(params, make_rng(p["seed"], trial, 2))
        clean = max(clean, hy.receiver_clean_check(ch, pre, bases, params, streams,
                                                   vals).max_relative)
        degenerate += len(hy.degenerate_g(ch, pre))
        try:
            per_state = [min_distance(hy.receiver_M_constellation(
                ch, s, pre, bases, params, vals, cap=int(p["cap"]))) for s in range(JM)]
            dmins.append(min(per_state))
        except SizeCapError as exc:
            dmin_note = str(exc)
    doc = {
        "meta": _meta(p, p["seed"]),
        "params": params.to_dict(),
        "orthogonality_max_residual": ortho,
        "clean_check_max_relative": clean,
        "degenerate_g": degenerate,
        "coefficient_counts": {"zero_forced": M * params.L,
                               "last_receiver": params.L + (M - 1) * params.kappa},
        "dmin": min(dmins) if dmins else None,
        "dmin_median": float(np.median(dmins)) if dmins else None,
        "dmin_note": dmin_note,
        "nominal_dof": _frac(hy.hybrid_nominal_dof(params)),
        "reference_dof": _frac(Fraction(M - 1) + Fraction(1, M)),
    }
    if p.get("P_grid") is not None:
        inst = sim.HybridScheme(M=M, J_M=JM, n=n, field=p["field"], eps=float(p["eps"]),
                                q_fixed=q_fixed)
        sc = sim.SweepConfig(inst, tuple(_float_list(p["P_grid"])), trials_per_P=int(p["trials"]),
                             symbols_per_trial=int(p["T"]), seed=p["seed"], point_cap=int(p["cap"]))
        rep = sim.run_sweep(sc, threads=_threads(args))
        axis = "half_log2P" if inst.field == "real" else "log2P"
        rows = [[r.P, r.x, r.Q, r.d_min, r.ser, r.bits_ok, r.pe_bound] for r in rep.rows]
        text = _csv_text(doc["meta"], [h.format(axis=axis) for h in ROW_HEADER], rows)
        if p.get("csv"):
            out.extra(p["csv"], text)
        doc["fitted_dof"] = rep.fitted_dof
        doc["fit_error"] = rep.fit_error
    out.main(_json_text(doc))
    if ortho >= hy.ORTHO_RTOL or clean >= hy.ORTHO_RTOL:
        raise DiagnosticError(f"zero-forcing leakage {max(ortho, clean):.3g} above tolerance")
    return 0


def cmd_bounds(args, out: Output) -> int:
    p = resolve(args, {"M": 2, "K": 2, "profile": None, "J": None})
    M, K = int(p["M"]), int(p["K"])
    ref = codec.dof_reference(M, K)
    doc = {"dof": f"{ref.value.numerator}/{ref.value.denominator}",
           "real_lift": f"{ref.real_lift_bound.numerator}/{ref.real_lift_bound.denominator}",
           "dof_decimal": float(ref.value), "real_lift_decimal": float(ref.real_lift_bound)}
    bad = False
    if p.get("profile") is not None:
        prof = [Fraction(v) for v in (p["profile"] if isinstance(p["profile"], list)
                                      else str(p["profile"]).split(","))]
        J = None if p.get("J") is None else _int_list(p["J"])
        rep = sim.check_outer_bounds(prof, M, K, J)
        doc["bound_report"] = rep.to_dict()
        bad = not rep.ok
    doc["meta"] = _meta(p, None)
    out.main(_json_text(doc))
    if bad:
        raise DiagnosticError("profile violates an outer bound")
    return 0


def _threads(args) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return args.threads
    return sim.default_threads()


# -- argument parser ----------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--config", help="JSON file with subcommand parameters (unknown keys rejected)")
    c.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    c.add_argument("--out", help="output path (stdout when omitted)")
    c.add_argument("--threads", type=int, help="worker threads (default: $CIA_SIM_THREADS)")
    c.add_argument("--json-errors", action="store_true", help="report errors as JSON on stderr")
    return c


def _channel_flags(sp):
    sp.add_argument("--M", type=int)
    sp.add_argument("--K", type=int)
    sp.add_argument("--J", help="states per receiver, e.g. 2,2")
    sp.add_argument("--field", choices=["real", "complex"])
    sp.add_argument("--channel", help="channel JSON written by gen-channel")


def _codec_flags(sp):
    sp.add_argument("--n", help="exponent cap, one value or one per receiver")
    sp.add_argument("--L", type=int, help="target basis size (chooses n per receiver)")
    sp.add_argument("--P", type=float)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--q-fixed", dest="q_fixed", type=int)
    sp.add_argument("--T", type=int)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="cia-sim", parents=[common],
                                 description="Real interference alignment on compound channels")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("gen-channel", parents=[common], help="sample a channel realization")
    sp.add_argument("--M", type=int)
    sp.add_argument("--K", type=int)
    sp.add_argument("--J")
    sp.add_argument("--field", choices=["real", "complex"])
    sp.add_argument("--magnitude-floor", dest="magnitude_floor", type=float)
    sp.set_defaults(func=cmd_gen_channel)

    sp = sub.add_parser("align-check", parents=[common], help="verify alignment set properties")
    _channel_flags(sp)
    sp.add_argument("--n")
    sp.add_argument("--receiver", type=int)
    sp.add_argument("--state", type=int)
    sp.set_defaults(func=cmd_align_check)

    sp = sub.add_parser("params", parents=[common], help="derive scheme parameters")
    _channel_flags(sp)
    _codec_flags(sp)
    sp.set_defaults(func=cmd_params)

    sp = sub.add_parser("constellation", parents=[common], help="write a received constellation")
    _channel_flags(sp)
    _codec_flags(sp)
    sp.add_argument("--receiver", type=int)
    sp.add_argument("--state", type=int)
    sp.add_argument("--cap", type=int)
    sp.set_defaults(func=cmd_constellation)

    for name, func, helptext in (("simulate", cmd_simulate, "Monte Carlo trials"),
                                 ("dof-sweep", cmd_dof_sweep, "power sweep and slope fit")):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.add_argument("--kind", choices=["x", "hybrid"])
        sp.add_argument("--M", type=int)
        sp.add_argument("--K", type=int)
        sp.add_argument("--J")
        sp.add_argument("--JM", type=int)
        sp.add_argument("--n")
        sp.add_argument("--L", type=int)
        sp.add_argument("--field", choices=["real", "complex"])
        sp.add_argument("--eps", type=float)
        sp.add_argument("--q-fixed", dest="q_fixed", type=int)
        sp.add_argument("--channel-seed", dest="channel_seed", type=int)
        sp.add_argument("--P", help="one power or a comma-separated grid")
        sp.add_argument("--P-grid", dest="P_grid")
        sp.add_argument("--P-min", dest="P_min", type=float)
        sp.add_argument("--P-max", dest="P_max", type=float)
        sp.add_argument("--per-decade", dest="per_decade", type=int)
        sp.add_argument("--trials", type=int)
        sp.add_argument("--T", type=int)
        sp.add_argument("--point-cap", dest="point_cap", type=int)
        sp.add_argument("--no-noise", dest="noise", action="store_const", const=False)
        sp.add_argument("--format", choices=["json", "csv"])
        sp.add_argument("--allow-no-fit", dest="allow_no_fit", action="store_const", const=True)
        sp.set_defaults(func=func)

    sp = sub.add_parser("hybrid", parents=[common], help="zero-forcing plus alignment report")
    sp.add_argument("--M", type=int)
    sp.add_argument("--JM", type=int)
    sp.add_argument("--n")
    sp.add_argument("--eps", type=float)
    sp.add_argument("--P", type=float)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--field", choices=["real", "complex"])
    sp.add_argument("--q-fixed", dest="q_fixed", type=int)
    sp.add_argument("--T", type=int)
    sp.add_argument("--cap", type=int)
    sp.add_argument("--P-grid", dest="P_grid", help="optional sweep powers")
    sp.add_argument("--csv", help="path for the optional sweep CSV")
    sp.set_defaults(func=cmd_hybrid)

    sp = sub.add_parser("bounds", parents=[common], help="reference DoF and outer-bound check")
    sp.add_argument("--M", type=int)
    sp.add_argument("--K", type=int)
    sp.add_argument("--profile", help="per-receiver DoF, e.g. 2/3,2/3")
    sp.add_argument("--J", help="states per receiver (limits which bounds apply)")
    sp.set_defaults(func=cmd_bounds)
    return ap


def _report_error(exc: Exception, code: int, json_errors: bool):
    if json_errors:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc),
                                     "exit_code": code}) + "\n")
    else:
        sys.stderr.write(f"cia-sim: error: {exc}\n")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    json_errors = "--json-errors" in argv
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = Output(args.out)
    try:
        code = args.func(args, out)
    except CiaError as exc:
        if isinstance(exc, DiagnosticError):
            # the report explains the failure; show it but leave no files behind
            out.flush(files=False)
        _report_error(exc, exc.exit_code, json_errors)
        return exc.exit_code
    except (ValueError, TypeError, KeyError) as exc:
        # remaining malformed-input cases surface as plain Python errors
        _report_error(exc, 2, json_errors)
        return 2
    out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
