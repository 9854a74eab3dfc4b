"""Command-line entry point: simulate | scramble | sweep | wigner | wavepacket.

Exit codes: 0 success, 1 validation error, 2 numeric failure, 3 truncation
check failed with [run] strict_truncation = true.
"""

import argparse
import itertools
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, config
from ._backend import BACKEND
from .analysis import relative_error
from .entanglement import entropy_time_average
from .errors import CqdynError, NumericError, ValidationError
from .evolve import (
    COLUMNS, SpectralPropagator, Trajectory, evolve_qq_direct, evolve_qq_spectral, run_scheme,
    time_grid, truncation_monitor,
)
from .model import SystemSpec
from .scramble import scramble_report

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_TRUNCATION = 0, 1, 2, 3


# ---------------------------------------------------------------- output

def _fmt(x):
    return "" if x is None or (isinstance(x, float) and np.isnan(x)) else "%.17g" % x


def write_csv(path, header, rows, config_hash):
    """CSV with a leading '# config_hash=' line; NaN becomes an empty field."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(float(v)) if not isinstance(v, str) else v for v in row) + "\n")


def write_trajectory(path, traj, config_hash):
    write_csv(path, COLUMNS, traj.table(), config_hash)


def read_csv(path):
    """(config_hash, header, float rows) of a file written by write_csv."""
    with open(path) as fh:
        first = fh.readline().strip()
        if not first.startswith("# config_hash="):
            raise ValidationError(f"{path} carries no config hash")
        h = first.split("=", 1)[1]
        header = fh.readline().strip().split(",")
        rows = [[float(v) if v else float("nan") for v in line.strip().split(",")] for line in fh if line.strip()]
    return h, header, np.array(rows)


def aggregate(paths):
    """Concatenate CSV files produced by one configuration; mixed hashes are rejected."""
    hashes, header, blocks = set(), None, []
    for p in paths:
        h, hd, rows = read_csv(p)
        hashes.add(h)
        if header is not None and hd != header:
            raise ValidationError("cannot aggregate files with different columns")
        header = hd
        blocks.append(rows)
    if len(hashes) > 1:
        raise ValidationError(f"refusing to aggregate outputs of different configs: {sorted(hashes)}")
    return hashes.pop(), header, np.vstack(blocks)


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "__dataclass_fields__"):
        return {k: getattr(o, k) for k in o.__dataclass_fields__}
    raise TypeError(f"not serializable: {type(o)}")


def _clean(x):
    # JSON has no NaN/inf
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


def _outdir(cfg, override=None):
    d = override or cfg.output_dir
    os.makedirs(d, exist_ok=True)
    return d


# ---------------------------------------------------------------- commands

def _generic_runs(cfg, times):
    spec = SystemSpec.load(cfg.spec_file)
    with np.load(cfg.spec_file) as data:
        if "z0" in data:
            z0 = data["z0"]
        else:
            z0 = np.zeros((spec.d1, spec.d2), dtype=complex)
            z0[0, 0] = 1.0
    out = {}
    for scheme in cfg.schemes:
        if scheme == "qq-spectral":
            out[scheme] = evolve_qq_spectral(spec, z0, times, store_states=False)
        elif scheme == "qq-direct":
            out[scheme] = evolve_qq_direct(spec, z0, times, cfg.step, store_states=False, backend=cfg.backend)
        else:
            raise ValidationError(f"scheme {scheme} needs the oscillator model, not a generic system")
    return out


def cmd_simulate(cfg, outdir=None):
    start = time.perf_counter()
    d = _outdir(cfg, outdir)
    times = time_grid(cfg.horizon, cfg.stride)
    if cfg.spec_file:
        runs = _generic_runs(cfg, times)
    else:
        runs = {s: run_scheme(cfg.oscillator, s, times, cfg.step, store_states=False, backend=cfg.backend)
                for s in cfg.schemes}
    meta = {"config": cfg.raw, "config_hash": cfg.hash, "version": __version__, "backend": BACKEND,
            "schemes": {}}
    truncation_failed = False
    for scheme, traj in runs.items():
        write_trajectory(os.path.join(d, f"{scheme}.csv"), traj, cfg.hash)
        entry = {
            "energy_drift": _clean(traj.energy_drift),
            "energy_conserved": traj.conserves_energy,
            "norm_drift": _clean(traj.max_norm_drift),
        }
        if not cfg.spec_file:
            rep = truncation_monitor(traj, cfg.oscillator.dims[0] - 1 if cfg.oscillator.n_max2 is None
                                     else (cfg.oscillator.n_max, cfg.oscillator.n_max2))
            entry["truncation"] = rep
            if not rep.passed:
                truncation_failed = True
                print(f"warning: {scheme}: occupation reaches the cutoff "
                      f"(margin {rep.worst_margin:.3g} at tau={rep.worst_tau:.4g})", file=sys.stderr)
        if cfg.flag("analysis", "entropy") and scheme.startswith("qq"):
            burn = cfg.raw["analysis"]["burn_in"].strip()
            entry["mean_s_vn"] = entropy_time_average(traj, float(burn) if burn else None)
        meta["schemes"][scheme] = entry
    meta["truncation_ok"] = not truncation_failed
    meta["wall_time_s"] = time.perf_counter() - start
    write_json(os.path.join(d, "run.json"), meta)
    if truncation_failed and cfg.strict:
        return EXIT_TRUNCATION
    return EXIT_OK


def cmd_scramble(cfg, outdir=None):
    d = _outdir(cfg, outdir)
    osc = cfg.oscillator
    dim = cfg.raw["analysis"]["d"].strip()
    dval = int(dim) if dim else min(osc.dims)
    rep = scramble_report(osc, d=dval)
    out = {
        "config": cfg.raw, "config_hash": cfg.hash,
        "t_lin": rep.t_lin, "t_vn": rep.t_vn, "d": dval, "crude_estimate": _clean(rep.crude_estimate),
        "residual": rep.residual, "tau_res": _clean(rep.tau_res), "resonant": rep.resonant,
        "ratio": _clean(rep.ratio), "mathieu": rep.mathieu, "errors": rep.errors,
    }
    write_json(os.path.join(d, "scramble.json"), out)
    rows = np.column_stack([rep.times, rep.e_int_series, rep.n1_series, rep.n2_series])
    write_csv(os.path.join(d, "scramble_series.csv"), ["tau", "E_int", "N1", "N2"], rows, cfg.hash)
    return EXIT_OK


def _sweep_point(args):
    """Run one sweep point; module-level so it can be pickled."""
    cfg, values, mean_entropy, reference = args
    point = cfg.with_oscillator(**values)
    osc = point.oscillator
    times = time_grid(cfg.horizon, cfg.stride)
    qq = run_scheme(osc, reference, times, cfg.step, store_states=False, backend=cfg.backend)
    cc = run_scheme(osc, "cc", times, cfg.step, backend=cfg.backend)
    cq = run_scheme(osc, "cq", times, cfg.step, store_states=False, backend=cfg.backend)
    row = [relative_error(cc, qq), relative_error(cq, qq)]
    if mean_entropy:
        row.append(entropy_time_average(qq))
    return cfg.hash, row


def _workers(cfg, override=None):
    if override:
        return int(override)
    w = cfg.raw["sweep"]["workers"].strip() or os.environ.get(config.ENV_WORKERS, "")
    try:
        return max(1, int(w)) if w else 1
    except ValueError:
        raise ValidationError(f"worker count must be an integer, got {w!r}") from None


def cmd_sweep(cfg, outdir=None, workers=None):
    d = _outdir(cfg, outdir)
    axes = cfg.sweep_axes()
    if not axes:
        raise ValidationError("[sweep] defines no axes")
    names = [a for a, _ in axes]
    mean_entropy = cfg.flag("sweep", "mean_entropy")
    reference = cfg.raw["sweep"]["reference"].strip()
    if reference not in ("qq-spectral", "qq-direct"):
        raise ValidationError("[sweep] reference must be qq-spectral or qq-direct")
    points = [dict(zip(names, combo)) for combo in itertools.product(*[v for _, v in axes])]
    for p in points:
        for k in ("nu", "n_max", "n_max2"):
            if k in p:
                p[k] = int(p[k])
    jobs = [(cfg, p, mean_entropy, reference) for p in points]
    nw = _workers(cfg, workers)
    if nw > 1:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    if len({h for h, _ in results}) != 1 or results[0][0] != cfg.hash:
        raise ValidationError("sweep results come from mixed configurations")
    header = names + ["eps_cc", "eps_cq"] + (["mean_s_vn"] if mean_entropy else [])
    rows = [[p[n] for n in names] + r for p, (_, r) in zip(points, results)]
    write_csv(os.path.join(d, "sweep.csv"), header, rows, cfg.hash)
    write_json(os.path.join(d, "sweep.json"), {"config": cfg.raw, "config_hash": cfg.hash,
                                               "axes": dict(axes), "points": len(points)})
    return EXIT_OK


def cmd_wigner(cfg, outdir=None):
    from .wigner import WignerTable

    d = _outdir(cfg, outdir)
    osc = cfg.oscillator
    w = cfg.raw["wigner"]
    req = sorted(set(cfg.numbers("wigner", "times")))
    if not req:
        raise ValidationError("[wigner] times is empty")
    if req[0] < 0 or req[-1] > cfg.horizon:
        raise ValidationError(f"wigner times must lie in [0, {cfg.horizon:g}]")
    schemes = [s.strip() for s in w["schemes"].split(",") if s.strip()]
    bad = [s for s in schemes if s not in ("qq-spectral", "qq-direct", "cq", "cb")]
    if bad or not schemes:
        raise ValidationError(f"[wigner] schemes must be quantum for oscillator 2, got {schemes}")
    fmt = w["format"].strip()
    if fmt not in ("csv", "npz"):
        raise ValidationError("[wigner] format must be csv or npz")
    npts = int(cfg.number("wigner", "points"))
    axis = np.linspace(cfg.number("wigner", "q_min"), cfg.number("wigner", "q_max"), npts)
    times = np.array(req if req[0] == 0 else [0.0] + req)
    table = WignerTable(osc.dims[1], axis, axis)
    frames = []
    for scheme in schemes:
        traj = run_scheme(osc, scheme, times, cfg.step, backend=cfg.backend)
        for i, t in enumerate(times):
            if t not in req:
                continue
            s = traj.states[i]
            rho = s.T @ s.conj() if s.ndim == 2 else np.outer(s, s.conj())
            rho = 0.5 * (rho + rho.conj().T)
            rho = rho / np.trace(rho).real
            grid = table.evaluate(rho, meta={"scheme": scheme, "tau": float(t), "config_hash": cfg.hash})
            name = f"wigner_{scheme}_{i:04d}"
            if fmt == "csv":
                grid.to_csv(os.path.join(d, name + ".csv"))
            else:
                grid.save_npz(os.path.join(d, name + ".npz"))
            frames.append({"file": name, "scheme": scheme, "tau": float(t),
                           "normalization": grid.normalization(), "peak": grid.peak()})
    cc = run_scheme(osc, "cc", times, cfg.step, backend=cfg.backend)
    keep = np.isin(times, req)
    write_csv(os.path.join(d, "cc_overlay.csv"), ["tau", "q2", "p2"],
              np.column_stack([times[keep], cc["q2"][keep], cc["p2"][keep]]), cfg.hash)
    write_json(os.path.join(d, "wigner.json"), {"config": cfg.raw, "config_hash": cfg.hash, "frames": frames})
    return EXIT_OK


def cmd_wavepacket(cfg, outdir=None):
    from .wavepacket import Potential1D, WavepacketState, evolve_wavepacket, residual_norm

    d = _outdir(cfg, outdir)
    u = Potential1D.polynomial(cfg.numbers("wavepacket", "potential"))
    v1 = Potential1D.polynomial(cfg.numbers("wavepacket", "coupling"))
    num = {k: cfg.number("wavepacket", k) for k in
           ("mass", "lam", "v2", "q0", "p0", "sigma_re", "sigma_im", "horizon", "stride", "step")}
    s0 = WavepacketState.normalized(num["q0"], num["p0"], complex(num["sigma_re"], num["sigma_im"]))
    times = time_grid(num["horizon"], num["stride"])
    tr = evolve_wavepacket(u, v1, num["v2"], num["mass"], num["lam"], s0, times, num["step"])
    res = [residual_norm(u, v1, num["v2"], num["mass"], num["lam"], tr.state(i)) for i in range(times.size)]
    rows = np.column_stack([times, tr.Q, tr.P, tr.gamma.real, tr.gamma.imag, tr.Sigma.real, tr.Sigma.imag,
                            res, tr.norm_link()])
    write_csv(os.path.join(d, "wavepacket.csv"),
              ["t", "Q", "P", "gamma_re", "gamma_im", "Sigma_re", "Sigma_im", "residual", "norm_link"],
              rows, cfg.hash)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "scramble": cmd_scramble,
    "sweep": cmd_sweep,
    "wigner": cmd_wigner,
    "wavepacket": cmd_wavepacket,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="cqdyn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("-c", "--config", help="INI configuration file")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override a configuration key (repeatable)")
        p.add_argument("-o", "--output-dir", help="output directory (overrides config and environment)")
        if name == "simulate":
            p.add_argument("--strict", action="store_true", help="exit 3 if the truncation check fails")
        if name == "sweep":
            p.add_argument("-j", "--workers", type=int, help="parallel worker processes")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config.load(args.config, args.set)
        if getattr(args, "strict", False):
            cfg.strict = True
        if args.command == "sweep":
            return cmd_sweep(cfg, args.output_dir, args.workers)
        return COMMANDS[args.command](cfg, args.output_dir)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CqdynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
