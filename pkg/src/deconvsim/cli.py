"""Command line front end.

Four subcommands:

* ``simulate``  run a network through the cycle model and emit a report,
* ``sparsity``  tabulate zero-insertion sparsity against input size,
* ``sweep``     repeat a simulation across values of one parameter,
* ``validate``  check a config (and optionally a network) and print the
  derived resource counts.

Exit codes: 0 success, 2 validation or usage problems, 3 oracle mismatch,
4 I/O failure. Reports are byte-deterministic for a given seed, including
sweeps running on multiple worker threads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .accel import (AccelConfig, adder_count, builtin_config,
                    builtin_config_names, parse_config, pe_count,
                    require_valid_config, validate_config)
from .errors import DeconvSimError, SchemaError, TraceLimitError
from .eventsim import simulate_layer_events
from .meshsim import simulate_layer
from .network import (NetworkDescriptor, builtin_names, builtin_network,
                      parse_network)
from .oracle import deconv_insert_conv
from .report import build_network_report, emit_report, network_sparsity_csv
from .scheduler import dump_schedule, tile_layer

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_ORACLE = 3
EXIT_IO = 4

# spot-check tensors stay tiny so the oracle pass is cheap and overflow free
_CHECK_VALUE_SPAN = 7


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _resolve_network(spec: str) -> NetworkDescriptor:
    if spec.startswith("builtin:"):
        return builtin_network(spec[len("builtin:"):])
    if spec in builtin_names():
        return builtin_network(spec)
    return parse_network(spec)


def _resolve_config(spec: str | None, net: NetworkDescriptor) -> AccelConfig:
    if spec is None:
        return builtin_config("table2-2d" if net.dims == 2 else "table2-3d")
    if spec.startswith("builtin:"):
        return builtin_config(spec[len("builtin:"):])
    if spec in builtin_config_names():
        return builtin_config(spec)
    with open(spec, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _apply_overrides(cfg: AccelConfig, args) -> AccelConfig:
    over = {}
    if getattr(args, "bandwidth_gbps", None) is not None:
        over["ddr_bandwidth_gbps"] = args.bandwidth_gbps
    if getattr(args, "derating", None) is not None:
        over["bandwidth_derating"] = args.derating
    if getattr(args, "frac_bits", None) is not None:
        over["frac_bits"] = args.frac_bits
    return replace(cfg, **over) if over else cfg


def _write_out(data: bytes, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        with open(out, "wb") as fh:
            fh.write(data)


def _check_network_oracle(net: NetworkDescriptor, cfg: AccelConfig,
                          seed: int, overlap_add_cycles: int) -> int | None:
    """Run every layer functionally and compare with the reference formulation."""
    for idx, layer in enumerate(net.layers):
        rng = np.random.default_rng(seed + idx)
        x = rng.integers(-_CHECK_VALUE_SPAN, _CHECK_VALUE_SPAN + 1,
                         size=(layer.in_channels,) + layer.in_size,
                         dtype=np.int64)
        kshape = (layer.kernel,) * layer.dims
        w = rng.integers(-_CHECK_VALUE_SPAN, _CHECK_VALUE_SPAN + 1,
                         size=(layer.out_channels, layer.in_channels) + kshape,
                         dtype=np.int64)
        got, _ = simulate_layer(layer, cfg, x, w,
                                overlap_add_cycles=overlap_add_cycles)
        want = deconv_insert_conv(x, w, layer)
        if not np.array_equal(got, want):
            return _fail(EXIT_ORACLE,
                         f"layer {layer.name!r}: simulated output disagrees "
                         "with the reference transposed convolution")
    return None


def _trace_network(net: NetworkDescriptor, cfg: AccelConfig, seed: int,
                   path: str, limit: int) -> int | None:
    lines: list[str] = []
    for idx, layer in enumerate(net.layers):
        rng = np.random.default_rng(seed + idx)
        x = rng.integers(-_CHECK_VALUE_SPAN, _CHECK_VALUE_SPAN + 1,
                         size=(layer.in_channels,) + layer.in_size,
                         dtype=np.int64)
        w = rng.integers(-_CHECK_VALUE_SPAN, _CHECK_VALUE_SPAN + 1,
                         size=(layer.out_channels, layer.in_channels)
                         + (layer.kernel,) * layer.dims,
                         dtype=np.int64)
        try:
            _, _, trace = simulate_layer_events(
                layer, cfg, x, w, trace=True, cycle_limit=limit)
        except TraceLimitError as exc:
            return _fail(EXIT_INVALID,
                         f"layer {layer.name!r} is too large to trace: {exc}")
        lines.append(f"# layer {layer.name}")
        lines.extend(trace or [])
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    return None


def _dump_schedules(net: NetworkDescriptor, cfg: AccelConfig,
                    path: str) -> int | None:
    obj = {
        "network": net.name,
        "layers": [
            {"layer": layer.name,
             "schedule": dump_schedule(tile_layer(layer, cfg))}
            for layer in net.layers
        ],
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    return None


def cmd_simulate(args) -> int:
    try:
        net = _resolve_network(args.network)
    except (FileNotFoundError, OSError) as exc:
        return _fail(EXIT_IO, str(exc))
    except (SchemaError, DeconvSimError) as exc:
        return _fail(EXIT_INVALID, str(exc))
    try:
        cfg = _apply_overrides(_resolve_config(args.config, net), args)
        require_valid_config(cfg)
    except (FileNotFoundError, OSError) as exc:
        return _fail(EXIT_IO, str(exc))
    except DeconvSimError as exc:
        return _fail(EXIT_INVALID, str(exc))

    if args.check_oracle:
        rc = _check_network_oracle(net, cfg, args.seed, args.overlap_add_cycles)
        if rc is not None:
            return rc
    if args.trace is not None:
        rc = _trace_network(net, cfg, args.seed, args.trace, args.trace_limit)
        if rc is not None:
            return rc
    if args.dump_schedule is not None:
        rc = _dump_schedules(net, cfg, args.dump_schedule)
        if rc is not None:
            return rc

    try:
        rep = build_network_report(
            net, cfg, overlap_add_cycles=args.overlap_add_cycles)
    except DeconvSimError as exc:
        return _fail(EXIT_INVALID, str(exc))
    try:
        _write_out(emit_report([rep], args.format), args.out)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    return EXIT_OK


def cmd_sparsity(args) -> int:
    try:
        net = _resolve_network(args.network)
    except (FileNotFoundError, OSError) as exc:
        return _fail(EXIT_IO, str(exc))
    except DeconvSimError as exc:
        return _fail(EXIT_INVALID, str(exc))
    try:
        _write_out(network_sparsity_csv(net), args.out)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    return EXIT_OK


_SWEEP_PARAMS = {
    "t_m": int, "t_n": int, "t_z": int, "t_r": int, "t_c": int,
    "bandwidth": float, "derating": float, "frac_bits": int,
    "overlap_add_cycles": int,
}

_SWEEP_FIELD = {
    "bandwidth": "ddr_bandwidth_gbps",
    "derating": "bandwidth_derating",
}


def _sweep_point(net, cfg, param, value, overlap_add_cycles, rename):
    oac = overlap_add_cycles
    if param == "overlap_add_cycles":
        oac = value
    else:
        cfg = replace(cfg, **{_SWEEP_FIELD.get(param, param): value})
    problems = validate_config(cfg)
    if problems:
        raise DeconvSimError(
            f"{param}={value}: " + "; ".join(problems))
    rep = build_network_report(net, cfg, overlap_add_cycles=oac)
    if rename:
        rep.name = f"{net.name}[{param}={value}]"
        rep.summary.network = rep.name
        for lr in rep.layers:
            lr.network = rep.name
    return rep


def cmd_sweep(args) -> int:
    try:
        net = _resolve_network(args.network)
        cfg = _apply_overrides(_resolve_config(args.config, net), args)
    except (FileNotFoundError, OSError) as exc:
        return _fail(EXIT_IO, str(exc))
    except DeconvSimError as exc:
        return _fail(EXIT_INVALID, str(exc))

    cast = _SWEEP_PARAMS[args.param]
    raw = [v for v in (args.values or "").split(",") if v.strip()]
    if not raw:
        return _fail(EXIT_INVALID, "sweep needs at least one value")
    try:
        values = [cast(v) for v in raw]
    except ValueError:
        return _fail(EXIT_INVALID, f"bad value list for {args.param}: {args.values!r}")

    rename = len(values) > 1
    env_threads = os.environ.get("DECONVSIM_THREADS")
    workers = len(values)
    if env_threads is not None:
        try:
            workers = max(1, min(workers, int(env_threads)))
        except ValueError:
            return _fail(EXIT_INVALID,
                         f"bad DECONVSIM_THREADS value: {env_threads!r}")
    try:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(
                lambda v: _sweep_point(net, cfg, args.param, v,
                                       args.overlap_add_cycles, rename),
                values))
    except DeconvSimError as exc:
        return _fail(EXIT_INVALID, str(exc))
    try:
        _write_out(emit_report(reports, args.format), args.out)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    return EXIT_OK


def cmd_validate(args) -> int:
    spec = args.config
    if spec.startswith("builtin:"):
        spec = spec[len("builtin:"):]
    try:
        if spec in builtin_config_names():
            cfg = builtin_config(spec)
        else:
            with open(spec, "r", encoding="utf-8") as fh:
                cfg = parse_config(fh.read())
    except (FileNotFoundError, OSError) as exc:
        return _fail(EXIT_IO, str(exc))
    except DeconvSimError as exc:
        return _fail(EXIT_INVALID, str(exc))

    problems = validate_config(cfg)
    base = set(problems)
    net = None
    if args.network is not None:
        try:
            net = _resolve_network(args.network)
        except (FileNotFoundError, OSError) as exc:
            return _fail(EXIT_IO, str(exc))
        except (SchemaError, DeconvSimError) as exc:
            return _fail(EXIT_INVALID, str(exc))
        for layer in net.layers:
            problems += [f"{layer.name}: {p}"
                         for p in validate_config(cfg, layer) if p not in base]
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return EXIT_INVALID
    print(f"PEs: {pe_count(cfg)}, adders: {adder_count(cfg)}")
    if net is not None:
        print(f"network {net.name}: {len(net.layers)} layers, ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="deconvsim",
        description="cycle model for a uniform transposed-convolution accelerator",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--network", required=True,
                       help="network JSON path or builtin:<name>")
        p.add_argument("--config", default=None,
                       help="accelerator config name or JSON path "
                            "(default follows the network dimensionality)")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--bandwidth-gbps", type=float, default=None,
                       dest="bandwidth_gbps")
        p.add_argument("--derating", type=float, default=None)
        p.add_argument("--frac-bits", type=int, default=None, dest="frac_bits")
        p.add_argument("--overlap-add-cycles", type=int, default=0,
                       dest="overlap_add_cycles")

    sim = sub.add_parser("simulate", help="simulate one network")
    add_common(sim)
    sim.add_argument("--check-oracle", action="store_true", dest="check_oracle")
    sim.add_argument("--trace", default=None,
                     help="write a per-PE event trace to this path (small layers)")
    sim.add_argument("--trace-limit", type=int, default=200_000,
                     dest="trace_limit")
    sim.add_argument("--dump-schedule", default=None, dest="dump_schedule",
                     help="write the tile schedule as JSON to this path")
    sim.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sparsity", help="per-layer sparsity series for a network")
    sp.add_argument("--network", required=True,
                    help="network JSON path or builtin:<name>")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_sparsity)

    sw = sub.add_parser("sweep", help="sweep one parameter")
    add_common(sw)
    sw.add_argument("--param", required=True, choices=sorted(_SWEEP_PARAMS))
    sw.add_argument("--values", required=True,
                    help="comma separated parameter values")
    sw.set_defaults(func=cmd_sweep)

    va = sub.add_parser("validate", help="validate a config, print resources")
    va.add_argument("--config", required=True)
    va.add_argument("--network", default=None)
    va.set_defaults(func=cmd_validate)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        if code in (None, 0):
            return EXIT_OK
        return EXIT_INVALID
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
