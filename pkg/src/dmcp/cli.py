"""Command-line front end.

Every subcommand runs one operation.  Parameters come from built-in
defaults, then an optional JSON ``--config`` file, then explicit flags.
A JSON header line (tool version, resolved config, seed) is printed to
stdout before any data; with ``--output`` the data goes to that file,
written atomically.

Exit status: 0 success, 2 invalid configuration, 3 numerical failure,
4 I/O failure.
"""
import argparse
import json
import math
import sys

from . import __version__, _accel
from . import io as dio
from .design import DesignSpec, solve
from .errors import InvalidArgumentError, NumericError
from .robustness import (ScanRange, monte_carlo_infidelity, resonant_sequence, scan_2d,
                         scan_area_error)
from .waveguide import (REFERENCE_WIDTH_STEPS, DispersionModel, device_error_map,
                        device_from_sequence, simulate_device)

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

# key -> (type, default)
PARAMS = {
    "order": (str, "first"),
    "n": (int, 3),
    "coupling": (float, 1.0),
    "lo": (float, -0.5),
    "hi": (float, 0.5),
    "points": (int, 1001),
    "u_lo": (float, -1.0),
    "u_hi": (float, 1.0),
    "u_points": (int, 201),
    "v_lo": (float, -1.0),
    "v_hi": (float, 1.0),
    "v_points": (int, 201),
    "detuning_error": (str, "relative"),
    "sigma": (float, 0.10),
    "trials": (int, 100),
    "seed": (int, 0),
    "a": (float, 1.0),
    "b": (float, 1.0),
    "gap": (float, 0.0),
    "w1": (float, 1.0),
    "dbeta_dw": (float, None),
    "width_step": (float, None),
    "steps": (int, 100),
    "length_scale": (float, 1.0),
    "mismatch_scale": (float, 1.0),
    "output": (str, None),
    "format": (str, None),
    "threads": (int, None),
}

_COMMON = ("order", "n", "output", "format", "threads")
_GRID2 = ("u_lo", "u_hi", "u_points", "v_lo", "v_hi", "v_points")
_WG = ("coupling", "a", "b", "gap", "w1", "dbeta_dw", "width_step")
COMMANDS = {
    "design": _COMMON + ("coupling",),
    "scan-area": _COMMON + ("lo", "hi", "points"),
    "scan-2d": _COMMON + _GRID2 + ("detuning_error",),
    "monte-carlo": _COMMON + ("lo", "hi", "points", "sigma", "trials", "seed"),
    "waveguide-map": _COMMON + _WG,
    "waveguide-sim": _COMMON + _WG + ("steps", "length_scale", "mismatch_scale"),
    "waveguide-scan": _COMMON + _WG + _GRID2,
}
DEFAULT_FORMAT = {"design": "json", "waveguide-map": "json"}
# fabrication-error maps need a length error above -1
_WG_GRID = {"u_lo": -0.2, "u_hi": 0.2, "u_points": 81, "v_lo": -0.2, "v_hi": 0.2, "v_points": 81}
COMMAND_DEFAULTS = {"waveguide-scan": _WG_GRID}

HELP = {
    "order": "first, second, or resonant (single reference pulse)",
    "n": "number of pulses",
    "u_lo": "first-axis error range (detuning / mismatch)",
    "v_lo": "second-axis error range (coupling / length)",
    "detuning_error": "relative or absolute (offset in units of the coupling)",
    "width_step": "relative width change of the first segment, fixes the dispersion slope",
    "dbeta_dw": "propagation-constant slope vs width (overrides --width-step)",
    "config": "JSON file with the same keys as the flags",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmcp", description="Detuning-modulated composite pulses.")
    parser.add_argument("--version", action="version", version=f"dmcp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, keys in COMMANDS.items():
        p = sub.add_parser(cmd, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help=HELP["config"])
        for key in keys:
            typ, _ = PARAMS[key]
            kwargs = {"type": typ, "help": HELP.get(key)}
            if key == "order":
                kwargs["choices"] = ("first", "second", "resonant")
            elif key == "format":
                kwargs["choices"] = ("csv", "json")
            elif key == "detuning_error":
                kwargs["choices"] = ("relative", "absolute")
            p.add_argument("--" + key.replace("_", "-"), dest=key, **kwargs)
    return parser


def _coerce(key, value):
    typ, _ = PARAMS[key]
    if value is None:
        return None
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise InvalidArgumentError(f"config key {key!r} must be an integer")
        return value
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidArgumentError(f"config key {key!r} must be a number")
        return float(value)
    if not isinstance(value, str):
        raise InvalidArgumentError(f"config key {key!r} must be a string")
    return value


def resolve_config(command: str, file_config: dict, flags: dict) -> dict:
    """Defaults < config file < flags, restricted to the command's keys."""
    keys = COMMANDS[command]
    merged = {k: PARAMS[k][1] for k in keys}
    merged.update(COMMAND_DEFAULTS.get(command, {}))
    for k, v in file_config.items():
        key = k.replace("-", "_")
        if key == "command":
            if v != command:
                raise InvalidArgumentError(f"config is for command {v!r}, not {command!r}")
            continue
        if key not in keys:
            raise InvalidArgumentError(f"unknown config key {k!r} for {command}")
        merged[key] = _coerce(key, v)
    merged.update(flags)
    if merged["format"] is None:
        merged["format"] = DEFAULT_FORMAT.get(command, "csv")
    for key in ("order", "format", "detuning_error"):
        if key in merged:
            choices = {"order": ("first", "second", "resonant"), "format": ("csv", "json"),
                       "detuning_error": ("relative", "absolute")}[key]
            if merged[key] not in choices:
                raise InvalidArgumentError(f"{key} must be one of {choices}, got {merged[key]!r}")
    for key, value in merged.items():
        if isinstance(value, float) and not math.isfinite(value):
            raise InvalidArgumentError(f"{key} must be finite")
    return merged


class _Job:
    """Validated inputs of one invocation; constructing it performs all checks."""

    def __init__(self, command, cfg):
        self.command = command
        self.cfg = cfg
        order = cfg["order"]
        if order == "resonant":
            self.spec = None
        else:
            self.spec = DesignSpec(cfg["n"], order, cfg.get("coupling", 1.0))
        if command in ("scan-area", "monte-carlo"):
            self.range = ScanRange(cfg["lo"], cfg["hi"], cfg["points"])
            if self.range.lo <= -1:
                raise InvalidArgumentError("--lo must be > -1")
        if command == "monte-carlo":
            if cfg["sigma"] < 0:
                raise InvalidArgumentError("--sigma must be >= 0")
            if cfg["trials"] < 1:
                raise InvalidArgumentError("--trials must be >= 1")
            if not 0 <= cfg["seed"] < 2 ** 64:
                raise InvalidArgumentError("--seed must be an unsigned 64-bit integer")
        if command in ("scan-2d", "waveguide-scan"):
            self.range1 = ScanRange(cfg["u_lo"], cfg["u_hi"], cfg["u_points"])
            self.range2 = ScanRange(cfg["v_lo"], cfg["v_hi"], cfg["v_points"])
            if command == "scan-2d" and self.range2.lo < -1:
                raise InvalidArgumentError("coupling error must be >= -1")
            if command == "waveguide-scan" and self.range2.lo <= -1:
                raise InvalidArgumentError("length error must be > -1")
        if command.startswith("waveguide"):
            for key in ("a", "b", "w1"):
                if cfg[key] <= 0:
                    raise InvalidArgumentError(f"--{key} must be > 0")
            if cfg["gap"] < 0:
                raise InvalidArgumentError("--gap must be >= 0")
            if cfg["dbeta_dw"] is None and cfg["width_step"] is None and order != "resonant":
                preset = REFERENCE_WIDTH_STEPS.get((order, cfg["n"]))
                if preset is None:
                    raise InvalidArgumentError(
                        f"no reference width step for {order}-order N={cfg['n']}; "
                        "pass --width-step or --dbeta-dw")
                cfg["width_step"] = preset
            if command == "waveguide-sim":
                if cfg["steps"] < 2:
                    raise InvalidArgumentError("--steps must be >= 2")
                if cfg["length_scale"] <= 0:
                    raise InvalidArgumentError("--length-scale must be > 0")
        if cfg.get("threads") is not None and cfg["threads"] < 1:
            raise InvalidArgumentError("--threads must be >= 1")

    def sequence(self):
        if self.spec is None:
            return resonant_sequence(self.cfg.get("coupling", 1.0)), None
        result = solve(self.spec)
        return result.sequence, result

    def dispersion(self, seq):
        cfg = self.cfg
        if cfg["dbeta_dw"] is not None:
            return DispersionModel(cfg["a"], cfg["b"], cfg["dbeta_dw"], cfg["w1"])
        omega = cfg["a"] * math.exp(-cfg["b"] * cfg["gap"])
        first_ratio = float(seq.ratios[0])
        if first_ratio == 0.0 or cfg["width_step"] in (None, 0.0):
            # nothing to calibrate against; the slope is irrelevant for zero mismatch
            return DispersionModel(cfg["a"], cfg["b"], -1.0, cfg["w1"])
        return DispersionModel.calibrated(cfg["a"], cfg["b"], omega * first_ratio,
                                          1.0 + cfg["width_step"], cfg["w1"])


def _execute(job: _Job):
    """Return ``(payload_for_json, csv_text)``."""
    cmd, cfg = job.command, job.cfg
    seq, result = job.sequence()

    if cmd == "design":
        data = dio.design_to_dict(result) if result else {"order": "resonant", "ratios": [0.0]}
        csv_text = dio._csv(["index", "rabi", "detuning", "nominal_area", "duration"],
                            [(i, p.rabi, p.detuning, p.nominal_area, p.duration)
                             for i, p in enumerate(seq)])
        return data, csv_text
    if cmd == "scan-area":
        grid = scan_area_error(seq, job.range)
        return dio.grid_to_dict(grid), dio.grid_to_csv(grid)
    if cmd == "scan-2d":
        grid = scan_2d(seq, job.range1, job.range2, cfg["detuning_error"])
        return dio.grid_to_dict(grid), dio.grid_to_csv(grid)
    if cmd == "monte-carlo":
        curve = monte_carlo_infidelity(seq, job.range, cfg["sigma"], cfg["trials"], cfg["seed"])
        return dio.curve_to_dict(curve), dio.curve_to_csv(curve)

    m = job.dispersion(seq)
    dev = device_from_sequence(seq, m, cfg["gap"])
    if cmd == "waveguide-map":
        data = dio.device_to_dict(dev, m)
        if result is not None:
            data["design"] = dio.design_to_dict(result)
        csv_text = dio._csv(["segment", "width_ratio", "length"],
                            [(i, r, l) for i, (r, l) in enumerate(dev.segments)])
        return data, csv_text
    if cmd == "waveguide-sim":
        trace = simulate_device(dev, m, cfg["steps"], cfg["length_scale"], cfg["mismatch_scale"])
        data = {"device": dio.device_to_dict(dev, m), "fidelity": float(trace[-1, 2]),
                "columns": ["z", "I1", "I2"], "trace": trace.tolist()}
        return data, dio.trace_to_csv(trace)
    grid = device_error_map(dev, m, job.range1, job.range2)
    return dio.grid_to_dict(grid), dio.grid_to_csv(grid)


def run(command: str, config: dict, stdout=None, stderr=None) -> int:
    """Run one resolved job; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        job = _Job(command, dict(config))
    except InvalidArgumentError as exc:
        print(f"dmcp: invalid configuration: {exc}", file=stderr)
        return EXIT_INVALID
    cfg = job.cfg
    if cfg.get("threads") is not None and _accel.USE_NUMBA:
        import numba

        numba.set_num_threads(min(cfg["threads"], numba.config.NUMBA_NUM_THREADS))

    header = {"tool": "dmcp", "version": __version__, "command": command, "config": cfg,
              "seed": cfg.get("seed"), "backend": _accel.backend()}
    print(json.dumps(header, sort_keys=True), file=stdout)
    try:
        data, csv_text = _execute(job)
    except NumericError as exc:
        print(f"dmcp: numerical failure: {exc} {exc.diagnostics}", file=stderr)
        return EXIT_NUMERIC
    except InvalidArgumentError as exc:
        print(f"dmcp: invalid configuration: {exc}", file=stderr)
        return EXIT_INVALID

    text = dio.dumps({"header": header, "result": data}) if cfg["format"] == "json" else csv_text
    if cfg["output"] is None:
        stdout.write(text)
        return EXIT_OK
    try:
        dio.write_atomic(cfg["output"], text)
    except OSError as exc:
        print(f"dmcp: cannot write {cfg['output']}: {exc}", file=stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    file_config = {}
    if config_path is not None:
        try:
            with open(config_path) as fh:
                file_config = json.load(fh)
        except OSError as exc:
            print(f"dmcp: cannot read config {config_path}: {exc}", file=sys.stderr)
            return EXIT_IO
        except json.JSONDecodeError as exc:
            print(f"dmcp: invalid config {config_path}: {exc}", file=sys.stderr)
            return EXIT_INVALID
        if not isinstance(file_config, dict):
            print("dmcp: config file must hold a JSON object", file=sys.stderr)
            return EXIT_INVALID
    try:
        cfg = resolve_config(command, file_config, args)
    except InvalidArgumentError as exc:
        print(f"dmcp: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(command, cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
