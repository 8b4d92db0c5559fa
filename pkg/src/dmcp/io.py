"""Serialization of results to CSV and JSON, with atomic file writes."""
import csv
import io
import json
import os
import tempfile

import numpy as np

from .design import DesignResult
from .robustness import FidelityGrid, MonteCarloCurve, ScanRange
from .waveguide import DispersionModel, WaveguideDevice


def fmt(x) -> str:
    """Float with 17 significant digits (round-trips exactly)."""
    return format(float(x), ".17g")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def grid_to_csv(grid: FidelityGrid) -> str:
    if grid.ndim == 1:
        eps = grid.axis1.values
        return _csv(["epsilon", "fidelity", "infidelity"], zip(eps, grid.values, 1.0 - grid.values))
    u, v = grid.axis1.values, grid.axis2.values
    rows = ((u[i], v[j], grid.values[i, j]) for i in range(u.size) for j in range(v.size))
    return _csv(["u", "v", "fidelity"], rows)


def curve_to_csv(curve: MonteCarloCurve) -> str:
    eps = curve.axis.values
    return _csv(["epsilon", "fidelity", "infidelity"],
                zip(eps, 1.0 - curve.mean_infidelity, curve.mean_infidelity))


def trace_to_csv(trace, columns=("z", "I1", "I2")) -> str:
    return _csv(list(columns), np.asarray(trace))


def range_to_dict(r: ScanRange) -> dict:
    return {"lo": r.lo, "hi": r.hi, "n_points": int(r.n_points), "scale": r.scale}


def grid_to_dict(grid: FidelityGrid) -> dict:
    d = {
        "axis1": {"label": grid.label1, **range_to_dict(grid.axis1)},
        "values": grid.values.tolist(),
        "meta": grid.meta,
    }
    if grid.axis2 is not None:
        d["axis2"] = {"label": grid.label2, **range_to_dict(grid.axis2)}
    return d


def grid_from_dict(d: dict) -> FidelityGrid:
    def axis(a):
        return ScanRange(a["lo"], a["hi"], a["n_points"], a.get("scale", "linear")), a["label"]

    r1, l1 = axis(d["axis1"])
    r2, l2 = axis(d["axis2"]) if "axis2" in d else (None, None)
    return FidelityGrid(r1, l1, np.array(d["values"], dtype=float), r2, l2, dict(d.get("meta", {})))


def curve_to_dict(curve: MonteCarloCurve) -> dict:
    return {
        "axis": {"label": "area_error", **range_to_dict(curve.axis)},
        "mean_infidelity": curve.mean_infidelity.tolist(),
        "sigma": curve.sigma,
        "n_trials": curve.n_trials,
        "seed": curve.seed,
    }


def design_to_dict(result: DesignResult) -> dict:
    seq = result.sequence
    return {
        "order": result.order.value,
        "n_pulses": result.n_pulses,
        "delta_over_omega": result.delta_over_omega,
        "sign": "+/-",
        "table_ref": result.table_ref,
        "sequence": [{"rabi": p.rabi, "detuning": p.detuning, "nominal_area": p.nominal_area,
                      "duration": p.duration} for p in seq],
        "ratios": seq.ratios.tolist(),
        "candidates": result.candidates,
        "selection_consistent": result.selection_consistent,
        "cpt_residual": result.cpt_residual,
        "derivatives": {str(k): v for k, v in result.diagnostics.items()},
    }


def device_to_dict(dev: WaveguideDevice, m: DispersionModel) -> dict:
    return {
        "label": dev.label,
        "gap": dev.gap,
        "w1": m.w1,
        "calibration": {"a": m.a, "b": m.b, "dbeta_dw": m.dbeta_dw},
        "segments": [{"width_ratio": r, "length": l} for r, l in dev.segments],
    }


def device_from_dict(d: dict):
    cal = d["calibration"]
    m = DispersionModel(cal["a"], cal["b"], cal["dbeta_dw"], d["w1"])
    dev = WaveguideDevice(d["gap"], tuple((s["width_ratio"], s["length"]) for s in d["segments"]),
                          d.get("label", ""))
    return dev, m


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file in the same directory and a rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
