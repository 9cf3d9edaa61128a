"""Command-line front end: config parsing, dispatch, sweeps and file output.

Commands: ramsey, michelson, ghz, design, bounds, selftest. Parameters
come from an optional flat `key = value` config file plus `--key value`
flags (flags win); every key must be recognized for the chosen command.
Units are fixed per key and listed in the schema help strings: seconds,
rad/s, eV, kg, m, m^3/s, m^6/s. Numeric values accept scientific
notation and never carry unit suffixes.

When --out BASE is given, BASE.csv (per-point rows) and BASE.json
(summary) are always written, plus BASE.meta.json with run metadata.
The data files are deterministic: no timestamps, floats with 17
significant digits in CSV, canonical sorted JSON, and infinities
serialized as the string "unbounded".
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .constants import OMEGA_PER_EV, PLANCK_TIME, YEAR_SECONDS
from .interferometry import (
    CoherentField,
    DecoherencePartition,
    FockField,
    GhzConfig,
    MichelsonConfig,
    RamseyConfig,
    default_phases,
    run_ghz,
    run_michelson,
    run_ramsey_quantized,
    run_ramsey_semiclassical,
)
from .sensitivity import (
    DesignResult,
    SpeciesParams,
    cosmic_bound,
    distance_reach,
    ghz_design,
    ghz_design_grid,
    matterwave_bound,
    single_atom_reach,
    validate_species,
)

__all__ = ["ConfigError", "RunConfig", "SpeciesEntry", "SPECIES", "parse_config", "run", "sweep", "main"]


class ConfigError(ValueError):
    """Configuration problem: unknown key, malformed value or missing input."""


@dataclass(frozen=True)
class ParamSpec:
    ptype: str                      # float | int | str | bool
    default: object = None          # None means "absent unless provided"
    choices: tuple[str, ...] = ()
    help: str = ""


@dataclass(frozen=True)
class RunConfig:
    command: str
    parameters: dict
    output_path: str | None
    output_format: str


@dataclass(frozen=True)
class SpeciesEntry:
    name: str
    params: SpeciesParams
    provenance: str


SPECIES: dict[str, SpeciesEntry] = {
    "Sr": SpeciesEntry(
        name="Sr",
        params=SpeciesParams(
            gamma_sp=1e-3, delta_e=1.0, mass=1.4597e-25, kappa=1e-17, k3=1e-41
        ),
        provenance=(
            "order-of-magnitude working values for the strontium clock transition; "
            "supply measured numbers via explicit keys for quantitative work"
        ),
    ),
}

_PARTITIONS = ("global", "local", "atom", "field", "none")

SCHEMAS: dict[str, dict[str, ParamSpec]] = {
    "ramsey": {
        "mode": ParamSpec("str", "semiclassical", ("semiclassical", "quantized")),
        "field": ParamSpec("str", "fock", ("fock", "coherent")),
        "n": ParamSpec("int", 12, help="Fock photon number"),
        "alpha": ParamSpec("float", 5.0, help="coherent amplitude"),
        "n_max": ParamSpec("int", help="field cutoff level; omit for automatic"),
        "coupling": ParamSpec("float", 1.0, help="atom-field coupling, rad/s"),
        "pulse_area": ParamSpec("float", math.pi / 2.0, help="rotation angle per pulse, rad"),
        "detuning": ParamSpec("float", 0.0, help="atomic minus field frequency, rad/s"),
        "omega0": ParamSpec("float", OMEGA_PER_EV, help="atomic gap, rad/s"),
        "wait": ParamSpec("float", 1.0, help="free-evolution time, s"),
        "sigma": ParamSpec("float", 0.0, help="dephasing strength, s"),
        "partition": ParamSpec("str", "global", _PARTITIONS),
        "gamma_sp": ParamSpec("float", 0.0, help="spontaneous rate, 1/s"),
        "phase_points": ParamSpec("int", 32, help="fringe scan resolution"),
    },
    "michelson": {
        "alpha": ParamSpec("float", 2.0, help="input coherent amplitude"),
        "n_max": ParamSpec("int", help="per-mode cutoff level; omit for automatic"),
        "arm_time": ParamSpec("float", 1.0, help="per-arm propagation time, s"),
        "omega": ParamSpec("float", OMEGA_PER_EV, help="mode frequency, rad/s"),
        "sigma": ParamSpec("float", 0.0, help="dephasing strength, s"),
        "partition": ParamSpec("str", "global", ("global", "local", "none")),
    },
    "ghz": {
        "n_atoms": ParamSpec("int", 10),
        "omega0": ParamSpec("float", OMEGA_PER_EV, help="single-atom gap, rad/s"),
        "sigma": ParamSpec("float", 0.0, help="dephasing strength, s"),
        "gamma_sp": ParamSpec("float", 0.0, help="per-atom loss rate, 1/s"),
        "three_body_rate": ParamSpec("float", 0.0, help="k3*N^3/V^2 event rate, 1/s"),
        "wait": ParamSpec("float", 1.0, help="holding time, s"),
    },
    "design": {
        "species": ParamSpec("str", help="built-in species name (Sr)"),
        "gamma_sp": ParamSpec("float", help="spontaneous rate, 1/s"),
        "kappa": ParamSpec("float", help="collisional coefficient, m^3/s"),
        "k3": ParamSpec("float", help="three-body coefficient, m^6/s"),
        "delta_e": ParamSpec("float", 1.0, help="level splitting, eV"),
        "mass": ParamSpec("float", 0.0, help="atomic mass, kg (optional)"),
        "grid_decades": ParamSpec("float", 6.0, help="grid span for the oracle"),
        "grid_points_per_decade": ParamSpec("int", 50),
    },
    "bounds": {
        "single_atom": ParamSpec("bool", False, help="compute the single-atom reach"),
        "matterwave": ParamSpec("bool", False, help="compute the matter-wave bound"),
        "distance": ParamSpec("bool", False, help="compute the distance reach"),
        "cosmic": ParamSpec("bool", False, help="compute the cosmic-age bound"),
        "sigma": ParamSpec("float", PLANCK_TIME, help="dephasing strength, s"),
        "age_years": ParamSpec("float", 1e10, help="age for the cosmic bound, yr"),
        "mass": ParamSpec("float", 3.8175409e-26, help="particle mass, kg (Na default)"),
        "velocity": ParamSpec("float", 3000.0, help="beam velocity, m/s"),
        "path_separation": ParamSpec("float", 20e-6, help="probed locality scale, m"),
        "flight_path": ParamSpec("float", 1.0, help="flight distance through the instrument, m"),
        "gamma_detectable": ParamSpec("float", 1e-3, help="resolvable rate, 1/s"),
        "delta_e": ParamSpec("float", 1.0, help="level splitting, eV"),
        "gamma": ParamSpec("float", help="dephasing rate for the distance reach, 1/s"),
        "gamma_sp": ParamSpec("float", 1e-3, help="spontaneous rate, 1/s"),
        "coherence_time": ParamSpec("float", 1.0, help="reference-laser coherence time, s"),
    },
    "selftest": {
        "criteria": ParamSpec("str", help="comma-separated criterion ids; omit for all"),
    },
}

_RESERVED = ("command", "out", "format")


@dataclass(frozen=True)
class ExperimentOutput:
    points: list
    summary: dict
    headline: dict
    lines: tuple[str, ...] = ()
    failed: bool = False


def _parse_value(key: str, spec: ParamSpec, raw: str):
    raw = raw.strip()
    if spec.ptype == "float":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"malformed number for key {key!r}: {raw!r}") from None
    if spec.ptype == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"malformed integer for key {key!r}: {raw!r}") from None
    if spec.ptype == "bool":
        low = raw.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ConfigError(f"malformed boolean for key {key!r}: {raw!r}")
    if spec.choices and raw not in spec.choices:
        raise ConfigError(f"key {key!r} must be one of {list(spec.choices)}, got {raw!r}")
    return raw


def _file_pairs(file_contents: str) -> list[tuple[str, str]]:
    pairs = []
    for lineno, raw in enumerate(file_contents.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        pairs.append((key.strip().replace("-", "_"), value.strip()))
    return pairs


def parse_config(file_contents: str, overrides: Sequence[tuple[str, str]]) -> RunConfig:
    """Merge file entries and overrides (overrides win) into a typed RunConfig."""
    pairs = _file_pairs(file_contents) + [(k.replace("-", "_"), v) for k, v in overrides]
    merged: dict[str, str] = {}
    for key, value in pairs:
        merged[key] = value

    command = merged.pop("command", None)
    if command is None:
        raise ConfigError("missing required key: command")
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}; choose from {sorted(SCHEMAS)}")
    out = merged.pop("out", None)
    fmt = merged.pop("format", "json")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")

    schema = SCHEMAS[command]
    params: dict = {}
    for key, value in merged.items():
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} for command {command!r}")
        params[key] = _parse_value(key, schema[key], value)
    for key, spec in schema.items():
        if key not in params and spec.default is not None:
            params[key] = spec.default
    return RunConfig(command, params, out, fmt)


def _fmt_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "unbounded"
        return f"{value:.17g}"
    return str(value)


def _csv_text(rows: list) -> str:
    if not rows:
        return "\r\n"
    columns = list(rows[0].keys())
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt_cell(row[col]) for col in columns))
    return "\r\n".join(lines) + "\r\n"


def _sanitize(obj):
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return "unbounded"
    return obj


def _json_text(obj) -> str:
    return json.dumps(_sanitize(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _partition(sigma: float, name: str, labels: tuple[str, str]) -> DecoherencePartition:
    if name == "none":
        return DecoherencePartition(sigma, ())
    if name == "global":
        return DecoherencePartition.global_over(sigma, *labels)
    if name == "local":
        return DecoherencePartition.local_over(sigma, *labels)
    return DecoherencePartition(sigma, (frozenset({name}),))


def _handle_ramsey(params: dict) -> ExperimentOutput:
    if params["field"] == "fock":
        field_state = FockField(params["n"])
    else:
        field_state = CoherentField(params["alpha"])
    mode = params["mode"]
    if mode == "semiclassical":
        # the classical field is not part of the quantum state, so the
        # atom is the whole system and any partition collapses onto it
        name = "none" if params["partition"] == "none" else "atom"
        partition = _partition(params["sigma"], name, ("atom", "field"))
    else:
        partition = _partition(params["sigma"], params["partition"], ("atom", "field"))
    cfg = RamseyConfig(
        omega0=params["omega0"],
        wait=params["wait"],
        decoherence=partition,
        field=field_state,
        n_max=params.get("n_max"),
        coupling=params["coupling"],
        pulse_area=params["pulse_area"],
        detuning=params["detuning"],
        phases=default_phases(params["phase_points"]),
        spontaneous_rate=params["gamma_sp"],
    )
    runner = run_ramsey_semiclassical if mode == "semiclassical" else run_ramsey_quantized
    result = runner(cfg)
    points = [{"phi": phi, "p_g": p} for phi, p in result.points]
    headline = {"visibility": result.visibility}
    summary = {"command": "ramsey", "parameters": dict(sorted(params.items())), **headline}
    return ExperimentOutput(points, summary, headline)


def _handle_michelson(params: dict) -> ExperimentOutput:
    cfg = MichelsonConfig(
        alpha=params["alpha"],
        arm_time=params["arm_time"],
        mode_frequency=params["omega"],
        decoherence=_partition(params["sigma"], params["partition"], ("arm_c", "arm_d")),
        n_max=params.get("n_max"),
    )
    result = run_michelson(cfg)
    headline = {
        "mean_photons_out_a": result.mean_photons_out_a,
        "mean_photons_out_b": result.mean_photons_out_b,
    }
    points = [
        {"output_mode": "a", "mean_photons": result.mean_photons_out_a},
        {"output_mode": "b", "mean_photons": result.mean_photons_out_b},
    ]
    summary = {"command": "michelson", "parameters": dict(sorted(params.items())), **headline}
    return ExperimentOutput(points, summary, headline)


def _handle_ghz(params: dict) -> ExperimentOutput:
    cfg = GhzConfig(
        n_atoms=params["n_atoms"],
        omega0=params["omega0"],
        sigma=params["sigma"],
        wait=params["wait"],
        gamma_sp=params["gamma_sp"],
        three_body_rate=params["three_body_rate"],
    )
    result = run_ghz(cfg)
    headline = {
        "coherence": result.coherence,
        "survival": result.survival,
        "effective_rate": result.effective_rate,
    }
    points = [{"wait": cfg.wait, **headline}]
    summary = {"command": "ghz", "parameters": dict(sorted(params.items())), **headline}
    return ExperimentOutput(points, summary, headline)


def _design_dict(r: DesignResult) -> dict:
    return {
        "n_opt": r.n_opt,
        "v_opt": r.v_opt,
        "gamma_min": r.gamma_min,
        "sigma_min": r.sigma_min,
        "l_max": r.l_max,
        "creation_time": r.creation_time,
        "creation_margin": r.creation_margin,
        "creation_constraint_ok": r.creation_constraint_ok,
        "rates": {
            "gravitational": r.rates.gravitational,
            "spontaneous": r.rates.spontaneous,
            "three_body": r.rates.three_body,
        },
    }


def _species_from_params(params: dict) -> SpeciesParams:
    name = params.get("species")
    if name:
        matches = [e for key, e in SPECIES.items() if key.lower() == name.lower()]
        if not matches:
            raise ConfigError(f"unknown species {name!r}; built-in: {sorted(SPECIES)}")
        return matches[0].params
    missing = [k for k in ("gamma_sp", "kappa", "k3") if params.get(k) is None]
    if missing:
        raise ConfigError(f"missing required key(s) for design: {', '.join(missing)}")
    p = SpeciesParams(
        gamma_sp=params["gamma_sp"],
        delta_e=params["delta_e"],
        mass=params["mass"],
        kappa=params["kappa"],
        k3=params["k3"],
    )
    validate_species(p)
    return p


def _handle_design(params: dict) -> ExperimentOutput:
    from .sensitivity import default_design_grids

    species = _species_from_params(params)
    closed = ghz_design(species)
    n_grid, v_grid = default_design_grids(
        species, decades=params["grid_decades"], points_per_decade=params["grid_points_per_decade"]
    )
    grid = ghz_design_grid(species, n_grid, v_grid)
    rel = {
        "gamma_min": abs(closed.gamma_min / grid.gamma_min - 1.0),
        "n_opt": abs(closed.n_opt / grid.n_opt - 1.0),
        "v_opt": abs(closed.v_opt / grid.v_opt - 1.0),
    }
    headline = {"gamma_min_closed": closed.gamma_min, "gamma_min_grid": grid.gamma_min}
    points = [
        {"method": "closed_form", **{k: v for k, v in _design_dict(closed).items() if k != "rates"}},
        {"method": "grid", **{k: v for k, v in _design_dict(grid).items() if k != "rates"}},
    ]
    summary = {
        "command": "design",
        "parameters": dict(sorted(params.items())),
        "closed_form": _design_dict(closed),
        "grid": _design_dict(grid),
        "relative_difference": rel,
    }
    return ExperimentOutput(points, summary, headline)


def _handle_bounds(params: dict) -> ExperimentOutput:
    selected = [k for k in ("single_atom", "matterwave", "distance", "cosmic") if params.get(k)]
    if not selected:
        raise ConfigError(
            "no bound selected; pass at least one of --single-atom --matterwave --distance --cosmic"
        )
    summary: dict = {"command": "bounds", "parameters": dict(sorted(params.items()))}
    points = []
    headline: dict = {}

    def emit(bound: str, values: dict) -> None:
        summary[bound] = values
        for quantity, value in values.items():
            points.append({"bound": bound, "quantity": quantity, "value": value})
            headline[f"{bound}_{quantity}"] = value

    if "single_atom" in selected:
        sigma = single_atom_reach(params["gamma_detectable"], params["delta_e"])
        emit("single_atom", {"sigma_reach": sigma})
    if "matterwave" in selected:
        mw = matterwave_bound(
            params["mass"], params["velocity"], params["path_separation"],
            params["sigma"], params["flight_path"],
        )
        emit("matterwave", {
            "rate": mw.rate,
            "decoherence_length": mw.decoherence_length,
            "excluded": mw.excluded,
        })
    if "distance" in selected:
        if params.get("gamma") is None:
            raise ConfigError("missing required key for --distance: gamma")
        reach = distance_reach(params["gamma"], params["gamma_sp"], params["coherence_time"])
        emit("distance", {
            "l_decoherence": reach.l_decoherence,
            "l_laser": reach.l_laser,
            "l_max": reach.l_max,
        })
    if "cosmic" in selected:
        de = cosmic_bound(params["sigma"], params["age_years"] * YEAR_SECONDS)
        emit("cosmic", {"delta_e_ev": de})
    return ExperimentOutput(points, summary, headline)


def _handle_selftest(params: dict) -> ExperimentOutput:
    from . import selftest

    ids = None
    if params.get("criteria"):
        try:
            ids = {int(part) for part in params["criteria"].split(",") if part.strip()}
        except ValueError:
            raise ConfigError(f"malformed criteria list: {params['criteria']!r}") from None
    results = selftest.run_all(ids)
    lines = tuple(
        f"{'PASS' if r.passed else 'FAIL'} {r.cid:>2}  {r.description}  "
        f"[{r.details}] ({r.elapsed:.2f}s)"
        for r in results
    )
    points = [
        {"criterion": r.cid, "description": r.description, "passed": r.passed, "details": r.details}
        for r in results
    ]
    all_passed = all(r.passed for r in results) and bool(results)
    summary = {
        "command": "selftest",
        "results": points,
        "all_passed": all_passed,
    }
    headline = {"all_passed": all_passed}
    return ExperimentOutput(points, summary, headline, lines=lines, failed=not all_passed)


_HANDLERS: dict[str, Callable[[dict], ExperimentOutput]] = {
    "ramsey": _handle_ramsey,
    "michelson": _handle_michelson,
    "ghz": _handle_ghz,
    "design": _handle_design,
    "bounds": _handle_bounds,
    "selftest": _handle_selftest,
}


def _emit(cfg: RunConfig, output: ExperimentOutput, meta: dict) -> None:
    for line in output.lines:
        print(line)
    if cfg.output_path:
        base = Path(cfg.output_path)
        base.parent.mkdir(parents=True, exist_ok=True)
        Path(str(base) + ".csv").write_text(_csv_text(output.points), encoding="utf-8")
        Path(str(base) + ".json").write_text(_json_text(output.summary), encoding="utf-8")
        Path(str(base) + ".meta.json").write_text(
            json.dumps(meta, indent=2) + "\n", encoding="utf-8"
        )
    if cfg.output_format == "csv":
        print(_csv_text(output.points), end="")
    else:
        print(_json_text(output.summary), end="")


def run(cfg: RunConfig) -> int:
    """Execute one command and emit its outputs. Returns the exit status."""
    start = time.perf_counter()
    output = _HANDLERS[cfg.command](cfg.parameters)
    meta = {
        "command": cfg.command,
        "elapsed_seconds": time.perf_counter() - start,
    }
    _emit(cfg, output, meta)
    if output.failed:
        _print_error("SelftestFailure", "one or more criteria failed")
        return 1
    return 0


def sweep(cfg: RunConfig, sweep_key: str, raw_values: Sequence[str]) -> int:
    """Run the command once per value of sweep_key, one output row per value."""
    if not raw_values:
        raise ConfigError("sweep values must be non-empty")
    schema = SCHEMAS[cfg.command]
    key = sweep_key.replace("-", "_")
    if key not in schema:
        raise ConfigError(f"unknown sweep key {key!r} for command {cfg.command!r}")
    spec = schema[key]
    if spec.ptype not in ("float", "int"):
        raise ConfigError(f"sweep target {key!r} is not numeric")
    start = time.perf_counter()
    rows = []
    for raw in raw_values:
        value = _parse_value(key, spec, raw)
        params = dict(cfg.parameters)
        params[key] = value
        output = _HANDLERS[cfg.command](params)
        rows.append({key: value, **output.headline})
    summary = {
        "command": cfg.command,
        "sweep_key": key,
        "parameters": dict(sorted(cfg.parameters.items())),
        "rows": rows,
    }
    out = ExperimentOutput(rows, summary, {})
    meta = {
        "command": cfg.command,
        "sweep_key": key,
        "elapsed_seconds": time.perf_counter() - start,
    }
    _emit(cfg, out, meta)
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # machine-readable instead of usage text + exit
        raise ConfigError(message)


def _extra_pairs(tokens: list[str], command: str) -> list[tuple[str, str]]:
    """Turn leftover `--key [value]` tokens into override pairs."""
    schema = SCHEMAS.get(command, {})
    pairs = []
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if not token.startswith("--"):
            raise ConfigError(f"unexpected argument {token!r}")
        key = token[2:].replace("-", "_")
        spec = schema.get(key)
        has_value = i + 1 < len(tokens) and not tokens[i + 1].startswith("--")
        if spec is not None and spec.ptype == "bool" and not has_value:
            pairs.append((key, "true"))
            i += 1
        elif has_value:
            pairs.append((key, tokens[i + 1]))
            i += 2
        else:
            raise ConfigError(f"flag --{key} needs a value")
    return pairs


def _print_error(kind: str, message: str) -> None:
    print(json.dumps({"error": {"type": kind, "message": message}}), file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = _Parser(prog="edsim", description="energy-dephasing experiment toolkit")
    parser.add_argument("command", choices=sorted(SCHEMAS))
    parser.add_argument("--config", help="flat key = value file")
    parser.add_argument("--out", help="output base path (writes BASE.csv/.json/.meta.json)")
    parser.add_argument("--format", choices=("csv", "json"), help="stdout format")
    parser.add_argument("--sweep", help="parameter key to sweep")
    parser.add_argument("--sweep-values", help="comma-separated sweep values")
    try:
        ns, extras = parser.parse_known_args(argv)
        file_contents = ""
        if ns.config:
            file_contents = Path(ns.config).read_text(encoding="utf-8")
        overrides = [("command", ns.command)]
        overrides += _extra_pairs(extras, ns.command)
        if ns.out:
            overrides.append(("out", ns.out))
        if ns.format:
            overrides.append(("format", ns.format))
        cfg = parse_config(file_contents, overrides)
        if ns.sweep is not None or ns.sweep_values is not None:
            if not ns.sweep or ns.sweep_values is None:
                raise ConfigError("sweeps need both --sweep KEY and --sweep-values V1,V2,...")
            values = [v for v in ns.sweep_values.split(",") if v.strip()]
            return sweep(cfg, ns.sweep, values)
        return run(cfg)
    except ConfigError as exc:
        _print_error("ConfigError", str(exc))
        return 2
    except (ValueError, KeyError, OSError) as exc:
        _print_error(type(exc).__name__, str(exc))
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
