"""Scenario-driven command line tying the simulation modules together.

Each command reads an optional JSON configuration, merges it over the
built-in defaults (which follow the measured source: 60 ps lifetime,
5 ps pump, 76.3 MHz repetition rate, 35 ps detector jitter, the
measured efficiency budget), validates it strictly, and writes
deterministic CSV/JSON files into the output directory.  Identical
configuration and seed give byte-identical outputs; every output embeds
or sits next to the resolved configuration and its SHA-256 hash.

Commands
    entangle    post-selected two-qubit state, singlet overlap and rate
                estimate, optionally with simulated tomography and
                maximum-likelihood reconstruction.
    fig3        fidelity against multi-photon probability (g2) curves.
    fig4b       fidelity against excitation-pulse delay curve.
    fig5        entanglement-swapping rate comparison table.
    rates       forward rate budget (and back-propagation when a
                measured coincidence rate is supplied).
    timetag     synth | analyse | sweep on synthetic detection streams.

Exit codes: 0 success, 2 configuration error, 3 numerical error,
4 model-domain error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import photostat, swap, timetag, tomography, twoqubit, wavepacket
from .errors import ConfigError, ContractError, ModelDomainError, NumericalError

_DEFAULTS = {
    "seed": 20240801,
    "source": {
        "g2": 0.015,
        "indistinguishability": 0.981,
        "eta": 0.05,
        "rep_rate_hz": 76.3e6,
        "excitations_per_period": 1,
        "g2_grid_max": 0.10,
        "g2_grid_steps": 41,
    },
    "wavepacket": {
        "t1_ps": 60.0,
        "pulse_width_ps": 5.0,
        "fidelity_at_zero": 0.958,
        "delay_grid_max_ps": 200.0,
        "delay_grid_steps": 41,
    },
    "tomography": {
        "enabled": False,
        "pairs": 100000,
        "bootstrap": 0,
    },
    "timetag": {
        "mode": "hbt",
        "g2": 0.02,
        "t1_ps": 200.0,
        "pulse_width_ps": 5.0,
        "rep_rate_hz": 76.3e6,
        "pulses": 100000,
        "eta": 0.3,
        "jitter_fwhm_ps": 35.0,
        "indistinguishability": 0.968,
        "analysis": ["H", "H"],
        "bin_ps": 20,
        "span_periods": 8,
        "t_on_grid_ps": [-45.0, -20.0, 0.0, 20.0, 35.0],
        "t_off_margin_ps": 45.0,
    },
    "swap": {
        "rep_rate_hz": 76.3e6,
        "eta_det": 0.9,
        "pnr": True,
        "switch_eta": 0.97,
        "insertion_eta": 1.0,
        "qd_eta_s": 0.71,
        "qd_g2": 0.013,
        "qd_indistinguishability": 0.968,
        "spdc_eta_s": 0.8,
        "spdc_statistics": "thermal",
        "fidelity_floor": 0.97,
        "mux_sizes": [10, 30, 100],
        "loss_db_max": 30.0,
        "loss_db_step": 2.5,
    },
    "rates": {
        "rep_rate_hz": 76.3e6,
        "chain": photostat.EfficiencyChain.measured().to_dict(),
        "measured_coincidence_rate_hz": None,
    },
}

# Keys whose value may not match the default's type exactly.
_FREEFORM = {"rates.chain"}
_NULLABLE = {"rates.measured_coincidence_rate_hz"}
_LIST_KEYS = {"timetag.analysis", "timetag.t_on_grid_ps", "swap.mux_sizes"}


def _check_leaf(path: str, value, default):
    if path in _FREEFORM:
        if not isinstance(value, dict):
            raise ConfigError(f"{path} must be an object")
        return value
    if value is None:
        if path in _NULLABLE:
            return None
        raise ConfigError(f"{path} must not be null")
    if path in _LIST_KEYS:
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{path} must be a nonempty array")
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path} must be a boolean")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path} must be an integer")
        return value
    if isinstance(default, float) or path in _NULLABLE:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path} must be a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path} must be a string")
        return value
    raise ConfigError(f"{path} has an unsupported value")


def _merge(user: dict, defaults: dict, prefix: str = "") -> dict:
    if not isinstance(user, dict):
        raise ConfigError(f"{prefix or 'config'} must be an object")
    out = {}
    for key, default in defaults.items():
        path = f"{prefix}{key}"
        if key not in user:
            out[key] = default
        elif isinstance(default, dict) and path not in _FREEFORM:
            out[key] = _merge(user[key], default, prefix=f"{path}.")
        else:
            out[key] = _check_leaf(path, user[key], default)
    for key in user:
        if key not in defaults:
            raise ConfigError(f"unknown key {prefix}{key}")
    return out


def resolve_config(user: dict) -> dict:
    """Merge a user configuration over the defaults, rejecting unknown
    keys and type mismatches."""
    return _merge(user, _DEFAULTS)


def config_digest(resolved: dict) -> str:
    canon = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Output helpers.

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _write_json(path: Path, payload: dict, resolved: dict, digest: str):
    body = dict(payload)
    body["config"] = resolved
    body["config_sha256"] = digest
    with open(path, "w", newline="\n") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_table(out_dir: Path, stem: str, columns, rows, fmt: str,
                 resolved: dict, digest: str):
    if fmt == "json":
        path = out_dir / f"{stem}.json"
        payload = {"columns": list(columns),
                   "rows": [[float(v) for v in row] for row in rows]}
        return [_write_json(path, payload, resolved, digest)]
    path = out_dir / f"{stem}.csv"
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    sidecar = _write_json(out_dir / f"{stem}.config.json", {},
                          resolved, digest)
    return [path, sidecar]


# ---------------------------------------------------------------------------
# Commands.

def cmd_entangle(resolved: dict, out_dir: Path, fmt: str, digest: str):
    src = resolved["source"]
    weights = wavepacket.postselected_weights(src["g2"], src["eta"])
    mix = (weights[0] * twoqubit.rho_q(src["indistinguishability"]).matrix
           + weights[1] * twoqubit.rho_b_half().matrix
           + weights[2] * twoqubit.rho_b_zero().matrix)
    rho = twoqubit.TwoQubitDensity.from_matrix(mix)
    overlap = twoqubit.overlap_with(rho, twoqubit.bell_state("psi_minus"))
    chain = photostat.EfficiencyChain.from_dict(resolved["rates"]["chain"])
    rate, sigma = photostat.forward_rate(chain, src["rep_rate_hz"])
    k = src["excitations_per_period"]
    payload = {
        "density_matrix": rho.to_json(),
        "singlet_overlap": float(overlap),
        "singlet_fraction": float(twoqubit.singlet_fraction(rho).value),
        "weights": {"signal": weights[0], "background_half": weights[1],
                    "background_zero": weights[2]},
        "pair_rate_hz": float(rate * k),
        "pair_rate_sigma_hz": float(sigma * k),
        "attempt_rate_hz": float(src["rep_rate_hz"] / 2.0 * k),
    }
    tomo = resolved["tomography"]
    if tomo["enabled"]:
        settings = tomography.standard_settings()
        records = tomography.simulate_counts(rho, settings, tomo["pairs"],
                                             seed=resolved["seed"])
        rho_hat, loglike = tomography.mle_reconstruct(records)
        recon = {
            "density_matrix": rho_hat.to_json(),
            "singlet_fraction": float(twoqubit.singlet_fraction(rho_hat).value),
            "log_likelihood": float(loglike),
            "settings": len(settings),
            "pairs": tomo["pairs"],
        }
        if tomo["bootstrap"] > 0:
            recon["singlet_fraction_sigma"] = float(
                tomography.bootstrap_uncertainty(records, tomo["bootstrap"],
                                                 seed=resolved["seed"]))
        payload["reconstruction"] = recon
    return [_write_json(out_dir / "entangle.json", payload, resolved, digest)]


def cmd_fig3(resolved: dict, out_dir: Path, fmt: str, digest: str):
    src = resolved["source"]
    grid = np.linspace(0.0, src["g2_grid_max"], src["g2_grid_steps"])
    _, fid = wavepacket.g2_curve(grid, src["indistinguishability"], src["eta"])
    _, fid_unit = wavepacket.g2_curve(grid, 1.0, src["eta"])
    rows = [(g, f, fu) for g, f, fu in zip(grid, fid, fid_unit)]
    return _write_table(out_dir, "fig3",
                        ("g2", "fidelity", "fidelity_unit_overlap"),
                        rows, fmt, resolved, digest)


def cmd_fig4b(resolved: dict, out_dir: Path, fmt: str, digest: str):
    wp = resolved["wavepacket"]
    params = wavepacket.WavepacketParams(
        t1_ps=wp["t1_ps"], pulse_width_ps=wp["pulse_width_ps"],
        i0=wavepacket.calibrate_i0(wp["fidelity_at_zero"]))
    taus = np.linspace(0.0, wp["delay_grid_max_ps"], wp["delay_grid_steps"])
    taus, ind, fid = wavepacket.offset_curve(taus, params)
    rows = [(t, i, f) for t, i, f in zip(taus, ind, fid)]
    return _write_table(out_dir, "fig4b",
                        ("delay_ps", "indistinguishability", "fidelity"),
                        rows, fmt, resolved, digest)


def _swap_scenarios(block: dict):
    left = swap.SwapScenario.qd_headline(
        rep_rate_hz=block["rep_rate_hz"], eta_s=block["qd_eta_s"],
        eta_det=block["eta_det"], pnr=block["pnr"], qd_g2=block["qd_g2"],
        qd_I=block["qd_indistinguishability"])
    right = swap.SwapScenario.spdc_reference(
        rep_rate_hz=block["rep_rate_hz"], eta_s=block["spdc_eta_s"],
        eta_det=block["eta_det"], pnr=block["pnr"],
        switch_eta=block["switch_eta"], insertion_eta=block["insertion_eta"],
        spdc_statistics=block["spdc_statistics"],
        fidelity_floor=block["fidelity_floor"])
    return left, right


def cmd_fig5(resolved: dict, out_dir: Path, fmt: str, digest: str):
    block = resolved["swap"]
    if block["loss_db_step"] <= 0.0 or block["loss_db_max"] < 0.0:
        raise ConfigError("swap loss grid must have positive step and "
                          "non-negative maximum")
    grid = np.arange(0.0, block["loss_db_max"] + 0.5 * block["loss_db_step"],
                     block["loss_db_step"])
    left, right = _swap_scenarios(block)
    table = swap.sweep_loss(left, right, loss_grid_db=grid,
                            mux_sizes=tuple(int(n) for n in block["mux_sizes"]))
    return _write_table(out_dir, "fig5", table["columns"], table["rows"],
                        fmt, resolved, digest)


def cmd_rates(resolved: dict, out_dir: Path, fmt: str, digest: str):
    block = resolved["rates"]
    chain = photostat.EfficiencyChain.from_dict(block["chain"])
    rate, sigma = photostat.forward_rate(chain, block["rep_rate_hz"])
    payload = {
        "forward_rate_hz": float(rate),
        "forward_rate_sigma_hz": float(sigma),
        "attempt_rate_hz": float(block["rep_rate_hz"] / 2.0),
        "chain": chain.to_dict(),
    }
    measured = block["measured_coincidence_rate_hz"]
    if measured is not None:
        payload["back_propagated_rate_hz"] = float(
            photostat.back_propagate_rate(measured, chain))
    return [_write_json(out_dir / "rates.json", payload, resolved, digest)]


def _stream_params(resolved: dict, mode: str = None) -> timetag.StreamParams:
    tt = resolved["timetag"]
    analysis = tt["analysis"]
    if all(isinstance(a, str) for a in analysis):
        analysis = tuple(analysis)
    else:
        analysis = tuple(float(a) for a in analysis)
    return timetag.StreamParams(
        mode=mode or tt["mode"], g2=tt["g2"], t1_ps=tt["t1_ps"],
        pulse_width_ps=tt["pulse_width_ps"], rep_rate_hz=tt["rep_rate_hz"],
        pulses=tt["pulses"], eta=tt["eta"],
        jitter_fwhm_ps=tt["jitter_fwhm_ps"],
        indistinguishability=tt["indistinguishability"],
        analysis=analysis, seed=resolved["seed"])


def cmd_timetag(resolved: dict, sub: str, out_dir: Path, fmt: str,
                digest: str):
    tt = resolved["timetag"]
    if sub == "synth":
        stream = timetag.synthesize_stream(_stream_params(resolved))
        path = out_dir / "stream.qtt"
        timetag.write_stream(stream, path)
        sidecar = _write_json(out_dir / "stream.config.json",
                              {"records": int(len(stream.records)),
                               "mode": tt["mode"]},
                              resolved, digest)
        return [path, sidecar]
    if sub == "analyse":
        stream = timetag.synthesize_stream(_stream_params(resolved))
        payload = {"mode": tt["mode"], "records": int(len(stream.records))}
        files = []
        if tt["mode"] == "hbt":
            span = int(tt["span_periods"] * stream.period_ps)
            hist = timetag.coincidence_histogram(stream, 0, 1,
                                                 tt["bin_ps"], span)
            g2, err = timetag.g2_from_histogram(hist, stream.period_ps)
            payload["g2"] = float(g2)
            payload["g2_sigma"] = float(err)
            hist_path = out_dir / "hbt_histogram.csv"
            hist.to_csv(hist_path)
            files.append(hist_path)
        elif tt["mode"] == "pairs":
            counts = timetag.pair_counts(stream)
            payload["pair_counts"] = [[int(c) for c in row] for row in counts]
        else:
            payload["t_zero_ps"] = int(
                timetag.reference_from_pulse_histogram(stream))
        files.append(_write_json(out_dir / "timetag_analysis.json", payload,
                                 resolved, digest))
        return files
    points = timetag.filter_fidelity_sweep(
        t_on_grid_ps=tuple(float(t) for t in tt["t_on_grid_ps"]),
        params=_stream_params(resolved, mode="pairs"),
        t_off_margin_ps=tt["t_off_margin_ps"])
    rows = [(p.t_on_ps, p.singlet_fraction, p.coincidences,
             p.retained_fraction) for p in points]
    return _write_table(
        out_dir, "timetag_sweep",
        ("t_on_ps", "singlet_fraction", "coincidences", "retained_fraction"),
        rows, fmt, resolved, digest)


# ---------------------------------------------------------------------------
# Entry point.

def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH",
                   help="JSON configuration file (merged over defaults)")
    p.add_argument("--out", metavar="DIR", default=".",
                   help="output directory (created if missing)")
    p.add_argument("--seed", type=int, metavar="N",
                   help="override the configuration seed")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="table output format (JSON reports ignore this)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdpair",
        description="Simulation toolkit for a post-selected "
                    "entangled-photon-pair source.")
    subs = parser.add_subparsers(dest="command", required=True)
    helps = {
        "entangle": "post-selected state, singlet overlap and rates",
        "fig3": "fidelity versus multi-photon probability curves",
        "fig4b": "fidelity versus excitation delay curve",
        "fig5": "entanglement-swapping comparison table",
        "rates": "forward rate budget",
    }
    for name, text in helps.items():
        _add_common(subs.add_parser(name, help=text))
    pt = subs.add_parser("timetag", help="synthetic detection streams")
    pt.add_argument("subcommand", choices=("synth", "analyse", "sweep"))
    _add_common(pt)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        user = {}
        if args.config:
            try:
                with open(args.config) as fh:
                    user = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
        resolved = resolve_config(user)
        if args.seed is not None:
            resolved["seed"] = args.seed
        digest = config_digest(resolved)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "timetag":
            files = cmd_timetag(resolved, args.subcommand, out_dir,
                                args.format, digest)
        else:
            handler = {"entangle": cmd_entangle, "fig3": cmd_fig3,
                       "fig4b": cmd_fig4b, "fig5": cmd_fig5,
                       "rates": cmd_rates}[args.command]
            files = handler(resolved, out_dir, args.format, digest)
    except (ConfigError, ContractError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except ModelDomainError as exc:
        print(f"model domain error: {exc}", file=sys.stderr)
        return 4
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
