"""``chaosspec`` command line: every computation as a subcommand with reproducible output.

Parameter precedence is built-in defaults, then ``--config`` (JSON object), then
explicit flags.  Output carries a header with the package version, the command
and the resolved parameters, so feeding that header back through ``--config``
reproduces the file.  Without ``--out`` the file goes to ``$CHAOSSPEC_OUTPUT_DIR``
when set and to stdout otherwise.

Exit status: 0 success, 2 invalid parameters, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__, montecarlo, schrodinger, sensitivity, she
from .errors import ChaosSpecError, DegenerateLawError, InvalidParameterError, NumericError
from .spectra import (DEFAULT_EPS_TAIL, characteristic_function, ks_to_standard_normal, moments,
                      poisson_pmf, total_variation)

OUTPUT_DIR_ENV = "CHAOSSPEC_OUTPUT_DIR"
EXIT_OK, EXIT_PARAM, EXIT_NUMERIC = 0, 2, 3
MODELS = ("she", "schrodinger", "gbm")


def float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


@dataclass(frozen=True)
class Param:
    name: str
    kind: Callable
    default: Any
    help: str = ""
    choices: tuple | None = None

    @property
    def flag(self):
        return "--" + self.name.replace("_", "-")


# -- parameter groups ------------------------------------------------------------

SHE = [Param("beta", float, 1.0, "noise strength")]
SCHR = [Param("d", int, 1, "spatial dimension (1-3)"),
        Param("r0", float, 1.0, "covariance R(0)"),
        Param("ell", float, 1.0, "covariance correlation length"),
        Param("amplitude", float, 1.0, "initial-data amplitude"),
        Param("width", float, 1.0, "initial-data width")]
MODEL = [Param("model", str, "she", "spectrum model", MODELS)] + SHE + SCHR
TOL = [Param("eps_tail", float, DEFAULT_EPS_TAIL, "truncated tail mass"),
       Param("quad_tol", float, schrodinger.QUAD_TOL, "quadrature relative tolerance")]
MC = [Param("n_samples", int, 10 ** 5, "Monte Carlo sample count"),
      Param("seed", int, 0, "64-bit seed"),
      Param("workers", int, 1, "worker threads (results do not depend on it)")]
TIME = [Param("t", float, 1.0, "time")]


def _cov(p):
    return schrodinger.CovarianceModel(p["d"], p["r0"], p["ell"])


def _init(p):
    return schrodinger.InitialDataModel(p["d"], p["amplitude"], p["width"])


def _she(p):
    return she.SheParams(p["beta"], p["t"])


def _model(p):
    if p["model"] == "she":
        return sensitivity.SheModel(p["beta"])
    if p["model"] == "schrodinger":
        return sensitivity.SchrodingerModel(_cov(p), _init(p))
    return sensitivity.GbmModel()


def _spectrum(p):
    if p["model"] == "she":
        return she.pgf_coefficients(_she(p), p["eps_tail"])
    if p["model"] == "schrodinger":
        return schrodinger.spectrum(_cov(p), _init(p), p["t"], p["eps_tail"])
    return poisson_pmf(p["t"], eps_tail=p["eps_tail"])


# -- results ----------------------------------------------------------------------

@dataclass
class Table:
    columns: list
    rows: list
    extra: dict | None = None  # scalar side results recorded in the header


@dataclass
class Report:
    values: dict
    records: list | None = None  # SimEstimate records, emitted as JSON lines


def _spec_table(spec):
    rows = [(n, float(q)) for n, q in enumerate(spec.probs)]
    return Table(["n", "prob"], rows, {"tail_mass": spec.tail_mass, "normalizer": spec.normalizer})


# -- commands -----------------------------------------------------------------------

def cmd_spectrum_schrodinger(p):
    return _spec_table(schrodinger.spectrum(_cov(p), _init(p), p["t"], p["eps_tail"]))


def cmd_spectrum_she(p):
    if p["method"] == "cf":
        n_max = she.truncation_order(_she(p), p["eps_tail"])
        spec = she.spectrum_via_cf_inversion(_she(p), max(2 * n_max, 16), p["eps_tail"])
    else:
        spec = she.pgf_coefficients(_she(p), p["eps_tail"])
    return _spec_table(spec)


def cmd_cf(p):
    rows = []
    spec = _spectrum(p)
    for theta in p["thetas"]:
        if p["model"] == "she":
            exact = she.cf_closed_form(_she(p), theta)
        elif p["model"] == "schrodinger":
            exact = schrodinger.cf_closed_form(_cov(p), _init(p), p["t"], theta, p["quad_tol"])
        else:
            exact = complex(np.exp(p["t"] * (np.exp(1j * theta) - 1)))
        from_pmf = characteristic_function(spec, theta)
        rows.append((theta, exact.real, exact.imag, from_pmf.real, from_pmf.imag))
    return Table(["theta", "re", "im", "re_pmf", "im_pmf"], rows)


def _clt(p):
    if p["model"] == "she":
        return she.clt_params(_she(p))
    if p["model"] == "schrodinger":
        return schrodinger.clt_params(_cov(p))
    return sensitivity.GbmModel().clt()


def cmd_clt_check(p):
    spec = _spectrum(p)
    clt = _clt(p)
    t = p["t"]
    center, scale = clt.center(t), clt.scale(t)
    mom = moments(spec)
    return Report({"center": center, "scale": scale,
                   "ks": ks_to_standard_normal(spec, center, scale).ks,
                   "mean": mom.mean, "variance": mom.variance, "tail_mass": spec.tail_mass})


def cmd_correlation(p):
    curve = sensitivity.correlation_curve(_model(p), p["t"], p["s_values"])
    return Table(["s", "cor"], curve.rows())


def cmd_onset_scan(p):
    scan = sensitivity.onset_scan(_model(p), p["alphas"], p["times"])
    return Table(["alpha", "t", "cor"], scan.rows())


def _lattice(p):
    dt = p["dt"] if p["dt"] is not None else p["dx"] ** 2 / 4
    return montecarlo.LatticeConfig(p["dx"], dt, p["half_width"])


def cmd_mc_she(p):
    cfg = _lattice(p)
    p["dt"] = cfg.dt  # record the resolved step in the output header
    sp = _she(p)
    est = montecarlo.simulate_she_pair(cfg, sp, p["s"], p["n_samples"], p["seed"], p["workers"])
    exact_cor = sensitivity.SheModel(p["beta"]).correlation(p["t"], p["s"])
    params = {k: p[k] for k in ("beta", "t", "s", "dx", "half_width", "n_samples", "seed")}
    params["dt"] = cfg.dt
    records = [est.e_zz.to_record("e_zz", params), est.e_z2.to_record("e_z2", params),
               est.correlation.to_record("correlation", params)]
    values = {"e_zz": est.e_zz.value, "e_zz_stderr": est.e_zz.stderr,
              "e_z2": est.e_z2.value, "e_z2_stderr": est.e_z2.stderr,
              "correlation": est.correlation.value, "correlation_stderr": est.correlation.stderr,
              "e_z2_exact": she.second_moment(sp), "correlation_exact": exact_cor}
    return Report(values, records)


def cmd_mc_gbm(p):
    est = montecarlo.simulate_gbm_pair(p["t"], p["s"], p["n_samples"], p["seed"], p["workers"])
    params = {k: p[k] for k in ("t", "s", "n_samples", "seed")}
    return Report({"correlation": est.value, "stderr": est.stderr,
                   "exact": sensitivity.gbm_correlation(p["t"], p["s"])},
                  [est.to_record("gbm_correlation", params)])


def cmd_kinetic_sim(p):
    cov, init = _cov(p), _init(p)
    xi = p["xi"] if len(p["xi"]) == cov.d else p["xi"] * cov.d if len(p["xi"]) == 1 else None
    if xi is None:
        raise InvalidParameterError(f"--xi needs 1 or d={cov.d} components, got {len(p['xi'])}")
    est, counts = montecarlo.simulate_kinetic(cov, init, p["t"], xi, p["n_samples"], p["seed"], p["workers"])
    tv = total_variation(montecarlo.counts_to_spectrum(counts), poisson_pmf(cov.r0 * p["t"]))
    params = {k: p[k] for k in ("d", "r0", "ell", "amplitude", "width", "t", "xi", "n_samples", "seed")}
    return Report({"w": est.value, "w_stderr": est.stderr, "jump_count_tv": tv,
                   "jump_counts": counts.tolist()},
                  [est.to_record("kinetic_w", params)])


def cmd_diffusive_check(p):
    rep = montecarlo.diffusive_scaling_check(_cov(p), p["t_scale"], p["n_samples"], p["seed"], p["workers"])
    return Report({"ks": rep.ks, "diffusivity": np.diag(schrodinger.diffusivity_matrix(_cov(p))).tolist()})


@dataclass(frozen=True)
class Command:
    run: Callable
    params: list
    help: str
    plot: tuple | None = None  # (x column, y column) for --svg


LATTICE = [Param("dx", float, 0.05, "lattice spacing"),
           Param("dt", float, None, "time step (default dx^2/4)"),
           Param("half_width", float, 5.0, "domain half width L")]

COMMANDS = {
    "spectrum-schrodinger": Command(cmd_spectrum_schrodinger, SCHR + TIME + TOL,
                                    "chaos spectrum of the Schrodinger zero mode", ("n", "prob")),
    "spectrum-she": Command(cmd_spectrum_she, SHE + TIME + TOL +
                            [Param("method", str, "pgf", "extraction method", ("pgf", "cf"))],
                            "chaos spectrum of the stochastic heat equation", ("n", "prob")),
    "cf": Command(cmd_cf, MODEL + TIME + TOL + [Param("thetas", float_list, [0.1, 1.0, 3.0], "angles")],
                  "characteristic function: closed form next to the pmf sum", ("theta", "re")),
    "clt-check": Command(cmd_clt_check, MODEL + TIME + TOL, "Kolmogorov distance to the Gaussian limit"),
    "correlation": Command(cmd_correlation, MODEL + TIME +
                           [Param("s_values", float_list, [0.01, 0.1, 0.5, 1.0, 2.0], "perturbation strengths")],
                           "noise-sensitivity correlation curve", ("s", "cor")),
    "onset-scan": Command(cmd_onset_scan, MODEL +
                          [Param("alphas", float_list, [0.5, 1.0, 2.0], "exponents alpha in s = t^-alpha"),
                           Param("times", float_list, [1e2, 1e3, 1e4], "times")],
                          "correlation at s = t^-alpha"),
    "mc-she": Command(cmd_mc_she, SHE + TIME + [Param("s", float, 0.5, "perturbation strength")] + LATTICE + MC,
                      "paired-noise lattice simulation of the heat equation"),
    "mc-gbm": Command(cmd_mc_gbm, TIME + [Param("s", float, math.log(2), "perturbation strength")] + MC,
                      "paired-noise simulation of geometric Brownian motion"),
    "kinetic-sim": Command(cmd_kinetic_sim, SCHR + [Param("t", float, 5.0, "time"),
                                                   Param("xi", float_list, [0.0], "frequency")] + MC,
                           "compound Poisson solution of the kinetic equation"),
    "diffusive-check": Command(cmd_diffusive_check, SCHR + [Param("t_scale", float, 1e3, "time scale")] + MC,
                               "diffusive limit of the kinetic jump process"),
}


# -- parsing ------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="chaosspec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"chaosspec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, cmd in COMMANDS.items():
        sp = sub.add_parser(name, help=cmd.help, argument_default=argparse.SUPPRESS)
        for prm in cmd.params:
            sp.add_argument(prm.flag, dest=prm.name, type=prm.kind, choices=prm.choices, help=prm.help)
        sp.add_argument("--config", help="JSON file of parameters (flags take precedence)")
        sp.add_argument("--out", help="output path")
        sp.add_argument("--format", choices=("csv", "json"), help="output format")
        sp.add_argument("--svg", help="also write an SVG line chart of the curve")
    return parser


def _coerce(prm, value):
    if value is None:
        return None
    if prm.kind is float_list:
        return float_list(value)
    if prm.kind is int and isinstance(value, float) and not value.is_integer():
        raise InvalidParameterError(f"{prm.name} must be an integer, got {value}")
    out = prm.kind(value)
    if prm.choices and out not in prm.choices:
        raise InvalidParameterError(f"{prm.name}={out!r} not in {prm.choices}")
    return out


def load_config(path, command):
    try:
        text = Path(path).read_text()
        # a previous output file (CSV header or JSON lines) works as a config too
        data = read_output(text)[0] if text.startswith("#") or "\n{" in text.strip() else json.loads(text)
    except (OSError, ValueError, IndexError) as exc:
        raise InvalidParameterError(f"cannot read config {path}: {exc}") from exc
    if isinstance(data, dict) and "meta" in data:
        data = data["meta"]
    if "params" in data:
        if data.get("command", command) != command:
            raise InvalidParameterError(f"config is for {data['command']!r}, not {command!r}")
        data = data["params"]
    if not isinstance(data, dict):
        raise InvalidParameterError("config must be a JSON object")
    return data


def resolve_params(command, ns):
    """Defaults, then the config file, then explicit flags; unknown config keys are rejected."""
    spec = {prm.name: prm for prm in COMMANDS[command].params}
    params = {name: prm.default for name, prm in spec.items()}
    if getattr(ns, "config", None):
        cfg = load_config(ns.config, command)
        unknown = sorted(set(cfg) - set(spec))
        if unknown:
            raise InvalidParameterError(f"unknown config keys for {command}: {', '.join(unknown)}")
        params.update({k: _coerce(spec[k], v) for k, v in cfg.items()})
    params.update({k: getattr(ns, k) for k in spec if hasattr(ns, k)})
    return params


# -- output ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def meta_block(command, params):
    return {"version": __version__, "command": command, "params": params}


def render(command, params, result, fmt):
    meta = meta_block(command, params)
    if isinstance(result, Table):
        if result.extra:
            meta["results"] = result.extra
        if fmt == "json":
            return json.dumps({"meta": meta, "columns": result.columns,
                               "rows": [list(r) for r in result.rows]}, sort_keys=True) + "\n"
        buf = io.StringIO()
        buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(result.columns)
        for row in result.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        scalars = {k: v for k, v in result.values.items() if not isinstance(v, list)}
        w.writerow(list(scalars))
        w.writerow([_fmt(v) for v in scalars.values()])
        return buf.getvalue()
    lines = [json.dumps({"meta": meta, "results": result.values}, sort_keys=True)]
    lines += [json.dumps(r, sort_keys=True) for r in result.records or []]
    return "\n".join(lines) + "\n"


def read_output(text):
    """Parse a file written by :func:`render`; returns ``(meta, payload)``."""
    if text.startswith("#"):
        head, _, body = text.partition("\n")
        meta = json.loads(head[1:])
        rows = list(csv.reader(io.StringIO(body)))
        return meta, {"columns": rows[0], "rows": [[float(v) for v in r] for r in rows[1:]]}
    lines = [json.loads(line) for line in text.splitlines() if line.strip()]
    first = lines[0]
    if "columns" in first:
        return first["meta"], {"columns": first["columns"], "rows": first["rows"]}
    return first["meta"], {"results": first["results"], "records": lines[1:]}


def write_svg(path, table, columns, title):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = "chaosspec"  # stable element ids
    ix, iy = (table.columns.index(c) for c in columns)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([r[ix] for r in table.rows], [r[iy] for r in table.rows], lw=1.2)
    ax.set_xlabel(columns[0])
    ax.set_ylabel(columns[1])
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _destination(ns, command, fmt):
    if getattr(ns, "out", None):
        return Path(ns.out)
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env) / f"{command}.{fmt}"
    return None


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    command = ns.command
    try:
        params = resolve_params(command, ns)
        result = COMMANDS[command].run(params)
        fmt = getattr(ns, "format", None) or ("csv" if isinstance(result, Table) else "json")
        text = render(command, params, result, fmt)
        dest = _destination(ns, command, fmt)
        if dest is None:
            sys.stdout.write(text)
        else:
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_text(text)
        if getattr(ns, "svg", None):
            plot = COMMANDS[command].plot
            if not isinstance(result, Table) or plot is None:
                raise InvalidParameterError(f"--svg is not available for {command}")
            write_svg(ns.svg, result, plot, command)
    except (InvalidParameterError, DegenerateLawError) as exc:
        print(f"chaosspec {command}: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except NumericError as exc:
        detail = ""
        if exc.achieved is not None:
            detail = f" (achieved {exc.achieved:.3g}, requested {exc.requested:.3g})"
        print(f"chaosspec {command}: numerical failure: {exc}{detail}", file=sys.stderr)
        return EXIT_NUMERIC
    except ChaosSpecError as exc:
        print(f"chaosspec {command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
