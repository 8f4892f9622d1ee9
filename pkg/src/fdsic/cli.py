"""Command-line front end: ``fdsic {analytic,simulate,sweep,experiment mimic} CONFIG``.

Configs are JSON with the sections ``signals``, ``oscillators``, ``channel``,
``canceller``, ``noise`` and optionally ``sweep`` and ``mimic``. Angles are
given in degrees (``sigma_deg``) or as a variance in rad^2 (``variance_rad2``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

from . import montecarlo
from .core import (
    CancellerKind,
    ChannelEstimate,
    ChannelModel,
    ChannelTap,
    DegenerateInputError,
    DigitalMode,
    EstimateMode,
    NoiseSpec,
    OscillatorConfig,
    PhaseModel,
    PhaseNoiseSpec,
    ResidualReport,
    Scenario,
    SignalSpec,
    UsageError,
    degrees_to_variance,
)
from .phasenoise import SpectrumSegment, jitter_from_spectrum

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2


class ConfigError(UsageError):
    """Invalid configuration; the message carries the field path and line."""


@dataclass(frozen=True)
class Config:
    scenario: Optional[Scenario]
    sweep_axis: Optional[str] = None
    sweep_values: Optional[list] = None
    mimic: Optional[montecarlo.MimicExperiment] = None
    mimic_ds: Optional[list] = None


# --------------------------------------------------------------------------
# Parsing helpers


class _Reader:
    """Walks a JSON object tree, tracking the field path for error messages."""

    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source

    def line_of(self, path: Sequence[str]) -> Optional[int]:
        pos = 0
        for part in path:
            if part.startswith("["):
                continue
            hit = self.text.find(f'"{part}"', pos)
            if hit < 0:
                return None
            pos = hit
        return self.text.count("\n", 0, pos) + 1

    def fail(self, path: Sequence[str], msg: str) -> ConfigError:
        dotted = ".".join(path) if path else "<root>"
        line = self.line_of(path)
        where = f"{self.source}:{line}" if line else self.source
        return ConfigError(f"{where}: {dotted}: {msg}")

    def section(self, obj: Any, path: List[str], allowed: Sequence[str]) -> Dict[str, Any]:
        if not isinstance(obj, dict):
            raise self.fail(path, "expected an object")
        for key in obj:
            if key not in allowed:
                raise self.fail(path + [key], f"unknown key (allowed: {', '.join(allowed)})")
        return obj

    def number(self, obj: dict, key: str, path: List[str], default=None, *, minimum=None, strict=False,
               integer=False):
        if key not in obj:
            if default is None:
                raise self.fail(path + [key], "missing required value")
            return default
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self.fail(path + [key], f"expected a number, got {v!r}")
        if integer and not float(v).is_integer():
            raise self.fail(path + [key], f"expected an integer, got {v!r}")
        if not math.isfinite(v) and not (key == "dynamic_range_db" and v > 0):
            raise self.fail(path + [key], "must be finite")
        if minimum is not None and (v < minimum or (strict and v == minimum)):
            op = ">" if strict else ">="
            raise self.fail(path + [key], f"must be {op} {minimum}, got {v}")
        return int(v) if integer else float(v)

    def complex_value(self, obj: dict, key: str, path: List[str], default=None) -> complex:
        if key not in obj:
            if default is None:
                raise self.fail(path + [key], "missing required value")
            return complex(default)
        v = obj[key]
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return complex(v)
        if isinstance(v, list) and len(v) == 2 and all(isinstance(a, (int, float)) for a in v):
            return complex(v[0], v[1])
        raise self.fail(path + [key], "expected a number or [re, im]")

    def choice(self, obj: dict, key: str, path: List[str], options: Sequence[str], default=None) -> str:
        v = obj.get(key, default)
        if v is None:
            raise self.fail(path + [key], "missing required value")
        if v not in options:
            raise self.fail(path + [key], f"expected one of {', '.join(options)}, got {v!r}")
        return v


_OSC_KEYS = ("sigma_deg", "variance_rad2", "model", "coherence_time_s", "table", "lo_group", "seed", "spectrum")


def _phase_spec(r: _Reader, obj: Any, path: List[str], carrier_hz: float) -> PhaseNoiseSpec:
    o = r.section(obj, path, _OSC_KEYS)
    given = [k for k in ("sigma_deg", "variance_rad2", "spectrum") if k in o]
    if len(given) != 1:
        raise r.fail(path, "give exactly one of sigma_deg, variance_rad2, spectrum")
    if "sigma_deg" in o:
        var = degrees_to_variance(r.number(o, "sigma_deg", path, minimum=0))
    elif "variance_rad2" in o:
        var = r.number(o, "variance_rad2", path, minimum=0)
    else:
        sp = r.section(o["spectrum"], path + ["spectrum"], ("segments", "f1_hz", "f2_hz"))
        segs = sp.get("segments")
        if not isinstance(segs, list) or not segs:
            raise r.fail(path + ["spectrum", "segments"], "expected a list of [f_start_hz, f_end_hz, dBc_per_hz]")
        try:
            segments = [SpectrumSegment(float(a), float(b), float(c)) for a, b, c in segs]
            sigma = jitter_from_spectrum(segments, r.number(sp, "f1_hz", path + ["spectrum"]),
                                         r.number(sp, "f2_hz", path + ["spectrum"]))
        except (TypeError, ValueError) as exc:
            raise r.fail(path + ["spectrum"], str(exc)) from None
        var = sigma ** 2
    model = r.choice(o, "model", path, [m.value for m in PhaseModel], default="ar1")
    table = None
    if "table" in o:
        t = o["table"]
        if not isinstance(t, list) or not all(isinstance(p, list) and len(p) == 2 for p in t):
            raise r.fail(path + ["table"], "expected a list of [lag_s, correlation] pairs")
        table = {float(a): float(b) for a, b in t}
    tc = o.get("coherence_time_s")
    if tc is not None:
        tc = r.number(o, "coherence_time_s", path, minimum=0, strict=True)
    try:
        return PhaseNoiseSpec(var, PhaseModel(model), tc, table, r.number(o, "seed", path, 0, minimum=0, integer=True))
    except UsageError as exc:
        raise r.fail(path, str(exc)) from None


def _taps(r: _Reader, obj: Any, path: List[str]) -> ChannelModel:
    if not isinstance(obj, list) or not obj:
        raise r.fail(path, "expected a non-empty list of taps")
    taps = []
    for i, t in enumerate(obj):
        p = path + [f"[{i}]"]
        t = r.section(t, p, ("gain", "delay_s"))
        taps.append(ChannelTap(r.complex_value(t, "gain", p), r.number(t, "delay_s", p, 0.0, minimum=0)))
    return ChannelModel(tuple(taps))


_TOP = ("signals", "oscillators", "channel", "canceller", "noise", "sweep", "mimic")


def _scenario(r: _Reader, cfg: dict) -> Optional[Scenario]:
    if "channel" not in cfg and "oscillators" not in cfg:
        return None
    sig = r.section(cfg.get("signals", {}), ["signals"], (
        "kind", "freq_hz", "bandwidth_hz", "seed", "p_si", "p_signal", "sample_period_s", "n_samples", "training_len"))
    p = ["signals"]
    T = r.number(sig, "sample_period_s", p, 21.7e-9, minimum=0, strict=True)
    signal = SignalSpec(
        r.choice(sig, "kind", p, ("tone", "bandlimited"), "tone"),
        r.number(sig, "freq_hz", p, 1e6),
        r.number(sig, "bandwidth_hz", p, 0.0, minimum=0),
        r.number(sig, "seed", p, 0, minimum=0, integer=True),
    )

    for name in ("oscillators", "channel"):
        if name not in cfg:
            raise r.fail([name], "missing section")
    osc = r.section(cfg.get("oscillators"), ["oscillators"], ("carrier_hz", "tx", "cancel", "rx"))
    fc = r.number(osc, "carrier_hz", ["oscillators"], minimum=0, strict=True)
    if "tx" not in osc:
        raise r.fail(["oscillators", "tx"], "missing oscillator")
    oscs = {}
    for name in ("tx", "cancel", "rx"):
        # cancel and rx default to the transmitter's oscillator (one shared LO).
        src = name if name in osc else "tx"
        path = ["oscillators", src]
        spec = _phase_spec(r, osc[src], path, fc)
        oscs[name] = OscillatorConfig(fc, spec, r.number(osc[src], "lo_group", path, 0, integer=True))

    ch = r.section(cfg.get("channel"), ["channel"], ("si", "signal"))
    si = _taps(r, ch.get("si"), ["channel", "si"])
    sig_ch = _taps(r, ch["signal"], ["channel", "signal"]) if "signal" in ch else None

    can = r.section(cfg.get("canceller", {}), ["canceller"],
                    ("kind", "estimate", "digital", "digital_taps", "passive_db"))
    cp = ["canceller"]
    kind = CancellerKind(r.choice(can, "kind", cp, [k.value for k in CancellerKind], "pre_mixer"))
    est_raw = can.get("estimate", "perfect")
    if isinstance(est_raw, dict):
        e = r.section(est_raw, cp + ["estimate"], ("rho", "tau_s"))
        estimate = ChannelEstimate(r.complex_value(e, "rho", cp + ["estimate"], 1.0),
                                   r.number(e, "tau_s", cp + ["estimate"], si.taps[0].delay_s, minimum=0))
    else:
        estimate = EstimateMode(r.choice(can, "estimate", cp, [m.value for m in EstimateMode], "perfect"))
    digital = can.get("digital")
    if digital is not None:
        digital = DigitalMode(r.choice(can, "digital", cp, [m.value for m in DigitalMode]))

    nz = r.section(cfg.get("noise", {}), ["noise"], ("thermal_variance", "seed"))
    noise = NoiseSpec(r.number(nz, "thermal_variance", ["noise"], 0.0, minimum=0),
                      r.number(nz, "seed", ["noise"], 0, minimum=0, integer=True))
    try:
        return Scenario(
            si_channel=si,
            tx_osc=oscs["tx"],
            cancel_osc=oscs["cancel"],
            rx_osc=oscs["rx"],
            canceller=kind,
            estimate=estimate,
            digital_estimate=digital,
            noise=noise,
            p_si=r.number(sig, "p_si", p, 1.0, minimum=0),
            p_signal=r.number(sig, "p_signal", p, 0.0, minimum=0),
            n_samples=r.number(sig, "n_samples", p, 1 << 20, minimum=1, integer=True),
            training_len=r.number(sig, "training_len", p, 1000, minimum=1, integer=True),
            sample_period_s=T,
            signal=signal,
            signal_channel=sig_ch,
            passive_db=r.number(can, "passive_db", cp, 0.0, minimum=0),
            digital_taps=r.number(can, "digital_taps", cp, 4, minimum=1, integer=True),
        )
    except UsageError as exc:
        raise r.fail([], str(exc)) from None


def _mimic(r: _Reader, cfg: dict):
    if "mimic" not in cfg:
        return None, None
    p = ["mimic"]
    m = r.section(cfg["mimic"], p, ("source", "h1", "h2", "delays_s", "sigma_noise_sq", "dynamic_range_db", "n",
                                    "carrier_hz", "tone_hz", "sample_period_s", "n_train", "d"))
    fc = r.number(m, "carrier_hz", p, 2.4e9, minimum=0, strict=True)
    if "source" not in m:
        raise r.fail(p + ["source"], "missing source oscillator")
    src = _phase_spec(r, m["source"], p + ["source"], fc)
    delays = m.get("delays_s", [0.0, 0.0])
    if not (isinstance(delays, list) and len(delays) == 2 and all(isinstance(x, (int, float)) for x in delays)):
        raise r.fail(p + ["delays_s"], "expected [delta1_s, delta2_s]")
    dr = m.get("dynamic_range_db")
    if dr is not None:
        dr = r.number(m, "dynamic_range_db", p, minimum=0)
    ds = m.get("d", list(range(0, 101)))
    if not (isinstance(ds, list) and ds and all(isinstance(x, int) and x >= 0 for x in ds)):
        raise r.fail(p + ["d"], "expected a non-empty list of non-negative integers")
    n_train = m.get("n_train")
    if n_train is not None:
        n_train = r.number(m, "n_train", p, minimum=1, integer=True)
    try:
        exp = montecarlo.MimicExperiment(
            src,
            r.complex_value(m, "h1", p, 1.0),
            r.complex_value(m, "h2", p, 1.0),
            (float(delays[0]), float(delays[1])),
            r.number(m, "sigma_noise_sq", p, 0.0, minimum=0),
            dr,
            r.number(m, "n", p, 1 << 20, minimum=2, integer=True),
            fc,
            r.number(m, "tone_hz", p, 1e6),
            r.number(m, "sample_period_s", p, 21.7e-9, minimum=0, strict=True),
            n_train,
        )
    except UsageError as exc:
        raise r.fail(p, str(exc)) from None
    return exp, ds


def parse_config_text(text: str, source: str = "<config>") -> Config:
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    r = _Reader(text, source)
    cfg = r.section(cfg, [], _TOP)
    scenario = _scenario(r, cfg)
    mimic, ds = _mimic(r, cfg)
    axis = values = None
    if "sweep" in cfg:
        sw = r.section(cfg["sweep"], ["sweep"], ("axis", "values"))
        axis = r.choice(sw, "axis", ["sweep"], montecarlo.AXES)
        values = sw.get("values")
        if not isinstance(values, list) or not values:
            raise r.fail(["sweep", "values"], "expected a non-empty list")
        if axis == "rho":
            values = [r.complex_value({"v": v}, "v", ["sweep", "values"]) for v in values]
    if scenario is None and mimic is None:
        raise r.fail([], "config needs a scenario (oscillators + channel) or a mimic section")
    return Config(scenario, axis, values, mimic, ds)


def parse_config(path: str) -> Config:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config_text(text, path)


# --------------------------------------------------------------------------
# Output

COLUMNS = (
    "value",
    "value_imag",
    "sim_analog_db",
    "sim_analog_db_stderr",
    "sim_active_db",
    "sim_active_db_stderr",
    "sim_total_db",
    "analytic_analog_db",
    "analytic_active_db",
    "analytic_total_db",
    "power_before",
    "power_after_passive",
    "power_after_analog",
    "power_after_digital",
)


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return f"{v:.6g}"


def row_values(row: montecarlo.SweepRow, simulated: bool = True) -> List[str]:
    rep, pred = row.report, row.predicted
    sim = [rep.analog_db, row.extras.get("analog_db_stderr"), rep.active_db,
           row.extras.get("active_db_stderr"), rep.total_db] if simulated else [None] * 5
    ana = [pred.analog_db, pred.active_db, pred.total_db] if pred is not None else [None] * 3
    src = rep if simulated else pred
    powers = [src.power_before, src.power_after_passive, src.power_after_analog, src.power_after_digital]
    return [_fmt(row.value), _fmt(row.extras.get("rho_imag", 0.0))] + [_fmt(v) for v in sim + ana + powers]


def emit_csv(rows: Sequence[montecarlo.SweepRow], path: Optional[str], simulated: bool = True) -> str:
    """Write the table (header + one line per row) to ``path`` or return it when ``path`` is None."""
    if not rows:
        raise UsageError("nothing to write: the table is empty")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow(row_values(row, simulated))
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def check_rows(rows: Sequence[montecarlo.SweepRow], tol_db: float) -> List[str]:
    """Messages for rows whose simulation and closed form differ by more than ``tol_db``."""
    bad = []
    for row in rows:
        if row.predicted is None:
            bad.append(f"value {row.value:.6g}: no closed form to check against")
            continue
        pairs = [("analog", row.report.analog_db, row.predicted.analog_db)]
        if row.report.power_after_digital is not None and row.predicted.power_after_digital is not None:
            pairs.append(("active", row.report.active_db, row.predicted.active_db))
        for name, sim, ana in pairs:
            if abs(sim - ana) > tol_db:
                bad.append(f"value {row.value:.6g}: {name} {sim:.3f} dB vs closed form {ana:.3f} dB")
    return bad


# --------------------------------------------------------------------------
# Commands


def _scenario_or_fail(cfg: Config, args) -> Scenario:
    if cfg.scenario is None:
        raise ConfigError(f"{args.config}: this command needs oscillators and channel sections")
    sc = cfg.scenario
    if args.samples is not None:
        sc = sc.replace(n_samples=args.samples)
    return sc


def _rows_analytic(cfg: Config, args) -> List[montecarlo.SweepRow]:
    sc = _scenario_or_fail(cfg, args)
    if cfg.sweep_axis in (None, "K", "M", "d"):
        targets = [(0.0, sc)]
    else:
        targets = [(complex(v), montecarlo._apply_axis(sc, cfg.sweep_axis, v)) for v in cfg.sweep_values]
    rows = []
    for value, s in targets:
        pred = montecarlo.predict(s)
        if pred is None:
            raise UsageError("no closed form covers this scenario")
        rows.append(montecarlo.SweepRow(value.real, pred.report(), pred.report(), extras={"rho_imag": value.imag}))
    return rows


def _rows_simulate(cfg: Config, args) -> List[montecarlo.SweepRow]:
    sc = _scenario_or_fail(cfg, args)
    st = montecarlo.run_trials(sc, args.trials, args.seed)
    pred = montecarlo.predict(sc)
    return [montecarlo.SweepRow(0.0, st.report, None if pred is None else pred.report(), st,
                                {"analog_db_stderr": st.stderr_db("analog_db"),
                                 "active_db_stderr": st.stderr_db("active_db")})]


def _rows_sweep(cfg: Config, args) -> List[montecarlo.SweepRow]:
    if cfg.sweep_axis is None:
        raise ConfigError(f"{args.config}: sweep needs a 'sweep' section with axis and values")
    if cfg.sweep_axis == "d":
        return _rows_mimic(cfg, args, cfg.sweep_values)
    sc = _scenario_or_fail(cfg, args)
    return montecarlo.sweep(sc, cfg.sweep_axis, cfg.sweep_values, args.trials, args.seed)


def _rows_mimic(cfg: Config, args, ds=None) -> List[montecarlo.SweepRow]:
    if cfg.mimic is None:
        raise ConfigError(f"{args.config}: needs a 'mimic' section")
    exp = cfg.mimic if args.samples is None else cfg.mimic.replace(n=args.samples)
    return montecarlo.sweep(exp, "d", ds if ds is not None else cfg.mimic_ds, args.trials, args.seed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fdsic", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="JSON scenario file")
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--trials", type=int, default=8, help="Monte Carlo trials per row (default 8)")
    common.add_argument("--samples", type=int, default=None, help="override samples per trial")
    common.add_argument("--out", default=None, help="CSV output path (default: stdout)")
    common.add_argument("--check", action="store_true", help="fail unless simulation matches the closed form")
    common.add_argument("--tol-db", type=float, default=0.3, help="tolerance for --check (default 0.3 dB)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analytic", parents=[common], help="closed-form predictions only")
    sub.add_parser("simulate", parents=[common], help="simulate one scenario")
    sub.add_parser("sweep", parents=[common], help="sweep one axis")
    exp = sub.add_parser("experiment", help="reference experiments")
    exp_sub = exp.add_subparsers(dest="experiment", required=True)
    exp_sub.add_parser("mimic", parents=[common], help="mimic-cancellation delay sweep")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.trials < 1:
            raise UsageError("--trials must be >= 1")
        if args.samples is not None and args.samples < 1:
            raise UsageError("--samples must be >= 1")
        cfg = parse_config(args.config)
        simulated = True
        if args.command == "analytic":
            rows, simulated = _rows_analytic(cfg, args), False
        elif args.command == "simulate":
            rows = _rows_simulate(cfg, args)
        elif args.command == "sweep":
            rows = _rows_sweep(cfg, args)
        else:
            rows = _rows_mimic(cfg, args)
        text = emit_csv(rows, args.out, simulated)
    except (UsageError, DegenerateInputError) as exc:
        print(f"fdsic: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"fdsic: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out is None:
        sys.stdout.write(text)
    if args.check and simulated:
        bad = check_rows(rows, args.tol_db)
        for msg in bad:
            print(f"fdsic: check failed: {msg}", file=sys.stderr)
        if bad:
            return EXIT_CHECK_FAILED
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
