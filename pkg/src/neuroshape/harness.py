"""Experiment configuration, reproducible runs and the ``neuroshape`` command line."""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import warnings
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, dsmref, evolve, fitness, netsim, postproc, spectral
from .dsmref import DsmConfig
from .evolve import GaConfig
from .fitness import AnalysisSettings, ObjectiveParams
from .netsim import ConfigError, InputSignal, NetworkConfig, SimulationDiverged, SpikeRaster
from .postproc import AccumulatorConfig

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 2, 3, 4
ALGORITHMS = ("fixed", "variable", "leading-edge")
# stream tags for seeds derived from the master seed
_SIM, _DSM = 11, 12


class RasterFormatError(ConfigError):
    def __init__(self, line: int, message: str):
        super().__init__(f"raster CSV line {line}: {message}")
        self.line = line


@dataclass
class DsmSection:
    # None: reuse the network tone scaled to the modulator range, without DC
    input: InputSignal | None = None
    integrator_initial: float = 0.0
    feedback_gain: float = 1.0

    def to_dict(self) -> dict:
        return {
            "input": None if self.input is None else self.input.to_dict(),
            "integrator_initial": self.integrator_initial,
            "feedback_gain": self.feedback_gain,
        }


@dataclass
class ExperimentConfig:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    input: InputSignal = field(default_factory=InputSignal)
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)
    objective: ObjectiveParams = field(default_factory=ObjectiveParams)
    objective_version: str = "v2"
    # rescale C once so random genomes average a separation addend of 1
    auto_calibrate_c: bool = True
    ga: GaConfig = field(default_factory=GaConfig.desk)
    postproc: AccumulatorConfig = field(default_factory=AccumulatorConfig)
    dsm: DsmSection = field(default_factory=DsmSection)
    slope_band: tuple[float, float] = (1000.0, 10000.0)
    master_seed: int = 0
    out_dir: str = "out"

    def __post_init__(self):
        if self.objective_version not in ("v1", "v2"):
            raise ConfigError(f"objective_version: must be 'v1' or 'v2', got {self.objective_version!r}")
        if self.network.n_neurons**2 != self.ga.n_genes:
            raise ConfigError(
                f"ga.n_genes: must equal network.n_neurons**2 = {self.network.n_neurons**2}, got {self.ga.n_genes}"
            )
        if int(self.master_seed) != self.master_seed or self.master_seed < 0:
            raise ConfigError(f"master_seed: must be a non-negative integer, got {self.master_seed!r}")
        self.slope_band = tuple(float(v) for v in self.slope_band)
        self.ga.master_seed = int(self.master_seed)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "network": self.network.to_dict(),
            "input": self.input.to_dict(),
            "analysis": self.analysis.to_dict(),
            "objective": self.objective.to_dict(),
            "objective_version": self.objective_version,
            "auto_calibrate_c": self.auto_calibrate_c,
            "ga": self.ga.to_dict(),
            "postproc": self.postproc.to_dict(),
            "dsm": self.dsm.to_dict(),
            "slope_band": list(self.slope_band),
            "master_seed": int(self.master_seed),
            "out_dir": self.out_dir,
        }

    def env(self) -> fitness.SimEnv:
        return fitness.SimEnv(network=self.network, signal=self.input, analysis=self.analysis)


def _section(name: str, cls, data, default_factory=None):
    if data is None:
        return default_factory() if default_factory else cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: expected an object, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}: unknown field")
    try:
        return cls(**data)
    except ConfigError as err:
        raise ConfigError(f"{name}: {err}") from None
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{name}: {err}") from None


def config_from_dict(d: dict) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("config root must be a JSON object")
    version = d.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: unsupported value {version!r}")
    top = {f.name for f in fields(ExperimentConfig)} | {"schema_version"}
    unknown = sorted(set(d) - top)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown field")
    dsm = d.get("dsm") or {}
    if dsm.get("input") is not None:
        dsm = dict(dsm, input=_section("dsm.input", InputSignal, dsm["input"]))
    ga = dict(d.get("ga") or GaConfig.desk().to_dict())
    if "reevaluation_schedule" in ga:
        ga["reevaluation_schedule"] = {int(k): int(v) for k, v in ga["reevaluation_schedule"].items()}
    kwargs = dict(
        network=_section("network", NetworkConfig, d.get("network")),
        input=_section("input", InputSignal, d.get("input")),
        analysis=_section("analysis", AnalysisSettings, d.get("analysis")),
        objective=_section("objective", ObjectiveParams, d.get("objective")),
        ga=_section("ga", GaConfig, ga),
        postproc=_section("postproc", AccumulatorConfig, d.get("postproc")),
        dsm=_section("dsm", DsmSection, dsm),
    )
    for key in ("objective_version", "auto_calibrate_c", "slope_band", "master_seed", "out_dir"):
        if key in d:
            kwargs[key] = d[key]
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON at line {err.lineno}: {err.msg}") from None
    return config_from_dict(data)


def apply_overrides(cfg: ExperimentConfig, seed=None, preset=None, out=None) -> ExperimentConfig:
    d = cfg.to_dict()
    if preset is not None:
        ga = GaConfig.desk() if preset == "desk" else GaConfig.paper()
        ga.n_genes = cfg.ga.n_genes
        ga.n_workers = cfg.ga.n_workers
        d["ga"] = ga.to_dict()
    if seed is not None:
        d["master_seed"] = int(seed)
    if out is not None:
        d["out_dir"] = str(out)
    return config_from_dict(d)


def _digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def config_hash(cfg: ExperimentConfig) -> str:
    d = cfg.to_dict()
    d.pop("out_dir")
    return _digest(d)


def network_hash(network: NetworkConfig) -> str:
    """Identity of everything a weight matrix is only meaningful with."""
    d = network.to_dict()
    d.pop("feedback_weights")
    return _digest(d)


def provenance(cfg: ExperimentConfig) -> dict:
    return {
        "config_hash": config_hash(cfg),
        "master_seed": int(cfg.master_seed),
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
    }


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def save_genome(path, weights: np.ndarray, network: NetworkConfig) -> None:
    write_json(path, {"network_hash": network_hash(network), "weights": np.asarray(weights).tolist()})


def load_genome(path, network: NetworkConfig) -> np.ndarray:
    data = json.loads(Path(path).read_text())
    if data.get("network_hash") != network_hash(network):
        raise ConfigError(f"{path}: genome was optimized for a different network configuration")
    w = np.asarray(data["weights"], dtype=np.float64)
    if w.shape != (network.n_neurons, network.n_neurons):
        raise ConfigError(f"{path}: weight matrix has shape {w.shape}")
    return w


def write_raster_csv(path, raster: SpikeRaster) -> None:
    header = "t,summed," + ",".join(f"f{i}" for i in range(raster.n_neurons))
    rows = np.column_stack([np.arange(raster.n_steps), raster.summed, raster.per_neuron.T])
    np.savetxt(path, rows, delimiter=",", header=header, comments="", fmt="%d")


def read_raster_csv(path, dt: float) -> SpikeRaster:
    """Parse ``t,summed,f0..f{N-1}``; every problem is reported with its line number."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["t", "summed"] or len(header) < 3:
            raise RasterFormatError(1, "header must be t,summed,f0,...")
        n = len(header) - 2
        if header[2:] != [f"f{i}" for i in range(n)]:
            raise RasterFormatError(1, "neuron columns must be named f0, f1, ...")
        rows = []
        for line, rec in enumerate(reader, start=2):
            if len(rec) != n + 2:
                raise RasterFormatError(line, f"expected {n + 2} fields, got {len(rec)}")
            try:
                vals = [int(v) for v in rec]
            except ValueError:
                raise RasterFormatError(line, "non-integer field") from None
            if vals[0] != line - 2:
                raise RasterFormatError(line, f"step index {vals[0]} out of sequence")
            if any(v not in (0, 1) for v in vals[2:]):
                raise RasterFormatError(line, "neuron outputs must be 0 or 1")
            if vals[1] != sum(vals[2:]):
                raise RasterFormatError(line, "summed does not equal the neuron sum")
            rows.append(vals[2:])
    if not rows:
        raise RasterFormatError(2, "no samples")
    return SpikeRaster(per_neuron=np.asarray(rows, dtype=np.uint8).T.copy(), dt=dt)


def derive_seed(cfg: ExperimentConfig, tag: int) -> int:
    return int(np.random.SeedSequence([cfg.master_seed, tag]).generate_state(2, np.uint64)[0])


def analyse(samples, cfg: ExperimentConfig, signal_frequency: float):
    """Spectrum and SNR of any output sequence sampled at the network time step."""
    a = cfg.analysis
    sp = spectral.power_spectrum(samples, 1.0 / cfg.network.dt, a.fft_size, a.window, a.n_segments)
    if not np.any(sp.power > 0):
        return sp, None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", spectral.BasebandEdgeWarning)
        rep = spectral.snr_db(sp, signal_frequency, a.baseband, a.exclusion_bins)
    return sp, rep


def pll_metric(spectrum, cfg: ExperimentConfig, signal_frequency: float) -> float:
    a = cfg.analysis
    return spectral.pll_skirt_metric(spectrum, signal_frequency, a.near_band, a.baseband, a.exclusion_bins)


def simulate_report(cfg: ExperimentConfig, weights=None, seed=None) -> dict:
    """One run: raster, spectrum and the summary numbers printed by ``simulate``."""
    network = cfg.network if weights is None else cfg.network.with_weights(weights)
    seed = derive_seed(cfg, _SIM) if seed is None else seed
    raster = netsim.simulate(network, cfg.input, cfg.analysis.n_steps, seed)
    freq = cfg.input.frequency
    sp, snr = analyse(raster.summed, cfg, freq)
    rates = netsim.rate_stats(raster)
    summary = {
        "snr": None,
        "osr": spectral.osr(rates.mean_rate, network.n_neurons, cfg.analysis.baseband[1]) if rates.mean_rate > 0 else None,
        "rate_stats": rates.to_dict(),
        "pll_metric": None,
        "pll_flag": None,
        "noise_slope_db_per_decade": None,
        "simulation_seed": seed,
    }
    if snr is not None:
        snr.rate_stats = rates
        summary["snr"] = snr.to_dict()
        try:
            pll = pll_metric(sp, cfg, freq)
            summary["pll_metric"] = pll
            summary["pll_flag"] = bool(pll >= cfg.analysis.pll_threshold)
        except spectral.InsufficientData:
            pass
        try:
            summary["noise_slope_db_per_decade"] = spectral.noise_slope_db_per_decade(sp, cfg.slope_band, freq)
        except spectral.InsufficientData:
            pass
    return {"raster": raster, "spectrum": sp, "summary": summary}


def calibrated_params(cfg: ExperimentConfig) -> ObjectiveParams:
    params = cfg.objective
    if cfg.objective_version == "v2" and cfg.auto_calibrate_c:
        c = fitness.calibrate_c(params, cfg.env(), cfg.ga.init_range, seed=[cfg.master_seed, 99])
        params = ObjectiveParams(**{**params.to_dict(), "c": c})
    return params


def optimize(cfg: ExperimentConfig, checkpoint_path=None, resume=None, stop_after=None, progress=None):
    params = calibrated_params(cfg)
    objective = fitness.Objective(params, cfg.env(), cfg.objective_version)
    report = evolve.run_ga(cfg.ga, objective, checkpoint_path, resume, stop_after, progress)
    return report, params


def postprocess(raster: SpikeRaster, algorithm: str, cfg: ExperimentConfig, signal_frequency: float) -> dict:
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
    before_sp, before = analyse(raster.summed, cfg, signal_frequency)
    trace = None
    if algorithm == "fixed":
        trace = postproc.accumulate_fixed(raster, cfg.postproc)
        out = trace.a_out
    elif algorithm == "variable":
        trace = postproc.accumulate_variable(raster, cfg.postproc)
        out = trace.a_out
    else:
        out = netsim.leading_edge_raster(raster).summed
    after_sp, after = analyse(out, cfg, signal_frequency)
    pseudo = 1.0 / (cfg.network.fire_pulse_steps * raster.dt)
    snr_b = None if before is None else before.snr_db
    snr_a = None if after is None else after.snr_db
    summary = {
        "algorithm": algorithm,
        "signal_frequency": signal_frequency,
        "snr_before_db": snr_b,
        "snr_after_db": snr_a,
        "snr_delta_db": None if snr_b is None or snr_a is None else snr_a - snr_b,
        "pseudofrequency_hz": pseudo,
        "pseudofrequency_band_power_before": spectral.band_power(before_sp, pseudo) if pseudo < before_sp.sample_rate / 2 else None,
        "pseudofrequency_band_power_after": spectral.band_power(after_sp, pseudo) if pseudo < after_sp.sample_rate / 2 else None,
        "output_mean": float(np.mean(out)),
        "overflow_steps": None if trace is None else trace.overflow_steps,
    }
    return {"trace": trace, "output": out, "spectrum": after_sp, "summary": summary}


def dsm_input(cfg: ExperimentConfig) -> InputSignal:
    if cfg.dsm.input is not None:
        return cfg.dsm.input
    depth = cfg.input.amplitude / cfg.input.dc_offset if cfg.input.dc_offset > 0 else cfg.input.amplitude
    return cfg.input.replace(amplitude=min(depth, 1.0), dc_offset=0.0)


def sweep_epsilon(raster: SpikeRaster, cfg: ExperimentConfig, signal_frequency: float, lo: float, hi: float, steps: int):
    if not (lo > 0 and hi >= lo):
        raise ConfigError(f"epsilon range must satisfy 0 < lo <= hi, got [{lo}, {hi}]")
    if steps < 1:
        raise ConfigError("steps must be >= 1")
    grid = np.linspace(lo, hi, steps) if steps > 1 else np.array([lo])
    rows = []
    for eps in grid:
        acc = AccumulatorConfig(**{**cfg.postproc.to_dict(), "epsilon_norm": float(eps)})
        trace = postproc.accumulate_variable(raster, acc)
        _, rep = analyse(trace.a_out, cfg, signal_frequency)
        rows.append(
            {
                "epsilon_norm": float(eps),
                "snr_db": None if rep is None else rep.snr_db,
                "overflow_steps": trace.overflow_steps,
                "no_signal": rep is None,
            }
        )
    ok = [r for r in rows if not r["no_signal"] and r["overflow_steps"] == 0]
    best = max(ok, key=lambda r: r["snr_db"]) if ok else None
    return rows, best


def _write_sweep_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epsilon_norm", "snr_db", "overflow_steps", "no_signal"])
        for r in rows:
            snr = "" if r["snr_db"] is None else f"{r['snr_db']:.10g}"
            w.writerow([f"{r['epsilon_norm']:.10g}", snr, r["overflow_steps"], int(r["no_signal"])])


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fmt(v, fmt=".2f"):
    return "n/a" if v is None else format(v, fmt)


def cmd_simulate(cfg: ExperimentConfig, args) -> None:
    out = _out_dir(cfg)
    weights = load_genome(args.genome, cfg.network) if args.genome else None
    res = simulate_report(cfg, weights)
    write_raster_csv(out / "raster.csv", res["raster"])
    res["spectrum"].to_csv(out / "spectrum.csv")
    s = res["summary"]
    write_json(out / "snr_report.json", {**s, "provenance": provenance(cfg)})
    snr = s["snr"]["snr_db"] if s["snr"] else None
    print(
        f"SNR {_fmt(snr)} dB  OSR {_fmt(s['osr'])}  mean rate {s['rate_stats']['mean_rate']:.1f} Hz  "
        f"PLL {'yes' if s['pll_flag'] else 'no'}"
    )


def cmd_optimize(cfg: ExperimentConfig, args) -> None:
    out = _out_dir(cfg)
    ck = out / "checkpoint.json"
    resume = evolve.load_checkpoint(ck) if args.resume and ck.exists() else None
    if resume is not None and resume["config"] != cfg.ga.canonical_dict():
        raise ConfigError("checkpoint was written by a different ga configuration")

    def progress(gen, pop):
        if args.verbose:
            print(f"generation {gen}: best {pop.fitness.min():.4f}", file=sys.stderr)

    report, params = optimize(cfg, ck, resume, args.stop_after, progress)
    n = cfg.network.n_neurons
    save_genome(out / "best_genome.json", report.best_genome.reshape(n, n), cfg.network)
    report.write_trace_csv(out / "fitness_trace.csv")
    body = report.to_dict()
    body.update(objective=params.to_dict(), objective_version=cfg.objective_version, provenance=provenance(cfg))
    write_json(out / "ga_report.json", body)
    print(
        f"generations {report.generations_completed}  best fitness {report.best_fitness:.4f}  "
        f"generation-0 median {report.median_at(0):.4f}  evaluations {report.evaluation_count}"
    )


def cmd_postprocess(cfg: ExperimentConfig, args) -> None:
    out = _out_dir(cfg)
    raster = read_raster_csv(args.raster, cfg.network.dt)
    freq = args.signal_frequency or cfg.input.frequency
    res = postprocess(raster, args.algorithm, cfg, freq)
    if res["trace"] is not None:
        res["trace"].to_csv(out / "trace.csv")
    else:
        np.savetxt(
            out / "trace.csv",
            np.column_stack([np.arange(raster.n_steps), res["output"]]),
            delimiter=",",
            header="t,summed",
            comments="",
            fmt="%d",
        )
    res["spectrum"].to_csv(out / "spectrum.csv")
    s = res["summary"]
    write_json(out / "postprocess_report.json", {**s, "provenance": provenance(cfg)})
    print(f"{args.algorithm}: SNR {_fmt(s['snr_before_db'])} -> {_fmt(s['snr_after_db'])} dB (delta {_fmt(s['snr_delta_db'], '+.2f')})")


def cmd_dsm(cfg: ExperimentConfig, args) -> None:
    out = _out_dir(cfg)
    n = cfg.analysis.n_steps
    sig = dsm_input(cfg)
    dcfg = DsmConfig(1.0 / cfg.network.dt, cfg.dsm.integrator_initial, cfg.dsm.feedback_gain)
    y = dsmref.dsm_simulate(dcfg, sig, n)
    np.savetxt(out / "bitstream.csv", np.column_stack([np.arange(n), y]), delimiter=",", header="t,y", comments="", fmt="%d")
    sp, rep = analyse(y, cfg, sig.frequency)
    sp.to_csv(out / "dsm_spectrum.csv")
    # paired network run on the same tone, duration-adjusted accumulator output
    raster = netsim.simulate(cfg.network, cfg.input, n, derive_seed(cfg, _DSM))
    trace = postproc.accumulate_variable(raster, cfg.postproc)
    net_sp, net_rep = analyse(trace.to_bipolar(), cfg, cfg.input.frequency)
    net_sp.to_csv(out / "network_spectrum.csv")
    summary = {
        "bitstream_mean": float(np.mean(y)),
        "dsm_snr_db": None if rep is None else rep.snr_db,
        "network_snr_db": None if net_rep is None else net_rep.snr_db,
        "alphabet_ok": bool(np.all(np.abs(y) == 1.0)),
        "provenance": provenance(cfg),
    }
    write_json(out / "dsm_report.json", summary)
    print(f"bitstream mean {summary['bitstream_mean']:.6f}  DSM SNR {_fmt(summary['dsm_snr_db'])} dB  network SNR {_fmt(summary['network_snr_db'])} dB")


def cmd_sweep_epsilon(cfg: ExperimentConfig, args) -> None:
    out = _out_dir(cfg)
    raster = read_raster_csv(args.raster, cfg.network.dt)
    t = cfg.network.fire_pulse_steps
    lo, hi = args.range if args.range else (0.1 * t, 2.0 * t)
    freq = args.signal_frequency or cfg.input.frequency
    rows, best = sweep_epsilon(raster, cfg, freq, lo, hi, args.steps)
    _write_sweep_csv(out / "epsilon_sweep.csv", rows)
    write_json(out / "epsilon_recommendation.json", {"recommended": best, "provenance": provenance(cfg)})
    if best is None:
        print("no epsilon_norm gave a signal without overflow")
    else:
        print(f"recommended epsilon_norm {best['epsilon_norm']:.4g} (SNR {best['snr_db']:.2f} dB)")


COMMANDS = {
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "postprocess": cmd_postprocess,
    "dsm": cmd_dsm,
    "sweep-epsilon": cmd_sweep_epsilon,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config JSON (defaults apply when omitted)")
    common.add_argument("--seed", type=int, help="override master_seed")
    common.add_argument("--out", help="override the output directory")
    common.add_argument("--preset", choices=("desk", "paper"), help="GA size preset")

    p = argparse.ArgumentParser(prog="neuroshape", description="Spiking-network noise shaping experiments")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="one simulation with full analysis")
    s.add_argument("--genome", help="best-genome JSON to use as feedback weights")

    o = sub.add_parser("optimize", parents=[common], help="run the genetic algorithm")
    o.add_argument("--resume", action="store_true", help="continue from out/checkpoint.json if present")
    o.add_argument("--stop-after", type=int, help="stop after this generation (checkpoint kept)")
    o.add_argument("-v", "--verbose", action="store_true")

    pp = sub.add_parser("postprocess", parents=[common], help="accumulator post-processing of a raster CSV")
    pp.add_argument("--raster", required=True)
    pp.add_argument("--algorithm", choices=ALGORITHMS, default="variable")
    pp.add_argument("--signal-frequency", type=float)

    sub.add_parser("dsm", parents=[common], help="first-order DSM reference run")

    sw = sub.add_parser("sweep-epsilon", parents=[common], help="grid search over epsilon_norm")
    sw.add_argument("--raster", required=True)
    sw.add_argument("--range", type=float, nargs=2, metavar=("LO", "HI"))
    sw.add_argument("--steps", type=int, default=20)
    sw.add_argument("--signal-frequency", type=float)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        cfg = apply_overrides(cfg, args.seed, args.preset, args.out)
        COMMANDS[args.command](cfg, args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationDiverged as err:
        print(f"simulation diverged: {err}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
