import argparse
import logging
import math
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from erspin.analysis.fits import FIT_KINDS
from erspin.analysis.psd import read_cpmg_runs, read_psd, reconstruct_psd
from erspin.analysis.traces import read_decay_trace
from erspin.decoherence.models import T1Params
from erspin.decoherence.monte_carlo import BathSpec, default_total_times, sudden_jump_monte_carlo
from erspin.errors import ConfigValidationError, ErspinError
from erspin.integration.outputs import OutputWriter
from erspin.integration.run_config import RunConfig, RuntimeSettings, load_config
from erspin.powder.orientations import OrientationScheme, orientation_set
from erspin.powder.spectrum import edfs
from erspin.sequences.filters import (
    center_frequency, filter_function, passband_width, predict_coherence,
)
from erspin.sequences.pulses import (
    PulseSequence, check_spacing, cpmg, hahn, make_sequence, read_sequence_table, write_sequence_table, xy8,
)
from erspin.sequences.rabi import rabi_nutation
from erspin.sequences.toggling import generate_ratio_sequence, toggling_frame
from erspin.spin.hamiltonian import level_diagram
from erspin.spin.system import FieldPoint
from erspin.spin.transitions import find_transitions

logger = logging.getLogger(__name__)

SEQUENCE_KINDS = ("hahn", "cpmg", "xy8", "stimulated")
DEFAULT_TRANSITION_WINDOW = 50e6


def _ratio_value(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"ratio must be a number or 'inf', got {text!r}")


def _seed_value(text: str) -> int:
    seed = int(text)
    if not 0 <= seed < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return seed


class CommandConfigurator:
    """Builds the argument parser and runs one subcommand per process."""

    def __init__(self, settings: Optional[RuntimeSettings] = None):
        self.settings = settings or RuntimeSettings()
        self.parser = argparse.ArgumentParser(
            prog="erspin", description="Pulsed-ESR modelling of Er:Y2O3 and related Kramers ions")
        self._handlers: Dict[str, Callable[[argparse.Namespace, RunConfig], List[Path]]] = {}

    # ---------------- PUBLIC ----------------

    def configure_commands(self) -> argparse.ArgumentParser:
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument("--config", help="YAML run configuration")
        common.add_argument("--out", help="output directory")
        common.add_argument("--seed", type=_seed_value, help="seed for stochastic commands")
        sub = self.parser.add_subparsers(dest="command", required=True)

        levels = sub.add_parser("levels", parents=[common], help="tracked energy levels against field")
        levels.add_argument("--b-min", type=float)
        levels.add_argument("--b-max", type=float)
        levels.add_argument("--points", type=int)
        levels.add_argument("--site")
        self._handlers["levels"] = self._levels

        spectrum = sub.add_parser("edfs", parents=[common], help="powder echo-detected field sweep")
        spectrum.add_argument("--b-min", type=float)
        spectrum.add_argument("--b-max", type=float)
        spectrum.add_argument("--points", type=int)
        spectrum.add_argument("--orientations", type=int)
        self._handlers["edfs"] = self._edfs

        transitions = sub.add_parser("transitions", parents=[common], help="transitions near f_probe")
        transitions.add_argument("--field", type=float, help="field magnitude in T")
        transitions.add_argument("--window", type=float, default=DEFAULT_TRANSITION_WINDOW, help="Hz")
        transitions.add_argument("--site")
        self._handlers["transitions"] = self._transitions

        rabi = sub.add_parser("rabi", parents=[common], help="Rabi nutation against pulse length")
        rabi.add_argument("--g-transverse", type=float, default=7.5)
        rabi.add_argument("--b1", type=float, help="drive field amplitude in T")
        rabi.add_argument("--t-max", type=float, default=10e-6)
        rabi.add_argument("--points", type=int, default=201)
        self._handlers["rabi"] = self._rabi

        filters = sub.add_parser("filter", parents=[common], help="filter function of a sequence")
        self._add_sequence_arguments(filters)
        self._handlers["filter"] = self._filter

        ratio = sub.add_parser("ratio", parents=[common], help="generate and score a decoupling sequence")
        ratio.add_argument("--ratio", type=_ratio_value, required=True, help="target ratio, e.g. 9 or inf")
        ratio.add_argument("--spacing", type=float, required=True, help="base pulse spacing in s")
        ratio.add_argument("--budget", type=int, required=True, help="maximum number of pulses")
        self._handlers["ratio"] = self._ratio

        decay = sub.add_parser("simulate-decay", parents=[common], help="sudden-jump Monte Carlo echo decay")
        decay.add_argument("--kind", choices=("hahn", "cpmg", "xy8"), default="hahn")
        decay.add_argument("--n", type=int, default=8, help="CPMG pulse count")
        decay.add_argument("--blocks", type=int, default=1, help="XY8 block count")
        decay.add_argument("--trials", type=int)
        decay.add_argument("--points", type=int, default=24)
        self._handlers["simulate-decay"] = self._simulate_decay

        fit = sub.add_parser("fit", parents=[common], help="fit a measured trace")
        fit.add_argument("kind", choices=sorted(FIT_KINDS))
        fit.add_argument("path", help="CSV trace")
        fit.add_argument("--fix-n", type=float, help="hold the stretch factor of a hahn fit")
        fit.add_argument("--r0", type=float, default=0.0, help="T1 fit: direct constant rate (1/s)")
        fit.add_argument("--r-ff", type=float, default=0.0, help="T1 fit: flip-flop rate (1/s)")
        fit.add_argument("--r-d", type=float, default=0.0, help="T1 fit: direct-process rate (1/s)")
        fit.add_argument("--t2-id", type=float, default=math.inf, help="instantaneous-diffusion limit (s)")
        self._handlers["fit"] = self._fit

        psd = sub.add_parser("psd", parents=[common], help="noise PSD from CPMG coherence times")
        psd.add_argument("path", help="CSV with n_pulses,t_sep_seconds,t2_seconds")
        self._handlers["psd"] = self._psd

        predict = sub.add_parser("predict-t2", parents=[common], help="coherence from a PSD and a sequence")
        predict.add_argument("--psd", required=True, help="CSV with frequency_Hz,S_rad2_per_s")
        self._add_sequence_arguments(predict)
        predict.add_argument("--t-max", type=float, required=True, help="longest total time in s")
        predict.add_argument("--points", type=int, default=50)
        self._handlers["predict-t2"] = self._predict_t2

        return self.parser

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        args = self.parser.parse_args(argv)
        try:
            config = load_config(args.config)
            written = self._handlers[args.command](args, config)
        except ErspinError as e:
            logger.error(f"Command failed | command={args.command} | error={type(e).__name__} | {e}")
            return e.exit_code
        except Exception as e:
            logger.exception(f"Unexpected failure | command={args.command} | error={e}")
            return 1
        logger.info(f"Command completed | command={args.command} | files={len(written)}")
        return 0

    # ---------------- HELPERS ----------------

    def _writer(self, args: argparse.Namespace, config: RunConfig, seed: Optional[int] = None) -> OutputWriter:
        out = args.out or config.paths.out or self.settings.output_dir
        arguments = {k: v for k, v in vars(args).items() if k not in ("command", "config", "out")}
        return OutputWriter(out, args.command, arguments, config, seed)

    @staticmethod
    def _add_sequence_arguments(parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--kind", choices=SEQUENCE_KINDS, default="cpmg")
        parser.add_argument("--table", help="pulse table (time_us angle_deg phase_deg)")
        parser.add_argument("--tau", type=float, default=100e-6, help="hahn/stimulated spacing in s")
        parser.add_argument("--n", type=int, default=8, help="CPMG pulse count")
        parser.add_argument("--t-sep", type=float, default=20e-6, help="CPMG/XY8 pulse spacing in s")
        parser.add_argument("--blocks", type=int, default=1, help="XY8 block count")
        parser.add_argument("--t-w", type=float, default=1e-3, help="stimulated-echo waiting time in s")

    @staticmethod
    def _sequence(args: argparse.Namespace, config: RunConfig) -> PulseSequence:
        min_separation = config.experiment.min_separation
        if args.table:
            seq = read_sequence_table(args.table)
            check_spacing(seq, min_separation)
            return seq
        params = {
            "hahn": {"tau": args.tau},
            "cpmg": {"n": args.n, "t_sep": args.t_sep},
            "xy8": {"blocks": args.blocks, "t_sep": args.t_sep},
            "stimulated": {"tau": args.tau, "t_w": args.t_w},
        }[args.kind]
        return make_sequence(args.kind, min_separation=min_separation, **params)

    @staticmethod
    def _field_grid(args: argparse.Namespace, config: RunConfig) -> np.ndarray:
        experiment = config.experiment
        low = experiment.field_min if args.b_min is None else args.b_min
        high = experiment.field_max if args.b_max is None else args.b_max
        points = experiment.field_points if args.points is None else args.points
        if high <= low:
            raise ConfigValidationError("--b-max", "must exceed the lower field bound")
        if points < 2:
            raise ConfigValidationError("--points", "at least two field points are required")
        return np.linspace(low, high, points)

    # ---------------- SPIN LEVELS ----------------

    def _levels(self, args: argparse.Namespace, config: RunConfig) -> List[Path]:
        sys = config.site(args.site)
        fields = self._field_grid(args, config)
        sweep = level_diagram(sys, config.experiment.field_direction, fields)
        frame = pd.DataFrame({"field_T": fields})
        for k in range(sweep.energies.shape[1]):
            frame[f"level_{k:02d}_Hz"] = sweep.energies[:, k]
        return [self._writer(args, config).write_frame("levels.csv", frame)]

    def _transitions(self, args: argparse.Namespace, config: RunConfig) -> List[Path]:
        experiment = config.experiment
        sys = config.site(args.site)
        magnitude = experiment.field_magnitude if args.field is None else args.field
        B = FieldPoint.along(experiment.field_direction, magnitude)
        found = find_transitions(sys, B, experiment.f_probe, args.window, temperature=experiment.temperature)
        frame = pd.DataFrame([{
            "level_lo": t.level_lo,
            "level_hi": t.level_hi,
            "frequency_Hz": t.frequency,
            "dE_dB_Hz_per_T": t.dE_dB,
            "g_eff": t.g_eff,
            "drive_strength": t.drive_strength,
            "thermal_weight": t.thermal_weight,
            "near_degenerate": t.near_degenerate,
        } for t in found], columns=["level_lo", "level_hi", "frequency_Hz", "dE_dB_Hz_per_T", "g_eff",
                                    "drive_strength", "thermal_weight", "near_degenerate"])
        return [self._writer(args, config).write_frame("transitions.csv", frame)]

    # ---------------- POWDER ----------------

    def _edfs(self, args: argparse.Namespace, config: RunConfig) -> List[Path]:
        experiment, simulation = config.experiment, config.simulation
        fields = self._field_grid(args, config)
        count = simulation.orientations if args.orientations is None else args.orientations
        scheme = OrientationScheme(simulation.orientation_scheme)
        seed = None
        if scheme is OrientationScheme.QUASI_RANDOM:
            seed = config.require_seed(args.seed)
        orientations = orientation_set(count, scheme, seed=seed)

        spectrum = edfs(config.site_specs(), experiment.f_probe, fields, orientations,
                        experiment.temperature, experiment.excitation_bandwidth, n_jobs=self.settings.n_jobs)
        writer = self._writer(args, config, seed)
        branches = pd.DataFrame(
            [{"site": a.site, "g_group": a.g_group, "b_min_T": a.b_min, "b_max_T": a.b_max}
             for a in spectrum.annotations],
            columns=["site", "g_group", "b_min_T", "b_max_T"],
        )
        return [
            writer.write_frame("edfs.csv", pd.DataFrame({"field_T": spectrum.fields,
                                                         "amplitude": spectrum.amplitude})),
            writer.write_frame("edfs_branches.csv", branches),
        ]

    # ---------------- SEQUENCES ----------------

    def _rabi(self, args: argparse.Namespace, config: RunConfig) -> List[Path]:
        b1 = config.experiment.b1 if args.b1 is None else args.b1
        lengths = np.linspace(0.0, args.t_max, args.points)
        curve = rabi_nutation(args.g_transverse, b1, lengths)
        logger.info(f"Rabi frequency | g_transverse={args.g_transverse} | b1={b1:.4g}T | "
                    f"frequency={curve.rabi_frequency:.6g}Hz")
        frame = pd.DataFrame({"pulse_length_s": curve.pulse_lengths, "amplitude": curve.amplitude})
        return [self._writer(args, config).write_frame("rabi.csv", frame)]

    def _filter(self, args: argparse.Namespace, config: RunConfig) -> List[Path]:
        seq = self._sequence(args, config)
        fn = filter_function(seq)
        summary = pd.DataFrame([{
            "center_frequency_Hz": center_frequency(fn),
            "passband_Hz": passband_width(fn),
            "parseval_ratio": fn.parseval_ratio,
            "dc_limit": fn.dc_limit,
        }])
        writer = self._writer(args, config)
        return [
            writer.write_frame("filter.csv", pd.DataFrame({"frequency_Hz": fn.frequencies,
                                                           "weight_s2": fn.weight})),
            writer.write_frame("filter_summary.csv", summary),
        ]

    def _ratio(self, args: argparse.Namespace, config: RunConfig) -> List[Path]:
        seq = generate_ratio_sequence(args.ratio, args.spacing, args.budget, config.experiment.min_separation)
        report = toggling_frame(seq)
        writer = self._writer(args, config)
        name = "ratio_inf.txt" if math.isinf(args.ratio) else f"ratio_{args.ratio:g}.txt"
        table = writer.adopt(write_sequence_table(seq, writer.out_dir / name))
        scores = pd.DataFrame([{
            "target_ratio": args.ratio,
            "achieved_ratio": report.ratio,
            "pulses": len(seq.pulses),
            "total_time_s": seq.total_time,
            "disorder_score": report.disorder_score,
            "zz_score": report.zz_score,
            "flip_flop_score": report.flip_flop_score,
            "interaction_score": report.interaction_score,
        }])
        return [table, writer.write_frame("ratio_scores.csv", scores)]

    # ---------------- DECOHERENCE ----------------

    def _simulate_decay(self, args: argparse.Namespace, config: RunConfig) -> List[Path]:
        simulation = config.simulation
        seed = config.require_seed(args.seed)
        template = {
            "hahn": lambda: hahn(0.5),
            "cpmg": lambda: cpmg(args.n, 1.0 / args.n),
            "xy8": lambda: xy8(args.blocks, 1.0 / (8 * args.blocks)),
        }[args.kind]()
        bath = BathSpec(simulation.flip_rate, simulation.gamma_sd, simulation.bath_size)
        trials = simulation.trials if args.trials is None else args.trials
        trace = sudden_jump_monte_carlo(bath, template, trials, seed,
                                        total_times=default_total_times(bath, args.points),
                                        chunk_size=simulation.chunk_size, n_jobs=self.settings.n_jobs)
        frame = pd.DataFrame({"t_seconds": trace.abscissa, "amplitude": trace.amplitude, "sigma": trace.sigma})
        return [self._writer(args, config, seed).write_frame("decay.csv", frame)]

    # ---------------- ANALYSIS ----------------

    def _fit(self, args: argparse.Namespace, config: RunConfig) -> List[Path]:
        trace = read_decay_trace(args.path, args.kind)
        options = {}
        if args.kind == "hahn" and args.fix_n is not None:
            options["fix_n"] = args.fix_n
        elif args.kind == "t1-temperature":
            options["frequency"] = config.experiment.f_probe
        elif args.kind == "t2-temperature":
            options["t1_params"] = T1Params(args.r0, args.r_ff, args.r_d, config.experiment.f_probe)
            options["t2_id"] = args.t2_id
            options["field"] = config.experiment.field_magnitude
        result = FIT_KINDS[args.kind](trace, **options)

        logger.info(f"Fit completed | kind={args.kind} | " + " | ".join(
            f"{n}={v:.6g}±{s:.2g}" for n, v, s in zip(result.names, result.values, result.sigmas)))
        writer = self._writer(args, config)
        stem = f"fit_{args.kind}"
        return [
            writer.write_frame(f"{stem}.csv", result.to_frame()),
            writer.write_text(f"{stem}.txt", result.to_text()),
            writer.write_text(f"{stem}.json", result.to_json() + "\n"),
        ]

    def _psd(self, args: argparse.Namespace, config: RunConfig) -> List[Path]:
        psd = reconstruct_psd(read_cpmg_runs(args.path))
        return [self._writer(args, config).write_frame("psd.csv", psd.to_frame())]

    def _predict_t2(self, args: argparse.Namespace, config: RunConfig) -> List[Path]:
        psd = read_psd(args.psd)
        seq = self._sequence(args, config)
        if args.t_max <= 0 or args.points < 1:
            raise ConfigValidationError("--t-max", "total times must be positive")
        times = np.linspace(0.0, args.t_max, args.points + 1)[1:]
        curve = predict_coherence(filter_function(seq), psd, times)
        t2 = curve.t2()
        logger.info(f"Predicted coherence | sequence={seq.label} | "
                    f"t2={'not reached' if t2 is None else f'{t2:.6g}s'}")
        frame = pd.DataFrame({"total_time_s": curve.times, "coherence": curve.coherence})
        return [self._writer(args, config).write_frame("predict_t2.csv", frame)]


def configure_commands(settings: Optional[RuntimeSettings] = None) -> CommandConfigurator:
    configurator = CommandConfigurator(settings)
    configurator.configure_commands()
    return configurator
