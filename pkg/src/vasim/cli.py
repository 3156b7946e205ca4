"""``vasim`` command line: generate, train, calibrate, simulate, report, filter-response.

Exit codes: 0 success, 2 usage or configuration error, 3 ran but an
acceptance threshold was not met.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import keyphrase as kp
from . import pipeline, plotting, report
from .defenses import Defense, DefenseConfig
from .forest import ForestModel
from .lifecycle import (DEVICE_PROFILES, FIELD_TARGETS, NoticeModel, PowerRates, Protocol,
                        TrialConfig, apply_targets_json, load_commands)
from .scenegen import generate_trace, load_params, trial_phone
from .simulation import SimulationReport, band_failures, simulate
from .trace import PhoneState, Placement, Scenario, TraceFormatError, save_trace
from .trigger import DEFAULT_GATE_DB, DEFAULT_THRESHOLD, VolumePolicy

EXIT_OK, EXIT_CONFIG, EXIT_THRESHOLD = 0, 2, 3

MOTION_FILE = "motion.forest.json"
OPPORTUNITY_FILE = "opportunity.forest.json"
NOTICE_FILE = "notice_model.json"


class ConfigError(Exception):
    pass


def data_path(name: str) -> Path:
    return Path(str(resources.files("vasim") / "data" / name))


def _existing(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"file not found: {p}")
    return p


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


# Shared option groups -------------------------------------------------------

def _add_inputs(p: argparse.ArgumentParser, *names: str) -> None:
    helps = {
        "params": ("--params", "scenario generator parameters JSON (default: shipped params.json)"),
        "policy": ("--policy", "volume policy JSON (default: shipped policy.json)"),
        "lexicon": ("--lexicon", "syllable lexicon JSON (default: shipped lexicon.json)"),
        "commands": ("--commands", "attack command list, one per line (default: shipped commands.txt)"),
        "targets": ("--targets", "per-scenario noticed/succeeded/trials JSON (default: shipped field_targets.json)"),
        "notice": ("--notice", "calibrated notice model JSON; calibrated from --seed when omitted"),
    }
    for n in names:
        flag, text = helps[n]
        p.add_argument(flag, metavar="FILE", help=text)


def _params(args):
    return load_params(_existing(args.params or data_path("params.json")))


def _policy(args) -> VolumePolicy:
    return VolumePolicy.load(_existing(args.policy or data_path("policy.json")))


def _lexicon(args) -> kp.Lexicon:
    return kp.Lexicon.load(_existing(args.lexicon or data_path("lexicon.json")))


def _commands(args):
    return load_commands(_existing(args.commands or data_path("commands.txt")))


def _targets(args):
    path = _existing(args.targets or data_path("field_targets.json"))
    return apply_targets_json(json.loads(path.read_text()))


def _notice(args, params, policy, calibration_trials: int) -> NoticeModel:
    if getattr(args, "notice", None):
        model = NoticeModel.load(_existing(args.notice))
        if not model.calibrated:
            raise ConfigError(f"{args.notice} holds an uncalibrated notice model")
        return model
    targets = _targets(args) if hasattr(args, "targets") else FIELD_TARGETS
    _log(f"calibrating notice model on {calibration_trials} traces per scenario")
    return pipeline.calibrated_notice(args.seed, params, policy, calibration_trials, targets)


def _out_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


# Subcommands ----------------------------------------------------------------

def cmd_generate(args) -> int:
    params, policy = _params(args), _policy(args)
    if args.dataset:
        if args.trials < 1:
            raise ConfigError("--trials must be >= 1")
        notice = _notice(args, params, policy, args.calibration_trials)
        ds = pipeline.labelled_dataset(notice, args.seed, args.trials, params, policy,
                                       args.minutes * 60.0)
        out = _out_dir(args.dataset)
        pipeline.save_dataset(ds, out)
        notice.save(out / NOTICE_FILE)
        _log(f"wrote {len(ds)} labelled traces to {out}")
        return EXIT_OK
    if not args.scenario or not args.out:
        raise ConfigError("single-trace mode needs --scenario and --out (or use --dataset)")
    scenario = Scenario.parse(args.scenario)
    if args.placement:
        phone = PhoneState(placement=Placement(args.placement))
    else:
        phone = trial_phone(0)
    trace = generate_trace(scenario, args.minutes * 60.0, phone, params[scenario], args.seed)
    save_trace(trace, args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    params = _params(args)
    ds = pipeline.load_dataset(_existing(args.data))
    out = _out_dir(args.out)
    t0 = time.perf_counter()
    models = pipeline.train_models(ds, params, args.seed, jobs=args.jobs)
    metrics = pipeline.evaluate_opportunity(ds, models.motion, args.k, args.seed, jobs=args.jobs)
    models.motion.save(out / MOTION_FILE)
    models.opportunity.save(out / OPPORTUNITY_FILE)
    doc = {"k": args.k, "seed": args.seed, "n": len(ds), **metrics.to_json()}
    pipeline.write_json(doc, out / "metrics.json")
    print(report.metrics_table(metrics), end="")
    _log(f"trained and cross-validated in {time.perf_counter() - t0:.1f} s")
    if args.min_f1 is not None and metrics.macro_f1 < args.min_f1:
        _log(f"macro F1 {metrics.macro_f1:.4f} below --min-f1 {args.min_f1}")
        return EXIT_THRESHOLD
    return EXIT_OK


def cmd_calibrate(args) -> int:
    params, policy = _params(args), _policy(args)
    model = pipeline.calibrated_notice(args.seed, params, policy, args.trials, _targets(args))
    model.save(args.out)
    for s in Scenario:
        print(f"({s.letter}) offset {model.scenario_offset[s]:+.3f} dB  "
              f"residual {model.residuals[s]:+.4f}  recognition {model.recognition[s]:.3f}")
    return EXIT_OK


def _trial_config(args, params, policy, notice, models: pipeline.Models) -> TrialConfig:
    defense = DefenseConfig(Defense(args.defense)) if args.defense else None
    return TrialConfig(
        models.opportunity, models.motion, notice, _commands(args), params=params, policy=policy,
        lexicon=_lexicon(args), capture_mode=kp.CaptureMode(args.capture),
        protocol=Protocol(args.protocol), threshold=args.threshold,
        window_seconds=args.window_seconds, max_windows=args.max_windows, gating=args.gating,
        gate_threshold=args.gate_threshold, sensing_rate=args.sensing_rate,
        power=PowerRates(), device=args.device, defense=defense,
    )


def _settings(args) -> dict:
    # Parallelism is deliberately absent: reports must not depend on --jobs.
    return {
        "seed": args.seed, "trials": args.trials, "protocol": args.protocol,
        "threshold": args.threshold, "window_seconds": args.window_seconds,
        "max_windows": args.max_windows, "gating": args.gating,
        "gate_threshold": args.gate_threshold, "sensing_rate": args.sensing_rate,
        "capture": args.capture, "defense": args.defense, "device": args.device,
        "scenarios": args.scenarios,
    }


def _write_report(rep: SimulationReport, out: Path) -> None:
    (out / "report.json").write_text(rep.dumps())
    (out / "trials.csv").write_text(rep.trials_csv())
    (out / "aggregate.csv").write_text(rep.aggregate_csv())
    aggs = rep.aggregates
    letters = [s.letter for s in aggs]
    rates = [a.success_rate for a in aggs.values()]
    (out / "success_rate.csv").write_text(report.xy_csv(letters, rates, ("scenario", "success_rate")))
    plotting.success_bars(letters, rates, [FIELD_TARGETS[s].success_rate for s in aggs],
                          out / "success_rate.png")


def cmd_simulate(args) -> int:
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    params, policy = _params(args), _policy(args)
    notice = _notice(args, params, policy, args.calibration_trials)
    if args.models:
        mdir = _existing(args.models)
        models = pipeline.Models(ForestModel.load(_existing(mdir / MOTION_FILE)),
                                 ForestModel.load(_existing(mdir / OPPORTUNITY_FILE)))
    else:
        _log(f"no --models given: labelling {args.train_trials} traces per scenario and training")
        ds = pipeline.labelled_dataset(notice, args.seed, args.train_trials, params, policy)
        models = pipeline.train_models(ds, params, args.seed, jobs=args.jobs)
    scenarios = [Scenario.parse(s) for s in args.scenarios.split(",")]
    config = _trial_config(args, params, policy, notice, models)
    t0 = time.perf_counter()
    rep = simulate(config, args.trials, args.seed, scenarios, args.jobs, _settings(args))
    _log(f"simulated {len(rep.records)} trials in {time.perf_counter() - t0:.1f} s")
    out = _out_dir(args.out)
    _write_report(rep, out)
    notice.save(out / NOTICE_FILE)
    print(report.success_table(rep.aggregates), end="")
    if args.check:
        bad = band_failures(rep.aggregates)
        for line in bad:
            _log(f"outside band: {line}")
        if bad:
            return EXIT_THRESHOLD
    return EXIT_OK


def _filter_outputs(out: Path, order: int, cutoff: float, rate: float) -> None:
    freqs, mag = report.filter_response_data(order, cutoff, rate)
    (out / "filter_response.csv").write_text(report.xy_csv(freqs, mag, ("freq_hz", "magnitude_db")))
    plotting.filter_response(freqs, mag, cutoff, out / "filter_response.png")


def cmd_filter_response(args) -> int:
    out = _out_dir(args.out)
    _filter_outputs(out, args.order, args.cutoff, args.rate)
    print(f"wrote {out / 'filter_response.csv'} and {out / 'filter_response.png'}")
    return EXIT_OK


def cmd_report(args) -> int:
    out = _out_dir(args.out)
    did = False
    if args.input:
        doc = json.loads(_existing(Path(args.input) / "report.json").read_text())
        print(f"{'scenario':<20}{'trials':>7}{'launched':>9}{'succeeded':>10}{'rate':>8}")
        for a in doc["aggregates"]:
            rate = "-" if a["success_rate"] is None else f"{100 * a['success_rate']:.1f}%"
            print(f"({a['scenario']}) {a['name']:<16}{a['trials']:>7}{a['launched']:>9}"
                  f"{a['succeeded']:>10}{rate:>8}")
        led = doc["ledger"]
        print(f"P3 {led['p3_mah_per_minute']:.3f} mAh/min over {led['p3_minutes']:.1f} min; "
              f"mean {led['mean_power_per_trial_mah']:.2f} mAh per trial")
        letters = [a["scenario"] for a in doc["aggregates"]]
        rates = [a["success_rate"] for a in doc["aggregates"]]
        refs = [FIELD_TARGETS[Scenario.parse(x)].success_rate for x in letters]
        plotting.success_bars(letters, rates, refs, out / "success_rate.png")
        (out / "success_rate.csv").write_text(report.xy_csv(letters, rates, ("scenario", "success_rate")))
        did = True
    if args.filter_response:
        _filter_outputs(out, 4, 5.0, 50.0)
        print(f"wrote {out / 'filter_response.csv'}")
        did = True
    if args.policy_curve:
        policy = _policy(args)
        amb, act, cmd = report.policy_curve(policy)
        (out / "policy_activation.csv").write_text(report.xy_csv(amb, act, ("ambient_db", "activation_db")))
        (out / "policy_command.csv").write_text(report.xy_csv(amb, cmd, ("ambient_db", "command_db")))
        plotting.volume_policy(amb, act, cmd, np.array(policy.anchors), out / "volume_policy.png")
        print(f"wrote {out / 'volume_policy.png'}")
        did = True
    if args.features:
        if not args.data or not args.models:
            raise ConfigError("--features needs --data and --models")
        ds = pipeline.load_dataset(_existing(args.data))
        motion = ForestModel.load(_existing(Path(args.models) / MOTION_FILE))
        pipeline.write_feature_csv(ds, motion, out / "features.csv")
        X, y = pipeline.feature_matrix(ds.items, motion)
        plotting.feature_scatter(X[:, 2], X[:, 4], y, "noise mean (dB)", "light mean (lux)",
                                 out / "features.png")
        print(f"wrote {out / 'features.csv'}")
        did = True
    if not did:
        raise ConfigError("nothing to report: give --input, --filter-response, --policy-curve or --features")
    return EXIT_OK


# Parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vasim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    g = sub.add_parser("generate", help="synthesize one sensor trace or a labelled dataset")
    g.add_argument("--seed", type=int, required=True, help="random seed (required)")
    g.add_argument("--scenario", help="scenario letter a-f or name (single-trace mode)")
    g.add_argument("--minutes", type=float, default=3.0, help="trace length in minutes (default 3)")
    g.add_argument("--placement", choices=[p.value for p in Placement],
                   help="phone placement for a single trace (default Pocket)")
    g.add_argument("--out", help="output trace CSV (single-trace mode)")
    g.add_argument("--dataset", metavar="DIR", help="write a labelled dataset directory instead")
    g.add_argument("--trials", type=int, default=200, help="dataset traces per scenario (default 200)")
    g.add_argument("--calibration-trials", type=int, default=1000,
                   help="traces per scenario when calibrating the labeller (default 1000)")
    _add_inputs(g, "params", "policy", "targets", "notice")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train motion and opportunity forests, cross-validate")
    t.add_argument("--data", required=True, metavar="DIR", help="dataset directory with labels.csv")
    t.add_argument("--k", type=int, default=20, help="cross-validation folds (default 20)")
    t.add_argument("--seed", type=int, required=True, help="random seed (required)")
    t.add_argument("--out", default="models", metavar="DIR", help="model output directory (default models)")
    t.add_argument("--jobs", type=int, default=1, help="worker processes for tree building")
    t.add_argument("--min-f1", type=float, help="exit 3 when macro F1 falls below this value")
    _add_inputs(t, "params")
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("calibrate", help="fit the notice model to per-scenario outcomes")
    c.add_argument("--seed", type=int, required=True, help="random seed (required)")
    c.add_argument("--trials", type=int, default=1000, help="traces per scenario (default 1000)")
    c.add_argument("--out", default=NOTICE_FILE, help=f"output JSON (default {NOTICE_FILE})")
    _add_inputs(c, "params", "policy", "targets")
    c.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("simulate", help="run attack trials and write the report")
    s.add_argument("--seed", type=int, required=True, help="random seed (required)")
    s.add_argument("--trials", type=int, default=1000, help="trials per scenario (default 1000)")
    s.add_argument("--scenarios", default="a,b,c,d,e,f", help="comma-separated scenario letters")
    s.add_argument("--models", metavar="DIR", help=f"directory with {MOTION_FILE} and {OPPORTUNITY_FILE}; "
                   "trained from --seed when omitted")
    s.add_argument("--train-trials", type=int, default=200,
                   help="traces per scenario when training models in-process (default 200)")
    s.add_argument("--calibration-trials", type=int, default=1000,
                   help="traces per scenario when calibrating in-process (default 1000)")
    s.add_argument("--protocol", choices=[p.value for p in Protocol], default=Protocol.Collection.value,
                   help="collection: play once per trial; ied: play only on a launch decision")
    s.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD,
                   help=f"launch threshold on P(success) (default {DEFAULT_THRESHOLD})")
    s.add_argument("--window-seconds", type=float, default=180.0, help="sensing window length (default 180)")
    s.add_argument("--max-windows", type=int, default=20, help="windows before an ied trial gives up")
    s.add_argument("--gating", action="store_true", help="enable noise-gated standby sensing")
    s.add_argument("--gate-threshold", type=float, default=DEFAULT_GATE_DB,
                   help=f"standby wake level in dB (default {DEFAULT_GATE_DB})")
    s.add_argument("--sensing-rate", type=float, default=50.0, help="sensor rate in Hz, 10-50 (default 50)")
    s.add_argument("--capture", choices=[m.value for m in kp.CaptureMode], default="WordBased",
                   help="activation keyword capture mode")
    s.add_argument("--defense", choices=[d.value for d in Defense], help="countermeasure to simulate")
    s.add_argument("--device", choices=sorted(DEVICE_PROFILES), default="galaxy-s9",
                   help="device resource profile")
    s.add_argument("--jobs", type=int, default=1, help="worker processes; output does not depend on it")
    s.add_argument("--check", action="store_true",
                   help="exit 3 when a success rate falls outside its field-study band")
    s.add_argument("--out", default="sim-out", metavar="DIR", help="report directory (default sim-out)")
    _add_inputs(s, "params", "policy", "lexicon", "commands", "targets", "notice")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("report", help="tables and figures from saved artifacts")
    r.add_argument("--input", metavar="DIR", help="simulate output directory to summarise")
    r.add_argument("--filter-response", action="store_true", help="accelerometer filter magnitude response")
    r.add_argument("--policy-curve", action="store_true", help="volume policy curves")
    r.add_argument("--features", action="store_true", help="feature matrix CSV and scatter plot")
    r.add_argument("--data", metavar="DIR", help="dataset directory for --features")
    r.add_argument("--models", metavar="DIR", help="model directory for --features")
    r.add_argument("--out", default="report-out", metavar="DIR", help="output directory (default report-out)")
    _add_inputs(r, "policy")
    r.set_defaults(func=cmd_report)

    f = sub.add_parser("filter-response", help="Butterworth magnitude response as x,y CSV and PNG")
    f.add_argument("--order", type=int, default=4, choices=[2, 4, 6, 8], help="filter order (default 4)")
    f.add_argument("--cutoff", type=float, default=5.0, help="cutoff in Hz (default 5)")
    f.add_argument("--rate", type=float, default=50.0, help="sample rate in Hz (default 50)")
    f.add_argument("--out", default="filter-out", metavar="DIR", help="output directory (default filter-out)")
    f.set_defaults(func=cmd_filter_response)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, TraceFormatError, json.JSONDecodeError,
            KeyError, ValueError) as e:
        print(f"vasim {args.command}: error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
