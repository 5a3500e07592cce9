"""Command-line entry point: ``portiloop-sim {synth,train,simulate,sweep,pmbo}``.

Exit codes: 0 success, 2 input or configuration error, 3 runtime or numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config, parse_value
from .detector.stream import DetectorConfig, run_stream
from .evaluation.metrics import delay_distribution, samplewise_prf, stimulation_prf
from .evaluation.report import build_report, write_csv, write_json
from .evaluation.sweep import default_thresholds, threshold_sweep
from .exceptions import PortiloopError, SearchExhaustedError, TrainingError
from .nn.network import Network, count_parameters
from .nn.serialize import load_weights, save_weights
from .nn.train import train, validation_f1
from .pmbo.search import run_search
from .pmbo.space import default_space
from .pmbo.surrogate import SurrogateObjective
from .synth.dataset import SequenceDataset, prepare_inputs, split_subjects
from .synth.generator import generate_dataset
from .synth.io import load_recording, save_recording

__all__ = ["main", "build_parser"]

log = logging.getLogger("portiloop_sim")

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="portiloop-sim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value configuration file")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")

    sub.add_parser("synth", parents=[common], help="generate synthetic recordings")
    p = sub.add_parser("train", parents=[common], help="train a detector on synthetic recordings")
    p.add_argument("--data", help="directory of recordings written by 'synth'")
    for name, helptext in (("simulate", "stream a recording through a trained detector"),
                           ("sweep", "sweep the detection threshold over cached scores")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--weights", help="weights file written by 'train'")
        p.add_argument("--input", help="recording file or directory")
        p.add_argument("--threshold", type=float, help="detection threshold")
    p = sub.add_parser("pmbo", parents=[common], help="run the hyperparameter search")
    p.add_argument("--workers", type=int, help="number of worker threads")
    p.add_argument("--budget", type=int, help="number of completed experiments")
    p.add_argument("--objective", choices=("surrogate", "train"), help="evaluate candidates analytically or by training")
    p.add_argument("--data", help="recordings for --objective train")
    return parser


def _resolve(args) -> RunConfig:
    config = RunConfig(command=args.command)
    if args.config:
        load_config(args.config, config)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        config.set(key.strip(), parse_value(value))
    for key in ("seed", "out", "data", "input", "weights", "threshold", "workers", "budget", "objective"):
        value = getattr(args, key, None)
        if value is not None:
            config.set(key, value)
    config.top.setdefault("seed", 0)
    config.top.setdefault("out", "out")
    return config


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.get("out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_recordings(path) -> list:
    if path is None:
        raise ConfigError("an input path is required (--data / --input)")
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.plrec"))
        if not files:
            raise FileNotFoundError(f"no .plrec recordings in {path}")
        return [load_recording(f) for f in files]
    return [load_recording(path)]


# ----------------------------------------------------------------- commands


def cmd_synth(config: RunConfig) -> dict:
    cfg = config.build("synth", seed=config.get("seed"))
    recs = generate_dataset(cfg, config.get("synth.n_subjects"), config.get("synth.phase2_fraction"))
    out = _out_dir(config)
    subjects = []
    for r in recs:
        name = f"subject_{r.subject_id:03d}.plrec"
        save_recording(r, out / name)
        subjects.append({"file": name, "subject_id": r.subject_id, "phase": r.phase,
                         "duration_s": r.duration_s, "density": r.density,
                         "n_spindles": len(r.spindle_intervals())})
    manifest = {"config": config.resolved(), "subjects": subjects,
                "mean_density": float(np.mean([s["density"] for s in subjects]))}
    write_json(manifest, out / "manifest.json")
    log.info("wrote %d recordings to %s (mean density %.4f)", len(recs), out, manifest["mean_density"])
    return manifest


def cmd_train(config: RunConfig) -> dict:
    recs = _load_recordings(config.get("data"))
    spec = config.build("net")
    tcfg = config.build("train", seed=config.get("seed"))
    pcfg = config.build("pipeline")
    tr, va, te = split_subjects(recs, seed=config.get("seed"))
    target = "binary" if spec.mode == "classifier" else "scores"
    sets = [SequenceDataset.from_recordings(r, spec.inputs, target, pcfg) for r in (tr, va, te)]
    net = Network.initialize(spec, seed=config.get("seed"))

    def progress(epoch, h):
        log.info("epoch %d loss %.4f val f1 %.4f", epoch, h.train_loss[-1], h.val_f1[-1])

    best, history = train(net, tcfg, sets[0], sets[1], callback=progress)
    out = _out_dir(config)
    save_weights(best, out / "weights.plw")
    test_f1 = validation_f1(best, sets[2], tcfg.validation_stride)
    hist = history.to_dict()
    hist.pop("wall_time_s")
    write_csv(out / "history.csv", ["epoch", "train_loss", "val_f1", "val_f1_avg"],
              [(i, a, b, c) for i, (a, b, c) in enumerate(zip(history.train_loss, history.val_f1,
                                                                history.val_f1_avg))])
    report = {"config": config.resolved(), "history": hist, "test_f1": test_f1,
              "n_parameters": count_parameters(spec),
              "subjects": {"train": [r.subject_id for r in tr], "validation": [r.subject_id for r in va],
                           "test": [r.subject_id for r in te]}}
    write_json(report, out / "report.json")
    log.info("test f1 %.4f", test_f1)
    return report


def _detector_config(config: RunConfig, net) -> DetectorConfig:
    overrides = dict(config.sections.get("detector", {}))
    if config.get("threshold") is not None:
        overrides["threshold"] = float(config.get("threshold"))
    stride = overrides.pop("stride_samples", None)
    overrides.pop("dilation_samples", None)
    overrides.pop("sample_rate", None)
    return DetectorConfig.for_network(net.spec, stride, **overrides)


def _stream_recordings(config: RunConfig):
    if config.get("weights") is None:
        raise ConfigError("--weights is required")
    net = load_weights(config.get("weights"))
    recs = _load_recordings(config.get("input"))
    det = _detector_config(config, net)
    pcfg = config.build("pipeline")
    runs = []
    for r in recs:
        signal = prepare_inputs(r, net.spec.inputs, pcfg)
        res = run_stream(signal, net, det)
        runs.append((r, res))
    return net, det, runs


def cmd_simulate(config: RunConfig) -> dict:
    net, det, runs = _stream_recordings(config)
    out = _out_dir(config)
    events_rows, score_rows, per_rec = [], [], []
    preds, labels, stim_all, spindles_all = [], [], [], []
    offset = 0.0
    for r, res in runs:
        preds.append(res.scores >= det.threshold)
        labels.append(r.binary[res.window_ends])
        m = stimulation_prf(res.events, r.spindle_intervals())
        per_rec.append({"subject_id": r.subject_id, **m.to_dict(),
                        "realtime_factor": res.realtime_factor})
        events_rows += [(r.subject_id, e.trigger_time_s) for e in res.events]
        score_rows += [(r.subject_id, t, s) for t, s in zip(res.score_times_s, res.scores)]
        # pool events across recordings on a shared clock
        stim_all += [e.trigger_time_s + offset for e in res.events]
        spindles_all += [(a + offset, b + offset) for a, b in r.spindle_intervals()]
        offset += r.duration_s + 10.0
    sample = samplewise_prf(np.concatenate(preds), np.concatenate(labels))
    events = stimulation_prf(stim_all, spindles_all)
    write_csv(out / "events.csv", ["subject_id", "trigger_time_s"], events_rows)
    write_csv(out / "scores.csv", ["subject_id", "time_s", "score"], score_rows)
    edges, counts = delay_distribution(events)
    write_csv(out / "delays.csv", ["bin_start_ms", "bin_end_ms", "count"],
              [(a, b, c) for a, b, c in zip(edges[:-1], edges[1:], counts)])
    report = build_report({**config.resolved(), "detector_resolved": det.to_dict()}, sample, events)
    report["recordings"] = [{k: v for k, v in d.items() if k != "realtime_factor"} for d in per_rec]
    write_json(report, out / "report.json")
    log.info("event f1 %.4f (%d stimuli); mean real-time factor %.0fx", events.f1, events.n_stimuli,
             np.mean([d["realtime_factor"] for d in per_rec]))
    return report


def cmd_sweep(config: RunConfig) -> dict:
    net, det, runs = _stream_recordings(config)
    thresholds = config.get("thresholds")
    thresholds = default_thresholds() if thresholds is None else np.atleast_1d(np.asarray(thresholds, dtype=float))
    # one long timeline so a single sweep covers every recording
    scores, times, spindles, offset = [], [], [], 0.0
    for r, res in runs:
        scores.append(res.scores)
        times.append(res.window_ends / det.sample_rate + offset)
        spindles += [(a + offset, b + offset) for a, b in r.spindle_intervals()]
        offset += r.duration_s + 10.0
    sweep = threshold_sweep(np.concatenate(scores), np.concatenate(times), spindles, thresholds, det)
    out = _out_dir(config)
    rows = sweep.rows()
    write_csv(out / "sweep.csv", ["threshold", "precision", "recall", "f1", "tp", "fp", "fn"],
              [(d["threshold"], d["precision"], d["recall"], d["f1"], d["tp"], d["fp"], d["fn"]) for d in rows])
    report = build_report({**config.resolved(), "detector_resolved": det.to_dict()}, None, sweep.best, sweep)
    write_json(report, out / "report.json")
    log.info("best threshold %.2f: f1 %.4f", sweep.best_threshold, sweep.best.f1)
    return report


def cmd_pmbo(config: RunConfig) -> dict:
    space = default_space(config.build("net"))
    sampler = config.build("sampler")
    objective_name = config.get("objective") or "surrogate"
    if objective_name == "surrogate":
        objective = SurrogateObjective(space)
    else:
        objective = _training_objective(config, space)
    out = _out_dir(config)
    log_path = out / "search_log.jsonl"
    result = run_search(space, objective, int(config.get("budget") or 50), int(config.get("workers") or 1),
                        sampler, seed=config.get("seed"), log_path=log_path)
    front = result.front
    write_csv(out / "front.csv", ["L_h", "L_s", "H"], [(e.L_h, e.L_s, json.dumps(e.H, sort_keys=True)) for e in front])
    write_csv(out / "experiments.csv", ["L_h", "L_s", "H"],
              [(e.L_h, e.L_s, json.dumps(e.H, sort_keys=True)) for e in result.experiments])
    report = {"config": config.resolved(), "n_experiments": len(result.experiments),
              "n_failures": len(result.failures), "front": [{"H": e.H, "L_s": e.L_s, "L_h": e.L_h} for e in front]}
    write_json(report, out / "report.json")
    log.info("%d experiments, front of %d", len(result.experiments), len(front))
    return report


def _training_objective(config: RunConfig, space):
    recs = _load_recordings(config.get("data"))
    tr, va, _ = split_subjects(recs, seed=config.get("seed"))
    pcfg = config.build("pipeline")
    base = config.build("train", seed=config.get("seed"))
    cache = {}

    def objective(H):
        spec = space.to_spec(H)
        key = spec.inputs
        if key not in cache:
            cache[key] = [SequenceDataset.from_recordings(r, spec.inputs, "binary", pcfg) for r in (tr, va)]
        tcfg = type(base).from_dict({**base.to_dict(), **{k: H[k] for k in ("lr", "batch_size") if k in H}})
        _, hist = train(Network.initialize(spec, seed=base.seed), tcfg, *cache[key])
        return 1.0 - hist.best_val_f1, count_parameters(spec)

    return objective


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "simulate": cmd_simulate, "sweep": cmd_sweep, "pmbo": cmd_pmbo}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config = _resolve(args)
        COMMANDS[args.command](config)
    except (TrainingError, SearchExhaustedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, OSError, KeyError) as exc:
        # ParameterError, FormatError, DataError and ConfigError are ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PortiloopError, RuntimeError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
