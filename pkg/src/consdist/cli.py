"""Command-line experiment runner.

::

    consdist run     --config run.cfg --out results/
    consdist ablate  --config run.cfg --out results/
    consdist profile --config run.cfg --out results/

``CONSDIST_SEED`` overrides the config seed when set to a decimal integer.
Exit codes: 0 success, 2 config error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .config import Mode, RunConfig, parse_config
from .distillation import RunResult, run_distillation
from .errors import ConfigInvalid
from .geometry import CameraPose
from .toyworld import similarity_profile

LOSS_TRACE_HEADER = ("iteration", "score_loss", "lp_value")
PROFILE_HEADER = ("azimuth", "similarity")
METRICS_HEADER = ("iteration", "janus_metric", "violations")
WORLD_HEADER = ("bin", "dim", "value")
ABLATION_HEADER = ("mode", "lp", "janus_metric", "lp_value", "violations")

JANUS_LABEL = (
    "janus_metric is a simulator operationalization: fraction of bins closer (cosine) "
    "to the preferred-view template than to their own target"
)


def run(config: RunConfig) -> RunResult:
    return run_distillation(config)


def _num(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_profile(result: RunResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    profile = similarity_profile(result.world, CameraPose(0.0), samples=max(8, result.config.bins))
    path = out / "profile.csv"
    _write_csv(path, PROFILE_HEADER, ((_num(a), _num(s)) for a, s in profile))
    return path


def emit(result: RunResult, out_dir) -> Path:
    """Write the CSV bundle and manifest for one run; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "loss_trace.csv", LOSS_TRACE_HEADER,
               ((i + 1, _num(s), _num(l)) for i, (s, l) in enumerate(zip(result.score_loss, result.lp_value))))
    write_profile(result, out)
    _write_csv(out / "metrics.csv", METRICS_HEADER,
               ((s.iteration, _num(s.janus_metric), s.violations) for s in result.snapshots))
    bins = result.world.bins
    _write_csv(out / "world.csv", WORLD_HEADER,
               ((k, d, _num(bins[k, d])) for k in range(bins.shape[0]) for d in range(bins.shape[1])))

    m = result.manifest
    lines = [f"{k} = {v}" for k, v in m["config"].items()]
    lines.append(f"run_seed = {m['seed']}")
    lines += [f"version_{k} = {v}" for k, v in m["versions"].items()]
    lines.append(f"final_janus_metric = {_num(m['final_janus_metric'])}")
    lines.append(f"final_lp_value = {_num(m['final_lp_value'])}")
    lines.append(f"final_violations = {m['final_violations']}")
    lines.append(f"note = {JANUS_LABEL}")
    path = out / "manifest.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def ablation_grid(base: RunConfig) -> list[RunConfig]:
    """The six cells {Baseline, PerpNeg, VDM} x {L_P off, on}, sharing the base seed."""
    cells = []
    for mode in (Mode.BASELINE, Mode.PERPNEG, Mode.VDM):
        for lp in (False, True):
            batch = base.batch if not lp else max(base.batch, 2)
            cells.append(base.replace(mode=mode, lp_enabled=lp, batch=batch))
    return cells


def ablate(base: RunConfig, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for cfg in ablation_grid(base):
        final = run_distillation(cfg).final
        rows.append((cfg.mode.value, "on" if cfg.lp_enabled else "off",
                     _num(final.janus_metric), _num(final.lp_value), final.violations))
    path = out / "ablation.csv"
    _write_csv(path, ABLATION_HEADER, rows)
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="consdist", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "run one configuration and write every output file"),
        ("ablate", "run the six-cell ablation grid and write ablation.csv"),
        ("profile", "run one configuration and write only profile.csv"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", required=True, type=Path)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config)
    except (ConfigInvalid, OSError, UnicodeDecodeError) as exc:
        print(f"consdist: config error: {exc}", file=sys.stderr)
        return 2
    stage = args.command
    try:
        if args.command == "ablate":
            path = ablate(config, args.out)
        else:
            stage = "run"
            result = run(config)
            stage = "emit"
            path = emit(result, args.out) if args.command == "run" else write_profile(result, args.out)
    except Exception as exc:  # noqa: BLE001 - any failure maps to exit code 3
        print(f"consdist: runtime error during {stage}: {exc}", file=sys.stderr)
        return 3
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
