"""``anchoredmv`` command line: triangulate, benchmark, edd, multidegree."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .constraints import multidegree_check
from .errors import GeometryError
from .io import load_scene, save_scene, write_results, write_stats
from .pipeline import METHODS, benchmark, generate_scene, observe, record_stats, run_method
from .solver.edd import VARIETIES, count_edd
from .solver.homotopy import TrackerConfig

EXIT_OK, EXIT_FAILURES, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    m: int = 3
    p: int = 5
    epsilon: float = 1e-12
    iterations: int | None = None
    methods: tuple = METHODS
    seed: int = 0
    out_dir: str = "."
    strict: bool = False
    threads: int = 1
    scene: str | None = None
    variety: tuple = ()
    pattern: tuple = ()
    tracker: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.m < 2:
            raise ConfigError("m must be at least 2")
        if self.p < 1:
            raise ConfigError("p must be at least 1")
        if not self.epsilon >= 0:
            raise ConfigError("epsilon must be non-negative")
        if self.iterations is not None and self.iterations < 1:
            raise ConfigError("iterations must be at least 1")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        bad = [k for k in self.methods if k not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {list(METHODS)}")
        bad = [v for v in self.variety if v not in VARIETIES]
        if bad:
            raise ConfigError(f"unknown varieties {bad}; choose from {list(VARIETIES)}")
        known = {f.name for f in fields(TrackerConfig)}
        bad = sorted(set(self.tracker) - known)
        if bad:
            raise ConfigError(f"unknown tracker keys {bad}")
        try:
            TrackerConfig(**self.tracker)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad tracker settings: {exc}") from None
        return self

    def n_iterations(self, default: int) -> int:
        return self.iterations if self.iterations is not None else default

    def tracker_config(self, **kw) -> TrackerConfig:
        return TrackerConfig(**self.tracker).with_overrides(**kw)


def _split(s):
    return tuple(x.strip() for x in s.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="anchoredmv", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    # defaults are None so that a config file value is only overridden by explicit flags
    common.add_argument("--m", type=int)
    common.add_argument("--p", type=int)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--iterations", type=int)
    common.add_argument("--methods", type=_split, help="comma-separated method ids")
    common.add_argument("--seed", type=int)
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--strict", action="store_const", const=True)
    common.add_argument("--threads", type=int)
    common.add_argument("--config", help="JSON file with any of these settings")
    t = sub.add_parser("triangulate", parents=[common], help="one method on one scene")
    t.add_argument("--scene", help="scene JSON file; a random scene from --seed otherwise")
    sub.add_parser("benchmark", parents=[common], help="repeated random scenes, all methods")
    e = sub.add_parser("edd", parents=[common], help="count complex critical points")
    e.add_argument("--variety", type=_split)
    d = sub.add_parser("multidegree", parents=[common], help="points in random linear slices")
    d.add_argument("--variety", type=_split)
    d.add_argument("--pattern", type=lambda s: tuple(int(x) for x in _split(s)))
    return ap


def load_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        try:
            values = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if not isinstance(values, dict):
            raise ConfigError("config file must hold a JSON object")
        known = {f.name for f in fields(RunConfig)} - {"command"}
        bad = sorted(set(values) - known)
        if bad:
            raise ConfigError(f"unknown config keys {bad}")
        for key in ("methods", "variety", "pattern"):
            if isinstance(values.get(key), str):
                values[key] = _split(values[key])
            elif key in values:
                values[key] = tuple(values[key])
    for key, val in vars(args).items():
        if key not in ("command", "config") and val is not None:
            values[key] = val
    if "pattern" in values:
        values["pattern"] = tuple(int(x) for x in values["pattern"])
    try:
        return RunConfig(command=args.command, **values).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _out(cfg: RunConfig) -> Path:
    d = Path(cfg.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_triangulate(cfg: RunConfig) -> int:
    scene = load_scene(cfg.scene) if cfg.scene else generate_scene(cfg.m, cfg.p, cfg.seed)
    obs = observe(scene, cfg.epsilon, cfg.seed)
    out = _out(cfg)
    save_scene(scene, out / "scene.json")
    failed = 0
    with open(out / "triangulation.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "point", "x", "y", "z", "residual", "error_e", "incidence_ok"])
        for method in cfg.methods:
            try:
                r = run_method(method, scene, obs, seed=cfg.seed)
            except GeometryError as exc:
                failed += 1
                print(f"{method}: failed ({exc})")
                continue
            print(f"{method}: e = {r.error:.3f}  incidence_ok = {r.incidence_ok}  residual = {r.residual:.3e}")
            for i, (y, res) in enumerate(zip(r.points, r.residuals)):
                w.writerow([method, i, *map(repr, map(float, y)), repr(float(res)), repr(r.error),
                            "true" if r.incidence_ok else "false"])
    return EXIT_FAILURES if cfg.strict and failed else EXIT_OK


def cmd_benchmark(cfg: RunConfig) -> int:
    from .plotting import benchmark_figures

    n = cfg.n_iterations(1000 if cfg.m <= 3 else 100)
    records = benchmark(cfg.m, cfg.p, cfg.epsilon, n, cfg.methods, cfg.seed, cfg.threads)
    out = _out(cfg)
    write_results(records, out / "results.csv")
    stats = record_stats(records)
    write_stats(stats, out / "stats.csv")
    benchmark_figures([r for r in records if not r.failed], out)
    print(f"{'method':10s} {'median e':>9s} {'mean e':>8s} {'sigma':>7s} {'median t':>9s}")
    for method, s in stats.items():
        print(f"{method:10s} {s.error_median:9.3f} {s.error_mean:8.3f} {s.error_sigma:7.3f} {s.time_median:9.4f}")
    failed = sum(bool(r.failed) for r in records)
    if failed:
        print(f"{failed} of {len(records)} runs failed; see results.csv")
    return EXIT_FAILURES if cfg.strict and failed else EXIT_OK


def cmd_edd(cfg: RunConfig) -> int:
    varieties = cfg.variety or VARIETIES
    trials = cfg.n_iterations(20)
    mismatched = 0
    rows = []
    for v in varieties:
        s = count_edd(v, cfg.m, trials, cfg.seed, cfg.tracker_config())
        mismatched += not s.matches
        rows.append([v, cfg.m, s.modal, s.expected, s.agreement, s.failures, s.seconds])
        print(f"{v:15s} m={cfg.m}  modal {s.modal}  expected {s.expected}  agreement {s.agreement:.2f}  "
              f"counts {s.counts}  {s.seconds:.1f}s")
    with open(_out(cfg) / "edd.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variety", "m", "modal", "expected", "agreement", "path_failures", "seconds"])
        w.writerows(rows)
    return EXIT_FAILURES if cfg.strict and mismatched else EXIT_OK


def cmd_multidegree(cfg: RunConfig) -> int:
    varieties = cfg.variety or ("anchored-point",)
    pattern = cfg.pattern or (1,) + (0,) * (cfg.m - 1)
    trials = cfg.n_iterations(50)
    rng = np.random.default_rng(cfg.seed)
    cams = [rng.normal(size=(3, 4)) for _ in range(len(pattern))]
    for v in varieties:
        s = multidegree_check(cams, v, pattern, trials, cfg.seed)
        print(f"{v:15s} pattern {pattern}  modal {s.modal}  agreement {s.agreement:.2f}")
    return EXIT_OK


COMMANDS = {
    "triangulate": cmd_triangulate,
    "benchmark": cmd_benchmark,
    "edd": cmd_edd,
    "multidegree": cmd_multidegree,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        return COMMANDS[cfg.command](cfg)
    except (ConfigError, GeometryError, ValueError) as exc:
        print(f"anchoredmv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
