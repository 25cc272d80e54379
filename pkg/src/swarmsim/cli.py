"""Command line front end: rollouts, benchmarks, trajectory record/replay."""

import argparse
import sys

from .config import SwarmEnvConfig, apply_overrides, load_config
from .errors import ConfigError, DumpFormatError, ReplayDivergence, SimulationFault
from .harness import BenchmarkConfig, make_policy, run_benchmark, run_rollout
from .recording import load_dump, replay
from .scenarios import SCENARIO_KINDS


def build_parser():
    p = argparse.ArgumentParser(
        prog="swarmsim",
        description="Headless multi-quadrotor simulator: run rollouts, "
                    "benchmark throughput, record and replay trajectories.",
    )
    p.add_argument("--config", metavar="PATH", help="INI settings file (defaults built in)")
    p.add_argument("--scenario", choices=SCENARIO_KINDS, help="goal scenario kind")
    p.add_argument("--agents", type=int, metavar="N",
                   help="vehicles per environment (clamps k_neighbors to N-1 "
                        "unless --neighbors is given)")
    p.add_argument("--neighbors", type=int, metavar="K", help="observed nearest neighbors")
    p.add_argument("--workers", type=int, default=1, metavar="W", help="benchmark worker processes")
    p.add_argument("--envs-per-worker", type=int, default=1, metavar="E",
                   help="environments per worker in benchmark mode")
    p.add_argument("--steps", type=int, metavar="S", help="control steps to run per environment")
    p.add_argument("--seconds", type=float, metavar="T",
                   help="simulated seconds to run (alternative to --steps)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--policy", choices=("random", "hover"), default="random")
    p.add_argument("--bench", action="store_true", help="run the throughput benchmark")
    p.add_argument("--record", metavar="PATH", help="dump the first episode's trajectory")
    p.add_argument("--replay", metavar="PATH", help="verify a dump by bit-exact replay")
    p.add_argument("--no-noise", action="store_true",
                   help="disable motor, collision and sensor noise")
    p.add_argument("--no-collisions", action="store_true",
                   help="disable vehicle-vehicle collision response")
    return p


def _build_config(args):
    cfg = load_config(args.config) if args.config else SwarmEnvConfig()
    overrides = {}
    if args.agents is not None:
        overrides["n_agents"] = args.agents
        if args.neighbors is None:
            overrides["k_neighbors"] = min(cfg.k_neighbors, max(args.agents - 1, 0))
    if args.neighbors is not None:
        overrides["k_neighbors"] = args.neighbors
    if args.scenario:
        overrides["scenario.kind"] = args.scenario
    if args.no_noise:
        overrides.update({
            "motor_noise": False,
            "collision_noise": False,
            "sensor_noise.enabled": False,
        })
    if args.no_collisions:
        overrides["collisions"] = False
    return apply_overrides(cfg, overrides)


def _step_budget(args, cfg):
    if args.steps is not None and args.seconds is not None:
        raise ConfigError("give either --steps or --seconds, not both")
    if args.steps is not None:
        if args.steps < 1:
            raise ConfigError("--steps must be >= 1")
        return args.steps
    if args.seconds is not None:
        steps = int(round(args.seconds * cfg.control_freq))
        if steps < 1:
            raise ConfigError("--seconds is shorter than one control step")
        return steps
    return cfg.episode_steps


def _print_rollout(result):
    sps = result.agent_steps / result.wall_seconds if result.wall_seconds > 0 else 0.0
    print(f"steps: {result.env_steps}  episodes: {result.episodes}")
    print(f"wall: {result.wall_seconds:.3f} s  agent steps/s: {sps:,.0f}")
    print(f"reward sum: {result.reward_sum:.4f}")
    if result.record_path:
        print(f"trajectory written to {result.record_path}")


def _run(args):
    cfg = _build_config(args)

    if args.replay:
        dump = load_dump(args.replay)
        report = replay(dump, cfg)
        print(report.describe())
        return 0 if report.identical else 1

    steps = _step_budget(args, cfg)

    if args.bench:
        bench = BenchmarkConfig(
            config=cfg,
            n_envs=args.workers * args.envs_per_worker,
            n_workers=args.workers,
            steps_per_env=steps,
            master_seed=args.seed,
            policy=args.policy,
        )
        report = run_benchmark(bench)
        print(report.describe())
        return 0

    result = run_rollout(
        cfg, args.seed, 0, steps,
        policy=make_policy(args.policy), record_path=args.record,
    )
    _print_rollout(result)
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ReplayDivergence as e:
        print(f"replay diverged: {e}", file=sys.stderr)
        return 1
    except (ConfigError, DumpFormatError, SimulationFault) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
