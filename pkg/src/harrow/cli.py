"""Command-line interface: ingest, plan, validate, explain, simulate, serve."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .explain import explain as run_explain, parse_foil
from .field import (
    FieldModel,
    MapFormat,
    cells_from_spec,
    detect_format,
    load_weed_map,
    save_weed_map,
    select_targets,
)
from .pddl import (
    domain_to_pddl,
    format_plan,
    ground,
    parse_domain,
    parse_plan,
    parse_problem,
    problem_to_pddl,
    validate_plan,
)
from .planner import (
    SearchConfig,
    SearchMode,
    WeedingProblemConfig,
    as_cost,
    compile_problem,
    plan as run_planner,
)
from .sim import RobotConfig, reset, run_mission, trace_to_jsonl

log = logging.getLogger("harrow")


def _load_field(args) -> FieldModel:
    path = Path(args.map)
    fmt = MapFormat(args.format) if getattr(args, "format", None) else detect_format(str(path))
    weed_map = load_weed_map(path.read_text(encoding="utf-8"), fmt)
    return FieldModel(
        map=weed_map,
        blocked=cells_from_spec(getattr(args, "blocked", "") or ""),
        home=getattr(args, "home", 0) or 0,
    )


def _search_config(args) -> SearchConfig:
    mode = SearchMode.SATISFICING if getattr(args, "satisficing", False) else SearchMode.OPTIMAL
    kwargs = {}
    if getattr(args, "node_limit", None):
        kwargs["node_limit"] = args.node_limit
    if getattr(args, "time_limit", None):
        kwargs["time_limit"] = args.time_limit
    return SearchConfig(mode=mode, **kwargs)


def _cmd_ingest(args) -> int:
    fm = _load_field(args)
    targets = select_targets(fm, args.threshold)
    print(
        f"map: {fm.map.width}x{fm.map.height} cells of {fm.map.cell_size} m, "
        f"origin {fm.map.origin}"
    )
    print(f"targets at threshold {args.threshold}: {len(targets.targets)}")
    if args.out:
        out_fmt = MapFormat(args.out_format) if args.out_format else detect_format(args.out)
        Path(args.out).write_text(save_weed_map(fm.map, out_fmt), encoding="utf-8")
        print(f"wrote normalized map to {args.out}")
    return 0


def _cmd_plan(args) -> int:
    cfg = _search_config(args)
    if args.domain:
        if not args.problem:
            raise SystemExit("--domain requires --problem")
        domain = parse_domain(Path(args.domain).read_text(encoding="utf-8"))
        problem = parse_problem(Path(args.problem).read_text(encoding="utf-8"), domain)
    else:
        if not args.map:
            raise SystemExit("plan needs either --map or --domain/--problem")
        fm = _load_field(args)
        targets = select_targets(fm, args.threshold)
        pcfg = WeedingProblemConfig(
            weed_cost=as_cost(args.weed_cost),
            move_cost_per_cell=as_cost(args.move_cost),
            require_return_home=args.return_home,
        )
        domain, problem = compile_problem(fm, targets, pcfg)
    if args.emit_domain:
        Path(args.emit_domain).write_text(domain_to_pddl(domain), encoding="utf-8")
    if args.emit_problem:
        Path(args.emit_problem).write_text(problem_to_pddl(problem), encoding="utf-8")
    task = ground(domain, problem)
    result = run_planner(task, cfg)
    text = format_plan(result)
    summary = f"; cost = {result.total_cost} ({cfg.mode.value}, {len(result)} steps)\n"
    if args.out:
        Path(args.out).write_text(text + summary, encoding="utf-8")
        print(f"plan with {len(result)} steps, cost {result.total_cost} -> {args.out}")
    else:
        sys.stdout.write(text + summary)
    return 0


def _cmd_validate(args) -> int:
    domain = parse_domain(Path(args.domain).read_text(encoding="utf-8"))
    problem = parse_problem(Path(args.problem).read_text(encoding="utf-8"), domain)
    task = ground(domain, problem)
    the_plan = parse_plan(Path(args.plan).read_text(encoding="utf-8"), task)
    report = validate_plan(task, the_plan)
    if report.valid:
        print(f"valid: cost {report.total_cost}, {len(the_plan)} steps")
        return 0
    if report.first_failing_step is not None:
        print(
            f"invalid at step {report.first_failing_step}: "
            f"unsatisfied {', '.join(report.unsatisfied)}"
        )
    else:
        print(f"invalid: missing goals {', '.join(report.missing_goals)}")
    return 1


def _cmd_explain(args) -> int:
    domain = parse_domain(Path(args.domain).read_text(encoding="utf-8"))
    problem = parse_problem(Path(args.problem).read_text(encoding="utf-8"), domain)
    task = ground(domain, problem)
    original = parse_plan(Path(args.plan).read_text(encoding="utf-8"), task)
    query = parse_foil(args.foil)
    result = run_explain(task, original, query, _search_config(args))
    if args.json:
        print(json.dumps(result.to_payload(), indent=2))
        return 0
    print(f"challenge: {args.foil.strip()}")
    print(f"original cost: {result.original.total_cost}")
    if not result.feasible:
        print(f"foil infeasible: {result.infeasible_reason}")
        return 0
    print(f"foil cost: {result.foil_plan.total_cost} (delta {result.cost_delta})")
    for entry in result.diff:
        mark = {"keep": " ", "remove": "-", "add": "+"}[entry.op]
        print(f"  {mark} {entry.step}")
    return 0


def _cmd_simulate(args) -> int:
    fm = _load_field(args)
    steps = [
        line.split(";", 1)[0].strip()
        for line in Path(args.plan).read_text(encoding="utf-8").splitlines()
    ]
    steps = [s for s in steps if s]
    cfg = RobotConfig(
        battery_capacity=args.battery,
        energy_per_move=args.energy_move,
        energy_per_weed=args.energy_weed,
        p_kill=args.p_kill,
        p_crop_damage=args.p_crop_damage,
    )
    rows = []
    for trial in range(max(1, args.trials)):
        seed = args.seed + trial
        state = reset(fm, cfg, seed)
        state, metrics, trace = run_mission(state, steps, cfg)
        rows.append((seed, state, metrics, trace))
    if args.trace:
        Path(args.trace).write_text(trace_to_jsonl(rows[-1][3]), encoding="utf-8")
    if args.json:
        out = [
            {"seed": seed, "status": state.status.value, **metrics.to_obj()}
            for seed, state, metrics, _ in rows
        ]
        print(json.dumps(out[0] if args.trials <= 1 else out, indent=2, sort_keys=True))
        return 0
    header = (
        "seed status weeds_present weeds_removed crops_damaged "
        "distance energy max_passes ticks"
    )
    print(header)
    for seed, state, m, _ in rows:
        print(
            f"{seed} {state.status.value} {m.weeds_present_initially} {m.weeds_removed} "
            f"{m.crops_damaged} {m.distance_cells} {m.energy_used} "
            f"{m.max_passes_per_cell} {m.ticks_elapsed}"
        )
    if args.trials > 1:
        mean_removed = sum(m.weeds_removed for _, _, m, _ in rows) / len(rows)
        mean_damaged = sum(m.crops_damaged for _, _, m, _ in rows) / len(rows)
        print(f"mean weeds_removed {mean_removed:.3f}, mean crops_damaged {mean_damaged:.3f}")
    return 0


def _cmd_serve(args) -> int:
    from .gateway import serve

    serve(
        host=args.host,
        port=args.port,
        store_path=args.store,
        tick_rate=args.tick_rate,
        static_dir=args.static,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harrow", description=__doc__)
    parser.add_argument("--seed", type=int, default=0, help="base random seed")
    parser.add_argument("--log-level", default="warning")
    parser.add_argument("--config", help="JSON file whose keys mirror the CLI flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load, check and normalize a weed map")
    p.add_argument("--map", required=True)
    p.add_argument("--format", choices=[f.value for f in MapFormat])
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out")
    p.add_argument("--out-format", choices=[f.value for f in MapFormat])
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("plan", help="synthesize a weeding plan")
    p.add_argument("--map")
    p.add_argument("--format", choices=[f.value for f in MapFormat])
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--home", type=int, default=0)
    p.add_argument("--blocked", default="", help="comma-separated blocked cell indices")
    p.add_argument("--return-home", action="store_true")
    p.add_argument("--move-cost", default="1")
    p.add_argument("--weed-cost", default="1")
    p.add_argument("--domain", help="raw PDDL domain instead of --map")
    p.add_argument("--problem", help="raw PDDL problem instead of --map")
    p.add_argument("--optimal", action="store_true", default=True)
    p.add_argument("--satisficing", action="store_true")
    p.add_argument("--node-limit", type=int)
    p.add_argument("--time-limit", type=float)
    p.add_argument("--out")
    p.add_argument("--emit-domain")
    p.add_argument("--emit-problem")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("validate", help="check a plan file against a task")
    p.add_argument("--domain", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--plan", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("explain", help="answer a contrastive challenge")
    p.add_argument("--domain", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--foil", required=True, help="e.g. 'forbid (move c0 c1)'")
    p.add_argument("--satisficing", action="store_true")
    p.add_argument("--node-limit", type=int)
    p.add_argument("--time-limit", type=float)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("simulate", help="run a plan on the stochastic field simulator")
    p.add_argument("--map", required=True)
    p.add_argument("--format", choices=[f.value for f in MapFormat])
    p.add_argument("--plan", required=True)
    p.add_argument("--home", type=int, default=0)
    p.add_argument("--blocked", default="")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--battery", type=float, default=RobotConfig().battery_capacity)
    p.add_argument("--energy-move", type=float, default=RobotConfig().energy_per_move)
    p.add_argument("--energy-weed", type=float, default=RobotConfig().energy_per_weed)
    p.add_argument("--p-kill", type=float, default=RobotConfig().p_kill)
    p.add_argument("--p-crop-damage", type=float, default=RobotConfig().p_crop_damage)
    p.add_argument("--trace", help="write the last trial's event trace JSONL here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("serve", help="run the websocket gateway")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=9091)
    p.add_argument("--store", help="append-only session event log (JSONL)")
    p.add_argument("--tick-rate", type=float, default=5.0, help="plan steps per second; 0 = run missions synchronously")
    p.add_argument("--static", help="directory with the built operator console")
    p.set_defaults(func=_cmd_serve)

    parser.all_parsers = [parser, *sub.choices.values()]  # config defaults reach subcommands
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    cfg_path = None
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            cfg_path = argv[i + 1]
        elif arg.startswith("--config="):
            cfg_path = arg.split("=", 1)[1]
    if cfg_path:
        defaults = json.loads(Path(cfg_path).read_text(encoding="utf-8"))
        if not isinstance(defaults, dict):
            parser.error("--config must contain a JSON object")
        mapped = {k.replace("-", "_"): v for k, v in defaults.items()}
        for sp in parser.all_parsers:
            sp.set_defaults(**mapped)
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.WARNING))
    try:
        return args.func(args)
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
