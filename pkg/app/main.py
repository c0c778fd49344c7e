import argparse
import logging
import random
import sys
import time
from dataclasses import dataclass, replace
from typing import List, Optional

from dotenv import load_dotenv

from app.core.config import LOG_LEVELS, Settings, get_settings
from app.core.exceptions import TransitFluxError
from app.models.flow import Flow
from app.models.instance import Instance, Problem
from app.services.demand.problem import build_problem
from app.services.excel.generator import generate_metrics_workbook
from app.services.flow.metrics import MetricsReport, metrics, write_metrics_csv
from app.services.flow.verify import is_feasible, verify_equilibrium
from app.services.instances.examples import catalogue_names, gen_example
from app.services.instances.io import instance_summary, load_flow, load_instance, save_flow, save_instance
from app.services.instances.sat import gen_sat, parse_dimacs
from app.services.instances.shaping import apply_demand_profile, load_shares, scale_demand
from app.services.instances.synthetic import random_instance
from app.services.network.builder import unroll_periodic
from app.services.solvers.exact import ExactLimits, ExactStatus, SearchStrategy, solve_exact
from app.services.solvers.heuristic import (
    HeuristicConfig,
    Outcome,
    Selection,
    solve_heuristic,
    write_trace_csv,
)
from app.services.solvers.single import solve_single_destination
from app.services.solvers.stability import StabilityStatus, price_of_stability
from app.services.solvers.sysopt import solve_system_optimum
from app.utils.logs import logger
from app.utils.rational import format_optional, format_rational, parse_rational

load_dotenv()

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_EQUILIBRIUM = 2
EXIT_RESOURCE_LIMIT = 3

METHODS = ("single", "exact", "heuristic", "sysopt")


@dataclass(frozen=True)
class Verdict:
    outcome: str
    method: str
    seed: int
    wall_secs: float
    report: Optional[MetricsReport] = None

    def line(self) -> str:
        if self.report is None:
            mean = p99 = s_r0 = social = "na"
        else:
            mean = format_optional(self.report.mean_rho, "na")
            p99 = format_optional(self.report.p99_rho, "na")
            s_r0 = format_rational(self.report.share_zero_regret)
            social = format_rational(self.report.social_cost)
        return (
            f"VERDICT outcome={self.outcome} mean_rho={mean} p99_rho={p99} "
            f"s_r0={s_r0} social_cost={social} seed={self.seed}"
        )


def _emit(verdict: Verdict) -> None:
    print(verdict.line(), flush=True)
    logger.info(f"Méthode {verdict.method} : {verdict.outcome} en {verdict.wall_secs:.3f} s")


def _problem(args, settings: Settings) -> tuple:
    instance = load_instance(args.instance)
    return instance, build_problem(instance, cost_cap=settings.cost_cap)


def _write_reports(problem: Problem, flow: Flow, args, trace=None) -> MetricsReport:
    report = metrics(problem, flow, args.jobs)
    if args.out:
        save_flow(flow, args.out, problem.name)
    if getattr(args, "metrics", None):
        write_metrics_csv(report, args.metrics)
    if getattr(args, "xlsx", None):
        generate_metrics_workbook(report, trace, args.xlsx)
    return report


# --- Sous-commandes ----------------------------------------------------------


def cmd_build(args, settings: Settings) -> int:
    instance, problem = _problem(args, settings)
    logger.info(f"Instance : {instance_summary(instance)}")
    graph = problem.graph
    counts = graph.count_by_kind()
    print(
        f"BUILD nodes={len(graph.nodes)} edges={len(graph.edges)} "
        f"driving={counts.get('driving', 0)} boarding={counts.get('boarding', 0)} "
        f"commodities={len(problem.commodities)} demand={format_rational(problem.total_demand)}",
        flush=True,
    )
    return EXIT_OK


def cmd_solve(args, settings: Settings) -> int:
    instance, problem = _problem(args, settings)
    started = time.perf_counter()
    seed = args.seed if args.seed is not None else settings.seed
    trace = None

    if args.method == "single":
        flow = solve_single_destination(problem, check_invariants=args.check_invariants)
    elif args.method == "sysopt":
        flow = solve_system_optimum(problem, jobs=args.jobs)
    elif args.method == "exact":
        limits = ExactLimits(
            edge_limit=args.edge_limit or settings.edge_limit,
            path_cap=args.path_cap or settings.path_cap,
        )
        result = solve_exact(
            problem,
            limits,
            strategy=SearchStrategy(args.strategy),
            forbid_outside=args.forbid_outside,
            jobs=args.jobs,
        )
        if result.status != ExactStatus.EQUILIBRIUM:
            if result.detail:
                logger.warning(f"⚠️ {result.detail}")
            _emit(Verdict(result.status.value, args.method, seed, time.perf_counter() - started))
            return EXIT_NO_EQUILIBRIUM if result.status == ExactStatus.NO_EQUILIBRIUM else EXIT_RESOURCE_LIMIT
        flow = result.flow
    else:
        config = HeuristicConfig.from_settings(
            settings,
            budget_secs=args.budget_secs,
            iter_cap=args.iter_cap,
            seed=args.seed,
            selection=Selection(args.selection),
            cycle_window=args.cycle_window,
            restarts=args.restarts,
            prefill=not args.no_prefill,
            warm_start=not args.no_warm_start,
            compress_cycles=not args.no_compress,
            check_invariants=args.check_invariants,
            jobs=args.jobs,
        )
        result = solve_heuristic(problem, config)
        flow, trace = result.flow, result.trace
        if args.trace:
            write_trace_csv(trace, args.trace)

    report = _write_reports(problem, flow, args, trace)
    outcome = Outcome.EQUILIBRIUM if verify_equilibrium(problem, flow).ok else Outcome.BEST_EFFORT
    _emit(Verdict(outcome.value, args.method, seed, time.perf_counter() - started, report))
    return EXIT_OK


def cmd_verify(args, settings: Settings) -> int:
    instance, problem = _problem(args, settings)
    flow = load_flow(args.flow)
    if not is_feasible(problem, flow):
        check = verify_equilibrium(problem, flow)
        logger.error(f"Flot non admissible : {check.describe()}")
        return EXIT_ERROR
    check = verify_equilibrium(problem, flow)
    if not check.ok:
        logger.warning(f"⚠️ Pas un équilibre ({check.count} violation(s)) : {check.describe()}")
    outcome = Outcome.EQUILIBRIUM if check.ok else Outcome.BEST_EFFORT
    report = metrics(problem, flow, args.jobs)
    seed = args.seed if args.seed is not None else settings.seed
    _emit(Verdict(outcome.value, "verify", seed, 0.0, report))
    return EXIT_OK


def cmd_metrics(args, settings: Settings) -> int:
    instance, problem = _problem(args, settings)
    flow = load_flow(args.flow)
    report = metrics(problem, flow, args.jobs)
    write_metrics_csv(report, args.out)
    if args.xlsx:
        generate_metrics_workbook(report, None, args.xlsx)
    return EXIT_OK


def cmd_gen(args, settings: Settings) -> int:
    sources = [args.example is not None, args.sat is not None, args.random is not None]
    if sum(sources) != 1:
        raise ValueError("Préciser exactement une source : --example, --sat ou --random")
    if args.example is not None:
        param = parse_rational(args.param) if args.param is not None else None
        instance = gen_example(args.example, param)
    elif args.sat is not None:
        with open(args.sat, encoding="utf-8") as handle:
            formula = parse_dimacs(handle.read())
        instance = gen_sat(formula, args.mode)
    else:
        instance = random_instance(random.Random(args.random), departure_choice=args.mode == "dtc")
    if args.profile:
        instance = apply_demand_profile(
            instance,
            load_shares(args.profile),
            slot=args.slot,
            mode="fdt" if args.mode == "fdt" else "dtc",
        )
    if args.scale:
        instance = scale_demand(instance, parse_rational(args.scale))
    save_instance(instance, args.out)
    return EXIT_OK


def cmd_unroll(args, settings: Settings) -> int:
    instance: Instance = load_instance(args.instance)
    if instance.periodic is None:
        logger.warning("⚠️ Aucun bloc périodique : instance inchangée")
        save_instance(instance, args.out)
        return EXIT_OK
    block = instance.periodic
    trips = instance.trips + tuple(unroll_periodic(block.templates, block.period, block.horizon))
    save_instance(replace(instance, trips=trips, periodic=None), args.out)
    return EXIT_OK


def cmd_pos(args, settings: Settings) -> int:
    instance, problem = _problem(args, settings)
    limits = ExactLimits(
        edge_limit=args.edge_limit or settings.edge_limit,
        path_cap=args.path_cap or settings.path_cap,
    )
    result = price_of_stability(problem, limits, jobs=args.jobs)
    print(
        f"POS status={result.status.value} value={format_optional(result.value)} "
        f"best_equilibrium_cost={format_optional(result.best_equilibrium_cost, 'na')} "
        f"system_optimum_cost={format_optional(result.system_optimum_cost, 'na')}",
        flush=True,
    )
    if result.status == StabilityStatus.RESOURCE_LIMIT:
        return EXIT_RESOURCE_LIMIT
    if result.status == StabilityStatus.UNDEFINED:
        return EXIT_NO_EQUILIBRIUM
    return EXIT_OK


# --- Analyse des arguments -------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transitflux",
        description="Équilibres d'usagers sous contraintes de capacité dans les réseaux espace-temps",
    )
    parser.add_argument("--log-level", type=str.upper, choices=LOG_LEVELS, default=None)
    parser.add_argument("--jobs", type=int, default=None, help="taille maximale des pools de threads")
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="construit le graphe espace-temps et affiche ses dimensions")
    build.add_argument("instance", help="fichier d'instance JSON ('-' pour stdin)")
    build.set_defaults(handler=cmd_build)

    solve = sub.add_parser("solve", help="calcule un flot")
    solve.add_argument("instance")
    solve.add_argument("--method", choices=METHODS, default="heuristic")
    solve.add_argument("--out", default=None, help="fichier de flot JSON ('-' pour stdout)")
    solve.add_argument("--metrics", default=None, help="CSV des métriques par stratégie")
    solve.add_argument("--xlsx", default=None, help="classeur Excel des métriques")
    solve.add_argument("--trace", default=None, help="CSV de la trace (heuristique)")
    solve.add_argument("--check-invariants", action="store_true")
    solve.add_argument("--budget-secs", type=float, default=None)
    solve.add_argument("--iter-cap", type=int, default=None)
    solve.add_argument("--seed", type=int, default=None)
    solve.add_argument("--selection", choices=[s.value for s in Selection], default=Selection.MAX_REGRET.value)
    solve.add_argument("--cycle-window", type=int, default=None)
    solve.add_argument("--restarts", type=int, default=None)
    solve.add_argument("--no-prefill", action="store_true")
    solve.add_argument("--no-warm-start", action="store_true")
    solve.add_argument("--no-compress", action="store_true")
    solve.add_argument("--edge-limit", type=int, default=None)
    solve.add_argument("--path-cap", type=int, default=None)
    solve.add_argument("--strategy", choices=[s.value for s in SearchStrategy], default=SearchStrategy.BRANCH.value)
    solve.add_argument("--forbid-outside", action="store_true")
    solve.set_defaults(handler=cmd_solve)

    verify = sub.add_parser("verify", help="vérifie qu'un flot est un équilibre")
    verify.add_argument("instance")
    verify.add_argument("flow")
    verify.add_argument("--seed", type=int, default=None, help="graine reportée dans le verdict")
    verify.set_defaults(handler=cmd_verify)

    report = sub.add_parser("metrics", help="exporte les métriques d'un flot")
    report.add_argument("instance")
    report.add_argument("flow")
    report.add_argument("--out", required=True, help="CSV des métriques")
    report.add_argument("--xlsx", default=None)
    report.set_defaults(handler=cmd_metrics)

    gen = sub.add_parser("gen", help="génère une instance")
    gen.add_argument("--example", choices=catalogue_names(), default=None)
    gen.add_argument("--param", default=None, help="Δ pour fig7, ε pour fig9")
    gen.add_argument("--sat", default=None, help="formule CNF (DIMACS ou forme compacte)")
    gen.add_argument("--mode", choices=("dtc", "fixed", "fdt"), default="dtc")
    gen.add_argument("--random", type=int, default=None, metavar="SEED")
    gen.add_argument("--profile", default=None, help="CSV des parts horaires")
    gen.add_argument("--slot", type=int, default=600)
    gen.add_argument("--scale", default=None, help="facteur rationnel de demande")
    gen.add_argument("--out", default="-")
    gen.set_defaults(handler=cmd_gen)

    unroll = sub.add_parser("unroll", help="déroule le bloc périodique d'une instance")
    unroll.add_argument("instance")
    unroll.add_argument("--out", default="-")
    unroll.set_defaults(handler=cmd_unroll)

    pos = sub.add_parser("pos", help="prix de la stabilité")
    pos.add_argument("instance")
    pos.add_argument("--edge-limit", type=int, default=None)
    pos.add_argument("--path-cap", type=int, default=None)
    pos.set_defaults(handler=cmd_pos)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = get_settings()
    except RuntimeError:
        return EXIT_ERROR
    logger.setLevel(args.log_level or settings.log_level)
    args.jobs = args.jobs or settings.jobs
    if args.command == "gen" and args.sat is not None and args.mode == "fdt":
        parser.error("--mode fdt ne s'applique pas à --sat")
    if args.command == "gen" and args.sat is None and args.mode == "fixed":
        parser.error("--mode fixed est réservé à --sat")

    try:
        return args.handler(args, settings)
    except (TransitFluxError, ValueError, KeyError, OSError) as e:
        logger.error(f"Erreur : {e}", exc_info=logger.isEnabledFor(logging.DEBUG))
        return EXIT_ERROR
    except Exception as e:
        logger.error(f"Erreur inattendue : {e}", exc_info=True)
        return EXIT_ERROR


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
