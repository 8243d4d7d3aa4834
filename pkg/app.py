import argparse
import logging
import os
import sys
from typing import Dict, List, Optional

import numpy as np
from dotenv import load_dotenv

from models.graph import Graph, StubbornnessProfile
from models.results import DynamicsConfig
from models.run_spec import RunSpec
from utils.bounds import canonical_report
from utils.config import get_settings
from utils.dynamics import convergence_bracket, run
from utils.equilibrium import consensus_value, solve_equilibrium
from utils.errors import ParameterError, StubbornDynamicsError
from utils.file_io import (
    dumps_json,
    load_edge_list,
    load_opinions,
    load_profile,
    parse_profile_spec,
    save_edge_list,
    save_equilibrium_csv,
    save_hitting_csv,
    save_trajectory_csv,
    write_csv,
    write_json,
)
from utils.graph_generator import generate
from utils.graph_metrics import build_augmented
from utils.method_agreement import MethodAgreement
from utils.monte_carlo import mc_hitting
from utils.placement import rank_placements
from utils.spectral import epsilon_shift, lambda_sub, slem
from utils.sweep import COLUMNS, parse_range, sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RESIDUAL = 1
EXIT_ERROR = 2
EXIT_OSCILLATING = 3


def status(message: str) -> None:
    print(message, file=sys.stderr)


def _graph_params(args) -> Dict:
    params = {}
    for name in ('n', 'side', 'q', 'alpha', 'p', 'd'):
        value = getattr(args, name, None)
        if value is not None:
            params[name] = value
    if getattr(args, 'lam', None) is not None:
        params['lam'] = args.lam
    return params


def build_spec(args) -> RunSpec:
    return RunSpec(
        subcommand=args.command,
        graph_path=getattr(args, 'graph', None),
        kind=getattr(args, 'kind', None),
        params=_graph_params(args),
        profile=getattr(args, 'profile', None),
        opinions=getattr(args, 'opinions', None),
        out=getattr(args, 'out', None),
        seed=getattr(args, 'seed', None),
        epsilon=getattr(args, 'epsilon', 0.0),
        nu=getattr(args, 'nu', 1e-10),
        max_steps=getattr(args, 'max_steps', 100_000),
        walks=getattr(args, 'walks', 0) or 0,
    )


def load_graph(spec: RunSpec) -> Graph:
    if spec.graph_path:
        return load_edge_list(spec.graph_path)
    return generate(spec.kind, spec.params, spec.seed)


def load_stubbornness(spec: RunSpec, n: int) -> StubbornnessProfile:
    if not spec.profile:
        return StubbornnessProfile.none(n)
    if os.path.exists(spec.profile):
        return load_profile(spec.profile, n)
    return parse_profile_spec(spec.profile, n)


def load_initial_opinions(spec: RunSpec, n: int) -> np.ndarray:
    if spec.opinions is None:
        raise ParameterError("this command needs --opinions PATH or --opinions random")
    if spec.opinions == 'random':
        return np.random.default_rng(spec.seed).random(n)
    return load_opinions(spec.opinions, n)


def emit(payload: Dict, path: Optional[str]) -> None:
    if path:
        write_json(path, payload)
    else:
        print(dumps_json(payload))


def cmd_generate(spec: RunSpec) -> int:
    graph = load_graph(spec)
    if spec.out:
        save_edge_list(graph, spec.out)
        status(f"✅ Wrote {graph.edge_count} edges on {graph.n} nodes to {spec.out}")
    else:
        for i, j, w in graph.edges:
            print(f"{i} {j}" if w == 1.0 else f"{i} {j} {w!r}")
    return EXIT_OK


def _reference(graph: Graph, profile: StubbornnessProfile, x0: np.ndarray) -> np.ndarray:
    if profile.has_stubborn:
        return solve_equilibrium(graph, profile, x0).x_inf
    return np.full(graph.n, consensus_value(graph, x0))


def cmd_simulate(spec: RunSpec) -> int:
    graph = load_graph(spec)
    profile = load_stubbornness(spec, graph.n)
    x0 = load_initial_opinions(spec, graph.n)
    config = DynamicsConfig(epsilon=spec.epsilon, nu=spec.nu, max_steps=spec.max_steps)
    # Error norms need the limit up front
    reference = _reference(graph, profile, x0)
    trajectory = run(graph, profile, x0, config, equilibrium=reference)
    if spec.out:
        save_trajectory_csv(trajectory, spec.out)
    summary = {
        'steps': trajectory.steps,
        'stop_reason': trajectory.stop_reason,
        'final_error': trajectory.error_norms[-1],
        'initial_error': trajectory.error_norms[0],
    }
    if profile.has_stubborn:
        # Lazy runs contract at eps + (1 - eps) lambda_A
        rate = lambda_sub(build_augmented(graph, profile), epsilon=spec.epsilon).lambda_A
    else:
        rate = slem(graph, epsilon=spec.epsilon).rho_2
    if rate < 1.0:
        bracket = convergence_bracket(rate, trajectory.error_norms[0], spec.nu)
        summary['tau_bracket'] = list(bracket) if bracket else None
    print(dumps_json(summary))
    if trajectory.stop_reason == 'oscillating':
        status("⚠️ Opinions alternate with period 2 (bipartite graph, no stubborn agents)")
        return EXIT_OSCILLATING
    if not trajectory.converged:
        status(f"⚠️ Stopped after {trajectory.steps} steps without reaching nu={spec.nu}")
        return EXIT_RESIDUAL
    status(f"✅ Converged in {trajectory.steps} steps")
    return EXIT_OK


def cmd_equilibrium(spec: RunSpec, hitting_out: Optional[str] = None) -> int:
    graph = load_graph(spec)
    profile = load_stubbornness(spec, graph.n)
    x0 = load_initial_opinions(spec, graph.n)
    if not profile.has_stubborn:
        value = consensus_value(graph, x0)
        if spec.out:
            write_csv(spec.out, ['i', 'x_inf'], [[i, value] for i in range(1, graph.n + 1)])
        print(dumps_json({'method': 'consensus', 'value': value}))
        return EXIT_OK

    agreement = MethodAgreement()
    results = agreement.run_exact_methods(graph, profile, x0)
    report = agreement.compare(results)
    if spec.out:
        save_equilibrium_csv(results[0], spec.out)
    exact = results[1].hitting
    if hitting_out:
        save_hitting_csv(exact, hitting_out)
    if spec.walks > 0:
        # Optional sampling check against the exact table
        estimate = mc_hitting(build_augmented(graph, profile), spec.walks, spec.seed)
        report['monte_carlo'] = agreement.monte_carlo_within(exact, estimate, spec.walks)
    print(dumps_json(report))
    status(f"🔍 Max pairwise deviation: {report['max_deviation']:.3e}")
    if not report['passed'] or not all(r.converged for r in results):
        status("❌ Methods missed the agreement or residual target")
        return EXIT_RESIDUAL
    status("✅ All methods agree")
    return EXIT_OK


def cmd_spectral(spec: RunSpec) -> int:
    graph = load_graph(spec)
    profile = load_stubbornness(spec, graph.n)
    if profile.has_stubborn:
        augmented = build_augmented(graph, profile)
        result = lambda_sub(augmented)
        payload = result.to_dict()
        if spec.epsilon > 0:
            payload['shifted'] = lambda_sub(augmented, epsilon=spec.epsilon).to_dict()
    else:
        result = slem(graph)
        payload = result.to_dict()
        if spec.epsilon > 0:
            payload['shifted'] = epsilon_shift(result, spec.epsilon).to_dict()
    emit(payload, spec.out)
    if not result.converged:
        status("⚠️ Power iteration hit its iteration cap")
        return EXIT_RESIDUAL
    return EXIT_OK


def cmd_bounds(spec: RunSpec, mode: str = 'auto') -> int:
    graph = load_graph(spec)
    profile = load_stubbornness(spec, graph.n)
    augmented = build_augmented(graph, profile)
    exact = lambda_sub(augmented)
    report = canonical_report(augmented, mode=mode, T_exact=exact.T_exact)
    emit(report.to_dict(), spec.out)
    status(f"✅ T_lower={report.T_lower:.6g} <= T_exact={exact.T_exact:.6g} <= T_upper={report.T_upper:.6g}")
    return EXIT_OK if exact.converged else EXIT_RESIDUAL


def cmd_sweep(args) -> int:
    values = parse_range(args.range)
    params = _graph_params(args)
    params.pop('n', None)
    rows = sweep(args.kind, args.sweep, values, n=args.n or 11, k=args.k, params=params,
                 seed=args.seed, mode=args.mode)
    table: List[List[float]] = [[row[c] for c in COLUMNS] for row in rows]
    if args.out:
        write_csv(args.out, [args.sweep] + COLUMNS[1:], table)
        status(f"✅ Wrote {len(rows)} sweep rows to {args.out}")
    else:
        print(','.join([args.sweep] + COLUMNS[1:]))
        for line in table:
            print(','.join(repr(float(v)) for v in line))
    return EXIT_OK


def cmd_placement(spec: RunSpec, level: float) -> int:
    graph = load_graph(spec)
    scores = rank_placements(graph, level=level)
    emit({'placements': [s.to_dict() for s in scores]}, spec.out)
    if scores:
        status(f"✅ Best single placement: agent {scores[0].candidate[0]}")
    return EXIT_OK


def _add_graph_source(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group()
    source.add_argument('--graph', help='edge-list file')
    source.add_argument('--kind', help='complete, ring, line, grid, star, erdos-renyi, small-world, random-regular')
    parser.add_argument('--n', type=int)
    parser.add_argument('--side', type=int)
    parser.add_argument('--q', type=int)
    parser.add_argument('--alpha', type=float)
    parser.add_argument('--lambda', dest='lam', type=float)
    parser.add_argument('--p', type=float)
    parser.add_argument('--d', type=int)
    parser.add_argument('--seed', type=int)
    parser.add_argument('--out')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='stubborn-dynamics',
                                     description='Best-response opinion dynamics with stubborn agents')
    commands = parser.add_subparsers(dest='command', required=True)

    _add_graph_source(commands.add_parser('generate', help='write a generated graph as an edge list'))

    simulate = commands.add_parser('simulate', help='iterate the dynamics')
    _add_graph_source(simulate)
    simulate.add_argument('--profile')
    simulate.add_argument('--opinions')
    simulate.add_argument('--epsilon', type=float, default=0.0)
    simulate.add_argument('--nu', type=float, default=1e-10)
    simulate.add_argument('--max-steps', type=int, default=100_000)

    equilibrium = commands.add_parser('equilibrium', help='equilibrium by every exact method')
    _add_graph_source(equilibrium)
    equilibrium.add_argument('--profile')
    equilibrium.add_argument('--opinions')
    equilibrium.add_argument('--walks', type=int, default=0)
    equilibrium.add_argument('--hitting-out')

    spectral = commands.add_parser('spectral', help='SLEM or Perron root and exact T')
    _add_graph_source(spectral)
    spectral.add_argument('--profile')
    spectral.add_argument('--epsilon', type=float, default=0.0)

    bounds = commands.add_parser('bounds', help='path and conductance bounds')
    _add_graph_source(bounds)
    bounds.add_argument('--profile', required=True)
    bounds.add_argument('--mode', default='auto', choices=['auto', 'exact', 'heuristic'])

    sweeper = commands.add_parser('sweep', help='bounds against exact T over K_1 or n')
    _add_graph_source(sweeper)
    sweeper.add_argument('--sweep', required=True, choices=['K_1', 'n'])
    sweeper.add_argument('--range', required=True)
    sweeper.add_argument('--k', type=float, default=1.0)
    sweeper.add_argument('--mode', default='auto', choices=['auto', 'exact', 'heuristic'])

    placement = commands.add_parser('placement', help='rank single stubborn-agent placements')
    _add_graph_source(placement)
    placement.add_argument('--level', type=float, default=float('inf'))
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    # Load environment variables
    load_dotenv()
    settings = get_settings()
    logging.basicConfig(level=getattr(logging, settings.log_level, logging.INFO),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    args = build_parser().parse_args(argv)
    try:
        if args.command == 'sweep':
            if not args.kind:
                raise ParameterError("sweep needs --kind")
            return cmd_sweep(args)
        spec = build_spec(args)
        if args.command == 'generate':
            return cmd_generate(spec)
        if args.command == 'simulate':
            return cmd_simulate(spec)
        if args.command == 'equilibrium':
            return cmd_equilibrium(spec, args.hitting_out)
        if args.command == 'spectral':
            return cmd_spectral(spec)
        if args.command == 'bounds':
            return cmd_bounds(spec, args.mode)
        return cmd_placement(spec, args.level)
    except (StubbornDynamicsError, ValueError, OSError) as e:
        status(f"❌ {e}")
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
