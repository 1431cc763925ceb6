import config
import argparse
import logging
import os
import sys
import concurrent.futures
from dataclasses import dataclass, asdict
import numpy as np
from utils.report_writer import FORMATS, write_report
from utils.weights_helper import get_shared_weights
from hardy.bounds import BoundCalculator, Trend, bound_reports, implied_norm_bound
from hardy.errors import DomainError, HardyBoundsError, NumericError, WeightError
from hardy.harness import INEQUALITIES, TrialSettings, chunk_ranges, run_trial_chunk, summarize
from hardy.opnorm import NormCalculator
from hardy.weights import Exponent, WeightSpec

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    command: str
    weights: str = None
    n: int = None
    p: float = None
    L: float = None
    M: float = None
    seed: int = config.DEFAULT_SEED
    trials: int = config.DEFAULT_TRIALS
    output_format: str = config.OUTPUT_FORMAT
    tol: float = config.VERIFY_TOL
    ineq: str = 'all'
    axis: str = None
    values: tuple = None
    out: str = None

    @classmethod
    def from_args(cls, args):
        values = None
        if getattr(args, 'values', None):
            values = tuple(_parse_values(args.values, args.axis))
        return cls(
            command=args.command,
            weights=args.weights,
            n=args.n,
            p=args.p,
            L=args.L,
            M=args.M,
            seed=args.seed,
            trials=getattr(args, 'trials', config.DEFAULT_TRIALS),
            output_format=args.format,
            tol=args.tol,
            ineq=getattr(args, 'ineq', 'all'),
            axis=getattr(args, 'axis', None),
            values=values,
            out=args.out,
        )

    def as_dict(self):
        # --out is not part of the report
        return {k: v for k, v in asdict(self).items() if k != 'out'}


def _parse_values(text, axis):
    values = []
    for item in filter(None, (t.strip() for t in text.split(','))):
        try:
            values.append(int(item) if axis == 'n' else float(item))
        except ValueError:
            raise DomainError(f"--values: '{item}' is not a valid {axis} value")
    if not values:
        raise DomainError("--values is empty")
    return values


def _load_weights(spec, n):
    try:
        return get_shared_weights(spec, n)
    except WeightError as e:
        raise WeightError(f"--weights {spec}: {e}") from e


def _exponent(p):
    try:
        return Exponent(p)
    except DomainError as e:
        raise DomainError(f"--p: {e}") from e


def _warn_trends(reports):
    for r in reports:
        if r.trend == Trend.INCREASING_TAIL and r.is_supremum:
            logger.warning(f"{r.method.value} is still increasing at n={r.argmax}; "
                           f"{r.value:.12g} is only a lower estimate of the infinite supremum")


# --- Worker Functions (Must be top-level for pickling) ---

def task_verify_chunk(settings, start, stop):
    logger.debug(f"  [Task] {settings.inequality} trials {start}..{stop - 1} started...")
    outcomes = run_trial_chunk(settings, start, stop)
    logger.debug(f"  [Task] {settings.inequality} trials {start}..{stop - 1} finished.")
    return outcomes


def _thread_cap():
    raw = os.environ.get(config.THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise DomainError(f"{config.THREADS_ENV} must be an integer, got '{raw}'")


def run_trials(settings, trials, threads):
    """All trials of one inequality, merged in trial-index order."""
    ranges = chunk_ranges(trials, threads)
    if threads <= 1 or len(ranges) == 1:
        return run_trial_chunk(settings, 0, trials)

    results = {}
    failed = []
    with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as executor:
        futures = {executor.submit(task_verify_chunk, settings, lo, hi): (lo, hi) for lo, hi in ranges}
        logger.debug(f"Submitted {len(futures)} chunks of '{settings.inequality}' to process pool.")
        for future in concurrent.futures.as_completed(futures):
            task_name = f"{settings.inequality}[{futures[future][0]}:{futures[future][1]}]"
            try:
                results[futures[future][0]] = future.result()
            except Exception as e:
                logger.error(f"Task '{task_name}' generated an exception: {e}")
                failed.append(task_name)
    if failed:
        raise RuntimeError(f"{len(failed)} trial chunk(s) failed: {', '.join(sorted(failed))}")
    return [o for start in sorted(results) for o in results[start]]


# --- Commands ---

def cmd_bounds(cfg):
    n = cfg.n if cfg.n is not None else config.DEFAULT_N_BOUNDS
    w = _load_weights(cfg.weights, n)
    e = _exponent(cfg.p) if cfg.p is not None else None
    if cfg.L is not None and e is None:
        raise DomainError("--L needs --p")

    reports = bound_reports(w, e, cfg.L)
    _warn_trends(reports)
    rows = [r.as_row(e) for r in reports]

    calc = BoundCalculator(w)
    if e is not None:
        for name, min_L in (('MinLLocal', calc.min_L_local(e)), ('MinLThm31', calc.min_L_thm31(e))):
            rows.append({
                'method': name,
                'value': min_L,
                'argmax': None,
                'trend': None,
                'feasible': min_L is not None,
                'norm_bound': implied_norm_bound(e, min_L),
                'carleman_constant': None,
            })
    best_E = calc.carleman_constants()['best']
    rows.append({
        'method': 'CarlemanBest',
        'value': best_E,
        'argmax': None,
        'trend': None,
        'feasible': None,
        'norm_bound': None,
        'carleman_constant': best_E,
    })
    return rows, {'pass': True, 'worst_residual': None, 'seed': cfg.seed}


def cmd_norm(cfg):
    n = cfg.n if cfg.n is not None else config.DEFAULT_N_NORM
    e = _exponent(cfg.p if cfg.p is not None else config.DEFAULT_P)
    w = _load_weights(cfg.weights, n)
    result = NormCalculator(w).sandwich(e, n)
    result.pop('witness')
    logger.info(f"N={n}, p={e.p}: lower {result['lower']:.12g} <= upper {result['upper']!r}")
    ok = not result['violated']
    return [result], {'pass': ok, 'worst_residual': result['gap'], 'seed': cfg.seed}


def cmd_verify(cfg):
    if cfg.trials < 1:
        raise DomainError(f"--trials must be at least 1, got {cfg.trials}")
    names = INEQUALITIES if cfg.ineq == 'all' else (cfg.ineq,)
    threads = _thread_cap()
    rows = []
    for name in names:
        settings = TrialSettings(
            inequality=name,
            p=cfg.p,
            L=cfg.L,
            M=cfg.M,
            weights=cfg.weights,
            n_max=cfg.n if cfg.n is not None else config.DEFAULT_N_VERIFY,
            base_seed=cfg.seed,
            tol=cfg.tol,
        )
        logger.info(f"Verifying '{name}' over {cfg.trials} trials (seed {cfg.seed})...")
        row = summarize(run_trials(settings, cfg.trials, threads))
        logger.info(f"  '{name}': {row['passed']}/{row['checked']} pass, worst relative residual {row['worst_relative_residual']!r}")
        rows.append(row)
    residuals = [r['worst_relative_residual'] for r in rows if r['worst_relative_residual'] is not None]
    summary = {
        'pass': all(r['pass'] for r in rows),
        'worst_residual': min(residuals) if residuals else None,
        'seed': cfg.seed,
    }
    return rows, summary


def cmd_sweep(cfg):
    axis = cfg.axis
    values = list(cfg.values) if cfg.values else list(config.SWEEP_DEFAULTS[axis])
    rows = []
    previous = None
    for v in values:
        n = int(v) if axis == 'n' else (cfg.n if cfg.n is not None else config.DEFAULT_N_BOUNDS)
        p = float(v) if axis == 'p' else (cfg.p if cfg.p is not None else config.DEFAULT_P)
        spec = WeightSpec('power', alpha=float(v)) if axis == 'alpha' else WeightSpec.parse(cfg.weights)
        e = _exponent(p)
        w = _load_weights(spec, n)

        calc = BoundCalculator(w)
        reports = {r.method.value: r for r in (calc.cartlidge_L(), calc.bennett_E(), calc.m_log(), calc.m_sum())}
        _warn_trends(reports.values())

        # warm start nested sections from the previous witness, zero padded
        start = None
        if axis == 'n' and previous is not None and previous.size < n:
            start = np.concatenate((previous, np.zeros(n - previous.size)))
        estimate = NormCalculator(w).estimate(e, n, start=start)
        previous = estimate.witness

        min_local, min_thm31 = calc.min_L_local(e), calc.min_L_thm31(e)
        rows.append({
            axis: v,
            'n': n,
            'p': p,
            'weights': str(spec),
            'CartlidgeL': reports['CartlidgeL'].value,
            'BennettE': reports['BennettE'].value,
            'MLog': reports['MLog'].value,
            'MSum': reports['MSum'].value,
            'min_L_local': min_local,
            'min_L_thm31': min_thm31,
            'norm_bound': implied_norm_bound(e, reports['CartlidgeL'].value),
            'norm_bound_thm31': implied_norm_bound(e, min_thm31),
            'norm_lower': estimate.value,
            'converged': estimate.converged,
        })
    return rows, {'pass': True, 'worst_residual': None, 'seed': cfg.seed}


COMMANDS = {
    'bounds': cmd_bounds,
    'norm': cmd_norm,
    'verify': cmd_verify,
    'sweep': cmd_sweep,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--n', type=int, default=None, help='number of terms / section size')
    common.add_argument('--p', type=float, default=None, help='exponent p > 1')
    common.add_argument('--L', type=float, default=None, help='bound parameter L in (0, p)')
    common.add_argument('--M', type=float, default=None, help='Carleman parameter M')
    common.add_argument('--seed', type=int, default=config.DEFAULT_SEED)
    common.add_argument('--format', choices=FORMATS, default=config.OUTPUT_FORMAT)
    common.add_argument('--tol', type=float, default=config.VERIFY_TOL, help='verifier tolerance')
    common.add_argument('--out', default=None, help='write the report here instead of stdout')
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', action='store_true')
    verbosity.add_argument('--quiet', action='store_true')

    parser = argparse.ArgumentParser(
        prog='hardy-bounds',
        description='Norm bounds and inequality checks for weighted mean matrices.',
    )
    sub = parser.add_subparsers(dest='command', required=True)

    for name, help_text in (('bounds', 'bound constants and feasibility conditions'),
                            ('norm', 'lower/upper sandwich of a finite-section lp norm')):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument('--weights', default='const', help='const | power:alpha=<real> | harmonic | file:<path> | random:seed=<int>')

    p = sub.add_parser('verify', parents=[common], help='run seeded random verification trials')
    p.add_argument('--weights', default=None, help='weight spec; default depends on the inequality')
    p.add_argument('--ineq', choices=INEQUALITIES + ('all',), default='all')
    p.add_argument('--trials', type=int, default=config.DEFAULT_TRIALS)

    p = sub.add_parser('sweep', parents=[common], help='bound constants and norm lower bounds across an axis')
    p.add_argument('--weights', default='const')
    p.add_argument('--axis', choices=tuple(config.SWEEP_DEFAULTS), required=True)
    p.add_argument('--values', default=None, help='comma separated axis values')
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    elif args.quiet:
        logging.getLogger().setLevel(logging.WARNING)
    else:
        logging.getLogger().setLevel(logging.INFO)

    try:
        cfg = RunConfig.from_args(args)
        logger.info(f"Starting '{cfg.command}' (format {cfg.output_format})...")
        rows, summary = COMMANDS[cfg.command](cfg)
        write_report(cfg.command, cfg.as_dict(), rows, summary, cfg.output_format, cfg.out)
    except NumericError as e:
        # a computation broke down: same exit as a crashed worker
        logger.error(f"{args.command}: {e}")
        return 1
    except HardyBoundsError as e:
        logger.error(f"{args.command}: {e}")
        return 2
    except RuntimeError as e:
        logger.error(f"{args.command}: {e}")
        return 1

    if not summary['pass']:
        logger.error(f"{cfg.command}: some checks failed")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
