# version check
import sys

if not sys.version_info[:2] >= (3, 12):
    print(f"Python 3.12 or higher is required, but you are using {sys.version_info.major}.{sys.version_info.minor}.")
    sys.exit(1)

import contextlib
import functools
import importlib.metadata
import logging
from pathlib import Path
from platform import python_version
from typing import IO, Iterator, Optional, Sequence

import click

from netanomaly.config import RunConfig, parameter_defaults
from netanomaly.errors import ConfigError, NetAnomalyError

logger = logging.getLogger(__name__)


EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


def _load_run_config(ctx: click.Context, param: click.Parameter, value: Optional[Path]):
    """Eager: the run config must be merged before the other options pick their defaults."""
    if value is not None:
        defaults = dict(ctx.default_map or {})
        defaults.update(parameter_defaults(ctx.info_name or '', value))
        ctx.default_map = defaults
    return value


def _record_run(f):
    @functools.wraps(f)
    def wrapper(**kwargs):
        ctx = click.get_current_context()
        inputs = tuple(
            value for param in ctx.command.params
            if isinstance(param.type, click.Path) and param.type.exists
            and isinstance(value := kwargs.get(param.name or ''), Path) and str(value) != '-'
        )
        params = {k: v for k, v in kwargs.items() if k not in ('seed', 'out')}
        run = RunConfig(ctx.info_name or '', inputs, params, kwargs['seed'], kwargs['out'])
        logger.info(f'Running {run.subcommand} (seed {run.seed}) on {", ".join(map(str, run.inputs)) or "no input files"}')
        return f(**kwargs)
    return wrapper


def common_options(f):
    f = _record_run(f)
    f = click.option('--config', type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
                     is_eager=True, expose_value=False, callback=_load_run_config,
                     help='Run config file of "key = value" lines ([<subcommand>] sections override).')(f)
    f = click.option('--out', type=click.Path(dir_okay=False, path_type=Path), default=None,
                     help='Output file. If not set, writes to stdout.')(f)
    f = click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), default=0, show_default=True,
                     help='Seed of all randomness (64-bit).')(f)
    return f


flows_argument = click.argument('flows', type=click.Path(exists=True, dir_okay=False, allow_dash=True, path_type=Path),
                                default=Path('-'))
bin_width_option = click.option('--bin-width', type=float, default=300.0, show_default=True, help='Time bin in seconds.')


def _read_flows(path: Path):
    from netanomaly.core.records import parse_flow_records
    with click.open_file(str(path), 'r') as stream:
        return parse_flow_records(stream)


def _read_links(path: Path, bin_width: float):
    from netanomaly.core.traffic import read_link_csv
    with click.open_file(str(path), 'r') as stream:
        return read_link_csv(stream, bin_width)


def _read_routing(path: Path):
    from netanomaly.core.traffic import read_routing_matrix
    with open(path) as stream:
        return read_routing_matrix(stream)


@contextlib.contextmanager
def _text_out(out: Optional[Path]) -> Iterator[IO[str]]:
    with click.open_file(str(out) if out is not None else '-', 'w') as stream:
        yield stream


def _emit_alarms(alarms, out: Optional[Path]):
    from netanomaly.core.alarm import write_alarms
    with click.open_file(str(out) if out is not None else '-', 'wb') as stream:
        count = write_alarms(alarms, stream)
    logger.info(f'{count} alarms written to {out or "stdout"}')


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(',') if v.strip())
    except ValueError as e:
        raise click.BadParameter(f'expected comma-separated numbers, got {text!r}') from e


@click.group()
@click.option('--log-file', default=None, type=click.Path(),
              help='Log file path. If not set, logs to stderr.')
@click.pass_context
def cli(ctx: click.Context, log_file):
    logging.basicConfig(level=logging.INFO, filename=log_file)
    # user config defaults for every subcommand; a run config overrides them
    ctx.default_map = {name: parameter_defaults(name) for name in cli.commands}


@cli.command(name='pca', help='Subspace (PCA) detection on link or flow volumes.')
@click.option('--links', type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help='Link CSV (t,link_id,bytes).')
@click.option('--flows', type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help='Flow CSV, binned per --key.')
@click.option('--key', type=click.Choice(['od', 'sip', 'dip', 'dip24']), default='od', show_default=True)
@click.option('--routing', type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help='Routing matrix; alarms then name the OD flow.')
@click.option('--alpha', type=float, default=0.05, show_default=True, help='False alarm rate of the Q-statistic.')
@click.option('--sigma-mult', type=float, default=3.0, show_default=True, help='Excursion rule for the subspace split.')
@click.option('--k', type=int, default=None, help='Normal subspace dimension (default: excursion rule).')
@click.option('--unit-variance', is_flag=True, help='Scale columns to unit variance.')
@bin_width_option
@common_options
def pca_command(links, flows, key, routing, alpha, sigma_mult, k, unit_variance, bin_width, seed, out):
    from netanomaly.core.traffic import KEY_SELECTORS, bin_traffic
    from netanomaly.pca.subspace import subspace_detect
    if (links is None) == (flows is None):
        raise click.UsageError('exactly one of --links and --flows is required')
    matrix = (_read_links(links, bin_width) if links is not None
              else bin_traffic(_read_flows(flows), bin_width, KEY_SELECTORS[key]))
    _emit_alarms(subspace_detect(matrix, alpha, sigma_mult, unit_variance, k,
                                 _read_routing(routing) if routing is not None else None), out)


@cli.command(name='entropy-pca', help='Subspace detection on the SIP/DIP/SP/DP entropies per flow key.')
@flows_argument
@click.option('--flow-key', type=click.Choice(['od', 'sip', 'dip', 'dip24']), default='dip24', show_default=True)
@click.option('--alpha', type=float, default=0.05, show_default=True)
@click.option('--sigma-mult', type=float, default=3.0, show_default=True)
@click.option('--k', type=int, default=None)
@bin_width_option
@common_options
def entropy_pca_command(flows, flow_key, alpha, sigma_mult, k, bin_width, seed, out):
    from netanomaly.core.traffic import KEY_SELECTORS
    from netanomaly.pca.entropy import entropy_tensor, multiway_recast
    from netanomaly.pca.subspace import subspace_detect
    tensor, flow_ids = entropy_tensor(_read_flows(flows), bin_width, KEY_SELECTORS[flow_key])
    matrix = multiway_recast(tensor, flow_ids).to_traffic_matrix(bin_width)
    _emit_alarms(subspace_detect(matrix, alpha, sigma_mult, unit_variance=True, k=k, detector='entropy-pca'), out)


@cli.command(name='defeat', help='Sketch-subspace detection with voting over hash functions.')
@flows_argument
@click.option('--m', 'hashes', type=int, default=4, show_default=True, help='Hash functions.')
@click.option('--s', 'size', type=int, default=8, show_default=True, help='Sketch size.')
@click.option('--l', 'votes', type=int, default=3, show_default=True, help='Votes needed for an alarm.')
@click.option('--alpha', type=float, default=0.001, show_default=True)
@click.option('--k', type=int, default=None)
@click.option('--training-bins', type=int, default=None, help='Default: first half of the bins.')
@click.option('--per-node', is_flag=True, help='One router per source node (second address octet).')
@bin_width_option
@common_options
def defeat_command(flows, hashes, size, votes, alpha, k, training_bins, per_node, bin_width, seed, out):
    from collections import defaultdict
    from netanomaly.sketch.defeat import DefeatConfig, defeat_pipeline
    from netanomaly.synth import node_of
    records = _read_flows(flows)
    routers: dict = defaultdict(list)
    for r in records:
        routers[node_of(r.sip) if per_node else 'all'].append(r)
    config = DefeatConfig(m=hashes, s=size, l=votes, alpha=alpha, k=k, training_bins=training_bins,
                          bin_width=bin_width, seed=seed)
    _emit_alarms(defeat_pipeline(routers, config).alarms, out)


@cli.command(name='astute', help='Flow equilibrium test between consecutive time bins.')
@flows_argument
@click.option('--p', type=float, default=0.05, show_default=True, help='Significance level.')
@bin_width_option
@common_options
def astute_command(flows, p, bin_width, seed, out):
    from netanomaly.core.traffic import KEY_SELECTORS, bin_traffic
    from netanomaly.statdetect.astute import astute_detect
    matrix = bin_traffic(_read_flows(flows), bin_width, KEY_SELECTORS['flow'])
    _, alarms = astute_detect(matrix, p)
    _emit_alarms(alarms, out)


@cli.command(name='distpca-sim', help='Simulate distributed monitors with local filtering.')
@click.option('--links', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option('--epsilon', type=float, default=0.05, show_default=True,
              help='Tolerable eigen-error as a fraction of the mean eigenvalue.')
@click.option('--delta', type=float, default=None, help='Filter width (overrides --epsilon).')
@click.option('--alpha', type=float, default=0.05, show_default=True)
@click.option('--window', type=int, default=100, show_default=True)
@click.option('--k', type=int, default=None)
@bin_width_option
@common_options
def distpca_sim_command(links, epsilon, delta, alpha, window, k, bin_width, seed, out):
    import dataclasses
    import orjson
    from netanomaly.pca.distributed import delta_from_epsilon, simulate
    from netanomaly.pca.subspace import fit_pca, normalize_columns
    matrix = _read_links(links, bin_width)
    if delta is None:
        x, _, _ = normalize_columns(matrix)
        eigenvalue_mean = float(fit_pca(x).variances.mean())
        _, delta = delta_from_epsilon(eigenvalue_mean, min(window, matrix.m), matrix.n, epsilon * eigenvalue_mean)
        logger.info(f'Filter width δ = {delta:.6g} for ε = {epsilon:g}·λ̄')
    report = simulate(matrix.values, delta, alpha, window, k)
    with click.open_file(str(out) if out is not None else '-', 'wb') as stream:
        for step in report.steps:
            stream.write(orjson.dumps(dataclasses.asdict(step)) + b'\n')


@cli.command(name='sketch-change', help='k-ary sketch change detection against a forecast model.')
@flows_argument
@click.option('--model', type=click.Choice(['MA', 'SMA', 'EWMA', 'NSHW', 'ARIMA0', 'ARIMA1']), default='EWMA',
              show_default=True)
@click.option('--window', type=int, default=1, show_default=True, help='W for MA and SMA.')
@click.option('--smoothing', type=float, default=0.5, show_default=True, help='α for EWMA and NSHW.')
@click.option('--trend', type=float, default=0.5, show_default=True, help='β for NSHW.')
@click.option('--ar', default='', help='Comma-separated AR coefficients.')
@click.option('--ma', default='', help='Comma-separated MA coefficients.')
@click.option('--r', 'ratio', type=float, default=0.1, show_default=True, help='Threshold factor R.')
@click.option('--rows', type=int, default=5, show_default=True, help='H hash functions.')
@click.option('--buckets', type=int, default=1024, show_default=True, help='K buckets.')
@click.option('--key', type=click.Choice(['sip', 'dip']), default='dip', show_default=True)
@bin_width_option
@common_options
def sketch_change_command(flows, model, window, smoothing, trend, ar, ma, ratio, rows, buckets, key, bin_width,
                          seed, out):
    from netanomaly.core.records import int_to_ip
    from netanomaly.sketch.change import sketch_change_detect
    from netanomaly.sketch.forecast import ForecastModel
    forecast_model = ForecastModel(kind=model, window=window, alpha=smoothing, beta=trend, ar=_floats(ar),
                                   ma=_floats(ma))
    alarms = sketch_change_detect(_read_flows(flows), forecast_model, ratio, key_of=lambda r: r.feature(key),
                                  bin_width=bin_width, rows=rows, buckets=buckets, seed=seed, format_key=int_to_ip)
    _emit_alarms(alarms, out)


@cli.command(name='gamma', help='Multi-resolution Gamma detector over hashed sub-traces.')
@flows_argument
@click.option('--N', 'hashes', type=int, default=8, show_default=True, help='Hash functions.')
@click.option('--M', 'buckets', type=int, default=32, show_default=True, help='Buckets per hash function.')
@click.option('--levels', type=int, default=4, show_default=True, help='Aggregation levels.')
@click.option('--base-bin', type=float, default=1.0, show_default=True, help='Finest bin in seconds.')
@click.option('--lam', type=float, default=3.0, show_default=True, help='Detection threshold λ.')
@click.option('--statistic', type=click.Choice(['alpha', 'beta', 'both']), default='alpha', show_default=True)
@click.option('--window', type=float, default=300.0, show_default=True, help='Detection window in seconds.')
@click.option('--key', type=click.Choice(['sip', 'dip']), default='sip', show_default=True)
@common_options
def gamma_command(flows, hashes, buckets, levels, base_bin, lam, statistic, window, key, seed, out):
    from netanomaly.core.records import int_to_ip
    from netanomaly.gamma import MultiResConfig, gamma_windows
    config = MultiResConfig(N=hashes, M=buckets, levels=levels, base_bin=base_bin, lam=lam, statistic=statistic,
                            seed=seed)
    _emit_alarms(gamma_windows(_read_flows(flows), lambda r: r.feature(key), config, window, int_to_ip), out)


@cli.command(name='hhh', help='Hierarchical heavy hitters over address prefixes.')
@flows_argument
@click.option('--phi', type=float, default=0.05, show_default=True, help='Heavy hitter fraction φ.')
@click.option('--epsilon', type=float, default=0.01, show_default=True, help='Error bound ε.')
@click.option('--W', 'width', type=int, default=32, show_default=True, help='Key width in bits.')
@click.option('--T-s', 'split', type=float, default=None, help='Split threshold (default: εS/W).')
@click.option('--rule', type=click.Choice(['copy_all', 'no_copy', 'splitting']), default='copy_all',
              show_default=True, help='Missed traffic rule.')
@click.option('--dimensions', type=click.IntRange(1, 2), default=1, show_default=True)
@click.option('--field', type=click.Choice(['sip', 'dip']), default='dip', show_default=True,
              help='Address of the one-dimensional trie.')
@click.option('--measure', type=click.Choice(['bytes', 'packets']), default='bytes', show_default=True)
@common_options
def hhh_command(flows, phi, epsilon, width, split, rule, dimensions, field, measure, seed, out):
    from netanomaly.hhh.trie import HhhConfig, format_prefix, hhh1d, leading_bits
    from netanomaly.hhh.grid import hhh2d
    config = HhhConfig(phi=phi, epsilon=epsilon, W=width, T_s=split)
    records = _read_flows(flows)
    lines = []
    if dimensions == 1:
        items = [(leading_bits(r.feature(field), width), float(getattr(r, measure))) for r in records]
        estimates, heavy = hhh1d(items, config, rule)
        for prefix in sorted(heavy, key=lambda p: (p[1], p[0])):
            lines.append(f'{format_prefix(prefix)} {estimates[prefix]:.6g} {rule}')
    else:
        triples = [(leading_bits(r.sip, width), leading_bits(r.dip, width), float(getattr(r, measure)))
                   for r in records]
        pair_estimates, heavy_pairs = hhh2d(triples, config, rule)
        for src, dst in sorted(heavy_pairs, key=lambda p: (p[0][1], p[1][1], p[0][0], p[1][0])):
            lines.append(f'{format_prefix(src)},{format_prefix(dst)} {pair_estimates[(src, dst)]:.6g} {rule}')
    with _text_out(out) as stream:
        stream.write(''.join(line + '\n' for line in lines))


@cli.command(name='wavelet', help='Band split and local-variability detection on a traffic signal.')
@click.option('--links', type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option('--flows', type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option('--series', default=None, help='Series (link id) to analyze; default: total traffic.')
@click.option('--window', type=int, default=12, show_default=True, help='Local variance window in bins.')
@click.option('--threshold', type=float, default=2.0, show_default=True, help='V-signal threshold.')
@click.option('--w-high', type=float, default=0.5, show_default=True)
@click.option('--w-mid', type=float, default=0.5, show_default=True)
@click.option('--h-threshold', type=float, default=0.0, show_default=True,
              help='Drop H coefficients below this magnitude.')
@click.option('--bank', type=click.Choice(['cubic-spline', 'linear-spline']), default='cubic-spline',
              show_default=True)
@bin_width_option
@common_options
def wavelet_command(links, flows, series, window, threshold, w_high, w_mid, h_threshold, bank, bin_width, seed,
                    out):
    from netanomaly.core.traffic import KEY_SELECTORS, bin_traffic
    from netanomaly.wavelet.bands import band_split, local_variability_detect
    from netanomaly.wavelet.framelet import get_bank
    if (links is None) == (flows is None):
        raise click.UsageError('exactly one of --links and --flows is required')
    matrix = (_read_links(links, bin_width) if links is not None
              else bin_traffic(_read_flows(flows), bin_width, KEY_SELECTORS['od']))
    if series is None:
        signal = matrix.values.sum(axis=1)
    elif series in matrix.series_ids:
        signal = matrix.values[:, matrix.series_ids.index(series)]
    else:
        raise ConfigError(f'unknown series {series!r}')
    bands = band_split(signal, get_bank(bank), h_threshold)
    _emit_alarms(local_variability_detect(bands.mid, bands.high, window, (w_high, w_mid), threshold).alarms, out)


@cli.command(name='kalman', help='Kalman filter on link loads with residual detectors per OD flow.')
@click.option('--links', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option('--routing', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option('--method', type=click.Choice(['variance', 'cusum', 'glr', 'multiscale', 'var_shift']),
              default='variance', show_default=True)
@click.option('--threshold', type=float, default=3.0, show_default=True, help='T_h.')
@click.option('--q', 'q_scale', type=float, default=1.0, show_default=True,
              help='State noise, relative to the variance of the flow increments.')
@click.option('--r', 'r_scale', type=float, default=0.01, show_default=True,
              help='Measurement noise, relative to the variance of the link increments.')
@click.option('--mu1', type=float, default=1.0, show_default=True, help='CUSUM level after the change.')
@click.option('--window', type=int, default=10, show_default=True)
@click.option('--scales', type=int, default=4, show_default=True)
@bin_width_option
@common_options
def kalman_command(links, routing, method, threshold, q_scale, r_scale, mu1, window, scales, bin_width, seed, out):
    import numpy as np
    import scipy.linalg
    from netanomaly.kalman.detectors import DetectorParams, detect
    from netanomaly.kalman.filter import StateSpaceModel, kalman_filter
    matrix = _read_links(links, bin_width)
    A = _read_routing(routing)
    if A.shape[0] != matrix.n:
        raise ConfigError(f'the routing matrix has {A.shape[0]} rows for {matrix.n} links')
    estimates = matrix.values @ scipy.linalg.pinv(A).T
    flow_scale = np.var(np.diff(estimates, axis=0), axis=0) if matrix.m > 1 else np.ones(A.shape[1])
    link_scale = np.var(np.diff(matrix.values, axis=0), axis=0) if matrix.m > 1 else np.ones(matrix.n)
    Q = np.diag(q_scale * flow_scale + 1e-9)
    R = np.diag(r_scale * link_scale + 1e-9)
    model = StateSpaceModel(A=A, C=np.eye(A.shape[1]), Q=Q, R=R)
    trace = kalman_filter(model, matrix.values, x0=estimates[0], P0=Q)
    params = DetectorParams(threshold=threshold, mu1=mu1, window=window, scales=scales)
    scale = trace.tau_scale()
    alarms = []
    for j in range(A.shape[1]):
        detection = detect(trace.tau[:, j], method, params, scale=scale[:, j] if method == 'variance' else None,
                           keys=(f'flow={j}',))
        alarms.extend(detection.alarms)
    alarms.sort(key=lambda a: (a.t_index, a.keys))
    _emit_alarms(alarms, out)


@cli.command(name='statglr', help='AR-residual GLR change detection combined by the anomaly operator.')
@click.option('--links', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True,
              help='Link CSV; every link is one monitored variable.')
@click.option('--p', type=int, default=2, show_default=True, help='AR order.')
@click.option('--n-learning', type=int, default=64, show_default=True)
@click.option('--n-test', type=int, default=16, show_default=True)
@click.option('--eta-threshold', type=float, default=0.99, show_default=True,
              help='η above which a variable counts as changed.')
@click.option('--anomalous', default=None, help='Comma-separated indices of anomalous eigenvalues (default: all).')
@bin_width_option
@common_options
def statglr_command(links, p, n_learning, n_test, eta_threshold, anomalous, bin_width, seed, out):
    from netanomaly.statdetect.glr import GlrConfig, statglr_detect
    matrix = _read_links(links, bin_width)
    indices = [int(v) for v in _floats(anomalous)] if anomalous else None
    alarms = statglr_detect(matrix.values, GlrConfig(p=p, N_L=n_learning, N_S=n_test), eta_threshold, indices,
                            [str(s) for s in matrix.series_ids])
    _emit_alarms(alarms, out)


@cli.command(name='anomography', help='Infer anomalous OD flows from link loads.')
@click.option('--links', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option('--routing', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option('--transform', type=click.Choice(['spatial_pca', 'temporal_pca', 'fourier', 'wavelet', 'arima']),
              default='spatial_pca', show_default=True)
@click.option('--k', type=int, default=1, show_default=True, help='Normal subspace dimension (PCA transforms).')
@click.option('--cutoff', type=int, default=1, show_default=True, help='c for fourier and wavelet.')
@click.option('--ar', default='', help='Comma-separated AR coefficients (arima).')
@click.option('--ma', default='', help='Comma-separated MA coefficients (arima).')
@click.option('--d', type=click.IntRange(0, 1), default=0, show_default=True, help='Differencing (arima).')
@click.option('--solver', type=click.Choice(['omp', 'pinv']), default='omp', show_default=True)
@click.option('--sparsity', type=int, default=None, help='OMP flow limit.')
@click.option('--tol-fraction', type=float, default=0.05, show_default=True,
              help='OMP stops once the residual is below this fraction of ‖ỹ‖.')
@click.option('--mad-multiplier', type=float, default=5.0, show_default=True)
@click.option('--estimates', type=click.Path(dir_okay=False, path_type=Path), default=None,
              help='Write x̃ as CSV (time,flow,value).')
@bin_width_option
@common_options
def anomography_command(links, routing, transform, k, cutoff, ar, ma, d, solver, sparsity, tol_fraction,
                        mad_multiplier, estimates, bin_width, seed, out):
    from netanomaly.anomography.pipeline import anomography_pipeline
    from netanomaly.anomography.transforms import Transform
    spec = Transform(kind=transform, k=k, cutoff=cutoff, ar=_floats(ar), ma=_floats(ma), d=d)
    result = anomography_pipeline(_read_links(links, bin_width), _read_routing(routing), spec, solver, sparsity,
                                  tol_fraction, mad_multiplier)
    if estimates is not None:
        with open(estimates, 'w') as stream:
            result.write_csv(stream)
    _emit_alarms(result.alarms, out)


@cli.command(name='extract', help='Histogram-clone detection followed by frequent item-set mining.')
@flows_argument
@click.option('--features', default='sip,dip,sp,dp,packets,bytes', show_default=True,
              help='Comma-separated detector features.')
@click.option('--clones', type=int, default=3, show_default=True, help='k histogram clones per feature.')
@click.option('--bins', type=int, default=256, show_default=True, help='m bins per clone.')
@click.option('--training', type=int, default=20, show_default=True, help='Training intervals.')
@click.option('--sigma-mult', type=float, default=3.0, show_default=True)
@click.option('--min-support', type=int, default=10_000, show_default=True, help='Minimum item-set support (flows).')
@click.option('--alarms', type=click.Path(dir_okay=False, path_type=Path), default=None,
              help='Also write the detector alarms as JSON lines.')
@bin_width_option
@common_options
def extract_command(flows, features, clones, bins, training, sigma_mult, min_support, alarms, bin_width, seed, out):
    from netanomaly.extraction.apriori import write_itemsets
    from netanomaly.extraction.pipeline import ExtractConfig, extract_pipeline
    config = ExtractConfig(features=tuple(f.strip() for f in features.split(',') if f.strip()), clones=clones,
                           bins=bins, training_intervals=training, bin_width=bin_width, sigma_mult=sigma_mult,
                           min_support=min_support, seed=seed)
    result = extract_pipeline(_read_flows(flows), config)
    if alarms is not None:
        _emit_alarms(result.alarms, alarms)
    with _text_out(out) as stream:
        write_itemsets(result.itemsets, stream)


@cli.command(name='roc', help='ROC curve of scored events, or the detector comparison benchmark.')
@click.option('--scores', type=click.Path(exists=True, dir_okay=False, allow_dash=True, path_type=Path),
              default=None, help='CSV lines "score,label" with label 0 or 1.')
@click.option('--benchmark', is_flag=True, help='AUC of all Kalman residual detectors on an injected level shift.')
@click.option('--length', type=int, default=1000, show_default=True, help='Benchmark length.')
@click.option('--shift', type=float, default=3.0, show_default=True, help='Benchmark shift in noise deviations.')
@click.option('--duration', type=int, default=20, show_default=True, help='Benchmark shift duration.')
@common_options
def roc_command(scores, benchmark, length, shift, duration, seed, out):
    from netanomaly.kalman.roc import benchmark_aucs, mean_shift_benchmark, roc_curve
    if benchmark == (scores is not None):
        raise click.UsageError('exactly one of --scores and --benchmark is required')
    with _text_out(out) as stream:
        if benchmark:
            aucs = benchmark_aucs(mean_shift_benchmark(length, shift, duration, seed))
            stream.write('method,auc\n')
            for method, auc in aucs.items():
                stream.write(f'{method},{auc:.6f}\n')
            return
        values, labels = _read_scores(scores)
        roc_curve(values, labels).write_csv(stream)


def _read_scores(path: Path) -> tuple[list[float], list[bool]]:
    from netanomaly.errors import ParseError
    values: list[float] = []
    labels: list[bool] = []
    with click.open_file(str(path), 'r') as stream:
        for line_number, line in enumerate(stream, start=1):
            fields = [f.strip() for f in line.split(',')]
            if not line.strip() or (line_number == 1 and fields[0] == 'score'):
                continue
            if len(fields) != 2 or fields[1] not in ('0', '1'):
                raise ParseError('expected "score,label" with label 0 or 1', line_number)
            try:
                values.append(float(fields[0]))
            except ValueError as e:
                raise ParseError(str(e), line_number) from e
            labels.append(fields[1] == '1')
    return values, labels


@cli.command(name='synth', help='Synthetic flow trace (or link loads) with injected anomalies.')
@click.option('--anomaly', 'anomalies', multiple=True,
              type=click.Choice(['alpha', 'dos', 'ddos', 'flashcrowd', 'portscan', 'netscan', 'outage', 'p2mp',
                                 'worm']),
              help='Anomaly to inject (repeatable).')
@click.option('--start', type=int, default=None, help='First anomalous bin (default: middle of the trace).')
@click.option('--duration', type=int, default=12, show_default=True, help='Anomaly duration in bins.')
@click.option('--intensity', type=float, default=1.0, show_default=True)
@click.option('--bins', type=int, default=288, show_default=True)
@click.option('--nodes', type=int, default=10, show_default=True)
@click.option('--hosts-per-node', type=int, default=50, show_default=True)
@click.option('--flows-per-bin', type=int, default=200, show_default=True)
@click.option('--links', 'link_mode', is_flag=True, help='Emit link loads (t,link_id,bytes) instead of flows.')
@click.option('--chords', type=int, default=0, show_default=True, help='Chords of the ring topology.')
@click.option('--routing', type=click.Path(dir_okay=False, path_type=Path), default=None,
              help='Routing matrix output (required with --links).')
@click.option('--truth', type=click.Path(dir_okay=False, path_type=Path), default=None,
              help='Write the injected anomalies as JSON lines.')
@bin_width_option
@common_options
def synth_command(anomalies, start, duration, intensity, bins, nodes, hosts_per_node, flows_per_bin, link_mode,
                  chords, routing, truth, bin_width, seed, out):
    import dataclasses
    import orjson
    from netanomaly.core.records import write_flow_records
    from netanomaly.core.traffic import write_link_csv, write_routing_matrix
    from netanomaly.synth import AnomalySpec, SynthConfig, synth_flows, synth_links
    if link_mode and routing is None:
        raise click.UsageError('--links needs --routing for the routing matrix')
    config = SynthConfig(bins=bins, bin_width=bin_width, nodes=nodes, hosts_per_node=hosts_per_node,
                         flows_per_bin=flows_per_bin)
    specs = [AnomalySpec(kind=kind, start=start if start is not None else bins // 2, duration=duration,
                         intensity=intensity) for kind in anomalies]
    records, injected = synth_flows(config, specs, seed)
    if truth is not None:
        with open(truth, 'wb') as stream:
            for anomaly in injected:
                stream.write(orjson.dumps(dataclasses.asdict(anomaly)) + b'\n')
    with _text_out(out) as stream:
        if link_mode:
            Y, A, _ = synth_links(records, config, chords)
            write_link_csv(Y, stream)
            with open(routing, 'w') as routing_stream:
                write_routing_matrix(A, routing_stream)
        else:
            write_flow_records(records, stream)


@cli.command(name='version', help='Print the version of netanomaly.')
def version():
    print('netanomaly:', importlib.metadata.version('netanomaly'))
    print('python:', python_version())


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and map the outcome to the exit code (0 ran, 1 usage error, 2 data or contract error)."""
    try:
        cli.main(args=list(argv) if argv is not None else None, prog_name='netanomaly', standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo('Aborted!', err=True)
        return EXIT_USAGE
    except NetAnomalyError as e:
        click.echo(f'Error: {e}', err=True)
        return EXIT_DATA
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
