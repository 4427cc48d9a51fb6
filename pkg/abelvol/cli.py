"""Command-line front end. Every command makes a run directory, logs into it and writes its reports there.

Exit codes: 0 ok, 1 selftest failure, 2 bad config, 3 integration failure, 4 convergence failure, 5 accuracy
gate failure."""
import ast
import argparse
import numpy as np
import pandas as pd
from logging import getLogger
from pavlov import runs, logs, reports, files
from rebar import dotdict
from . import config as config_, constants, stability, fuchsian, monodromy, abelian, section, volume, selftest
from .common import ConfigError, IntegrationError, ConvergenceError, GridConvergenceError, AccuracyGateError

log = getLogger(__name__)

EXIT_CODES = [
    (ConfigError, 2),
    (IntegrationError, 3),
    (ConvergenceError, 4),
    (GridConvergenceError, 4),
    (AccuracyGateError, 5),
    (ValueError, 2)]

def _metadata(curve=None):
    meta = dict(
        punctures=constants.PUNCTURES,
        higgs_slope_sign=constants.HIGGS_SLOPE_SIGN,
        orientation=constants.ORIENTATION,
        loop_convention=dict(
            sphere='base 2+|m|; M₀ clockwise around all finite punctures, Mᵢ lassos',
            torus='base (1+τ)/4; A: b → b+1; B: b → b+τ; Nᵢ lassos around the half-periods'))
    if curve is not None:
        meta['tau'] = curve.tau
        meta['m'] = curve.m
    return meta

def cmd_stability(config, run):
    config_.require(config, 'weights')
    m = config.m if config.m is not None else config_.curve(config).m
    special = {name: dict(verdict=v.verdict, witness=str(v.witness), pdeg=v.pdeg)
               for name, v in stability.special_verdicts(config.weights, m).items()}
    report = dotdict.dotdict(
        weights=config.weights.rho,
        m=m,
        biswas=stability.biswas_admissible(config.weights),
        special=special)
    if config.u is not None:
        v = stability.classify_parabolic_structure(config.weights, config.u, m)
        report['u'] = dict(u=config.u, verdict=v.verdict, witness=str(v.witness), pdeg=v.pdeg)
    reports.write_json(run, 'stability', report)
    return report

def cmd_system(config, run):
    config_.require(config, 'weights', 'u')
    m = config.m if config.m is not None else config_.curve(config).m
    system = fuchsian.fuchsian_system(config.weights, m, config.u, config.lam)
    fuchsian.check_system(system)
    dim, _ = fuchsian.higgs_space(config.u)
    report = dotdict.dotdict(
        weights=config.weights.rho, m=m, u=config.u, lam=config.lam,
        residues=system.A,
        eigenlines=fuchsian.eigenlines(config.u),
        higgs=fuchsian.higgs_matrices(config.u).Psi,
        higgs_dimension=dim,
        stratum=stability.stratum(config.u, m),
        verdict=stability.classify_parabolic_structure(config.weights, config.u, m).verdict)
    reports.write_json(run, 'system', report)
    return report

def cmd_monodromy(config, run):
    config_.require(config, 'weights', 'u')
    m = config.m if config.m is not None else config_.curve(config).m
    system = fuchsian.fuchsian_system(config.weights, m, config.u, config.lam)
    rep = monodromy.sphere_monodromy(system, rtol=config.rtol)
    status, H = monodromy.status(rep)
    report = dotdict.dotdict(
        generators=rep.generators,
        traces=monodromy.cycle_traces(rep),
        trace_conditions=monodromy.trace_conditions(rep),
        local_eigenvalue_errors=monodromy.local_eigenvalue_errors(rep.generators, config.weights.rho),
        product_order=list(rep.order),
        product_defect=rep.defect,
        status=status,
        residual=monodromy.unitarizability_residual(rep),
        hermitian_form=None if H is None else H.H,
        meta=_metadata())
    if config.cross_check:
        report['cross_check'] = section.cross_validate(config.weights, config_.curve(config), config.u, rtol=config.rtol)
    reports.write_json(run, 'monodromy', report)
    return report

def cmd_beta(config, run):
    config_.require(config, 'weights', 'xi')
    curve = config_.curve(config)
    conn = abelian.abelian_connection(config.weights, curve, config.xi, config.alpha)
    rp, rm = abelian.residues(conn)
    report = dotdict.dotdict(
        xi=config.xi,
        beta_plus=conn.beta_plus,
        beta_minus=conn.beta_minus,
        residues_plus=rp,
        residues_minus=rm,
        residue_product_error=np.abs(rp*rm - config.weights.hat**2),
        condition=abelian.residue_map_condition(curve, config.xi),
        seed=section.seed_from_spin_expansion(config.weights, curve, config.xi),
        meta=_metadata(curve))
    reports.write_json(run, 'beta', report)
    return report

def grid_frame(grid):
    ok = ~grid.excluded
    return pd.DataFrame(dict(
        re_xi=grid.xi[ok].real, im_xi=grid.xi[ok].imag,
        re_alpha=grid.alpha[ok].real, im_alpha=grid.alpha[ok].imag,
        residual=grid.residual[ok], converged=grid.converged[ok]))

def _grid(config, curve):
    grid = section.ms_grid(
        config.weights, curve, config.N, radius=config.exclusion, rtol=config.rtol,
        threads=config.threads, executor=config.executor, progress=True)
    return grid

def cmd_ms_grid(config, run):
    config_.require(config, 'weights')
    curve = config_.curve(config)
    grid = _grid(config, curve)
    reports.write_csv(run, 'ms-grid', grid_frame(grid))
    section.check_grid(grid)
    symmetries = section.verify_section_symmetries(grid, threads=config.threads, executor=config.executor)

    anchor = grid.meta['anchor']
    uniqueness = section.uniqueness_probe(grid.weights, curve, grid.xi[anchor], grid.alpha[anchor], rtol=config.rtol)
    residues = {}
    for i, mu in enumerate(abelian.mu_table(grid.weights)):
        if mu > 0:
            c, expected = section.fit_spin_residue(grid.weights, curve, i, rtol=config.rtol)
            residues[str(i)] = dict(fit=c, expected=expected, relative_error=abs(c - expected)/abs(expected))

    report = dotdict.dotdict(
        N=grid.N, radius=grid.radius, fraction=grid.fraction,
        symmetries=symmetries, uniqueness=uniqueness, spin_residues=residues,
        meta=dict(_metadata(curve), **grid.meta))
    reports.write_json(run, 'ms-grid', report)

    import matplotlib
    matplotlib.use('Agg')
    from . import plot
    fig = plot.plot_grid(grid)
    fig.savefig(files.new_file(run, 'ms-grid.png'), bbox_inches='tight')
    plot.plt.close(fig)
    return report

def cmd_volume(config, run):
    config_.require(config, 'weights')
    volume.witten_closed_form(config.weights)
    curve = config_.curve(config)
    grid = _grid(config, curve)
    reports.write_csv(run, 'ms-grid', grid_frame(grid))
    section.check_grid(grid)

    table = None
    if config.levels:
        table = volume.convergence_table(config.weights, curve, config.levels, rtol=config.rtol, threads=config.threads, executor=config.executor)
        reports.write_csv(run, 'convergence', table)
    result = volume.symplectic_volume(grid, table)
    summary = dict(result.asdict(), meta=dict(_metadata(curve), **result.meta))
    if table is not None:
        summary['extrapolated_levels'] = table.attrs['extrapolated']
    reports.write_json(run, 'volume', summary)
    if result.relative_error >= config.gate:
        raise AccuracyGateError(f'Relative error {result.relative_error:.2e} is over the gate {config.gate:.2e}')
    return result.asdict()

def cmd_selftest(config, run):
    df = selftest.run(seed=config.seed)
    reports.write_csv(run, 'selftest', df)
    print(df.to_string(index=False))
    return df

COMMANDS = {
    'stability': cmd_stability,
    'system': cmd_system,
    'monodromy': cmd_monodromy,
    'beta': cmd_beta,
    'ms-grid': cmd_ms_grid,
    'volume': cmd_volume,
    'selftest': cmd_selftest}

def _literal(s):
    if s in ('inf', '∞'):
        return np.inf
    try:
        return ast.literal_eval(s)
    except (ValueError, SyntaxError):
        raise argparse.ArgumentTypeError(f'Can\'t parse "{s}"')

def parser():
    p = argparse.ArgumentParser(prog='abelvol', description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument('command', choices=list(COMMANDS))
    p.add_argument('-c', '--config', default=None, help='flat "key = value" config file')
    for key in ('weights', 'm', 'tau', 'u', 'lam', 'alpha', 'xi', 'exclusion', 'rtol', 'gate'):
        p.add_argument(f'--{key}', type=_literal, default=None)
    p.add_argument('--N', type=int, default=None)
    p.add_argument('--threads', type=int, default=None)
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--executor', default=None)
    p.add_argument('--output', default=None)
    p.add_argument('--levels', type=_literal, default=None, help='grid sizes for a volume convergence table')
    p.add_argument('--cross-check', dest='cross_check', action='store_const', const=True, default=None)
    return p

def main(argv=None):
    args = vars(parser().parse_args(argv))
    command = args.pop('command')
    path = args.pop('config')
    try:
        config = config_.load(path, **args)
    except ConfigError as e:
        log.error(str(e))
        return 2

    if config.output is not None:
        runs.ROOT = config.output
    run = runs.new_run(command, command=command, config=dict(config))
    try:
        with logs.to_run(run):
            result = COMMANDS[command](config, run)
    except Exception as e:
        for cls, code in EXIT_CODES:
            if isinstance(e, cls):
                log.error(f'{type(e).__name__}: {e}')
                return code
        raise
    if command == 'selftest' and not result.passed.all():
        return 1
    return 0

#########
# TESTS #
#########

from pavlov import tests as pavlov_tests

@pavlov_tests.mock_dir
def test_stability_command():
    assert main(['stability', '--weights', '(.45, .45, .45, .05)', '--m', '2.5']) == 0
    run = runs.resolve(-1)
    report = reports.read_json(run, 'stability')
    assert report['biswas'] is False
    assert set(report['special']) == {'0', '1', 'm', 'inf'}

@pavlov_tests.mock_dir
def test_bad_config():
    assert main(['stability', '--weights', '(.6, .2, .2, .2)']) == 2
    assert main(['stability']) == 2
    assert main(['volume', '--weights', '(.45, .45, .45, .05)', '--m', '2.5']) == 2
    # no curve given
    assert main(['volume', '--weights', '(.25, .25, .25, .25)']) == 2

@pavlov_tests.mock_dir
def test_monodromy_command():
    assert main(['monodromy', '--weights', str(fuchsian.EXAMPLE), '--m', '2.5', '--u', '0.4+0.2j', '--lam', '0.7-0.2j']) == 0
    report = reports.read_json(runs.resolve(-1), 'monodromy')
    assert max(report['local_eigenvalue_errors']) < 1e-7
    assert report['product_defect'] < 1e-7
    assert report['status'] in ('non-unitarizable (complex trace)', 'real-trace-indefinite', 'unitarizable')
