import matplotlib
import matplotlib.pyplot as plt
import numpy as np
from . import section, volume

def plot_grid(grid):
    fig, axes = plt.subplots(2, 3)
    fig.set_size_inches(12, 8)

    ax = axes[0, 0]
    ax.imshow(grid.alpha.real.T, origin='lower')
    ax.set_title('Re α')

    ax = axes[0, 1]
    ax.imshow(grid.alpha.imag.T, origin='lower')
    ax.set_title('Im α')

    ax = axes[0, 2]
    ax.imshow(np.log10(np.where(grid.converged, np.maximum(grid.residual, 1e-17), np.nan)).T, origin='lower')
    ax.set_title('log(residual)')

    f = section.remainder(grid)
    ax = axes[1, 0]
    ax.imshow(np.abs(f).T, origin='lower')
    ax.set_title('|α - seed|')

    ax = axes[1, 1]
    ax.imshow(volume.kahler_density(grid).real.T, origin='lower', cmap='RdBu')
    ax.set_title('∂α/∂ξ̄')

    ax = axes[1, 2]
    ok = grid.converged
    ax.scatter(grid.xi[ok].real, grid.xi[ok].imag, c=grid.alpha[ok].real, marker='.')
    ax.scatter(grid.xi[grid.excluded].real, grid.xi[grid.excluded].imag, color='k', marker='x')
    ax.set_aspect(1)
    ax.set_title('grid')

    for ax in axes.flat[:5]:
        ax.set_xticks([])
        ax.set_yticks([])

    return fig

#########
# TESTS #
#########

def test_plot_grid():
    matplotlib.use('Agg')
    from . import elliptic
    curve = elliptic.curve_from_tau(elliptic.tau_from_m(2.5))
    grid = section.ms_grid([.25]*4, curve, 8, rtol=1e-11)
    fig = plot_grid(grid)
    assert len(fig.axes) == 6
    plt.close(fig)
