"""
Log-log convergence figures as standalone SVG

Data line with markers against dashed tau^2 and tau^4 guides anchored at
the coarsest step size. Output is deterministic for a given report.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib
matplotlib.use('Agg')
from matplotlib.figure import Figure

from db.models import ConvergenceReport

logger = logging.getLogger(__name__)

SVG_RC = {
    'svg.hashsalt': 'splitlab',
    'svg.fonttype': 'none',
}


@dataclass(frozen=True)
class FigureStyle:
    column: str = 'kl'
    title: str = ''
    ylabel: str = 'relative entropy'
    label: str = 'RSLMC'
    guide_orders: tuple = (2, 4)
    width: float = 6.0
    height: float = 4.5


def emit_figure(report: ConvergenceReport, path: str, style: FigureStyle = FigureStyle()) -> Path:
    """Write the report's convergence curve to an SVG file"""
    points = sorted(
        (tau, value) for tau, value in zip(report.taus, report.column(style.column))
        if value > 0 and not math.isnan(value)
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    with matplotlib.rc_context(SVG_RC):
        fig = Figure(figsize=(style.width, style.height))
        ax = fig.add_subplot(1, 1, 1)
        ax.set_xscale('log')
        ax.set_yscale('log')

        if points:
            taus = [p[0] for p in points]
            values = [p[1] for p in points]
            ax.plot(taus, values, marker='o', linestyle='-' if len(points) > 1 else 'none',
                    color='black', label=style.label)

            if len(points) > 1:
                tau0, value0 = points[-1]
                for order, color in zip(style.guide_orders, ('tab:blue', 'tab:red')):
                    guide = [value0 * (t / tau0) ** order for t in taus]
                    ax.plot(taus, guide, linestyle='--', color=color, label=f'$\\tau^{order}$')

        ax.set_xlabel(r'step size $\tau$')
        ax.set_ylabel(style.ylabel)
        if style.title:
            ax.set_title(style.title)
        ax.grid(True, which='both', alpha=0.3)
        if points:
            ax.legend(loc='best')

        fig.savefig(path, format='svg', metadata={'Date': None})

    logger.info(f"Wrote figure {path}")
    return path
