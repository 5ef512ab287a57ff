"""Command line front end: stats.csv files in, SVG/PNG figures out."""

from __future__ import annotations

import sys

import click

from . import __version__
from .figures import plot_chamfer_boxes, plot_likelihood
from .tables import read_stats


def _parse_labels(pairs) -> dict[str, str]:
    labels = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key or not value:
            raise ValueError(f"--label wants METHOD=NAME, got {pair!r}")
        labels[key] = value
    return labels


def _guarded(fn, *args, **kwargs):
    try:
        fn(*args, **kwargs)
    except (ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except Exception as exc:  # pragma: no cover - defensive
        click.echo(f"internal error: {exc!r}", err=True)
        sys.exit(1)


_stats_argument = click.argument("stats", nargs=-1, required=True,
                                 type=click.Path(exists=True, dir_okay=False))
_out_option = click.option("--out", required=True,
                           type=click.Path(dir_okay=False, writable=True),
                           help="Output figure path (.svg or .png).")
_label_option = click.option("--label", "label_pairs", multiple=True,
                             metavar="METHOD=NAME",
                             help="Rename a method in the legend; repeatable.")
_title_option = click.option("--title", default=None, help="Figure title.")


@click.group()
@click.version_option(__version__, prog_name="plotkit")
def main():
    """Render figures from clasp stats.csv artifacts."""


@main.command()
@_stats_argument
@_out_option
@_label_option
@_title_option
def boxes(stats, out, label_pairs, title):
    """Grouped per-step Chamfer box plot from STATS files."""
    def run():
        labels = _parse_labels(label_pairs)
        plot_chamfer_boxes(read_stats(stats), out, labels=labels, title=title)
        click.echo(f"wrote {out}")
    _guarded(run)


@main.command()
@_stats_argument
@_out_option
@_label_option
@_title_option
def likelihood(stats, out, label_pairs, title):
    """Kernel-likelihood line plot from STATS files."""
    def run():
        labels = _parse_labels(label_pairs)
        plot_likelihood(read_stats(stats), out, labels=labels, title=title)
        click.echo(f"wrote {out}")
    _guarded(run)


if __name__ == "__main__":
    main()
