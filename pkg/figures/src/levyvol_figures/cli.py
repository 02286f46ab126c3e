"""Standalone plotting entry point.

    levyvol-figures boxplot --input boxplot.csv --out fig1.png
    levyvol-figures histogram --input ranks.csv --out fig2.png
    levyvol-figures lambda-curve --input lambda_curve.csv --out fig4.png
    levyvol-figures surface --input laplace_surface.csv --out fig5.png
"""
import argparse

from .render import KINDS, FigureSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="levyvol-figures",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--input", required=True, help="tidy CSV to plot")
    parser.add_argument("--out", required=True, help="output PNG path")
    parser.add_argument("--xlabel")
    parser.add_argument("--ylabel")
    parser.add_argument("--title")
    args = parser.parse_args(argv)
    path = render(FigureSpec(kind=args.kind, input_csv=args.input,
                             output=args.out, xlabel=args.xlabel,
                             ylabel=args.ylabel, title=args.title))
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
