"""Convergence study reporting - CSV tables, gnuplot scripts and console summaries."""

from pathlib import Path
from typing import Dict, Optional

import numpy as np
import pandas as pd

from .analysis import ConvergenceTable
from .reference_tables import reference_error, reference_rate

FLOAT_FORMAT = '%.9g'


class StudyReporter:
    """Write study outputs to one directory."""

    def __init__(self, output_dir: str = "reports/study"):
        """
        Initialize reporter.

        Args:
            output_dir: Directory to save reports
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def generate_reports(self, table: ConvergenceTable, name: Optional[str] = None) -> pd.DataFrame:
        """
        Write table.csv, diagnostics.csv and table.gp, then print the summary.

        Args:
            table: Study result
            name: Preset name, used to look up published reference values

        Returns:
            The table in CSV schema
        """
        frame = table.to_frame()
        table_file = self.output_dir / "table.csv"
        frame.to_csv(table_file, index=False, float_format=FLOAT_FORMAT)
        print(f"Saved convergence table to {table_file}")

        diagnostics_file = self.output_dir / "diagnostics.csv"
        table.diagnostics_frame().to_csv(diagnostics_file, index=False, float_format=FLOAT_FORMAT)
        print(f"Saved diagnostics to {diagnostics_file}")

        script_file = self.output_dir / "table.gp"
        script_file.write_text(self.gnuplot_script(frame))
        print(f"Saved gnuplot script to {script_file}")

        self._print_summary(table, frame, name)
        return frame

    def gnuplot_script(self, frame: pd.DataFrame) -> str:
        """Log-log error plot per lambda with reference slopes 1 and 2."""
        lines = [
            "# Convergence plot: gnuplot table.gp",
            "set terminal pngcairo size 900,650",
            "set output 'convergence.png'",
            "set logscale xy",
            "set xlabel 'h'",
            "set ylabel 'error'",
            "set key left top",
            "set grid",
        ]
        plots = []
        for i, (lam, group) in enumerate(frame.groupby('lambda', sort=False)):
            ok = group.dropna(subset=['errL2'])
            if ok.empty:
                continue
            lines.append(f"$data{i} << EOD")
            for _, row in ok.iterrows():
                err_h1 = row['errH1'] if np.isfinite(row['errH1']) else float('nan')
                lines.append(f"{row['h']:.9g} {row['errL2']:.9g} {err_h1:.9g}")
            lines.append("EOD")
            plots.append(f"$data{i} using 1:2 with linespoints title 'L2, lambda={lam:g}'")
            plots.append(f"$data{i} using 1:3 with linespoints title 'H1, lambda={lam:g}'")

        if plots:
            h_ref = frame['h'].dropna()
            h0 = float(h_ref.max()) if not h_ref.empty else 1.0
            e1 = float(frame['errH1'].max()) if frame['errH1'].notna().any() else 1.0
            e2 = float(frame['errL2'].max()) if frame['errL2'].notna().any() else 1.0
            plots.append(f"{e1:.6g}*(x/{h0:.6g}) dashtype 2 title 'slope 1'")
            plots.append(f"{e2:.6g}*(x/{h0:.6g})**2 dashtype 3 title 'slope 2'")
            lines.append("plot " + ", \\\n     ".join(plots))
        return "\n".join(lines) + "\n"

    def _print_summary(self, table: ConvergenceTable, frame: pd.DataFrame, name: Optional[str]):
        """Print formatted summary to console."""
        rates: Dict[float, Dict] = table.rates()

        print(f"\n{'='*72}")
        print(f"CONVERGENCE SUMMARY{f' ({name})' if name else ''}")
        print(f"{'='*72}")
        print(f"{'lambda':>10} {'n':>6} {'h':>11} {'ndof':>8} {'errL2':>12} {'errH1':>12} {'vs ref':>8}")
        print(f"-" * 72)
        for _, row in frame.iterrows():
            ref = reference_error(name, row['lambda'], int(row['n'])) if name else None
            deviation = f"{(row['errL2'] - ref) / ref:+.1%}" if ref and np.isfinite(row['errL2']) else ""
            print(f"{row['lambda']:>10.0e} {int(row['n']):>6} {row['h']:>11.4e} {int(row['ndof']):>8} "
                  f"{row['errL2']:>12.4e} {row['errH1']:>12.4e} {deviation:>8}")
        print(f"-" * 72)
        print("Fitted rates:")
        for lam, rate in rates.items():
            l2 = 'n/a' if rate['rateL2'] is None else f"{rate['rateL2']:.2f}"
            h1 = 'n/a' if rate['rateH1'] is None else f"{rate['rateH1']:.2f}"
            ref = reference_rate(name, lam) if name else None
            ref_text = f" (reference {ref:.2f})" if ref is not None else ""
            print(f"  lambda={lam:<8g} L2: {l2}{ref_text}  H1: {h1}")
        if len(table.lambdas()) > 1:
            print(f"Lambda spread of errL2: {table.lambda_spread():.3%}")
        if table.failed:
            print(f"Failed rows: {len(table.failed)}")
            for row in table.failed:
                print(f"  n={row['n']} lambda={row['lambda']:g}: {row['status']}")
        print(f"{'='*72}\n")
