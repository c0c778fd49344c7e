import pandas as pd
from typing import List, Optional
from openpyxl.styles import Font, PatternFill

from app.services.flow.metrics import MetricsReport, metrics_frame, summary_frame
from app.services.solvers.heuristic import TRACE_COLUMNS, TraceRow, trace_frame
from app.utils.logs import logger
from app.utils.rational import format_rational


def generate_metrics_workbook(
    report: MetricsReport,
    trace: Optional[List[TraceRow]],
    output_path: str,
) -> str:
    """
    Génère un classeur Excel à partir d'un rapport de métriques.

    Args:
        report: métriques du flot
        trace: trace de l'heuristique, ou None (feuille vide)
        output_path: chemin du fichier .xlsx

    Returns:
        Le chemin du fichier sauvegardé
    """
    logger.info("Génération du classeur Excel des métriques")
    try:
        with pd.ExcelWriter(output_path, engine='openpyxl') as writer:
            # Synthèse : une ligne par indicateur
            summary = summary_frame(report).iloc[0]
            summary_df = pd.DataFrame({
                'Indicateur': [
                    'Facteur moyen (ρ)',
                    'Centile 99 (ρ)',
                    'Part sans regret',
                    'Coût social',
                    'Volume total',
                ],
                'Valeur': [
                    summary['mean_rho'],
                    summary['p99_rho'],
                    summary['share_zero_regret'],
                    summary['social_cost'],
                    format_rational(report.total_volume),
                ],
            })
            summary_df.to_excel(writer, sheet_name='Synthèse', index=False)

            paths_df = metrics_frame(report).rename(columns={
                'commodity': 'Commodité',
                'path_id': 'Stratégie',
                'volume': 'Volume',
                'cost': 'Coût',
                'best_alt_cost': 'Meilleure alternative',
                'regret': 'Regret',
                'approx_factor': 'Facteur ρ',
            })
            paths_df.to_excel(writer, sheet_name='Chemins', index=False)

            trace_df = trace_frame(trace) if trace else pd.DataFrame(columns=TRACE_COLUMNS)
            trace_df.to_excel(writer, sheet_name='Trace', index=False)

            summary_sheet = writer.sheets['Synthèse']
            summary_sheet.column_dimensions['A'].width = 25
            summary_sheet.column_dimensions['B'].width = 30

            paths_sheet = writer.sheets['Chemins']
            col_widths = {
                'A': 20,  # Commodité
                'B': 50,  # Stratégie
                'C': 15,
                'D': 15,
                'E': 22,
                'F': 15,
                'G': 15,
            }
            for col, width in col_widths.items():
                paths_sheet.column_dimensions[col].width = width

            trace_sheet = writer.sheets['Trace']
            for col in 'ABCDEFG':
                trace_sheet.column_dimensions[col].width = 18

            # Indicateurs de synthèse en gras sur fond gris clair
            bold_font = Font(bold=True)
            gray_fill = PatternFill(start_color="F0F0F0", end_color="F0F0F0", fill_type="solid")
            for row in range(2, len(summary_df) + 2):
                cell = summary_sheet.cell(row=row, column=1)
                cell.font = bold_font
                cell.fill = gray_fill

        logger.info(f"Fichier Excel sauvegardé à : {output_path}")
        return output_path
    except Exception as e:
        logger.error(f"Erreur lors de la génération du classeur Excel : {e}", exc_info=True)
        raise
