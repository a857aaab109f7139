import csv
import logging
import os

from reportlab.lib.pagesizes import letter
from reportlab.lib.styles import getSampleStyleSheet
from reportlab.platypus import Paragraph, Preformatted, SimpleDocTemplate, Spacer

from ..errors import ConfigurationError
from ..inference.fit_analysis import run_label

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

DECIMALS = 5


class ReportGenerator:
    """
    Writes fit reports, nu-sweep plot data and goodness-of-fit summaries to an output directory.
    """

    def __init__(self, output_dir, decimals=DECIMALS):
        """
        Initialize the ReportGenerator and make sure the output directory is usable.

        Args:
            output_dir (str): Directory receiving every output file
            decimals (int): Decimal places in human-readable tables

        Raises:
            ConfigurationError: If the directory cannot be created or written
        """
        logger.info(f"Initializing ReportGenerator with output directory: {output_dir}")
        self.output_dir = output_dir
        self.decimals = decimals
        try:
            os.makedirs(output_dir, exist_ok=True)
        except OSError as e:
            logger.error(f"Error creating output directory: {str(e)}")
            raise ConfigurationError(f"cannot create output directory {output_dir}: {e}") from e
        if not os.access(output_dir, os.W_OK):
            raise ConfigurationError(f"output directory {output_dir} is not writable")

    def _path(self, filename):
        return os.path.join(self.output_dir, filename)

    def _number(self, value):
        if value is None:
            return "-"
        return f"{value:.{self.decimals}f}"

    def format_matrix(self, title, labels, matrix, integer=False):
        """
        Lay out an n x n matrix with labelled rows and columns; undefined cells show "-".
        """
        width = max(max(len(label) for label in labels), self.decimals + 4)
        lines = [title, " " * width + "  " + "  ".join(label.rjust(width) for label in labels)]
        for label, row in zip(labels, matrix):
            cells = []
            for value in row:
                if value is None:
                    cells.append("-".rjust(width))
                elif integer:
                    cells.append(str(int(round(value))).rjust(width))
                else:
                    cells.append(self._number(value).rjust(width))
            lines.append(label.ljust(width) + "  " + "  ".join(cells))
        return "\n".join(lines)

    def format_estimates(self, report):
        labels = report.labels
        width = max(max(len(label) for label in labels), self.decimals + 4)
        lines = ["Posterior estimates of worth parameters",
                 " " * 9 + "  ".join(label.rjust(width) for label in labels)]
        for estimator, estimate in report.estimates.items():
            lines.append(estimator.value.ljust(9) + "  ".join(self._number(v).rjust(width) for v in estimate.theta))
        return "\n".join(lines)

    def fit_sections(self, report):
        """
        Human-readable sections of a fit report, in the order of the published tables.

        Returns:
            list: (heading, body) pairs
        """
        labels = report.labels
        wins = tuple(tuple(float(v) if i != j else None for j, v in enumerate(row))
                     for i, row in enumerate(report.wins))
        sections = [
            ("Run", f"model {report.spec.model.name}, {report.spec.prior.value} prior, "
                    f"{report.spec.grid_points_per_dim} points per dimension, "
                    f"half-width {report.spec.grid_halfwidth:g} sd"),
            ("Observed data", self.format_matrix("Wins (row preferred over column)", labels, wins, integer=True)
             + "\n\n" + self.format_matrix("Observed preference proportions", labels,
                                           report.observed_preference_matrix)),
            ("Estimates", self.format_estimates(report)),
        ]
        for estimator, assessment in report.assessments.items():
            sections.append((f"Preference probabilities ({estimator.value})",
                             self.format_matrix(f"Plug-in preference probabilities at the posterior {estimator.value}",
                                                labels, assessment.preference_matrix)))
        sections.append(("Predictive probabilities",
                         self.format_matrix("Posterior predictive probabilities", labels, report.predictive_matrix)))
        for estimator, assessment in report.assessments.items():
            p_value = "n/a" if assessment.p_value is None else self._number(assessment.p_value)
            body = (self.format_matrix(f"Expected frequencies at the posterior {estimator.value}", labels,
                                       assessment.expected_frequencies, integer=True)
                    + f"\nchi-square = {self._number(assessment.chi_square)} ({p_value}), df = {assessment.df}")
            sections.append((f"Goodness of fit ({estimator.value})", body))
        ranking = " > ".join(report.ranking) + ("  [tied]" if report.tied else "")
        sections.append(("Ranking", f"{report.primary_estimator.value}: {ranking}"))
        if report.notes:
            sections.append(("Notes", "\n".join(f"- {note}" for note in report.notes)))
        return sections

    def render_fit(self, report):
        return "\n\n".join(f"== {heading} ==\n{body}" for heading, body in self.fit_sections(report)) + "\n"

    def save_fit(self, report, formats=("json", "table")):
        """
        Write one fit report in every requested format.

        Returns:
            list: Paths written
        """
        stem = run_label(report.spec)
        written = []
        if "json" in formats:
            path = self._path(f"{stem}.json")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(report.model_dump_json(indent=2))
            written.append(path)
        if "table" in formats:
            path = self._path(f"{stem}.txt")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(self.render_fit(report))
            written.append(path)
        if "csv" in formats:
            written.append(self.save_estimates_csv(report, self._path(f"{stem}-estimates.csv")))
            if report.marginals:
                written.append(self.save_marginals_csv(report, self._path(f"{stem}-marginals.csv")))
        if "pdf" in formats:
            path = self._path(f"{stem}.pdf")
            if self.save_report_as_pdf(self.fit_sections(report), path,
                                       title=f"Paired-comparison fit: {report.spec.model.name}, "
                                             f"{report.spec.prior.value} prior"):
                written.append(path)
        logger.info(f"Saved {len(written)} files for {stem}")
        return written

    def save_estimates_csv(self, report, path):
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["estimator"] + list(report.labels))
            for estimator, estimate in report.estimates.items():
                writer.writerow([estimator.value] + [repr(v) for v in estimate.theta])
        return path

    def save_marginals_csv(self, report, path):
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["label", "theta", "density"])
            for label, curve in report.marginals.items():
                for theta, density in zip(curve.theta, curve.density):
                    writer.writerow([label, repr(theta), repr(density)])
        return path

    def save_sweep(self, table, n_objects, prefix="sweep"):
        """
        Write one plot-data CSV per (prior, estimator) with columns nu, theta_1 … theta_n.

        Args:
            table (dict): Output of ``sweep_rows``
            n_objects (int): Number of worth columns

        Returns:
            list: Paths written
        """
        header = ["nu"] + [f"theta_{k}" for k in range(1, n_objects + 1)]
        written = []
        for (prior, estimator), rows in table.items():
            path = self._path(f"{prefix}-{prior}-{estimator}.csv")
            with open(path, "w", encoding="utf-8", newline="") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    writer.writerow([f"{row[0]:g}"] + [repr(v) for v in row[1:]])
            written.append(path)
        logger.info(f"Saved {len(written)} sweep files")
        return written

    def render_gof(self, rows):
        header = f"{'model':<14}{'nu':>6}  {'prior':<9}{'estimator':<10}{'chi-square':>12}{'df':>4}{'p-value':>10}  best"
        lines = [header]
        for row in rows:
            nu = "-" if row.nu is None else f"{row.nu:g}"
            lines.append(f"{row.model:<14}{nu:>6}  {row.prior:<9}{row.estimator.value:<10}"
                         f"{self._number(row.chi_square):>12}{row.df:>4}{self._number(row.p_value):>10}"
                         f"  {'*' if row.best_fit else ''}")
        return "\n".join(lines) + "\n"

    def save_gof(self, rows, formats=("json", "table")):
        written = []
        if "csv" in formats or "table" in formats:
            path = self._path("gof-summary.csv")
            with open(path, "w", encoding="utf-8", newline="") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(["model", "nu", "prior", "estimator", "chi_square", "df", "p_value", "best_fit"])
                for row in rows:
                    writer.writerow([row.model, "" if row.nu is None else f"{row.nu:g}", row.prior,
                                     row.estimator.value, repr(row.chi_square), row.df,
                                     "" if row.p_value is None else repr(row.p_value), int(row.best_fit)])
            written.append(path)
        if "table" in formats:
            path = self._path("gof-summary.txt")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(self.render_gof(rows))
            written.append(path)
        if "json" in formats:
            path = self._path("gof-summary.json")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write("[\n" + ",\n".join(row.model_dump_json(indent=2) for row in rows) + "\n]\n")
            written.append(path)
        if "pdf" in formats:
            path = self._path("gof-summary.pdf")
            if self.save_report_as_pdf([("Goodness of fit", self.render_gof(rows))], path,
                                       title="Goodness-of-fit summary"):
                written.append(path)
        return written

    def save_report_as_pdf(self, sections, filename, title="Paired-comparison report"):
        """
        Save report sections as a PDF file.

        Args:
            sections (list): (heading, preformatted body) pairs
            filename (str): Path of the PDF file
            title (str): Document title

        Returns:
            bool: True if successful, False otherwise
        """
        try:
            doc = SimpleDocTemplate(filename, pagesize=letter)
            styles = getSampleStyleSheet()
            elements = [Paragraph(f"<b>{title}</b>", styles['Title']), Spacer(1, 12)]

            for heading, body in sections:
                elements.append(Paragraph(heading, styles['Heading2']))
                elements.append(Preformatted(body, styles['Code']))
                elements.append(Spacer(1, 6))

            doc.build(elements)
            logger.info(f"Report saved as {filename}")
            return True
        except Exception as e:
            logger.error(f"Error saving report as PDF: {str(e)}")
            return False
