import csv
import io
import logging
import os
from enum import Enum
from importlib import resources

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ..errors import DataParseError

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

LONG_HEADER = ("object_i", "object_j", "wins_i", "wins_j")
DIAGONAL_MARKERS = ("", "-", "0")
BUNDLED_JOURNALS = "journals.csv"
# largest count that float64 likelihood terms still hold exactly
MAX_COUNT = 2 ** 53


class CountFormat(str, Enum):
    MATRIX = "matrix_csv"
    LONG = "long_csv"


class PairedComparisonData:
    """
    Aggregated paired-comparison counts for n labelled objects.

    ``wins[i, j]`` is r_ij, the number of times object i was preferred over object j.
    Instances are immutable once built.
    """

    def __init__(self, labels, wins):
        """
        Validate and freeze the counts.

        Args:
            labels (Sequence[str]): Object names, in input order
            wins (array-like): n x n matrix of non-negative integer win counts;
                the diagonal is ignored

        Raises:
            DataParseError: If the labels or counts are invalid
        """
        labels = tuple(str(label) for label in labels)
        if len(labels) < 2:
            raise DataParseError("at least two objects are required")
        if len(set(labels)) != len(labels):
            raise DataParseError(f"duplicate object labels in {labels}")

        matrix = np.asarray(wins)
        if matrix.shape != (len(labels), len(labels)):
            raise DataParseError(f"expected a {len(labels)}x{len(labels)} win matrix, got shape {matrix.shape}")
        try:
            as_float = matrix.astype(float)
        except (TypeError, ValueError, OverflowError):
            raise DataParseError("win counts must be integers") from None
        if not np.all(np.isfinite(as_float)) or np.any(as_float != np.round(as_float)):
            raise DataParseError("win counts must be integers")
        if np.any(np.abs(as_float) > MAX_COUNT):
            row, column = np.argwhere(np.abs(as_float) > MAX_COUNT)[0]
            raise DataParseError(f"win count exceeds {MAX_COUNT}", row=int(row) + 1, column=int(column) + 1)
        matrix = matrix.astype(np.int64)
        np.fill_diagonal(matrix, 0)
        if np.any(matrix < 0):
            row, column = np.argwhere(matrix < 0)[0]
            raise DataParseError("negative win count", row=int(row) + 1, column=int(column) + 1)
        if not np.any(matrix):
            raise DataParseError("no comparisons: every pair has zero counts")

        matrix.setflags(write=False)
        self._labels = labels
        self._wins = matrix
        comparisons = matrix + matrix.T
        comparisons.setflags(write=False)
        self._comparisons = comparisons

    @property
    def labels(self):
        return self._labels

    @property
    def n_objects(self):
        return len(self._labels)

    @property
    def wins(self):
        """r_ij as a read-only integer matrix."""
        return self._wins

    @property
    def comparisons(self):
        """n_ij = r_ij + r_ji as a read-only integer matrix."""
        return self._comparisons

    def compared_pairs(self):
        """Unordered pairs (i, j), i < j, with at least one comparison."""
        n = self.n_objects
        return [(i, j) for i in range(n) for j in range(i + 1, n) if self._comparisons[i, j] > 0]

    def all_pairs(self):
        n = self.n_objects
        return [(i, j) for i in range(n) for j in range(i + 1, n)]

    def is_connected(self):
        """True when the graph with an edge for every compared pair is connected."""
        graph = csr_matrix((self._comparisons > 0).astype(np.int8))
        n_components, _ = connected_components(graph, directed=False)
        return n_components == 1

    def is_strongly_connected(self):
        """
        True when every object can be reached from every other along "beat" edges.

        Otherwise some group of objects never loses to the rest, and the likelihood
        keeps growing as that group moves away: no finite maximum exists.
        """
        graph = csr_matrix((self._wins > 0).astype(np.int8))
        n_components, _ = connected_components(graph, directed=True, connection="strong")
        return n_components == 1

    def observed_preference_matrix(self):
        """
        Observed preference proportions r_ij / n_ij.

        Returns:
            numpy.ndarray: n x n matrix; NaN on the diagonal and for pairs never compared
        """
        with np.errstate(invalid="ignore", divide="ignore"):
            proportions = self._wins / self._comparisons
        proportions = np.where(self._comparisons > 0, proportions, np.nan)
        np.fill_diagonal(proportions, np.nan)
        return proportions

    def total_wins(self):
        """r_i, the number of times each object was preferred over any other."""
        return self._wins.sum(axis=1)

    def permuted(self, order):
        """Relabel objects: the k-th object of the result is object order[k] of this data."""
        order = list(order)
        return PairedComparisonData([self._labels[k] for k in order], self._wins[np.ix_(order, order)])

    def transposed(self):
        """Swap every win for a loss."""
        return PairedComparisonData(self._labels, self._wins.T)

    def to_matrix_csv(self):
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow([""] + list(self._labels))
        for i, label in enumerate(self._labels):
            cells = ["-" if i == j else str(int(self._wins[i, j])) for j in range(self.n_objects)]
            writer.writerow([label] + cells)
        return buffer.getvalue()

    def to_long_csv(self):
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(LONG_HEADER)
        for i, j in self.compared_pairs():
            writer.writerow([self._labels[i], self._labels[j], int(self._wins[i, j]), int(self._wins[j, i])])
        return buffer.getvalue()

    def __eq__(self, other):
        if not isinstance(other, PairedComparisonData):
            return NotImplemented
        return self._labels == other._labels and np.array_equal(self._wins, other._wins)

    def __repr__(self):
        return f"PairedComparisonData(labels={self._labels}, comparisons={int(self._comparisons.sum() // 2)})"


def _parse_count(cell, row, column):
    text = cell.strip()
    try:
        value = int(text)
    except ValueError:
        try:
            number = float(text)
        except ValueError:
            raise DataParseError(f"count {text!r} is not a number", row=row, column=column) from None
        if not number.is_integer():
            raise DataParseError(f"count {text!r} is not an integer", row=row, column=column)
        value = int(number)
    if value < 0:
        raise DataParseError(f"negative count {value}", row=row, column=column)
    if value > MAX_COUNT:
        raise DataParseError(f"count {text} exceeds {MAX_COUNT}", row=row, column=column)
    return value


def _read_rows(text):
    reader = csv.reader(io.StringIO(text))
    return [(number, [cell.strip() for cell in row]) for number, row in enumerate(reader, start=1)
            if any(cell.strip() for cell in row)]


def _parse_matrix(text):
    rows = _read_rows(text)
    if len(rows) < 3:
        raise DataParseError("a count matrix needs a header and at least two object rows")
    _, header = rows[0]
    body = rows[1:]
    n = len(body)
    if len(header) == n + 1:
        labels = header[1:]
    elif len(header) == n:
        labels = header
    else:
        raise DataParseError(f"header names {len(header)} columns for {n} object rows", row=rows[0][0])

    wins = np.zeros((n, n), dtype=np.int64)
    for i, (number, cells) in enumerate(body):
        if len(cells) != n + 1:
            raise DataParseError(f"ragged matrix: expected {n + 1} cells, found {len(cells)}", row=number)
        if cells[0] != labels[i]:
            raise DataParseError(f"row label {cells[0]!r} does not match column label {labels[i]!r}",
                                 row=number, column=1)
        for j, cell in enumerate(cells[1:]):
            if i == j:
                if cell not in DIAGONAL_MARKERS:
                    raise DataParseError(f"diagonal cell must be '-' or empty, found {cell!r}",
                                         row=number, column=j + 2)
                continue
            wins[i, j] = _parse_count(cell, number, j + 2)
    return labels, wins


def _parse_long(text):
    rows = _read_rows(text)
    if not rows:
        raise DataParseError("empty input")
    number, header = rows[0]
    if tuple(cell.lower() for cell in header) != LONG_HEADER:
        raise DataParseError(f"long format header must be {','.join(LONG_HEADER)}", row=number)

    labels = []
    seen = {}
    records = []
    for number, cells in rows[1:]:
        if len(cells) != 4:
            raise DataParseError(f"expected 4 cells, found {len(cells)}", row=number)
        first, second = cells[0], cells[1]
        if first == second:
            raise DataParseError(f"object {first!r} compared with itself", row=number)
        key = frozenset((first, second))
        if key in seen:
            raise DataParseError(f"duplicate pair {first},{second} (first seen on row {seen[key]})", row=number)
        seen[key] = number
        for label in (first, second):
            if label not in labels:
                labels.append(label)
        records.append((first, second, _parse_count(cells[2], number, 3), _parse_count(cells[3], number, 4)))

    index = {label: k for k, label in enumerate(labels)}
    wins = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for first, second, wins_first, wins_second in records:
        wins[index[first], index[second]] = wins_first
        wins[index[second], index[first]] = wins_second
    return labels, wins


def _decode(content):
    try:
        return content.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        raise DataParseError(f"input is not valid UTF-8 (byte offset {e.start})") from None


def _read_path(path):
    try:
        with open(path, "rb") as handle:
            return _decode(handle.read())
    except FileNotFoundError:
        raise DataParseError(f"file not found: {os.fspath(path)}") from None
    except OSError as e:
        raise DataParseError(f"cannot read {os.fspath(path)}: {e.strerror}") from None


def _read_source(source):
    """
    Text of ``source``. A ``str`` without a line break is a file path: any valid
    count table spans several lines.
    """
    if isinstance(source, (bytes, bytearray)):
        return _decode(bytes(source))
    if isinstance(source, os.PathLike):
        return _read_path(source)
    if isinstance(source, str):
        if "\n" not in source and "\r" not in source:
            return _read_path(source)
        return source
    content = source.read()
    if isinstance(content, bytes):
        content = _decode(content)
    return content


def load_counts(source, format=CountFormat.MATRIX):
    """
    Load paired-comparison counts.

    Args:
        source: Path, raw bytes, CSV text or a readable (binary or text) stream;
            a single-line ``str`` is taken as a path
        format (CountFormat or str): "matrix_csv" or "long_csv"

    Returns:
        PairedComparisonData: Validated counts with labels in input order

    Raises:
        DataParseError: If the input is missing, not UTF-8 or malformed
    """
    count_format = CountFormat(format)
    try:
        text = _read_source(source)
        if count_format is CountFormat.MATRIX:
            labels, wins = _parse_matrix(text)
        else:
            labels, wins = _parse_long(text)
        data = PairedComparisonData(labels, wins)
    except DataParseError as e:
        logger.error(f"Error loading {count_format.value} counts: {str(e)}")
        raise
    logger.info(f"Loaded {data.n_objects} objects and {len(data.compared_pairs())} compared pairs")
    return data


def load_bundled_journals():
    """Citation counts among four statistics journals, 1987-1989."""
    text = resources.files(__package__).joinpath(BUNDLED_JOURNALS).read_text(encoding="utf-8")
    return load_counts(text, CountFormat.MATRIX)


def observed_preference_matrix(data):
    return data.observed_preference_matrix()


def total_wins(data):
    return data.total_wins()
