import csv
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from AdvShift.DataModels.ErrorProfile import ErrorProfile, ShiftCurve
from AdvShift.DataModels.LabelDistribution import LabelDistribution
from AdvShift.DataModels.Reports import DiagnosticsReport, KLRecursionReport, ProjectionBenchReport
from AdvShift.DataModels.TrainConfig import TrainHistory
from Constants import (
    BENCH_HEADER,
    CURVE_HEADER,
    DIAGNOSTICS_HEADER,
    PROFILE_HEADER,
    STATIONARITY_HEADER,
    WITNESS_FILE,
    WITNESS_HEADER,
)
from Exceptions.ConfigExceptions import InputFileDoesNotExist, ParseError
from Exceptions.DomainExceptions import DomainError, ShapeError
from Exceptions.LoaderExceptions import LoaderException


def history_header(num_classes: int) -> List[str]:
    columns = ["epoch", "mean_loss", "kl_pi_pemp"]
    for prefix in ("loss", "error", "pi", "p_emp"):
        columns.extend(f"{prefix}_{c}" for c in range(num_classes))
    return columns


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


class Loader:
    """
    Writes run artifacts as CSV files with the documented headers and reads back the
    ones other commands consume.

    Methods:
        write_rows(path, header, rows) -> None: Generic CSV table writer.
        write_history(history, path) -> None
        write_profile(profile, path) -> None / read_profile(path) -> ErrorProfile
        write_curve(curve, curve_path) -> None / read_curve(path) -> ShiftCurve
        write_bench(report, path) -> None
        write_witness(witness, path) -> None / read_witness(path) -> LabelDistribution
        write_diagnostics(report, path, check) -> None / write_stationarity(trace, path) -> None
    """

    def write_rows(self, path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
        """
        :param path: Output file (created or overwritten)
        :param header: Column names
        :param rows: One sequence of cells per row; floats are written with repr precision
        """
        try:
            with open(path, "w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(header)
                for row in rows:
                    writer.writerow([_cell(v) for v in row])
        except OSError:
            raise LoaderException(path)

    def read_rows(self, path, header: Sequence[str]) -> List[List[str]]:
        """Reads a table written by write_rows, checking the header."""
        if not Path(path).is_file():
            raise InputFileDoesNotExist(str(path))
        with open(path, "r", newline="") as f:
            reader = csv.reader(f)
            found = next(reader, None)
            if found != list(header):
                raise ParseError(str(path), 1, f"header must be {','.join(header)}")
            rows = []
            for row in reader:
                if not row:
                    continue
                if len(row) != len(header):
                    raise ParseError(str(path), reader.line_num, f"expected {len(header)} fields, got {len(row)}")
                rows.append(row)
        return rows

    def write_history(self, history: TrainHistory, path) -> None:
        """One row per epoch: summary columns, then per-class losses, errors, pi and p_emp."""
        num_classes = history.epochs[0].pi.num_classes if history.epochs else 0
        rows = [
            [record.epoch, record.mean_loss, record.kl_pi_pemp]
            + list(record.class_losses)
            + list(record.class_errors)
            + list(record.pi.probs)
            + list(record.p_emp.probs)
            for record in history.epochs
        ]
        self.write_rows(path, history_header(num_classes), rows)

    def write_profile(self, profile: ErrorProfile, path) -> None:
        rows = [
            [c, profile.values[c], int(profile.counts[c]), profile.reference.probs[c]]
            for c in range(profile.num_classes)
        ]
        self.write_rows(path, PROFILE_HEADER, rows)

    def read_profile(self, path) -> ErrorProfile:
        rows = self.read_rows(path, PROFILE_HEADER)
        values, counts, reference = [], [], []
        for line, row in enumerate(rows, start=2):
            try:
                class_id = int(row[0])
                values.append(float(row[1]))
                counts.append(int(row[2]))
                reference.append(float(row[3]))
            except ValueError as e:
                raise ParseError(str(path), line, str(e))
            if class_id != line - 2:
                raise ParseError(str(path), line, f"expected class_id {line - 2}, got {class_id}")
        try:
            return ErrorProfile(values, LabelDistribution(reference), counts)
        except (DomainError, ShapeError) as e:
            raise ParseError(str(path), 1, str(e))

    def write_curve(self, curve: ShiftCurve, curve_path) -> None:
        """
        Writes curve_path plus one witness file per threshold next to it; the curve rows
        reference witness files by name.
        """
        out_dir = Path(curve_path).parent
        rows = []
        for index, point in enumerate(curve.points):
            witness_name = WITNESS_FILE.format(index=index)
            self.write_witness(point.witness, out_dir / witness_name)
            rows.append([point.tau, point.value, witness_name])
        self.write_rows(curve_path, CURVE_HEADER, rows)

    def write_witness(self, witness: LabelDistribution, path) -> None:
        self.write_rows(path, WITNESS_HEADER, [[c, p] for c, p in enumerate(witness.probs)])

    def read_witness(self, path) -> LabelDistribution:
        """
        Reads a witness file written by write_witness.

        :param path: CSV with header class_id,prob and class ids 0..L-1 in order
        :return: The witness distribution
        """
        probs = []
        for line, row in enumerate(self.read_rows(path, WITNESS_HEADER), start=2):
            try:
                class_id = int(row[0])
                probs.append(float(row[1]))
            except ValueError as e:
                raise ParseError(str(path), line, str(e))
            if class_id != line - 2:
                raise ParseError(str(path), line, f"expected class_id {line - 2}, got {class_id}")
        try:
            return LabelDistribution(probs)
        except DomainError as e:
            raise ParseError(str(path), 1, str(e))

    def read_curve(self, path) -> ShiftCurve:
        out_dir = Path(path).parent
        curve = ShiftCurve()
        for line, row in enumerate(self.read_rows(path, CURVE_HEADER), start=2):
            try:
                tau, value = float(row[0]), float(row[1])
            except ValueError as e:
                raise ParseError(str(path), line, str(e))
            curve.append(tau, value, self.read_witness(out_dir / row[2]))
        return curve

    def write_bench(self, report: ProjectionBenchReport, path) -> None:
        rows = []
        if report.trials > 0:
            rows.append(
                [report.num_classes, report.trials, report.median_projection_ms, report.median_mirror_ms, report.ratio]
            )
        self.write_rows(path, BENCH_HEADER, rows)

    def write_diagnostics(
        self, report: DiagnosticsReport, path, check: Optional[KLRecursionReport] = None
    ) -> None:
        """
        key,value table: the report's rows, then the three-point check outcome when given.
        """
        rows = report.as_rows()
        if check is not None:
            rows += [("three_point_violations", check.violations), ("three_point_worst_gap", check.worst_gap)]
        self.write_rows(path, DIAGNOSTICS_HEADER, rows)

    def write_stationarity(self, trace, path) -> None:
        self.write_rows(path, STATIONARITY_HEADER, [[epoch, value] for epoch, value in trace])

