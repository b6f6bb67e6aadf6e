"""
File storage for run reports, decay profiles and kernel dumps.
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import List

import numpy as np

from src.reports.schema import ProfileRow, RunReport
from src.utils import ensure_dir, save_file

logger = logging.getLogger(__name__)

KERNEL_MAGIC = b'HDKR'
PROFILE_COLUMNS = ['name', 'K_prime', 'block_norm']


class ReportWriter:
    """
    Writes report.json, profiles.csv and kernels.bin into an output directory.

    Attributes:
        out_dir: Directory receiving the files
    """

    def __init__(self, out_dir: str):
        """
        Initialize the writer.

        Args:
            out_dir: Output directory (created if missing)
        """
        self.out_dir = Path(out_dir)
        ensure_dir(str(self.out_dir))

    @property
    def report_path(self) -> Path:
        return self.out_dir / 'report.json'

    @property
    def profiles_path(self) -> Path:
        return self.out_dir / 'profiles.csv'

    @property
    def kernels_path(self) -> Path:
        return self.out_dir / 'kernels.bin'

    def write_report(self, report: RunReport) -> Path:
        """
        Write report.json with stable key order and shortest round-trip floats.

        Returns:
            Path of the written file
        """
        text = json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False)
        save_file(str(self.report_path), text + "\n")
        return self.report_path

    def write_profiles(self, rows: List[ProfileRow]) -> Path:
        """
        Write profiles.csv with columns name, K_prime, block_norm.

        Returns:
            Path of the written file
        """
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=PROFILE_COLUMNS, lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({'name': row.name, 'K_prime': row.K_prime, 'block_norm': repr(float(row.block_norm))})
        save_file(str(self.profiles_path), buffer.getvalue())
        return self.profiles_path

    def write_kernels(self, kernels: np.ndarray) -> Path:
        """
        Dump a complex array as kernels.bin.

        Layout: magic 'HDKR', little-endian uint32 rank, uint32 shape entries,
        then the complex64 payload in row-major order.

        Returns:
            Path of the written file
        """
        array = np.ascontiguousarray(kernels, dtype='<c8')
        header = np.array([array.ndim, *array.shape], dtype='<u4')
        with open(self.kernels_path, 'wb') as f:
            f.write(KERNEL_MAGIC)
            f.write(header.tobytes())
            f.write(array.tobytes(order='C'))
        logger.info(f"Saved kernels {array.shape} to {self.kernels_path}")
        return self.kernels_path


def read_report(path: str) -> RunReport:
    with open(path, 'r', encoding='utf-8') as f:
        return RunReport.from_dict(json.load(f))


def read_profiles(path: str) -> List[ProfileRow]:
    with open(path, 'r', encoding='utf-8', newline='') as f:
        return [ProfileRow.from_dict(row) for row in csv.DictReader(f)]


def read_kernels(path: str) -> np.ndarray:
    """
    Load a kernels.bin dump.

    Raises:
        ValueError: If the file does not start with the kernel magic
    """
    data = Path(path).read_bytes()
    if data[:4] != KERNEL_MAGIC:
        raise ValueError(f"{path} is not a kernel dump")
    rank = int(np.frombuffer(data, dtype='<u4', count=1, offset=4)[0])
    shape = tuple(int(v) for v in np.frombuffer(data, dtype='<u4', count=rank, offset=8))
    payload = np.frombuffer(data, dtype='<c8', offset=8 + 4 * rank)
    return payload.reshape(shape)

