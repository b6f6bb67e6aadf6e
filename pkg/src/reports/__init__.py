"""
Run reports: schema and file storage.
"""

from src.reports.schema import CheckResult, ProfileRow, RunReport
from src.reports.storage import ReportWriter, read_kernels, read_profiles, read_report

__all__ = ['CheckResult', 'ProfileRow', 'RunReport', 'ReportWriter',
           'read_kernels', 'read_profiles', 'read_report']
