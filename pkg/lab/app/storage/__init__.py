"""Storage package - versioned data files and JSON summaries"""
from .Sink import Sink, open_sink, write_summary, read_data_file

__all__ = ['Sink', 'open_sink', 'write_summary', 'read_data_file']
