"""
Presentation Layer: figures and reports
- ESD against the limiting density, CLT histograms, variance scaling
- Text run reports and moment tables
"""
from .visualizer import SpectrumVisualizer
from .report_generator import ReportGenerator

__all__ = ['SpectrumVisualizer', 'ReportGenerator']
