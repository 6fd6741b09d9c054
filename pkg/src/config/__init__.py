"""
Configuration management
- Environment-based settings and logging configuration
- JSON experiment configs: loading, CLI overrides, schema validation
"""
from .config_manager import ConfigManager
from .config_validator import ConfigValidator, EXPERIMENTS, SCHEMA
from .config_loader import ConfigLoader

__all__ = ['ConfigManager', 'ConfigValidator', 'ConfigLoader', 'EXPERIMENTS', 'SCHEMA']
