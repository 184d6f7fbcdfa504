from .derivation import CheckResult, check_derivation, derivation_to_json, dumps
from .pipeline import TranslateConfig, Translation, translate
from .simplify import simplify

__all__ = [
    "CheckResult", "check_derivation", "derivation_to_json", "dumps", "TranslateConfig",
    "Translation", "translate", "simplify",
]
