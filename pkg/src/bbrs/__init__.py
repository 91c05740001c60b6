"""Bits-back rejection sampling for singular channels, with its coding stack."""
from .ans import BitStream, FrequencyTable, make_table
from .channel import (
    ClosedFormProduct,
    DiscreteChannel,
    additive_bounded,
    bec,
    bec_product,
    make_channel,
    mutual_information,
    product,
    singular_g,
    typewriter,
)
from .coder import (
    BbrsTrial,
    RateReport,
    bbrs_decode,
    bbrs_encode,
    conservative_bound,
    expected_rate_analytic,
    measure_rate,
    theorem1_bound,
)
from .gamma import (
    ClosedFormLevels,
    GammaModel,
    ProductGammaModel,
    QuantizerSpec,
    build_gamma_model,
    gamma_entropy,
    quantize_log_ratio,
    verify_m_bound,
)
from .pfr import appendixb_bound, m_prime, pfr_decode, pfr_encode
from .randomness import SharedSeed

__version__ = "0.1.0"

__all__ = [
    "BitStream", "FrequencyTable", "make_table",
    "ClosedFormProduct", "DiscreteChannel", "additive_bounded", "bec", "bec_product", "make_channel",
    "mutual_information", "product", "singular_g", "typewriter",
    "BbrsTrial", "RateReport", "bbrs_decode", "bbrs_encode", "conservative_bound",
    "expected_rate_analytic", "measure_rate", "theorem1_bound",
    "ClosedFormLevels", "GammaModel", "ProductGammaModel", "QuantizerSpec", "build_gamma_model",
    "gamma_entropy", "quantize_log_ratio", "verify_m_bound",
    "appendixb_bound", "m_prime", "pfr_decode", "pfr_encode", "SharedSeed",
]
