"""Campaign orchestration: synthetic data, attack campaigns, retraining, reports."""

from .campaign import (
    CampaignConfig,
    CampaignInputs,
    CampaignReport,
    CampaignRow,
    TargetSpec,
    prepare_inputs,
    run_attack_campaign,
)
from .report import (
    campaign_csv_text,
    config_hash,
    emit_report,
    feature_svg,
    read_campaign_csv,
    write_manifest,
)
from ..hyperopt import GaConfig
from .retrain import RetrainResult, adversarial_retrain, augment
from .synth import SyntheticSpec, generate_synthetic_flows

__all__ = [
    "CampaignConfig", "CampaignInputs", "CampaignReport", "CampaignRow", "TargetSpec",
    "prepare_inputs", "run_attack_campaign", "campaign_csv_text", "config_hash", "emit_report",
    "feature_svg", "read_campaign_csv", "write_manifest", "GaConfig", "RetrainResult", "adversarial_retrain",
    "augment", "SyntheticSpec", "generate_synthetic_flows",
]
