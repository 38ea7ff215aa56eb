"""Scenario runner reproducing the simulation studies at desk scale."""
from .config import Mode, Scenario, load_scenario, parse_text, sigma2_to_snr, snr_to_sigma2
from .energy import EnergyModel, energy_efficiency
from .runner import Curve, RunResult, read_curve, run_scenario, scenario_checks, snr_gap_db
from .studies import CdfResult, TimingRow, cdf_study, oracle_study, timing_report
