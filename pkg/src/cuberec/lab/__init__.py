from .battery import BATTERY_IDS, BatteryFunction, UnknownBatteryError, battery
from .sweep import CSV_HEADER, SweepConfig, run_sweep
from .verify import PreconditionViolation, verify_mean_value_fact, verify_suite
