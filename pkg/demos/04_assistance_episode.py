"""End-to-end assistance episodes with scripted operators.

Runs the blocked-lane scenario against three operator behaviors and prints
the episode reports. The simulation is deterministic, so re-running this
script reproduces the numbers exactly. Run from the repository root:

    python3 demos/04_assistance_episode.py
"""
import json
from pathlib import Path

from dcpp import load_scenario, run_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

for policy in ("accept_preferred", "accept_index_1", "reject_all"):
    scenario = load_scenario(SCENARIOS / "blocked_lane_two_detours.json")
    report = run_scenario(scenario, policy, seed=42)
    print(f"--- policy {policy} ---")
    print(f"result {report['result']} after {report['rounds']} round(s), "
          f"{report['distance_m']:.1f} m in {report['sim_time_s']:.1f} s sim "
          f"time, max cross-track {report['max_cross_track_m']:.3f} m")
    print("session events:",
          " -> ".join(e["event"] for e in report["event_log"]))

# The full report is plain JSON, ready for archiving or regression diffs.
scenario = load_scenario(SCENARIOS / "narrow_corridor.json")
report = run_scenario(scenario, "accept_preferred", seed=42)
print("\nsingle-corridor scenario report:")
print(json.dumps({k: v for k, v in report.items() if k != "event_log"},
                 indent=1))
