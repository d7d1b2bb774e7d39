import sys
import os
sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.scenario.commands import CommandOptions, run_command
from src.scenario.scenario import load_scenario


def export_decomposition(scenario_path: str, field_name: str = 'A'):
    """Export the spectral decomposition and density of states of one field to CSV"""
    scenario = load_scenario(scenario_path)
    stem = os.path.splitext(scenario_path)[0]

    run_command('decompose', scenario, CommandOptions(fields=[field_name], out=f"{stem}_decomposition.csv"))
    print(f"Data exported to {stem}_decomposition.csv")

    run_command('dos', scenario, CommandOptions(fields=[field_name], out=f"{stem}_dos.csv"))
    print(f"Data exported to {stem}_dos.csv")


if __name__ == "__main__":
    if len(sys.argv) < 2:
        print("usage: export_decomposition.py SCENARIO.json [FIELD]")
        sys.exit(1)
    export_decomposition(*sys.argv[1:3])
