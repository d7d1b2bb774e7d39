import sys
import os
sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.scenario.ensembles import KINDS, generate_ensemble
from src.scenario.scenario import save_scenario


def generate_all(dim: int = 4, atoms: int = 8, seed: int = 0, out_dir: str = 'scenarios'):
    """Write one scenario file per ensemble kind"""
    os.makedirs(out_dir, exist_ok=True)
    for kind in KINDS:
        path = os.path.join(out_dir, f"{kind}.json")
        save_scenario(generate_ensemble(kind, dim, atoms, seed), path)
        print(f"Scenario written to {path}")


if __name__ == "__main__":
    generate_all()
