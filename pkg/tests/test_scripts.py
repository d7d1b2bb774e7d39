from scripts.export_decomposition import export_decomposition
from scripts.generate_ensemble import generate_all
from src.scenario.ensembles import KINDS
from src.scenario.scenario import load_scenario
from src.utils.helpers import read_csv


def test_generate_then_export(tmp_path):
    out_dir = tmp_path / "scenarios"
    generate_all(dim=3, atoms=2, seed=4, out_dir=str(out_dir))
    for kind in KINDS:
        assert load_scenario(str(out_dir / f"{kind}.json")).seed == 4

    scenario_path = str(out_dir / "hermitian-gaussian.json")
    export_decomposition(scenario_path, "A")
    with open(out_dir / "hermitian-gaussian_decomposition.csv", encoding="utf-8") as f:
        rows = read_csv(f)
    assert {r["quantity"] for r in rows} == {"E_xx:e1", "E_xx:e2", "E_xx:e3"}
    with open(out_dir / "hermitian-gaussian_dos.csv", encoding="utf-8") as f:
        dos = [r for r in read_csv(f) if r["atom_id"] == "*"]
    assert abs(sum(float(r["value_re"]) for r in dos) - 1.0) < 1e-12
