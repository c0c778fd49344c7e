import sys
from pathlib import Path

# Ajouter le répertoire parent au path
sys.path.insert(0, str(Path(__file__).parent.parent))

from app.services.instances.examples import catalogue_names, gen_example
from app.services.instances.io import save_instance
from app.services.instances.sat import gen_sat, parse_dimacs
from app.utils.logs import logger

# Formules 3-SAT du catalogue : une satisfiable, une non satisfiable
FORMULAS = {
    "sat-x1": "1",
    "sat-x1-not-x1": "1; -1",
}


def generate_catalogue(output_dir: str = "catalogue") -> list:
    """Écrit chaque exemple et chaque gadget 3-SAT dans `output_dir`."""
    target = Path(output_dir)
    target.mkdir(parents=True, exist_ok=True)
    written = []
    for name in catalogue_names():
        written.append(save_instance(gen_example(name), str(target / f"{name}.json")))
    for name, text in FORMULAS.items():
        formula = parse_dimacs(text)
        for mode in ("dtc", "fixed"):
            written.append(save_instance(gen_sat(formula, mode), str(target / f"{name}-{mode}.json")))
    logger.info(f"✅ Catalogue écrit dans {target} ({len(written)} instances)")
    return written


if __name__ == "__main__":
    generate_catalogue(sys.argv[1] if len(sys.argv) > 1 else "catalogue")
