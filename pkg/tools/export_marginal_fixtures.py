#!/usr/bin/env python3
"""Export number-state marginal values for the dashboard's client-side overlay.

The dashboard re-implements the oscillator wavefunction recurrence in
TypeScript to draw the model curve over the live histogram; its test suite
checks that implementation against this file. Regenerate with:

    python tools/export_marginal_fixtures.py frontend/tests/fixtures/marginals.json
"""

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from fockscope.quadrature import marginal_density, wavefunction_sq
from fockscope.fock import FockDiagonal

N_MAX = 4
REF_DIAG = [0.4138, 0.5758, 0.0104, 0.0, 0.0]


def main(out_path: str) -> None:
    q = np.linspace(-4.0, 4.0, 161)
    rows = wavefunction_sq(q, N_MAX)
    state = FockDiagonal(np.array(REF_DIAG))
    doc = {
        "version": "fockscope-marginals/1",
        "n_max": N_MAX,
        "q": [float(v) for v in q],
        "marginals": {
            str(n): [float(v) for v in rows[:, n]] for n in range(N_MAX + 1)
        },
        "reference_diagonals": REF_DIAG,
        "reference_mixture": [float(v) for v in marginal_density(state, q)],
    }
    path = Path(out_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "frontend/tests/fixtures/marginals.json")
