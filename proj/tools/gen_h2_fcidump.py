"""Write FCIDUMP files for H2/6-31G in the Loewdin-orthogonalized AO basis.

Requires pyscf. The files under data/h2/ were produced with:

    python tools/gen_h2_fcidump.py data/h2 0.5 0.75 1.0 1.5 2.0 2.5 3.0
"""
import sys
from pathlib import Path

import numpy as np
from pyscf import ao2mo, gto, lo, scf
from pyscf.tools import fcidump


def write(outdir: Path, r_angstrom: float) -> Path:
    mol = gto.M(atom=f"H 0 0 0; H 0 0 {r_angstrom}", basis="6-31g", unit="Angstrom")
    c = lo.orth_ao(mol, "lowdin")
    h1 = c.T @ scf.hf.get_hcore(mol) @ c
    eri = ao2mo.restore(1, ao2mo.kernel(mol, c), c.shape[1])
    path = outdir / f"h2_r{r_angstrom:.2f}.fcidump"
    fcidump.from_integrals(str(path), h1, eri, c.shape[1], mol.nelectron,
                           nuc=mol.energy_nuc(), ms=0, tol=1e-14)
    return path


if __name__ == "__main__":
    out = Path(sys.argv[1])
    out.mkdir(parents=True, exist_ok=True)
    for r in sys.argv[2:]:
        print(write(out, float(r)))
