"""Numerical tolerances shared by every module."""

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    orth: float = 1e-10      # frame orthonormality
    lagr: float = 1e-9       # isotropy of Lagrangian frames
    gap: float = 1e-8        # projector gap for span equality
    rank: float = 1e-8       # relative singular-value cutoff
    sym: float = 1e-10       # symmetry of input matrices
    inv: float = 1e-8        # relative invertibility threshold (scaled by endpoint spectrum)
    nd: float = 1e-6         # nondegeneracy of crossing forms
    loc: float = 1e-10       # localisation of singular parameters
    path: float = 0.05       # max gap distance between consecutive path samples
    rank_band: float = 1e3   # required spectral gap factor around the rank cutoff

    def with_overrides(self, **kw):
        names = {f.name for f in fields(self)}
        bad = set(kw) - names
        if bad:
            raise KeyError(f"unknown tolerance(s): {sorted(bad)}")
        return replace(self, **{k: float(v) for k, v in kw.items()})

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT = Tolerances()


def resolve(tol):
    return DEFAULT if tol is None else tol
